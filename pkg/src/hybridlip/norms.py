"""Norm tags and the vector / induced matrix norms they name."""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import numerics as nx
from .errors import ValidationError


class NormTag(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    TRACE = "trace"
    TV = "total_variation"

    @classmethod
    def parse(cls, value) -> "NormTag":
        if isinstance(value, cls):
            return value
        key = str(value).lower().removeprefix("euclidean_")
        key = {"inf": "linf", "l_inf": "linf", "tv": "total_variation"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown norm {value!r}") from None

    def __str__(self) -> str:
        return self.value


EUCLIDEAN = (NormTag.L1, NormTag.L2, NormTag.LINF)


def euclidean(norm) -> NormTag:
    tag = NormTag.parse(norm)
    if tag not in EUCLIDEAN:
        raise ValidationError(f"{tag} is not a vector norm on R^n")
    return tag


def vector_norm(v, norm, axis=-1):
    ord_ = {NormTag.L1: 1, NormTag.L2: 2, NormTag.LINF: np.inf}[euclidean(norm)]
    return np.linalg.norm(v, ord=ord_, axis=axis)


def induced_norm(w, norm) -> float:
    """Operator norm of ``w`` with the same vector norm on both sides."""
    tag = euclidean(norm)
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return 0.0
    if tag is NormTag.L2:
        return nx.spectral_norm(w)
    if tag is NormTag.L1:
        return float(np.abs(w).sum(axis=0).max())
    return float(np.abs(w).sum(axis=1).max())


def conversion_factor(src, dst, dim: int) -> float:
    """Smallest ``c`` with ``||v||_dst <= c ||v||_src`` on ``R^dim``."""
    p = {NormTag.L1: 1.0, NormTag.L2: 2.0, NormTag.LINF: np.inf}
    a, b = p[euclidean(src)], p[euclidean(dst)]
    if b >= a:
        return 1.0
    inv = lambda q: 0.0 if q == np.inf else 1.0 / q
    return float(dim ** (inv(b) - inv(a)))
