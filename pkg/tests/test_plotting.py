import xml.etree.ElementTree as ET

import pytest

from hybridlip.errors import EmptyInput, ValidationError
from hybridlip.plotting import emit_plot, render_svg

SVG = "{http://www.w3.org/2000/svg}"


def row(epoch, method="naive", norm="l2", lam=0.0, acc=0.5, lip=1.0):
    return {"epoch": epoch, "method": method, "norm": norm, "loss": 1.0, "train_acc": acc, "test_acc": acc,
            "lip_classical": lip, "lip_quantum": 1.0, "lip_hybrid": lip, "lambda": lam, "seed": 0}


def series_ids(svg):
    root = ET.fromstring(svg)
    return [e.get("id") for e in root.iter() if (e.get("id") or "").startswith("series-")]


def test_empty_log():
    with pytest.raises(EmptyInput):
        render_svg([], "figure1")


def test_unknown_kind():
    with pytest.raises(ValidationError):
        render_svg([row(0)], "figure7")


def test_single_row_one_marker():
    svg = render_svg([row(0)], "epochs")
    assert len(series_ids(svg)) == 1
    assert "<image" not in svg and "xlink:href=\"http" not in svg


def test_figure1_three_norms():
    rows = [row(e, norm=n, lip=e + 1) for n in ("l1", "l2", "linf") for e in range(4)]
    svg = render_svg(rows, "figure1")
    assert series_ids(svg) == ["series-l1", "series-l2", "series-linf"]
    for label in ("l1", "l2", "linf"):
        assert f">{label}<" in svg


def test_figure3_methods_times_two():
    rows = [row(e, method=m, lip=2.0 - 0.1 * e) for m in ("naive", "pgd", "lipreg") for e in range(5)]
    assert len(series_ids(render_svg(rows, "figure3"))) == 6


def test_figure2_final_points():
    rows = [row(e, method="lipreg", lam=lam, lip=10 / (1 + lam) + e) for lam in (0.0, 0.01, 0.1, 1.0, 10.0)
            for e in range(3)]
    assert series_ids(render_svg(rows, "figure2")) == ["series-lip_hybrid (l2)"]


def test_svg_deterministic(tmp_path):
    rows = [row(e) for e in range(3)]
    a = emit_plot(rows, "figure1", tmp_path / "a.svg")
    b = emit_plot(rows, "figure1")
    assert a == b == (tmp_path / "a.svg").read_text()
