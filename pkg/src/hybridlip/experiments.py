"""Frozen experiment sweeps read from the bundled manifest."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .data import load_iris
from .errors import ValidationError
from .hybrid import default_model
from .train import MetricsLog, TrainConfig, train

EXPERIMENTS = ("figure1", "figure2", "figure3")


def load_manifest() -> dict:
    text = (resources.files("hybridlip") / "data" / "experiments.json").read_text()
    return json.loads(text)


def run_configs(experiment: str, seed: int = 0, epochs: int | None = None, manifest: dict | None = None) -> dict:
    """``{output name: [TrainConfig, ...]}`` for one experiment."""
    manifest = load_manifest() if manifest is None else manifest
    if experiment not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    common = manifest["common"]
    out = {}
    for name, runs in manifest[experiment]["outputs"].items():
        out[name] = [
            TrainConfig(
                method=r["method"],
                epochs=common["epochs"] if epochs is None else epochs,
                lr=common["lr"],
                batch=common["batch"],
                lam=r.get("lambda", 0.0),
                eps=common["eps"],
                pgd_steps=common["pgd_steps"],
                norm=r["norm"],
                seed=seed,
            )
            for r in runs
        ]
    return out


def run_experiment(experiment: str, seed: int = 0, epochs: int | None = None, out_dir=None,
                   progress=None, outputs=None) -> dict:
    """Run every configuration of ``experiment`` in manifest order.

    Returns ``{output name: MetricsLog}``; with ``out_dir``, also writes
    ``<experiment>.csv`` (original labels), ``<experiment>_single_class.csv``
    and an SVG per log. ``outputs`` restricts the run to some output names.
    """
    manifest = load_manifest()
    common = manifest["common"]
    data = load_iris(common["split_seed"])
    shape = common["model"]
    logs = {}
    for name, cfgs in run_configs(experiment, seed, epochs, manifest).items():
        if outputs is not None and name not in outputs:
            continue
        d = data.single_class(0) if name == "single_class" else data
        log = MetricsLog()
        for cfg in cfgs:
            model = default_model(seed, qubits=shape["qubits"], layers=shape["layers"], hidden=shape["hidden"],
                                  features=d.n_features, classes=d.n_classes)
            log.extend(train(model, d, cfg))
            if progress is not None:
                progress(name, cfg)
        logs[name] = log
    if out_dir is not None:
        from .plotting import emit_plot

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, log in logs.items():
            stem = experiment if name == "original" else f"{experiment}_{name}"
            log.to_csv(out / f"{stem}.csv")
            emit_plot(log, manifest[experiment]["plot"], out / f"{stem}.svg")
    return logs


def final_rows(log: MetricsLog) -> list:
    """Last logged row of each run in a concatenated log."""
    rows = log.rows
    return [r for i, r in enumerate(rows) if i + 1 == len(rows) or rows[i + 1]["epoch"] == 0]
