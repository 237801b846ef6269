"""Command-line interface.

Exit codes: 0 on success, 1 on usage or validation errors, 2 on numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import classical as cl
from .errors import NumericalError, ValidationError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _emit(obj):
    print(json.dumps(obj))


def _dense_from_json(doc) -> cl.DenseNet:
    if isinstance(doc, dict) and "blocks" in doc:
        if any(b.get("type", "dense") != "dense" for b in doc["blocks"]):
            raise ValidationError("netlip takes a purely classical model; use hyblip for quantum blocks")
        doc = {"layers": doc["blocks"]}
    return cl.DenseNet.from_json(doc)


def cmd_qlip(args):
    from . import qlip
    from .quantum import circuit_from_json

    c = circuit_from_json(_read_json(args.circuit))
    if args.method == "exact":
        rep = qlip.lipschitz_exact(c)
    elif args.method == "subgradient":
        rep = qlip.lipschitz_subgradient(c, iters=args.iters, seed=args.seed)
    else:
        rep = qlip.lipschitz_sampling(c, pairs=args.pairs, seed=args.seed)
    _emit(rep.to_json())


def cmd_netlip(args):
    net = _dense_from_json(_read_json(args.model))
    if args.method == "sdp":
        if args.norm != "l2":
            raise ValidationError("the SDP certificate is for the l2 norm")
        rep = cl.lip_sdp(net)
    elif args.method == "product":
        rep = cl.lip_product(net, args.norm)
    else:
        rep = cl.lip_empirical(net, samples=args.samples, seed=args.seed, norm=args.norm)
    _emit(rep.to_json())


def cmd_hyblip(args):
    from .hybrid import HybridModel, hybrid_lip_bound

    m = HybridModel.from_json(_read_json(args.model))
    rep = hybrid_lip_bound(m, args.norm, samples=args.samples, seed=args.seed)
    _emit(rep.to_json())


def cmd_train(args):
    from .data import load_dataset
    from .hybrid import HybridModel, default_model
    from .train import TrainConfig, train

    data = load_dataset(args.data, split_seed=args.split_seed)
    if args.model:
        model = HybridModel.from_json(_read_json(args.model))
    else:
        model = default_model(args.seed, features=data.n_features, classes=data.n_classes)
    cfg = TrainConfig(method=args.method, epochs=args.epochs, lr=args.lr, batch=args.batch, lam=args.lam,
                      eps=args.eps, pgd_steps=args.pgd_steps, norm=args.norm, seed=args.seed)
    log = train(model, data, cfg)
    text = log.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.save_model:
        with open(args.save_model, "w") as f:
            json.dump(log.model.to_json(), f)


def cmd_experiment(args):
    from .experiments import run_experiment

    def progress(name, cfg):
        print(f"{args.id} {name}: {cfg.method} norm={cfg.norm} lambda={cfg.lam:g} done", file=sys.stderr)

    run_experiment(args.id, seed=args.seed, epochs=args.epochs, out_dir=args.out, progress=progress)


def cmd_plot(args):
    from .plotting import emit_plot
    from .train import MetricsLog

    try:
        log = MetricsLog.from_csv(args.metrics)
    except OSError as exc:
        raise ValidationError(f"cannot read {args.metrics}: {exc.strerror}") from exc
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"{args.metrics} is not a metrics CSV: {exc}") from exc
    emit_plot(log, args.kind, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hybridlip", description="Certified Lipschitz bounds for classical, quantum and hybrid models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("qlip", help="Lipschitz constant of a measured quantum circuit")
    q.add_argument("--circuit", required=True, help="circuit JSON")
    q.add_argument("--method", choices=("exact", "subgradient", "sampling"), default="exact")
    q.add_argument("--pairs", type=int, default=10_000, help="state pairs for sampling")
    q.add_argument("--iters", type=int, default=150, help="subgradient iterations")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_qlip)

    n = sub.add_parser("netlip", help="Lipschitz bound of a dense network")
    n.add_argument("--model", required=True, help="network JSON")
    n.add_argument("--method", choices=("sdp", "product", "empirical"), default="sdp")
    n.add_argument("--norm", choices=("l1", "l2", "linf"), default="l2")
    n.add_argument("--samples", type=int, default=1000)
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(func=cmd_netlip)

    h = sub.add_parser("hyblip", help="certified bound of a hybrid model plus a sampled lower bound")
    h.add_argument("--model", required=True, help="hybrid model JSON")
    h.add_argument("--norm", choices=("l1", "l2", "linf"), default="l2")
    h.add_argument("--samples", type=int, default=1000)
    h.add_argument("--seed", type=int, default=0)
    h.set_defaults(func=cmd_hyblip)

    t = sub.add_parser("train", help="train a hybrid model and write the metrics CSV")
    t.add_argument("--model", help="hybrid model JSON (default: built-in Iris architecture)")
    t.add_argument("--data", help="CSV with numeric features and a label column (default: bundled Iris)")
    t.add_argument("--method", choices=("naive", "pgd", "lipreg"), default="naive")
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--batch", type=int, default=16)
    t.add_argument("--lambda", dest="lam", type=float, default=0.0)
    t.add_argument("--eps", type=float, default=0.1)
    t.add_argument("--pgd-steps", type=int, default=7)
    t.add_argument("--norm", choices=("l1", "l2", "linf"), default="l2")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--split-seed", type=int, default=0)
    t.add_argument("--out", help="metrics CSV path (default: stdout)")
    t.add_argument("--save-model", help="write the trained model JSON here")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("experiment", help="run a frozen sweep and write CSV + SVG")
    e.add_argument("id", choices=("figure1", "figure2", "figure3"))
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--epochs", type=int, help="override the manifest epoch count")
    e.set_defaults(func=cmd_experiment)

    pl = sub.add_parser("plot", help="SVG plot of a metrics CSV")
    pl.add_argument("--metrics", required=True)
    pl.add_argument("--kind", choices=("figure1", "figure2", "figure3", "epochs"), default="epochs")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
