"""Command-line entry point: ``armarecon <subcommand> ...``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure. Diagnostics go to stderr prefixed with ``armarecon:``.
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, dump_config, load_config
from .errors import ArmaReconError, ConfigError, DataError, NumericalError
from .experiment import (MetricsReport, binary_metrics, load_dataset, predict,
                         run_experiment, stratified_folds, train_model)
from .features import EmptyRoiWarning, extract_cohort_features, synth_cohort, write_feature_csv
from .graph import build_adjacency, write_edge_list
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .spectral import ArmaFilterSpec, frequency_response

PROG = "armarecon"
EXIT_CODES = {ConfigError: 1, DataError: 2, NumericalError: 3}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _config_keys_help() -> str:
    defaults = ExperimentConfig()
    return "config keys (settable with --set key=value):\n" + "\n".join(
        f"  {k} (default {v})" for k, v in defaults.to_items())


def _add_config_args(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key; repeatable")


def _overrides(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = v
    return out


def _config(args) -> ExperimentConfig:
    return load_config(args.config, _overrides(args.set))


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    cfg_help = dict(epilog=_config_keys_help(), formatter_class=argparse.RawDescriptionHelpFormatter)

    p = sub.add_parser("synth-data", help="write a synthetic feature CSV")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=int, default=9)
    p.add_argument("--q", type=int, default=20)
    p.add_argument("--shift", type=float, default=0.15)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)

    p = sub.add_parser("extract-features", help="histogram FA volumes listed in a cohort manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--roi-ids", required=True, help="comma-separated atlas labels")
    p.add_argument("--q", type=int, default=20)
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-graph", help="threshold feature similarity into an edge list", **cfg_help)
    _add_config_args(p)
    p.add_argument("--out", required=True, help="edge-list file")

    p = sub.add_parser("train", help="train one fold and save a checkpoint", **cfg_help)
    _add_config_args(p)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("evaluate", help="score a checkpoint on its fold's test nodes", **cfg_help)
    _add_config_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("cross-validate", help="run every fold and write report.csv", **cfg_help)
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("filter-response", help="tabulate a rational filter's frequency response")
    p.add_argument("--p", required=True, help="numerator coefficients p_0..p_{K-1}")
    p.add_argument("--q", default="", help="denominator coefficients q_1..q_K")
    p.add_argument("--lambdas", default=None, help="comma-separated eigenvalues")
    p.add_argument("--grid", default="0:2:21", help="start:stop:count (used without --lambdas)")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser


def _cmd_synth(args):
    fm = synth_cohort(args.n, args.p, args.q, args.shift, args.noise, args.seed)
    write_feature_csv(fm, args.out)


def _cmd_extract(args):
    rois = [int(t) for t in args.roi_ids.split(",") if t.strip()]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyRoiWarning)
        fm = extract_cohort_features(args.manifest, rois, q=args.q)
    for note in fm.warnings:
        print(f"{PROG}: warning: {note}", file=sys.stderr)
    write_feature_csv(fm, args.out)


def _cmd_build_graph(args):
    config = _config(args)
    graph = build_adjacency(load_dataset(config), config.alpha, config.similarity)
    write_edge_list(graph, args.out)


def _fold_setup(config, fold):
    fm = load_dataset(config)
    if not 0 <= fold < config.folds:
        raise ConfigError(f"fold {fold} outside [0, {config.folds})")
    graph = build_adjacency(fm, config.alpha, config.similarity)
    plan = stratified_folds(fm.labels, config.train_frac, config.folds, config.seed)
    return fm, graph, plan


def _cmd_train(args):
    config = _config(args)
    fm, graph, plan = _fold_setup(config, args.fold)
    history = []
    params, state = train_model(config, fm.data, graph, fm.labels, plan.train_masks[args.fold],
                                fold=args.fold, history=history)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.ckpt", params, state)
    (out / "config.txt").write_text(dump_config(config))
    (out / "train_log.csv").write_text(
        "epoch,loss\n" + "".join(f"{i},{v:.17g}\n" for i, v in enumerate(history)))


def _cmd_evaluate(args):
    config = _config(args)
    fm, graph, plan = _fold_setup(config, args.fold)
    params, _ = load_checkpoint(args.checkpoint)
    metrics = binary_metrics(predict(params, graph, fm.data), fm.labels, plan.test_masks[args.fold])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(MetricsReport([metrics]).to_csv())


def _cmd_cross_validate(args):
    run_experiment(_config(args), out_dir=args.out)


def _cmd_filter_response(args):
    spec = ArmaFilterSpec.from_lists(_floats(args.p), _floats(args.q))
    if args.lambdas is not None:
        lams = np.array(_floats(args.lambdas))
    else:
        try:
            start, stop, count = args.grid.split(":")
            lams = np.linspace(float(start), float(stop), int(count))
        except ValueError:
            raise ConfigError(f"--grid expects start:stop:count, got {args.grid!r}") from None
    lines = ["lambda,response"]
    lines += [f"{lam!r},{frequency_response(spec, lam)!r}" for lam in lams.tolist()]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


COMMANDS = {
    "synth-data": _cmd_synth,
    "extract-features": _cmd_extract,
    "build-graph": _cmd_build_graph,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "cross-validate": _cmd_cross_validate,
    "filter-response": _cmd_filter_response,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except ArmaReconError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        for cls, code in EXIT_CODES.items():
            if isinstance(exc, cls):
                return code
        return 3
    except OSError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
