"""Command-line front end.

Commands: fit, predict-cate, blp, simulate, version.  Every option can also
be supplied through a flat `key = value` config file (--config); explicit
flags win over config values, which win over built-in defaults.  Exit codes:
0 success, 1 user or configuration error, 2 internal numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .blp import REAL_THRESHOLDS, SIM_THRESHOLDS, blp_summary, write_coefficients_csv, write_scores_csv
from .data import ColumnKind, load_dataset
from .errors import NumericalError, SharedRbfError
from .pipeline import fit_model, posterior_mean_surfaces, predict_cate_summary
from .sampler import SamplerConfig, load_chain, save_chain
from .simharness import ALL_METHODS, SimConfig, run_replications


class CliError(Exception):
    """User/configuration error reported as exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise CliError(message)


SAMPLER_OPTIONS = {
    "n_iter": (int, 6000, "total MCMC iterations"),
    "n_burn": (int, 3000, "burn-in iterations discarded from inference"),
    "n_fixed_gamma": (int, 1000, "iterations with the pinned inclusion entries held at 1"),
    "tune_interval": (int, 200, "MALA step-size adaptation period (burn-in only)"),
    "acc_low": (float, 0.45, "lower target acceptance rate for the center moves"),
    "acc_high": (float, 0.70, "upper target acceptance rate for the center moves"),
    "epsilon0": (float, 0.01, "initial MALA step size"),
    "recalib_interval": (int, 100, "coefficient-prior recalibration period (burn-in only)"),
    "seed": (int, 0, "master seed; all random streams derive from it"),
}


def _add_options(parser, spec):
    for dest, (typ, default, help_text) in spec.items():
        parser.add_argument(f"--{dest.replace('_', '-')}", dest=dest, type=typ,
                            default=default, help=help_text)


def _command_parser(command: str) -> "_Parser":
    parser = _Parser(
        prog=f"sharedrbf {command}",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--config", type=str, default=None,
                        help="flat key = value file supplying option defaults")
    if command == "fit":
        parser.add_argument("--data", type=str, default=None, help="training CSV path")
        parser.add_argument("--column-kinds", dest="column_kinds", type=str, default=None,
                            help="comma list of name:kind entries; kinds are continuous, "
                                 "ordinal, nominal:C (unlisted columns are continuous)")
        parser.add_argument("--outdir", type=str, default=None, help="output directory")
        _add_options(parser, SAMPLER_OPTIONS)
    elif command == "predict-cate":
        parser.add_argument("--chain", type=str, default=None, help="fitted chain file")
        parser.add_argument("--newx", type=str, default=None,
                            help="CSV of covariates matching the training schema")
        parser.add_argument("--pair", type=str, default=None,
                            help="treatment pair g,g' (effect of g over g')")
        parser.add_argument("--out", type=str, default="cate_predictions.csv",
                            help="output CSV path")
    elif command == "blp":
        parser.add_argument("--chain", type=str, default=None, help="fitted chain file")
        parser.add_argument("--data", type=str, default=None,
                            help="CSV of the subjects to project on (training data)")
        parser.add_argument("--column-kinds", dest="column_kinds", type=str, default=None,
                            help="column kinds, as for fit")
        parser.add_argument("--pair", type=str, default=None, help="treatment pair g,g'")
        parser.add_argument("--thresholds", type=str, default="real",
                            help="'sim', 'real', or a comma list of thresholds")
        parser.add_argument("--outdir", type=str, default=None, help="output directory")
    elif command == "simulate":
        parser.add_argument("--setting", type=str, default="setting1",
                            help="setting1 or from_covariates")
        parser.add_argument("--n", type=int, default=180, help="total sample size (setting1)")
        parser.add_argument("--replications", type=int, default=10, help="replication count")
        parser.add_argument("--split-fraction", dest="split_fraction", type=float,
                            default=2.0 / 3.0, help="training share of each replication")
        parser.add_argument("--covariate-path", dest="covariate_path", type=str, default=None,
                            help="covariate CSV for from_covariates mode")
        parser.add_argument("--active-columns", dest="active_columns", type=str,
                            default="0,1,2,3,4",
                            help="five 0-based covariate indices driving the outcomes")
        parser.add_argument("--methods", type=str, default=",".join(ALL_METHODS),
                            help="comma list of methods to run")
        parser.add_argument("--noise-sd", dest="noise_sd", type=float, default=1.0,
                            help="outcome noise standard deviation")
        parser.add_argument("--thresholds", type=str, default=None,
                            help="optional threshold grid; enables per-replication scores")
        parser.add_argument("--outdir", type=str, default=None, help="output directory")
        _add_options(parser, SAMPLER_OPTIONS)
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser: "_Parser", argv: list[str]) -> argparse.Namespace:
    # first pass only to locate --config; second pass with config-as-defaults
    probe, _ = parser.parse_known_args(argv)
    if probe.config:
        raw = _read_config_file(probe.config)
        known = {a.dest: a for a in parser._actions}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(unknown)}")
        converted = {}
        for key, value in raw.items():
            action = known[key]
            converted[key] = action.type(value) if action.type else value
        parser.set_defaults(**converted)
    return parser.parse_args(argv)


def _require(args, *names):
    for name in names:
        if getattr(args, name) in (None, ""):
            raise CliError(f"--{name.replace('_', '-')} is required")


def _sampler_config(args) -> SamplerConfig:
    try:
        return SamplerConfig(**{k: getattr(args, k) for k in SAMPLER_OPTIONS})
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        g, gp = (int(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"bad pair {text!r}; expected g,g'") from None
    return g, gp


def _parse_thresholds(text: str):
    if text == "sim":
        return SIM_THRESHOLDS
    if text == "real":
        return REAL_THRESHOLDS
    try:
        grid = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"bad threshold grid {text!r}") from None
    return grid


def _build_schema(path: str, kinds_text: str | None) -> dict[str, ColumnKind]:
    with open(path, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    covariates = [h for h in header if h not in ("treatment", "outcome")]
    schema = {name: ColumnKind("continuous") for name in covariates}
    if kinds_text:
        for entry in kinds_text.split(","):
            name, _, kind = entry.strip().partition(":")
            if name not in schema:
                raise CliError(f"column {name!r} in --column-kinds not found in {path}")
            schema[name] = ColumnKind.parse(kind)
    return schema


def _load_newx(path: str, transform):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = list(reader)
    expected = list(transform.names)
    if sorted(header) != sorted(expected):
        raise CliError(
            f"{path}: covariate columns {header} do not match the training schema {expected}"
        )
    order = [header.index(name) for name in expected]
    try:
        X = np.array([[float(row[j]) for j in order] for row in rows])
    except (ValueError, IndexError):
        raise CliError(f"{path}: non-numeric or ragged covariate rows") from None
    return X


# -- commands -------------------------------------------------------------------


def cmd_fit(args) -> int:
    _require(args, "data", "outdir")
    schema = _build_schema(args.data, args.column_kinds)
    dataset = load_dataset(args.data, schema)
    config = _sampler_config(args)
    chain = fit_model(dataset, config)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_chain(chain, outdir / "chain.jsonl")
    (outdir / "init_plan.json").write_text(
        json.dumps(chain.init_plan, sort_keys=True) + "\n", encoding="utf-8"
    )
    diagnostics = {
        "acceptance": chain.acceptance,
        "adaptation_log": list(chain.adaptation_log),
        "epsilon": np.asarray(chain.epsilon).tolist(),
        "hyper": chain.hyper.to_dict(),
        "fixed_sets": [list(s) for s in chain.fixed_sets],
        "n_samples": len(chain),
    }
    (outdir / "diagnostics.json").write_text(
        json.dumps(diagnostics, sort_keys=True) + "\n", encoding="utf-8"
    )
    surfaces = posterior_mean_surfaces(chain, dataset.X)
    with open(outdir / "fitted.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        G = surfaces.shape[1]
        writer.writerow(["row", "treatment", "outcome"] + [f"f{g}" for g in range(1, G + 1)])
        for i in range(surfaces.shape[0]):
            writer.writerow(
                [i + 1, int(dataset.z[i]), repr(float(dataset.y[i]))]
                + [repr(float(v)) for v in surfaces[i]]
            )
    return 0


def cmd_predict_cate(args) -> int:
    _require(args, "chain", "newx", "pair")
    chain = load_chain(args.chain)
    if chain.covariate_transform is None:
        raise CliError("chain file carries no covariate transform; cannot validate newx")
    pair = _parse_pair(args.pair)
    G = chain.samples[0].n_groups
    for g in pair:
        if not 1 <= g <= G:
            raise CliError(f"treatment index {g} outside 1..{G}")
    X = _load_newx(args.newx, chain.covariate_transform)
    summary = predict_cate_summary(chain, X, *pair)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "mean", "q2.5", "q97.5"])
        for i in range(X.shape[0]):
            writer.writerow(
                [i + 1, repr(float(summary["mean"][i])), repr(float(summary["q2.5"][i])),
                 repr(float(summary["q97.5"][i]))]
            )
    return 0


def cmd_blp(args) -> int:
    _require(args, "chain", "data", "pair", "outdir")
    chain = load_chain(args.chain)
    schema = _build_schema(args.data, args.column_kinds)
    dataset = load_dataset(args.data, schema)
    pair = _parse_pair(args.pair)
    thresholds = _parse_thresholds(args.thresholds)
    summary = blp_summary(chain, dataset, *pair, thresholds=thresholds)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_coefficients_csv(summary, outdir / "blp_coefficients.csv")
    write_scores_csv(summary, outdir / "blp_scores.csv")
    return 0


def cmd_simulate(args) -> int:
    _require(args, "outdir")
    if args.setting == "from_covariates":
        _require(args, "covariate_path")
    try:
        active = tuple(int(v) for v in args.active_columns.split(","))
    except ValueError:
        raise CliError(f"bad --active-columns {args.active_columns!r}") from None
    thresholds = _parse_thresholds(args.thresholds) if args.thresholds else None
    try:
        config = SimConfig(
            setting=args.setting,
            n=args.n,
            replications=args.replications,
            split_fraction=args.split_fraction,
            chain=_sampler_config(args),
            covariate_path=args.covariate_path,
            active_columns=active,
            seed=args.seed,
            methods=tuple(args.methods.split(",")),
            blp_thresholds=thresholds,
            noise_sd=args.noise_sd,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    report = run_replications(config)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report.write_report_csv(outdir / "sim_report.csv")
    report.write_summary_csv(outdir / "sim_summary.csv")
    if thresholds is not None:
        report.write_scores_csv(outdir / "sim_scores.csv")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "predict-cate": cmd_predict_cate,
    "blp": cmd_blp,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if not argv or argv[0] in ("-h", "--help"):
            print(f"usage: sharedrbf {{{','.join([*COMMANDS, 'version'])}}} [options]")
            print("run 'sharedrbf <command> --help' for per-command options")
            return 0 if argv else 1
        command, rest = argv[0], argv[1:]
        if command == "version":
            print(__version__)
            return 0
        if command not in COMMANDS:
            raise CliError(f"unknown command {command!r}")
        parser = _command_parser(command)
        args = _apply_config(parser, rest)
        return COMMANDS[command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SharedRbfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
