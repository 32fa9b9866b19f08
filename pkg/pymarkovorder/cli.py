"""Command-line interface, ``pymarkovorder <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence, TextIO

import ujson as json

from pymarkovorder._utils import load_toml, parse_grid, parse_size, read_sample, write_sample
from pymarkovorder.analysis import BOUND_CODES, BOUND_NAMES, bound_grid
from pymarkovorder.core import PenaltySpec
from pymarkovorder.criteria import Criterion, estimate_order
from pymarkovorder.dbar import (
    BlockDistribution,
    block_distribution,
    dbar_exact,
    dbar_upper_greedy,
)
from pymarkovorder.exceptions import (
    CapacityError,
    ConvergenceError,
    InputRangeError,
    InputTypeError,
    InputValueError,
    MissingConstantError,
    OrderOverflowError,
)
from pymarkovorder.experiments import ExperimentConfig, run_experiment
from pymarkovorder.print_versions import show_versions
from pymarkovorder.processes import ProcessModel, load_model, markov_zoo

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser"]

ERRORS = (
    InputTypeError,
    InputRangeError,
    InputValueError,
    OrderOverflowError,
    CapacityError,
    ConvergenceError,
    MissingConstantError,
    OSError,
)


def _model(path: str | None, zoo: str | None) -> ProcessModel:
    if zoo is not None:
        models = markov_zoo()
        if zoo not in models:
            raise InputValueError("zoo", list(models), zoo)
        return models[zoo]
    if path is None:
        raise InputValueError("model", ["--model <file.toml>", "--zoo <name>"], "missing")
    return load_model(path)


def _order(args: argparse.Namespace, out: TextIO) -> None:
    sample = read_sample(args.sample, args.alphabet_size, args.format)
    crit = Criterion.parse(args.criterion)
    if crit.kind == "pml" and args.penalty is not None:
        crit = Criterion("pml", PenaltySpec.parse(args.penalty), crit.budget)
    est = estimate_order(sample, crit, args.max_order)
    print(f"criterion={crit.label} n={sample.n} r={est.bound_used} k_hat={est.chosen_k}", file=out)
    if args.trace:
        est.to_frame().to_csv(out, index=False, lineterminator="\n")


def _simulate(args: argparse.Namespace, out: TextIO) -> None:
    model = _model(args.model, args.zoo)
    sample = model.sample_path(parse_size(args.n), args.seed, args.burn_in)
    if args.out is None:
        print(sample.to_string(), file=out)
    else:
        path = write_sample(sample, args.out, args.format)
        logger.info("Wrote %d symbols of %s to %s", sample.n, model.name, path)


def _bounds(args: argparse.Namespace, out: TextIO) -> None:
    params: dict[str, Any] = {}
    if args.params is not None:
        loaded = load_toml(args.params)
        params = dict(loaded.get("params", loaded))
    bound = args.theorem or args.bound or params.get("bound")
    params.pop("bound", None)
    if bound is None:
        raise InputValueError("bound", [*BOUND_NAMES, *BOUND_CODES], "missing")
    frame = bound_grid(bound, params, parse_grid(args.grid))
    frame.to_csv(out, index=False, lineterminator="\n")


def _block_law(path: str, size: int) -> BlockDistribution:
    with Path(path).open(encoding="utf-8") as f:
        return BlockDistribution.from_mapping(json.load(f), size)


def _dbar(args: argparse.Namespace, out: TextIO) -> None:
    report: dict[str, Any] = {"mode": args.mode}
    if args.mode == "greedy":
        if args.model_a is None or args.model_b is None:
            raise InputValueError("greedy mode", ["--model-a and --model-b"], "missing")
        mean, se = dbar_upper_greedy(
            load_model(args.model_a), load_model(args.model_b), args.n, args.trials, args.seed
        )
        report.update(n=args.n, trials=args.trials, value=mean, std_error=se)
    else:
        if args.p is not None and args.q is not None:
            p, q = _block_law(args.p, args.alphabet_size), _block_law(args.q, args.alphabet_size)
        elif args.model_a is not None and args.model_b is not None:
            p = block_distribution(load_model(args.model_a), args.n)
            q = block_distribution(load_model(args.model_b), args.n)
        else:
            raise InputValueError("exact mode", ["--p and --q", "--model-a and --model-b"], "missing")
        value, plan = dbar_exact(p, q)
        coupling = plan.as_dict()
        report.update(
            n=p.length,
            value=value,
            plan_size=len(coupling),
            certificate=plan.certificate,
            truncation_error=max(p.truncation_error, q.truncation_error),
        )
        if args.coupling:
            report["coupling"] = [[x, y, m] for (x, y), m in coupling.items()]
    print(json.dumps(report, indent=2), file=out)


def _experiment(args: argparse.Namespace, out: TextIO) -> None:
    config = ExperimentConfig.from_toml(args.config)
    result = run_experiment(config)
    paths = result.write(args.out_dir)
    print(json.dumps({"files": {k: str(v) for k, v in paths.items()}}, indent=2), file=out)


def _versions(args: argparse.Namespace, out: TextIO) -> None:
    show_versions(file=out)


def build_parser() -> argparse.ArgumentParser:
    """Parser of all the subcommands."""
    parser = argparse.ArgumentParser(
        prog="pymarkovorder",
        description="Markov order estimation, process simulation, bounds and d-bar distances.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="repeat for more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    order = sub.add_parser("order", help="estimate the Markov order of a sample")
    order.add_argument("--sample", required=True, help="text or binary sample file")
    order.add_argument("--alphabet-size", type=int, default=None)
    order.add_argument("--format", choices=("auto", "text", "binary"), default="auto")
    order.add_argument("--criterion", default="pml", help="pml[:<penalty>], nml or kt")
    order.add_argument("--penalty", default=None, help="bic, aic, power:<kappa> or const:<c>")
    order.add_argument("--max-order", type=int, default=None, help="the bound r")
    order.add_argument("--trace", action="store_true", help="print the score of every order")
    order.set_defaults(handler=_order)

    simulate = sub.add_parser("simulate", help="draw a sample path from a model")
    simulate.add_argument("--model", default=None, help="TOML model file")
    simulate.add_argument("--zoo", default=None, help="name of a built-in Markov chain")
    simulate.add_argument("--n", required=True, help="sample size, e.g. 4096 or 2^12")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--burn-in", type=int, default=None)
    simulate.add_argument("--out", default=None, help="output file, stdout when omitted")
    simulate.add_argument("--format", choices=("auto", "text", "binary"), default="auto")
    simulate.set_defaults(handler=_simulate)

    bounds = sub.add_parser("bounds", help="evaluate a probability bound over a grid of sizes")
    which = bounds.add_mutually_exclusive_group()
    which.add_argument("--bound", choices=BOUND_NAMES, default=None)
    which.add_argument("--theorem", choices=tuple(BOUND_CODES), default=None, help="short code of a bound")
    bounds.add_argument("--params", default=None, help="TOML file of bound parameters")
    bounds.add_argument("--grid", required=True, help="sizes as [n=]start:stop:log-step")
    bounds.set_defaults(handler=_bounds)

    dbar = sub.add_parser("dbar", help="d-bar distance of two block laws or two processes")
    dbar.add_argument("--mode", choices=("exact", "greedy"), default="exact")
    dbar.add_argument("--p", default=None, help="JSON block law such as {\"00\": 0.5, \"11\": 0.5}")
    dbar.add_argument("--q", default=None, help="JSON block law")
    dbar.add_argument("--alphabet-size", type=int, default=2)
    dbar.add_argument("--model-a", default=None, help="TOML model file")
    dbar.add_argument("--model-b", default=None, help="TOML model file")
    dbar.add_argument("--n", type=int, default=4, help="block length")
    dbar.add_argument("--trials", type=int, default=100)
    dbar.add_argument("--seed", type=int, default=0)
    dbar.add_argument("--coupling", action="store_true", help="include the optimal coupling")
    dbar.set_defaults(handler=_dbar)

    experiment = sub.add_parser("experiment", help="run an experiment config")
    experiment.add_argument("--config", required=True, help="TOML experiment file")
    experiment.add_argument("--out-dir", default=None)
    experiment.set_defaults(handler=_experiment)

    versions = sub.add_parser("versions", help="print system and dependency versions")
    versions.set_defaults(handler=_versions)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    """Run the command line and return the exit status."""
    args = build_parser().parse_args(argv)
    level = max(logging.WARNING - 10 * args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    try:
        args.handler(args, out or sys.stdout)
    except ERRORS as ex:
        logger.debug("Command failed", exc_info=True)
        print(f"pymarkovorder: error: {ex}", file=sys.stderr)
        return 1
    return 0
