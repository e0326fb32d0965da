"""Command-line front end: ``nccw {eval,search,protocol,classify}``.

Each command prints one JSON run record (or a CSV of its scalar result
fields) on stdout.  Exit status is 1 for bad input, 0 otherwise; verdicts
are reported in the payload, never through the exit status.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .deficit import has_product_eigenbasis, zero_way_deficit
from .protocol import run_sigma_protocol
from .search import SearchConfig, closed_form_c_opt, monte_carlo_search
from .states import DIRICHLET, DensityMatrix, canonical_state, entropy_purity
from .witness import WitnessMap, canonical_witness, evaluate, factor_traces, sigma_factors, verdict, w_sigma

SEED_ENV = "NCCW_SEED"


class UsageError(Exception):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def load_state(spec: str) -> DensityMatrix:
    try:
        return canonical_state(spec)
    except ValueError:
        if not os.path.exists(spec):
            raise
    return DensityMatrix.from_json(_load_json(spec))


def load_witness(spec: str) -> WitnessMap:
    if not os.path.exists(spec):
        return canonical_witness(spec)
    return WitnessMap.from_json(_load_json(spec))


def parse_eig_mode(text: str):
    if text == DIRICHLET:
        return DIRICHLET
    body = text.split(":", 1)[1] if text.startswith("fixed:") else text
    try:
        return tuple(float(Fraction(x.strip())) for x in body.split(","))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"eig mode must be {DIRICHLET!r} or fixed:v1,v2,...; got {text!r}") from None


def _same_factors(a, b) -> bool:
    return len(a) == len(b) and all(x.shape == y.shape and np.allclose(x, y, atol=1e-12) for x, y in zip(a, b))


def cmd_eval(args) -> dict:
    rho, w = load_state(args.state), load_witness(args.witness)
    v = verdict(w, rho, args.tol)
    traces = factor_traces(rho, w.factors)
    return {"value": v.value, "detected": v.detected, "tolerance": v.tolerance,
            "c": w.c, "f_value": w.c - evaluate(w, rho), "factor_traces": traces}


def cmd_search(args) -> dict:
    w = load_witness(args.witness)
    config = SearchConfig(
        n_samples=args.samples, seed=args.seed, shards=args.shards,
        eig_mode=parse_eig_mode(args.eig_mode), refine_steps=args.refine_steps,
        refine_initial_step=args.refine_initial_step, refine_decay=args.refine_decay,
    )
    report = monte_carlo_search(w.factors, w.dim_a, w.dim_b, config)
    out = report.to_json()
    if (w.dim_a, w.dim_b) == (2, 2) and _same_factors(w.factors, sigma_factors()):
        c_opt = closed_form_c_opt()[0]
        out["closed_form_c_opt"] = c_opt
        out["within_closed_form_bound"] = report.max_f <= c_opt + 1e-8
    return out


def cmd_protocol(args) -> dict:
    rho = load_state(args.state)
    if (rho.dim_a, rho.dim_b) != (2, 2):
        raise UsageError(f"protocol needs a two-qubit state, got {rho.dim_a}x{rho.dim_b}")
    c = closed_form_c_opt()[0] if args.c is None else args.c
    rng = np.random.default_rng(args.seed)
    result = run_sigma_protocol(rho, c, args.noise, rng)
    out = result.to_json()
    out["direct_value"] = evaluate(w_sigma(c), rho)
    return out


def cmd_classify(args) -> dict:
    rho = load_state(args.state)
    rng = np.random.default_rng(args.seed)
    result = has_product_eigenbasis(rho, args.tol, args.restarts, rng)
    deficit = result.deficit_bits
    if deficit is None:
        deficit = zero_way_deficit(rho, args.restarts, np.random.default_rng(args.seed))[0]
    entropy, purity = entropy_purity(rho)
    out = result.to_json()
    out.update(deficit_bits=deficit, entropy_bits=entropy, purity=purity)
    return out


def _default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nccw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--verbose", action="store_true", help="human-readable summary on stderr")
    common.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate a witness on a state")
    p.add_argument("--state", required=True)
    p.add_argument("--witness", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("search", parents=[common], help="Monte-Carlo estimate of the optimal c")
    p.add_argument("--witness", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--eig-mode", default=DIRICHLET)
    p.add_argument("--refine-steps", type=int, default=2000)
    p.add_argument("--refine-initial-step", type=float, default=0.3)
    p.add_argument("--refine-decay", type=float, default=0.995)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("protocol", parents=[common], help="simulate the three-readout protocol")
    p.add_argument("--state", required=True)
    p.add_argument("--c", type=float, default=None, help="defaults to the closed-form optimum")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("classify", parents=[common], help="product-eigenbasis classification")
    p.add_argument("--state", required=True)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_classify)
    return parser


def _csv(result: dict) -> str:
    scalars = {k: v for k, v in result.items() if isinstance(v, (bool, int, float, str)) or v is None}
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(scalars), lineterminator="\n")
    writer.writeheader()
    writer.writerow(scalars)
    return buf.getvalue()


def _summary(record: dict) -> str:
    res = record["result"]
    keys = [k for k, v in res.items() if isinstance(v, (bool, int, float, str))]
    return f"{record['command']}: " + ", ".join(f"{k}={res[k]}" for k in keys)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        config = {k: v for k, v in vars(args).items() if k not in ("func", "verbose", "format")}
        t0 = time.perf_counter()
        result = args.func(args)
    except (UsageError, ValueError, ArithmeticError) as exc:
        print(f"nccw {args.command}: error: {exc}", file=sys.stderr)
        return 1
    record = {
        "command": args.command,
        "config_echo": config,
        "result": result,
        "seed": args.seed,
        "wall_time_ms": int(round(1000 * (time.perf_counter() - t0))),
        "version": __version__,
    }
    if args.verbose:
        print(_summary(record), file=sys.stderr)
    sys.stdout.write(_csv(result) if args.format == "csv" else json.dumps(record, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
