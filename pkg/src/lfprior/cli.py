"""Command-line entry point: ``lfprior {solve,sweep,bounds,risk-eval,grad-check,validate-channel,replay}``.

Results go to stdout as JSON (or CSV with ``--format csv``). With ``--out DIR``
the outputs, a run manifest and plotting scripts are written to DIR as well.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bregman import LOSSES
from .channels import binomial_channel, load_table_channel, quantized_gaussian_channel, validate_channel
from .distributions import DiscreteDistribution, validate
from .gradients import grad_check
from .risk import bayes_risk, posterior
from .solver import ProblemSpec, SolverConfig, bounds_from_sizes, cardinality_bounds, solve, sweep
from .support import SupportSet
from .projection import Ball, Box

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_USAGE = 0, 1, 2, 64
GRAD_CHECK_LIMIT = 1e-4

log = logging.getLogger("lfprior")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> list[int]:
    """``"3"`` -> [3], ``"1..4"`` -> [1, 2, 3, 4] (inclusive), ``"1,3,5"`` -> [1, 3, 5]."""
    out: list[int] = []
    for part in str(text).split(","):
        if ".." in part:
            a, b = part.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _range_arg(text: str) -> list[int]:
    try:
        return parse_range(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer or a..b range: {text!r}") from exc


# -- problem assembly -------------------------------------------------------

DEFAULT_OMEGA = {"binomial": (0.0, 1.0), "qgauss": (-5.0, 5.0)}


def _single(values, flag):
    if values is None:
        raise UsageError(f"{flag} is required for this channel")
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value here, got {values}")
    return values[0]


def build_channel(args, value: int | None = None):
    if args.channel == "binomial":
        return binomial_channel(value if value is not None else _single(args.m, "--m"))
    if args.channel == "qgauss":
        return quantized_gaussian_channel(value if value is not None else _single(args.levels, "--levels"))
    if args.channel == "table":
        if not args.table:
            raise UsageError("--table FILE is required for --channel table")
        return load_table_channel(args.table)
    raise UsageError(f"unknown channel {args.channel!r}")


def build_support(args, dim: int) -> SupportSet:
    box = ball = None
    if args.omega is not None:
        if len(args.omega) != 2 * dim:
            raise UsageError(f"--omega needs {2 * dim} numbers (lo hi per coordinate)")
        lo = np.array(args.omega[0::2], dtype=float)
        hi = np.array(args.omega[1::2], dtype=float)
        box = Box(lo, hi)
    if args.ball is not None:
        if len(args.ball) != dim + 1:
            raise UsageError(f"--ball needs {dim + 1} numbers (center..., radius)")
        ball = Ball(args.ball[:-1], args.ball[-1])
    if box is None and ball is None:
        if args.channel in DEFAULT_OMEGA and dim == 1:
            box = Box(*[[v] for v in DEFAULT_OMEGA[args.channel]])
        else:
            raise UsageError("--omega (or --ball) is required for this channel")
    return SupportSet(box=box, ball=ball)


def build_spec(args, value: int | None = None) -> ProblemSpec:
    ch = build_channel(args, value)
    support = build_support(args, ch.input_dim)
    loss = LOSSES[args.loss]() if args.loss == "gid" else LOSSES[args.loss](ch.input_dim)
    return ProblemSpec(ch, loss, support)


def build_config(args) -> SolverConfig:
    return SolverConfig(
        d=args.d,
        bound=args.bound,
        step=args.step,
        max_iter=args.max_iter,
        restarts=args.restarts,
        seed=args.seed,
        jobs=args.jobs,
        gradient_mode=args.gradient_mode,
        merge_radius=args.merge_radius,
        prune_threshold=args.prune_threshold,
        minimize_support=args.min_support,
    )


# -- output -----------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _emit(text: str, out_dir: Path | None, name: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text if text.endswith("\n") else text + "\n")


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _location_header(n: int) -> list[str]:
    return ["location"] if n == 1 else [f"location_{l}" for l in range(n)]


def trace_csv(result) -> str:
    return _csv(["iteration", "risk"], result.trace)


def write_manifest(args, argv: list[str], inputs: dict, started: float, extra_path: Path | None = None) -> dict:
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "started_at": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_clock_s": time.time() - started,
        "input_digest": _digest(inputs),
    }
    targets = []
    if getattr(args, "out", None):
        targets.append(Path(args.out) / "manifest.json")
    if getattr(args, "manifest", None):
        targets.append(Path(args.manifest))
    for path in targets:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(_dumps(manifest) + "\n")
    return manifest


def _copy_templates(out_dir: Path) -> None:
    for name in ("plot_support.py", "plot_pmf.py"):
        text = resources.files("lfprior").joinpath("templates", name).read_text()
        (out_dir / name).write_text(text)


# -- commands ---------------------------------------------------------------

def cmd_solve(args, argv) -> int:
    started = time.time()
    spec = build_spec(args)
    config = build_config(args)
    result = solve(spec, config)
    out_dir = Path(args.out) if args.out else None
    payload = {"problem": spec.describe(), "config": config.to_json(), "result": result.to_json()}
    if args.format == "csv":
        _emit(trace_csv(result), out_dir, "trace.csv")
        if out_dir is not None:
            (out_dir / "result.json").write_text(_dumps(payload) + "\n")
    else:
        _emit(_dumps(payload), out_dir, "result.json")
        if out_dir is not None:
            (out_dir / "trace.csv").write_text(trace_csv(result))
    write_manifest(args, argv, {"problem": spec.describe(), "config": config.to_json()}, started)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def sweep_tables(results, n: int) -> tuple[str, str, str]:
    loc = _location_header(n)
    support_rows, pmf_rows, summary_rows = [], [], []
    for value, res in results:
        for i, (pt, mass) in enumerate(zip(res.prior.points, res.prior.masses)):
            support_rows.append([value, i, *[float(c) for c in pt], float(mass)])
            pmf_rows.append([value, *[float(c) for c in pt], float(mass), float(res.risk)])
        summary_rows.append([value, float(res.risk), res.prior.size, res.bound_used, res.iterations, res.converged])
    return (
        _csv(["parameter", "atom", *loc, "mass"], support_rows),
        _csv(["parameter", *loc, "mass", "risk"], pmf_rows),
        _csv(["parameter", "risk", "atoms", "bound_used", "iterations", "converged"], summary_rows),
    )


def cmd_sweep(args, argv) -> int:
    started = time.time()
    if args.channel == "binomial":
        values = args.m
        flag = "--m"
    elif args.channel == "qgauss":
        values = args.levels
        flag = "--levels"
    else:
        raise UsageError("sweep needs --channel binomial or qgauss")
    if not values:
        raise UsageError(f"{flag} a..b is required for sweep")
    if not args.out:
        raise UsageError("sweep needs --out DIR")
    config = build_config(args)
    results = sweep(lambda v: build_spec(args, v), values, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = results[0][1].prior.dim
    support_csv, pmf_csv, summary_csv = sweep_tables(results, n)
    (out_dir / "support.csv").write_text(support_csv)
    (out_dir / "pmf.csv").write_text(pmf_csv)
    (out_dir / "summary.csv").write_text(summary_csv)
    payload = {"parameter": flag.lstrip("-"), "config": config.to_json(),
               "results": [{"value": v, **r.to_json()} for v, r in results]}
    (out_dir / "results.json").write_text(_dumps(payload) + "\n")
    _copy_templates(out_dir)
    sys.stdout.write(summary_csv if args.format == "csv" else _dumps(payload) + "\n")
    write_manifest(args, argv, {"values": values, "problem": build_spec(args, values[0]).describe(),
                                "config": config.to_json()}, started)
    return EXIT_OK if all(r.converged for _, r in results) else EXIT_NOT_CONVERGED


def cmd_bounds(args, argv) -> int:
    started = time.time()
    if args.N is not None:
        N, n = args.N, args.n if args.n is not None else 1
        b = bounds_from_sizes(N, args.k, n)
        inputs = {"N": N, "k": args.k, "n": n}
    else:
        spec = build_spec(args)
        if args.k:
            from .solver import MomentConstraint

            spec = ProblemSpec(spec.channel, spec.loss, spec.support,
                               tuple(MomentConstraint(f"f{i + 1}", 0.0) for i in range(args.k)))
        b = cardinality_bounds(spec)
        inputs = spec.describe()
    _emit(_dumps(b.to_json()), Path(args.out) if args.out else None, "bounds.json")
    write_manifest(args, argv, inputs, started)
    return EXIT_OK


def cmd_risk_eval(args, argv) -> int:
    started = time.time()
    spec = build_spec(args)
    prior_data = json.loads(Path(args.prior).read_text())
    prior = DiscreteDistribution.from_json(prior_data)
    problem = validate(prior, spec.support)
    if problem is not None:
        raise ValueError(f"invalid prior: {problem}")
    post = posterior(prior, spec.channel)
    payload = {"risk": bayes_risk(prior, spec.channel, spec.loss), **post.to_json()}
    _emit(_dumps(payload), Path(args.out) if args.out else None, "risk.json")
    write_manifest(args, argv, {"problem": spec.describe(), "prior": prior_data}, started)
    return EXIT_OK


def random_prior(spec: ProblemSpec, d: int, rng: np.random.Generator) -> DiscreteDistribution:
    lo, hi = spec.support.bounding_box()
    span = hi - lo
    # keep atoms off the boundary so central differences stay inside the support
    pts = rng.uniform(lo + 0.02 * span, hi - 0.02 * span, size=(d, spec.n))
    pts = spec.support.project(pts)
    return DiscreteDistribution(pts, rng.dirichlet(np.ones(d)))


def cmd_grad_check(args, argv) -> int:
    started = time.time()
    spec = build_spec(args)
    if args.prior:
        prior = DiscreteDistribution.from_json(json.loads(Path(args.prior).read_text()))
    else:
        rng = np.random.default_rng(args.seed)
        prior = random_prior(spec, args.d or spec.N, rng)
    report = grad_check(prior, spec.channel, spec.loss, support=spec.support)
    payload = {"prior": prior.to_json(), **report.to_json()}
    _emit(_dumps(payload), Path(args.out) if args.out else None, "grad_check.json")
    write_manifest(args, argv, {"problem": spec.describe(), "prior": prior.to_json()}, started)
    return EXIT_OK if report.max_rel_err <= GRAD_CHECK_LIMIT else EXIT_ERROR


def cmd_validate_channel(args, argv) -> int:
    started = time.time()
    spec = build_spec(args)
    report = validate_channel(spec.channel, spec.support, args.grid)
    _emit(_dumps(report.to_json()), Path(args.out) if args.out else None, "channel_report.json")
    write_manifest(args, argv, {"problem": spec.describe(), "grid": args.grid}, started)
    return EXIT_OK if report.ok else EXIT_ERROR


def cmd_replay(args, argv) -> int:
    manifest = json.loads(Path(args.manifest_file).read_text())
    return main(manifest["argv"])


# -- parser -----------------------------------------------------------------

def _problem_flags(p: argparse.ArgumentParser, ranges: bool = False) -> None:
    p.add_argument("--channel", choices=["binomial", "qgauss", "table"], required=True)
    p.add_argument("--m", type=_range_arg, help="binomial trials" + (" (a..b for sweeps)" if ranges else ""))
    p.add_argument("--levels", type=_range_arg, help="quantizer levels N_q" + (" (a..b for sweeps)" if ranges else ""))
    p.add_argument("--table", help="JSON file with outputs, grid_x, pmf_rows")
    p.add_argument("--loss", choices=sorted(LOSSES), default="sq")
    p.add_argument("--omega", type=float, nargs="+", metavar="LO HI", help="box support, lo hi per coordinate")
    p.add_argument("--ball", type=float, nargs="+", metavar="C R", help="ball support: center coordinates then radius")


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="directory for output files and manifest.json")
    p.add_argument("--manifest", help="also write the run manifest to this path")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, help="number of atoms (default: tightest applicable bound)")
    p.add_argument("--bound", choices=["auto", "general", "t_compatible", "refined"], default="auto")
    p.add_argument("--step", type=float, help="initial ascent step (default 0.1 * diameter)")
    p.add_argument("--max-iter", type=int, default=200_000)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--jobs", type=int, default=1, help="parallel restarts")
    p.add_argument("--gradient-mode", choices=["auto", "analytic", "fd"], default="auto")
    p.add_argument("--merge-radius", type=float)
    p.add_argument("--prune-threshold", type=float, default=1e-6)
    p.add_argument("--min-support", action="store_true", help="report the smallest optimal support found")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lfprior", description="Least favorable priors for finite-output channels.")
    parser.add_argument("--version", action="version", version=f"lfprior {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="projected gradient ascent for one problem")
    _problem_flags(p)
    _solver_flags(p)
    _common_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a parameter range and write figure tables")
    _problem_flags(p, ranges=True)
    _solver_flags(p)
    _common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="support-size bounds")
    p.add_argument("--N", type=int, help="output alphabet size")
    p.add_argument("--k", type=int, default=0, help="number of moment constraints")
    p.add_argument("--n", type=int, help="input dimension (default 1)")
    p.add_argument("--channel", choices=["binomial", "qgauss", "table"])
    p.add_argument("--m", type=_range_arg)
    p.add_argument("--levels", type=_range_arg)
    p.add_argument("--table")
    p.add_argument("--loss", choices=sorted(LOSSES), default="sq")
    p.add_argument("--omega", type=float, nargs="+")
    p.add_argument("--ball", type=float, nargs="+")
    _common_flags(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("risk-eval", help="Bayes risk and posterior table of a given prior")
    _problem_flags(p)
    p.add_argument("--prior", required=True, help='JSON {"points": [[...]], "masses": [...]}')
    _common_flags(p)
    p.set_defaults(func=cmd_risk_eval)

    p = sub.add_parser("grad-check", help="closed-form vs finite-difference gradient")
    _problem_flags(p)
    p.add_argument("--prior", help="prior JSON (default: random prior from --seed)")
    p.add_argument("--d", type=int, help="atoms of the random prior (default N)")
    _common_flags(p)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("validate-channel", help="normalization and derivative checks on a grid")
    _problem_flags(p)
    p.add_argument("--grid", type=int, default=101)
    _common_flags(p)
    p.set_defaults(func=cmd_validate_channel)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"lfprior: error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(f"lfprior: error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
