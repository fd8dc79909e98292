"""Least favorable priors by projected gradient ascent over atom locations and masses.

A prior with d atoms in R^n is the vector [x_1, ..., x_d, p_1, ..., p_d]. The
ascent step moves along the risk gradient, then projects the locations onto
the support set and the masses onto the probability simplex. How many atoms
are needed comes from :func:`cardinality_bounds`.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .bregman import BregmanLoss
from .channels import Channel
from .distributions import DiscreteDistribution, EmptyDistributionError, merge_and_prune, sort_atoms, validate
from .gradients import fd_gradient, sq_gradient_arrays
from .projection import project_simplex
from .risk import _posterior, bayes_risk, raw_risk
from .support import SupportSet

log = logging.getLogger(__name__)

TIE_TOL = 1e-8


class UnsupportedProblemError(ValueError):
    pass


@dataclass(frozen=True)
class MomentConstraint:
    """E[f(X)] <= bound. Only counted for the cardinality bounds; never enforced."""

    name: str
    bound: float
    f: Callable | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ProblemSpec:
    channel: Channel
    loss: BregmanLoss
    support: SupportSet
    moment_constraints: tuple[MomentConstraint, ...] = ()
    # the f_i are bounded and continuous on the support (vacuous when k = 0)
    moments_bounded: bool = True

    def __post_init__(self):
        object.__setattr__(self, "moment_constraints", tuple(self.moment_constraints))
        if self.channel.n_outputs < 1:
            raise ValueError("channel needs at least one output")
        if self.support.dim != self.channel.input_dim:
            raise ValueError(f"support is in R^{self.support.dim}, channel expects R^{self.channel.input_dim}")
        if self.loss.dim is not None and self.loss.dim != self.support.dim:
            raise ValueError(f"loss {self.loss.name!r} is defined on R^{self.loss.dim}, support on R^{self.support.dim}")

    @property
    def n(self) -> int:
        return self.support.dim

    @property
    def N(self) -> int:
        return self.channel.n_outputs

    @property
    def k(self) -> int:
        return len(self.moment_constraints)

    def describe(self) -> dict:
        return {
            "channel": self.channel.describe(),
            "loss": self.loss.name,
            "support": self.support.to_json(),
            "moment_constraints": [{"name": c.name, "bound": c.bound} for c in self.moment_constraints],
            "n": self.n, "N": self.N, "k": self.k,
        }


@dataclass(frozen=True)
class Bounds:
    general: int
    t_compatible: int
    refined: int

    def to_json(self) -> dict:
        return asdict(self)


def bounds_from_sizes(N: int, k: int, n: int) -> Bounds:
    return Bounds(general=N * (k + 1) * (n + 1), t_compatible=N * (k + 1), refined=(n + 1) * (N - 1) + k + 1)


def cardinality_bounds(spec: ProblemSpec) -> Bounds:
    return bounds_from_sizes(spec.N, spec.k, spec.n)


def default_atoms(spec: ProblemSpec) -> tuple[int, str]:
    """Tightest bound that applies, with its name."""
    b = cardinality_bounds(spec)
    if spec.channel.t_compatible:
        return b.t_compatible, "t_compatible"
    # every SupportSet is compact, so only the moment functions can rule this out
    if spec.moments_bounded and b.refined <= b.general:
        return b.refined, "refined"
    return b.general, "general"


@dataclass(frozen=True)
class SolverConfig:
    d: int | None = None
    bound: str = "auto"  # auto | general | t_compatible | refined
    step: float | None = None  # default 0.1 * diameter of the support
    max_iter: int = 200_000
    grad_tol: float = 1e-8
    risk_tol: float = 1e-10
    window: int = 50
    restarts: int = 8
    seed: int = 0
    merge_radius: float | None = None  # default 1e-4 * diameter
    prune_threshold: float = 1e-6
    gradient_mode: str = "auto"  # auto | analytic | fd
    jobs: int = 1
    keep_trace: bool = True
    # shrink d while the optimal risk is kept (within TIE_TOL)
    minimize_support: bool = False

    def __post_init__(self):
        if self.d is not None and self.d < 1:
            raise ValueError("d must be >= 1")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1 or self.window < 1:
            raise ValueError("max_iter and window must be >= 1")
        if self.gradient_mode not in ("auto", "analytic", "fd"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.bound not in ("auto", "general", "t_compatible", "refined"):
            raise ValueError(f"unknown bound {self.bound!r}")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    prior: DiscreteDistribution
    risk: float
    bound_used: int
    iterations: int
    converged: bool
    trace: list[tuple[int, float]] = field(repr=False)
    restart_risks: list[float]
    diagnostics: dict = field(default_factory=dict)

    def to_json(self, include_trace: bool = False) -> dict:
        out = {
            "prior": self.prior.to_json(),
            "risk": self.risk,
            "bound_used": self.bound_used,
            "iterations": self.iterations,
            "converged": self.converged,
            "restart_risks": list(self.restart_risks),
            "diagnostics": self.diagnostics,
        }
        if include_trace:
            out["trace"] = [list(t) for t in self.trace]
        return out


@dataclass
class _Run:
    prior: DiscreteDistribution
    raw: DiscreteDistribution
    risk: float
    iterations: int
    converged: bool
    reason: str
    trace: list


def resolve_atoms(spec: ProblemSpec, config: SolverConfig) -> tuple[int, str]:
    if config.d is not None:
        return config.d, "user"
    if config.bound == "auto":
        return default_atoms(spec)
    return getattr(cardinality_bounds(spec), config.bound), config.bound


def _gradient_mode(spec: ProblemSpec, config: SolverConfig) -> str:
    analytic_ok = spec.loss.has_analytic_gradient_support and spec.n == 1 and spec.channel.has_derivative
    if config.gradient_mode == "analytic":
        if not analytic_ok:
            raise UnsupportedProblemError("analytic gradients need scalar squared error and a channel derivative")
        return "analytic"
    if config.gradient_mode == "fd":
        return "fd"
    return "analytic" if analytic_ok else "fd"


def initial_prior(support: SupportSet, d: int, rng: np.random.Generator | None) -> DiscreteDistribution:
    """Cell centers of a uniform grid, each jittered inside its own cell; uniform masses.

    ``rng=None`` gives the unjittered grid. In more than one dimension the
    atoms are drawn uniformly from the bounding box and projected.
    """
    lo, hi = support.bounding_box()
    if support.dim == 1:
        width = (hi[0] - lo[0]) / d
        x = lo[0] + (np.arange(d) + 0.5) * width
        if rng is not None:
            x = x + rng.uniform(-0.5, 0.5, d) * width
        pts = x[:, None]
    else:
        r = rng if rng is not None else np.random.default_rng(0)
        pts = r.uniform(lo, hi, size=(d, support.dim))
    pts = support.project(pts)
    return DiscreteDistribution(pts, np.full(d, 1.0 / d))


def _ascent(spec: ProblemSpec, config: SolverConfig, start: DiscreteDistribution, mode: str) -> _Run:
    ch, loss, support = spec.channel, spec.loss, spec.support
    diam = support.diameter()
    lam0 = config.step if config.step is not None else 0.1 * (diam if diam > 0 else 1.0)
    lam_cap = 8.0 * lam0
    lam_min = lam0 * 1e-30

    x = np.array(start.points, dtype=float)
    p = np.array(start.masses, dtype=float)
    loss.check_domain(x, "initial atom")
    P = ch.matrix(x)
    g = raw_risk(x, p, P, loss)

    def gradient(x, p, P):
        if mode == "analytic":
            return sq_gradient_arrays(x, p, P, ch.dmatrix(x))
        grad = fd_gradient(DiscreteDistribution(x, p), ch, loss, support=support)
        return grad.d_masses, grad.d_points

    lam = lam0
    accepts = 0
    history = [g]
    trace = [(0, g)] if config.keep_trace else []
    converged, reason = False, "max_iter"
    it = 0
    for it in range(1, config.max_iter + 1):
        gp, gx = gradient(x, p, P)
        while True:
            p_new = project_simplex(p + lam * gp)
            x_new = support.project(x + lam * gx)
            P_new = ch.matrix(x_new)
            g_new = raw_risk(x_new, p_new, P_new, loss)
            if g_new >= g:
                break
            lam *= 0.5
            accepts = 0
            if lam < lam_min:
                break
        if lam < lam_min:
            converged, reason = True, "no ascent direction"
            break
        move = max(np.max(np.abs(p_new - p)), np.max(np.abs(x_new - x)))
        x, p, P, g = x_new, p_new, P_new, g_new
        history.append(g)
        if config.keep_trace:
            trace.append((it, g))
        if move / lam <= config.grad_tol:
            converged, reason = True, "projected gradient"
            break
        if it >= config.window and g - history[-1 - config.window] <= config.risk_tol:
            converged, reason = True, "risk plateau"
            break
        accepts += 1
        if accepts >= 20:
            lam = min(2.0 * lam, lam_cap)
            accepts = 0

    raw = DiscreteDistribution(x, p)
    merge_radius = config.merge_radius if config.merge_radius is not None else 1e-4 * diam
    try:
        prior = sort_atoms(merge_and_prune(raw, merge_radius, config.prune_threshold))
    except EmptyDistributionError:
        prior = sort_atoms(raw)
    # merging can push a centroid off the support only for non-convex sets; keep it feasible anyway
    prior = DiscreteDistribution(support.project(prior.points), prior.masses)
    risk = bayes_risk(prior, ch, loss)
    return _Run(prior, raw, risk, it, converged, reason, trace)


def _restart_task(args) -> _Run:
    spec, config, d, seed_seq, index, mode = args
    rng = None if index == 0 else np.random.default_rng(seed_seq)
    start = initial_prior(spec.support, d, rng)
    return _ascent(spec, config, start, mode)


def _run_restarts(spec: ProblemSpec, config: SolverConfig, d: int, mode: str) -> list[_Run]:
    seeds = np.random.SeedSequence([config.seed, d]).spawn(config.restarts)
    tasks = [(spec, config, d, seeds[i], i, mode) for i in range(config.restarts)]
    if config.jobs > 1 and config.restarts > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(_restart_task, tasks))
    return [_restart_task(t) for t in tasks]


def _pick(runs: list[_Run]) -> tuple[int, list[int]]:
    top = max(r.risk for r in runs)
    tied = [i for i, r in enumerate(runs) if r.risk >= top - TIE_TOL]
    return min(tied, key=lambda i: (runs[i].prior.size, i)), tied


def solve(spec: ProblemSpec, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Maximize the Bayes risk over priors with at most ``d`` atoms.

    Restart 0 starts from the unjittered grid, the others from independently
    jittered grids seeded from ``config.seed``. Restarts whose exact risk
    (after merging) is within ``TIE_TOL`` of the best are tied; among them the
    smallest support wins, then the lowest restart index.

    Least favorable priors need not be unique. With ``minimize_support`` the
    smallest atom budget that keeps the optimal risk is found by bisection
    and its solution is reported instead.
    """
    if spec.k > 0:
        raise UnsupportedProblemError("unsupported: k >= 1 (moment constraints only feed the bounds)")
    d, bound_name = resolve_atoms(spec, config)
    mode = _gradient_mode(spec, config)
    runs = _run_restarts(spec, config, d, mode)
    best, tied = _pick(runs)
    run, all_runs, d_final = runs[best], runs, d
    searched = []
    if config.minimize_support:
        # the best attainable risk is nondecreasing in the atom budget: bisect
        target = run.risk
        lo, hi = 0, run.prior.size
        while hi - lo > 1:
            budget = (lo + hi) // 2
            trial = _run_restarts(spec, config, budget, mode)
            b, t = _pick(trial)
            searched.append({"d": budget, "risk": trial[b].risk})
            if trial[b].risk >= target - TIE_TOL:
                run, best, tied, all_runs, d_final = trial[b], b, t, trial, budget
                hi = min(budget, run.prior.size)
            else:
                lo = budget

    distinct = {all_runs[i].prior.size for i in tied}
    diagnostics = {
        "best_restart": best,
        "atoms_requested": d,
        "atoms_final_budget": d_final,
        "bound_name": bound_name,
        "gradient_mode": mode,
        "stop_reason": run.reason,
        "tied_restarts": tied,
        "tie_with_distinct_supports": len(tied) > 1 and len(distinct) > 1,
        "raw_atoms": run.raw.size,
    }
    if searched:
        diagnostics["support_search"] = searched
    problem = validate(run.prior, spec.support)
    if problem is not None:
        diagnostics["validation"] = str(problem)
    log.debug("solve: best restart %d risk %.12g after %d iterations", best, run.risk, run.iterations)
    return SolveResult(
        prior=run.prior,
        risk=run.risk,
        bound_used=d,
        iterations=run.iterations,
        converged=run.converged,
        trace=run.trace,
        restart_risks=[r.risk for r in all_runs],
        diagnostics=diagnostics,
    )


@dataclass
class OracleResult:
    risk: float
    masses: np.ndarray
    grid: np.ndarray
    iterations: int

    def to_json(self) -> dict:
        return {"risk": self.risk, "masses": self.masses.tolist(), "grid": self.grid.tolist(),
                "iterations": self.iterations}


def grid_oracle(
    spec: ProblemSpec,
    grid_points: int = 1001,
    iters: int = 20_000,
    init: np.ndarray | None = None,
    tol: float = 1e-14,
) -> OracleResult:
    """Best prior supported on a fixed uniform grid over the (scalar) support.

    With the locations frozen the risk is concave in the masses, so
    accelerated projected gradient ascent on the simplex reaches the global
    maximum of the restricted problem. The mass partials are the per-atom
    conditional risks. The value is a lower bound for the unrestricted optimum.
    """
    if spec.n != 1:
        raise UnsupportedProblemError("grid oracle needs a scalar support")
    lo, hi = spec.support.bounding_box()
    grid = np.linspace(lo[0], hi[0], grid_points)[:, None] if grid_points > 1 else lo[None, :].copy()
    P = spec.channel.matrix(grid)
    loss = spec.loss
    p = project_simplex(np.full(grid_points, 1.0 / grid_points) if init is None else np.asarray(init, float))

    def value_and_grad(q):
        W, marg, active, cond = _posterior(grid, q, P)
        L = loss.divergence(grid[:, None, :], cond[None, active, :])
        cr = np.sum(P[:, active] * L, axis=1)
        return float(q @ cr), cr

    f, gr = value_and_grad(p)
    y, fy, gy = p, f, gr
    history = [f]
    L_est = 1.0
    t = 1.0
    it = 0
    for it in range(1, iters + 1):
        # backtracking on the quadratic lower model around y
        while True:
            cand = project_simplex(y + gy / L_est)
            fc, gc = value_and_grad(cand)
            diff = cand - y
            if fc >= fy + gy @ diff - 0.5 * L_est * (diff @ diff) - 1e-15:
                break
            L_est *= 2.0
        if fc < f:
            # monotone restart: drop the momentum
            t = 1.0
            y, fy, gy = p, f, gr
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = project_simplex(cand + ((t - 1.0) / t_next) * (cand - p))
        step = np.max(np.abs(cand - p))
        p, f, gr = cand, fc, gc
        t = t_next
        fy, gy = value_and_grad(y)
        L_est *= 0.9
        history.append(f)
        if step <= tol:
            break
        if len(history) > 200 and f - history[-201] <= tol * max(1.0, abs(f)):
            break
    return OracleResult(f, p, grid[:, 0], it)


def sweep(
    make_spec: Callable[[int], ProblemSpec],
    values: Iterable[int],
    config: SolverConfig = SolverConfig(),
) -> list[tuple[int, SolveResult]]:
    """Solve one problem per parameter value with a shared configuration."""
    return [(v, solve(make_spec(v), config)) for v in values]
