"""Gradient of the risk with respect to atom masses and locations.

For scalar squared error the partials have closed forms:

    dR/dp_i = sum_j P(y_j|x_i) (x_i - m_j)^2
    dR/dx_i = 2 p_i (x_i - sum_j P(y_j|x_i) m_j)
              + p_i sum_j P'(y_j|x_i) (m_j^2 - 2 x_i m_j)

with m_j = E[X | Y = y_j]. Mass partials treat the masses as free
coordinates (no renormalization); the risk is homogeneous of degree one in
them, so sum_i p_i dR/dp_i = R. Everything else falls back to central
differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bregman import BregmanLoss, DomainError, squared_error_loss
from .channels import Channel, NeedsDerivativeError
from .distributions import DiscreteDistribution
from .risk import UnsupportedDimensionError, _posterior, raw_risk
from .support import SupportSet

DEFAULT_STEP = 1e-6


@dataclass(frozen=True)
class RiskGradient:
    d_masses: np.ndarray  # (d,)
    d_points: np.ndarray  # (d, n)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.d_masses, self.d_points.ravel()])


def sq_gradient_arrays(points: np.ndarray, masses: np.ndarray, P: np.ndarray, dP: np.ndarray):
    """Closed-form squared-error partials from precomputed channel tables (n = 1)."""
    _, _, active, cond = _posterior(points, masses, P)
    m = cond[active, 0]
    Pa = P[:, active]
    Da = dP[:, active, 0]
    x = points[:, 0]
    d_masses = np.sum(Pa * (x[:, None] - m) ** 2, axis=1)
    d_points = 2.0 * masses * (x - Pa @ m) + masses * (Da @ (m * m) - 2.0 * x * (Da @ m))
    return d_masses, d_points[:, None]


def analytic_gradient_sq(dist: DiscreteDistribution, ch: Channel) -> RiskGradient:
    if dist.dim != 1 or ch.input_dim != 1:
        raise UnsupportedDimensionError("closed-form gradient only covers scalar priors")
    if not ch.has_derivative:
        raise NeedsDerivativeError(f"channel {ch.name!r} has no x-derivative")
    pts, ms = dist.points, dist.masses
    d_masses, d_points = sq_gradient_arrays(pts, ms, ch.matrix(pts), ch.dmatrix(pts))
    return RiskGradient(d_masses, d_points)


def fd_gradient(
    dist: DiscreteDistribution,
    ch: Channel,
    loss: BregmanLoss,
    step: float = DEFAULT_STEP,
    support: SupportSet | None = None,
) -> RiskGradient:
    """Central differences on the raw coordinates, step scaled by 1 + |coordinate|.

    Location steps that would leave ``support`` fall back to one-sided
    differences. A step that leaves the loss domain raises DomainError.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    pts = np.array(dist.points, dtype=float)
    ms = np.array(dist.masses, dtype=float)

    def g(p, w):
        return raw_risk(p, w, ch.matrix(p), loss)

    base = None
    d_masses = np.empty_like(ms)
    for i in range(len(ms)):
        h = step * (1.0 + abs(ms[i]))
        up, down = ms.copy(), ms.copy()
        up[i] += h
        down[i] -= h
        d_masses[i] = (g(pts, up) - g(pts, down)) / (2.0 * h)

    d_points = np.empty_like(pts)
    for i in range(pts.shape[0]):
        for l in range(pts.shape[1]):
            h = step * (1.0 + abs(pts[i, l]))
            up, down = pts.copy(), pts.copy()
            up[i, l] += h
            down[i, l] -= h
            fwd = support is None or bool(support.contains(up[i]))
            bwd = support is None or bool(support.contains(down[i]))
            for cand, ok in ((up, fwd), (down, bwd)):
                if ok and not np.all(loss.in_domain(cand[i])):
                    raise DomainError(f"finite-difference step leaves the domain of {loss.name} at atom {i}")
            if fwd and bwd:
                d_points[i, l] = (g(up, ms) - g(down, ms)) / (2.0 * h)
            else:
                if base is None:
                    base = g(pts, ms)
                if fwd:
                    d_points[i, l] = (g(up, ms) - base) / h
                elif bwd:
                    d_points[i, l] = (base - g(down, ms)) / h
                else:
                    d_points[i, l] = 0.0
    return RiskGradient(d_masses, d_points)


@dataclass
class GradCheckReport:
    max_rel_err: float
    worst_entry: tuple
    analytic: np.ndarray
    numeric: np.ndarray

    def to_json(self) -> dict:
        return {"max_rel_err": self.max_rel_err, "worst_entry": list(self.worst_entry),
                "analytic": self.analytic.tolist(), "numeric": self.numeric.tolist()}


def grad_check(
    dist: DiscreteDistribution,
    ch: Channel,
    loss: BregmanLoss | None = None,
    step: float = DEFAULT_STEP,
    support: SupportSet | None = None,
) -> GradCheckReport:
    """Compare closed-form and finite-difference gradients entrywise.

    Relative error uses max(1e-8, |analytic|) as the denominator. The worst
    entry is reported as ("mass", i) or ("point", i, coordinate).
    """
    if loss is None:
        loss = squared_error_loss(1)
    if not loss.has_analytic_gradient_support:
        raise ValueError(f"no closed-form gradient for loss {loss.name!r}")
    a = analytic_gradient_sq(dist, ch)
    f = fd_gradient(dist, ch, loss, step, support)
    av, fv = a.flat(), f.flat()
    rel = np.abs(av - fv) / np.maximum(1e-8, np.abs(av))
    k = int(np.argmax(rel))
    d = len(a.d_masses)
    if k < d:
        where = ("mass", k)
    else:
        i, l = divmod(k - d, a.d_points.shape[1])
        where = ("point", i, l)
    return GradCheckReport(float(rel[k]), where, av, fv)
