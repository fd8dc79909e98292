"""Exact Bayes risk of a discrete prior observed through a finite-output channel.

With finitely many atoms and outputs every expectation is a finite sum. The
posterior mean for output y is the ratio E[X P(y|X)] / E[P(y|X)], and for
any Bregman loss it is the Bayes estimator, so

    R = sum_i sum_j p_i P(y_j|x_i) l(x_i, E[X | Y = y_j]).

Outputs with zero marginal probability carry no weight and are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bregman import BregmanLoss
from .channels import Channel
from .distributions import DiscreteDistribution


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PosteriorTable:
    marginal: np.ndarray
    cond_mean: np.ndarray  # (N, n); NaN rows for inactive outputs
    active: np.ndarray  # bool mask over outputs

    @property
    def active_outputs(self) -> list[int]:
        return np.flatnonzero(self.active).tolist()

    def to_json(self) -> dict:
        return {
            "marginal": self.marginal.tolist(),
            "cond_mean": [row.tolist() if ok else None for row, ok in zip(self.cond_mean, self.active)],
        }


def _posterior(points: np.ndarray, masses: np.ndarray, P: np.ndarray):
    """Joint weights, marginal, active mask and conditional means.

    Masses need not sum to one; all quantities are then those of the
    rescaled measure, which is what the finite-difference gradient needs.
    """
    W = masses[:, None] * P
    marginal = W.sum(axis=0)
    active = marginal != 0
    cond = np.full((P.shape[1], points.shape[1]), np.nan)
    cond[active] = (W[:, active] / marginal[active]).T @ points
    return W, marginal, active, cond


def posterior(dist: DiscreteDistribution, ch: Channel) -> PosteriorTable:
    if dist.dim != ch.input_dim:
        raise UnsupportedDimensionError(f"prior lives in R^{dist.dim}, channel expects R^{ch.input_dim}")
    _, marginal, active, cond = _posterior(dist.points, dist.masses, ch.matrix(dist.points))
    return PosteriorTable(marginal, cond, active & (marginal > 0))


def raw_risk(points: np.ndarray, masses: np.ndarray, P: np.ndarray, loss: BregmanLoss) -> float:
    """Risk for a given channel table, without validation or compensated summation."""
    W, _, active, cond = _posterior(points, masses, P)
    L = loss.divergence(points[:, None, :], cond[None, active, :])
    return float(np.sum(W[:, active] * L))


def conditional_risks(points: np.ndarray, masses: np.ndarray, P: np.ndarray, loss: BregmanLoss) -> np.ndarray:
    """Per-atom risk sum_j P(y_j|x_i) l(x_i, E[X|Y=y_j]) of the prior's own Bayes estimator."""
    _, _, active, cond = _posterior(points, masses, P)
    L = loss.divergence(points[:, None, :], cond[None, active, :])
    return np.sum(P[:, active] * L, axis=1)


def _check(dist: DiscreteDistribution, ch: Channel, loss: BregmanLoss) -> None:
    if dist.dim != ch.input_dim:
        raise UnsupportedDimensionError(f"prior lives in R^{dist.dim}, channel expects R^{ch.input_dim}")
    loss.check_domain(dist.points, "support point")


def bayes_risk(dist: DiscreteDistribution, ch: Channel, loss: BregmanLoss) -> float:
    _check(dist, ch, loss)
    W, _, active, cond = _posterior(dist.points, dist.masses, ch.matrix(dist.points))
    active &= W.sum(axis=0) > 0
    loss.check_domain(cond[active], "conditional mean")
    L = loss.divergence(dist.points[:, None, :], cond[None, active, :])
    return max(0.0, math.fsum((W[:, active] * L).ravel()))


def mmse_risk(dist: DiscreteDistribution, ch: Channel) -> float:
    """Squared-error risk through E[X^2] - E[E[X|Y]^2]; scalar priors only."""
    if dist.dim != 1:
        raise UnsupportedDimensionError("mmse_risk needs scalar priors")
    if ch.input_dim != 1:
        raise UnsupportedDimensionError("mmse_risk needs a scalar-input channel")
    x = dist.points[:, 0]
    _, marginal, active, cond = _posterior(dist.points, dist.masses, ch.matrix(dist.points))
    active &= marginal > 0
    second = math.fsum(dist.masses * x * x)
    explained = math.fsum(marginal[active] * cond[active, 0] ** 2)
    return max(0.0, second - explained)


def risk_of_estimator(
    dist: DiscreteDistribution,
    ch: Channel,
    loss: BregmanLoss,
    estimator: Callable[[int], object] | np.ndarray,
) -> float:
    """Expected loss of an arbitrary estimator, given as a table (N, n) or a callable on output indices."""
    _check(dist, ch, loss)
    N = ch.n_outputs
    if callable(estimator):
        values = np.array([np.atleast_1d(np.asarray(estimator(j), dtype=float)) for j in range(N)])
    else:
        values = np.asarray(estimator, dtype=float).reshape(N, -1)
    W = dist.masses[:, None] * ch.matrix(dist.points)
    used = W.sum(axis=0) > 0
    loss.check_domain(values[used], "estimate")
    L = loss.divergence(dist.points[:, None, :], values[None, used, :])
    return max(0.0, math.fsum((W[:, used] * L).ravel()))
