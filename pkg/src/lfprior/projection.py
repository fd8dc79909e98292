"""Euclidean projections onto the probability simplex, boxes, balls and their intersections."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def project_simplex(v) -> np.ndarray:
    """Project ``v`` onto {p : p >= 0, sum(p) = 1} by sorting and thresholding.

    O(d log d). The result is divided by its sum once at the end to remove
    round-off, so it lies on the simplex to machine precision.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / k > 0)
    tau = css[rho - 1] / rho
    p = np.maximum(v - tau, 0.0)
    return p / p.sum()


def project_box(v, lower, upper) -> np.ndarray:
    return np.clip(np.asarray(v, dtype=float), lower, upper)


def project_ball(v, center, radius: float) -> np.ndarray:
    """Radial projection onto the closed ball; works row-wise on (d, n) arrays."""
    v = np.asarray(v, dtype=float)
    c = np.asarray(center, dtype=float)
    diff = v - c
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    scale = np.where(dist > radius, radius / np.where(dist > 0, dist, 1.0), 1.0)
    return c + diff * scale


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have equal length")
        if not np.all(lo < hi):
            raise ValueError(f"box needs lower < upper in every coordinate, got {lo} and {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, v) -> np.ndarray:
        return project_box(v, self.lower, self.upper)

    def contains(self, v, tol: float = 0.0) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.all((v >= self.lower - tol) & (v <= self.upper + tol), axis=-1)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, v) -> np.ndarray:
        return project_ball(v, self.center, self.radius)

    def contains(self, v, tol: float = 0.0) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.linalg.norm(v - self.center, axis=-1) <= self.radius + tol


@dataclass(frozen=True)
class SimplexTarget:
    def project(self, v) -> np.ndarray:
        return project_simplex(v)


@dataclass
class AlternatingResult:
    point: np.ndarray
    converged: bool
    iterations: int
    history: list = field(default_factory=list, repr=False)


def project_alternating(
    v, targets: Sequence, max_iter: int = 10_000, tol: float = 1e-12
) -> AlternatingResult:
    """Project ``v`` onto the intersection of convex ``targets`` by Dykstra's alternating method.

    Each target needs an exact ``project`` method. Plain cyclic projections only
    find *some* point of the intersection; the Dykstra correction terms make the
    limit the nearest point. ``iterations`` counts the sweeps that moved the
    iterate, so a point already in the intersection reports 0.
    """
    x = np.asarray(v, dtype=float).copy()
    if len(targets) == 1:
        y = targets[0].project(x)
        moved = bool(np.any(y != x))
        return AlternatingResult(y, True, int(moved))
    increments = [np.zeros_like(x) for _ in targets]
    for sweep in range(max_iter):
        prev = x
        change = 0.0
        for k, target in enumerate(targets):
            y = target.project(x + increments[k])
            new_inc = x + increments[k] - y
            change = max(change, float(np.max(np.abs(new_inc - increments[k]))))
            increments[k] = new_inc
            x = y
        # the iterate can sit still for a sweep while the corrections are still moving
        if max(change, float(np.max(np.abs(x - prev)))) < tol:
            return AlternatingResult(x, True, sweep)
    return AlternatingResult(x, False, max_iter)
