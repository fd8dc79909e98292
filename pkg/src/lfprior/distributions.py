"""Discrete priors on a support set: representation, validation, post-processing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:
    from .support import SupportSet

MASS_TOL = 1e-12


class EmptyDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported distribution: ``points`` has shape (d, n), ``masses`` shape (d,).

    Construction only normalizes shapes. Use :func:`validate` to check the
    simplex and support constraints.
    """

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts[:, None]
        ms = np.array(self.masses, dtype=float).reshape(-1)
        pts.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)

    @property
    def size(self) -> int:
        return len(self.masses)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.masses @ self.points

    def to_json(self) -> dict[str, Any]:
        return {"points": self.points.tolist(), "masses": self.masses.tolist()}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> DiscreteDistribution:
        return cls(np.asarray(data["points"], dtype=float), np.asarray(data["masses"], dtype=float))

    @classmethod
    def point_mass(cls, x) -> DiscreteDistribution:
        return cls(np.atleast_1d(np.asarray(x, dtype=float))[None, :], [1.0])

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and self.masses.shape == other.masses.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.masses, other.masses)
        )

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    invariant: str
    index: int | None
    detail: str

    def __str__(self):
        where = "" if self.index is None else f" at index {self.index}"
        return f"{self.invariant}{where}: {self.detail}"


def validate(dist: DiscreteDistribution, support: SupportSet | None = None) -> Violation | None:
    """Return ``None`` if ``dist`` is a feasible prior, else the first violated invariant."""
    d = len(dist.masses)
    if dist.points.shape[0] != d:
        return Violation("length", None, f"{dist.points.shape[0]} points vs {d} masses")
    if d < 1:
        return Violation("length", None, "distribution has no atoms")
    if not (np.all(np.isfinite(dist.points)) and np.all(np.isfinite(dist.masses))):
        bad = int(np.flatnonzero(~np.isfinite(dist.masses) | ~np.isfinite(dist.points).all(axis=1))[0])
        return Violation("finite", bad, "non-finite entry")
    neg = np.flatnonzero(dist.masses < 0)
    if neg.size:
        i = int(neg[0])
        return Violation("nonnegative", i, f"mass {dist.masses[i]!r} < 0")
    total = float(np.sum(dist.masses))
    if abs(total - 1.0) > MASS_TOL:
        return Violation("sum", None, f"masses sum {total!r}")
    if support is not None:
        if support.dim != dist.dim:
            return Violation("dimension", None, f"points in R^{dist.dim}, support in R^{support.dim}")
        inside = support.contains(dist.points)
        if not np.all(inside):
            i = int(np.flatnonzero(~inside)[0])
            return Violation("support", i, f"point {dist.points[i].tolist()} outside support")
    return None


def merge_and_prune(
    dist: DiscreteDistribution, merge_radius: float, prune_threshold: float
) -> DiscreteDistribution:
    """Coalesce atoms closer than ``merge_radius`` and drop atoms lighter than ``prune_threshold``.

    Merged atoms sit at the mass-weighted centroid of their cluster, so the
    prior mean is preserved. Clusters are formed greedily from the heaviest
    atom outward. The Bayes risk of the output is not guaranteed equal to the
    input's and has to be re-evaluated by the caller.
    """
    if merge_radius == 0 and prune_threshold == 0:
        return dist
    pts, ms = dist.points, dist.masses
    if merge_radius > 0:
        # stable sort: ties keep original order
        order = np.argsort(-ms, kind="stable")
        taken = np.zeros(len(ms), dtype=bool)
        new_pts, new_ms, first = [], [], []
        for i in order:
            if taken[i]:
                continue
            near = (~taken) & (np.linalg.norm(pts - pts[i], axis=1) <= merge_radius)
            taken |= near
            w = ms[near]
            total = w.sum()
            centroid = (w @ pts[near]) / total if total > 0 else pts[i]
            new_pts.append(centroid)
            new_ms.append(total)
            first.append(np.flatnonzero(near)[0])
        # keep the original left-to-right atom order
        keep = np.argsort(first, kind="stable")
        pts = np.asarray(new_pts)[keep]
        ms = np.asarray(new_ms)[keep]
    alive = ms >= prune_threshold
    if prune_threshold > 0:
        alive &= ms > 0
    if not np.any(alive):
        raise EmptyDistributionError("empty distribution")
    pts, ms = pts[alive], ms[alive]
    return DiscreteDistribution(pts, ms / ms.sum())


def reflect(dist: DiscreteDistribution, center) -> DiscreteDistribution:
    c = np.broadcast_to(np.asarray(center, dtype=float), (dist.dim,))
    return DiscreteDistribution(2.0 * c - dist.points, dist.masses)


def sort_atoms(dist: DiscreteDistribution) -> DiscreteDistribution:
    """Order atoms lexicographically by location."""
    order = np.lexsort(dist.points.T[::-1])
    return DiscreteDistribution(dist.points[order], dist.masses[order])
