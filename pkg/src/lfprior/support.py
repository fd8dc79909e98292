"""Support sets for the unknown parameter: a box, a ball, or their intersection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .projection import Ball, Box, project_alternating


@dataclass(frozen=True)
class SupportSet:
    box: Box | None = None
    ball: Ball | None = None

    def __post_init__(self):
        if self.box is None and self.ball is None:
            raise ValueError("support set needs a box, a ball, or both")
        if self.box is not None and self.ball is not None:
            if self.box.dim != self.ball.dim:
                raise ValueError("box and ball dimensions differ")
            # the center must be reachable from the intersection
            res = project_alternating(self.ball.center, [self.box, self.ball])
            if not (res.converged and self.box.contains(res.point, 1e-9) and self.ball.contains(res.point, 1e-9)):
                raise ValueError("box and ball do not intersect")

    @classmethod
    def interval(cls, lo: float, hi: float) -> SupportSet:
        return cls(box=Box([lo], [hi]))

    @property
    def kind(self) -> str:
        if self.box is not None and self.ball is not None:
            return "intersection"
        return "box" if self.box is not None else "ball"

    @property
    def dim(self) -> int:
        return (self.box or self.ball).dim

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        if self.box is not None:
            lo, hi = np.maximum(lo, self.box.lower), np.minimum(hi, self.box.upper)
        if self.ball is not None:
            lo = np.maximum(lo, self.ball.center - self.ball.radius)
            hi = np.minimum(hi, self.ball.center + self.ball.radius)
        return lo, hi

    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        d = float(np.linalg.norm(hi - lo))
        if self.ball is not None:
            d = min(d, 2.0 * self.ball.radius)
        return d

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        ok = np.ones(pts.shape[:-1], dtype=bool)
        if self.box is not None:
            ok &= self.box.contains(pts, tol)
        if self.ball is not None:
            ok &= self.ball.contains(pts, tol)
        return ok

    def project(self, points) -> np.ndarray:
        """Row-wise Euclidean projection of an (d, n) array of locations."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "box":
            return self.box.project(pts)
        if self.kind == "ball":
            return self.ball.project(pts)
        out = np.empty_like(pts)
        for i, row in enumerate(pts):
            res = project_alternating(row, [self.box, self.ball])
            # tiny residual infeasibility is removed by a final clamp into the box
            out[i] = self.box.project(res.point)
        return out

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.box is not None:
            out["lower"] = self.box.lower.tolist()
            out["upper"] = self.box.upper.tolist()
        if self.ball is not None:
            out["center"] = self.ball.center.tolist()
            out["radius"] = self.ball.radius
        return out
