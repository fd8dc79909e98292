"""Finite-output observation channels P(y | x).

A channel is evaluated in batch: ``matrix(points)`` returns the (d, N) table
of P(y_j | x_i) and ``dmatrix(points)`` the (d, N, n) table of its
x-derivatives. The scalar ``pmf``/``pmf_dx`` accessors wrap those.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.special import comb, ndtr

from .support import SupportSet


class InvalidParameterError(ValueError):
    pass


class NeedsDerivativeError(ValueError):
    pass


def normal_cdf(z):
    """Standard normal CDF, accurate to ~1e-16 absolute over the whole real line."""
    return ndtr(z)


def normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Channel:
    name: str
    outputs: tuple
    input_dim: int
    matrix_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dmatrix_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    t_compatible: bool = False
    params: dict = field(default_factory=dict)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    @property
    def has_derivative(self) -> bool:
        return self.dmatrix_fn is not None

    def _as_points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, self.input_dim)
        return pts

    def matrix(self, points) -> np.ndarray:
        return self.matrix_fn(self._as_points(points))

    def dmatrix(self, points) -> np.ndarray:
        if self.dmatrix_fn is None:
            raise NeedsDerivativeError(f"channel {self.name!r} has no x-derivative")
        return self.dmatrix_fn(self._as_points(points))

    def pmf(self, j: int, x) -> float:
        return float(self.matrix(np.atleast_1d(x)[None, :])[0, j])

    def pmf_dx(self, j: int, x, l: int = 0) -> float:
        return float(self.dmatrix(np.atleast_1d(x)[None, :])[0, j, l])

    def index_of(self, label) -> int:
        return self.outputs.index(label)

    def describe(self) -> dict[str, Any]:
        return {"name": self.name, "params": dict(self.params), "n_outputs": self.n_outputs,
                "input_dim": self.input_dim, "t_compatible": self.t_compatible}


# -- binomial ---------------------------------------------------------------

def _binomial_matrix(points, m, coef, ys):
    x = points[:, :1]
    # the power product is grouped so that pmf(y, x) == pmf(m - y, 1 - x) bit for bit
    return coef * (x**ys * (1.0 - x) ** (m - ys))


def _binomial_dmatrix(points, m, coef, ys):
    # expanded polynomial form: no division, finite at x in {0, 1}
    x = points[:, :1]
    up = np.where(ys > 0, ys * x ** np.maximum(ys - 1, 0) * (1.0 - x) ** (m - ys), 0.0)
    down = np.where(ys < m, (m - ys) * x**ys * (1.0 - x) ** np.maximum(m - ys - 1, 0), 0.0)
    return (coef * (up - down))[:, :, None]


def binomial_channel(m: int) -> Channel:
    """Y ~ Binomial(m, x) with the success probability x in [0, 1]."""
    if int(m) != m or m < 1:
        raise InvalidParameterError(f"binomial channel needs an integer m >= 1, got {m!r}")
    m = int(m)
    ys = np.arange(m + 1, dtype=float)
    coef = comb(m, ys, exact=False)
    return Channel(
        name="binomial",
        outputs=tuple(range(m + 1)),
        input_dim=1,
        matrix_fn=partial(_binomial_matrix, m=m, coef=coef, ys=ys),
        dmatrix_fn=partial(_binomial_dmatrix, m=m, coef=coef, ys=ys),
        params={"m": m},
    )


# -- quantized Gaussian -----------------------------------------------------

def _qgauss_matrix(points, levels, ys):
    x = points[:, :1]
    c = ys[1:-1] - x
    a = np.abs(c)
    # symmetric in c, hence pmf(y, x) == pmf(-y, -x) bit for bit
    middle = ndtr(0.5 - a) - ndtr(-0.5 - a)
    low = ndtr(-levels - x + 0.5)
    high = ndtr(-levels + x + 0.5)
    return np.concatenate([low, middle, high], axis=1)


def _qgauss_dmatrix(points, levels, ys):
    x = points[:, :1]
    c = ys[1:-1] - x
    middle = -(normal_pdf(c + 0.5) - normal_pdf(c - 0.5))
    low = -normal_pdf(-levels - x + 0.5)
    high = normal_pdf(-levels + x + 0.5)
    return np.concatenate([low, middle, high], axis=1)[:, :, None]


def quantized_gaussian_channel(levels: int) -> Channel:
    """Y = Q(x + Z), Z ~ N(0, 1), Q rounding to the nearest integer and clipping to [-levels, levels]."""
    if int(levels) != levels or levels < 1:
        raise InvalidParameterError(f"quantized Gaussian channel needs an integer levels >= 1, got {levels!r}")
    levels = int(levels)
    ys = np.arange(-levels, levels + 1, dtype=float)
    return Channel(
        name="qgauss",
        outputs=tuple(range(-levels, levels + 1)),
        input_dim=1,
        matrix_fn=partial(_qgauss_matrix, levels=levels, ys=ys),
        dmatrix_fn=partial(_qgauss_dmatrix, levels=levels, ys=ys),
        params={"levels": levels},
    )


# -- tabulated --------------------------------------------------------------

def _table_matrix(points, grid, rows):
    x = np.clip(points[:, 0], grid[0], grid[-1])
    k = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, len(grid) - 2)
    t = ((x - grid[k]) / (grid[k + 1] - grid[k]))[:, None]
    return (1.0 - t) * rows[k] + t * rows[k + 1]


def _table_dmatrix(points, grid, rows):
    x = np.clip(points[:, 0], grid[0], grid[-1])
    k = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, len(grid) - 2)
    slope = (rows[k + 1] - rows[k]) / (grid[k + 1] - grid[k])[:, None]
    return slope[:, :, None]


def table_channel(outputs, grid_x, pmf_rows, t_compatible: bool = False) -> Channel:
    """Channel tabulated on a grid of inputs, linearly interpolated in x.

    ``pmf_rows[k]`` is the output pmf at ``grid_x[k]``. Interpolation keeps
    rows normalized; the derivative is the slope of the active segment, so
    both are approximations of whatever channel was tabulated.
    """
    grid = np.asarray(grid_x, dtype=float)
    rows = np.asarray(pmf_rows, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("grid_x must be strictly increasing with at least two points")
    if rows.shape != (grid.size, len(outputs)):
        raise InvalidParameterError(f"pmf_rows must have shape {(grid.size, len(outputs))}, got {rows.shape}")
    if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-10):
        raise InvalidParameterError("every pmf row must be a probability vector")
    return Channel(
        name="table",
        outputs=tuple(outputs),
        input_dim=1,
        matrix_fn=partial(_table_matrix, grid=grid, rows=rows),
        dmatrix_fn=partial(_table_dmatrix, grid=grid, rows=rows),
        t_compatible=t_compatible,
        params={"grid_size": int(grid.size)},
    )


def load_table_channel(path) -> Channel:
    data = json.loads(Path(path).read_text())
    return table_channel(data["outputs"], data["grid_x"], data["pmf_rows"], bool(data.get("t_compatible", False)))


# -- products ---------------------------------------------------------------

def _product_matrix(points, first, second):
    n1 = first.input_dim
    A = first.matrix_fn(points[:, :n1])
    B = second.matrix_fn(points[:, n1:])
    return (A[:, :, None] * B[:, None, :]).reshape(len(points), -1)


def _product_dmatrix(points, first, second):
    n1 = first.input_dim
    A, B = first.matrix_fn(points[:, :n1]), second.matrix_fn(points[:, n1:])
    dA, dB = first.dmatrix_fn(points[:, :n1]), second.dmatrix_fn(points[:, n1:])
    d = len(points)
    left = (dA[:, :, None, :] * B[:, None, :, None]).reshape(d, -1, dA.shape[2])
    right = (A[:, :, None, None] * dB[:, None, :, :]).reshape(d, -1, dB.shape[2])
    return np.concatenate([left, right], axis=2)


def product_channel(first: Channel, second: Channel) -> Channel:
    """Two independent channels observing the two blocks of x = (x1, x2)."""
    deriv = None
    if first.has_derivative and second.has_derivative:
        deriv = partial(_product_dmatrix, first=first, second=second)
    return Channel(
        name=f"{first.name}*{second.name}",
        outputs=tuple((a, b) for a in first.outputs for b in second.outputs),
        input_dim=first.input_dim + second.input_dim,
        matrix_fn=partial(_product_matrix, first=first, second=second),
        dmatrix_fn=deriv,
        t_compatible=False,
        params={"first": first.describe(), "second": second.describe()},
    )


# -- validation -------------------------------------------------------------

@dataclass
class ChannelReport:
    ok: bool
    max_normalization_error: float
    worst_normalization_at: list
    max_derivative_sum: float | None
    worst_derivative_at: list | None
    min_pmf: float
    max_pmf: float

    def to_json(self) -> dict[str, Any]:
        return dict(self.__dict__)


def _grid(support: SupportSet, grid_size: int) -> np.ndarray:
    lo, hi = support.bounding_box()
    axes = [np.linspace(a, b, grid_size) for a, b in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    return mesh[support.contains(mesh)]


def validate_channel(ch: Channel, support: SupportSet, grid_size: int = 101,
                     tol: float = 1e-10, dtol: float = 1e-8) -> ChannelReport:
    """Check normalization, range, and the zero-sum of derivatives on a grid over the support."""
    xs = _grid(support, grid_size)
    P = ch.matrix(xs)
    norm_err = np.abs(P.sum(axis=1) - 1.0)
    k = int(np.argmax(norm_err))
    ok = bool(norm_err[k] <= tol and P.min() >= 0.0 and P.max() <= 1.0)
    dmax = dloc = None
    if ch.has_derivative:
        dsum = np.abs(ch.dmatrix(xs).sum(axis=1)).max(axis=1)
        kd = int(np.argmax(dsum))
        dmax, dloc = float(dsum[kd]), xs[kd].tolist()
        ok = ok and dmax <= dtol
    return ChannelReport(ok, float(norm_err[k]), xs[k].tolist(), dmax, dloc, float(P.min()), float(P.max()))
