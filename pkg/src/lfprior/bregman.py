"""Bregman divergences l(u, v) = phi(u) - phi(v) - <u - v, grad phi(v)>.

Generators act on the last axis, so ``phi`` maps (..., n) -> (...) and
``grad_phi`` maps (..., n) -> (..., n). Every loss is defined by the generic
formula. A loss may also carry ``reduced``, an algebraically identical
rewrite of that formula that avoids cancellation (for phi = ||u||^2 it is
||u - v||^2); it is checked against the generic path in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class DomainError(ValueError):
    pass


def _everywhere(u):
    return np.ones(np.shape(u)[:-1], dtype=bool)


@dataclass(frozen=True)
class BregmanLoss:
    name: str
    phi: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    grad_phi: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    in_domain: Callable[[np.ndarray], np.ndarray] = field(default=_everywhere, repr=False)
    domain_note: str = "R^n"
    dim: int | None = None
    has_analytic_gradient_support: bool = False
    reduced: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def check_domain(self, u, what: str = "argument") -> None:
        u = np.asarray(u, dtype=float)
        if self.dim is not None and u.shape[-1] != self.dim:
            raise DomainError(f"{self.name}: {what} has dimension {u.shape[-1]}, loss is defined on R^{self.dim}")
        ok = self.in_domain(u)
        if not np.all(ok):
            bad = u[~ok] if np.ndim(ok) else u
            raise DomainError(f"{self.name}: {what} {np.asarray(bad).tolist()[:3]} outside {self.domain_note}")

    def divergence(self, u, v) -> np.ndarray:
        """Vectorized divergence with broadcasting over leading axes; no domain check."""
        if self.reduced is not None:
            return self.reduced(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return self.generic_divergence(u, v)

    def generic_divergence(self, u, v) -> np.ndarray:
        """phi(u) - phi(v) - <u - v, grad phi(v)>, evaluated literally."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.phi(u) - self.phi(v) - np.sum((u - v) * self.grad_phi(v), axis=-1)


def bregman_loss(loss: BregmanLoss, u, v) -> float:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    loss.check_domain(u, "u")
    loss.check_domain(v, "v")
    return float(loss.divergence(u, v))


def _sq_phi(u):
    return np.sum(u * u, axis=-1)


def _sq_grad(u):
    return 2.0 * u


def _sq_reduced(u, v):
    diff = u - v
    return np.sum(diff * diff, axis=-1)


def squared_error_loss(n: int = 1) -> BregmanLoss:
    """phi(u) = ||u||^2, giving l(u, v) = ||u - v||^2."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return BregmanLoss(
        name="sq",
        phi=_sq_phi,
        grad_phi=_sq_grad,
        dim=n,
        has_analytic_gradient_support=(n == 1),
        reduced=_sq_reduced,
    )


def _negent_phi(u):
    return np.sum(u * np.log(u), axis=-1)


def _negent_grad(u):
    return np.log(u) + 1.0


def _positive(u):
    return np.all(u > 0, axis=-1)


def generalized_i_divergence() -> BregmanLoss:
    """phi(u) = u1 log u1 + u2 log u2 on the open positive quadrant."""
    return BregmanLoss(
        name="gid",
        phi=_negent_phi,
        grad_phi=_negent_grad,
        in_domain=_positive,
        domain_note="the open positive orthant of R^2",
        dim=2,
    )


def i_divergence_closed_form(u, v) -> float:
    """Closed form sum u log(u/v) - (u - v); used to cross-check the generic path."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.sum(u * np.log(u / v) - (u - v)))


def combine(a: float, first: BregmanLoss, b: float, second: BregmanLoss) -> BregmanLoss:
    """Loss generated by a*phi1 + b*phi2 (a, b >= 0), always evaluated through the generic formula."""
    if a < 0 or b < 0:
        raise ValueError("combination weights must be nonnegative")
    return BregmanLoss(
        name=f"{a}*{first.name}+{b}*{second.name}",
        phi=lambda u: a * first.phi(u) + b * second.phi(u),
        grad_phi=lambda u: a * first.grad_phi(u) + b * second.grad_phi(u),
        in_domain=lambda u: first.in_domain(u) & second.in_domain(u),
        domain_note=f"{first.domain_note} and {second.domain_note}",
        dim=first.dim if first.dim is not None else second.dim,
    )


LOSSES = {"sq": squared_error_loss, "gid": generalized_i_divergence}
