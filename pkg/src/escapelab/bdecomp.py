"""Characteristic functions of b-decomposable laws as infinite products
prod_{n >= 0} rho_hat(b^n z), evaluated in log space with a tail bound."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .rng import generator

CF = Callable[[Any], Any]


class ProductTruncationError(RuntimeError):
    def __init__(self, message: str, partial: complex, bound: float):
        super().__init__(message)
        self.partial = partial
        self.bound = bound


class MuHat(NamedTuple):
    value: complex
    bound: float
    terms: int


@dataclass(frozen=True)
class ProductCF:
    rho_cf: CF
    b: float
    d: int = 1
    tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self) -> None:
        if not 0 < self.b < 1:
            raise ValueError(f"b must lie in (0, 1), got {self.b}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    @classmethod
    def from_law(cls, law, b: float, **kw) -> ProductCF:
        return cls(law.cf, b, law.dim, **kw)

    def rho(self, z) -> complex:
        return complex(np.asarray(self.rho_cf(np.asarray(z, dtype=float))).reshape(()))


def _ray_constants(pcf: ProductCF, unit: np.ndarray, t0: float) -> tuple[float, float]:
    """Fit |log rho_hat(t u)| <= C t^beta for 0 < t <= t0 along the ray u.

    beta is taken from the log-log slope on a small geometric grid (clipped to
    (0, 2]) and C as 1.5 times the largest observed ratio.
    """
    t = t0 * np.geomspace(1e-6, 1.0, 25)
    vals = np.abs(np.log(np.asarray([pcf.rho(s * unit) for s in t])))
    pos = vals > 0
    if pos.sum() < 2:
        return 0.0, 1.0
    slopes = np.diff(np.log(vals[pos])) / np.diff(np.log(t[pos]))
    beta = float(np.clip(np.min(slopes), 1e-3, 2.0))
    c = 1.5 * float(np.max(vals[pos] / t[pos] ** beta))
    return c, beta


def mu_hat(pcf: ProductCF, z) -> MuHat:
    """prod_{n=0}^{N*} rho_hat(b^n z) with N* the first index whose tail bound
    drops below ``pcf.tol``.

    The tail bound is sum_{n > N*} C (b^n |z|)^beta, from a local fit of
    |log rho_hat| on the ray through z; it bounds the error of the log of the
    product, hence (for small values) the absolute error of the product.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (pcf.d,):
        raise ValueError(f"z must be a point in R^{pcf.d}")
    r = float(np.linalg.norm(z))
    if r == 0.0:
        return MuHat(1.0 + 0.0j, 0.0, 0)
    unit = z / r
    c, beta = _ray_constants(pcf, unit, min(r, 1e-2))
    log_sum = 0.0 + 0.0j
    bound = math.inf
    for n in range(pcf.max_terms):
        w = pcf.b**n * r
        f = pcf.rho(w * unit)
        if f == 0:
            return MuHat(0.0 + 0.0j, 0.0, n + 1)
        log_sum += np.log(f)
        nxt = w * pcf.b
        if nxt <= 1e-2:
            bound = c * nxt**beta / (1.0 - pcf.b**beta)
            if bound < pcf.tol:
                return MuHat(complex(np.exp(log_sum)), bound, n + 1)
    raise ProductTruncationError(
        f"product did not reach tol={pcf.tol} within {pcf.max_terms} terms", complex(np.exp(log_sum)), bound
    )


def mu_hat_many(pcf: ProductCF, zs) -> np.ndarray:
    zs = np.asarray(zs, dtype=float).reshape(-1, pcf.d)
    return np.array([mu_hat(pcf, z).value for z in zs])


def default_z_grid(d: int, points: int = 41, lim: float = 5.0, directions: int = 8, seed: int = 0) -> np.ndarray:
    """Axis grid of ``points`` values in [-lim, lim] per axis, plus random
    directions (at radii spread over (0, lim]) when d >= 2."""
    line = np.linspace(-lim, lim, points)
    grid = []
    for k in range(d):
        pts = np.zeros((points, d))
        pts[:, k] = line
        grid.append(pts)
    if d >= 2:
        rng = generator(seed, ["z-grid"])
        u = rng.standard_normal((directions, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        radii = np.linspace(lim / directions, lim, directions)
        grid.append(u * radii[:, None])
    return np.concatenate(grid, axis=0)


def check_fixed_point(pcf: ProductCF, zs, b_rhs: float | None = None) -> float:
    """max over the grid of |mu_hat(z) - mu_hat(b z) rho_hat(z)|.

    ``b_rhs`` replaces b on the right-hand side (negative controls).
    """
    b_rhs = pcf.b if b_rhs is None else b_rhs
    zs = np.asarray(zs, dtype=float).reshape(-1, pcf.d)
    worst = 0.0
    for z in zs:
        lhs = mu_hat(pcf, z).value
        rhs = mu_hat(pcf, b_rhs * z).value * pcf.rho(z)
        worst = max(worst, abs(lhs - rhs))
    return worst


class CFMatch(NamedTuple):
    deviation: float
    band: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.band


def empirical_cf(samples: np.ndarray, zs) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    samples = samples.reshape(samples.shape[0], -1)
    zs = np.asarray(zs, dtype=float).reshape(-1, samples.shape[1])
    out = np.empty(len(zs), dtype=complex)
    for k in range(0, len(zs), 16):
        phase = samples @ zs[k:k + 16].T
        out[k:k + 16] = np.exp(1j * phase).mean(axis=0)
    return out


def empirical_cf_match(samples: np.ndarray, pcf: ProductCF, zs) -> CFMatch:
    """max |empirical cf of W(0) samples - mu_hat| on the grid, with the
    5/sqrt(count) acceptance band."""
    count = len(samples)
    emp = empirical_cf(samples, zs)
    exact = mu_hat_many(pcf, zs)
    return CFMatch(float(np.max(np.abs(emp - exact))), 5.0 / math.sqrt(count))
