"""Increment laws: sampling, exact characteristic functions, Laplace
transforms of the norm, and log-moment diagnostics.

Every law is an immutable dataclass.  Sampling is a pure function of
``(law, count, seed)``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any, ClassVar, NamedTuple

import numpy as np
from scipy import special

from .rng import generator

__all__ = [
    "IncrementLaw",
    "PointMass",
    "BernoulliScaled",
    "Exponential",
    "Uniform",
    "Gaussian",
    "PositiveStable",
    "Mixture",
    "LawDescriptor",
    "LogMoment",
    "sample",
    "log_moment",
    "cf_exact",
    "laplace_exact",
    "describe",
    "law_from_config",
    "is_full",
    "require_full",
]

PILOT_DRAWS = 100_000


def _vec(x: Any) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a point in R^d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    return tuple(float(v) for v in arr)


def _as_points(z: Any, d: int) -> np.ndarray:
    """Coerce ``z`` to an array of shape (..., d)."""
    z = np.asarray(z, dtype=float)
    if d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if z.shape[-1] != d:
        raise ValueError(f"expected points with last axis {d}, got shape {z.shape}")
    return z


class IncrementLaw:
    """Base class for the supported iid increment laws."""

    kind: ClassVar[str] = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def cf(self, z: Any) -> np.ndarray:
        raise NotImplementedError

    @property
    def atom_at_zero(self) -> float:
        return 0.0

    @property
    def on_positive_orthant(self) -> bool:
        return False

    def laplace(self, u: Any) -> np.ndarray:
        raise ValueError(f"{self.kind}: Laplace transform of |X| needs a law on R_+^d")

    def log_moment_bound(self) -> float:
        """Upper bound on E log(2 + |X|)."""
        raise NotImplementedError

    def support_min_norm(self) -> float:
        """inf of |x| over the support."""
        return 0.0

    def abs_quantile(self, q: float) -> float:
        x = self.draw(generator(0, ["pilot-quantile", self.kind]), PILOT_DRAWS)
        return float(np.quantile(np.linalg.norm(x, axis=1), q))

    def to_config(self) -> dict[str, Any]:
        raise NotImplementedError


def _spans(points: np.ndarray, d: int) -> bool:
    centered = points - points[0]
    return bool(np.linalg.matrix_rank(centered, tol=1e-12) == d)


def _atoms(law: IncrementLaw) -> list[tuple[float, ...]] | None:
    """Support points of an atomic law, or None for a law with a density."""
    if isinstance(law, PointMass):
        return [law.c]
    if isinstance(law, BernoulliScaled):
        return [(0.0,) * law.dim, law.v] if 0 < law.lam < 1 else [law.v if law.lam == 0 else (0.0,) * law.dim]
    if isinstance(law, Mixture):
        pts: list[tuple[float, ...]] = []
        for w, c in zip(law.weights, law.components):
            if w == 0:
                continue
            sub = _atoms(c)
            if sub is None:
                return None
            pts.extend(sub)
        return pts
    return None


def is_full(law: IncrementLaw) -> bool:
    """True unless the support lies in an affine hyperplane (always true for d = 1)."""
    if law.dim == 1:
        return True
    pts = _atoms(law)
    return pts is None or _spans(np.array(pts), law.dim)


def require_full(law: IncrementLaw) -> IncrementLaw:
    if not is_full(law):
        raise ValueError(f"{law.kind} law is not full on R^{law.dim}: support lies in a hyperplane")
    return law


@dataclass(frozen=True)
class PointMass(IncrementLaw):
    c: tuple[float, ...]
    kind: ClassVar[str] = "point_mass"

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", _vec(self.c))

    @property
    def dim(self) -> int:
        return len(self.c)

    def draw(self, rng, count):
        return np.tile(np.array(self.c), (count, 1))

    def cf(self, z):
        z = _as_points(z, self.dim)
        return np.exp(1j * (z @ np.array(self.c)))

    @property
    def atom_at_zero(self):
        return 1.0 if not any(self.c) else 0.0

    @property
    def on_positive_orthant(self):
        return min(self.c) >= 0.0

    def laplace(self, u):
        if not self.on_positive_orthant:
            super().laplace(u)
        return np.exp(-np.asarray(u, dtype=float) * math.hypot(*self.c))

    def log_moment_bound(self):
        return math.log(2.0 + math.hypot(*self.c))

    def support_min_norm(self):
        return math.hypot(*self.c)

    def abs_quantile(self, q):
        return math.hypot(*self.c)

    def to_config(self):
        return {"kind": self.kind, "c": list(self.c)}


@dataclass(frozen=True)
class BernoulliScaled(IncrementLaw):
    """0 with probability ``lam``, ``v`` with probability ``1 - lam``."""

    lam: float
    v: tuple[float, ...]
    kind: ClassVar[str] = "bernoulli"

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", _vec(self.v))
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")

    @property
    def dim(self):
        return len(self.v)

    def draw(self, rng, count):
        hit = rng.random(count) >= self.lam
        return hit[:, None] * np.array(self.v)[None, :]

    def cf(self, z):
        z = _as_points(z, self.dim)
        return self.lam + (1.0 - self.lam) * np.exp(1j * (z @ np.array(self.v)))

    @property
    def atom_at_zero(self):
        return 1.0 if not any(self.v) else self.lam

    @property
    def on_positive_orthant(self):
        return min(self.v) >= 0.0

    def laplace(self, u):
        if not self.on_positive_orthant:
            super().laplace(u)
        u = np.asarray(u, dtype=float)
        return self.lam + (1.0 - self.lam) * np.exp(-u * math.hypot(*self.v))

    def log_moment_bound(self):
        return self.lam * math.log(2.0) + (1.0 - self.lam) * math.log(2.0 + math.hypot(*self.v))

    def support_min_norm(self):
        return 0.0 if self.lam > 0 else math.hypot(*self.v)

    def abs_quantile(self, q):
        return math.hypot(*self.v) if self.lam < q else 0.0

    def to_config(self):
        return {"kind": self.kind, "lam": self.lam, "v": list(self.v)}


@dataclass(frozen=True)
class Exponential(IncrementLaw):
    """Independent exponential coordinates with the given rates."""

    rate: tuple[float, ...]
    kind: ClassVar[str] = "exponential"

    def __post_init__(self) -> None:
        object.__setattr__(self, "rate", _vec(self.rate))
        if min(self.rate) <= 0:
            raise ValueError("exponential rates must be positive")

    @property
    def dim(self):
        return len(self.rate)

    def draw(self, rng, count):
        return rng.standard_exponential((count, self.dim)) / np.array(self.rate)

    def cf(self, z):
        z = _as_points(z, self.dim)
        rate = np.array(self.rate)
        return np.prod(rate / (rate - 1j * z), axis=-1)

    @property
    def on_positive_orthant(self):
        return True

    def laplace(self, u):
        if self.dim != 1:
            raise ValueError("closed-form Laplace transform of |X| only for d = 1 exponentials")
        u = np.asarray(u, dtype=float)
        return self.rate[0] / (self.rate[0] + u)

    def log_moment_bound(self):
        # Jensen: E log(2+|X|) <= log(2 + sqrt(E|X|^2)), E X_k^2 = 2/rate_k^2
        second = sum(2.0 / r**2 for r in self.rate)
        return math.log(2.0 + math.sqrt(second))

    def abs_quantile(self, q):
        if self.dim == 1:
            return -math.log1p(-q) / self.rate[0]
        return super().abs_quantile(q)

    def to_config(self):
        return {"kind": self.kind, "rate": list(self.rate)}


@dataclass(frozen=True)
class Uniform(IncrementLaw):
    """Uniform law on the box ``[low, high]``."""

    low: tuple[float, ...]
    high: tuple[float, ...]
    kind: ClassVar[str] = "uniform"

    def __post_init__(self) -> None:
        object.__setattr__(self, "low", _vec(self.low))
        object.__setattr__(self, "high", _vec(self.high))
        if len(self.low) != len(self.high):
            raise ValueError("low and high must have the same dimension")
        if any(h <= l for l, h in zip(self.low, self.high)):
            raise ValueError("uniform box needs high > low on every axis")

    @property
    def dim(self):
        return len(self.low)

    def draw(self, rng, count):
        lo, hi = np.array(self.low), np.array(self.high)
        return lo + (hi - lo) * rng.random((count, self.dim))

    def cf(self, z):
        z = _as_points(z, self.dim)
        lo, hi = np.array(self.low), np.array(self.high)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        # sinc(x) = sin(pi x)/(pi x)
        return np.prod(np.exp(1j * z * mid) * np.sinc(z * half / np.pi), axis=-1)

    @property
    def on_positive_orthant(self):
        return min(self.low) >= 0.0

    def laplace(self, u):
        if not self.on_positive_orthant:
            super().laplace(u)
        if self.dim != 1:
            raise ValueError("closed-form Laplace transform of |X| only for d = 1 boxes")
        u = np.asarray(u, dtype=float)
        lo, hi = self.low[0], self.high[0]
        w = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.exp(-u * lo) * -np.expm1(-u * w) / (u * w)
        return np.where(u == 0, 1.0, val)

    def log_moment_bound(self):
        lo, hi = np.array(self.low), np.array(self.high)
        second = np.sum((lo**2 + lo * hi + hi**2) / 3.0)
        return math.log(2.0 + math.sqrt(second))

    def support_min_norm(self):
        lo, hi = np.array(self.low), np.array(self.high)
        nearest = np.clip(0.0, lo, hi)
        return float(np.linalg.norm(nearest))

    def to_config(self):
        return {"kind": self.kind, "low": list(self.low), "high": list(self.high)}


@dataclass(frozen=True)
class Gaussian(IncrementLaw):
    mean: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]
    kind: ClassVar[str] = "gaussian"
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        mean = _vec(self.mean)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (len(mean), len(mean)):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of length {len(mean)}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive definite (law must be full)") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in cov))
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def standard(cls, d: int = 1) -> Gaussian:
        return cls(np.zeros(d), np.eye(d))

    @property
    def dim(self):
        return len(self.mean)

    def draw(self, rng, count):
        return np.array(self.mean) + rng.standard_normal((count, self.dim)) @ self._chol.T

    def cf(self, z):
        z = _as_points(z, self.dim)
        cov = np.array(self.cov)
        quad = np.einsum("...i,ij,...j->...", z, cov, z)
        return np.exp(1j * (z @ np.array(self.mean)) - 0.5 * quad)

    def log_moment_bound(self):
        second = float(np.dot(self.mean, self.mean) + np.trace(np.array(self.cov)))
        return math.log(2.0 + math.sqrt(second))

    def to_config(self):
        return {"kind": self.kind, "mean": list(self.mean), "cov": [list(r) for r in self.cov]}


@dataclass(frozen=True)
class PositiveStable(IncrementLaw):
    """One-sided stable law on R_+ normalized by E exp(-uX) = exp(-u**alpha)."""

    alpha: float
    kind: ClassVar[str] = "positive_stable"

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")

    @property
    def dim(self):
        return 1

    def draw(self, rng, count):
        # Kanter's representation of the one-sided stable law
        a = self.alpha
        u = rng.uniform(0.0, np.pi, count)
        e = rng.standard_exponential(count)
        x = np.sin(a * u) / np.sin(u) ** (1.0 / a) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
        return x[:, None]

    def cf(self, z):
        z = _as_points(z, 1)[..., 0]
        # E exp(izX) = exp(-(-iz)^alpha) on the principal branch
        return np.exp(-np.abs(z) ** self.alpha * np.exp(-1j * np.sign(z) * np.pi * self.alpha / 2))

    @property
    def on_positive_orthant(self):
        return True

    def laplace(self, u):
        return np.exp(-np.asarray(u, dtype=float) ** self.alpha)

    def log_moment_bound(self):
        # log(2+x) <= log 2 + (x/2)^p / p, and E X^p = Gamma(1-p/alpha)/Gamma(1-p) for p < alpha
        p = self.alpha / 2.0
        moment = math.gamma(0.5) / math.gamma(1.0 - p)
        return math.log(2.0) + 2.0**-p * moment / p

    def cdf(self, r: Any) -> np.ndarray:
        """Exact CDF; only available for alpha = 1/2 (Levy law 1/(2N^2))."""
        if self.alpha != 0.5:
            raise ValueError("closed-form CDF only for alpha = 1/2")
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, special.erfc(0.5 / np.sqrt(np.maximum(r, 1e-300))), 0.0)

    def to_config(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class Mixture(IncrementLaw):
    weights: tuple[float, ...]
    components: tuple[IncrementLaw, ...]
    kind: ClassVar[str] = "mixture"

    def __post_init__(self) -> None:
        w = _vec(self.weights)
        comps = tuple(self.components)
        if len(w) != len(comps) or not comps:
            raise ValueError("need one weight per component")
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError("mixture components must share a dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0].dim

    def draw(self, rng, count):
        which = rng.choice(len(self.weights), size=count, p=np.array(self.weights))
        out = np.empty((count, self.dim))
        for k, comp in enumerate(self.components):
            sel = np.flatnonzero(which == k)
            if sel.size:
                out[sel] = comp.draw(rng, sel.size)
        return out

    def cf(self, z):
        return sum(w * c.cf(z) for w, c in zip(self.weights, self.components))

    @property
    def atom_at_zero(self):
        return sum(w * c.atom_at_zero for w, c in zip(self.weights, self.components))

    @property
    def on_positive_orthant(self):
        return all(c.on_positive_orthant for w, c in zip(self.weights, self.components) if w > 0)

    def laplace(self, u):
        if not self.on_positive_orthant:
            super().laplace(u)
        return sum(w * c.laplace(u) for w, c in zip(self.weights, self.components))

    def log_moment_bound(self):
        return sum(w * c.log_moment_bound() for w, c in zip(self.weights, self.components))

    def support_min_norm(self):
        return min(c.support_min_norm() for w, c in zip(self.weights, self.components) if w > 0)

    def to_config(self):
        return {
            "kind": self.kind,
            "weights": list(self.weights),
            "components": [c.to_config() for c in self.components],
        }


class LawDescriptor(NamedTuple):
    cf: Callable[[Any], np.ndarray]
    laplace: Callable[[Any], np.ndarray] | None
    atom_at_zero: float


class LogMoment(NamedTuple):
    value: float
    stderr: float
    upper_bound: bool


def sample(law: IncrementLaw, count: int, seed: int) -> np.ndarray:
    """``count`` iid draws of ``law`` as an array of shape (count, d)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return law.draw(generator(seed, ["sample", law.kind]), int(count))


def log_moment(law: IncrementLaw, mode: str = "analytic", count: int = 10**6, seed: int = 0) -> LogMoment:
    """E log(2 + |X|).

    ``mode="analytic"`` gives the exact value for atomic laws and a certified
    upper bound otherwise; ``mode="mc"`` gives a Monte Carlo estimate with its
    standard error.
    """
    if mode == "analytic":
        exact = isinstance(law, (PointMass, BernoulliScaled))
        return LogMoment(law.log_moment_bound(), 0.0, not exact)
    if mode == "mc":
        x = sample(law, count, seed)
        vals = np.log(2.0 + np.linalg.norm(x, axis=1))
        return LogMoment(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(count)), False)
    raise ValueError(f"unknown mode {mode!r}")


def cf_exact(law: IncrementLaw, z: Any) -> np.ndarray:
    return law.cf(z)


def laplace_exact(law: IncrementLaw, u: Any) -> np.ndarray:
    """E exp(-u |X|) for a law on R_+^d."""
    if not law.on_positive_orthant:
        raise ValueError(f"{law.kind} is not supported on R_+^d")
    if np.any(np.asarray(u) < 0):
        raise ValueError("u must be nonnegative")
    return law.laplace(u)


def describe(law: IncrementLaw) -> LawDescriptor:
    lap = (lambda u: laplace_exact(law, u)) if law.on_positive_orthant else None
    return LawDescriptor(law.cf, lap, law.atom_at_zero)


_FIELDS: dict[str, tuple[type[IncrementLaw], tuple[str, ...]]] = {
    "point_mass": (PointMass, ("c",)),
    "bernoulli": (BernoulliScaled, ("lam", "v")),
    "exponential": (Exponential, ("rate",)),
    "uniform": (Uniform, ("low", "high")),
    "gaussian": (Gaussian, ("mean", "cov")),
    "positive_stable": (PositiveStable, ("alpha",)),
    "mixture": (Mixture, ("weights", "components")),
}


def law_from_config(cfg: Mapping[str, Any]) -> IncrementLaw:
    """Build a full law from a config mapping; see ``_law_from_config`` for field names."""
    return require_full(_law_from_config(cfg))


def _law_from_config(cfg: Mapping[str, Any]) -> IncrementLaw:
    """Build a law from a mapping with a ``kind`` discriminator.

    Field names per kind::

        point_mass:      c
        bernoulli:       lam, v
        exponential:     rate
        uniform:         low, high
        gaussian:        mean, cov
        positive_stable: alpha
        mixture:         weights, components (list of law mappings)
    """
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in _FIELDS:
        raise ValueError(f"unknown law kind {kind!r}; expected one of {sorted(_FIELDS)}")
    cls, names = _FIELDS[kind]
    unknown = set(cfg) - set(names)
    missing = set(names) - set(cfg)
    if unknown or missing:
        raise ValueError(f"law {kind!r}: unknown keys {sorted(unknown)}, missing keys {sorted(missing)}")
    if kind == "mixture":
        cfg["components"] = tuple(_law_from_config(c) for c in cfg["components"])
    return cls(**cfg)
