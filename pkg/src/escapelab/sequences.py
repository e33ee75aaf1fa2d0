"""Shift a-selfsimilar additive sequences W and stationary OU-type sequences Y
built from iid increments by their series representations

    W(n) = sum_{j <= n} a^j X_j,        Y(n) = sum_{j <= n} a^(j-n) X_j,

truncated at ``j >= n_min - M``.  The two are related by W(n) = a^n Y(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import signal, stats

from .distributions import IncrementLaw, require_full
from .rng import derive_seed, generator

Kind = Literal["W", "Y"]

OVERFLOW_LIMIT = 1e300
DEFAULT_REL_TRUNCATION = 1e-9
QUANTILE = 0.999
BLOCK = 4096


@dataclass(frozen=True)
class SequenceParams:
    a: float
    d: int = 1
    n_min: int = 0
    n_max: int = 0

    def __post_init__(self) -> None:
        if not self.a > 1:
            raise ValueError(f"scaling factor a must exceed 1, got {self.a}")
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.n_min > self.n_max:
            raise ValueError("window needs n_min <= n_max")

    @property
    def b(self) -> float:
        return 1.0 / self.a

    @property
    def window(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def check_overflow(self) -> None:
        if self.n_max * math.log(self.a) >= math.log(OVERFLOW_LIMIT):
            raise ValueError(f"a^n_max = {self.a}^{self.n_max} exceeds {OVERFLOW_LIMIT:g}; use Y paths")


@dataclass(frozen=True, eq=False)
class PathSample:
    """One realization over an integer window.

    ``values`` has shape (len(window), d).  ``increments`` holds X_j for
    j = n_min - truncation_depth, ..., n_max.
    """

    kind: Kind
    params: SequenceParams
    values: np.ndarray
    increments: np.ndarray
    truncation_depth: int
    truncation_bound: float
    seed: int | None = None
    flagged: bool = False

    @property
    def n(self) -> np.ndarray:
        return self.params.window

    @property
    def a(self) -> float:
        return self.params.a

    @property
    def first_index(self) -> int:
        return self.params.n_min - self.truncation_depth

    def x(self, n: int) -> np.ndarray:
        return self.increments[n - self.first_index]

    def at(self, n: int) -> np.ndarray:
        return self.values[n - self.params.n_min]


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Independent paths sharing params; ``values`` has shape (paths, len, d)."""

    kind: Kind
    params: SequenceParams
    values: np.ndarray
    truncation_depth: int
    truncation_bound: float
    seed: int | None = None
    flagged: bool = False
    increments: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> np.ndarray:
        return self.params.window

    @property
    def a(self) -> float:
        return self.params.a

    def at(self, n: int) -> np.ndarray:
        """All paths at index n, shape (paths, d)."""
        return self.values[:, n - self.params.n_min]

    def path(self, i: int) -> PathSample:
        inc = self.increments[i] if self.increments is not None else np.empty((0, self.params.d))
        return PathSample(self.kind, self.params, self.values[i], inc, self.truncation_depth,
                          self.truncation_bound, self.seed, self.flagged)


def truncation_bound(a: float, depth: int, quantile: float, n_min: int = 0) -> float:
    """Tail-size estimate a^(n_min - M) * a/(a-1) * Q for the dropped W terms."""
    return a ** (n_min - depth) * a / (a - 1.0) * quantile


def default_depth(a: float, quantile: float, rel: float = DEFAULT_REL_TRUNCATION) -> int:
    """Smallest M with a^-M * a/(a-1) * Q < rel."""
    if quantile <= 0:
        return 0
    m = math.log(quantile * a / ((a - 1.0) * rel)) / math.log(a)
    return max(0, math.floor(m) + 1)


def _depth_and_bound(params, law, depth, tolerance):
    q = law.abs_quantile(QUANTILE)
    if depth is None:
        depth = default_depth(params.a, q)
    if depth < 0:
        raise ValueError("truncation depth must be >= 0")
    bound_w = truncation_bound(params.a, depth, q, params.n_min)
    flagged = tolerance is not None and bound_w > tolerance
    return depth, q, bound_w, flagged


def _series(kind: Kind, a: float, first: int, x: np.ndarray, n_min: int) -> np.ndarray:
    """Evaluate the truncated series along axis -2 of ``x`` and keep the window."""
    j = np.arange(first, first + x.shape[-2])
    if kind == "W":
        vals = np.cumsum(a ** j.astype(float)[:, None] * x, axis=-2)
    else:
        vals = signal.lfilter([1.0], [1.0, -1.0 / a], x, axis=-2)
    return vals[..., n_min - first:, :]


def _check_law(params: SequenceParams, law: IncrementLaw) -> None:
    if law.dim != params.d:
        raise ValueError(f"law has dimension {law.dim}, params say d = {params.d}")
    require_full(law)


def _build(kind, params, law, depth, seed, tolerance):
    _check_law(params, law)
    if kind == "W":
        params.check_overflow()
    depth, _, bound_w, flagged = _depth_and_bound(params, law, depth, tolerance)
    total = depth + len(params.window)
    x = law.draw(generator(seed, ["path"]), total)
    first = params.n_min - depth
    vals = _series(kind, params.a, first, x, params.n_min)
    bound = bound_w if kind == "W" else bound_w * params.a ** -params.n_min
    return PathSample(kind, params, vals, x, depth, bound, seed, flagged)


def build_w_path(params: SequenceParams, law: IncrementLaw, truncation_depth: int | None = None,
                 seed: int = 0, tolerance: float | None = None) -> PathSample:
    """W(n) = sum_{j = n_min - M}^{n} a^j X_j over the window.

    With ``truncation_depth=None`` the depth is chosen so the dropped tail is
    below 1e-9 * a^n_min.  If ``tolerance`` is given and the reported
    truncation bound exceeds it, the sample is flagged.
    """
    return _build("W", params, law, truncation_depth, seed, tolerance)


def build_y_path(params: SequenceParams, law: IncrementLaw, truncation_depth: int | None = None,
                 seed: int = 0, tolerance: float | None = None) -> PathSample:
    """Y(n) = sum_{j = n_min - M}^{n} a^(j - n) X_j over the window.

    Uses the same increment stream as :func:`build_w_path` for equal
    arguments, so ``a^n Y(n) == W(n)`` up to rounding.
    """
    return _build("Y", params, law, truncation_depth, seed, tolerance)


def _ensemble_block(kind, params, law, depth, seed, block, size, keep_increments):
    rng = generator(derive_seed(seed, ["ensemble", block]))
    total = depth + len(params.window)
    x = law.draw(rng, size * total).reshape(size, total, params.d)
    vals = _series(kind, params.a, params.n_min - depth, x, params.n_min)
    return vals, (x if keep_increments else None)


def build_ensemble(kind: Kind, params: SequenceParams, law: IncrementLaw, count: int,
                   truncation_depth: int | None = None, seed: int = 0,
                   tolerance: float | None = None, keep_increments: bool = False,
                   workers: int = 1) -> PathEnsemble:
    """``count`` independent paths of kind ``kind``.

    Paths are generated in fixed blocks of 4096, block ``k`` drawing from the
    stream derived from ``(seed, "ensemble", k)``; the output is identical for
    any number of workers.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    _check_law(params, law)
    if kind == "W":
        params.check_overflow()
    depth, _, bound_w, flagged = _depth_and_bound(params, law, truncation_depth, tolerance)
    sizes = [min(BLOCK, count - s) for s in range(0, count, BLOCK)]
    jobs = [(kind, params, law, depth, seed, k, size, keep_increments) for k, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ensemble_block_star, jobs))
    else:
        parts = [_ensemble_block(*job) for job in jobs]
    vals = np.concatenate([p[0] for p in parts], axis=0)
    inc = np.concatenate([p[1] for p in parts], axis=0) if keep_increments else None
    bound = bound_w if kind == "W" else bound_w * params.a ** -params.n_min
    return PathEnsemble(kind, params, vals, depth, bound, seed, flagged, inc)


def _ensemble_block_star(job):
    return _ensemble_block(*job)


def w0_samples(law: IncrementLaw, a: float, count: int, seed: int = 0,
               truncation_depth: int | None = None, workers: int = 1) -> np.ndarray:
    """``count`` draws of W(0) (equivalently Y(0)), shape (count, d)."""
    params = SequenceParams(a=a, d=law.dim, n_min=0, n_max=0)
    return build_ensemble("Y", params, law, count, truncation_depth, seed, workers=workers).values[:, 0]


def lamperti(path: PathSample | PathEnsemble) -> PathSample | PathEnsemble:
    """Map W(n) -> a^-n W(n) (a Y path) or Y(n) -> a^n Y(n) (a W path)."""
    p = path.params
    scale = p.a ** (-p.window.astype(float)) if path.kind == "W" else p.a ** p.window.astype(float)
    if path.kind == "Y":
        p.check_overflow()
    new_kind: Kind = "Y" if path.kind == "W" else "W"
    bound = path.truncation_bound * (p.a ** -p.n_min if path.kind == "W" else p.a ** p.n_min)
    return replace(path, kind=new_kind, values=path.values * scale[:, None], truncation_bound=bound)


@dataclass(frozen=True)
class SelfSimilarityReport:
    labels: list[str]
    statistics: np.ndarray
    pvalues: np.ndarray
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.pvalues > self.threshold))


def _ks(x: np.ndarray, y: np.ndarray, tol: float) -> tuple[float, float]:
    # degenerate laws: equal up to the truncation bound means statistic 0
    if np.ptp(x) <= tol and np.ptp(y) <= tol:
        same = abs(float(np.mean(x) - np.mean(y))) <= tol
        return (0.0, 1.0) if same else (1.0, 0.0)
    res = stats.ks_2samp(x, y)
    return float(res.statistic), float(res.pvalue)


def test_shift_selfsimilarity(paths: PathEnsemble, lag: int = 1, level: float = 0.01,
                              directions: int = 8, seed: int = 0) -> SelfSimilarityReport:
    """Two-sample comparison of W(n + lag) against a^lag W(n).

    The ensemble is split in halves so the compared samples are independent.
    Marginals are compared componentwise by Kolmogorov-Smirnov at every
    admissible n; pairs (W(n), W(n+1)) are compared along ``directions``
    fixed random projections.  Pass means every p-value exceeds
    ``level / number_of_tests``.
    """
    if paths.kind != "W":
        raise ValueError("shift selfsimilarity is a property of W paths")
    if len(paths) < 500:
        raise ValueError("need an ensemble of at least 500 paths")
    if lag < 1:
        raise ValueError("lag must be positive")
    n = paths.n
    if len(n) <= lag:
        raise ValueError(f"window of length {len(n)} too short for lag {lag}")
    a, d = paths.a, paths.params.d
    half = len(paths) // 2
    first, second = paths.values[:half], paths.values[half:2 * half]
    scale = a**lag
    tol = 2.0 * scale * paths.truncation_bound + 1e-12
    labels, stat, pv = [], [], []
    for i in range(len(n) - lag):
        for k in range(d):
            s, p = _ks(first[:, i + lag, k], scale * second[:, i, k], tol)
            labels.append(f"n={n[i]},axis={k}")
            stat.append(s)
            pv.append(p)
    if len(n) - lag >= 2:
        dirs = generator(seed, ["ks-directions"]).standard_normal((directions, 2 * d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for i in range(len(n) - lag - 1):
            left = np.concatenate([first[:, i + lag], first[:, i + lag + 1]], axis=1)
            right = scale * np.concatenate([second[:, i], second[:, i + 1]], axis=1)
            for m, u in enumerate(dirs):
                s, p = _ks(left @ u, right @ u, tol * np.abs(u).sum())
                labels.append(f"pair n={n[i]},dir={m}")
                stat.append(s)
                pv.append(p)
    pv = np.array(pv)
    return SelfSimilarityReport(labels, np.array(stat), pv, level / len(pv))


test_shift_selfsimilarity.__test__ = False  # not a pytest test


def ergodic_average(path: PathSample, x, delta: float) -> float:
    """(1/N) sum over the window of 1{|Y(k) - x| <= delta}."""
    if path.kind != "Y":
        raise ValueError("ergodic averages are taken along Y paths")
    if delta <= 0:
        raise ValueError("delta must be positive")
    dist = np.linalg.norm(path.values - np.asarray(x, dtype=float), axis=-1)
    return float(np.mean(dist <= delta))


def log_growth_slope(path: PathSample, upper_half: bool = False) -> float:
    """Least-squares slope of log|W(n)| against n (tends to log a)."""
    if path.kind != "W":
        path = lamperti(path)
    n, v = path.n, np.linalg.norm(path.values, axis=-1)
    if upper_half:
        keep = n >= n[len(n) // 2]
        n, v = n[keep], v[keep]
    return float(np.polyfit(n, np.log(v), 1)[0])
