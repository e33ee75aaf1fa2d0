"""Escape-rate machinery for shift selfsimilar sequences: gauges, small-ball
CDFs, the series classifier for the liminf constant, dominated variation,
staircase (type-A) gauges, K_W and empirical liminf curves."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Literal, NamedTuple

import numpy as np
from scipy import integrate, special

from .distributions import IncrementLaw, Mixture, PointMass, sample
from .sequences import PathEnsemble, PathSample

Verdict = Literal["converges", "diverges", "undecided"]
DVVerdict = Literal["yes", "no", "undecided"]
TypeLabel = Literal["A", "B", "undecided"]

LOG2 = math.log(2.0)


# ---------------------------------------------------------------- gauges

@dataclass(frozen=True)
class Gauge:
    """Positive nonincreasing sequence g(n) = scale * base(n) for n >= n0."""

    def base_log(self, logn: np.ndarray) -> np.ndarray:
        """log of the unscaled gauge at n = exp(logn)."""
        raise NotImplementedError

    @property
    def n0(self) -> int:
        return 2

    @property
    def domain_end(self) -> float:
        return math.inf

    def base(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        self._check_domain(n)
        return np.exp(self.base_log(np.log(n)))

    def __call__(self, n) -> np.ndarray:
        return self.scale * self.base(n)

    def scaled(self, c: float) -> Gauge:
        if not c > 0:
            raise ValueError("gauge scale must be positive")
        return replace(self, scale=self.scale * c)

    def _check_domain(self, n: np.ndarray) -> None:
        if np.any(n < self.n0) or np.any(n >= self.domain_end):
            raise ValueError(f"gauge defined on [{self.n0}, {self.domain_end}) only")

    def check_decreasing(self, upto: int = 10**5) -> None:
        n = np.arange(self.n0, int(min(upto, self.domain_end)))
        v = self.base(n)
        if not np.all(v > 0):
            raise ValueError("gauge must be positive")
        if np.any(np.diff(v) > 0):
            raise ValueError("gauge must be nonincreasing")

    def to_config(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLog(Gauge):
    """g(n) = n^-p (log n)^-q."""

    p: float
    q: float = 0.0
    scale: float = 1.0
    start: int = 2

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.start < 2:
            raise ValueError("PowerLog gauges start at n >= 2")
        if self.p < 0 or (self.p == 0 and self.q < 0):
            raise ValueError(f"n^-{self.p} (log n)^-{self.q} is not eventually decreasing")
        # d/dn log g < 0  <=>  p log n + q > 0
        if self.q < 0 and self.p * math.log(self.start) + self.q <= 0:
            raise ValueError(f"PowerLog({self.p}, {self.q}) increases near n = {self.start}; raise start")

    @property
    def n0(self) -> int:
        return self.start

    def base_log(self, logn):
        logn = np.asarray(logn, dtype=float)
        out = -self.p * logn
        if self.q:
            out = out - self.q * np.log(logn)
        return out

    def to_config(self):
        return {"kind": "powerlog", "p": self.p, "q": self.q, "scale": self.scale, "start": self.start}


@dataclass(frozen=True)
class LogPower(Gauge):
    """g(n) = (log n)^s with s <= 0."""

    s: float
    scale: float = 1.0
    start: int = 2

    def __post_init__(self) -> None:
        if self.s > 0:
            raise ValueError("LogPower exponent must be <= 0 for a decreasing gauge")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.start < 2:
            raise ValueError("LogPower gauges start at n >= 2")

    @property
    def n0(self) -> int:
        return self.start

    def base_log(self, logn):
        return self.s * np.log(np.asarray(logn, dtype=float))

    def to_config(self):
        return {"kind": "logpower", "s": self.s, "scale": self.scale, "start": self.start}


@dataclass(frozen=True)
class Tabulated(Gauge):
    """g(n) = values[n - start] on a finite index range."""

    values: tuple[float, ...]
    scale: float = 1.0
    start: int = 0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", tuple(float(x) for x in v))
        if v.ndim != 1 or v.size == 0:
            raise ValueError("tabulated gauge needs a nonempty list of values")
        if not np.all(v > 0) or np.any(np.diff(v) > 0):
            raise ValueError("tabulated gauge must be positive and nonincreasing")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def n0(self) -> int:
        return self.start

    @property
    def domain_end(self) -> float:
        return float(self.start + len(self.values))

    def base(self, n):
        n = np.asarray(n)
        self._check_domain(n)
        return np.asarray(self.values)[np.asarray(n, dtype=np.int64) - self.start]

    def base_log(self, logn):
        return np.log(self.base(np.rint(np.exp(logn))))

    def to_config(self):
        return {"kind": "tabulated", "values": list(self.values), "scale": self.scale, "start": self.start}


@dataclass(frozen=True)
class Staircase(Gauge):
    """g(n) = levels[k] for starts[k] <= n < starts[k+1].

    ``starts`` has one more entry than ``levels``; indices are Python ints
    and may be far beyond float range.
    """

    levels: tuple[float, ...]
    starts: tuple[int, ...]
    scale: float = 1.0

    def __post_init__(self) -> None:
        lv = np.asarray(self.levels, dtype=float)
        if len(self.starts) != len(self.levels) + 1 or lv.size == 0:
            raise ValueError("staircase needs len(starts) == len(levels) + 1 >= 2")
        if not np.all(lv > 0) or np.any(np.diff(lv) > 0):
            raise ValueError("staircase levels must be positive and nonincreasing")
        if any(b1 <= b0 for b0, b1 in zip(self.starts, self.starts[1:])):
            raise ValueError("staircase starts must be strictly increasing")

    @property
    def n0(self) -> int:
        return self.starts[0]

    @property
    def domain_end(self) -> float:
        end = self.starts[-1]
        return float(end) if end.bit_length() < 1000 else math.inf

    def gaps(self) -> list[int]:
        return [b1 - b0 for b0, b1 in zip(self.starts, self.starts[1:])]

    def base(self, n):
        n = np.asarray(n, dtype=float)
        self._check_domain(n)
        edges = np.array([float(b) if b.bit_length() < 1000 else math.inf for b in self.starts[1:-1]])
        return np.asarray(self.levels)[np.searchsorted(edges, n, side="right")]

    def base_log(self, logn):
        return np.log(self.base(np.exp(logn)))

    def to_config(self):
        return {"kind": "staircase", "levels": list(self.levels), "starts": [str(b) for b in self.starts],
                "scale": self.scale}


def gauge_from_config(cfg: dict[str, Any]) -> Gauge:
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    table: dict[str, tuple[type, set[str]]] = {
        "powerlog": (PowerLog, {"p", "q", "scale", "start"}),
        "logpower": (LogPower, {"s", "scale", "start"}),
        "tabulated": (Tabulated, {"values", "scale", "start"}),
        "constant": (PowerLog, {"scale"}),
    }
    if kind not in table:
        raise ValueError(f"unknown gauge kind {kind!r}; expected one of {sorted(table)}")
    cls, allowed = table[kind]
    extra = set(cfg) - allowed
    if extra:
        raise ValueError(f"unknown keys for gauge {kind}: {sorted(extra)}")
    if kind == "constant":
        return PowerLog(0.0, 0.0, scale=float(cfg.get("scale", 1.0)))
    if kind == "tabulated":
        cfg["values"] = tuple(cfg["values"])
    return cls(**cfg)


# ---------------------------------------------------------- small balls

@dataclass(frozen=True, eq=False)
class SmallBallCDF:
    """F(r) = P(|W(0)| <= r), analytic or empirical.

    ``log_of_log`` (optional) maps log r to log F(r) without underflow.
    ``resolution`` is the smallest radius at which an empirical F is
    trusted (0 for analytic F).
    """

    F: Callable[[np.ndarray], np.ndarray]
    log_of_log: Callable[[np.ndarray], np.ndarray] | None = None
    source: Literal["analytic", "empirical"] = "analytic"
    count: int = 0
    resolution: float = 0.0
    label: str = ""

    def __call__(self, r) -> np.ndarray:
        return self.F(np.asarray(r, dtype=float))

    def log_at_log(self, lr) -> np.ndarray:
        lr = np.asarray(lr, dtype=float)
        if self.log_of_log is not None:
            return self.log_of_log(lr)
        with np.errstate(divide="ignore"):
            return np.log(self.F(np.exp(lr)))

    def log(self, r) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.log_at_log(np.log(np.asarray(r, dtype=float)))

    @classmethod
    def power(cls, beta: float, coef: float = 1.0) -> SmallBallCDF:
        """F(r) = min(1, coef r^beta)."""
        return cls(lambda r: np.minimum(1.0, coef * r**beta),
                   lambda lr: np.minimum(0.0, math.log(coef) + beta * lr), label=f"power({beta})")

    @classmethod
    def exp_inverse(cls, c: float = 1.0, power: float = 0.0) -> SmallBallCDF:
        """F(r) = exp(-c/r) r^power (clipped at 1)."""
        return cls(lambda r: np.minimum(1.0, np.exp(-c / r) * r**power),
                   lambda lr: np.minimum(0.0, -c * np.exp(-lr) + power * lr), label=f"exp(-{c}/r)r^{power}")

    @classmethod
    def stable_half(cls) -> SmallBallCDF:
        """P(S <= r) = erfc(1/(2 sqrt r)) for the one-sided 1/2-stable law
        with E exp(-uS) = exp(-sqrt u)."""
        return cls(lambda r: special.erfc(0.5 / np.sqrt(r)),
                   lambda lr: LOG2 + special.log_ndtr(-np.exp(-0.5 * lr) / math.sqrt(2.0)),
                   label="stable(1/2)")

    @classmethod
    def empirical(cls, samples, min_hits: int = 10) -> SmallBallCDF:
        x = np.asarray(samples, dtype=float)
        norms = np.sort(np.abs(x) if x.ndim == 1 else np.linalg.norm(x.reshape(len(x), -1), axis=1))
        n = norms.size
        res = float(norms[min(min_hits, n) - 1])
        return cls(lambda r: np.searchsorted(norms, r, side="right") / n, None, "empirical", n, res,
                   f"empirical({n})")


# ------------------------------------------------- dominated variation

@dataclass(frozen=True)
class DominatedVariationReport:
    verdict: DVVerdict
    r: np.ndarray
    log_ratio: np.ndarray
    median_log_ratio: float
    diagnostic: str = ""

    @property
    def ratio(self) -> np.ndarray:
        return np.exp(self.log_ratio)


def dominated_variation_test(F: SmallBallCDF, r_grid=None, r_min: float = 1e-4,
                             per_decade: int = 10) -> DominatedVariationReport:
    """Ratio curve R(r) = F(2r)/F(r) on a decreasing grid.

    "yes" if the largest R over the smallest decade is within 1.5x the
    median over the grid, "no" if it exceeds 10x the median, undecided
    otherwise or when F is not resolved down to the grid's end.  Ratios are
    handled in logs so that e.g. exp(-1/r) does not underflow.
    """
    if r_grid is None:
        decades = math.log10(0.5 / r_min)
        r_grid = np.geomspace(0.5, r_min, int(math.ceil(decades * per_decade)) + 1)
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size < 3 or np.any(np.diff(r) >= 0) or r[-1] <= 0:
        raise ValueError("r-grid must be positive and strictly decreasing with at least 3 points")
    lo, hi = F.log(r), F.log(2 * r)
    nan = np.full(r.size, np.nan)
    if F.source == "empirical" and r[-1] < F.resolution:
        return DominatedVariationReport("undecided", r, nan, math.nan,
                                        f"empirical resolution {F.resolution:.3g} exhausted above r_min {r[-1]:.3g}")
    if not np.all(np.isfinite(lo)):
        return DominatedVariationReport("undecided", r, nan, math.nan, "F vanishes on the grid")
    lr = hi - lo
    med = float(np.median(lr))
    tail = lr[r <= 10 * r[-1]]
    top = float(np.max(tail))
    if top <= med + math.log(1.5):
        v: DVVerdict = "yes"
    elif top > med + math.log(10.0):
        v = "no"
    else:
        v = "undecided"
    return DominatedVariationReport(v, r, lr, med)


# ---------------------------------------------------- series classifier

@dataclass(frozen=True)
class ClassifierReport:
    C_low: float
    C_high: float
    per_delta: tuple[tuple[float, Verdict], ...]
    dominated_variation: DVVerdict
    type_label: TypeLabel
    horizon: int
    growth: tuple[float, ...]
    block_positions: np.ndarray = field(repr=False)
    log_partial_sums: np.ndarray = field(repr=False)
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.C_low <= self.C_high:
            raise AssertionError(f"C bracket inverted: [{self.C_low}, {self.C_high}]")
        verdicts = [v for _, v in self.per_delta]
        if "converges" in verdicts and "diverges" in verdicts:
            last_conv = max(i for i, v in enumerate(verdicts) if v == "converges")
            first_div = min(i for i, v in enumerate(verdicts) if v == "diverges")
            if first_div < last_conv:
                raise AssertionError("classifier verdicts are not monotone in delta")

    @property
    def verdicts(self) -> list[Verdict]:
        return [v for _, v in self.per_delta]

    @property
    def undecided(self) -> bool:
        return self.type_label == "undecided" or all(v == "undecided" for v in self.verdicts)

    def to_json(self) -> dict[str, Any]:
        return {
            "C_low": self.C_low,
            "C_high": "inf" if math.isinf(self.C_high) else self.C_high,
            "per_delta": [{"delta": d, "verdict": v, "growth": g}
                          for (d, v), g in zip(self.per_delta, self.growth)],
            "dominated_variation": self.dominated_variation,
            "type_label": self.type_label,
            "horizon": self.horizon,
            "diagnostics": list(self.diagnostics),
        }


_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def _logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return special.logsumexp(x, axis=axis)


def _blocks_analytic(F: SmallBallCDF, g: Gauge, log_delta: np.ndarray, horizon: int, x_max: float,
                     log_weight: Callable | None = None):
    """Exact head sum over [n0, N) and quadrature over dyadic blocks
    [N 2^j, N 2^(j+1)) in the variable x = log n."""
    lw = log_weight if log_weight is not None else np.zeros_like
    logn = np.log(np.arange(g.n0, horizon, dtype=float))
    base = g.base_log(logn) + math.log(g.scale)
    head = _logsumexp(F.log_at_log(log_delta[:, None] + base[None, :]) + lw(logn)[None, :], axis=1)
    x0 = math.log(horizon)
    count = max(int((x_max - x0) / LOG2), 4)
    starts = x0 + LOG2 * np.arange(count)
    nodes = starts[:, None] + LOG2 * _GL_T[None, :]
    gb = g.base_log(nodes) + math.log(g.scale)
    vals = (F.log_at_log(log_delta[:, None, None] + gb[None]) + nodes[None] + np.log(LOG2 * _GL_W)
            + lw(nodes)[None])
    blocks = _logsumexp(vals, axis=2)
    # the smallest radius probed by block j is delta g(N 2^(j+1))
    r_end = log_delta[:, None] + g.base_log(starts + LOG2)[None, :] + math.log(g.scale)
    return head, blocks, starts + LOG2 / 2, r_end


def _blocks_tabulated(F: SmallBallCDF, g: Tabulated, log_delta: np.ndarray, horizon: int):
    end = int(g.domain_end)
    if end <= 2 * max(horizon, 1):
        raise ValueError("tabulated gauge too short for the requested horizon")
    n = np.arange(g.n0, end)
    logv = np.log(np.asarray(g.values)) + math.log(g.scale)
    terms = F.log_at_log(log_delta[:, None] + logv[None, :])
    head = _logsumexp(terms[:, n < horizon], axis=1)
    edges = [horizon]
    while edges[-1] * 2 <= end:
        edges.append(edges[-1] * 2)
    blocks = np.stack([_logsumexp(terms[:, (n >= lo) & (n < hi)], axis=1)
                       for lo, hi in zip(edges, edges[1:])], axis=1)
    pos = np.log(np.array(edges[:-1], dtype=float)) + LOG2 / 2
    r_end = log_delta[:, None] + np.log(g.base(np.array(edges[1:]) - 1))[None, :] + math.log(g.scale)
    return head, blocks, pos, r_end


def _blocks_staircase(F: SmallBallCDF, g: Staircase, log_delta: np.ndarray):
    logv = np.log(np.asarray(g.levels)) + math.log(g.scale)
    loggap = np.array([math.log(x) for x in g.gaps()])
    blocks = F.log_at_log(log_delta[:, None] + logv[None, :]) + loggap[None, :]
    head = np.full(log_delta.size, -np.inf)
    # each step is one epoch; positions are step indices 1..K
    pos = np.exp(np.arange(1, len(g.levels) + 1, dtype=float))
    r_end = log_delta[:, None] + logv[None, :]
    return head, blocks, np.log(pos), r_end


def _judge(logd: np.ndarray, pos: np.ndarray, min_blocks: int = 4) -> tuple[Verdict, float]:
    """Verdict from block increments log(Delta_j) at positions L_j = pos_j.

    growth exponent gamma = 1 + slope of log Delta against log L over the
    upper half of the log L range.
    """
    finite = np.isfinite(logd)
    if finite.sum() == 0:
        return "converges", -math.inf
    logL = np.log(pos)
    upper = logL >= 0.5 * (logL[0] + logL[-1])
    late = upper & finite
    if upper.sum() and not np.any(late):
        return "converges", -math.inf
    if late.sum() < min_blocks:
        return "undecided", math.nan
    gamma = 1.0 + float(np.polyfit(logL[late], logd[late], 1)[0])
    if gamma > 0.1:
        return "diverges", gamma
    seq = logd[upper]
    seq = np.where(np.isfinite(seq), seq, -np.inf)
    with np.errstate(invalid="ignore"):
        nonincreasing = bool(np.all((np.diff(seq) <= 1e-9) | ~np.isfinite(seq[1:])))
    small = not np.isfinite(seq[-1]) or seq[-1] < math.log(1e-6)
    if (gamma < -0.1 or small) and nonincreasing:
        return "converges", gamma
    return "undecided", gamma


def sum_classifier(F: SmallBallCDF, g: Gauge, deltas=None, horizon: int = 10_000,
                   x_max: float = 600.0, dv: DominatedVariationReport | None = None,
                   log_weight: Callable[[np.ndarray], np.ndarray] | None = None) -> ClassifierReport:
    """Decide convergence of sum_n F(delta g(n)) for each delta on a grid.

    Partial sums are exact up to the horizon N and extended over dyadic
    blocks [N 2^j, N 2^(j+1)) (up to log n = ``x_max``) by Gauss-Legendre
    quadrature in log n; staircase gauges use one block per step.  The
    verdict per delta is "diverges" when the block increments do not decay
    (growth exponent > 0.1), "converges" when they decay (exponent < -0.1
    or last increment < 1e-6, with nonincreasing tail), else "undecided".
    The liminf constant C lies between the largest converging and the
    smallest diverging delta.  ``log_weight`` (analytic gauges only) adds
    log w(n), given as a function of log n, to every term.
    """
    deltas = np.geomspace(1e-2, 1e2, 9) if deltas is None else np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or np.any(deltas <= 0) or np.any(np.diff(deltas) <= 0):
        raise ValueError("delta grid must be positive and strictly increasing")
    if horizon < 10_000 and not isinstance(g, Staircase):
        raise ValueError("horizon must be at least 1e4")
    ld = np.log(deltas)
    if log_weight is not None and isinstance(g, (Staircase, Tabulated)):
        raise ValueError("weighted sums are supported on analytic gauges only")
    if isinstance(g, Staircase):
        head, blocks, pos, r_end = _blocks_staircase(F, g, ld)
    elif isinstance(g, Tabulated):
        head, blocks, pos, r_end = _blocks_tabulated(F, g, ld, horizon)
    else:
        head, blocks, pos, r_end = _blocks_analytic(F, g, ld, horizon, x_max, log_weight)

    diagnostics: list[str] = []
    verdicts: list[Verdict] = []
    growth: list[float] = []
    for i in range(deltas.size):
        logd = blocks[i]
        keep = np.ones(logd.size, dtype=bool)
        if F.source == "empirical":
            keep = r_end[i] >= math.log(F.resolution)
        v, gam = _judge(logd[keep], pos[keep])
        if F.source == "empirical" and not keep.all():
            if v == "converges":
                v = "undecided"
            diagnostics.append(f"delta={deltas[i]:.4g}: empirical F unresolved below r={F.resolution:.3g}; "
                               f"{int((~keep).sum())} of {keep.size} blocks dropped")
        verdicts.append(v)
        growth.append(gam)

    # monotonicity in delta: a converging delta above a diverging one is a conflict
    if "converges" in verdicts and "diverges" in verdicts:
        last_conv = max(i for i, v in enumerate(verdicts) if v == "converges")
        first_div = min(i for i, v in enumerate(verdicts) if v == "diverges")
        if first_div < last_conv:
            for i in range(first_div, last_conv + 1):
                if verdicts[i] != "undecided":
                    verdicts[i] = "undecided"
            diagnostics.append("non-monotone verdicts in delta downgraded to undecided")

    conv = [d for d, v in zip(deltas, verdicts) if v == "converges"]
    div = [d for d, v in zip(deltas, verdicts) if v == "diverges"]
    c_low = float(max(conv)) if conv else 0.0
    c_high = float(min(div)) if div else math.inf

    if dv is None:
        dv = dominated_variation_test(F, r_min=max(1e-4, 2 * F.resolution) if F.source == "empirical" else 1e-4)
    label: TypeLabel = {"yes": "B", "no": "A"}.get(dv.verdict, "undecided")  # type: ignore[assignment]
    cum = np.concatenate([head[:, None], blocks], axis=1)
    log_partial = np.logaddexp.accumulate(cum, axis=1)
    return ClassifierReport(c_low, c_high, tuple(zip(deltas.tolist(), verdicts)), dv.verdict, label,
                            horizon, tuple(growth), pos, log_partial, tuple(diagnostics))


# ----------------------------------------------------- type-A staircase

class TypeAGaugeError(ValueError):
    pass


class TypeAAudit(NamedTuple):
    ratio_ok: tuple[bool, ...]
    gap_ok: tuple[bool, ...]
    levels_ok: bool
    starts_ok: bool

    @property
    def passed(self) -> bool:
        return all(self.ratio_ok) and all(self.gap_ok) and self.levels_ok and self.starts_ok


def _floor_exp(y: float) -> int:
    """floor(exp(y)) as a Python int, for y possibly far beyond float range."""
    if y < 700:
        return math.floor(math.exp(y))
    k = math.floor(y / LOG2) - 60
    return math.floor(math.exp(y - k * LOG2)) << k


def _gap(logf: float) -> int:
    """Integer gap with 1/2 <= F * gap <= 1 (with margin away from both ends
    when F is small)."""
    if logf > -LOG2:
        return 1
    if logf >= -2 * LOG2:
        return math.floor(math.exp(-logf))
    return _floor_exp(math.log(0.75) - logf)


def construct_type_a_gauge(F: SmallBallCDF, a: float, r0: float = 1.0, steps: int = 10,
                           max_grid: int = 5000, max_log_gap: float = 5e6) -> Staircase:
    """Staircase gauge g(n) = a_k on [b_k, b_{k+1}) with

        F(a_k / a) <= 2^-k F(a_k),   a_{k+1} < a_k / a,
        1/2 <= F(a_k) (b_{k+1} - b_k) <= 1,   b_1 = 0.

    The a_k are the first admissible points of the grid r0 a^-m, taken at
    least two grid steps apart.  Failure to find ``steps`` levels means F
    looks dominated-varying at this resolution.
    """
    if not a > 1:
        raise ValueError("a must exceed 1")
    la, lr0 = math.log(a), math.log(r0)
    floor_lr = math.log(F.resolution) if F.source == "empirical" else -math.inf
    levels: list[float] = []
    gaps: list[int] = []
    m = 0
    for k in range(1, steps + 1):
        found = False
        while m < max_grid:
            lr_m = lr0 - m * la
            if lr_m - la < floor_lr:
                break
            lf_m = float(F.log_at_log(lr_m))
            if not math.isfinite(lf_m):
                raise TypeAGaugeError(f"F vanishes at r={math.exp(lr_m):.3g}; the escape constant is positive")
            if float(F.log_at_log(lr_m - la)) <= lf_m - k * LOG2:
                found = True
                break
            m += 1
        if not found:
            raise TypeAGaugeError(
                f"no admissible level for k={k} within the grid: F appears to be of dominated variation")
        if -lf_m > max_log_gap:
            raise TypeAGaugeError(f"step {k} would need a gap of exp({-lf_m:.3g}) indices")
        levels.append(r0 * a ** -m if m * la < 700 else math.exp(lr_m))
        gaps.append(_gap(lf_m))
        m += 2
    starts = [0]
    for gp in gaps:
        starts.append(starts[-1] + gp)
    return Staircase(tuple(levels), tuple(starts))


def audit_type_a_gauge(g: Staircase, F: SmallBallCDF, a: float, slack: float = 1e-12) -> TypeAAudit:
    """Re-evaluate the defining inequalities of a staircase gauge from F."""
    ls = math.log1p(slack)
    ratio_ok, gap_ok = [], []
    for k, (lev, gp) in enumerate(zip(g.levels, g.gaps()), start=1):
        lf = float(F.log(lev))
        ratio_ok.append(bool(float(F.log(lev / a)) <= lf - k * LOG2 + ls))
        prod = lf + math.log(gp)
        gap_ok.append(bool(-LOG2 - ls <= prod <= ls))
    levels_ok = all(l1 < l0 / a for l0, l1 in zip(g.levels, g.levels[1:]))
    starts_ok = g.starts[0] == 0 and all(b1 > b0 for b0, b1 in zip(g.starts, g.starts[1:]))
    return TypeAAudit(tuple(ratio_ok), tuple(gap_ok), levels_ok, starts_ok)


# ------------------------------------------------------------------ K_W

def _kw_checks(r: float, lam: float, a: float) -> None:
    if not 0 < lam < 1:
        raise ValueError(f"atom at zero must lie in (0, 1), got {lam}")
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    if not a > 1:
        raise ValueError("a must exceed 1")


def k_w(r: float, laplace: Callable, lam: float, a: float, method: Literal["quad", "trapezoid"] = "quad",
        points: int = 10**6) -> float:
    """K_W(r) = r^(-log lam / log a) exp( int_1^(1/r) (log L(u) - log lam) / (u log a) du ).

    The integral is taken in t = log u (adaptive quadrature, relative error
    1e-10) or by a ``points``-node trapezoid rule on the same variable.
    """
    _kw_checks(r, lam, a)
    la, llam = math.log(a), math.log(lam)
    upper = -math.log(r)
    if upper == 0:
        return 1.0

    def integrand(t):
        return np.log(laplace(np.exp(t))) - llam

    if method == "quad":
        val, _ = integrate.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-11, limit=1000)
    elif method == "trapezoid":
        t = np.linspace(0.0, upper, points)
        val = float(integrate.trapezoid(integrand(t), t))
    else:
        raise ValueError(f"unknown method {method!r}")
    return math.exp(-llam / la * math.log(r) + val / la)


class KWFunction:
    """Tabulated log K_W on log r in [-t_max, 0], for repeated evaluation.

    Uses cumulative Simpson integration on a fine grid in t = log u; beyond
    t_max the integrand is taken as 0.
    """

    def __init__(self, laplace: Callable, lam: float, a: float, t_max: float = 700.0, step: float = 1e-3):
        _kw_checks(1.0, lam, a)
        self.lam, self.a = lam, a
        self.index = -math.log(lam) / math.log(a)
        self.t = np.linspace(0.0, t_max, int(round(t_max / step)) + 1)
        with np.errstate(over="ignore"):
            vals = np.log(laplace(np.exp(self.t))) - math.log(lam)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        self.cum = integrate.cumulative_simpson(vals, x=self.t, initial=0.0) / math.log(a)

    def log_at_log(self, lr) -> np.ndarray:
        x = -np.asarray(lr, dtype=float)
        if np.any(x < 0):
            raise ValueError("K_W is tabulated for r <= 1")
        return self.index * np.asarray(lr) + np.interp(x, self.t, self.cum)

    def __call__(self, r) -> np.ndarray:
        return np.exp(self.log_at_log(np.log(np.asarray(r, dtype=float))))

    def small_ball(self) -> SmallBallCDF:
        """min(K_W(r), 1) as a small-ball function."""
        return SmallBallCDF(lambda r: np.minimum(1.0, self(np.minimum(r, 1.0))),
                            lambda lr: np.minimum(0.0, self.log_at_log(np.minimum(lr, 0.0))), label="K_W")


# -------------------------------------------------------------- liminf

@dataclass(frozen=True, eq=False)
class LiminfReport:
    n: np.ndarray
    running: np.ndarray
    schedule: np.ndarray
    at_schedule: np.ndarray
    median: np.ndarray
    low: np.ndarray
    high: np.ndarray

    @property
    def pooled(self) -> float:
        return float(self.median[-1])


def liminf_estimate(paths: PathEnsemble | PathSample, g: Gauge, min_horizon: int = 1000) -> LiminfReport:
    """Running minima m(N) = min_{n <= N} |W(n)| / (a^n g(n)) per path.

    Y paths are accepted directly (|Y(n)| = |W(n)|/a^n), which avoids
    overflow at long horizons.  Ratios are formed with the unscaled gauge
    and divided by its scale afterwards, so rescaling g rescales every
    value exactly.  The envelope is the 10%-90% quantile band.
    """
    vals = paths.values if isinstance(paths, PathEnsemble) else paths.values[None]
    p = paths.params
    if p.n_max < min_horizon:
        raise ValueError(f"window upper end {p.n_max} below the required horizon {min_horizon}")
    n = p.window
    keep = n >= max(g.n0, 1, p.n_min)
    if np.isfinite(g.domain_end):
        keep &= n < g.domain_end
    n = n[keep]
    norm = np.linalg.norm(vals[:, keep], axis=-1)
    if paths.kind == "W":
        p.check_overflow()
        norm = norm / p.a ** n.astype(float)
    ratio = norm / g.base(n)[None, :]
    running = np.minimum.accumulate(ratio, axis=1) / g.scale
    sched = [1 << k for k in range(0, int(n[-1]).bit_length()) if (1 << k) >= n[0]]
    if sched[-1] != n[-1]:
        sched.append(int(n[-1]))
    sched_arr = np.array(sched)
    at = running[:, sched_arr - n[0]]
    q = np.quantile(at, [0.1, 0.5, 0.9], axis=0)
    return LiminfReport(n, running, sched_arr, at, q[1], q[0], q[2])


# ------------------------------------------------------ escape constant

class EscapeConstant(NamedTuple):
    low: float
    high: float
    exact: bool


def _one_signed_extremes(law: IncrementLaw) -> tuple[float, float] | None:
    """(min, max) of the support for d = 1 laws when cheaply known."""
    from .distributions import BernoulliScaled, Exponential, Gaussian, PositiveStable, Uniform

    if isinstance(law, PointMass):
        return law.c[0], law.c[0]
    if isinstance(law, BernoulliScaled):
        pts = [law.v[0]] + ([0.0] if law.lam > 0 else [])
        return min(pts), max(pts)
    if isinstance(law, Uniform):
        return law.low[0], law.high[0]
    if isinstance(law, (Exponential, PositiveStable)):
        return 0.0, math.inf
    if isinstance(law, Gaussian):
        return -math.inf, math.inf
    if isinstance(law, Mixture):
        ext = [_one_signed_extremes(c) for w, c in zip(law.weights, law.components) if w > 0]
        if any(e is None for e in ext):
            return None
        return min(e[0] for e in ext), max(e[1] for e in ext)
    return None


def escape_constant(law: IncrementLaw, a: float) -> EscapeConstant:
    """D = inf |y| over the support of W(0) = sum_{j <= 0} a^j X_j.

    Exact when 0 is in the support of the increments (D = 0), for point
    masses, and for one-signed laws on the line; a bracket otherwise.
    """
    geo = a / (a - 1.0)
    m = law.support_min_norm()
    if m == 0.0:
        return EscapeConstant(0.0, 0.0, True)
    if isinstance(law, PointMass):
        return EscapeConstant(m * geo, m * geo, True)
    if law.dim == 1:
        ext = _one_signed_extremes(law)
        if ext is not None and (ext[0] > 0 or ext[1] < 0):
            return EscapeConstant(m * geo, m * geo, True)
        return EscapeConstant(0.0, m * geo, False)
    if law.on_positive_orthant:
        # |sum a^j x_j| >= |sum a^j x_j|_1 / sqrt d >= geo * m / sqrt d on R_+^d
        return EscapeConstant(m * geo / math.sqrt(law.dim), m * geo, False)
    return EscapeConstant(0.0, m * geo, False)


# --------------------------------------------- atoms and type-A gauges

@dataclass(frozen=True)
class AtomEscapeReport:
    atom_at_zero: float
    type_a_exists: bool
    escape_constant: EscapeConstant
    caveat: str
    kw_index: float | None
    kw_values: tuple[tuple[float, float], ...]
    classifier: ClassifierReport | None

    def to_json(self) -> dict[str, Any]:
        return {
            "atom_at_zero": self.atom_at_zero,
            "type_a_exists": self.type_a_exists,
            "escape_constant": self.escape_constant._asdict(),
            "caveat": self.caveat,
            "kw_index": self.kw_index,
            "kw_values": [{"r": r, "K_W": v} for r, v in self.kw_values],
            "classifier": self.classifier.to_json() if self.classifier else None,
        }


def _laplace_for(law: IncrementLaw, count: int = 200_000, seed: int = 0) -> Callable:
    try:
        law.laplace(1.0)
        return law.laplace
    except ValueError:
        norms = np.linalg.norm(sample(law, count, seed), axis=1)

        def mc(u):
            u = np.asarray(u, dtype=float)
            return np.exp(-np.multiply.outer(u, norms)).mean(axis=-1)

        return mc


def proposition_1_1_check(law: IncrementLaw, a: float, gauge: Gauge | None = None,
                          deltas=None, radii: Sequence[float] = tuple(2.0 ** -k for k in (0, 5, 10, 20, 40))
                          ) -> AtomEscapeReport:
    """Whether a type-A gauge exists for a law on R_+^d: it does exactly when
    the increment has no atom at 0.  With an atom, K_W is evaluated and the
    series classifier is run on min(K_W, 1) (default gauge n^(-1/index))."""
    if not law.on_positive_orthant:
        raise ValueError(f"{law.kind} law is not supported on R_+^d")
    lam = float(law.atom_at_zero)
    D = escape_constant(law, a)
    exists = lam == 0.0
    caveat = ""
    if D.low > 0 or (D.exact and D.high > 0):
        caveat = (f"escape constant D = {D.high:.12g} > 0: |W(n)|/a^n has liminf D and the constant "
                  "gauge g = D is the type-A gauge")
    if lam == 0.0 or lam == 1.0:
        return AtomEscapeReport(lam, exists, D, caveat, None, (), None)
    lap = _laplace_for(law)
    index = -math.log(lam) / math.log(a)
    kw_vals = tuple((float(r), k_w(float(r), lap, lam, a)) for r in radii)
    kwf = KWFunction(lap, lam, a)
    g = gauge if gauge is not None else PowerLog(1.0 / index)
    report = sum_classifier(kwf.small_ball(), g, deltas)
    return AtomEscapeReport(lam, exists, D, caveat, index, kw_vals, report)
