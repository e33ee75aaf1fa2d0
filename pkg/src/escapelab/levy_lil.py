"""Continuous-time experiments: small balls of the one-sided stable
subordinator, hitting and last-exit times of Brownian motions, the
iterated-logarithm statistics built from them, and the hitting-probability
bound for Levy processes."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Literal, NamedTuple

import numpy as np
from scipy import integrate, optimize, special, stats

from .distributions import PositiveStable, sample
from .escape import Gauge, LogPower, PowerLog, SmallBallCDF, sum_classifier
from .rng import derive_seed, generator

BLOCK = 2048
CANDIDATE_P = 1e-10


# ------------------------------------------------------------ stable laws

class SmallBallFit(NamedTuple):
    exponent: float
    stderr: float
    target: float
    coef: float


@dataclass(frozen=True, eq=False)
class StableSmallBall:
    alpha: float
    r: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    hits: np.ndarray
    excluded: np.ndarray
    fit: SmallBallFit
    count: int
    seed: int

    @property
    def band(self) -> tuple[float, float]:
        return self.fit.target - 0.1, self.fit.target + 0.1

    @property
    def slope_ok(self) -> bool:
        lo, hi = self.band
        return lo <= self.fit.exponent <= hi

    def oracle_z(self) -> np.ndarray:
        """(p_hat - exact)/se at alpha = 1/2, where P(S <= r) = erfc(1/(2 sqrt r))."""
        if self.alpha != 0.5:
            raise ValueError("closed-form small-ball probabilities only for alpha = 1/2")
        exact = special.erfc(0.5 / np.sqrt(self.r))
        se = np.sqrt(exact * (1 - exact) / self.count)
        return (self.p_hat - exact) / se


def stable_small_ball(alpha: float, r_grid=None, count: int = 10**6, seed: int = 0,
                      points: int = 16) -> StableSmallBall:
    """Empirical P(S(1) <= r) for the one-sided alpha-stable law with
    E exp(-uS) = exp(-u^alpha), and a fit of the small-ball exponent kappa in

        -log P(S <= r) = c r^kappa - p log r + k0 + k1 r^-kappa,

    with p = alpha/(2(1-alpha)) held at the one-sided stable prefactor and
    kappa expected at alpha/(alpha-1).  The default grid takes sample
    quantiles at probabilities geomspace(10/count, 0.3, points).  Radii with
    no hits are excluded and flagged.
    """
    if not 0.2 < alpha < 0.8:
        raise ValueError("alpha must lie in (0.2, 0.8) for the small-ball experiment")
    if count < 10**6:
        raise ValueError("count must be at least 1e6")
    x = np.sort(sample(PositiveStable(alpha), count, seed)[:, 0])
    if r_grid is None:
        probs = np.geomspace(10.0 / count, 0.3, points)
        r = np.quantile(x, probs, method="inverted_cdf")
    else:
        r = np.asarray(r_grid, dtype=float)
        if np.any(np.diff(r) <= 0) or np.any(r <= 0):
            raise ValueError("r-grid must be positive and increasing")
    hits = np.searchsorted(x, r, side="right")
    p_hat = hits / count
    se = np.sqrt(p_hat * (1 - p_hat) / count)
    excluded = hits == 0
    keep = ~excluded
    target = alpha / (alpha - 1.0)
    pref = alpha / (2.0 * (1.0 - alpha))
    rr, y = r[keep], -np.log(p_hat[keep])
    sigma = np.sqrt((1 - p_hat[keep]) / hits[keep])

    def model(r_, c, kappa, k0, k1):
        return c * r_**kappa - pref * np.log(r_) + k0 + k1 * r_**-kappa

    c0 = float(y[0] * rr[0] ** -target)
    try:
        popt, pcov = optimize.curve_fit(model, rr, y, p0=(c0, target, 0.0, 0.0), sigma=sigma,
                                        absolute_sigma=True, maxfev=20000)
        fit = SmallBallFit(float(popt[1]), float(np.sqrt(pcov[1, 1])), target, float(popt[0]))
    except (RuntimeError, optimize.OptimizeWarning):
        fit = SmallBallFit(math.nan, math.nan, target, math.nan)
    return StableSmallBall(alpha, r, p_hat, se, hits, excluded, fit, count, seed)


def laplace_check(samples: np.ndarray, alpha: float, us: Sequence[float] = (0.5, 1.0, 2.0)) -> np.ndarray:
    """z-scores of the empirical E exp(-uS) against exp(-u^alpha)."""
    s = np.asarray(samples, dtype=float).ravel()
    out = []
    for u in us:
        e = np.exp(-u * s)
        out.append((e.mean() - math.exp(-(u**alpha))) / (e.std(ddof=1) / math.sqrt(s.size)))
    return np.array(out)


# ---------------------------------------------------- Brownian motions

@dataclass(frozen=True)
class BrownianConfig:
    """N independent Brownian motions on R^d.

    ``dt`` is the base step relative to r^2 for the radius being resolved;
    ``horizon`` caps simulated time at horizon * r_max^2 (hitting) and
    ``max_steps`` caps steps per motion.  ``refine`` sets 2^refine bridge
    sub-steps for candidate crossing steps.
    """

    d: int = 1
    N: int = 1
    dt: float = 1e-2
    seed: int = 0
    refine: int = 6
    horizon: float = 1000.0
    max_steps: int = 10**6

    def __post_init__(self) -> None:
        if self.d < 1 or self.N < 1:
            raise ValueError("d and N must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon <= 0 or self.max_steps < 1 or not 0 <= self.refine <= 12:
            raise ValueError("invalid horizon, max_steps or refine")


@dataclass(frozen=True, eq=False)
class HittingSample:
    """First hitting times T (motions, radii) and optional last exits L."""

    radii: np.ndarray
    T: np.ndarray
    L: np.ndarray | None
    flagged: np.ndarray
    config: BrownianConfig
    mode: str
    bridge: bool

    def __post_init__(self) -> None:
        ok = ~self.flagged
        T = self.T[ok]
        if not np.all(np.isfinite(T)) or np.any(np.diff(T, axis=1) <= 0) or np.any(T[:, 0] <= 0):
            raise AssertionError("hitting times must be finite and strictly increasing in r")
        if self.L is not None and np.any(self.L[ok] < T):
            raise AssertionError("last exit before first hit")

    def at(self, r: float) -> np.ndarray:
        k = int(np.flatnonzero(np.isclose(self.radii, r))[0])
        return self.T[:, k]

    def last_at(self, r: float) -> np.ndarray:
        k = int(np.flatnonzero(np.isclose(self.radii, r))[0])
        return self.L[:, k]


def _radius(x: np.ndarray, level: bool) -> np.ndarray:
    return x[:, 0] if level else np.sqrt(np.einsum("ij,ij->i", x, x))


def _crossing_prob(ra, rb, radii, h):
    """Probability that a 1-D Brownian bridge from ra to rb over time h
    touches each level in ``radii``."""
    prod = (ra[..., None] - radii) * (rb[..., None] - radii)
    with np.errstate(over="ignore"):
        return np.where(prod <= 0, 1.0, np.exp(-2.0 * np.maximum(prod, 0.0) / h[..., None]))


def _simulate_block(rng: np.random.Generator, count: int, cfg: BrownianConfig, radii: np.ndarray,
                    bridge: bool, level: bool, last_exit: bool):
    d, K = cfg.d, radii.size
    r_max = radii[-1]
    T = np.full((count, K), np.inf)
    L = np.full((count, K), -np.inf) if last_exit else None
    flagged = np.zeros(count, dtype=bool)
    x = np.zeros((count, d))
    t = np.zeros(count)
    steps = np.zeros(count, dtype=np.int64)
    idx = np.arange(count)
    max_time = np.inf if last_exit else cfg.horizon * r_max**2
    if last_exit:
        stop = 4.0 * r_max if d == 3 else r_max * 1e3 ** (1.0 / (d - 2))
    m = 2**cfg.refine
    s = np.arange(1, m + 1) / m
    while idx.size:
        rho = _radius(x, level)
        Ti = T[idx]
        if last_exit:
            dist = np.abs(rho[:, None] - radii[None, :])
            j = np.argmin(dist, axis=1)
            rref, gap = radii[j], dist[np.arange(idx.size), j]
        else:
            k = np.sum(np.isfinite(Ti), axis=1)
            rref = radii[k]
            gap = rref - rho
        h = np.maximum(cfg.dt * rref**2, (gap / 4.0) ** 2)
        h = np.minimum(h, max_time - t)
        y = x + np.sqrt(h)[:, None] * rng.standard_normal(x.shape)
        rho_y = _radius(y, level)
        Li = L[idx] if last_exit else None
        if bridge:
            p = _crossing_prob(rho, rho_y, radii, h)
            if not last_exit:
                p = np.where(np.isfinite(Ti), 0.0, p)
            cand = np.flatnonzero(p.max(axis=1) > CANDIDATE_P)
            if cand.size:
                hc = h[cand]
                inc = rng.standard_normal((cand.size, m, d)) * np.sqrt(hc / m)[:, None, None]
                w = np.cumsum(inc, axis=1)
                fine = (x[cand, None, :] + (y - x)[cand, None, :] * s[None, :, None]
                        + w - s[None, :, None] * w[:, -1:, :])
                rf = fine[..., 0] if level else np.linalg.norm(fine, axis=2)
                rprev = np.concatenate([rho[cand, None], rf[:, :-1]], axis=1)
                pf = _crossing_prob(rprev, rf, radii, np.broadcast_to((hc / m)[:, None], rf.shape))
                u = rng.uniform(size=rf.shape)
                cross = u[..., None] < pf
                hit = cross.any(axis=1)
                first = np.argmax(cross, axis=1)
                tc = t[cand, None] + hc[:, None] * (first + 0.5) / m
                new = hit & ~np.isfinite(Ti[cand])
                Ti[cand] = np.where(new, tc, Ti[cand])
                if last_exit:
                    last = m - 1 - np.argmax(cross[:, ::-1], axis=1)
                    tl = t[cand, None] + hc[:, None] * (last + 0.5) / m
                    Li[cand] = np.where(hit, tl, Li[cand])
        else:
            if level or not last_exit:
                crossed = rho_y[:, None] >= radii[None, :]
            else:
                crossed = (rho[:, None] - radii) * (rho_y[:, None] - radii) <= 0
            new = crossed & ~np.isfinite(Ti)
            Ti = np.where(new, (t + h)[:, None], Ti)
            if last_exit:
                Li = np.where(crossed, (t + h)[:, None], Li)
        for kk in range(1, K):  # ties within one fine interval: keep T strictly increasing
            Ti[:, kk] = np.where(np.isfinite(Ti[:, kk]),
                                 np.maximum(Ti[:, kk], np.nextafter(Ti[:, kk - 1], np.inf)), np.inf)
        T[idx] = Ti
        t = t + h
        x = y
        steps += 1
        if last_exit:
            L[idx] = np.maximum(Li, Ti)
            out = rho_y >= stop
            ret = out & (rng.uniform(size=idx.size) < (r_max / rho_y) ** (d - 2)) if d == 3 else out & False
            if ret.any():
                # conditioned on returning, the radial part is a BES(1) started at rho_y
                z = rng.standard_normal(int(ret.sum()))
                t[ret] = t[ret] + (rho_y[ret] - r_max) ** 2 / z**2
                x[ret] = x[ret] * (r_max / rho_y[ret])[:, None]
            done = out & ~ret
        else:
            done = np.isfinite(T[idx, -1])
        over = ~done & ((steps >= cfg.max_steps) | (t >= max_time))
        flagged[idx[over]] = True
        keep = ~(done | over)
        idx, x, t, steps = idx[keep], x[keep], t[keep], steps[keep]
    return T, L, flagged


def _block_job(job):
    seed, label, b, size, cfg, radii, bridge, level, last_exit = job
    rng = generator(derive_seed(seed, [label, b]))
    return _simulate_block(rng, size, cfg, radii, bridge, level, last_exit)


def _run_blocks(cfg: BrownianConfig, radii: np.ndarray, label: str, bridge: bool, level: bool,
                last_exit: bool, workers: int):
    sizes = [min(BLOCK, cfg.N - s) for s in range(0, cfg.N, BLOCK)]
    jobs = [(cfg.seed, label, b, size, cfg, radii, bridge, level, last_exit) for b, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_job, jobs))
    else:
        parts = [_block_job(j) for j in jobs]
    T = np.concatenate([p[0] for p in parts])
    L = np.concatenate([p[1] for p in parts]) if last_exit else None
    flagged = np.concatenate([p[2] for p in parts])
    return T, L, flagged


def _check_radii(radii) -> np.ndarray:
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if radii.ndim != 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    return radii


def brownian_hitting(cfg: BrownianConfig, radii, mode: Literal["norm", "level"] = "norm",
                     bridge: bool = True, workers: int = 1) -> HittingSample:
    """First hitting times of the spheres |B| = r (mode "norm") or, for
    d = 1, of the levels B = r (mode "level") for cfg.N motions.

    Steps adapt to the distance from the next radius; a step whose bridge
    crossing probability exceeds 1e-10 is refined into 2^refine exact
    Brownian-bridge sub-steps, and a crossing inside each sub-step is drawn
    with the bridge crossing probability of the radial coordinate.  One
    uniform per sub-step serves all radii, so hits are nested in r.  With
    ``bridge=False`` the walk uses fixed steps dt r^2 and records the first
    grid time beyond the radius.  Motions beyond the horizon are flagged.
    """
    radii = _check_radii(radii)
    if mode == "level" and cfg.d != 1:
        raise ValueError("level mode is one-dimensional")
    T, _, flagged = _run_blocks(cfg, radii, f"hitting-{mode}-{int(bridge)}", bridge, mode == "level",
                                False, workers)
    return HittingSample(radii, T, None, flagged, cfg, mode, bridge)


def brownian_last_exit(cfg: BrownianConfig, radii, bridge: bool = True, workers: int = 1) -> HittingSample:
    """First hitting and last exit times of the spheres |B| = r for d >= 3.

    Paths run until |B| >= 4 r_max.  For d = 3 the path then returns to the
    sphere r_max with probability r_max/|B|; the return time is drawn
    exactly (the conditioned radial motion is a BES(1), so the time is a
    Levy first-passage time) and the simulation resumes on that sphere.
    For d >= 4 the stopping radius is raised until the return probability
    is below 1e-3 and returns are ignored.
    """
    if cfg.d < 3:
        raise ValueError("last exit times need a transient motion (d >= 3)")
    radii = _check_radii(radii)
    T, L, flagged = _run_blocks(cfg, radii, f"lastexit-{int(bridge)}", bridge, False, True, workers)
    return HittingSample(radii, T, L, flagged, cfg, "norm", bridge)


def level_hitting_cdf(t, r: float = 1.0) -> np.ndarray:
    """P(sup_{s<=t} B(s) >= r) = 2(1 - Phi(r/sqrt t)) for standard 1-D B."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return 2.0 * stats.norm.sf(r / np.sqrt(t))


class KSResult(NamedTuple):
    statistic: float
    pvalue: float
    critical: float

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical


def ks_censored(samples: np.ndarray, cdf, horizon: float, level: float = 0.01) -> KSResult:
    """One-sample KS distance on [0, horizon] for samples censored at the
    horizon (censored entries are +inf or flagged and count as > horizon)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    obs = np.sort(x[x <= horizon])
    i = np.arange(1, obs.size + 1)
    F = cdf(obs)
    D = max(np.max(i / n - F, initial=0.0), np.max(F - (i - 1) / n, initial=0.0),
            abs(obs.size / n - float(cdf(horizon))))
    return KSResult(float(D), float(stats.kstwo.sf(D, n)), float(stats.kstwo.isf(level, n)))


def ks_two_sample_censored(x: np.ndarray, y: np.ndarray, cap: float, level: float = 0.01) -> KSResult:
    """Two-sample KS with both samples capped at ``cap``."""
    x = np.minimum(np.asarray(x, dtype=float), cap)
    y = np.minimum(np.asarray(y, dtype=float), cap)
    res = stats.ks_2samp(x, y)
    n, m = x.size, y.size
    crit = math.sqrt(-0.5 * math.log(level / 2.0) * (n + m) / (n * m))
    return KSResult(float(res.statistic), float(res.pvalue), crit)


def getoor_last_exit_cdf(t, r: float = 1.0) -> np.ndarray:
    """P(L(r) <= t) in d = 3, where L(r) has the law of r^2/Z^2."""
    t = np.asarray(t, dtype=float)
    return 2.0 * stats.norm.sf(r / np.sqrt(t))


# ----------------------------------------------------- LIL experiments

def hitting_statistic(sup_T: np.ndarray, r: np.ndarray) -> np.ndarray:
    """sup_j T_j(r) / (r^2 (log log r)^-1)."""
    return sup_T * np.log(np.log(r)) / r**2


def sup_statistic(m: np.ndarray, t: np.ndarray) -> np.ndarray:
    """inf_j sup_{s<=t}|B_j(s)| / sqrt(t log log t)."""
    return m / np.sqrt(t * np.log(np.log(t)))


@dataclass(frozen=True, eq=False)
class LilReport:
    kind: str
    grid: np.ndarray
    k: np.ndarray
    k0: int
    raw: dict[int, np.ndarray]
    running: dict[int, np.ndarray]
    constant: dict[int, float]
    band: dict[int, tuple[float, float]]
    sample: Any = field(default=None, repr=False)

    def median(self, N: int) -> np.ndarray:
        return np.median(self.running[N], axis=0)

    def final(self, N: int) -> np.ndarray:
        return self.running[N][:, -1]

    def in_band_fraction(self, N: int) -> float:
        lo, hi = self.band[N]
        f = self.final(N)
        return float(np.mean((f >= lo) & (f <= hi)))

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind, "k0": self.k0, "K": int(self.k[-1]),
            "per_N": {str(N): {"constant": self.constant[N], "band": list(self.band[N]),
                               "median_final": float(np.median(self.final(N))),
                               "in_band_fraction": self.in_band_fraction(N)} for N in self.raw},
        }


def _default_k0(K: int) -> int:
    return max(K // 2, 3)


def lil_hitting_experiment(cfg: BrownianConfig, K: int = 16, replicates: int = 50,
                           Ns: Sequence[int] = (1, 2), k0: int | None = None, workers: int = 1) -> LilReport:
    """Running minimum over k0 <= k <= K of sup_{j<=N} T_j(r_k) log log r_k / r_k^2
    with r_k = e^(k/2), per replicate.

    All N share motions: replicate i uses motions 0..N-1 of its own group of
    max(Ns) motions, so the statistic is pathwise monotone in N.  The band
    for N is [N/4, 3N/2] around the limit N/2.
    """
    if K < 8:
        raise ValueError("K must be at least 8")
    k0 = _default_k0(K) if k0 is None else k0
    if not 3 <= k0 <= K:
        raise ValueError("k0 must satisfy 3 <= k0 <= K (log log r_k > 0 needs k >= 3)")
    nmax = max(Ns)
    k = np.arange(1, K + 1)
    radii = np.exp(k / 2.0)
    sim_cfg = BrownianConfig(cfg.d, replicates * nmax, cfg.dt, cfg.seed, cfg.refine, cfg.horizon, cfg.max_steps)
    hs = brownian_hitting(sim_cfg, radii, "norm", True, workers)
    if hs.flagged.any():
        raise RuntimeError(f"{int(hs.flagged.sum())} motions exceeded the simulation horizon")
    T = hs.T.reshape(replicates, nmax, K)
    sel = k >= k0
    raw, running, const, band = {}, {}, {}, {}
    for N in Ns:
        s = hitting_statistic(T[:, :N].max(axis=1)[:, sel], radii[sel])
        raw[N] = s
        running[N] = np.minimum.accumulate(s, axis=1)
        const[N] = N / 2.0
        band[N] = (0.5 * N / 2.0, 3.0 * N / 2.0)
    return LilReport("hitting", radii[sel], k[sel], k0, raw, running, const, band, hs)


def _sup_paths(rng: np.random.Generator, count: int, d: int, t_grid: np.ndarray, rel_step: float):
    """Running sup_{s<=t}|B(s)| at the times in t_grid for ``count`` motions,
    using exact Brownian-bridge maxima on a geometric time mesh (radial
    projection for d >= 2)."""
    t0 = t_grid[0] * 1e-2
    edges = [0.0, t0]
    for a, b in zip(np.concatenate([[t0], t_grid[:-1]]), t_grid):
        n_sub = max(int(math.ceil(math.log(b / a) / math.log1p(rel_step))), 1)
        edges.extend((a * (b / a) ** (np.arange(1, n_sub + 1) / n_sub)).tolist())
        edges[-1] = float(b)
    edges = np.array(edges)
    marks = np.searchsorted(edges, t_grid)
    x = np.zeros((count, d))
    M = np.zeros(count)
    out = np.empty((count, t_grid.size))
    col = 0
    for i in range(1, edges.size):
        h = edges[i] - edges[i - 1]
        y = x + math.sqrt(h) * rng.standard_normal((count, d))
        if d == 1:
            u = rng.uniform(size=(count, 2))
            a, b = x[:, 0], y[:, 0]
            mx = 0.5 * (a + b + np.sqrt((a - b) ** 2 - 2 * h * np.log(u[:, 0])))
            mn = 0.5 * (a + b - np.sqrt((a - b) ** 2 - 2 * h * np.log(u[:, 1])))
            peak = np.maximum(mx, -mn)
        else:
            u = rng.uniform(size=count)
            a, b = np.linalg.norm(x, axis=1), np.linalg.norm(y, axis=1)
            peak = 0.5 * (a + b + np.sqrt((a - b) ** 2 - 2 * h * np.log(u)))
        M = np.maximum(M, peak)
        x = y
        while col < marks.size and marks[col] == i:
            out[:, col] = M
            col += 1
    return out


def _sup_block(job):
    seed, b, size, d, t_grid, rel_step = job
    return _sup_paths(generator(derive_seed(seed, ["sup", b])), size, d, t_grid, rel_step)


def lil_sup_experiment(cfg: BrownianConfig, K: int = 16, replicates: int = 50, Ns: Sequence[int] = (1, 2),
                       k0: int | None = None, rel_step: float = 1e-3, workers: int = 1) -> LilReport:
    """Running maximum over k0 <= k <= K of
    min_{j<=N} sup_{s<=t_k}|B_j(s)| / sqrt(t_k log log t_k) with t_k = e^k.

    Motions are shared across N as in the hitting experiment.  The band for
    N is [0.6, 1.1] sqrt(2/N).
    """
    if K < 8:
        raise ValueError("K must be at least 8")
    k0 = _default_k0(K) if k0 is None else k0
    if not 2 <= k0 <= K:
        raise ValueError("k0 must satisfy 2 <= k0 <= K (log log t_k > 0 needs k >= 2)")
    nmax = max(Ns)
    k = np.arange(1, K + 1)
    t_grid = np.exp(k.astype(float))
    total = replicates * nmax
    sizes = [min(BLOCK, total - s) for s in range(0, total, BLOCK)]
    jobs = [(cfg.seed, b, size, cfg.d, t_grid, rel_step) for b, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sup_block, jobs))
    else:
        parts = [_sup_block(j) for j in jobs]
    M = np.concatenate(parts).reshape(replicates, nmax, K)
    sel = k >= k0
    raw, running, const, band = {}, {}, {}, {}
    for N in Ns:
        s = sup_statistic(M[:, :N].min(axis=1)[:, sel], t_grid[sel])
        raw[N] = s
        running[N] = np.maximum.accumulate(s, axis=1)
        const[N] = math.sqrt(2.0 / N)
        band[N] = (0.6 * const[N], 1.1 * const[N])
    return LilReport("sup", t_grid[sel], k[sel], k0, raw, running, const, band, M)


class DualityCheck(NamedTuple):
    from_hitting: np.ndarray
    from_sup: np.ndarray
    bit_equal: bool


def duality_check(report: LilReport, N: int) -> DualityCheck:
    """On the replicates of a hitting experiment, evaluate the sup statistic
    at t_n = sup_j T_j(r_n) in two ways: directly as r_n/sqrt(t_n log log t_n),
    and through the radius-grid running maxima M_j(t) = max{r_k : T_j(r_k) <= t}
    whose minimum over j at t_n is r_n.  Only t_n > e enters."""
    hs: HittingSample = report.sample
    if hs is None or report.kind != "hitting":
        raise ValueError("duality needs a hitting experiment report")
    radii = hs.radii
    reps = report.raw[N].shape[0]
    T = hs.T.reshape(reps, -1, radii.size)[:, :N]
    tn = T.max(axis=1)
    valid = tn > math.e
    direct = np.where(valid, sup_statistic(np.broadcast_to(radii, tn.shape), np.where(valid, tn, 3.0)), np.nan)
    # M_j(t_n): largest radius reached by motion j at time t_n
    reached = T[:, :, None, :] <= tn[:, None, :, None]          # (rep, j, n, k)
    Mj = np.where(reached, radii, 0.0).max(axis=3)
    via = np.where(valid, sup_statistic(Mj.min(axis=1), np.where(valid, tn, 3.0)), np.nan)
    eq = bool(np.array_equal(direct, via, equal_nan=True))
    return DualityCheck(direct, via, eq)


# --------------------------------------------- hitting-probability bound

class BoundCheck(NamedTuple):
    lhs: float
    lhs_se: float
    rhs: float
    numerator: float
    denominator: float

    @property
    def margin(self) -> float:
        return self.rhs + 3.0 * self.lhs_se - self.lhs

    @property
    def holds(self) -> bool:
        return self.margin >= 0


def _ball_prob(process: str, t, r, alpha: float = 0.5):
    t = np.asarray(t, dtype=float)
    if process == "brownian":
        with np.errstate(divide="ignore"):
            return np.where(t > 0, 2.0 * stats.norm.cdf(r / np.sqrt(np.maximum(t, 1e-300))) - 1.0, 1.0)
    # S(t) = t^2 S(1) for alpha = 1/2: P(S(t) <= r) = erfc(t/(2 sqrt r))
    return special.erfc(t / (2.0 * math.sqrt(r)))


def hitting_probability_bound_check(process: Literal["brownian", "stable"], b: float, c: float, gamma: float,
                                    eps: float, count: int = 10**6, seed: int = 0) -> BoundCheck:
    """P(|Z(t)| <= gamma for some b <= t <= c) against

        int_b^{2c-b} P(|Z(t)| <= (1+eps)gamma) dt / int_0^{c-b} P(|Z(t)| <= eps gamma) dt

    for 1-D Brownian motion or the 1/2-stable subordinator.  The left side is
    Monte Carlo: for Brownian motion, conditioned on B(b) = x it equals 1 if
    |x| <= gamma and 2(1 - Phi((|x| - gamma)/sqrt(c-b))) otherwise; for the
    increasing subordinator it is 1{S(b) <= gamma}.  The right side uses
    quadrature of the exact marginals.
    """
    if not 0 < b < c:
        raise ValueError("need 0 < b < c")
    if gamma <= 0 or eps <= 0:
        raise ValueError("gamma and eps must be positive")
    rng = generator(seed, ["bound", process])
    if process == "brownian":
        x = np.abs(rng.standard_normal(count)) * math.sqrt(b)
        vals = np.where(x <= gamma, 1.0, 2.0 * stats.norm.sf((x - gamma) / math.sqrt(c - b)))
    elif process == "stable":
        s = sample(PositiveStable(0.5), count, derive_seed(seed, ["bound", "stable"]))[:, 0] * b**2
        vals = (s <= gamma).astype(float)
    else:
        raise ValueError(f"unknown process {process!r}")
    lhs = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(count))
    num, _ = integrate.quad(lambda t: _ball_prob(process, t, (1 + eps) * gamma), b, 2 * c - b, limit=200)
    den, _ = integrate.quad(lambda t: _ball_prob(process, t, eps * gamma), 0.0, c - b, limit=200)
    if den < 1e-300:
        raise ValueError("degenerate denominator: the small ball is never reached")
    return BoundCheck(lhs, se, num / den, num, den)


# ------------------------------------------------------ type-I families

class TypeIRow(NamedTuple):
    gauge: Gauge
    series: Literal["converges", "diverges", "undecided"]
    liminf: Literal["0", "inf", "undecided"]
    method: Literal["symbolic", "numeric"]


def default_type_I_family(d: int, eps: Sequence[float] = (1.0, 0.0)) -> list[Gauge]:
    """g(n) = n^-1/d and g(n) = n^-1/d (log n)^-(1+eps)/d."""
    fam: list[Gauge] = [PowerLog(1.0 / d, 0.0)]
    fam.extend(PowerLog(1.0 / d, (1.0 + e) / d) for e in eps)
    return fam


def type_I_integral_test(alpha: float, d: int, gauges: Sequence[Gauge] | None = None) -> list[TypeIRow]:
    """Convergence of sum_n g(n)^d, which decides liminf |S(b^n)|/(b^(n/alpha) g(n))
    in {0, inf} for processes of type I (Gaussian alpha = 2, or rotation
    invariant alpha-stable).  PowerLog gauges are decided symbolically:
    n^(-pd) (log n)^(-qd) is summable iff pd > 1, or pd = 1 and qd > 1.
    Other gauges go through the numeric series classifier with F(r) = r^d."""
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    if not d > alpha:
        raise ValueError("the type-I test needs d > alpha")
    gauges = default_type_I_family(d) if gauges is None else gauges
    rows = []
    for g in gauges:
        if isinstance(g, PowerLog):
            pd, qd = g.p * d, g.q * d
            conv = pd > 1 + 1e-12 or (abs(pd - 1) <= 1e-12 and qd > 1 + 1e-12)
            v = "converges" if conv else "diverges"
            rows.append(TypeIRow(g, v, "inf" if conv else "0", "symbolic"))
        else:
            rep = sum_classifier(SmallBallCDF.power(float(d)), g, [1.0])
            v = rep.verdicts[0]
            rows.append(TypeIRow(g, v, {"converges": "inf", "diverges": "0"}.get(v, "undecided"), "numeric"))
    return rows


# ---------------------------------------------- stable escape constants

class StableConstants(NamedTuple):
    upper: tuple[float, float]
    lower: tuple[float, float]


def stable_escape_constants(alpha: float = 0.5, deltas=None) -> StableConstants:
    """Brackets for the constants of the liminf of S(t)/(t^(1/alpha) (log log t)^((alpha-1)/alpha)):
    the upper one from sum_n F(delta (log n)^((alpha-1)/alpha)), the lower one
    from the same sum weighted by (log n)^(1-alpha).  F is exact only at
    alpha = 1/2."""
    if alpha != 0.5:
        raise ValueError("exact small-ball probabilities are available for alpha = 1/2 only")
    deltas = np.linspace(0.05, 1.0, 39) if deltas is None else deltas
    g = LogPower((alpha - 1.0) / alpha, start=3)
    F = SmallBallCDF.stable_half()
    up = sum_classifier(F, g, deltas)
    low = sum_classifier(F, g, deltas, log_weight=lambda x: (1.0 - alpha) * np.log(x))
    return StableConstants((up.C_low, up.C_high), (low.C_low, low.C_high))


def last_exit_residual_slope(L: np.ndarray, d: int = 3, r_grid=None) -> float:
    """Slope against 1/r of log P(L(1) <= r) + 1/(2r) - (2 - d/2) log r.

    A small slope supports the exp(-1/(2r)) r^(2-d/2) form of the lower tail.
    """
    r = np.geomspace(0.15, 0.5, 12) if r_grid is None else np.asarray(r_grid, dtype=float)
    L = np.sort(np.asarray(L, dtype=float))
    p = np.searchsorted(L, r, side="right") / L.size
    if np.any(p == 0):
        raise ValueError("no samples below the smallest radius")
    res = np.log(p) + 0.5 / r - (2.0 - d / 2.0) * np.log(r)
    return float(np.polyfit(1.0 / r, res, 1)[0])
