"""Experiment runner: validated YAML configs, dispatch to the simulation
modules, CSV/JSON outputs and run records with file digests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import shutil
import tempfile
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .bdecomp import ProductCF, check_fixed_point, default_z_grid, empirical_cf_match, mu_hat
from .distributions import law_from_config
from .escape import (
    KWFunction,
    SmallBallCDF,
    _laplace_for,
    audit_type_a_gauge,
    construct_type_a_gauge,
    dominated_variation_test,
    gauge_from_config,
    k_w,
    sum_classifier,
)
from .levy_lil import (
    BrownianConfig,
    brownian_last_exit,
    duality_check,
    getoor_last_exit_cdf,
    hitting_probability_bound_check,
    ks_censored,
    ks_two_sample_censored,
    lil_hitting_experiment,
    lil_sup_experiment,
    stable_escape_constants,
    stable_small_ball,
)
from .rng import check_seed, derive_seed
from .sequences import SequenceParams, build_ensemble, w0_samples

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_INVARIANT, EXIT_UNDECIDED = 0, 2, 3, 4

KINDS = ("simulate-w", "simulate-y", "bdecomp", "classify", "typeA-gauge", "kw",
         "lil-hitting", "lil-sup", "lil-stable", "bound-check")

# per-kind options with defaults; any other key is a validation error
OPTIONS: dict[str, dict[str, Any]] = {
    "simulate-w": {"paths": 1, "truncation_depth": None},
    "simulate-y": {"paths": 1, "truncation_depth": None},
    "bdecomp": {"b": 0.5, "grid_points": 41, "grid_lim": 5.0, "samples": 0},
    "classify": {"deltas": None, "horizon": 10_000},
    "typeA-gauge": {"a": 2.0, "r0": 1.0, "steps": 10},
    "kw": {"a": 2.0, "radii": [2.0**-k for k in (0, 5, 10, 20, 40)], "trapezoid_points": 10**6},
    "lil-hitting": {"K": 16, "replicates": 50, "Ns": [1, 2], "k0": None, "last_exit": False,
                    "radii": [1.0, 2.0]},
    "lil-sup": {"K": 16, "replicates": 50, "Ns": [1, 2], "k0": None, "rel_step": 1e-3},
    "lil-stable": {"alpha": 0.5, "count": 10**6, "r_grid": None},
    "bound-check": {"process": "brownian", "b": 1.0, "c": 2.0, "gamma": 1.0, "eps": 1.0, "count": 10**6},
}
SECTIONS: dict[str, tuple[str, ...]] = {
    "simulate-w": ("law", "sequence"),
    "simulate-y": ("law", "sequence"),
    "bdecomp": ("law",),
    "classify": ("small_ball", "gauge"),
    "typeA-gauge": ("small_ball",),
    "kw": ("law",),
    "lil-hitting": ("brownian",),
    "lil-sup": ("brownian",),
    "lil-stable": (),
    "bound-check": (),
}
TOP_LEVEL = {"schema_version", "experiment", "seed", "workers", "law", "sequence", "brownian",
             "gauge", "small_ball", "options"}
SMALL_BALL = {"power": {"beta", "coef"}, "exp_inverse": {"c", "power"}, "stable_half": set(),
              "empirical": {"law", "a", "count", "min_hits"}}


class ConfigError(ValueError):
    """Validation failure; ``errors`` lists every offending field."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    workers: int = 1
    law: dict[str, Any] | None = None
    sequence: dict[str, Any] | None = None
    brownian: dict[str, Any] | None = None
    gauge: dict[str, Any] | None = None
    small_ball: dict[str, Any] | None = None
    options: dict[str, Any] = field(default_factory=dict)

    def snapshot(self) -> dict[str, Any]:
        out = {"schema_version": SCHEMA_VERSION, "experiment": self.experiment, "seed": self.seed,
               "workers": self.workers}
        for k in ("law", "sequence", "brownian", "gauge", "small_ball"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        out["options"] = self.options
        return out


def _count_ok(name: str, v: Any, errors: list[str]) -> None:
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        errors.append(f"{name}: must be an integer >= 1, got {v!r}")


def validate(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Check a parsed config tree; collects all errors before raising."""
    errors: list[str] = []
    if not isinstance(raw, Mapping):
        raise ConfigError(["config: top level must be a mapping"])
    for k in sorted(set(raw) - TOP_LEVEL):
        errors.append(f"{k}: unknown key")
    if raw.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    kind = raw.get("experiment")
    if kind not in KINDS:
        errors.append(f"experiment: expected one of {list(KINDS)}, got {kind!r}")
        raise ConfigError(errors)
    seed = raw.get("seed")
    try:
        check_seed(seed)
    except (TypeError, ValueError):
        errors.append(f"seed: must be an unsigned 64-bit integer, got {seed!r}")
    workers = raw.get("workers", 1)
    _count_ok("workers", workers, errors)

    opts = dict(OPTIONS[kind])
    given = raw.get("options") or {}
    if not isinstance(given, Mapping):
        errors.append("options: must be a mapping")
        given = {}
    for k in sorted(set(given) - set(opts)):
        errors.append(f"options.{k}: unknown key for {kind}")
    opts.update({k: v for k, v in given.items() if k in opts})
    for name in ("paths", "grid_points", "horizon", "steps", "K", "replicates", "count", "trapezoid_points"):
        if name in opts:
            _count_ok(f"options.{name}", opts[name], errors)
    if "samples" in opts and (not isinstance(opts["samples"], int) or opts["samples"] < 0):
        errors.append("options.samples: must be an integer >= 0")
    if "Ns" in opts:
        if not opts["Ns"] or not isinstance(opts["Ns"], list):
            errors.append("options.Ns: must be a nonempty list")
        else:
            for n in opts["Ns"]:
                _count_ok("options.Ns[]", n, errors)

    needed = SECTIONS[kind]
    for sec in ("law", "sequence", "brownian", "gauge", "small_ball"):
        if sec in raw and sec not in needed:
            errors.append(f"{sec}: not used by {kind}")
        if sec in needed and sec not in raw:
            errors.append(f"{sec}: required for {kind}")
    cfg = ExperimentConfig(kind, seed if isinstance(seed, int) else 0, workers if isinstance(workers, int) else 1,
                           *(dict(raw[s]) if isinstance(raw.get(s), Mapping) else raw.get(s)
                             for s in ("law", "sequence", "brownian", "gauge", "small_ball")),
                           options=opts)
    # build each component once to surface domain errors
    checks: list[tuple[str, Callable[[], Any]]] = []
    if cfg.law is not None:
        checks.append(("law", lambda: law_from_config(cfg.law)))
    if cfg.sequence is not None:
        checks.append(("sequence", lambda: _sequence(cfg)))
    if cfg.brownian is not None:
        checks.append(("brownian", lambda: _brownian(cfg)))
    if cfg.gauge is not None:
        checks.append(("gauge", lambda: gauge_from_config(cfg.gauge).check_decreasing()))
    if cfg.small_ball is not None:
        checks.append(("small_ball", lambda: _small_ball(cfg)))
    for name, fn in checks:
        try:
            fn()
        except (TypeError, ValueError, KeyError) as exc:
            errors.append(f"{name}: {exc}")
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path: str | Path, seed: int | None = None) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if seed is not None and isinstance(raw, dict):
        raw["seed"] = seed
    return validate(raw)


def default_config(kind: str, seed: int = 0) -> dict[str, Any]:
    """A small runnable config tree for ``kind``."""
    raw: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "experiment": kind, "seed": seed}
    if kind in ("simulate-w", "simulate-y"):
        raw["law"] = {"kind": "point_mass", "c": 1.0}
        raw["sequence"] = {"a": 2.0, "d": 1, "n_min": 0, "n_max": 3}
    elif kind == "bdecomp":
        raw["law"] = {"kind": "gaussian", "mean": [0.0], "cov": [[1.0]]}
    elif kind == "classify":
        raw["small_ball"] = {"kind": "power", "beta": 1.0}
        raw["gauge"] = {"kind": "powerlog", "p": 1.0}
    elif kind == "typeA-gauge":
        raw["small_ball"] = {"kind": "exp_inverse", "c": 1.0}
    elif kind == "kw":
        raw["law"] = {"kind": "bernoulli", "lam": 0.5, "v": [1.0]}
    elif kind == "lil-hitting":
        raw["brownian"] = {"d": 3}
    elif kind == "lil-sup":
        raw["brownian"] = {"d": 1}
    elif kind not in KINDS:
        raise ConfigError([f"experiment: unknown kind {kind!r}"])
    return raw


# ----------------------------------------------------------- components

def _sequence(cfg: ExperimentConfig) -> SequenceParams:
    seq = dict(cfg.sequence)
    extra = set(seq) - {"a", "d", "n_min", "n_max"}
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)}")
    if "d" not in seq and cfg.law is not None:
        seq["d"] = law_from_config(cfg.law).dim
    return SequenceParams(**seq)


def _brownian(cfg: ExperimentConfig) -> BrownianConfig:
    br = dict(cfg.brownian)
    extra = set(br) - {"d", "N", "dt", "refine", "horizon", "max_steps"}
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)}")
    return BrownianConfig(seed=cfg.seed, **br)


def _small_ball(cfg: ExperimentConfig) -> SmallBallCDF:
    sb = dict(cfg.small_ball)
    kind = sb.pop("kind", None)
    if kind not in SMALL_BALL:
        raise ValueError(f"unknown small-ball kind {kind!r}; expected one of {sorted(SMALL_BALL)}")
    extra = set(sb) - SMALL_BALL[kind]
    if extra:
        raise ValueError(f"unknown keys for {kind}: {sorted(extra)}")
    if kind == "power":
        return SmallBallCDF.power(float(sb["beta"]), float(sb.get("coef", 1.0)))
    if kind == "exp_inverse":
        return SmallBallCDF.exp_inverse(float(sb.get("c", 1.0)), float(sb.get("power", 0.0)))
    if kind == "stable_half":
        return SmallBallCDF.stable_half()
    law = law_from_config(sb["law"])
    count = int(sb.get("count", 10**5))
    x = w0_samples(law, float(sb["a"]), count, derive_seed(cfg.seed, ["small-ball"]), workers=cfg.workers)
    return SmallBallCDF.empirical(np.linalg.norm(x, axis=1), int(sb.get("min_hits", 10)))


# ------------------------------------------------------------ outputs

def _fmt(v: Any) -> Any:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj: Any) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunRecord:
    config: dict[str, Any]
    version: str
    wall_clock: float
    digests: dict[str, str]
    flags: dict[str, bool]
    status: str
    exit_code: int

    def to_json(self) -> dict[str, Any]:
        return {"config": self.config, "version": self.version, "wall_clock_seconds": self.wall_clock,
                "digests": self.digests, "flags": self.flags, "status": self.status,
                "exit_code": self.exit_code}


@dataclass
class Outcome:
    summary: dict[str, Any]
    flags: dict[str, bool] = field(default_factory=dict)
    undecided: bool = False


# ------------------------------------------------------------ runners

def _run_simulate(cfg: ExperimentConfig, out: Path) -> Outcome:
    kind = "W" if cfg.experiment == "simulate-w" else "Y"
    law = law_from_config(cfg.law)
    params = _sequence(cfg)
    ens = build_ensemble(kind, params, law, cfg.options["paths"], cfg.options["truncation_depth"],
                         seed=cfg.seed, workers=cfg.workers)
    d = params.d
    write_csv(out / "paths.csv", ["path", "n"] + [f"x{i}" for i in range(d)],
              ([i, int(n)] + list(ens.values[i, j]) for i in range(len(ens)) for j, n in enumerate(ens.n)))
    return Outcome({"kind": kind, "paths": len(ens), "truncation_depth": ens.truncation_depth,
                    "truncation_bound": ens.truncation_bound, "flagged": ens.flagged},
                   {"truncation_within_tolerance": not ens.flagged})


def _run_bdecomp(cfg: ExperimentConfig, out: Path) -> Outcome:
    law = law_from_config(cfg.law)
    o = cfg.options
    b = float(o["b"])
    pcf = ProductCF.from_law(law, b)
    zs = default_z_grid(law.dim, o["grid_points"], float(o["grid_lim"]), seed=cfg.seed)
    vals = [mu_hat(pcf, z) for z in zs]
    write_csv(out / "cf.csv", [f"z{i}" for i in range(law.dim)] + ["re", "im", "tail_bound", "terms"],
              (list(z) + [v.value.real, v.value.imag, v.bound, v.terms] for z, v in zip(zs, vals)))
    resid = check_fixed_point(pcf, zs)
    summary: dict[str, Any] = {"b": b, "grid_size": len(zs), "fixed_point_residual": resid}
    flags = {"fixed_point": resid <= 1e-10}
    if o["samples"] > 0:
        x = w0_samples(law, 1.0 / b, o["samples"], derive_seed(cfg.seed, ["w0"]), workers=cfg.workers)
        m = empirical_cf_match(x, pcf, zs)
        summary["empirical_cf"] = {"deviation": m.deviation, "band": m.band}
        flags["empirical_cf"] = m.passed
    return Outcome(summary, flags)


def _run_classify(cfg: ExperimentConfig, out: Path) -> Outcome:
    F = _small_ball(cfg)
    g = gauge_from_config(cfg.gauge)
    o = cfg.options
    rep = sum_classifier(F, g, o["deltas"], horizon=o["horizon"])
    deltas = [d for d, _ in rep.per_delta]
    write_csv(out / "partial_sums.csv", ["block", "position"] + [f"log_sum_delta_{d:g}" for d in deltas],
              ([k, rep.block_positions[k]] + list(rep.log_partial_sums[:, k])
               for k in range(rep.block_positions.size)))
    return Outcome(rep.to_json(), {}, rep.undecided)


def _log_int(n: int) -> float:
    return math.log(n) if n > 0 else -math.inf


def _run_type_a(cfg: ExperimentConfig, out: Path) -> Outcome:
    F = _small_ball(cfg)
    o = cfg.options
    dv = dominated_variation_test(F)
    g = construct_type_a_gauge(F, float(o["a"]), float(o["r0"]), o["steps"])
    audit = audit_type_a_gauge(g, F, float(o["a"]))
    # starts and gaps are exact integers far beyond float range; store natural logs
    gaps = g.gaps()
    write_csv(out / "staircase.csv", ["step", "level", "log_start", "log_gap"],
              ([k, g.levels[k], _log_int(g.starts[k]), _log_int(gaps[k])] for k in range(len(g.levels))))
    return Outcome({"dominated_variation": dv.verdict, "levels": list(g.levels),
                    "audit": audit._asdict()}, {"audit": audit.passed})


def _run_kw(cfg: ExperimentConfig, out: Path) -> Outcome:
    law = law_from_config(cfg.law)
    o = cfg.options
    a = float(o["a"])
    lam = float(law.atom_at_zero)
    lap = _laplace_for(law, seed=derive_seed(cfg.seed, ["laplace"]))
    index = -math.log(lam) / math.log(a)
    rows, rel = [], []
    for r in o["radii"]:
        q = k_w(float(r), lap, lam, a, "quad")
        t = k_w(float(r), lap, lam, a, "trapezoid", o["trapezoid_points"])
        rows.append([r, q, t])
        rel.append(abs(q - t) / abs(q))
    write_csv(out / "kw.csv", ["r", "kw_quad", "kw_trapezoid"], rows)
    kwf = KWFunction(lap, lam, a)
    r_small = float(min(o["radii"]))
    ratio = float(kwf(2 * r_small) / kwf(r_small))
    return Outcome({"lambda": lam, "index": index, "max_relative_quadrature_gap": max(rel),
                    "ratio_2r_over_r": ratio, "ratio_target": 2.0**index, "r_ratio": r_small},
                   {"quadrature_agreement": max(rel) <= 1e-6})


def _run_lil_hitting(cfg: ExperimentConfig, out: Path) -> Outcome:
    o = cfg.options
    bc = _brownian(cfg)
    if o["last_exit"]:
        radii = np.asarray(o["radii"], dtype=float)
        hs = brownian_last_exit(bc, radii, workers=cfg.workers)
        write_csv(out / "last_exit.csv", ["motion", "r", "T", "L", "flagged"],
                  ([j, radii[k], hs.T[j, k], hs.L[j, k], bool(hs.flagged[j])]
                   for j in range(bc.N) for k in range(radii.size)))
        ok = ~hs.flagged
        oracle = {}
        for k, r in enumerate(radii):
            res = ks_censored(hs.L[ok, k], lambda t, r=r: getoor_last_exit_cdf(t, r), np.inf) if bc.d == 3 else None
            if res is not None:
                oracle[repr(float(r))] = res._asdict()
        # selfsimilarity on independent halves: X(r_k) against (r_k/r_0)^2 X(r_0)
        half = int(ok.sum()) // 2
        T, L = hs.T[ok], hs.L[ok]
        scaling = {}
        for k in range(1, radii.size):
            c2 = (radii[k] / radii[0]) ** 2
            for name, X in (("T", T), ("L", L)):
                res = ks_two_sample_censored(X[half:, k], c2 * X[:half, 0], np.inf)
                scaling[f"{name}:{float(radii[k])!r}"] = res._asdict()
        summary = {"mode": "last-exit", "flagged": int(hs.flagged.sum()), "oracle_ks": oracle,
                   "selfsimilarity_ks": scaling,
                   "mean_T_over_r2": list(hs.T[ok].mean(axis=0) / radii**2)}
        flags = {f"oracle {k}": v["statistic"] <= v["critical"] for k, v in oracle.items()}
        flags.update({f"selfsimilarity {k}": v["statistic"] <= v["critical"] for k, v in scaling.items()})
        return Outcome(summary, flags)
    rep = lil_hitting_experiment(bc, o["K"], o["replicates"], o["Ns"], o["k0"], cfg.workers)
    return _write_lil(rep, out, "hitting", duality=True)


def _write_lil(rep, out: Path, label: str, duality: bool = False) -> Outcome:
    Ns = sorted(rep.raw)
    write_csv(out / f"lil_{label}.csv", ["N", "replicate", "k", "grid", "raw", "running"],
              ([N, i, int(rep.k[j]), rep.grid[j], rep.raw[N][i, j], rep.running[N][i, j]]
               for N in Ns for i in range(rep.raw[N].shape[0]) for j in range(rep.k.size)))
    summary = rep.to_json()
    flags = {f"band_N{N}": rep.in_band_fraction(N) >= 0.8 for N in Ns[:1]}
    if len(Ns) > 1:
        m1, m2 = rep.median(Ns[0]), rep.median(Ns[1])
        flags["monotone_in_N"] = bool(np.all(m2 > m1) if label == "hitting" else np.all(m2 < m1))
    if duality:
        dc = duality_check(rep, Ns[0])
        summary["duality_bit_equal"] = dc.bit_equal
        flags["duality"] = dc.bit_equal
    return Outcome(summary, flags)


def _run_lil_sup(cfg: ExperimentConfig, out: Path) -> Outcome:
    o = cfg.options
    rep = lil_sup_experiment(_brownian(cfg), o["K"], o["replicates"], o["Ns"], o["k0"], o["rel_step"], cfg.workers)
    return _write_lil(rep, out, "sup")


def _run_lil_stable(cfg: ExperimentConfig, out: Path) -> Outcome:
    o = cfg.options
    sb = stable_small_ball(float(o["alpha"]), o["r_grid"], o["count"], cfg.seed)
    write_csv(out / "small_ball.csv", ["r", "p_hat", "se", "hits", "excluded"],
              zip(sb.r, sb.p_hat, sb.se, sb.hits, sb.excluded))
    summary = {"alpha": sb.alpha, "fit": sb.fit._asdict(), "band": list(sb.band),
               "excluded": int(sb.excluded.sum())}
    flags = {"slope_in_band": sb.slope_ok}
    if sb.alpha == 0.5:
        z = sb.oracle_z()
        summary["oracle_max_abs_z"] = float(np.max(np.abs(z)))
        const = stable_escape_constants()
        summary["escape_constant_brackets"] = {"upper": list(const.upper), "lower": list(const.lower)}
    return Outcome(summary, flags)


def _run_bound(cfg: ExperimentConfig, out: Path) -> Outcome:
    o = cfg.options
    res = hitting_probability_bound_check(o["process"], float(o["b"]), float(o["c"]), float(o["gamma"]),
                                          float(o["eps"]), o["count"], cfg.seed)
    write_csv(out / "bound.csv", ["lhs", "lhs_se", "rhs", "numerator", "denominator", "margin"],
              [[res.lhs, res.lhs_se, res.rhs, res.numerator, res.denominator, res.margin]])
    return Outcome({**res._asdict(), "margin": res.margin}, {"bound_holds": res.holds})


RUNNERS: dict[str, Callable[[ExperimentConfig, Path], Outcome]] = {
    "simulate-w": _run_simulate,
    "simulate-y": _run_simulate,
    "bdecomp": _run_bdecomp,
    "classify": _run_classify,
    "typeA-gauge": _run_type_a,
    "kw": _run_kw,
    "lil-hitting": _run_lil_hitting,
    "lil-sup": _run_lil_sup,
    "lil-stable": _run_lil_stable,
    "bound-check": _run_bound,
}


def run(cfg: ExperimentConfig, out: str | Path, force: bool = False) -> RunRecord:
    """Run one experiment into directory ``out``.

    Files are written to a scratch directory next to ``out`` and moved into
    place only on success, so a failed run leaves nothing behind.  An
    existing nonempty ``out`` is an error unless ``force`` is set.
    """
    out = Path(out)
    if out.exists() and (not out.is_dir() or any(out.iterdir())) and not force:
        raise ConfigError([f"out: {out} exists; pass --force to overwrite"])
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    t0 = time.perf_counter()
    try:
        outcome = RUNNERS[cfg.experiment](cfg, tmp)
        # the worker count only schedules work, so it stays out of the digested files
        config = {k: v for k, v in cfg.snapshot().items() if k != "workers"}
        summary = {"config": config, "version": __version__, **outcome.summary, "flags": outcome.flags}
        write_json(tmp / "summary.json", summary)
        digests = {p.name: sha256(p) for p in sorted(tmp.iterdir())}
        failed = [k for k, v in outcome.flags.items() if not v]
        code = EXIT_INVARIANT if failed else EXIT_UNDECIDED if outcome.undecided else EXIT_OK
        status = "invariant-failure" if failed else "undecided" if outcome.undecided else "ok"
        record = RunRecord(cfg.snapshot(), __version__, time.perf_counter() - t0, digests,
                           outcome.flags, status, code)
        write_json(tmp / "run.json", record.to_json())
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out.exists():
        shutil.rmtree(out) if out.is_dir() else out.unlink()
    tmp.rename(out)
    return record


# ------------------------------------------------------ invariant suite

def _inv_seed() -> None:
    from .rng import derive_seed as ds

    assert ds(1, ["a", 2]) == ds(1, ["a", 2])
    assert ds(1, ["a", "b"]) != ds(1, ["ab"])
    assert ds(1, [1]) != ds(1, ["1"])


def _inv_point_mass() -> None:
    from .distributions import PointMass
    from .sequences import build_w_path

    p = build_w_path(SequenceParams(2.0, 1, 0, 3), PointMass(1.0), truncation_depth=60, seed=0)
    exact = 2.0 ** np.arange(0, 4) * 2.0
    assert np.allclose(p.values[:, 0], exact, rtol=1e-12), p.values[:, 0]


def _inv_fixed_point() -> None:
    from .distributions import BernoulliScaled, Gaussian

    for law in (Gaussian.standard(1), BernoulliScaled(0.5, (1.0,))):
        for b in (0.3, 0.5, 0.8):
            r = check_fixed_point(ProductCF.from_law(law, b), default_z_grid(1))
            assert r <= 1e-10, (law, b, r)


def _inv_classifier() -> None:
    from .escape import PowerLog

    rep = sum_classifier(SmallBallCDF.power(1.0), PowerLog(1.0))
    assert all(v == "diverges" for v in rep.verdicts), rep.verdicts
    rep = sum_classifier(SmallBallCDF.power(1.0), PowerLog(1.0, 2.0))
    assert all(v == "converges" for v in rep.verdicts), rep.verdicts


def _inv_dominated_variation() -> None:
    for beta in (0.5, 1.0, 2.0, 3.0):
        assert dominated_variation_test(SmallBallCDF.power(beta)).verdict == "yes"
    F = SmallBallCDF.exp_inverse()
    assert dominated_variation_test(F).verdict == "no"
    assert audit_type_a_gauge(construct_type_a_gauge(F, 2.0), F, 2.0).passed


def _inv_kw() -> None:
    from .distributions import BernoulliScaled

    law = BernoulliScaled(0.5, (1.0,))
    assert k_w(1.0, law.laplace, 0.5, 2.0) == 1.0
    q = k_w(2.0**-10, law.laplace, 0.5, 2.0)
    t = k_w(2.0**-10, law.laplace, 0.5, 2.0, "trapezoid")
    assert abs(q - t) <= 1e-6 * q


def _inv_hitting() -> None:
    from .levy_lil import brownian_hitting

    hs = brownian_hitting(BrownianConfig(d=3, N=256, seed=0), [1.0, 2.0, 4.0])
    assert np.all(np.diff(hs.T, axis=1) > 0)


def _inv_bound() -> None:
    for proc in ("brownian", "stable"):
        assert hitting_probability_bound_check(proc, 1.0, 2.0, 1.0, 1.0, count=10**5).holds


INVARIANTS: dict[str, Callable[[], None]] = {
    "seed-derivation": _inv_seed,
    "point-mass-geometric-series": _inv_point_mass,
    "b-decomposable-fixed-point": _inv_fixed_point,
    "classifier-dichotomy": _inv_classifier,
    "dominated-variation-and-staircase": _inv_dominated_variation,
    "kw-quadratures": _inv_kw,
    "hitting-times-increasing": _inv_hitting,
    "hitting-probability-bound": _inv_bound,
}


def check_invariants() -> dict[str, str]:
    """Run every invariant; values are "ok" or the failure message."""
    results = {}
    for name, fn in INVARIANTS.items():
        try:
            fn()
            results[name] = "ok"
        except Exception as exc:  # noqa: BLE001 - report and continue
            results[name] = f"{type(exc).__name__}: {exc}"
    return results
