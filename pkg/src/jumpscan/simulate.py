"""Synthetic data generators and Monte-Carlo evaluation harness.

Noise processes are piecewise locally stationary: time-varying ARMA(1, 1)
recursions (optionally with abrupt regime breaks) or an explicit
time-varying moving-average expansion, each driven by one of several
standardized innovation families.  Mean models combine smooth trends with
step components carrying a known jump set, which the Monte-Carlo harness
scores detections against.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .detect import detect_pipeline
from .field import ScaleConfig
from .tuning import auto_detect
from .util import rng_for

__all__ = [
    "PlsScenario",
    "DetectorSpec",
    "gen_series",
    "monte_carlo",
    "increasing_jump_count",
    "increasing_jump_size",
    "NOISE_MODELS",
    "MEAN_MODELS",
]

_MA_TRUNC = 40  # |coef| <= 0.4 => truncation error below 1e-15


# ---------------------------------------------------------------------------
# innovations
# ---------------------------------------------------------------------------

def _innovations(kind: str, size: int, rng) -> np.ndarray:
    if kind == "normal":
        return rng.standard_normal(size)
    if kind == "chisq3":
        return (rng.chisquare(3, size) - 3.0) / math.sqrt(6.0)
    if kind == "rademacher":
        return rng.integers(0, 2, size) * 2.0 - 1.0
    if kind == "t6":
        return rng.standard_t(6, size) / math.sqrt(1.5)
    if kind == "t8":
        return rng.standard_t(8, size) / math.sqrt(4.0 / 3.0)
    raise ValueError(f"unknown innovation family {kind!r}")


# ---------------------------------------------------------------------------
# recursions
# ---------------------------------------------------------------------------

def _tv_arma(n, burn_in, phi, theta, kind, rng):
    """Time-varying ARMA(1,1): x_i = phi(t_i) x_{i-1} + e_i + theta(t_i) e_{i-1}.

    Evaluated through the unrolled product expansion so the whole path is
    vectorized; ``burn_in`` pre-sample innovations serve the expansion,
    with t clamped at the first in-sample point.
    """
    total = burn_in + n
    t = np.maximum(np.arange(-burn_in, n) + 1, 1) / n
    eta = _innovations(kind, total + 1, rng)
    th = theta(t) if callable(theta) else np.full(total, float(theta))
    ph = phi(t) if callable(phi) else np.full(total, float(phi))
    u = eta[1:] + th * eta[:-1]
    pmax = float(np.max(np.abs(ph)))
    if pmax >= 0.999:
        raise ValueError("AR coefficient too close to 1")
    lag = total if pmax == 0 else min(total, int(math.ceil(math.log(1e-15) / math.log(max(pmax, 1e-6)))))
    acc = u.copy()
    amp = np.ones(total)
    for j in range(1, lag + 1):
        shifted_phi = np.concatenate([np.ones(j - 1), ph[: total - (j - 1)]]) if j > 1 else ph
        amp = amp * shifted_phi
        if not np.any(amp):
            break
        su = np.concatenate([np.zeros(j), u[: total - j]])
        acc += amp * su
    return acc[burn_in:]


def _tv_ma(n, burn_in, base, amp, kind, rng, trunc=_MA_TRUNC):
    """Explicit MA expansion x_i = amp(t_i) * sum_j base(t_i)^j eta_{i-j}."""
    total = burn_in + n
    t = np.maximum(np.arange(-burn_in, n) + 1, 1) / n
    eta = _innovations(kind, total, rng)
    b = base(t)
    acc = np.zeros(total)
    bp = np.ones(total)
    for j in range(trunc + 1):
        se = np.concatenate([np.zeros(j), eta[: total - j]]) if j else eta
        acc += bp * se
        bp = bp * b
    return (amp(t) * acc)[burn_in:]


# ---------------------------------------------------------------------------
# noise models
# ---------------------------------------------------------------------------

def _steps(t, breaks_plus_one: int, top_even: int):
    """sum over even u <= top_even of 1(u/m < t <= (u+1)/m), m = breaks_plus_one."""
    m = breaks_plus_one
    out = np.zeros_like(t)
    for u in range(0, top_even + 1, 2):
        out += ((t > u / m) & (t <= (u + 1) / m)).astype(float)
    return out


def increasing_jump_count(n: int) -> int:
    """Number of mean jumps in the growing-sample scenario."""
    return max(1, round((4.0 / 3.0) * (math.log(n) / 6.0) ** 5))


def increasing_jump_size(n: int) -> float:
    return 4.0 / (math.log(n) / 6.0) ** 2


def _plsn_g(n: int):
    kf = increasing_jump_count(n) // 2
    if kf < 1:
        return lambda t: np.ones_like(t)
    return lambda t: _steps(t, kf + 1, kf)


def _noise_gs(n, burn_in, rng):
    return rng.standard_normal(n)


def _noise_ps(n, burn_in, rng):
    g0 = _tv_arma(n, burn_in, 0.25, 0.0, "chisq3", rng)
    g1 = _tv_arma(n, burn_in, -0.25, 0.0, "chisq3", rng)
    t = (np.arange(n) + 1) / n
    return np.where(t <= 0.5, 0.75 * g0, 1.25 * g1)


def _noise_arma(n, burn_in, rng):
    x = _tv_arma(n, burn_in, 0.3, 0.5, "normal", rng)
    return x / 2.142857


def _noise_ls(n, burn_in, rng):
    g = _tv_arma(n, burn_in, lambda t: 0.5 * t - 0.2, 0.0, "rademacher", rng)
    t = (np.arange(n) + 1) / n
    return (1.0 + 0.5 * t) * g


def _noise_pls(n, burn_in, rng):
    g0 = _tv_arma(n, burn_in, lambda t: 0.5 - t, lambda t: 0.2 - 0.5 * t, "t6", rng)
    g1 = _tv_arma(
        n, burn_in, lambda t: 0.5 * np.sin(2 * np.pi * t), lambda t: 0.5 * (t - 0.2) ** 2,
        "t6", rng,
    )
    t = (np.arange(n) + 1) / n
    return np.where(t <= 0.4, g0, g1)


def _noise_psn(n, burn_in, rng):
    def a(t):
        b = (
            -0.3 * ((t > 0) & (t <= 0.25))
            + 0.1 * ((t > 0.25) & (t <= 2.0 / 3.0))
            + 0.2 * ((t > 2.0 / 3.0) & (t <= 0.75))
            - 0.1 * (t > 0.75)
        )
        return 1.25 * b

    return _tv_arma(n, burn_in, a, 0.0, "chisq3", rng)


def _noise_lsn(n, burn_in, rng):
    return _tv_arma(
        n, burn_in, lambda t: 3.0 * (t - 0.5) ** 2 - 0.3, lambda t: 0.2 - 0.4 * t,
        "t8", rng,
    )


def _noise_plsn(n, burn_in, rng):
    g = _plsn_g(n)
    return _tv_ma(
        n,
        burn_in,
        base=lambda t: 0.2 * np.cos(2 * np.pi * t) + 0.2 * g(t),
        amp=lambda t: 0.6 * (1.0 + 0.7 * g(t)),
        kind="normal",
        rng=rng,
    )


def _noise_smoothpls(n, burn_in, rng):
    g0 = _tv_arma(n, burn_in, lambda t: 0.5 * t - 0.2, 0.0, "t8", rng)
    g1 = _tv_arma(n, burn_in, lambda t: 0.6 * np.cos(2 * np.pi * t), 0.0, "t8", rng)
    t = (np.arange(n) + 1) / n
    return np.where(t <= 0.6, g0, g1)


NOISE_MODELS = {
    "GS": _noise_gs,
    "PS": _noise_ps,
    "ARMA": _noise_arma,
    "LS": _noise_ls,
    "PLS": _noise_pls,
    "PSnP": _noise_psn,
    "LSnP": _noise_lsn,
    "PLSnP": _noise_plsn,
    "SmoothPLS": _noise_smoothpls,
}


# ---------------------------------------------------------------------------
# mean models
# ---------------------------------------------------------------------------

def _mean_I(t, sc):
    return 2.5 * (t >= 0.5), [(0.5, 2.5)]


def _mean_II(t, sc):
    b = (
        (5 * np.sin(np.pi * t) + 2.75) * (t <= 1 / 3)
        + 5 * np.sin(np.pi * t) * ((t > 1 / 3) & (t <= 2 / 3))
        + (5 * np.sin(2 * np.pi / 3) + 2.75)
        * (1 - 10 * (t - 2 / 3) ** 2)
        * (t > 2 / 3)
    )
    return b, [(1 / 3, -2.75), (2 / 3, 2.75)]


def _steps_nine(t):
    return _steps(t, 9, 8)


def _mean_In(t, sc):
    truth = [(i / 9, 1.99 if i % 2 == 0 else -1.99) for i in range(1, 9)]
    return 1.0 + 1.99 * _steps_nine(t), truth


def _mean_IIn(t, sc):
    truth = [(i / 9, 1.99 if i % 2 == 0 else -1.99) for i in range(1, 9)]
    return 5 * np.sin(2 * np.pi * t) + 1.99 * _steps_nine(t), truth


def _mean_increasing(t, sc):
    n = sc.n
    k = increasing_jump_count(n)
    delta = increasing_jump_size(n)
    truth = [(i / (k + 1), delta if i % 2 == 0 else -delta) for i in range(1, k + 1)]
    return 10.0 * t + delta * _steps(t, k + 1, k), truth


def _mean_smooth(t, sc):
    d = sc.d
    truth = [] if d == 0 else [(0.5, -d)]
    return np.cos(np.pi * t) + d * ((t > 0) & (t <= 0.5)), truth


def _mean_zero(t, sc):
    return np.zeros_like(t), []


MEAN_MODELS = {
    "I": _mean_I,
    "II": _mean_II,
    "InP": _mean_In,
    "IInP": _mean_IIn,
    "increasing": _mean_increasing,
    "smooth_shift": _mean_smooth,
    "zero": _mean_zero,
}

# scenario presets: (default noise, noise multiplier)
_PRESETS = {
    "InP": (None, 1.1),
    "IInP": (None, 1.1),
    "increasing": ("PLSnP", 1.1),
    "smooth_shift": ("SmoothPLS", 0.5),
}


@dataclass(frozen=True)
class PlsScenario:
    """Declarative scenario: mean model + noise process + size + seed."""

    mean_model: str
    noise_model: str
    n: int
    seed: int = 0
    burn_in: int = 500
    d: float = 0.0
    noise_scale: float = 1.0

    @classmethod
    def make(cls, mean_model, noise_model=None, n=500, seed=0, d=0.0, burn_in=500):
        """Scenario with the conventional noise pairing and scaling applied."""
        if mean_model not in MEAN_MODELS:
            raise ValueError(f"unknown mean model {mean_model!r}")
        default_noise, scale = _PRESETS.get(mean_model, (None, 1.0))
        noise = noise_model or default_noise
        if noise is None:
            raise ValueError(f"noise model required for mean {mean_model!r}")
        if noise not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {noise!r}")
        return cls(
            mean_model=mean_model, noise_model=noise, n=n, seed=seed,
            burn_in=burn_in, d=d, noise_scale=scale,
        )


def _generate(sc: PlsScenario, rng):
    if sc.n < 100:
        raise ValueError("n must be at least 100")
    if sc.mean_model not in MEAN_MODELS:
        raise ValueError(f"unknown mean model {sc.mean_model!r}")
    if sc.noise_model not in NOISE_MODELS:
        raise ValueError(f"unknown noise model {sc.noise_model!r}")
    t = (np.arange(sc.n) + 1.0) / sc.n
    beta, truth = MEAN_MODELS[sc.mean_model](t, sc)
    eps = NOISE_MODELS[sc.noise_model](sc.n, sc.burn_in, rng)
    return beta + sc.noise_scale * eps, truth


def gen_series(sc: PlsScenario):
    """Simulate one series; returns (y, truth) with truth = [(loc, size), ...]."""
    return _generate(sc, rng_for(sc.seed))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetectorSpec:
    """Detector settings used by the Monte-Carlo harness."""

    cfg: ScaleConfig
    alpha: object = "auto"  # float or "auto"
    threshold_mode: str = "analytic"
    fs_correct: bool = True
    z: float | None = None
    filt: object = None  # defaults to the built-in optimal filter
    auto_s_star: bool = False  # re-select the denominator scale per replicate

    def filter(self):
        if self.filt is not None:
            return self.filt
        from .filters import builtin_wstar

        return builtin_wstar()


def _mad(estimates, truth):
    est = sorted(estimates)
    tru = sorted(loc for loc, _ in truth)
    return float(np.mean([abs(a - b) for a, b in zip(est, tru)]))


def _mc_one(task):
    """One replicate; module-level so process pools can ship it."""
    sc, det, seed, r = task
    filt = det.filter()
    y, truth = _generate(sc, rng_for(seed, r))
    t0 = time.perf_counter()
    cfg = det.cfg
    if det.auto_s_star:
        from dataclasses import replace

        from .tuning import select_s_star

        star = select_s_star(y, cfg.s_lower, cfg.s_upper, filt).chosen
        cfg = replace(cfg, s_star=star)
    if det.alpha == "auto":
        res, _ = auto_detect(
            y, filt, cfg=cfg, alpha="auto",
            threshold_mode=det.threshold_mode, fs_correct=det.fs_correct, z=det.z,
        )
    else:
        res = detect_pipeline(
            y, cfg, filt, alpha=float(det.alpha),
            threshold_mode=det.threshold_mode, fs_correct=det.fs_correct, z=det.z,
        )
    dt = time.perf_counter() - t0
    hit = res.count == len(truth)
    mad_raw = mad_ref = math.nan
    if hit and truth:
        mad_raw = _mad([j.location for j in res.jumps_raw], truth)
        mad_ref = _mad(res.jumps_refined, truth)
    return res.count, hit, mad_raw, mad_ref, dt


def monte_carlo(sc: PlsScenario, det: DetectorSpec, R: int = 200, seed: int = 0, threads: int = 1):
    """Replicate gen_series -> detection R times and score against truth.

    hit_rate is the fraction of replicates whose detected count matches the
    true count; location errors (MAD, per replicate the mean absolute
    deviation after sorting) are aggregated over hits only.  Replicates use
    independent streams derived from (seed, r), so results do not depend on
    the worker count.  Parallel replicates run in forked worker processes
    (the replicate loop is small-array bound, which starves thread pools).
    """
    if R < 50:
        raise ValueError("R must be at least 50")

    filt = det.filter()
    if det.fs_correct and not det.threshold_mode.startswith("fixed"):
        from .threshold import fs_correction

        fs_correction(sc.n, det.cfg, filt)  # warm the cache before forking

    tasks = [(sc, det, seed, r) for r in range(R)]
    rows = None
    if threads > 1:
        import multiprocessing as mp
        from concurrent.futures import ProcessPoolExecutor

        try:
            ctx = mp.get_context("fork")
            with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
                rows = list(pool.map(_mc_one, tasks, chunksize=max(1, R // (threads * 4))))
        except (ValueError, OSError):
            rows = None
    if rows is None:
        rows = [_mc_one(t) for t in tasks]
    counts = np.array([r[0] for r in rows])
    hits = np.array([r[1] for r in rows])
    mr = np.array([r[2] for r in rows])
    mf = np.array([r[3] for r in rows])
    times = np.array([r[4] for r in rows])
    got = ~np.isnan(mr)
    return {
        "hit_rate": float(np.mean(hits)),
        "mean_m": float(np.mean(counts)),
        "mad_raw": float(np.nanmean(mr)) if got.any() else math.nan,
        "mad_refined": float(np.nanmean(mf)) if got.any() else math.nan,
        "mad_raw_median": float(np.nanmedian(mr)) if got.any() else math.nan,
        "mad_refined_median": float(np.nanmedian(mf)) if got.any() else math.nan,
        "mean_runtime": float(np.mean(times)),
        "counts": counts.tolist(),
        "mad_raw_all": mr.tolist(),
        "mad_refined_all": mf.tolist(),
    }
