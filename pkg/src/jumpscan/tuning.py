"""Data-driven selection of the scale triple and of the detection level.

The scale selections follow the minimum-volatility idea: sweep a candidate
grid, score each candidate by how much a derived statistic wobbles across
its neighbors, and keep the most stable interior candidate.  The detection
level alpha comes from minimizing an upper bound on the probability of
mis-identifying the number of jumps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.ndimage import median_filter
from scipy.stats import norm

from .detect import detect_pipeline
from .field import MultiscaleField, ScaleConfig, multiscale_field, xi_for_star
from .threshold import TailConstants, critical_value, fs_correction, tail_constants

__all__ = [
    "MvReport",
    "select_s_star",
    "select_scales",
    "select_alpha",
    "sigma_sup_estimate",
    "auto_detect",
]


_DEFAULT_Q_GRID = np.arange(0.001, 0.301, 0.001)

# probe candidates below this level's threshold do not inform the level choice
_CANDIDATE_BAR_LEVEL = 0.02
# ... unless their peak scale is this close to the top of the grid
_TOP_SCALE_FRACTION = 0.85


@lru_cache(maxsize=128)
def _cv_grid(tc: TailConstants) -> np.ndarray:
    return np.array([critical_value(q, tc) for q in _DEFAULT_Q_GRID])


@dataclass
class MvReport:
    """Outcome of a minimum-volatility sweep."""

    candidates: list
    scores: list
    chosen_index: int
    note: str = ""

    @property
    def chosen(self):
        return self.candidates[self.chosen_index]


def select_s_star(
    y,
    s_lower: float,
    s_upper: float,
    filt,
    k: int = 2,
    m_candidates: int = 10,
) -> MvReport:
    """Pick the denominator scale by minimum volatility of sqrt(Xi).

    Candidates run linearly from (1/6) n^(-1/2) log^(1/2) n up to
    ``s_lower``; each interior candidate is scored by the worst-case (over
    time) sample variance of sqrt(Xi(t)) across its 2k+1 neighbors.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if m_candidates < 2 * k + 3:
        raise ValueError("m_candidates must be at least 2k + 3")
    lo = (1.0 / 6.0) * n ** -0.5 * math.log(n) ** 0.5
    if lo >= s_lower:
        raise ValueError("s_lower below the smallest admissible candidate")
    cands = np.linspace(lo, s_lower, m_candidates)
    keep = cands * n >= 2
    if not np.all(keep):
        warnings.warn("dropping candidate scales with n*s < 2")
        cands = cands[keep]
    if len(cands) < 2 * k + 1:
        raise ValueError("too few viable candidates after dropping small scales")
    roots = []
    for s in cands:
        roots.append(np.sqrt(xi_for_star(y, float(s), s_upper, filt)))
    roots = np.vstack(roots)
    b = int(math.floor(n * s_upper))
    core = roots[:, b : n - b]
    scores = []
    for r in range(len(cands)):
        if r - k < 0 or r + k >= len(cands):
            scores.append(np.inf)
            continue
        block = core[r - k : r + k + 1]
        scores.append(float(np.max(np.var(block, axis=0, ddof=1))))
    chosen = int(np.argmin(scores))
    return MvReport(
        candidates=[float(c) for c in cands],
        scores=scores,
        chosen_index=chosen,
        note=f"minimum-volatility over {len(cands)} denominator scales, k={k}",
    )


def select_scales(
    y,
    filt,
    alpha: float = 0.05,
    grid1=None,
    grid2=None,
    k3: int = 2,
    threads: int = 1,
    **detect_kw,
) -> MvReport:
    """Pick (s_lower, s_upper) where the detected jump count is most stable.

    Runs the full detector on every admissible candidate pair; the score of
    an interior pair is the sample variance of the counts over its
    (2 k3 + 1)^2 neighborhood, restricted to admissible pairs.  Ties break
    toward the smallest s_lower + s_upper.

    The sweep skips the finite-sample threshold calibration by default
    (counts shift almost uniformly across pairs, and calibrating every
    candidate pair would dominate the cost); pass ``fs_correct=True`` to
    override.
    """
    detect_kw.setdefault("fs_correct", False)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if grid1 is None:
        grid1 = np.linspace(n ** (-1 / 3) / 4, n ** (-1 / 3) / 2, 7)
    if grid2 is None:
        grid2 = np.linspace(n ** (-1 / 6) / 6, n ** (-1 / 6) / 3, 7)
    grid1 = np.asarray(grid1, dtype=float)
    grid2 = np.asarray(grid2, dtype=float)
    if np.any(np.diff(grid1) <= 0) or np.any(np.diff(grid2) <= 0):
        raise ValueError("candidate grids must be strictly increasing")
    k1, k2 = len(grid1), len(grid2)
    if k1 < 2 * k3 + 1 or k2 < 2 * k3 + 1:
        raise ValueError("k3 exceeds the grid radius")

    sstar_cache = {}

    def s_star_for(sl):
        if sl not in sstar_cache:
            sstar_cache[sl] = select_s_star(y, sl, float(grid2[-1]), filt).chosen
        return sstar_cache[sl]

    counts = np.full((k1, k2), -1, dtype=int)
    for i, sl in enumerate(grid1):
        for j, su in enumerate(grid2):
            if sl >= su or su > 0.5:
                continue
            cfg = ScaleConfig(s_lower=float(sl), s_upper=float(su), s_star=s_star_for(float(sl)))
            res = detect_pipeline(y, cfg, filt, alpha=alpha, threads=threads, **detect_kw)
            counts[i, j] = res.count
    if np.all(counts < 0):
        raise ValueError("no admissible (s_lower, s_upper) pair in the grids")

    pairs, scores = [], []
    for i in range(k3, k1 - k3):
        for j in range(k3, k2 - k3):
            if counts[i, j] < 0:
                continue
            nb = counts[i - k3 : i + k3 + 1, j - k3 : j + k3 + 1]
            nb = nb[nb >= 0]
            if len(nb) < 2:
                continue
            pairs.append((float(grid1[i]), float(grid2[j])))
            scores.append(float(np.var(nb, ddof=1)))
    if not pairs:
        raise ValueError("no admissible interior pair")
    order = sorted(
        range(len(pairs)), key=lambda r: (scores[r], pairs[r][0] + pairs[r][1])
    )
    chosen = order[0]
    return MvReport(
        candidates=pairs,
        scores=scores,
        chosen_index=chosen,
        note=f"count-stability over {len(pairs)} interior scale pairs, k3={k3}",
    )


def select_alpha(
    n: int,
    s_upper: float,
    sigma_sup: float,
    tc: TailConstants,
    filt,
    m_guess: float | None = None,
    delta_guess: float | None = None,
    correction: float = 1.0,
    q_grid=None,
) -> float:
    """Detection level minimizing a mis-identification bound.

    Balances the false-alarm level q against the chance of missing one of
    ``m_guess`` jumps of size ``delta_guess``; the miss term is evaluated
    through the detectability ratio xi_n implied by the configuration.
    ``correction`` scales the thresholds the same way detection does.
    """
    if sigma_sup <= 0:
        raise ValueError("sigma_sup must be positive")
    if m_guess is None:
        m_guess = 1.0 / (2.0 * s_upper)
    if delta_guess is None:
        delta_guess = s_upper
    mom = filt.moments()
    xi_n = (
        math.sqrt(n * s_upper)
        * delta_guess
        * mom.f0
        / (sigma_sup * math.sqrt(mom.u11))
    )
    if not math.isfinite(xi_n):
        raise ValueError("non-finite detectability ratio")
    if q_grid is None:
        q_grid = _DEFAULT_Q_GRID
        cvals = _cv_grid(tc) * correction
    else:
        q_grid = np.asarray(q_grid)
        cvals = np.array([critical_value(q, tc) for q in q_grid]) * correction
    hit = norm.cdf(cvals - xi_n) - norm.cdf(-cvals - xi_n)
    miss = 1.0 - (1.0 - hit) ** m_guess
    delta = q_grid + miss
    return float(q_grid[int(np.argmin(delta))])


def sigma_sup_estimate(field_: MultiscaleField) -> float:
    """Largest local noise level implied by the denominator series.

    Median-smooths Xi over a window of floor(n * s_star) points to damp
    jump contamination, then returns max over valid t of sqrt(Xi / u11).
    """
    n = field_.n
    w = max(int(math.floor(n * field_.cfg.s_star)), 1)
    smoothed = median_filter(field_.xi, size=w, mode="nearest")
    vals = smoothed[field_.valid]
    if len(vals) == 0:
        raise ValueError("no valid denominator entries")
    return float(np.sqrt(np.max(vals) / field_.u11))


def _implied_jump_size(g_value, n, s_upper, sigma_sup, filt):
    """Jump size whose detectability ratio equals the observed peak value.

    Inverting the ratio makes the follow-up level selection depend on the
    peak statistic itself, so the noise-level estimate cancels out.
    """
    m = filt.moments()
    return g_value * sigma_sup * math.sqrt(m.u11) / (math.sqrt(n * s_upper) * m.f0)


def auto_detect(
    y,
    filt,
    cfg: ScaleConfig | None = None,
    alpha: float | str = "auto",
    threads: int = 1,
    **detect_kw,
):
    """Detection with data-driven tuning; returns (result, info).

    Missing scales come from the minimum-volatility selections.  With
    ``alpha='auto'`` the level is chosen by :func:`select_alpha` and, when
    a first pass finds jumps, refreshed once with the detected count and
    estimated minimum jump size before the final pass.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    info = {}
    if cfg is None:
        pair = select_scales(y, filt, alpha=0.05, k3=2, threads=threads, **detect_kw)
        sl, su = pair.chosen
        star = select_s_star(y, sl, su, filt)
        cfg = ScaleConfig(s_lower=sl, s_upper=su, s_star=star.chosen)
        info["scale_report"] = pair
        info["s_star_report"] = star
    info["config"] = cfg

    if alpha != "auto":
        res = detect_pipeline(y, cfg, filt, alpha=float(alpha), threads=threads, **detect_kw)
        info["alpha"] = float(alpha)
        return res, info

    tc = tail_constants(filt, cfg.s_lower, cfg.s_upper)
    corr = (
        fs_correction(n, cfg, filt)
        if detect_kw.get("fs_correct", True)
        and not str(detect_kw.get("threshold_mode", "analytic")).startswith("fixed")
        else 1.0
    )
    field_ = multiscale_field(y, cfg, filt, threads=threads)
    sigma = sigma_sup_estimate(field_)
    a1 = select_alpha(n, cfg.s_upper, sigma, tc, filt, correction=corr)
    res = detect_pipeline(y, cfg, filt, alpha=a1, threads=threads, field_=field_, **detect_kw)
    info["alpha_round1"] = a1
    # Refinement round.  The rule-of-thumb size guess is pessimistic, so the
    # first level is usually the grid minimum.  A moderate-level probe
    # always runs to enumerate candidate jumps (the strict pass may see only
    # the strongest), and the weakest candidate peak implies the size guess
    # for the final level.  Marginal probe peaks imply a marginal size,
    # which drives the selected level back to the grid minimum, so a
    # spurious probe hit cannot survive to the final pass.
    probe = detect_pipeline(
        y, cfg, filt, alpha=max(0.10, a1), threads=threads, field_=field_, **detect_kw
    )
    # Candidates barely above the probe threshold are as likely noise
    # exceedances as jumps; letting them drive the size guess would push
    # the level to the grid ceiling.  A candidate informs the final level
    # if it would survive a strict pass, or if its peak is achieved near
    # the top of the scale grid: genuine jumps are maximized at the widest
    # scales (the response grows with the window), while noise exceedances
    # scatter across the grid.
    bar = critical_value(_CANDIDATE_BAR_LEVEL, tc) * corr
    strong = [
        j
        for j in probe.jumps_raw
        if j.g_value >= bar or j.scale >= _TOP_SCALE_FRACTION * cfg.s_upper
    ]
    if strong:
        g_min = min(j.g_value for j in strong)
        a2 = select_alpha(
            n,
            cfg.s_upper,
            sigma,
            tc,
            filt,
            m_guess=len(strong),
            delta_guess=_implied_jump_size(g_min, n, cfg.s_upper, sigma, filt),
            correction=corr,
        )
        if abs(a2 - a1) > 1e-12:
            res = detect_pipeline(
                y, cfg, filt, alpha=a2, threads=threads, field_=field_, **detect_kw
            )
        info["alpha_round2"] = a2
    info["alpha"] = res.alpha
    info["sigma_sup"] = sigma
    return res, info
