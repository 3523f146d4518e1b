import math
import time

import numpy as np
import pytest

from jumpscan.field import ScaleConfig
from jumpscan.filters import builtin_wstar
from jumpscan.threshold import (
    alpha_of_c,
    bootstrap_cv,
    critical_value,
    fs_correction,
    tail_constants,
    upper_bound_cv,
)

W = builtin_wstar()

# reference critical values by (n, s_lower, s_upper); columns: 0.1, 0.05, 0.01
TABLE = [
    (500, 0.061, 0.167, 3.530, 3.735, 4.170),
    (1000, 0.043, 0.125, 3.672, 3.870, 4.289),
    (1500, 0.036, 0.100, 3.742, 3.935, 4.349),
    (2000, 0.031, 0.100, 3.800, 3.990, 4.397),
    (2500, 0.028, 0.083, 3.828, 4.017, 4.422),
    (3000, 0.026, 0.071, 3.850, 4.037, 4.439),
    (3500, 0.024, 0.071, 3.879, 4.066, 4.466),
    (4000, 0.023, 0.062, 3.895, 4.080, 4.478),
    (4500, 0.022, 0.062, 3.913, 4.098, 4.494),
    (5000, 0.020, 0.056, 3.942, 4.125, 4.518),
]


def test_constants_positive():
    tc = tail_constants(W, 0.061, 0.167)
    assert tc.kappa > 0 and tc.zeta1p > 0 and tc.zeta2 > 0


def test_alpha_vanishes_at_large_c():
    tc = tail_constants(W, 0.061, 0.167)
    vals = [alpha_of_c(c, tc) for c in (4.0, 6.0, 8.0, 11.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-20


def test_alpha_decreasing_where_roots_live():
    # the c * exp(-c^2/2) term peaks at c = 1, so the curve may rise on
    # [0.5, 1); there alpha(c) > 0.6, outside any admissible level.  The
    # root region [1, 12] is strictly decreasing (until float underflow),
    # which is what makes the bisection well-posed.
    for _, sl, su, *_ in TABLE[::3]:
        tc = tail_constants(W, sl, su)
        assert alpha_of_c(0.5, tc) > 0.6
        cs = np.linspace(1.0, 12.0, 1000)
        vals = np.array([alpha_of_c(c, tc) for c in cs])
        live = vals[:-1] > 1e-250
        assert np.all(np.diff(vals)[live] < 0)


@pytest.mark.parametrize("row", TABLE)
def test_critical_values_reference_rows(row):
    n, sl, su, c10, c05, c01 = row
    tc = tail_constants(W, sl, su)
    assert critical_value(0.10, tc) == pytest.approx(c10, abs=0.01)
    assert critical_value(0.05, tc) == pytest.approx(c05, abs=0.01)
    assert critical_value(0.01, tc) == pytest.approx(c01, abs=0.01)


def test_critical_value_monotone_in_alpha():
    tc = tail_constants(W, 0.031, 0.100)
    c10, c05, c01 = (critical_value(a, tc) for a in (0.10, 0.05, 0.01))
    assert c10 < c05 < c01


def test_critical_value_near_half_is_root_or_loud():
    # with tiny constants the Gaussian term still brackets alpha=0.49:
    # a genuine root comes back, never a silent wrong value
    from jumpscan.threshold import TailConstants

    tiny = TailConstants(kappa=1e-9, zeta1p=1e-9, zeta2=1e-9)
    c = critical_value(0.49, tiny)
    assert alpha_of_c(c, tiny) == pytest.approx(0.49, abs=1e-6)
    with pytest.raises(ValueError):
        critical_value(0.6, tiny)  # outside the (0, 0.5) contract


def test_upper_bound_examples():
    want = math.sqrt(2.0 / 3.0 * math.log(500) - 2.0 * math.log(0.05))
    assert upper_bound_cv(0.05, 500, -1.0 / 3.0, 1.0) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        upper_bound_cv(0.05, 500, +0.1, 1.0)


def test_upper_bound_dominates_calibrated():
    # calibrate the prefactor on the first row, then check it bounds the rest
    tc0 = tail_constants(W, TABLE[0][1], TABLE[0][2])
    m_cal = critical_value(0.05, tc0) / upper_bound_cv(0.05, 500, -1.0 / 3.0, 1.0)
    for n, sl, su, _, c05, _ in TABLE:
        bound = upper_bound_cv(0.05, n, -1.0 / 3.0, 1.2 * m_cal)
        tc = tail_constants(W, sl, su)
        assert bound >= critical_value(0.05, tc) / 1.2


def test_bootstrap_reproducible_and_b_consistent():
    cfg = ScaleConfig(0.061, 0.167, 0.03)
    a = bootstrap_cv(0.10, 300, cfg, W, B=400, seed=5)
    b = bootstrap_cv(0.10, 300, cfg, W, B=400, seed=5)
    assert a == b
    c = bootstrap_cv(0.10, 300, cfg, W, B=800, seed=5)
    assert abs(a - c) < 0.1


def test_bootstrap_thread_invariance():
    cfg = ScaleConfig(0.061, 0.167, 0.03)
    a = bootstrap_cv(0.05, 300, cfg, W, B=200, seed=9, threads=1)
    b = bootstrap_cv(0.05, 300, cfg, W, B=200, seed=9, threads=4)
    assert a == b


def test_bootstrap_requires_min_replicates():
    with pytest.raises(ValueError):
        bootstrap_cv(0.05, 300, ScaleConfig(0.061, 0.167, 0.03), W, B=50)


def test_fs_correction_cached_and_at_least_one():
    cfg = ScaleConfig(0.061, 0.167, 0.03)
    t0 = time.perf_counter()
    k1 = fs_correction(500, cfg, W, B=200)
    cold = time.perf_counter() - t0
    t0 = time.perf_counter()
    k2 = fs_correction(500, cfg, W, B=200)
    warm = time.perf_counter() - t0
    assert k1 == k2 >= 1.0
    assert warm < cold / 10
