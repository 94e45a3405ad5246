import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from czkit.admissible import GRID, parse_triple, power_triple
from czkit.kernels import (SampleSpec, builtin_kernel, certificate_points, decay_envelope, fit_admissible,
                           regularity_profile, smoothness_ratio, verify_compact_czk, with_triple)
from czkit.paraproduct import symbol_coefficients
from czkit.wavelets import WaveletBasis
from czkit.dyadic import DyadicInterval

WIDE = SampleSpec(s_range=(2.0 ** -6, 2.0 ** 12))


# --- builtin zoo ------------------------------------------------------------


def test_builtin_values():
    assert builtin_kernel("zero")(0.0, 1.0) == 0.0
    assert builtin_kernel("commutator_gauss")(0.0, 1.0) == pytest.approx(-(1 - math.exp(-1)), rel=1e-15)
    assert builtin_kernel("hilbert")(0.0, 1.0) == -1.0
    with pytest.raises(ValueError):
        builtin_kernel("nope")


def test_builtin_paraproduct_delegates():
    basis = WaveletBasis()
    b = symbol_coefficients(basis, lambda x: np.exp(-np.asarray(x) ** 2), [DyadicInterval(0, 0), DyadicInterval(1, 1)])
    K = builtin_kernel("paraproduct", b=b, basis=basis)
    assert K.name == "paraproduct" and K.singularity == "bounded"
    assert np.isfinite(K(0.3, 2.0))


def test_commutator_diagonal_extension():
    K = builtin_kernel("commutator_gauss")
    x = np.array([-1.0, 0.2, 0.9])
    near = K(x + 1e-7, x)
    assert np.allclose(near, K.diag(x), atol=1e-6)
    assert np.array_equal(K.extended(x, x), K.diag(x))


@pytest.mark.parametrize("name", ["hilbert", "damped_hilbert"])
@given(t=st.floats(-20, 20), x=st.floats(-20, 20))
def test_pv_kernel_matches_symbol(name, t, x):
    K = builtin_kernel(name)
    if abs(t - x) < 1e-6:
        return
    assert K(t, x) * (t - x) == pytest.approx(float(K.symbol(t, x)), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", ["hilbert", "damped_hilbert", "commutator_gauss"])
@given(t=st.floats(-10, 10))
def test_symbol_continuous_across_diagonal(name, t):
    K = builtin_kernel(name)
    left, right, on = K.symbol(t, t - 1e-9), K.symbol(t, t + 1e-9), K.symbol(t, t)
    assert abs(left - on) < 1e-7 and abs(right - on) < 1e-7


# --- smoothness ratio -------------------------------------------------------


def test_smoothness_ratio_examples():
    assert smoothness_ratio(builtin_kernel("zero"), 0.0, 1.0, 0.1, 1.0) == 0.0
    H = builtin_kernel("hilbert")
    assert smoothness_ratio(H, 0.0, 3.0, 0.5, 3.5) == 0.0
    assert smoothness_ratio(H, 0.0, 1.0, 0.1, 1.0) == pytest.approx((1 / 9) / 0.1, rel=1e-14)
    with pytest.raises(ValueError):
        smoothness_ratio(H, 0.0, 1.0, 0.5, 1.0)


def test_commutator_ratio_bounded_on_sample():
    # |grad K| <= sqrt(2/e)/rho + 1/rho^2 with rho > r/2 on the segment, so ratio <= 2 sqrt(2/e) r + 4
    K = builtin_kernel("commutator_gauss")
    t, x, tp, xp = SampleSpec().draw()
    ratio = smoothness_ratio(K, t, x, tp, xp)
    r = np.abs(t - x)
    assert np.all(np.isfinite(ratio))
    assert np.all(ratio <= 2 * math.sqrt(2 / math.e) * r + 4)


def test_sample_is_admissible_and_deterministic():
    a = SampleSpec(n=500, seed=3).draw()
    b = SampleSpec(n=500, seed=3).draw()
    for u, v in zip(a, b):
        assert np.array_equal(u, v)
    t, x, tp, xp = a
    assert np.all(2 * (np.abs(t - tp) + np.abs(x - xp)) < np.abs(t - x))


# --- verification and fitting -----------------------------------------------


def test_verify_zero_kernel():
    d = verify_compact_czk(builtin_kernel("zero"), power_triple(1.0))
    assert d.fitted_constant == 0.0 and d.ok


def test_verify_fitted_commutator_has_no_violations():
    K = builtin_kernel("commutator_gauss")
    for form in ("regularized", "standard"):
        d = verify_compact_czk(K, fit_admissible(K, form=form), 1.0)
        assert d.ok and d.fitted_constant <= 1.0 + 1e-12


def test_verify_hilbert_with_decaying_profile_fails():
    d = verify_compact_czk(builtin_kernel("hilbert"), parse_triple("power:1"), 1.0)
    assert not d.ok and len(d.violations) > 100


def test_violations_empty_iff_constant_bounds_ratios():
    K = builtin_kernel("damped_hilbert")
    t = power_triple(0.5)
    d = verify_compact_czk(K, t)
    assert d.ok
    tight = verify_compact_czk(K, t, d.fitted_constant / 1.2)
    assert not tight.ok
    assert all(v[4] > 1.05 * d.fitted_constant / 1.2 for v in tight.violations)


def test_fit_zero_kernel_gives_zero_triple():
    t = fit_admissible(builtin_kernel("zero"))
    for prof in (t.L, t.S, t.D):
        assert np.all(prof(GRID) == 0)


@pytest.mark.parametrize("form", ["regularized", "standard"])
def test_fitted_D_profiles(form):
    K = builtin_kernel("commutator_gauss")
    t = fit_admissible(K, WIDE, form=form)
    assert t.D(2.0 ** 10) < 0.1 * t.D(1.0)
    h = fit_admissible(builtin_kernel("hilbert"), WIDE, form=form)
    assert h.D(2.0 ** 10) > 0.5 * h.D(1.0)


def test_fit_rejects_bad_arguments():
    K = builtin_kernel("hilbert")
    with pytest.raises(ValueError):
        fit_admissible(K, form="other")
    with pytest.raises(ValueError):
        fit_admissible(K, delta_prime=1.5)


# --- decay envelope ---------------------------------------------------------


def test_decay_envelope_examples():
    z = decay_envelope(builtin_kernel("zero"), 0.0, 1.0, triple=power_triple(1.0))
    assert z.holds and z.margin == math.inf
    K = builtin_kernel("commutator_gauss")
    cert = decay_envelope(K, 0.0, 1.0, triple=fit_admissible(K, form="standard"), C=1.0)
    assert cert.holds
    # the tail 4 (3/4)^k drops below 1e-14 after 118 steps
    assert cert.terms == 118
    with pytest.raises(ValueError):
        decay_envelope(K, 0.0, 1.0, eps=0.4, triple=power_triple(1.0))
    with pytest.raises(ValueError):
        decay_envelope(K, 1.0, 1.0, triple=power_triple(1.0))


def test_decay_envelope_sequence_growth():
    # the distance grows by (3 - ε)/2 per step while t + x stays fixed
    eps = 0.1
    t, x = 0.3, 1.3
    for _ in range(5):
        step = (1 - eps) / 4 * abs(t - x)
        t2, x2 = t - step, x + step
        assert abs(t2 - x2) == pytest.approx(abs(t - x) * (3 - eps) / 2)
        assert t2 + x2 == pytest.approx(t + x)
        t, x = t2, x2


@pytest.mark.parametrize("name", ["commutator_gauss", "damped_hilbert", "zero"])
def test_decay_certificates_on_low_discrepancy_points(name):
    K = builtin_kernel(name)
    triple = fit_admissible(K, form="standard")
    t, x = certificate_points(100, seed=0)
    assert np.all((np.abs(t - x) >= 0.1) & (np.abs(t - x) <= 10))
    for a, b in zip(t, x):
        assert decay_envelope(K, float(a), float(b), triple=triple, C=1.0).holds


# --- regularity profile -----------------------------------------------------


def test_regularity_profile_examples():
    assert regularity_profile(builtin_kernel("zero"), 0.0, 1.0, 0.9) == 0.0
    K = builtin_kernel("commutator_gauss")
    far = [regularity_profile(K, -r / 2, r / 2, 0.9) for r in (4, 8, 16, 32, 64)]
    assert all(b < a for a, b in zip(far, far[1:]))
    H = builtin_kernel("hilbert")
    shifted = [regularity_profile(H, s, s + 1, 0.9) for s in (0, 10, 100, 1000)]
    assert min(shifted) > 1.0


def test_with_triple_attaches_claim():
    K = with_triple(builtin_kernel("hilbert"), power_triple(1.0), 2.0)
    assert K.triple.name == "power:1" and K.constant == 2.0
