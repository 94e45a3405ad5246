import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from czkit.bumps import adaptedness_constant, cell_nodes, gaussian
from czkit.dyadic import DyadicInterval, LagomWindow, is_lagom, window_of
from czkit.wavelets import (CoefficientMap, WaveletBasis, analyze, coeff, daubechies_filter, gram_deviation,
                            pair_samples, project_lagom, synthesize)

BASIS = WaveletBasis()
TAU = 1e-6
DEFAULT = window_of(LagomWindow())

coefficient_maps = st.dictionaries(
    st.builds(DyadicInterval, st.integers(-4, 4), st.integers(-40, 40)),
    st.floats(-1e6, 1e6, allow_nan=False), max_size=30).map(CoefficientMap)


def l2_on(f, lo, hi):
    x, w = cell_nodes(lo, hi, 1 / 64)
    return math.sqrt(float(np.dot(w, f(x) ** 2)))


# --- filter -----------------------------------------------------------------


def test_db2_filter_matches_closed_form():
    s3, r2 = math.sqrt(3), math.sqrt(2)
    expected = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4 * r2)
    assert np.allclose(daubechies_filter(2), expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("order", [2, 4, 6, 8])
def test_filter_orthogonality_and_moments(order):
    h = daubechies_filter(order)
    assert len(h) == 2 * order and h.sum() == pytest.approx(math.sqrt(2), rel=1e-14)
    for m in range(order):
        shifted = np.dot(h[2 * m:], h[:len(h) - 2 * m])
        assert shifted == pytest.approx(1.0 if m == 0 else 0.0, abs=1e-12)
    # highpass g_n = (-1)^n h_{L-1-n} annihilates polynomials of degree < order
    g = (-1.0) ** np.arange(len(h)) * h[::-1]
    n = np.arange(len(h), dtype=float)
    for p in range(order):
        assert abs(np.dot(g, n ** p)) <= 1e-9 * np.dot(np.abs(g), n ** p)
    with pytest.raises(ValueError):
        daubechies_filter(0)


# --- basis invariants -------------------------------------------------------


def test_gram_deviation_default_window():
    assert gram_deviation(BASIS, DEFAULT) <= TAU


def test_pair_samples_symmetric():
    I, J = DyadicInterval(2, 3), DyadicInterval(0, 0)
    assert pair_samples(BASIS, I, J) == pair_samples(BASIS, J, I)


@pytest.mark.parametrize("I", DEFAULT[::17])
def test_each_wavelet_mean_zero_and_adapted_like_mother(I):
    assert abs(coeff(BASIS, lambda x: np.ones_like(x), I)) <= TAU * I.length ** 0.5
    mother = adaptedness_constant(BASIS.psi(DyadicInterval(0, 0)), DyadicInterval(0, 0).interval, 2.0, 2)
    assert math.isfinite(mother)
    assert adaptedness_constant(BASIS.psi(I), I.interval, 2.0, 2) == pytest.approx(mother, rel=1e-10)


def test_mother_derivatives_limited():
    with pytest.raises(ValueError):
        BASIS.mother(0.3, 3)
    with pytest.raises(ValueError):
        BASIS.samples(DyadicInterval(0, 0), 17)


# --- coefficients -----------------------------------------------------------


def test_coeff_examples():
    I = DyadicInterval(1, -2)
    assert coeff(BASIS, BASIS.psi(I), I) == pytest.approx(1.0, abs=TAU)
    for J in (DyadicInterval(1, -1), DyadicInterval(0, -1), DyadicInterval(3, -7)):
        assert abs(coeff(BASIS, BASIS.psi(J), I)) <= TAU
    assert abs(coeff(BASIS, lambda x: np.ones_like(x), I)) <= TAU


def test_synthesize_single_entry_is_the_wavelet():
    I = DyadicInterval(2, 5)
    s = synthesize(BASIS, CoefficientMap({I: 1.0}))
    x = np.linspace(-2, 6, 1601)
    for n in range(3):
        assert np.array_equal(s(x, n), BASIS.psi(I)(x, n))
    assert synthesize(BASIS, CoefficientMap())(x).tolist() == [0.0] * len(x)


def test_analyze_wavelet_is_indicator():
    I0 = DyadicInterval(0, 1)
    c = analyze(BASIS, BASIS.psi(I0), LagomWindow())
    for I, v in c.items():
        assert abs(v - (1.0 if I == I0 else 0.0)) <= TAU


def test_analyze_recovers_three_wavelets():
    picks = {DyadicInterval(-1, 0): 1.0, DyadicInterval(1, 3): -2.0, DyadicInterval(2, -5): 0.5}
    f = synthesize(BASIS, CoefficientMap(dict(picks)))
    c = analyze(BASIS, f, LagomWindow())
    for I, v in c.items():
        assert abs(v - picks.get(I, 0.0)) <= 2 * TAU * sum(abs(a) for a in picks.values())


def test_round_trip_of_window_band_function():
    # a Gaussian derivative with six vanishing moments concentrated on levels inside the window
    g = gaussian(0.25)
    f = lambda x: g(x, 6) * 0.25 ** 6
    s = synthesize(BASIS, analyze(BASIS, f, LagomWindow(M=4, R=8.0, j_min=-3, j_max=5)))
    err = l2_on(lambda x: s(x) - f(x), -4, 4)
    assert err <= 1e-4 * l2_on(f, -4, 4)


# --- lagom projection -------------------------------------------------------


def test_projection_examples():
    c = CoefficientMap({I: 1.0 for I in DEFAULT})
    assert len(project_lagom(c, 3, complement=True)) == 0
    I0 = DyadicInterval(1, 1)
    assert is_lagom(I0, 2)
    single = CoefficientMap({I0: 2.5})
    assert project_lagom(single, 2).values == {I0: 2.5}
    assert len(project_lagom(single, 2, complement=True)) == 0


@given(coefficient_maps, st.integers(1, 5))
def test_projection_splits_identity_and_is_idempotent(c, M):
    P, Q = project_lagom(c, M), project_lagom(c, M, complement=True)
    assert not set(P.values) & set(Q.values)
    assert {**P.values, **Q.values} == c.values
    assert project_lagom(P, M).values == P.values
    assert len(project_lagom(Q, M)) == 0


def dot(a: CoefficientMap, b: CoefficientMap) -> float:
    return math.fsum(a[I] * b[I] for I in sorted(set(a.values) | set(b.values)))


@given(coefficient_maps, coefficient_maps, st.integers(1, 5))
def test_projection_self_adjoint(f, g, M):
    assert dot(project_lagom(f, M), g) == dot(f, project_lagom(g, M))
    assert dot(project_lagom(f, M, True), g) == dot(f, project_lagom(g, M, True))


# --- serialization ----------------------------------------------------------


@settings(max_examples=50)
@given(coefficient_maps)
def test_json_round_trip_bit_exact(c):
    back = CoefficientMap.from_json(c.to_json())
    assert back.values == c.values
    assert all(math.copysign(1, back[I]) == math.copysign(1, c[I]) for I in c.keys())
    assert CoefficientMap.from_records(c.as_records()).values == c.values


def test_iteration_sorted():
    c = CoefficientMap({DyadicInterval(2, 1): 1.0, DyadicInterval(-1, 4): 2.0, DyadicInterval(2, -3): 3.0})
    assert c.keys() == sorted(c.keys())
    assert [I for I, _ in c.items()] == [DyadicInterval(-1, 4), DyadicInterval(2, -3), DyadicInterval(2, 1)]
