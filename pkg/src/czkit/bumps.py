"""Bump functions, normalized dilations and the cutoff constructions.

Functions carry their derivatives: a :class:`SampledFunction` evaluates
``f^(n)(x)`` for ``n <= order`` on numpy arrays.  The plateau profile Φ equals
1 on |x| <= 1, vanishes for |x| >= 2 and is built from the e^{-1/x} smooth
step, differentiated exactly with truncated Taylor arithmetic.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dyadic import DyadicInterval, Interval, as_interval, diam_union, ec, rdist

Evaluator = Callable[[np.ndarray, int], np.ndarray]

PROFILE_ORDER = 10


@dataclass(frozen=True)
class SampledFunction:
    """A real function with derivatives up to ``order``.

    ``support`` is a closed interval outside which the function vanishes, or
    None when it is not compactly supported.
    """

    evaluator: Evaluator
    order: int
    support: Optional[tuple[float, float]] = None
    name: str = "f"

    def __call__(self, x, n: int = 0) -> np.ndarray:
        if n > self.order:
            raise ValueError(f"{self.name}: derivative of order {n} requested, only {self.order} available")
        x = np.asarray(x, dtype=float)
        return self.evaluator(x, n)


# ---------------------------------------------------------------------------
# truncated Taylor arithmetic for the smooth step


def _jet_exp(z: np.ndarray) -> np.ndarray:
    """Taylor coefficients of exp(z) from those of z (shape (order+1, n))."""
    w = np.zeros_like(z)
    w[0] = np.exp(z[0])
    for k in range(1, z.shape[0]):
        m = np.arange(1, k + 1)[:, None]
        w[k] = (m * z[1:k + 1] * w[k - 1::-1][:k]).sum(axis=0) / k
    return w


def _jet_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    q = np.zeros_like(a)
    for k in range(a.shape[0]):
        acc = a[k].copy()
        for m in range(1, k + 1):
            acc -= b[m] * q[k - m]
        q[k] = acc / b[0]
    return q


def smooth_step(u, order: int = PROFILE_ORDER) -> np.ndarray:
    """Derivatives 0..order of the C^∞ step 0 -> 1 on [0, 1].

    The step is 1/(1 + exp(1/u - 1/(1-u))).  Returns shape (order+1, len(u)).
    Within 0.005 of either end every derivative is below 1e-40 and is set
    to exactly zero.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros((order + 1, u.size))
    out[0] = np.where(u >= 1.0, 1.0, 0.0)
    inside = (u > 0.005) & (u < 0.995)
    mid = (u > 0.0) & (u < 1.0) & ~inside
    out[0, mid & (u >= 0.5)] = 1.0
    if not inside.any():
        return out
    v = u[inside]
    k = np.arange(order + 1)[:, None]
    fact = np.array([math.factorial(i) for i in range(order + 1)], dtype=float)[:, None]
    # z = 1/(1-u) - 1/u as Taylor coefficients
    z = 1.0 / (1.0 - v) ** (k + 1) - (-1.0) ** k / v ** (k + 1)
    s = np.where(z[0] >= 0, 1.0, -1.0)
    e = _jet_exp(-s * z)                      # exp(-|z|) branch, never overflows
    one_plus = e.copy()
    one_plus[0] += 1.0
    ones = np.zeros_like(e)
    ones[0] = 1.0
    pos = _jet_div(ones, one_plus)            # logistic for z >= 0
    neg = _jet_div(e, one_plus)               # logistic for z < 0
    coef = np.where(s > 0, pos, neg)
    out[:, inside] = coef * fact
    return out


def _profile_eval(x: np.ndarray, n: int) -> np.ndarray:
    ax = np.abs(x)
    res = np.zeros_like(x)
    if n == 0:
        res[ax <= 1.0] = 1.0
    band = (ax > 1.0) & (ax < 2.0)
    if band.any():
        d = smooth_step(2.0 - ax[band], n)[n]
        res[band] = d * (-np.sign(x[band])) ** n
    return res


#: The plateau profile Φ.
PLATEAU = SampledFunction(_profile_eval, PROFILE_ORDER, (-2.0, 2.0), "plateau")


def cutoff_profile() -> SampledFunction:
    return PLATEAU


# ---------------------------------------------------------------------------
# operations on sampled functions


def translate_dilate(f: SampledFunction, a: float, lam: float, p: float = 2.0) -> SampledFunction:
    """x -> λ^{-1/p} f((x - a)/λ), with p = inf meaning no amplitude factor."""
    if not lam > 0:
        raise ValueError("dilation must be positive")
    amp = 1.0 if math.isinf(p) else lam ** (-1.0 / p)

    def ev(x, n):
        return amp * lam ** (-n) * f.evaluator((x - a) / lam, n)

    sup = None if f.support is None else (a + lam * f.support[0], a + lam * f.support[1])
    return SampledFunction(ev, f.order, sup, f"{f.name}[{a:g},{lam:g}]")


def _support_meet(s1, s2):
    if s1 is None:
        return s2
    if s2 is None:
        return s1
    lo, hi = max(s1[0], s2[0]), min(s1[1], s2[1])
    return (lo, max(lo, hi))


def _support_join(s1, s2):
    if s1 is None or s2 is None:
        return None
    return (min(s1[0], s2[0]), max(s1[1], s2[1]))


def multiply(f: SampledFunction, g: SampledFunction) -> SampledFunction:
    """Pointwise product, differentiated with the Leibniz rule."""
    order = min(f.order, g.order)

    def ev(x, n):
        return sum(math.comb(n, m) * f.evaluator(x, m) * g.evaluator(x, n - m) for m in range(n + 1))

    return SampledFunction(ev, order, _support_meet(f.support, g.support), f"({f.name}*{g.name})")


def linear_combination(terms: list[tuple[float, SampledFunction]]) -> SampledFunction:
    order = min(f.order for _, f in terms)
    sup = terms[0][1].support
    for _, f in terms[1:]:
        sup = _support_join(sup, f.support)

    def ev(x, n):
        return sum(c * f.evaluator(x, n) for c, f in terms)

    return SampledFunction(ev, order, sup, "+".join(f.name for _, f in terms))


def polynomial(coeffs, name="poly") -> SampledFunction:
    """Polynomial with coefficients in increasing degree; all derivatives exact."""
    P = np.polynomial.Polynomial(coeffs)

    def ev(x, n):
        return P.deriv(n)(x) if n else P(x)

    return SampledFunction(ev, 64, None, name)


def gaussian(sigma: float = 1.0, center: float = 0.0) -> SampledFunction:
    """exp(-((x-c)/σ)^2 / 2) with derivatives through Hermite polynomials."""
    from numpy.polynomial.hermite_e import HermiteE

    def ev(x, n):
        u = (x - center) / sigma
        he = HermiteE([0] * n + [1])
        return (-1) ** n * he(u) * np.exp(-0.5 * u * u) / sigma ** n

    return SampledFunction(ev, 32, None, "gauss")


def weight(I, x) -> np.ndarray:
    """w_I(x) = 1 + |x - c(I)| / |I|."""
    iv = as_interval(I)
    return 1.0 + np.abs(np.asarray(x, float) - iv.center) / iv.length


def plateau_on(I, lam: float = 1.0) -> SampledFunction:
    """Φ_{λI}: the profile centered at c(I), dilated by λ|I|, unit height."""
    iv = as_interval(I)
    return translate_dilate(PLATEAU, iv.center, lam * iv.length, math.inf)


# ---------------------------------------------------------------------------
# adaptedness


def adaptedness_constant(f: SampledFunction, I, p: float = 2.0, N: int = 2,
                         radius: float = 64.0, points_per_length: int = 512) -> float:
    """Smallest C with |f^(n)(x)| <= C |I|^{-1/p-n} w_I(x)^{-N} for n <= N.

    Measured on the grid c(I) + |I| u, |u| <= radius, with the given number of
    points per length |I|.
    """
    if N > f.order:
        raise ValueError(f"adaptedness of order {N} needs derivatives up to {N}, have {f.order}")
    iv = as_interval(I)
    m = int(round(2 * radius * points_per_length))
    u = np.linspace(-radius, radius, m + 1)
    x = iv.center + iv.length * u
    w = (1.0 + np.abs(u)) ** N
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    best = 0.0
    for n in range(N + 1):
        vals = np.abs(f(x, n)) * iv.length ** (inv_p + n) * w
        best = max(best, float(vals.max()))
    return best


# ---------------------------------------------------------------------------
# cutoff constructions


def inner_cutoff(f: SampledFunction, I, J, lam: float) -> SampledFunction:
    """f · Φ_{λJ} for |I| = |J|; stays adapted to I with constant growth (1+1/λ)^N."""
    iv, jv = as_interval(I), as_interval(J)
    if not math.isclose(iv.length, jv.length, rel_tol=1e-12):
        raise ValueError("inner cutoff needs |I| = |J|")
    if not lam > 0:
        raise ValueError("λ must be positive")
    return multiply(f, plateau_on(jv, lam))


def inner_cutoff_factor(lam: float, N: int) -> float:
    return (1.0 + 1.0 / lam) ** N


def outer_scale(I, J, theta: float) -> float:
    """λ = (1/32) (diam(I ∪ J)/|J|)^θ."""
    jv = as_interval(J)
    return (diam_union((I, J)) / jv.length) ** theta / 32.0


def outer_cutoff(f: SampledFunction, I, J, theta: float) -> SampledFunction:
    """f · (1 - Φ_{λJ}) with λ from :func:`outer_scale`."""
    lam = outer_scale(I, J, theta)
    one_minus = linear_combination([(1.0, polynomial([1.0])), (-1.0, plateau_on(J, lam))])
    out = multiply(f, one_minus)
    return SampledFunction(out.evaluator, min(f.order, PROFILE_ORDER), f.support, f"outer({f.name})")


def outer_cutoff_gain(I, J, theta: float, N: int) -> float:
    """(|J|/|I|)^{θN/2 - 1/2} rdist(I,J)^{-θN/2}, valid for |J| <= |I|."""
    iv, jv = as_interval(I), as_interval(J)
    return (jv.length / iv.length) ** (theta * N / 2 - 0.5) * rdist(iv, jv) ** (-theta * N / 2)


def plateau_bump(I, J, theta: float, lam: float, R: float = 3.0) -> SampledFunction:
    """|λJ|^{-1/2} Φ_{λJ}, requiring λ >= R^{-1} (diam(I ∪ J)/|J|)^θ."""
    jv = as_interval(J)
    need = (diam_union((I, J)) / jv.length) ** theta / R
    if lam < need * (1 - 1e-12):
        raise ValueError(f"λ={lam} below the required {need}")
    return translate_dilate(PLATEAU, jv.center, lam * jv.length, 2.0)


def plateau_bump_bound(I, J, theta: float, lam: float, N: int, R: float = 3.0) -> float:
    """R^{2N} (|J|/|I|)^{θN/4 - 1/2} λ^{(N-1)/2}."""
    iv, jv = as_interval(I), as_interval(J)
    return R ** (2 * N) * (jv.length / iv.length) ** (theta * N / 4 - 0.5) * lam ** ((N - 1) / 2)


def moment_bump(J, k: int) -> SampledFunction:
    """|J|^{-1/2} Φ_J(t) (t - c(J))^k."""
    jv = as_interval(J)
    mono = polynomial([0.0] * k + [1.0])
    shifted = translate_dilate(mono, jv.center, 1.0, math.inf)
    out = multiply(translate_dilate(PLATEAU, jv.center, jv.length, 2.0), shifted)
    return SampledFunction(out.evaluator, PROFILE_ORDER, (jv.center - 2 * jv.length, jv.center + 2 * jv.length),
                           f"moment{k}")


def moment_bump_bound(J, k: int) -> float:
    return 8.0 ** k * math.factorial(k) * as_interval(J).length ** k


def recenter_constant(I, J, N: int) -> float:
    """ec(I,J)^{-(N+1/2)} for concentric I, J."""
    iv, jv = as_interval(I), as_interval(J)
    if not math.isclose(iv.center, jv.center, rel_tol=0, abs_tol=1e-12 * max(iv.length, jv.length)):
        raise ValueError("recentering needs c(I) = c(J)")
    return ec(iv, jv) ** (-(N + 0.5))


# ---------------------------------------------------------------------------
# pairings


@functools.lru_cache(maxsize=8)
def _legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = leggauss(nodes)
    z.flags.writeable = w.flags.writeable = False
    return z, w


def cell_nodes(a: float, b: float, cell: float, nodes: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [a, b] with cells of width ≈ cell."""
    if not b > a:
        return np.zeros(0), np.zeros(0)
    m = max(1, int(math.ceil((b - a) / cell - 1e-9)))
    edges = np.linspace(a, b, m + 1)
    z, w = _legendre(nodes)
    mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mids + half * z).ravel(), (half * w).ravel()


def _pair_range(f: SampledFunction, g: SampledFunction, fallback: tuple[float, float]):
    sup = _support_meet(f.support, g.support)
    return sup if sup is not None else fallback


def pairing(f: SampledFunction, g: SampledFunction, cell: float, fallback=None) -> float:
    """∫ f g by composite Gauss-Legendre with 16 nodes per cell."""
    lo, hi = _pair_range(f, g, fallback)
    if hi <= lo:
        return 0.0
    x, w = cell_nodes(lo, hi, cell)
    return float(np.dot(w, f(x) * g(x)))


def pair_decay_check(phi: SampledFunction, I, psi: SampledFunction, J, C: float = 1.0, N: int = 6,
                     mean_zero: bool = False, cell_fraction: float = 1 / 32) -> tuple[float, float]:
    """Measured |⟨φ, ψ⟩| next to the decay bound for bumps adapted to I and J.

    General bound: C ec^{1/2} rdist^{-N}.  When ψ has mean zero and
    |J| <= |I|: C (|J|/|I|)^{3/2} rdist^{-(N-1)}.
    """
    iv, jv = as_interval(I), as_interval(J)
    fine = min(iv.length, jv.length)
    reach = 40 * max(iv.length, jv.length) + abs(iv.center - jv.center)
    fallback = (min(iv.center, jv.center) - reach, max(iv.center, jv.center) + reach)
    measured = abs(pairing(phi, psi, fine * cell_fraction, fallback))
    r = rdist(iv, jv)
    if mean_zero:
        if jv.length > iv.length:
            raise ValueError("mean-zero bound needs |J| <= |I|")
        bound = C * (jv.length / iv.length) ** 1.5 * r ** (-(N - 1))
    else:
        bound = C * ec(iv, jv) ** 0.5 * r ** (-N)
    return measured, bound


def mean_zero_projection(f: SampledFunction, window) -> SampledFunction:
    """f minus its window mean times the plateau equal to one on the window.

    The result integrates to zero over the window; a constant becomes zero there.
    """
    W = as_interval(window)
    x, w = cell_nodes(W.left, W.right, W.length / 64)
    mean = float(np.dot(w, f(x))) / W.length
    plate = translate_dilate(PLATEAU, W.center, W.length / 2, math.inf)
    out = linear_combination([(1.0, f), (-mean, plate)])
    return SampledFunction(out.evaluator, out.order, out.support, f"meanzero({f.name})")


def low_oscillation_bound(f_l1: float, I, J, C: float = 1.0, N: int = 6) -> float:
    """C ‖f‖₁ |I| |J|^{-3/2} (1 + |c(I)-c(J)|/|J|)^{-(N-1)} for mean-zero f on I, |I| <= |J|."""
    iv, jv = as_interval(I), as_interval(J)
    return C * f_l1 * iv.length * jv.length ** -1.5 * (1 + abs(iv.center - jv.center) / jv.length) ** (-(N - 1))
