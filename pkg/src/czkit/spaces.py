"""BMO and CMO diagnostics, atoms, and the T(1) pairing.

``bmo_wavelet_norm`` is the dyadic Carleson-box form
sup_Ω (|Ω|^{-1} Σ_{I⊂Ω} |c_I|²)^{1/2}; ``cmo_modulus`` applies it to the
coefficients outside the lagom family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .admissible import AdmissibleTriple, regularize_monotone
from .bumps import PLATEAU, SampledFunction, cell_nodes, translate_dilate
from .dyadic import DyadicInterval, Interval, LagomWindow, as_interval, is_lagom, window_of
from .kernels import CZKernel
from .wavelets import CoefficientMap, WaveletBasis, project_lagom


# ---------------------------------------------------------------------------
# BMO / CMO


def _boxes(c: CoefficientMap, window) -> list[DyadicInterval]:
    if window is None:
        keys = c.keys()
        if not keys:
            return []
        top = min(I.j for I in keys)
        boxes = set()
        for I in keys:
            J = I
            while J.j >= top:
                boxes.add(J)
                J = J.parent()
        return sorted(boxes)
    return window_of(window) if isinstance(window, LagomWindow) else sorted(window)


def bmo_wavelet_norm(c: CoefficientMap, window=None) -> float:
    """sup over dyadic boxes Ω of (|Ω|^{-1} Σ_{I⊂Ω} c_I²)^{1/2}."""
    boxes = _boxes(c, window)
    if not boxes:
        return 0.0
    mass = {Q: 0.0 for Q in boxes}
    levels = sorted({Q.j for Q in boxes})
    for I, v in c.items():
        if v == 0.0:
            continue
        for j in levels:
            if j > I.j:
                break
            Q = DyadicInterval(j, I.k >> (I.j - j))
            if Q in mass:
                mass[Q] += v * v
    return math.sqrt(max(m / Q.length for Q, m in mass.items()))


def cmo_modulus(c: CoefficientMap, M: int, window=None) -> float:
    """BMO norm of the coefficients on intervals outside the lagom family for M."""
    return bmo_wavelet_norm(project_lagom(c, M, complement=True), window if window is not None else _boxes(c, None))


# ---------------------------------------------------------------------------
# atoms


def _dual_exponent(p: float) -> float:
    if math.isinf(p):
        return 1.0
    if p <= 1:
        raise ValueError("p must exceed 1")
    return p / (p - 1)


def lp_norm(f: SampledFunction, q: float, cell: float) -> float:
    lo, hi = f.support
    x, w = cell_nodes(lo, hi, cell)
    v = np.abs(f(x))
    if math.isinf(q):
        return float(v.max())
    return float(np.dot(w, v ** q) ** (1 / q))


def make_atom(I, shape_seed: int = 0, p: float = 2.0) -> SampledFunction:
    """Smooth mean-zero function supported in I with ‖f‖_{p'} = |I|^{-1/p}.

    Seeds 0 and 1 give an odd and an even profile; other seeds mix the two
    with weights drawn from the seeded generator.
    """
    iv = as_interval(I)
    if shape_seed == 0:
        w = (1.0, 0.0)
    elif shape_seed == 1:
        w = (0.0, 1.0)
    else:
        w = tuple(np.random.default_rng(shape_seed).uniform(-1.0, 1.0, 2))
    c, L = iv.center, iv.length

    def raw(x, n):
        u = 4.0 * (x - c) / L
        scale = (4.0 / L) ** n
        return scale * (w[0] * PLATEAU(u, n + 1) + w[1] * PLATEAU(u, n + 2))

    base = SampledFunction(raw, 6, (iv.left, iv.right), "atom")
    q = _dual_exponent(p)
    norm = lp_norm(base, q, L / 256)
    if norm == 0:
        raise ValueError("degenerate atom")
    target = 1.0 if math.isinf(p) else L ** (-1.0 / p)
    k = target / norm
    return SampledFunction(lambda x, n: k * raw(x, n), 6, (iv.left, iv.right), f"atom{shape_seed}")


# ---------------------------------------------------------------------------
# T(1) pairing


def _cells_around(x: float, lo: float, hi: float, fine: float, breaks: Iterable[float]) -> np.ndarray:
    """Break points on [lo, hi], geometrically graded away from x."""
    pts = {lo, hi}
    step = fine
    while step < (hi - lo):
        for p in (x - step, x + step):
            if lo < p < hi:
                pts.add(p)
        step *= 2.0
    for b in breaks:
        if lo < b < hi:
            pts.add(b)
    return np.array(sorted(pts))


def _gl(edges: np.ndarray, nodes: int = 16):
    z, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * z).ravel(), (0.5 * (b - a) * w).ravel()


def _resolve_breaks(K: CZKernel, lo: float, hi: float) -> list[float]:
    if K.max_spacing is None:
        return []
    h = 4 * K.max_spacing
    a, b = max(lo, -16.0), min(hi, 16.0)
    if b <= a:
        return []
    return list(np.arange(math.ceil(a / h), math.floor(b / h) + 1) * h)


def _truncated_potential(K: CZKernel, x: float, a: float, R: float) -> float:
    """pv ∫ Φ((t-a)/R) K(t, x) dt for one point x with |x - a| < R/2."""
    lo, hi = a - 2 * R, a + 2 * R
    rho = R / 2
    shell = [a - 2 * R + m * R / 8 for m in range(9)] + [a + R + m * R / 8 for m in range(9)]
    extra = _resolve_breaks(K, lo, hi)
    fine = min(R, 1.0) * 1e-3
    if K.symbol is not None:
        # symmetric part: ∫_0^ρ (F(x+u) - F(x-u))/u du with F = Φ_R σ(·, x)
        ue = _cells_around(0.0, 0.0, rho, fine, [abs(b - x) for b in extra + shell])
        u, wu = _gl(ue)
        F = lambda t: PLATEAU((t - a) / R) * K.symbol(t, np.full_like(t, x))
        near = float(np.dot(wu, (F(x + u) - F(x - u)) / u))
        total = near
        for l, r in ((lo, x - rho), (x + rho, hi)):
            e = _cells_around(x, l, r, rho / 8, extra + shell)
            t, w = _gl(e)
            total += float(np.dot(w, F(t) / (t - x)))
        return total
    total = 0.0
    for l, r in ((lo, x), (x, hi)):
        e = _cells_around(x, l, r, fine, extra + shell)
        t, w = _gl(e)
        total += float(np.dot(w, PLATEAU((t - a) / R) * K(t, np.full_like(t, x))))
    return total


def t1_value(K: CZKernel, f: SampledFunction, I, k: int, a: Optional[float] = None) -> float:
    """⟨T(Φ((·-a)/(2^k |I|))), f⟩ for f supported in I."""
    iv = as_interval(I)
    a = iv.center if a is None else float(a)
    R = 2.0 ** k * iv.length
    lo, hi = f.support
    x, w = cell_nodes(lo, hi, (hi - lo) / 16)
    fx = f(x)
    keep = fx != 0
    u = np.array([_truncated_potential(K, xi, a, R) for xi in x[keep]])
    return float(np.dot(w[keep] * fx[keep], u))


def t1_difference_bound(triple: AdmissibleTriple, C: float, delta: float, I, k: int, a: float,
                        f_l1: float) -> float:
    """Bound on |value(k+1) - value(k)| from smoothness in the second variable.

    Uses base point (t, a): the cutoff difference lives on the shell
    2^k|I| <= |t-a| <= 2^{k+2}|I| and f has mean zero, giving
    C (2/δ) (A - 1/2)^δ 2^{-δk} sup_shell(L S D) ‖f‖₁ with A = 1 + |a-c(I)|/|I|.
    Infinite when 2A - 1 >= 2^k (the smoothness condition can fail).
    """
    iv = as_interval(I)
    A = 1.0 + abs(a - iv.center) / iv.length
    if 2 * A - 1 >= 2.0 ** k:
        return math.inf
    r1, r2 = 2.0 ** k * iv.length, 2.0 ** (k + 2) * iv.length
    t = triple if triple.monotone else regularize_monotone(triple)
    two_a = 2 * abs(a)
    dmin = 0.0 if r1 <= two_a <= r2 else min(abs(two_a - r1), abs(two_a - r2))
    sup = float(t.L(r1) * t.S(r2) * t.D(max(dmin, 1e-300)))
    return C * (2.0 / delta) * (A - 0.5) ** delta * 2.0 ** (-delta * k) * sup * f_l1


def t1_error_bound(triple: AdmissibleTriple, C: float, delta: float, I, k: int, a: float, f_l1: float,
                   max_terms: int = 400) -> float:
    """Σ_{k'≥k} of the difference bounds: a bound on |limit - value(k)|."""
    total = 0.0
    for kk in range(k, k + max_terms):
        term = t1_difference_bound(triple, C, delta, I, kk, a, f_l1)
        total += term
        if math.isinf(total) or (term <= 1e-17 * total and kk > k + 8) or term == 0.0 and kk > k + 64:
            break
    return total


def t1_functional(K: CZKernel, f: SampledFunction, I, k: int, a: Optional[float] = None,
                  triple: Optional[AdmissibleTriple] = None, C: Optional[float] = None) -> tuple[float, float]:
    """(value, error bound) of the truncated T(1) pairing at scale 2^k |I|.

    Requires 2^k >= 1 + |a - c(I)|/|I|.  The error bound needs a triple; it is
    NaN when none is known.
    """
    iv = as_interval(I)
    a = iv.center if a is None else float(a)
    A = 1.0 + abs(a - iv.center) / iv.length
    if 2.0 ** k < A:
        raise ValueError(f"scale 2^{k} below the precondition 1 + |a-c(I)|/|I| = {A}")
    value = t1_value(K, f, iv, k, a)
    triple = triple if triple is not None else K.triple
    if triple is None:
        return value, math.nan
    C = (K.constant if K.constant is not None else 1.0) if C is None else C
    delta = triple.delta if triple.delta is not None else K.delta
    lo, hi = f.support
    x, w = cell_nodes(lo, hi, (hi - lo) / 64)
    f_l1 = float(np.dot(w, np.abs(f(x))))
    return value, t1_error_bound(triple, C, delta, iv, k, a, f_l1)


@dataclass
class T1Row:
    k: int
    value: float
    error_bound: float


def t1_table(K: CZKernel, f: SampledFunction, I, ks: Sequence[int], a: Optional[float] = None,
             triple=None, C=None) -> list[T1Row]:
    return [T1Row(k, *t1_functional(K, f, I, k, a, triple, C)) for k in ks]


def t1_limit(rows: Sequence[T1Row], ratio: float = 0.5) -> float:
    """Extrapolated limit assuming value(k) - limit ≈ c · ratio^k."""
    if len(rows) < 2:
        return rows[-1].value
    v0, v1 = rows[-2].value, rows[-1].value
    return v1 + (v1 - v0) * ratio / (1.0 - ratio)


def t1_slope(rows: Sequence[T1Row]) -> float:
    """Least-squares slope of log(error bound) against k."""
    k = np.array([r.k for r in rows], dtype=float)
    e = np.log(np.array([r.error_bound for r in rows]))
    return float(np.polyfit(k, e, 1)[0])


def t1_coefficients(K: CZKernel, basis: WaveletBasis, intervals: Sequence[DyadicInterval],
                    ks: tuple[int, int] = (6, 7)) -> CoefficientMap:
    """Extrapolated ⟨T(1), ψ_J⟩ for each J."""
    out = CoefficientMap()
    lo_u, hi_u = basis.support
    for J in intervals:
        psi = basis.psi(J)
        box = Interval(J.center, (hi_u - lo_u) * J.length)
        rows = [T1Row(k, t1_value(K, psi, box, k), math.nan) for k in ks]
        out[J] = t1_limit(rows, 2.0 ** -(ks[1] - ks[0]))
    return out


def t1_in_cmo_test(t1: CoefficientMap, basis: WaveletBasis, atoms: Sequence[tuple[SampledFunction, object]],
                   M_range: Iterable[int]) -> dict[int, float]:
    """sup over atoms of |⟨P_M^⊥ T(1), f⟩| for each M, at the coefficient level."""
    from .wavelets import coeff

    pairings = []
    for f, _ in atoms:
        pairings.append({J: coeff(basis, lambda x, f=f: f(x), J) for J in t1.keys()})
    out = {}
    for M in M_range:
        tail = project_lagom(t1, M, complement=True)
        out[M] = max((abs(sum(v * pf[J] for J, v in tail.items())) for pf in pairings), default=0.0)
    return out
