"""Compactly supported orthonormal wavelets and wavelet coefficient maps.

The mother wavelet is a Daubechies wavelet with ``order`` vanishing moments,
shifted so its support ``[-(order-1), order]`` is centered at 1/2.  Values and
derivatives are tabulated exactly at dyadic points by the refinement cascade;
``psi_I(x) = 2^{j/2} psi(2^j x - k)`` is then exact at every dyadic point of
level at most ``table_level`` relative to I.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.special import comb

from .bumps import SampledFunction
from .dyadic import DyadicInterval, LagomWindow, as_interval, is_lagom, window_of


def daubechies_filter(order: int) -> np.ndarray:
    """Lowpass filter h (sum √2, length 2·order) by spectral factorization."""
    if order < 1:
        raise ValueError("order must be positive")
    if order == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    P = [comb(order - 1 + k, k, exact=True) for k in range(order)][::-1]
    roots = []
    for y in np.roots(P):
        zz = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        roots.append(zz[np.argmin(np.abs(zz))])
    h = np.real(np.poly(roots))
    for _ in range(order):
        h = np.convolve(h, [1.0, 1.0])
    return h * np.sqrt(2.0) / h.sum()


def _integer_values(c: np.ndarray, n: int) -> np.ndarray:
    """φ^(n) at the integers 0..m as an eigenvector of c_{2i-j} for 2^-n."""
    m = len(c) - 1
    A = np.zeros((m + 1, m + 1))
    for i in range(m + 1):
        for j in range(m + 1):
            if 0 <= 2 * i - j <= m:
                A[i, j] = c[2 * i - j]
    w, V = np.linalg.eig(A)
    idx = np.argmin(np.abs(w - 2.0 ** -n))
    v = np.real(V[:, idx])
    k = np.arange(m + 1, dtype=float)
    v = v * math.factorial(n) / np.dot((-k) ** n, v)
    if n == 0:
        v[0] = v[-1] = 0.0
    return v


def _cascade(c: np.ndarray, n: int, level: int) -> np.ndarray:
    """φ^(n) at x = i 2^-level, i = 0..m 2^level."""
    m = len(c) - 1
    vals = _integer_values(c, n)
    for lev in range(1, level + 1):
        step = 1 << (lev - 1)
        new = np.zeros(m * (1 << lev) + 1)
        L = len(vals)
        for k, ck in enumerate(c):
            new[k * step:k * step + L] += ck * vals
        vals = new * 2.0 ** n
    return vals


@lru_cache(maxsize=8)
def _wavelet_tables(order: int, level: int, derivatives: int) -> tuple[np.ndarray, ...]:
    h = daubechies_filter(order)
    c = np.sqrt(2.0) * h
    m = len(c) - 1
    d = np.array([(-1) ** k * c[m - k] for k in range(m + 1)])
    tables = []
    for n in range(derivatives + 1):
        phi = _cascade(c, n, level)
        size = m * (1 << level) + 1
        psi = np.zeros(size)
        i = np.arange(size)
        scale = 1 << level
        for k, dk in enumerate(d):
            src = 2 * i - k * scale
            ok = (src >= 0) & (src < len(phi))
            psi[ok] += dk * phi[src[ok]]
        tables.append(psi * 2.0 ** n)
    return tuple(tables)


@dataclass(frozen=True)
class WaveletBasis:
    """Daubechies wavelet of the given order with dyadic tables.

    ``quad_level`` is the number of dyadic refinements per |I| used by
    :func:`coeff` and :func:`gram`.
    """

    order: int = 6
    table_level: int = 16
    derivatives: int = 2
    quad_level: int = 8

    @property
    def name(self) -> str:
        return f"db{self.order}"

    @property
    def support(self) -> tuple[int, int]:
        """Support of the mother wavelet."""
        return (-(self.order - 1), self.order)

    @property
    def tables(self) -> tuple[np.ndarray, ...]:
        return _wavelet_tables(self.order, self.table_level, self.derivatives)

    def mother(self, u, n: int = 0) -> np.ndarray:
        """ψ^(n)(u), exact at dyadic points of level ≤ table_level."""
        if n > self.derivatives:
            raise ValueError(f"wavelet derivatives available up to order {self.derivatives}")
        u = np.asarray(u, dtype=float)
        tab = self.tables
        a, b = self.support
        scale = float(1 << self.table_level)
        pos = (u - a) * scale
        inside = (u > a) & (u < b)
        out = np.zeros(u.shape)
        if not inside.any():
            return out
        p = pos[inside]
        i0 = np.floor(p).astype(np.int64)
        i0 = np.clip(i0, 0, len(tab[0]) - 2)
        frac = p - i0
        y0, y1 = tab[n][i0], tab[n][i0 + 1]
        if n < self.derivatives:
            # cubic Hermite with the next derivative table as slopes
            s0, s1 = tab[n + 1][i0] / scale, tab[n + 1][i0 + 1] / scale
            t = frac
            h00 = (1 + 2 * t) * (1 - t) ** 2
            h10 = t * (1 - t) ** 2
            h01 = t * t * (3 - 2 * t)
            h11 = t * t * (t - 1)
            val = h00 * y0 + h10 * s0 + h01 * y1 + h11 * s1
        else:
            val = (1 - frac) * y0 + frac * y1
        out[inside] = np.where(frac == 0.0, y0, val)
        return out

    def psi(self, I: DyadicInterval) -> SampledFunction:
        """ψ_I(x) = 2^{j/2} ψ(2^j x - k)."""
        j, k = I.j, I.k
        amp = 2.0 ** (j / 2)
        a, b = self.support

        def ev(x, n):
            return amp * 2.0 ** (j * n) * self.mother(np.ldexp(x, j) - k, n)

        sup = (math.ldexp(a + k, -j), math.ldexp(b + k, -j))
        return SampledFunction(ev, self.derivatives, sup, f"psi{I}")

    def grid(self, I: DyadicInterval, level: int) -> tuple[np.ndarray, float]:
        """Nodes of spacing |I| 2^-level covering supp ψ_I, and the spacing."""
        a, b = self.support
        n = (b - a) << level
        u = a + np.arange(n + 1) / float(1 << level)
        return np.ldexp(u + I.k, -I.j), math.ldexp(1.0, -(I.j + level))

    def samples(self, I: DyadicInterval, level: int, n: int = 0) -> np.ndarray:
        """ψ_I^(n) on :meth:`grid` by direct table lookup."""
        if level > self.table_level:
            raise ValueError("requested level exceeds the table")
        a, b = self.support
        stride = 1 << (self.table_level - level)
        tab = self.tables[n][::stride]
        return 2.0 ** (I.j / 2 + I.j * n) * tab


# ---------------------------------------------------------------------------
# coefficient maps


@dataclass
class CoefficientMap:
    """Sparse map from dyadic intervals to coefficients, iterated in (j, k) order."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, I: DyadicInterval) -> float:
        return self.values.get(I, 0.0)

    def __setitem__(self, I: DyadicInterval, v: float):
        self.values[I] = float(v)

    def __len__(self):
        return len(self.values)

    def keys(self):
        return sorted(self.values)

    def items(self):
        return [(I, self.values[I]) for I in sorted(self.values)]

    def l2(self) -> float:
        return math.sqrt(sum(v * v for v in self.values.values()))

    def restricted(self, keep: Callable[[DyadicInterval], bool]) -> "CoefficientMap":
        return CoefficientMap({I: v for I, v in self.values.items() if keep(I)})

    def as_records(self) -> list[list]:
        return [[I.j, I.k, v] for I, v in self.items()]

    @classmethod
    def from_records(cls, records: Iterable) -> "CoefficientMap":
        return cls({DyadicInterval(int(j), int(k)): float(v) for j, k, v in records})

    def to_json(self) -> str:
        """JSON array of {j, k, value} records with values as hex doubles."""
        return json.dumps([{"j": I.j, "k": I.k, "value": float(v).hex()} for I, v in self.items()])

    @classmethod
    def from_json(cls, text: str) -> "CoefficientMap":
        return cls({DyadicInterval(int(r["j"]), int(r["k"])): float.fromhex(r["value"]) for r in json.loads(text)})


def coeff(basis: WaveletBasis, f: Callable, I: DyadicInterval, level: int | None = None) -> float:
    """⟨f, ψ_I⟩ by the trapezoid rule on the dyadic grid of ψ_I."""
    level = basis.quad_level if level is None else level
    x, h = basis.grid(I, level)
    return float(h * np.dot(np.asarray(f(x), dtype=float), basis.samples(I, level)))


def analyze(basis: WaveletBasis, f: Callable, window, level: int | None = None) -> CoefficientMap:
    """Coefficients of f on every window interval."""
    intervals = window_of(window) if isinstance(window, LagomWindow) else list(window)
    return CoefficientMap({I: coeff(basis, f, I, level) for I in intervals})


def synthesize(basis: WaveletBasis, c: CoefficientMap) -> SampledFunction:
    """Σ c_I ψ_I as a function with derivatives."""
    items = [(I, v) for I, v in c.items() if v != 0.0]
    funcs = [(v, basis.psi(I)) for I, v in items]

    def ev(x, n):
        out = np.zeros(np.shape(x))
        for v, f in funcs:
            lo, hi = f.support
            m = (x > lo) & (x < hi)
            if m.any():
                out[m] += v * f.evaluator(x[m], n)
        return out

    if funcs:
        sup = (min(f.support[0] for _, f in funcs), max(f.support[1] for _, f in funcs))
    else:
        sup = (0.0, 0.0)
    return SampledFunction(ev, basis.derivatives, sup, "synthesis")


def project_lagom(c: CoefficientMap, M: int, complement: bool = False) -> CoefficientMap:
    """Keep coefficients on lagom intervals (or on the rest when ``complement``)."""
    return c.restricted(lambda I: is_lagom(I, M) != complement)


def pair_samples(basis: WaveletBasis, I: DyadicInterval, J: DyadicInterval, level: int | None = None) -> float:
    """⟨ψ_I, ψ_J⟩ by the trapezoid rule on the finer of the two dyadic grids."""
    level = basis.quad_level if level is None else level
    if I.j < J.j:
        I, J = J, I
    lo = max(basis.psi(I).support[0], basis.psi(J).support[0])
    hi = min(basis.psi(I).support[1], basis.psi(J).support[1])
    if hi <= lo:
        return 0.0
    x, h = basis.grid(I, level)
    shift = I.j - J.j
    if level + shift <= basis.table_level:
        # exact lookup of the coarser wavelet at the finer dyadic nodes
        u = np.ldexp(x, J.j) - J.k
        a, b = basis.support
        idx = np.rint((u - a) * (1 << basis.table_level)).astype(np.int64)
        ok = (idx >= 0) & (idx < len(basis.tables[0]))
        coarse = np.zeros_like(x)
        coarse[ok] = 2.0 ** (J.j / 2) * basis.tables[0][idx[ok]]
    else:
        coarse = basis.psi(J)(x)
    return float(h * np.dot(basis.samples(I, level), coarse))


def gram(basis: WaveletBasis, intervals: list[DyadicInterval], level: int | None = None) -> np.ndarray:
    """Gram matrix ⟨ψ_I, ψ_J⟩ on the list."""
    n = len(intervals)
    G = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            G[a, b] = G[b, a] = pair_samples(basis, intervals[a], intervals[b], level)
    return G


def gram_deviation(basis: WaveletBasis, intervals: list[DyadicInterval], level: int | None = None) -> float:
    G = gram(basis, intervals, level)
    return float(np.max(np.abs(G - np.eye(len(intervals)))))
