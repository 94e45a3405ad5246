"""Dyadic paraproducts built from wavelet coefficients of a symbol b.

``⟨T_b f, g⟩ = Σ_I b_I ⟨f, φ_I⟩ ⟨g, ψ_I⟩`` where φ_I is the L¹-normalized
companion bump (positive, integral one, supported in the middle half of a
neighbourhood of I) and ψ_I the wavelet.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bumps import PLATEAU, SampledFunction, cell_nodes, plateau_on, translate_dilate
from .dyadic import DyadicInterval, LagomWindow, is_lagom, window_of
from .kernels import CZKernel
from .operators import CoefficientMatrix, op_norm, tail_norm
from .spaces import cmo_modulus
from .wavelets import CoefficientMap, WaveletBasis, coeff, project_lagom

# Φ(4x) has integral 3/4, so this profile has integral one and support [-1/2, 1/2].
COMPANION_SCALE = 4.0 / 3.0


def companion(x, n: int = 0) -> np.ndarray:
    return COMPANION_SCALE * 4.0 ** n * PLATEAU(4.0 * np.asarray(x, float), n)


COMPANION = SampledFunction(companion, PLATEAU.order, (-0.5, 0.5), "companion")


@dataclass
class Paraproduct:
    b: CoefficientMap
    basis: WaveletBasis

    def phi(self, I: DyadicInterval) -> SampledFunction:
        """φ_I(x) = |I|^{-1} φ((x - c(I))/|I|)."""
        return translate_dilate(COMPANION, I.center, I.length, 1.0)

    @property
    def finest(self) -> int:
        return max((I.j for I in self.b.keys()), default=0)

    def spec(self) -> dict:
        return {"b": self.b.as_records(), "basis": self.basis.name}


def paraproduct_pair(P: Paraproduct, f: Callable, g: Callable) -> tuple[float, float]:
    """(⟨T_b f, g⟩, truncation estimate).

    The estimate is the summed size of the terms on the coarsest and finest
    levels present, a proxy for what lies beyond the window.
    """
    total, edge = 0.0, 0.0
    keys = P.b.keys()
    if not keys:
        return 0.0, 0.0
    jlo, jhi = min(I.j for I in keys), max(I.j for I in keys)
    g_sup = getattr(g, "support", None)
    for I, bI in P.b.items():
        if bI == 0.0:
            continue
        if g_sup is not None:
            lo, hi = P.basis.psi(I).support
            if hi <= g_sup[0] or lo >= g_sup[1]:
                continue
        x, w = cell_nodes(I.center - I.length / 2, I.center + I.length / 2, I.length / 16)
        fi = float(np.dot(w, np.asarray(f(x), float) * P.phi(I)(x)))
        term = bI * fi * coeff(P.basis, g, I)
        total += term
        if I.j in (jlo, jhi):
            edge += abs(term)
    return total, edge


def output_coefficients(P: Paraproduct, f_phi: CoefficientMap) -> CoefficientMap:
    """Wavelet coefficients of T_b f given the averages ⟨f, φ_I⟩."""
    return CoefficientMap({I: v * f_phi[I] for I, v in P.b.items()})


def coefficient_pair(P: Paraproduct, f_phi: CoefficientMap, g_psi: CoefficientMap) -> float:
    """⟨T_b f, g⟩ from the averages of f and the wavelet coefficients of g."""
    return sum(v * f_phi[I] * g_psi[I] for I, v in P.b.items())


def _phi_block(P: Paraproduct, t: np.ndarray, keys) -> np.ndarray:
    out = np.zeros((t.size, len(keys)))
    for n, I in enumerate(keys):
        lo, hi = I.center - I.length / 2, I.center + I.length / 2
        m = (t > lo) & (t < hi)
        if m.any():
            out[m, n] = P.phi(I)(t[m])
    return out


def _psi_block(P: Paraproduct, x: np.ndarray, keys) -> np.ndarray:
    out = np.zeros((x.size, len(keys)))
    for n, I in enumerate(keys):
        f = P.basis.psi(I)
        lo, hi = f.support
        m = (x > lo) & (x < hi)
        if m.any():
            out[m, n] = f(x[m])
    return out


def kernel_block(P: Paraproduct, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """K(t_i, x_j) = Σ_I b_I φ_I(t_i) ψ_I(x_j) as a matrix."""
    items = [(I, v) for I, v in P.b.items() if v != 0.0]
    keys = [I for I, _ in items]
    bvec = np.array([v for _, v in items])
    t, x = np.atleast_1d(np.asarray(t, float)), np.atleast_1d(np.asarray(x, float))
    return (_phi_block(P, t, keys) * bvec) @ _psi_block(P, x, keys).T


def kernel_eval(P: Paraproduct, t, x) -> np.ndarray:
    """Pointwise kernel off the diagonal; |t - x| must be at least 2^-(j_max+2)."""
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    floor = 2.0 ** -(P.finest + 2)
    if np.any(np.abs(t - x) < floor):
        raise ValueError(f"kernel evaluated closer than {floor} to the diagonal")
    flat_t, flat_x = t.ravel(), x.ravel()
    out = np.empty(flat_t.size)
    step = 4096
    for a in range(0, flat_t.size, step):
        tt, xx = flat_t[a:a + step], flat_x[a:a + step]
        items = [(I, v) for I, v in P.b.items() if v != 0.0]
        keys = [I for I, _ in items]
        bvec = np.array([v for _, v in items])
        out[a:a + step] = np.einsum("ij,j,ij->i", _phi_block(P, tt, keys), bvec, _psi_block(P, xx, keys))
    return out.reshape(t.shape)


def _regime_sample(u: np.ndarray, r_range, s_range):
    """(t, x, t') with |t-x| log-uniform in r_range, (t+x)/2 in ±s_range, |t-t'| ≤ |t-x|/4."""
    def logu(v, lo, hi):
        return np.exp(np.log(lo) + v * (np.log(hi) - np.log(lo)))

    r = logu(u[:, 0], *r_range)
    lo, hi = s_range
    mid = (lo + (hi - lo) * u[:, 1]) * np.where(u[:, 2] < 0.5, -1.0, 1.0)
    orient = np.where((2 * u[:, 2]) % 1.0 < 0.5, -1.0, 1.0)
    t, x = mid + orient * r / 2, mid - orient * r / 2
    step = logu(u[:, 3], 1e-3, 0.25) * r * np.where((4 * u[:, 2]) % 1.0 < 0.5, -1.0, 1.0)
    return t, x, t + step


def kernel_smoothness_check(P: Paraproduct, M: int, n: int = 512, seed: int = 0) -> dict:
    """Difference quotients |K(t,x) - K(t',x)| |t-x|² / |t-t'| in three regimes.

    ``far``: |t-x| ≥ 2^M.  ``distant``: |t-x| < 2^M with |t+x| ≥ M 2^{M+1}.
    ``near``: |t-x| below 2^{-M} (but above the kernel floor).  Each regime's
    constant is its largest quotient over ‖P_M^⊥ b‖ + 2^{-M}.
    """
    from scipy.stats import qmc

    floor = 2.0 ** -(P.finest + 2)
    reach = max([1.0] + [max(abs(e) for e in P.basis.psi(I).support) for I in P.b.keys()])
    big, far_mid = 2.0 ** M, M * 2.0 ** (M + 1)
    low = 1.5 * floor  # t' moves by at most |t-x|/4, so |t'-x| stays above the floor
    regimes = {
        "far": ((big, 8 * big), (0.0, reach + 8 * big)),
        "distant": ((low, big), (far_mid / 2 + big, far_mid + 2 * reach + 2 * big)),
        "near": ((low, max(2.0 ** -M, 2 * low)), (0.0, reach)),
    }
    scale = cmo_modulus(P.b, M) + 2.0 ** -M
    out = {"M": M, "scale": scale, "regimes": {}}
    for n_reg, (name, (r_range, s_range)) in enumerate(regimes.items()):
        u = qmc.Halton(d=4, scramble=True, seed=seed + n_reg).random(n)
        t, x, tp = _regime_sample(u, r_range, s_range)
        if not P.b.keys():
            q = np.zeros(n)
        else:
            q = np.abs(kernel_eval(P, t, x) - kernel_eval(P, tp, x)) * (t - x) ** 2 / np.abs(t - tp)
        top = float(q.max())
        out["regimes"][name] = {"count": n, "max_quotient": top, "constant": top / scale}
    out["constant"] = max(r["constant"] for r in out["regimes"].values())
    return out


def as_kernel(P: Paraproduct) -> CZKernel:
    """The paraproduct kernel as a bounded kernel (it is a finite smooth sum)."""

    def func(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        items = [(I, v) for I, v in P.b.items() if v != 0.0]
        keys = [I for I, _ in items]
        bvec = np.array([v for _, v in items])
        ft, fx = t.ravel(), x.ravel()
        out = np.empty(ft.size)
        for a in range(0, ft.size, 4096):
            out[a:a + 4096] = np.einsum("ij,j,ij->i", _phi_block(P, ft[a:a + 4096], keys), bvec,
                                        _psi_block(P, fx[a:a + 4096], keys))
        return out.reshape(t.shape)

    return CZKernel("paraproduct", func, delta=1.0, singularity="bounded", diag=lambda x: func(x, x),
                    params={"b": _records_digest(P.b)})


def _records_digest(c: CoefficientMap) -> str:
    blob = json.dumps(c.as_records(), separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def kernel_pair(P: Paraproduct, I: DyadicInterval, J: DyadicInterval, level: int = 7) -> float:
    """⟨T_b ψ_I, ψ_J⟩ by tensor trapezoid quadrature of the pointwise kernel."""
    t, _ = P.basis.grid(I, level)
    x, _ = P.basis.grid(J, level)
    hI, hJ = I.length * 2.0 ** -level, J.length * 2.0 ** -level
    Kmat = kernel_block(P, t, x)
    return float(hI * hJ * P.basis.samples(I, level) @ Kmat @ P.basis.samples(J, level))


def _psi_phi(P: Paraproduct, I: DyadicInterval, L: DyadicInterval, level: int) -> float:
    """⟨ψ_I, φ_L⟩ on a dyadic grid fine enough for both."""
    lo = max(P.basis.psi(I).support[0], L.center - L.length / 2)
    hi = min(P.basis.psi(I).support[1], L.center + L.length / 2)
    if hi <= lo:
        return 0.0
    j = max(I.j + level, L.j + 6)
    h = math.ldexp(1.0, -j)
    x = np.arange(math.floor(lo / h), math.ceil(hi / h) + 1) * h
    return float(h * np.dot(P.basis.psi(I)(x), P.phi(L)(x)))


def paraproduct_matrix(P: Paraproduct, intervals: Sequence[DyadicInterval], level: int = 8) -> CoefficientMatrix:
    """A[J, I] = ⟨T_b ψ_I, ψ_J⟩ = b_J ⟨ψ_I, φ_J⟩, using orthonormality of the wavelets."""
    intervals = sorted(intervals)
    n = len(intervals)
    A = np.zeros((n, n))
    for r, J in enumerate(intervals):
        bJ = P.b[J]
        if bJ == 0.0:
            continue
        for c, I in enumerate(intervals):
            A[r, c] = bJ * _psi_phi(P, I, J, level)
    return CoefficientMatrix(intervals, A, "paraproduct")


def paraproduct_compactness(P: Paraproduct, intervals: Sequence[DyadicInterval], Ms: Sequence[int],
                            A: Optional[CoefficientMatrix] = None) -> dict:
    """Tail norms against the CMO modulus of b, with the fitted ratio constant."""
    A = A if A is not None else paraproduct_matrix(P, intervals)
    rows = []
    for M in Ms:
        tn = tail_norm(A, M)
        cm = cmo_modulus(P.b, M, intervals)
        rows.append({"M": M, "tail_norm": tn, "cmo_modulus": cm})
    ratios = [r["tail_norm"] / r["cmo_modulus"] for r in rows if r["cmo_modulus"] > 0]
    C = max(ratios, default=0.0)
    holds = all(r["tail_norm"] <= C * r["cmo_modulus"] * (1 + 1e-12) + 1e-15 for r in rows)
    return {"rows": rows, "constant": C, "holds": holds, "norm": op_norm(A)}


def interior_intervals(P: Paraproduct, intervals: Sequence[DyadicInterval], R: float) -> list[DyadicInterval]:
    """Intervals whose wavelet support lies inside (-R, R)."""
    return [J for J in intervals if -R < P.basis.psi(J).support[0] and P.basis.psi(J).support[1] < R]


def one(x) -> np.ndarray:
    return np.ones(np.shape(x))


def reproduction_error(P: Paraproduct, intervals: Sequence[DyadicInterval]) -> float:
    """max_J |⟨T_b 1, ψ_J⟩ - b_J|."""
    worst = 0.0
    for J in intervals:
        value, _ = paraproduct_pair(P, one, P.basis.psi(J))
        worst = max(worst, abs(value - P.b[J]))
    return worst


def adjoint_one(P: Paraproduct, tests: Sequence[Callable]) -> float:
    """max over test functions f of |⟨T_b f, 1⟩| = |⟨f, T_b* 1⟩|."""
    return max((abs(paraproduct_pair(P, f, one)[0]) for f in tests), default=0.0)


def disjoint_bump_pairs(intervals: Sequence[DyadicInterval], count: int, levels=(0, 1, 2), reach: float = 8.0,
                        seed: int = 0) -> list[tuple[DyadicInterval, DyadicInterval]]:
    """Seeded choice of interval pairs whose unit plateaus Φ_I, Φ_J have disjoint supports."""
    pool = [I for I in sorted(intervals) if I.j in levels]
    pairs = []
    for I in pool:
        for J in pool:
            gap = abs(I.center - J.center) - 2 * (I.length + J.length)
            if I != J and 0 < gap and abs(I.center - J.center) <= reach:
                pairs.append((I, J))
    if len(pairs) <= count:
        return pairs
    pick = np.random.default_rng(seed).choice(len(pairs), size=count, replace=False)
    return [pairs[i] for i in sorted(pick)]


def bump_pair_routes(P: Paraproduct, I: DyadicInterval, J: DyadicInterval) -> tuple[float, float]:
    """⟨T_b Φ_I, Φ_J⟩ by the coefficient sum and by the pointwise kernel."""
    f, g = plateau_on(I), plateau_on(J)
    coef = 0.0
    for L, bL in P.b.items():
        if bL == 0.0:
            continue
        x, w = cell_nodes(L.center - L.length / 2, L.center + L.length / 2, L.length / 16)
        fL = float(np.dot(w, f(x) * P.phi(L)(x)))
        if fL != 0.0:
            coef += bL * fL * coeff(P.basis, g, L)
    t, wt = cell_nodes(*f.support, min(I.length, J.length) / 32)
    x, wx = cell_nodes(*g.support, min(I.length, J.length) / 32)
    kern = float((wt * f(t)) @ kernel_block(P, t, x) @ (wx * g(x)))
    return coef, kern


def weak_residuals(P: Paraproduct, intervals: Sequence[DyadicInterval]) -> np.ndarray:
    """|⟨T_b φ_I, ψ_I⟩| = |b_I ⟨φ_I, companion_I⟩| with φ_I the L²-normalized plateau on I."""
    out = np.zeros(len(intervals))
    for n, I in enumerate(intervals):
        bI = P.b[I]
        if bI == 0.0:
            continue
        x, w = cell_nodes(I.center - I.length / 2, I.center + I.length / 2, I.length / 16)
        plateau = translate_dilate(PLATEAU, I.center, I.length / 2, 2.0)
        out[n] = abs(bI * float(np.dot(w, plateau(x) * P.phi(I)(x))))
    return out


def symbol_function(spec: str) -> Optional[Callable]:
    """Named symbols: ``zero``, ``plateau_cos`` (Φ(x/2) cos 2x), ``gaussian`` (e^{-x²}),
    ``gauss_cos`` (e^{-x²} cos 3x).

    Returns None for ``wavelet:j:k[:amplitude]``, which is given by its coefficient.
    """
    head = spec.split(":", 1)[0]
    if head == "zero":
        return lambda x: np.zeros(np.shape(x))
    if head == "plateau_cos":
        return lambda x: PLATEAU(np.asarray(x, float) / 2.0) * np.cos(2.0 * np.asarray(x, float))
    if head == "gaussian":
        return lambda x: np.exp(-np.asarray(x, float) ** 2)
    if head == "gauss_cos":
        return lambda x: np.exp(-np.asarray(x, float) ** 2) * np.cos(3.0 * np.asarray(x, float))
    if head == "wavelet":
        return None
    raise ValueError(f"unknown symbol {spec!r}")


def symbol_from_spec(basis: WaveletBasis, spec: str, intervals: Sequence[DyadicInterval]) -> CoefficientMap:
    """Coefficients of a named symbol on the intervals."""
    f = symbol_function(spec)
    if f is not None:
        return symbol_coefficients(basis, f, intervals)
    parts = spec.split(":")
    amp = float(parts[3]) if len(parts) > 3 else 1.0
    return CoefficientMap({DyadicInterval(int(parts[1]), int(parts[2])): amp})


def symbol_coefficients(basis: WaveletBasis, b: Callable, intervals: Sequence[DyadicInterval]) -> CoefficientMap:
    return CoefficientMap({I: coeff(basis, b, I) for I in intervals})
