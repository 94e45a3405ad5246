"""Wavelet matrices of singular integral operators and their norms.

``A[J, I] = ⟨T ψ_I, ψ_J⟩ = ∫∫ ψ_I(t) ψ_J(x) K(t, x) dt dx``.  Rows are
outputs J, columns inputs I.

Quadrature.  For a pair whose supports are far apart (gap at least the
larger length) the kernel is smooth on the product and a tensor trapezoid
rule on the coarse dyadic grids of both wavelets is used; the discrete
wavelet samples keep their vanishing moments exactly, so these small entries
stay accurate relative to their size.  For near pairs the coarser function
is integrated first, on its own dyadic grid, at every node of the finer
function's grid.  Principal values are handled by subtracting
``σ(y,y) f(y) g(s-y)/(s-y)`` with an even plateau g whose principal value
vanishes; the remainder is smooth and the trapezoid rule applies.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import cache as czcache
from .admissible import FBound, f_joint, f_w
from .bumps import PLATEAU, SampledFunction, plateau_on, translate_dilate
from .dyadic import (DyadicInterval, Interval, LagomWindow, as_interval, diam_union, ec, hull, is_lagom,
                     rdist, window_of)
from .kernels import CZKernel
from .wavelets import WaveletBasis


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    """Dyadic refinement levels per length |I| for near and far pairs."""

    near_level: int = 4
    far_level: int = 3
    near_factor: float = 1.0
    chunk: int = 1 << 21

    def spec(self) -> dict:
        return {"near_level": self.near_level, "far_level": self.far_level, "near_factor": self.near_factor}


@dataclass
class CoefficientMatrix:
    """Dense operator matrix on a list of dyadic intervals (rows: outputs)."""

    intervals: list
    values: np.ndarray
    kernel: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {I: n for n, I in enumerate(self.intervals)}

    def entry(self, I: DyadicInterval, J: DyadicInterval) -> float:
        """⟨T ψ_I, ψ_J⟩."""
        return float(self.values[self.index[J], self.index[I]])

    def submatrix(self, intervals: Sequence[DyadicInterval]) -> "CoefficientMatrix":
        idx = [self.index[I] for I in intervals]
        return CoefficientMatrix(list(intervals), self.values[np.ix_(idx, idx)], self.kernel, dict(self.meta))


# ---------------------------------------------------------------------------
# quadrature pieces


def _support(f: SampledFunction) -> tuple[float, float]:
    if f.support is None:
        raise ValueError(f"{f.name} needs compact support for pairing")
    return f.support


def _grid(lo: float, hi: float, h: float) -> np.ndarray:
    """Nodes m·h covering [lo, hi] (aligned to multiples of h)."""
    a = math.floor(lo / h)
    b = math.ceil(hi / h)
    return np.arange(a, b + 1) * h


def _inner(K: CZKernel, c: SampledFunction, hc: float, width: float, y: np.ndarray, role: str,
           chunk: int) -> np.ndarray:
    """Integral of c against K in one variable, evaluated at the points y.

    role "t": u(y) = pv∫ c(s) K(s, y) ds; role "x": v(y) = pv∫ c(s) K(y, s) ds.
    ``width`` is the half-plateau of the subtraction function.
    """
    lo, hi = _support(c)
    if K.singularity == "pv_odd":
        lo, hi = min(lo, y.min() - 2 * width), max(hi, y.max() + 2 * width)
    s = _grid(lo, hi, hc)
    cs = c(s)
    keep = cs != 0.0 if K.singularity != "pv_odd" else np.ones(s.shape, bool)
    f0 = None
    s, cs = s[keep], cs[keep]
    out = np.empty(y.shape)
    if K.symbol is not None:
        cy, dcy = c(y), c(y, 1)
        sig_yy = K.symbol(y, y)
        d_sig = K.symbol_dt(y, y) if role == "t" else K.symbol_dx(y, y)
        limit = dcy * sig_yy + cy * d_sig
        f0 = cy * sig_yy
    step = max(1, chunk // max(1, s.size))
    use_symbol = K.symbol is not None
    subtract = use_symbol and bool(np.any(f0 != 0.0)) if use_symbol else False
    for a in range(0, y.size, step):
        yy = y[a:a + step]
        if use_symbol:
            if role == "t":
                diff = np.subtract.outer(s, yy).T        # t - x
                sig = K.symbol_block(s, yy).T
            else:
                diff = np.subtract.outer(yy, s)          # t - x
                sig = K.symbol_block(yy, s)
            num = cs[None, :] * sig
            if subtract:
                dist = np.abs(diff)
                g = np.where(dist <= width, 1.0, 0.0)
                band = (dist > width) & (dist < 2 * width)
                if band.any():
                    g[band] = PLATEAU(dist[band] / width)
                num -= f0[a:a + step, None] * g
            on = diff == 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                R = num / diff
            if on.any():
                rows, cols = np.nonzero(on)
                sign = 1.0 if role == "t" else -1.0
                R[rows, cols] = sign * limit[a:a + step][rows]
        elif K.rank_parts is not None:
            # ∫ c(s) a(s) ds b(y) per part (role "t"), or a(y) ∫ c(s) b(s) ds (role "x")
            out[a:a + step] = sum(hc * np.dot(cs, first(s)) * second(yy) if role == "t"
                                  else hc * np.dot(cs, second(s)) * first(yy) for first, second in K.rank_parts)
            continue
        else:
            if role == "t":
                R = cs[None, :] * K.extended(s[None, :], yy[:, None])
            else:
                R = cs[None, :] * K.extended(yy[:, None], s[None, :])
        out[a:a + step] = hc * R.sum(axis=1)
    return out


def level_for(K: CZKernel, length: float, base: int) -> int:
    """Refinement level for an interval of this length, finer if the kernel needs it."""
    if K.max_spacing is None:
        return base
    return max(base, math.ceil(math.log2(length / K.max_spacing) - 1e-12))


def _gap(f: SampledFunction, g: SampledFunction) -> float:
    a, b = _support(f)
    c, d = _support(g)
    return max(c - b, a - d, 0.0)


def pair_functions(K: CZKernel, f_in: SampledFunction, h_in: float, f_out: SampledFunction, h_out: float,
                   chunk: int = 1 << 21) -> float:
    """∫∫ f_in(t) f_out(x) K(t, x) dt dx with grid spacings h_in, h_out.

    The coarser grid's function is integrated first; ties integrate f_in first.
    """
    if h_in >= h_out:
        xs = _grid(*_support(f_out), h_out)
        fx = f_out(xs)
        m = fx != 0
        u = _inner(K, f_in, h_in, 16 * h_in, xs[m], "t", chunk) if m.any() else np.zeros(0)
        return float(h_out * np.dot(fx[m], u))
    ts = _grid(*_support(f_in), h_in)
    ft = f_in(ts)
    m = ft != 0
    v = _inner(K, f_out, h_out, 16 * h_out, ts[m], "x", chunk) if m.any() else np.zeros(0)
    return float(h_in * np.dot(ft[m], v))


def pv_equal_scale(K: CZKernel, basis: WaveletBasis, I: DyadicInterval, J: DyadicInterval, level: int) -> float:
    """⟨T ψ_I, ψ_J⟩ for |I| = |J| and a pv_odd kernel, through u = t - x.

    G(u) = ∫ ψ_I(x+u) ψ_J(x) σ(x+u, x) dx is summed on the common dyadic grid
    of spacing h; the even function F(u) = (G(u) - G(-u))/u is integrated over
    u > 0 by the trapezoid rule with F(0) extrapolated from F(h), F(2h), F(3h).
    For symmetric σ, swapping I and J negates the result exactly.
    """
    if I.j != J.j:
        raise ValueError("equal-scale rule needs |I| = |J|")
    h = I.length * 2.0 ** -level
    a, b = basis.support
    ki = np.arange(round((I.left + a * I.length) / h), round((I.left + b * I.length) / h) + 1)
    kj = np.arange(round((J.left + a * J.length) / h), round((J.left + b * J.length) / h) + 1)
    t, x = ki * h, kj * h
    D = np.multiply.outer(basis.psi(I)(t), basis.psi(J)(x)) * K.symbol_block(t, x)
    offset = np.subtract.outer(ki, kj)
    lo, hi = int(offset.min()), int(offset.max())
    span = max(-lo, hi, 3)
    G = np.zeros(2 * span + 1)  # G[span + m] at u = m h
    G[span + lo:span + hi + 1] = h * np.bincount((offset - lo).ravel(), weights=D.ravel(), minlength=hi - lo + 1)
    m = np.arange(1, span + 1)
    F = (G[span + m] - G[span - m]) / (m * h)
    F0 = 1.5 * F[0] - 0.6 * F[1] + 0.1 * F[2]
    return float(0.5 * h * F0 + h * F.sum())


def dual_pair(K: CZKernel, basis: WaveletBasis, I: DyadicInterval, J: DyadicInterval,
              quad: QuadratureSettings = QuadratureSettings()) -> float:
    """⟨T ψ_I, ψ_J⟩ with the same rule the assembly uses."""
    pI, pJ = basis.psi(I), basis.psi(J)
    coarse = max(I.length, J.length)
    far = _gap(pI, pJ) >= quad.near_factor * coarse
    base = quad.far_level if far else quad.near_level
    lI, lJ = level_for(K, I.length, base), level_for(K, J.length, base)
    hI, hJ = I.length * 2.0 ** -lI, J.length * 2.0 ** -lJ
    if far:
        t, _ = basis.grid(I, lI)
        x, _ = basis.grid(J, lJ)
        vals = K.block(t, x)
        return float(hI * hJ * basis.samples(I, lI) @ vals @ basis.samples(J, lJ))
    if K.singularity == "pv_odd" and I.j == J.j:
        return pv_equal_scale(K, basis, I, J, lI)
    return pair_functions(K, pI, hI, pJ, hJ, quad.chunk)


# ---------------------------------------------------------------------------
# assembly


def _assembly_spec(K: CZKernel, basis: WaveletBasis, intervals, quad: QuadratureSettings) -> dict:
    return {
        "format": czcache.VERSION,
        "kernel": K.spec(),
        "basis": {"order": basis.order, "table_level": basis.table_level},
        "quadrature": quad.spec(),
        "pv_equal_scale": "u-substitution",
        "intervals": [[I.j, I.k] for I in intervals],
    }


def _assemble_far(K, basis, intervals, quad, out, near_mask, chunk):
    levs = [level_for(K, I.length, quad.far_level) for I in intervals]
    n = len(intervals)
    grids = [basis.grid(I, l)[0] for I, l in zip(intervals, levs)]
    samp = [basis.samples(I, l) for I, l in zip(intervals, levs)]
    h = np.array([I.length * 2.0 ** -l for I, l in zip(intervals, levs)])
    for col in range(n):
        rows = np.flatnonzero(~near_mask[:, col])
        if rows.size == 0:
            continue
        t = grids[col]
        wt = h[col] * samp[col]
        # batches of output rows so the kernel block stays within the chunk
        start = 0
        while start < rows.size:
            total, stop = 0, start
            while stop < rows.size and (total == 0 or (total + grids[rows[stop]].size) * t.size <= chunk):
                total += grids[rows[stop]].size
                stop += 1
            batch = rows[start:stop]
            x = np.concatenate([grids[r] for r in batch])
            wx = np.concatenate([h[r] * samp[r] for r in batch])
            proj = (wt @ K.block(t, x)) * wx
            offsets = np.cumsum([0] + [grids[r].size for r in batch])[:-1]
            out[batch, col] = np.add.reduceat(proj, offsets)
            start = stop


def _assemble_near_for(K, basis, intervals, quad, c_idx, near_mask, chunk):
    """Entries of every near pair whose coarser member is intervals[c_idx]."""
    C = intervals[c_idx]
    pc = basis.psi(C)
    hc = C.length * 2.0 ** -level_for(K, C.length, quad.near_level)
    width = 16 * hc
    results = []
    by_scale: dict[int, list[tuple[int, str]]] = {}
    for o, F in enumerate(intervals):
        if F.j < C.j:
            continue
        if F.j == C.j:
            if near_mask[o, c_idx]:
                if K.singularity == "pv_odd":
                    lev = level_for(K, C.length, quad.near_level)
                    results.append((o, c_idx, pv_equal_scale(K, basis, C, F, lev)))
                else:
                    by_scale.setdefault(F.j, []).append((o, "t"))
            continue
        if near_mask[o, c_idx]:
            by_scale.setdefault(F.j, []).append((o, "t"))
        if near_mask[c_idx, o]:
            by_scale.setdefault(F.j, []).append((o, "x"))
    for j, members in sorted(by_scale.items()):
        lev = level_for(K, math.ldexp(1.0, -j), quad.near_level)
        hf = math.ldexp(1.0, -(j + lev))
        sups = [basis.psi(intervals[o]).support for o, _ in members]
        y = _grid(min(s[0] for s in sups), max(s[1] for s in sups), hf)
        need_t = any(r == "t" for _, r in members)
        need_x = any(r == "x" for _, r in members)
        u = _inner(K, pc, hc, width, y, "t", chunk) if need_t else None
        v = _inner(K, pc, hc, width, y, "x", chunk) if need_x else None
        base = round(y[0] / hf)
        for o, role in members:
            F = intervals[o]
            xs, _ = basis.grid(F, lev)
            a = round(xs[0] / hf) - base
            vals = basis.samples(F, lev)
            prof = u if role == "t" else v
            val = hf * float(np.dot(vals, prof[a:a + vals.size]))
            if role == "t":
                results.append((o, c_idx, val))
            else:
                results.append((c_idx, o, val))
    return results


def near_mask_for(basis: WaveletBasis, intervals, factor: float) -> np.ndarray:
    """near[J, I] is True when the supports of ψ_I, ψ_J are closer than factor · max length."""
    lo = np.array([basis.psi(I).support[0] for I in intervals])
    hi = np.array([basis.psi(I).support[1] for I in intervals])
    L = np.array([I.length for I in intervals])
    gap = np.maximum(np.maximum(lo[None, :] - hi[:, None], lo[:, None] - hi[None, :]), 0.0)
    return gap < factor * np.maximum(L[None, :], L[:, None])


def assemble(K: CZKernel, basis: WaveletBasis, window, cache_dir: Optional[str] = None,
             quad: QuadratureSettings = QuadratureSettings(), threads: int = 1) -> CoefficientMatrix:
    """Operator matrix on the window intervals, read from or written to the cache."""
    intervals = window_of(window) if isinstance(window, LagomWindow) else list(window)
    intervals = sorted(intervals)
    spec = _assembly_spec(K, basis, intervals, quad)
    path = czcache.cache_path(cache_dir, spec) if cache_dir else None
    n = len(intervals)
    if path is not None and path.exists():
        try:
            rec = czcache.read_records(path, spec)
            idx = {(I.j, I.k): m for m, I in enumerate(intervals)}
            A = np.zeros((n, n))
            for r in rec:
                A[idx[(int(r["jJ"]), int(r["kJ"]))], idx[(int(r["jI"]), int(r["kI"]))]] = r["v"]
            return CoefficientMatrix(intervals, A, K.name, {"cache": "hit"})
        except czcache.CacheError:
            pass
    A = np.zeros((n, n))
    near = near_mask_for(basis, intervals, quad.near_factor)
    _assemble_far(K, basis, intervals, quad, A, near, quad.chunk)
    jobs = list(range(n))
    run = lambda c: _assemble_near_for(K, basis, intervals, quad, c, near, quad.chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            batches = list(ex.map(run, jobs))
    else:
        batches = [run(c) for c in jobs]
    for batch in batches:
        for r, c, v in batch:
            A[r, c] = v
    if not np.all(np.isfinite(A)):
        raise FloatingPointError("non-finite entries in the assembled matrix")
    if path is not None:
        rec = np.zeros(n * n, dtype=czcache.RECORD)
        J_idx, I_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        rec["jJ"] = [intervals[m].j for m in J_idx.ravel()]
        rec["kJ"] = [intervals[m].k for m in J_idx.ravel()]
        rec["jI"] = [intervals[m].j for m in I_idx.ravel()]
        rec["kI"] = [intervals[m].k for m in I_idx.ravel()]
        rec["v"] = A.ravel()
        czcache.write_records(path, spec, rec)
    return CoefficientMatrix(intervals, A, K.name, {"cache": "miss" if path else "off"})


# ---------------------------------------------------------------------------
# norms


def _orthogonalize(w: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # two passes of classical Gram-Schmidt keep the Lanczos vectors orthonormal
    w = w - basis.T @ (basis @ w)
    return w - basis.T @ (basis @ w)


def _fresh_direction(basis: np.ndarray, n: int) -> Optional[np.ndarray]:
    """Deterministic unit vector orthogonal to the basis rows, or None when they span everything."""
    for attempt in range(4 * n):
        w = _orthogonalize(np.cos((attempt + 1) * (np.arange(n) + 0.5) + attempt), basis)
        norm = float(np.linalg.norm(w))
        if norm > 1e-8:
            return w / norm
    return None


def op_norm(A, rtol: float = 1e-8, max_iter: Optional[int] = None) -> float:
    """Largest singular value from the power-iteration Krylov space of AᵀA.

    Starts from the normalized all-ones vector and runs Lanczos with full
    reorthogonalization, which resolves clustered top singular values that
    stall plain power iteration.  Stops once the Ritz residual of the largest
    Ritz value is below rtol times that value; after n steps it is exact.
    """
    M = A.values if isinstance(A, CoefficientMatrix) else np.asarray(A, dtype=float)
    if M.size == 0 or not np.any(M):
        return 0.0
    n = M.shape[1]
    steps = n if max_iter is None else min(n, max_iter)
    basis = np.zeros((steps, n))
    alpha, beta = [], []
    v = np.ones(n) / math.sqrt(n)
    for k in range(steps):
        basis[k] = v
        w = M.T @ (M @ v)
        alpha.append(float(v @ w))
        w = _orthogonalize(w, basis[:k + 1])
        b = float(np.linalg.norm(w))
        T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        vals, vecs = np.linalg.eigh(T)
        theta = float(vals[-1])
        if k + 1 == n:
            return math.sqrt(max(theta, 0.0))
        if b <= 1e-13 * max(theta, abs(alpha[-1]), 1e-300):
            # the Krylov space is invariant, so its Ritz values are exact but may miss
            # the top; continue in a new direction, splitting T
            fresh = _fresh_direction(basis[:k + 1], n)
            if fresh is None:
                return math.sqrt(max(theta, 0.0))
            v, b = fresh, 0.0
        elif theta > 0 and b * abs(vecs[-1, -1]) <= rtol * theta:
            return math.sqrt(theta)
        else:
            v = w / b
        beta.append(b)
    raise ConvergenceError(f"Lanczos did not converge within {steps} steps")


def tail_rows(intervals, M: int) -> np.ndarray:
    return np.array([not is_lagom(I, M) for I in intervals], dtype=bool)


def tail_norm(A: CoefficientMatrix, M: int, **kw) -> float:
    """‖P_M^⊥ T‖ on the window: rows J outside the lagom family kept."""
    rows = tail_rows(A.intervals, M)
    return op_norm(A.values[rows], **kw) if rows.any() else 0.0


# ---------------------------------------------------------------------------
# compactness diagnostics


@dataclass
class WeakScan:
    intervals: list
    residuals: np.ndarray
    constant: float
    M: Optional[int]
    eps: float


def weak_compactness_scan(K: CZKernel, basis: WaveletBasis, window, eps: float,
                          fb: Optional[FBound] = None, M_max: int = 8,
                          quad: QuadratureSettings = QuadratureSettings()) -> WeakScan:
    """|⟨T φ_I, ψ_I⟩| over the window with φ_I the L²-normalized plateau on I.

    The reported M is the smallest M ≤ M_max with residual ≤ C_W (F_W(I;M) + ε)
    for every window I outside the lagom family, C_W being the largest
    residual; None when no such M exists.
    """
    fb = fb or FBound(kernel=None)  # type: ignore[arg-type]
    intervals = window_of(window) if isinstance(window, LagomWindow) else sorted(window)
    res = np.zeros(len(intervals))
    for n, I in enumerate(intervals):
        phi = translate_dilate(PLATEAU, I.center, I.length / 2, 2.0)
        h = I.length * 2.0 ** -level_for(K, I.length, quad.near_level)
        res[n] = abs(pair_functions(K, phi, h, basis.psi(I), h, quad.chunk))
    return weak_scan_from_residuals(intervals, res, eps, fb, M_max)


def weak_scan_from_residuals(intervals, res: np.ndarray, eps: float, fb: FBound, M_max: int = 8) -> WeakScan:
    """Smallest M with every non-lagom residual under C_W (F_W(I;M) + ε), C_W the largest residual."""
    CW = float(res.max()) if res.size else 0.0
    found = None
    for M in range(1, M_max + 1):
        ok = all(res[n] <= CW * (f_w(fb, I, M) + eps) * (1 + 1e-12)
                 for n, I in enumerate(intervals) if not is_lagom(I, M))
        if ok:
            found = M
            break
    return WeakScan(list(intervals), res, CW, found, eps)


@dataclass(frozen=True)
class BoundParameters:
    """N and θ for the off-diagonal bound; δ' = δ - θ(1+δ)."""

    N: int = 6
    theta: float = 0.1

    def delta_prime(self, delta: float) -> float:
        dp = delta - self.theta * (1 + delta)
        if dp <= 0:
            raise ValueError("θ too large for δ")
        return dp


def bound_family(I, J, theta: float) -> list[Interval]:
    """I, J, their hull, and the three dilated copies used by the off-diagonal bound."""
    iv, jv = as_interval(I), as_interval(J)
    kmax, kmin = (iv, jv) if iv.length >= jv.length else (jv, iv)
    diam = diam_union((iv, jv))
    lam1 = diam / kmax.length
    lam2 = (diam / kmin.length) ** theta
    moved = Interval(kmin.center, kmax.length)
    return [iv, jv, hull(iv, jv), moved.scaled(lam1), moved.scaled(lam2), kmin.scaled(lam2)]


def offdiagonal_ratios(A: CoefficientMatrix, params: BoundParameters, fb: FBound, M: int, eps: float,
                  delta: float = 1.0) -> np.ndarray:
    """|A[J,I]| rdist^{1+δ'} / (ec^{1/2+δ'} (F(family; M) + ε)) for every pair."""
    dp = params.delta_prime(delta)
    ivs = A.intervals
    n = len(ivs)
    out = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            v = A.values[a, b]
            if v == 0.0:
                continue
            I, J = ivs[b], ivs[a]
            F = f_joint(fb, bound_family(I, J, params.theta), M)
            out[a, b] = abs(v) * rdist(I, J) ** (1 + dp) / (ec(I, J) ** (0.5 + dp) * (F + eps))
    return out


def offdiagonal_bound_check(A: CoefficientMatrix, params: BoundParameters, fb: FBound, M: int, eps: float,
                       delta: float = 1.0) -> tuple[float, tuple]:
    """Fitted constant of the off-diagonal bound and the pair attaining it."""
    R = offdiagonal_ratios(A, params, fb, M, eps, delta)
    a, b = np.unravel_index(np.argmax(R), R.shape)
    return float(R[a, b]), (A.intervals[b], A.intervals[a])


def necessity_weights(intervals, M: int, alpha: float, N: int = 6) -> np.ndarray:
    big = 2.0 ** M
    out = []
    for I in intervals:
        iv = as_interval(I)
        r = rdist(iv, Interval(0.0, big))
        out.append((1 + iv.length / big) ** -alpha * (1 + (1 / big) / iv.length) ** -alpha * (1 + r / M) ** -N)
    return np.array(out)


def necessity_bound_check(A: CoefficientMatrix, p: float, M: int, N: int = 6, tail_weight: float = 1.0) -> dict:
    """Fit C in |⟨Tψ_I, ψ_I⟩| ≤ C w_M(I) + C'‖P_M^⊥ T‖ over the window diagonal."""
    alpha = abs(0.5 - 1.0 / p) + 0.5
    diag = np.abs(np.diag(A.values))
    tail = tail_norm(A, M)
    w = necessity_weights(A.intervals, M, alpha, N)
    excess = np.maximum(diag - tail_weight * tail, 0.0)
    C = float(np.max(excess / w)) if diag.size else 0.0
    return {"M": M, "alpha": alpha, "tail_norm": tail, "constant": C,
            "holds": bool(np.all(diag <= C * w + tail_weight * tail + 1e-15))}
