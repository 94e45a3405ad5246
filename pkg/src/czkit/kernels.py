"""Kernels off the diagonal and their smoothness diagnostics.

A kernel is either ``bounded`` (continuous up to the diagonal, with a
``diag`` extension) or ``pv_odd``: ``K(t,x) = σ(t,x)/(t-x)`` with a smooth
symbol σ, integrated in the principal value sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .admissible import GRID, AdmissibleTriple, envelope_from_samples, zero_triple
from .bumps import PLATEAU

Kernel2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CZKernel:
    """Kernel data.  ``symbol`` and its partials are set for ``pv_odd`` kernels."""

    name: str
    func: Kernel2
    delta: float = 1.0
    constant: Optional[float] = None
    singularity: str = "bounded"
    diag: Optional[Callable[[np.ndarray], np.ndarray]] = None
    symbol: Optional[Kernel2] = None
    symbol_dt: Optional[Kernel2] = None
    symbol_dx: Optional[Kernel2] = None
    triple: Optional[AdmissibleTriple] = None
    params: dict = field(default_factory=dict)
    max_spacing: Optional[float] = None  # quadrature spacing needed to resolve the kernel's own features
    symbol_parts: Optional[tuple] = None  # σ(t,x) = Σ a(t) b(x), for fast blocks
    rank_parts: Optional[tuple] = None  # K(t,x) = Σ a(t) b(x) for finite-rank kernels

    def symbol_block(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """σ(t_i, x_j) as a matrix, using the separable form when known."""
        if self.symbol_parts is not None:
            return sum(np.multiply.outer(a(t), b(x)) for a, b in self.symbol_parts)
        return self.symbol(t[:, None], x[None, :])

    def block(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """K(t_i, x_j) for t_i != x_j as a matrix."""
        if self.symbol is not None:
            return self.symbol_block(t, x) / np.subtract.outer(t, x)
        if self.rank_parts is not None:
            return sum(np.multiply.outer(a(t), b(x)) for a, b in self.rank_parts)
        return self.func(t[:, None], x[None, :])

    def __call__(self, t, x) -> np.ndarray:
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return self.func(t, x)

    def extended(self, t, x) -> np.ndarray:
        """Kernel values with the diagonal filled by ``diag`` (bounded kernels)."""
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        on = t == x
        if not on.any():
            return self.func(t, x)
        if self.diag is None:
            raise ValueError(f"kernel {self.name} has no diagonal extension")
        out = np.empty(t.shape)
        out[~on] = self.func(t[~on], x[~on])
        out[on] = self.diag(x[on])
        return out

    def spec(self) -> dict:
        """Identity of the kernel for cache keys and reports."""
        return {"name": self.name, "params": {k: self.params[k] for k in sorted(self.params)},
                "max_spacing": self.max_spacing}


def _gauss(x):
    return np.exp(-x * x)


def _gauss_diff(t, x):
    # e^{-t^2} - e^{-x^2}, using expm1 when the two are close
    prod = (t - x) * (t + x)
    near = np.abs(prod) < 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        close = np.exp(-x * x) * np.expm1(-np.where(near, prod, 0.0))
    return np.where(near, close, np.exp(-t * t) - np.exp(-x * x))


def finite_rank_kernel(name: str, parts) -> CZKernel:
    """K(t, x) = Σ a(t) b(x) over the given (a, b) pairs; bounded and compact."""
    parts = tuple(parts)
    func = lambda t, x: sum(a(t) * b(x) for a, b in parts)
    return CZKernel(name, func, singularity="bounded", diag=lambda x: func(x, x), rank_parts=parts)


def zero_kernel() -> CZKernel:
    z = lambda t, x: np.zeros(np.broadcast(t, x).shape)
    return CZKernel("zero", z, delta=1.0, constant=0.0, singularity="bounded",
                    diag=lambda x: np.zeros(np.shape(x)), symbol=z, symbol_dt=z, symbol_dx=z,
                    triple=zero_triple())


def hilbert_kernel() -> CZKernel:
    one = lambda t, x: np.ones(np.broadcast(t, x).shape)
    zero = lambda t, x: np.zeros(np.broadcast(t, x).shape)
    ones = lambda v: np.ones(np.shape(v))
    return CZKernel("hilbert", lambda t, x: 1.0 / (t - x), delta=1.0, singularity="pv_odd",
                    symbol=one, symbol_dt=zero, symbol_dx=zero, symbol_parts=((ones, ones),))


def commutator_gauss_kernel() -> CZKernel:
    """(b(t) - b(x))/(t - x) with b = exp(-x^2)."""

    def func(t, x):
        d = t - x
        with np.errstate(invalid="ignore", divide="ignore"):
            return _gauss_diff(t, x) / d

    return CZKernel("commutator_gauss", func, delta=1.0, singularity="bounded",
                    diag=lambda x: -2.0 * x * _gauss(x),
                    symbol=_gauss_diff,
                    symbol_dt=lambda t, x: -2.0 * t * _gauss(t) + 0.0 * x,
                    symbol_dx=lambda t, x: 2.0 * x * _gauss(x) + 0.0 * t,
                    params={"b": "exp(-x^2)"}, max_spacing=0.125,
                    symbol_parts=((_gauss, lambda v: np.ones(np.shape(v))),
                                  (lambda v: -np.ones(np.shape(v)), _gauss)))


def damped_hilbert_kernel(eta_radius: float = 4.0, theta_radius: float = 2.0) -> CZKernel:
    """η(t+x) θ(t-x)/(t-x) with η = Φ(·/eta_radius), θ = Φ(·/theta_radius)."""
    er, tr = float(eta_radius), float(theta_radius)

    def eta(s, n=0):
        return PLATEAU(s / er, n) / er ** n

    def theta(d, n=0):
        return PLATEAU(d / tr, n) / tr ** n

    sym = lambda t, x: eta(t + x) * theta(t - x)
    return CZKernel(
        "damped_hilbert", lambda t, x: sym(t, x) / (t - x), delta=1.0, singularity="pv_odd",
        symbol=sym,
        symbol_dt=lambda t, x: eta(t + x, 1) * theta(t - x) + eta(t + x) * theta(t - x, 1),
        symbol_dx=lambda t, x: eta(t + x, 1) * theta(t - x) - eta(t + x) * theta(t - x, 1),
        params={"eta_radius": er, "theta_radius": tr}, max_spacing=0.125,
    )


BUILTIN = {
    "zero": zero_kernel,
    "hilbert": hilbert_kernel,
    "commutator_gauss": commutator_gauss_kernel,
    "damped_hilbert": damped_hilbert_kernel,
}


def builtin_kernel(name: str, **params) -> CZKernel:
    """A named kernel; ``paraproduct`` takes ``b`` (a coefficient map) and an optional ``basis``."""
    if name == "paraproduct":
        from .paraproduct import Paraproduct, as_kernel
        from .wavelets import WaveletBasis

        return as_kernel(Paraproduct(params["b"], params.get("basis", WaveletBasis())))
    if name not in BUILTIN:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(BUILTIN) + ['paraproduct']}")
    return BUILTIN[name](**params)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SampleSpec:
    """Low-discrepancy sample of admissible smoothness tuples (t, x, t', x').

    |t-x| and |t+x| are log-uniform in their ranges; the displacement
    h = |t-t'| + |x-x'| is a log-uniform fraction of |t-x| in ``h_frac``.
    """

    n: int = 10_000
    seed: int = 0
    r_range: tuple[float, float] = (2.0 ** -6, 2.0 ** 10)
    s_range: tuple[float, float] = (2.0 ** -6, 2.0 ** 10)
    h_frac: tuple[float, float] = (1e-4, 0.49)

    def draw(self):
        u = qmc.Halton(d=6, scramble=True, seed=self.seed).random(self.n)

        def logu(v, lo, hi):
            return np.exp(np.log(lo) + v * (np.log(hi) - np.log(lo)))

        r = logu(u[:, 0], *self.r_range)
        s = logu(u[:, 1], *self.s_range) * np.where(u[:, 2] < 0.5, -1.0, 1.0)
        orient = np.where((u[:, 2] * 2) % 1.0 < 0.5, -1.0, 1.0)
        t = 0.5 * (s + orient * r)
        x = 0.5 * (s - orient * r)
        h = logu(u[:, 3], *self.h_frac) * r
        share = u[:, 4]
        sign_t = np.where(u[:, 5] < 0.5, -1.0, 1.0)
        sign_x = np.where((u[:, 5] * 2) % 1.0 < 0.5, -1.0, 1.0)
        tp = t + sign_t * share * h
        xp = x + sign_x * (1.0 - share) * h
        return t, x, tp, xp


def smoothness_ratio(K: CZKernel, t, x, tp, xp, delta: Optional[float] = None) -> np.ndarray:
    """|K(t,x) - K(t',x')| |t-x|^{1+δ} / h^δ with h = |t-t'| + |x-x'| and 2h < |t-x|."""
    delta = K.delta if delta is None else delta
    t, x, tp, xp = (np.asarray(a, float) for a in (t, x, tp, xp))
    h = np.abs(t - tp) + np.abs(x - xp)
    r = np.abs(t - x)
    if np.any(~(2 * h < r)) or np.any(h <= 0):
        raise ValueError("smoothness tuples need 0 < 2(|t-t'|+|x-x'|) < |t-x|")
    return np.abs(K(t, x) - K(tp, xp)) * r ** (1 + delta) / h ** delta


def _triple_factor(triple: AdmissibleTriple, t, x, tp, xp) -> np.ndarray:
    r = np.abs(t - x)
    if triple.form == "regularized":
        h = np.abs(t - tp) + np.abs(x - xp)
        return triple.L(r) * triple.S(h) * triple.D(1.0 + np.abs(t + x) / (1.0 + r))
    return triple.L(r) * triple.S(r) * triple.D(np.abs(t + x))


@dataclass
class KernelDiagnostics:
    kernel: str
    triple: str
    form: str
    delta: float
    n_samples: int
    fitted_constant: float
    declared_constant: float
    slack: float
    violations: list = field(default_factory=list)
    envelopes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel, "triple": self.triple, "form": self.form, "delta": self.delta,
            "n_samples": self.n_samples, "fitted_constant": self.fitted_constant,
            "declared_constant": self.declared_constant, "slack": self.slack,
            "n_violations": len(self.violations), "violations": self.violations[:20],
            "envelopes": self.envelopes,
        }


def verify_compact_czk(K: CZKernel, triple: Optional[AdmissibleTriple] = None, C: Optional[float] = None,
                       sample: SampleSpec = SampleSpec(), slack: float = 1.05) -> KernelDiagnostics:
    """Check the smoothness ratio against C · (triple factor) on a sample.

    A violation is a tuple where the ratio exceeds ``slack · C`` times the
    triple factor.  The fitted constant is the largest ratio/factor seen.
    """
    triple = triple if triple is not None else K.triple
    if triple is None:
        raise ValueError(f"kernel {K.name} has no triple; pass one or fit one")
    delta = triple.delta if triple.delta is not None else K.delta
    t, x, tp, xp = sample.draw()
    ratio = smoothness_ratio(K, t, x, tp, xp, delta)
    factor = _triple_factor(triple, t, x, tp, xp)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(ratio == 0, 0.0, ratio / factor)
    fitted = float(np.max(q)) if q.size else 0.0
    C = fitted if C is None else float(C)
    bad = np.flatnonzero(q > slack * C)
    violations = [[float(t[i]), float(x[i]), float(tp[i]), float(xp[i]), float(q[i])] for i in bad]
    xs = GRID[::4]
    envelopes = {name: [[float(a), float(b)] for a, b in zip(xs, prof(xs))]
                 for name, prof in (("L", triple.L), ("S", triple.S), ("D", triple.D))}
    return KernelDiagnostics(K.name, triple.name, triple.form, float(delta), sample.n, fitted, C, slack, violations,
                             envelopes)


def fit_admissible(K: CZKernel, sample: SampleSpec = SampleSpec(), delta_prime: Optional[float] = None,
                   form: str = "regularized") -> AdmissibleTriple:
    """Empirical monotone triple dominating the sampled smoothness ratios with C = 1.

    ``regularized`` uses coordinates (|t-x|, h, 1 + |t+x|/(1+|t-x|)) with
    L, D nonincreasing and S nondecreasing; ``standard`` uses
    (|t-x|, |t-x|, |t+x|).  The default δ' is δ - 0.05 for the regularized
    form and δ for the standard one.
    """
    if form not in ("regularized", "standard"):
        raise ValueError(f"unknown form {form!r}")
    if delta_prime is None:
        delta_prime = K.delta - 0.05 if form == "regularized" else K.delta
    if not 0 < delta_prime <= K.delta:
        raise ValueError("δ' must lie in (0, δ]")
    t, x, tp, xp = sample.draw()
    ratio = smoothness_ratio(K, t, x, tp, xp, delta_prime)
    r = np.abs(t - x)
    if form == "regularized":
        h = np.abs(t - tp) + np.abs(x - xp)
        coords = (r, h, 1.0 + np.abs(t + x) / (1.0 + r))
    else:
        coords = (r, r, np.maximum(np.abs(t + x), 1e-300))
    return envelope_from_samples(coords, ratio, ("dec", "inc", "dec"), name=f"fit({K.name},{form})",
                                 form=form, delta=delta_prime)


def with_triple(K: CZKernel, triple: AdmissibleTriple, constant: float = 1.0) -> CZKernel:
    return replace(K, triple=triple, constant=constant)


# ---------------------------------------------------------------------------
# pointwise decay from smoothness


@dataclass
class EnvelopeCertificate:
    t: float
    x: float
    lhs: float
    envelope: float
    terms: int

    @property
    def margin(self) -> float:
        """envelope / lhs; infinite when the kernel vanishes at the point."""
        return math.inf if self.lhs == 0 else self.envelope / self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.envelope


def decay_envelope(K: CZKernel, t: float, x: float, eps: float = 0.1,
                   triple: Optional[AdmissibleTriple] = None, C: Optional[float] = None,
                   tol: float = 1e-14) -> EnvelopeCertificate:
    """Certify |K(t,x)| |t-x| <= C Σ_k (4/3)^{-k} F(t_k, x_k).

    The points move apart symmetrically: each step pushes t and x away from
    each other by (1-ε)/4 of their distance, so |t_k - x_k| grows by
    (3-ε)/2 while t_k + x_k stays fixed.  F = L(|t-x|) S(|t-x|) D(|t+x|).
    """
    if not 0 < eps < 1.0 / 3.0:
        raise ValueError("ε must lie in (0, 1/3)")
    triple = triple if triple is not None else K.triple
    if triple is None:
        raise ValueError(f"kernel {K.name} has no triple")
    C = (K.constant if K.constant is not None else 1.0) if C is None else C
    if t == x:
        raise ValueError("t and x must differ")
    lhs = float(abs(K(t, x)) * abs(t - x))
    direction = 1.0 if x > t else -1.0
    ks, ts, xs = [], [], []
    tk, xk = float(t), float(x)
    k = 0
    while True:
        ks.append(k)
        ts.append(tk)
        xs.append(xk)
        # terms past k sum to at most 4 (3/4)^k times the largest F
        if 4.0 * 0.75 ** k < tol:
            break
        step = (1.0 - eps) / 4.0 * abs(tk - xk)
        tk, xk = tk - direction * step, xk + direction * step
        k += 1
    ts, xs, ks = np.array(ts), np.array(xs), np.array(ks)
    r, s = np.abs(ts - xs), np.abs(ts + xs)
    F = triple.L(r) * triple.S(r) * triple.D(s)
    env = float(C * np.sum((4.0 / 3.0) ** -ks * F))
    return EnvelopeCertificate(float(t), float(x), lhs, env, len(ks))


def certificate_points(n: int = 100, seed: int = 0, r_range: tuple[float, float] = (0.1, 10.0),
                       s_max: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """Scrambled Halton points (t, x) with |t-x| log-uniform in ``r_range`` and |t+x| <= s_max."""
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    r = np.exp(np.log(r_range[0]) + u[:, 0] * (np.log(r_range[1]) - np.log(r_range[0])))
    s = s_max * (2.0 * u[:, 1] - 1.0)
    orient = np.where(u[:, 2] < 0.5, -1.0, 1.0)
    return 0.5 * (s + orient * r), 0.5 * (s - orient * r)


def regularity_profile(K: CZKernel, t: float, x: float, delta_prime: float, n: int = 64) -> float:
    """sup over t' of |t-x|^{1+δ'} |K(t,x) - K(t',x)| / |t-t'|^{δ'} with 2|t-t'| < |t-x|."""
    r = abs(t - x)
    mags = r * 0.5 * np.logspace(-6, 0, n, endpoint=False) * (1 - 1e-9)
    tp = np.concatenate([t - mags, t + mags])
    d = np.concatenate([mags, mags])
    vals = np.abs(K(t, x) - K(tp, np.full_like(tp, x))) * r ** (1 + delta_prime) / d ** delta_prime
    return float(vals.max())
