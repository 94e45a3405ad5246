"""Admissible triples (L, S, D) and the F-bounds built from them.

A triple is three nonnegative bounded functions on (0, ∞): L decays at
infinity, S decays at zero and D decays at infinity.  Triples are either
closures (vectorized over numpy arrays) or tables on the geometric grid
``x = 2**(j/4)``, ``j = -80..80``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dyadic import as_interval, ball, rdist

GRID_EXPONENTS = np.arange(-80, 81)
GRID = np.exp2(GRID_EXPONENTS / 4.0)

Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AdmissibleTriple:
    """Three profiles plus bookkeeping.

    ``form`` records how a fitted triple must be read by the smoothness
    checks: ``"standard"`` evaluates L, S at |t-x| and D at |t+x|;
    ``"regularized"`` evaluates L at |t-x|, S at the displacement and D at
    ``1 + |t+x| / (1 + |t-x|)``.  ``delta`` is the Hölder exponent the triple
    was fitted for, if any.
    """

    L: Profile
    S: Profile
    D: Profile
    name: str = "custom"
    bound: float = 1.0
    monotone: bool = False
    form: str = "standard"
    delta: float | None = None

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return self.L(x), self.S(x), self.D(x)


def power_triple(alpha: float) -> AdmissibleTriple:
    """L = (1+x)^-α, S = (1+1/x)^-α, D = (1+x)^-1."""
    if alpha <= 0:
        raise ValueError("power exponent must be positive")
    return AdmissibleTriple(
        L=lambda x: (1.0 + np.asarray(x, float)) ** -alpha,
        S=lambda x: (1.0 + 1.0 / np.asarray(x, float)) ** -alpha,
        D=lambda x: 1.0 / (1.0 + np.asarray(x, float)),
        name=f"power:{alpha:g}", bound=1.0, monotone=True,
    )


def exp_triple() -> AdmissibleTriple:
    """L = e^-x, S = 1 - e^-x, D = e^-x."""
    return AdmissibleTriple(
        L=lambda x: np.exp(-np.asarray(x, float)),
        S=lambda x: -np.expm1(-np.asarray(x, float)),
        D=lambda x: np.exp(-np.asarray(x, float)),
        name="exp", bound=1.0, monotone=True,
    )


def zero_triple() -> AdmissibleTriple:
    z = lambda x: np.zeros_like(np.asarray(x, float))
    return AdmissibleTriple(L=z, S=z, D=z, name="zero", bound=0.0, monotone=True)


def flat_triple() -> AdmissibleTriple:
    """Constant one profiles.  Bounded but not admissible; used for comparisons."""
    one = lambda x: np.ones_like(np.asarray(x, float))
    return AdmissibleTriple(L=one, S=one, D=one, name="flat", bound=1.0, monotone=True)


def parse_triple(spec: str) -> AdmissibleTriple:
    """Build a named triple: ``power:α``, ``exp``, ``zero`` or ``flat``."""
    name, _, arg = spec.partition(":")
    if name == "power":
        return power_triple(float(arg) if arg else 1.0)
    if arg:
        raise ValueError(f"triple {name!r} takes no parameter")
    if name == "exp":
        return exp_triple()
    if name == "zero":
        return zero_triple()
    if name == "flat":
        return flat_triple()
    raise ValueError(f"unknown triple {spec!r}")


def exponent_triple(p: float) -> AdmissibleTriple:
    """Power triple with exponent |1/2 - 1/p| + 1/2."""
    if not 1 < p < np.inf:
        raise ValueError("p must lie in (1, inf)")
    return power_triple(abs(0.5 - 1.0 / p) + 0.5)


# ---------------------------------------------------------------------------
# tabulated triples


def _step_lookup(table: np.ndarray, nonincreasing: bool) -> Profile:
    """Piecewise-constant evaluation that never undershoots a monotone table.

    Nonincreasing profiles use the grid point at or left of x, nondecreasing
    ones the grid point at or right of x.  Outside the grid the end value is
    used.
    """
    table = np.asarray(table, dtype=float).copy()
    logs = GRID_EXPONENTS / 4.0

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            u = np.log2(np.where(x > 0, x, np.finfo(float).tiny))
        if nonincreasing:
            idx = np.searchsorted(logs, u + 1e-12, side="right") - 1
        else:
            idx = np.searchsorted(logs, u - 1e-12, side="left")
        idx = np.clip(idx, 0, len(logs) - 1)
        return table[idx]

    return f


def tabulated_triple(L_tab, S_tab, D_tab, name="tabulated", form="standard", delta=None) -> AdmissibleTriple:
    L_tab, S_tab, D_tab = (np.asarray(a, dtype=float) for a in (L_tab, S_tab, D_tab))
    for a in (L_tab, S_tab, D_tab):
        if a.shape != GRID.shape:
            raise ValueError("tables must live on the standard geometric grid")
    t = AdmissibleTriple(
        L=_step_lookup(L_tab, True), S=_step_lookup(S_tab, False), D=_step_lookup(D_tab, True),
        name=name, bound=float(max(L_tab.max(), S_tab.max(), D_tab.max(), 0.0)),
        monotone=True, form=form, delta=delta,
    )
    object.__setattr__(t, "tables", (L_tab, S_tab, D_tab))
    return t


def regularize_monotone(t: AdmissibleTriple) -> AdmissibleTriple:
    """Running-sup envelopes on the grid.

    L1(x) = sup_{y>=x} L(y), S1(x) = sup_{y<=x} S(y), D1(x) = sup_{y>=x} D(y).
    """
    L, S, D = t.evaluate(GRID)
    L1 = np.maximum.accumulate(L[::-1])[::-1]
    S1 = np.maximum.accumulate(S)
    D1 = np.maximum.accumulate(D[::-1])[::-1]
    return tabulated_triple(L1, S1, D1, name=f"{t.name}|monotone", form=t.form, delta=t.delta)


def dilate_triple(t: AdmissibleTriple, lam: float) -> AdmissibleTriple:
    """Precompose each profile with x -> x/λ."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    return AdmissibleTriple(
        L=lambda x: t.L(np.asarray(x, float) / lam),
        S=lambda x: t.S(np.asarray(x, float) / lam),
        D=lambda x: t.D(np.asarray(x, float) / lam),
        name=f"{t.name}@{lam:g}", bound=t.bound, monotone=t.monotone, form=t.form, delta=t.delta,
    )


def envelope_from_samples(coords: Sequence[np.ndarray], values: np.ndarray, kinds: Sequence[str],
                          name="fitted", form="standard", delta=None) -> AdmissibleTriple:
    """Monotone envelopes whose product dominates ``values`` at every sample.

    ``coords`` gives the L, S and D coordinates of each sample; ``kinds`` says
    whether the profile is nonincreasing ("dec") or nondecreasing ("inc").
    Each profile is the running sup of the cube root of the values, so the
    product of the three profiles at a sample is at least the sample value.
    """
    v = np.cbrt(np.maximum(np.asarray(values, dtype=float), 0.0))
    logs = GRID_EXPONENTS / 4.0
    tables = []
    for c, kind in zip(coords, kinds):
        u = np.log2(np.asarray(c, dtype=float))
        tab = np.zeros(GRID.shape)
        if kind == "dec":
            # grid point g gets sup over samples with coordinate >= g
            idx = np.clip(np.searchsorted(logs, u + 1e-12, side="right") - 1, -1, len(logs) - 1)
            # a sample at coordinate c bounds every grid point <= c
            np.maximum.at(tab, np.maximum(idx, 0), np.where(idx >= 0, v, 0.0))
            below = idx < 0
            if below.any():
                tab[0] = max(tab[0], v[below].max())
            tab = np.maximum.accumulate(tab[::-1])[::-1]
        else:
            idx = np.clip(np.searchsorted(logs, u - 1e-12, side="left"), 0, len(logs))
            over = idx >= len(logs)
            np.maximum.at(tab, np.minimum(idx, len(logs) - 1), np.where(~over, v, 0.0))
            if over.any():
                tab[-1] = max(tab[-1], v[over].max())
            tab = np.maximum.accumulate(tab)
        tables.append(tab)
    return tabulated_triple(*tables, name=name, form=form, delta=delta)


# ---------------------------------------------------------------------------
# F-bounds


@dataclass(frozen=True)
class FBound:
    """A kernel triple paired with a weak-boundedness triple."""

    kernel: AdmissibleTriple
    weak: AdmissibleTriple = field(default_factory=lambda: power_triple(0.5))


def f_k(fb: FBound, I) -> float:
    """L(|I|) S(|I|) D(rdist(I, B_1)) for the kernel triple."""
    iv = as_interval(I)
    t = fb.kernel
    r = rdist(iv, ball(1.0))
    return float(t.L(iv.length) * t.S(iv.length) * t.D(r))


def f_w(fb: FBound, I, M: int) -> float:
    """L_W(2^-M |I|) S_W(2^M |I|) D_W(rdist(I, B_{2^M}) / M)."""
    iv = as_interval(I)
    t = fb.weak
    big = 2.0 ** M
    r = rdist(iv, ball(big))
    return float(t.L(iv.length / big) * t.S(iv.length * big) * t.D(r / M))


def f_joint(fb: FBound, intervals: Sequence, M: int) -> float:
    """(ΣL)(ΣS)(ΣD) over the family for both triples, added together."""
    ivs = [as_interval(I) for I in intervals]
    lengths = np.array([I.length for I in ivs])
    r1 = np.array([rdist(I, ball(1.0)) for I in ivs])
    big = 2.0 ** M
    rM = np.array([rdist(I, ball(big)) for I in ivs])
    k, w = fb.kernel, fb.weak
    kernel_part = k.L(lengths).sum() * k.S(lengths).sum() * k.D(r1).sum()
    weak_part = w.L(lengths / big).sum() * w.S(lengths * big).sum() * w.D(rM / M).sum()
    return float(kernel_part + weak_part)
