"""Command-line front end.

Subcommands ``kernel-verify``, ``compactness``, ``paraproduct``, ``t1`` and
``cmo`` read a run config (defaults apply without one), write a JSON report
and exit with 0 (pass), 1 (property violation), 2 (config error) or
3 (numeric error).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from typing import Callable, Optional

import numpy as np

from .admissible import FBound, parse_triple, power_triple
from .cache import CacheError
from .config import ConfigError, RunConfig, load_config, normalized, with_overrides
from .dyadic import Interval, WindowTooLarge, is_lagom, window_of
from .kernels import (SampleSpec, builtin_kernel, certificate_points, decay_envelope, fit_admissible,
                      verify_compact_czk)
from .operators import (BoundParameters, ConvergenceError, QuadratureSettings, assemble,
                        necessity_bound_check, op_norm, offdiagonal_bound_check, tail_norm,
                        weak_compactness_scan, weak_scan_from_residuals)
from .paraproduct import (Paraproduct, adjoint_one, as_kernel, bump_pair_routes, disjoint_bump_pairs,
                          interior_intervals, kernel_smoothness_check, paraproduct_compactness, paraproduct_matrix,
                          reproduction_error, symbol_from_spec, weak_residuals)
from .report import write_report
from .spaces import bmo_wavelet_norm, cmo_modulus, make_atom, t1_limit, t1_slope, t1_table
from .wavelets import WaveletBasis, gram_deviation

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# tolerances for the paraproduct identities
REPRODUCTION_TOL = 1e-6
ADJOINT_TOL = 1e-8
CONSISTENCY_TOL = 1e-6
CONSISTENCY_PAIRS = 64
# sample box for the T(1) triple fit; the commutator needs scales far beyond the atom
T1_SAMPLE = SampleSpec(r_range=(2.0 ** -6, 2.0 ** 14), s_range=(2.0 ** -6, 2.0 ** 14))


class Outcome:
    """Report body plus the list of property violations."""

    def __init__(self, command: str, cfg: RunConfig):
        # output paths and threads do not affect results and stay out of the report body
        body = {k: v for k, v in cfg.as_dict().items() if k != "run"}
        self.report = {"command": command, "config": body}
        self.violations: list[str] = []

    def check(self, ok: bool, message: str) -> None:
        if not ok:
            self.violations.append(message)

    @property
    def code(self) -> int:
        return EXIT_VIOLATION if self.violations else EXIT_OK


def _basis(cfg: RunConfig) -> WaveletBasis:
    return WaveletBasis(order=cfg.basis.order, quad_level=cfg.basis.quad_level)


def _quad(cfg: RunConfig) -> QuadratureSettings:
    q = cfg.quadrature
    return QuadratureSettings(near_level=q.near_level, far_level=q.far_level, near_factor=q.near_factor)


def _cache_dir(cfg: RunConfig) -> Optional[str]:
    return cfg.run.cache_dir or os.environ.get("CZKIT_CACHE_DIR") or None


def _builtin(cfg: RunConfig):
    if cfg.kernel.name == "paraproduct":
        raise ConfigError("this command needs a built-in kernel, not the paraproduct")
    return builtin_kernel(cfg.kernel.name, **cfg.kernel_params())


def _paraproduct(cfg: RunConfig, basis: WaveletBasis, intervals) -> Paraproduct:
    return Paraproduct(symbol_from_spec(basis, cfg.symbol_spec(), intervals), basis)


def _triple(cfg: RunConfig, K, sample: SampleSpec):
    spec = cfg.kernel.triple
    if spec.startswith("fit:"):
        return fit_admissible(K, sample, form=spec.split(":", 1)[1])
    if spec == "declared":
        if K.triple is None:
            raise ConfigError(f"kernel {K.name} declares no triple")
        return K.triple
    return parse_triple(spec)


def _basis_check(out: Outcome, cfg: RunConfig, basis: WaveletBasis, intervals) -> None:
    dev = gram_deviation(basis, intervals)
    out.report["gram_deviation"] = dev
    out.check(dev <= cfg.basis.tau_orth, f"Gram deviation {dev:.3e} exceeds tau_orth")


def _nonincreasing(values, rtol: float = 1e-9) -> bool:
    return all(b <= a * (1 + rtol) + 1e-15 for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# commands


def cmd_kernel_verify(cfg: RunConfig) -> Outcome:
    """Smoothness ratios against the triple on a held-out sample, plus pointwise decay certificates."""
    out = Outcome("kernel-verify", cfg)
    if cfg.kernel.name == "paraproduct":
        basis = _basis(cfg)
        K = as_kernel(_paraproduct(cfg, basis, window_of(cfg.window.window())))
    else:
        K = _builtin(cfg)
    v = cfg.verify
    sample = SampleSpec(n=v.samples, seed=v.seed)
    triple = _triple(cfg, K, sample)
    C = cfg.kernel.constant
    diag = verify_compact_czk(K, triple, C, sample, slack=v.slack)
    # a second sample shows how far a fitted triple generalizes; informational only
    holdout = verify_compact_czk(K, triple, C, SampleSpec(n=v.samples, seed=v.seed + 1), slack=v.slack)
    out.report["kernel"] = K.spec()
    out.report["diagnostics"] = diag.to_dict()
    out.report["holdout"] = holdout.to_dict()
    out.check(diag.ok, f"{len(diag.violations)} smoothness violations at C = {C}")
    certificates = []
    if triple.form == "standard":
        for t, x in zip(*certificate_points(v.points, v.seed)):
            cert = decay_envelope(K, float(t), float(x), triple=triple, C=C)
            certificates.append({"t": cert.t, "x": cert.x, "lhs": cert.lhs, "envelope": cert.envelope,
                                 "terms": cert.terms, "holds": cert.holds})
        failed = sum(not c["holds"] for c in certificates)
        out.check(failed == 0, f"{failed} decay certificates fail")
    out.report["certificates"] = certificates
    out.report["violations"] = out.violations
    return out


def cmd_compactness(cfg: RunConfig, cache_dir: Optional[str] = None) -> Outcome:
    """Tail norms, weak compactness fit, off-diagonal and diagonal bound constants on the window."""
    out = Outcome("compactness", cfg)
    basis = _basis(cfg)
    window = cfg.window.window()
    intervals = window_of(window)
    c = cfg.compactness
    _basis_check(out, cfg, basis, intervals)
    weak = parse_triple(c.weak_triple)
    if cfg.kernel.name == "paraproduct":
        P = _paraproduct(cfg, basis, intervals)
        A = paraproduct_matrix(P, intervals)
        K = as_kernel(P)
        scan = weak_scan_from_residuals(intervals, weak_residuals(P, intervals), c.eps, FBound(power_triple(1.0), weak))
    else:
        K = _builtin(cfg)
        A = assemble(K, basis, window, cache_dir=cache_dir, quad=_quad(cfg), threads=cfg.run.threads)
        scan = weak_compactness_scan(K, basis, window, c.eps, FBound(power_triple(1.0), weak), quad=_quad(cfg))
    tails = [tail_norm(A, M) for M in c.M_values]
    out.report["kernel"] = K.spec()
    out.report["intervals"] = intervals
    out.report["op_norm"] = op_norm(A)
    out.report["tail_norms"] = [{"M": M, "tail_norm": t} for M, t in zip(c.M_values, tails)]
    out.report["weak_fit"] = {"M": scan.M, "constant": scan.constant, "eps": scan.eps,
                              "residuals": scan.residuals}
    kernel_triple = fit_admissible(K, form="regularized")
    fb = FBound(kernel_triple, weak)
    params = BoundParameters(N=c.N, theta=c.theta)
    constant, pair = offdiagonal_bound_check(A, params, fb, cfg.window.M, c.eps)
    out.report["offdiagonal_constant"] = {"M": cfg.window.M, "constant": constant, "attained_at": list(pair)}
    necessity = [necessity_bound_check(A, c.p, M, c.N) for M in c.M_values]
    out.report["necessity_constant"] = necessity
    out.check(_nonincreasing(tails), "tail norms increase with M")
    out.check(all(n["holds"] for n in necessity), "diagonal bound fails")
    out.report["violations"] = out.violations
    return out


def cmd_paraproduct(cfg: RunConfig) -> Outcome:
    """Paraproduct identities and the tail norm against the CMO modulus of b."""
    out = Outcome("paraproduct", cfg)
    basis = _basis(cfg)
    intervals = window_of(cfg.window.window())
    _basis_check(out, cfg, basis, intervals)
    P = _paraproduct(cfg, basis, intervals)
    interior = interior_intervals(P, intervals, cfg.window.R)
    rep = reproduction_error(P, interior)
    tests = [make_atom(Interval(0.25, 1.0), 0), make_atom(Interval(-1.5, 2.0), 1),
             make_atom(Interval(2.0, 0.5), 2)]
    adj = adjoint_one(P, tests)
    pairs = disjoint_bump_pairs(intervals, CONSISTENCY_PAIRS)
    routes = [bump_pair_routes(P, I, J) for I, J in pairs]
    gap = max((abs(a - b) for a, b in routes), default=0.0)
    comp = paraproduct_compactness(P, intervals, cfg.compactness.M_values)
    out.report["b"] = P.b.as_records()
    out.report["interior_count"] = len(interior)
    out.report["reproduction_error"] = rep
    out.report["adjoint_one"] = adj
    out.report["consistency"] = {"pairs": [list(p) for p in pairs], "routes": routes, "max_gap": gap}
    out.report["compactness"] = comp
    out.report["kernel_smoothness"] = [kernel_smoothness_check(P, M) for M in cfg.compactness.M_values]
    out.check(rep <= REPRODUCTION_TOL, f"T_b(1) reproduction error {rep:.3e}")
    out.check(adj <= ADJOINT_TOL, f"T_b*(1) pairing {adj:.3e}")
    out.check(gap <= CONSISTENCY_TOL, f"kernel and coefficient routes differ by {gap:.3e}")
    out.check(comp["holds"], "tail norms exceed the fitted multiple of the CMO modulus")
    out.report["violations"] = out.violations
    return out


def cmd_t1(cfg: RunConfig) -> Outcome:
    """Convergence table (k, value, error bound) of the truncated T(1) pairing against an atom."""
    out = Outcome("t1", cfg)
    K = _builtin(cfg)
    t = cfg.t1
    triple = _triple(cfg, K, T1_SAMPLE)
    I = Interval(t.center, t.length)
    f = make_atom(I, t.atom_seed)
    rows = t1_table(K, f, I, t.k_values, t.a, triple, cfg.kernel.constant)
    diffs = [abs(b.value - a.value) for a, b in zip(rows, rows[1:])]
    out.report["kernel"] = K.spec()
    out.report["table"] = rows
    out.report["differences"] = diffs
    out.report["limit"] = t1_limit(rows) if len(rows) > 1 else rows[-1].value
    finite = [r for r in rows if 0 < r.error_bound < math.inf]
    out.report["slope"] = t1_slope(finite) if len(finite) > 1 else None
    for a, d in zip(rows, diffs):
        out.check(d <= a.error_bound, f"difference at k = {a.k} exceeds its bound")
    out.report["violations"] = out.violations
    return out


def cmd_cmo(cfg: RunConfig) -> Outcome:
    """BMO norm and CMO moduli of the symbol's wavelet coefficients."""
    out = Outcome("cmo", cfg)
    basis = _basis(cfg)
    intervals = window_of(cfg.window.window())
    b = symbol_from_spec(basis, cfg.symbol_spec(), intervals)
    moduli = [cmo_modulus(b, M) for M in cfg.cmo.M_values]
    out.report["bmo_norm"] = bmo_wavelet_norm(b)
    out.report["moduli"] = [{"M": M, "modulus": m, "lagom_count": sum(is_lagom(I, M) for I in b.keys())}
                            for M, m in zip(cfg.cmo.M_values, moduli)]
    out.check(_nonincreasing(moduli), "CMO modulus increases with M")
    out.report["violations"] = out.violations
    return out


COMMANDS: dict[str, Callable] = {
    "kernel-verify": cmd_kernel_verify,
    "compactness": cmd_compactness,
    "paraproduct": cmd_paraproduct,
    "t1": cmd_t1,
    "cmo": cmd_cmo,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="czkit", description="Compactness diagnostics for singular integrals.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["show-config"]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="run config file")
        p.add_argument("--out", help="report path (default: <command>.json)")
        p.add_argument("--cache-dir", help="matrix cache directory (default: $CZKIT_CACHE_DIR)")
        p.add_argument("--threads", type=int, help="assembly threads")
        p.add_argument("--window", help="override the window as M,R,jmin,jmax")
        p.add_argument("--kernel", help="override the kernel as NAME[:key=value,...]")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = with_overrides(load_config(args.config), kernel=args.kernel, window=args.window,
                             cache_dir=args.cache_dir, threads=args.threads, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "show-config":
        sys.stdout.write(normalized(cfg))
        return EXIT_OK
    out_path = cfg.run.out or f"{args.command}.json"
    cache_dir = _cache_dir(cfg)
    start = time.perf_counter()
    try:
        if args.command == "compactness":
            outcome = cmd_compactness(cfg, cache_dir)
        else:
            outcome = COMMANDS[args.command](cfg)
    except (ConfigError, WindowTooLarge, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, FloatingPointError, CacheError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    meta = {"command": args.command, "exit_code": outcome.code, "seconds": time.perf_counter() - start,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "config_path": args.config,
            "cache_dir": cache_dir, "threads": cfg.run.threads}
    write_report(out_path, outcome.report, meta)
    for v in outcome.violations:
        print(f"violation: {v}", file=sys.stderr)
    print(f"{args.command}: {'pass' if outcome.code == EXIT_OK else 'violations'} -> {out_path}")
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
