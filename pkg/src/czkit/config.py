"""Run configuration: a sectioned key = value file with a fixed schema.

Grammar (``configparser`` INI dialect, ``#`` comments)::

    [kernel]       name, params, triple, constant
    [symbol]       b
    [window]       M, R, j_min, j_max
    [quadrature]   near_level, far_level, near_factor
    [basis]        order, quad_level, tau_orth
    [run]          threads, cache_dir, out
    [verify]       samples, points, seed, slack
    [compactness]  M_values, eps, N, theta, weak_triple, p
    [t1]           k_values, center, length, atom_seed, a
    [cmo]          M_values

``params`` is a comma separated ``key=value`` list; list-valued keys are
comma separated integers or ``lo..hi`` ranges.  Unknown sections and keys
are rejected.  ``normalized`` renders a config to canonical text, and
parsing that text gives back an identical config.
"""

from __future__ import annotations

import configparser
import dataclasses
import inspect
import math
from dataclasses import dataclass, field
from typing import Optional

from .admissible import parse_triple
from .dyadic import LagomWindow
from .kernels import BUILTIN


class ConfigError(ValueError):
    pass


KERNEL_NAMES = sorted(BUILTIN) + ["paraproduct"]
SYMBOLS = ("zero", "plateau_cos", "gaussian", "gauss_cos", "wavelet")


@dataclass(frozen=True)
class KernelSection:
    name: str = "commutator_gauss"
    params: tuple = ()  # sorted (key, value) pairs
    triple: str = "fit:standard"
    constant: float = 1.0


@dataclass(frozen=True)
class SymbolSection:
    b: str = "plateau_cos"


@dataclass(frozen=True)
class WindowSection:
    M: int = 4
    R: float = 8.0
    j_min: int = -3
    j_max: int = 3

    def window(self) -> LagomWindow:
        return LagomWindow(self.M, self.R, self.j_min, self.j_max)


@dataclass(frozen=True)
class QuadratureSection:
    near_level: int = 4
    far_level: int = 3
    near_factor: float = 1.0


@dataclass(frozen=True)
class BasisSection:
    order: int = 6
    quad_level: int = 8
    tau_orth: float = 1e-6


@dataclass(frozen=True)
class RunSection:
    threads: int = 1
    cache_dir: str = ""
    out: str = ""


@dataclass(frozen=True)
class VerifySection:
    samples: int = 10000
    points: int = 100
    seed: int = 0
    slack: float = 1.05


@dataclass(frozen=True)
class CompactnessSection:
    M_values: tuple = (1, 2, 3, 4)
    eps: float = 1e-3
    N: int = 6
    theta: float = 0.1
    weak_triple: str = "power:0.5"
    p: float = 2.0


@dataclass(frozen=True)
class T1Section:
    k_values: tuple = tuple(range(2, 10))
    center: float = 0.25
    length: float = 1.0
    atom_seed: int = 2
    a: Optional[float] = None


@dataclass(frozen=True)
class CMOSection:
    M_values: tuple = (1, 2, 3, 4)


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelSection = field(default_factory=KernelSection)
    symbol: SymbolSection = field(default_factory=SymbolSection)
    window: WindowSection = field(default_factory=WindowSection)
    quadrature: QuadratureSection = field(default_factory=QuadratureSection)
    basis: BasisSection = field(default_factory=BasisSection)
    run: RunSection = field(default_factory=RunSection)
    verify: VerifySection = field(default_factory=VerifySection)
    compactness: CompactnessSection = field(default_factory=CompactnessSection)
    t1: T1Section = field(default_factory=T1Section)
    cmo: CMOSection = field(default_factory=CMOSection)

    def kernel_params(self) -> dict:
        return dict(self.kernel.params)

    def symbol_spec(self) -> str:
        """The paraproduct symbol; a ``b`` kernel parameter takes precedence."""
        return str(self.kernel_params().get("b", self.symbol.b))

    def as_dict(self) -> dict:
        return {f.name: _section_dict(getattr(self, f.name)) for f in dataclasses.fields(self)}


# ---------------------------------------------------------------------------
# value codecs


def _parse_int_list(text: str) -> tuple:
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError("empty integer list")
    return tuple(out)


def _parse_params(text: str) -> tuple:
    pairs = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, eq, value = part.partition("=")
        if not eq or not key.strip():
            raise ConfigError(f"parameter {part!r} is not key=value")
        value = value.strip()
        try:
            parsed = float(value)
        except ValueError:
            parsed = value
        pairs[key.strip()] = parsed
    return tuple(sorted(pairs.items()))


def _render_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ",".join(f"{k}={_render_value(x)}" for k, x in v)
        return ",".join(str(x) for x in v)
    return str(v)


def _section_dict(section) -> dict:
    return {f.name: getattr(section, f.name) for f in dataclasses.fields(section)}


def _coerce(section_cls, name: str, raw: str, default):
    try:
        if name == "params":
            return _parse_params(raw)
        if name in ("M_values", "k_values"):
            return _parse_int_list(raw)
        if name == "a":
            return None if raw.strip() == "" else float(raw)
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {section_cls.__name__}.{name}: {raw!r}") from exc


# ---------------------------------------------------------------------------
# parsing and rendering


def _validate(cfg: RunConfig) -> RunConfig:
    k = cfg.kernel
    if k.name not in KERNEL_NAMES:
        raise ConfigError(f"unknown kernel {k.name!r}; choose from {KERNEL_NAMES}")
    if k.triple != "fit:standard" and k.triple != "fit:regularized" and k.triple != "declared":
        try:
            parse_triple(k.triple)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if not math.isfinite(k.constant) or k.constant < 0:
        raise ConfigError("kernel constant must be finite and nonnegative")
    params = cfg.kernel_params()
    if k.name == "paraproduct":
        allowed = {"b"}
    else:
        allowed = set(inspect.signature(BUILTIN[k.name]).parameters)
    extra = set(params) - allowed
    if extra:
        raise ConfigError(f"kernel {k.name!r} has no parameters {sorted(extra)}")
    if k.name != "paraproduct" and any(not isinstance(v, float) for v in params.values()):
        raise ConfigError("kernel parameters must be numbers")
    b = cfg.symbol_spec()
    head = b.split(":", 1)[0]
    if head not in SYMBOLS:
        raise ConfigError(f"unknown symbol {b!r}; choose from {list(SYMBOLS)}")
    if head == "wavelet":
        parts = b.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError("wavelet symbol is wavelet:j:k[:amplitude]")
        try:
            int(parts[1]), int(parts[2])
            if len(parts) == 4:
                float(parts[3])
        except ValueError as exc:
            raise ConfigError(f"bad wavelet symbol {b!r}") from exc
    w = cfg.window
    if w.M < 1 or w.R <= 0 or w.j_min > w.j_max:
        raise ConfigError("window needs M >= 1, R > 0 and j_min <= j_max")
    if cfg.run.threads < 1:
        raise ConfigError("threads must be at least 1")
    try:
        parse_triple(cfg.compactness.weak_triple)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0 < cfg.compactness.theta < 1:
        raise ConfigError("theta must lie in (0, 1)")
    if cfg.compactness.p <= 1:
        raise ConfigError("p must exceed 1")
    if cfg.t1.length <= 0:
        raise ConfigError("t1 length must be positive")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse config text, rejecting unknown sections and keys."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (M, N, R)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    base = RunConfig()
    sections = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    updated = {}
    for sec in parser.sections():
        if sec not in sections:
            raise ConfigError(f"unknown section [{sec}]")
        default = sections[sec]
        known = _section_dict(default)
        values = {}
        for key, raw in parser.items(sec):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            values[key] = _coerce(type(default), key, raw, known[key])
        updated[sec] = dataclasses.replace(default, **values)
    return _validate(dataclasses.replace(base, **updated))


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return _validate(RunConfig())
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def normalized(cfg: RunConfig) -> str:
    """Canonical text for a config: every section and key, in schema order."""
    lines = []
    for name, section in cfg.as_dict().items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_render_value(v)}" for k, v in section.items())
        lines.append("")
    return "\n".join(lines)


def with_overrides(cfg: RunConfig, kernel: Optional[str] = None, window: Optional[str] = None,
                   cache_dir: Optional[str] = None, threads: Optional[int] = None,
                   out: Optional[str] = None) -> RunConfig:
    """Apply command-line overrides: ``--kernel NAME[:k=v,...]`` and ``--window M,R,jmin,jmax``."""
    changes = {}
    if kernel is not None:
        name, _, params = kernel.partition(":")
        changes["kernel"] = dataclasses.replace(cfg.kernel, name=name, params=_parse_params(params))
    if window is not None:
        parts = window.split(",")
        if len(parts) != 4:
            raise ConfigError("--window expects M,R,jmin,jmax")
        try:
            changes["window"] = WindowSection(int(parts[0]), float(parts[1]), int(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise ConfigError(f"bad --window {window!r}") from exc
    run = cfg.run
    if cache_dir is not None:
        run = dataclasses.replace(run, cache_dir=cache_dir)
    if threads is not None:
        run = dataclasses.replace(run, threads=threads)
    if out is not None:
        run = dataclasses.replace(run, out=out)
    changes["run"] = run
    return _validate(dataclasses.replace(cfg, **changes))
