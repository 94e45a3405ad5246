import dataclasses
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from czkit import cli
from czkit.config import (CMOSection, ConfigError, KernelSection, RunConfig, SymbolSection, T1Section,
                          WindowSection, load_config, normalized, parse_config, with_overrides)
from czkit.dyadic import DyadicInterval, Interval, is_lagom
from czkit.operators import ConvergenceError
from czkit.report import decode_float, dumps, encode, metadata_path, write_report

SMALL = "2,2,-1,2"


def run(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    body = json.loads(out.read_text()) if out.exists() else None
    return code, body, out


def dec(node):
    return decode_float(node)


# --- config -----------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v != 0)
configs = st.builds(
    RunConfig,
    kernel=st.builds(KernelSection,
                     name=st.sampled_from(["zero", "hilbert", "commutator_gauss"]),
                     triple=st.sampled_from(["fit:standard", "fit:regularized", "power:0.5", "exp", "flat"]),
                     constant=st.floats(0, 1e3)),
    symbol=st.builds(SymbolSection, b=st.sampled_from(["zero", "plateau_cos", "gaussian", "gauss_cos",
                                                       "wavelet:2:3", "wavelet:-1:4:0.25"])),
    window=st.builds(WindowSection, M=st.integers(1, 8), R=st.floats(0.5, 64), j_min=st.integers(-5, 0),
                     j_max=st.integers(0, 6)),
    t1=st.builds(T1Section, k_values=st.lists(st.integers(0, 12), min_size=1, max_size=6).map(tuple),
                 center=finite, length=st.floats(1e-3, 1e3), atom_seed=st.integers(0, 99),
                 a=st.none() | finite),
    cmo=st.builds(CMOSection, M_values=st.lists(st.integers(1, 9), min_size=1, max_size=5).map(tuple)),
)


@settings(max_examples=200)
@given(configs)
def test_normalized_text_round_trips(cfg):
    text = normalized(cfg)
    back = parse_config(text)
    assert back == cfg
    assert normalized(back) == text


def test_damped_hilbert_params_round_trip():
    cfg = parse_config("[kernel]\nname = damped_hilbert\nparams = theta_radius=1.5, eta_radius=3\n")
    assert cfg.kernel_params() == {"eta_radius": 3.0, "theta_radius": 1.5}
    assert parse_config(normalized(cfg)) == cfg


def test_defaults_and_ranges():
    cfg = load_config(None)
    assert cfg == RunConfig()
    assert cfg.window.window().M == 4 and cfg.t1.k_values == tuple(range(2, 10))
    assert parse_config("[t1]\nk_values = 2..4, 7\n").t1.k_values == (2, 3, 4, 7)


@pytest.mark.parametrize("text", [
    "[kernel]\nnmae = zero\n",
    "[kernal]\nname = zero\n",
    "[kernel]\nname = riesz\n",
    "[kernel]\nname = hilbert\nparams = eta_radius=2\n",
    "[kernel]\ntriple = power:x\n",
    "[symbol]\nb = sinc\n",
    "[symbol]\nb = wavelet:1\n",
    "[window]\nM = 0\n",
    "[window]\nj_min = 3\nj_max = 1\n",
    "[window]\nR = many\n",
    "[t1]\nk_values = 5..2\n",
    "[compactness]\ntheta = 1.5\n",
    "[compactness]\np = 1\n",
    "[run]\nthreads = 0\n",
    "not an ini file",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides():
    cfg = with_overrides(RunConfig(), kernel="damped_hilbert:eta_radius=2", window=SMALL, threads=3)
    assert cfg.kernel.name == "damped_hilbert" and cfg.kernel_params() == {"eta_radius": 2.0}
    assert cfg.window == WindowSection(2, 2.0, -1, 2) and cfg.run.threads == 3
    assert with_overrides(RunConfig(), kernel="paraproduct:b=wavelet:1:3").symbol_spec() == "wavelet:1:3"
    for bad in ({"window": "1,2"}, {"window": "a,b,c,d"}, {"kernel": "nope"}):
        with pytest.raises(ConfigError):
            with_overrides(RunConfig(), **bad)


# --- reports ----------------------------------------------------------------


@given(st.floats(allow_nan=True, allow_infinity=True))
def test_float_encoding_exact(v):
    node = encode(v)
    back = decode_float(node)
    if math.isnan(v):
        assert math.isnan(back) and node["dec"] == "nan"
    else:
        assert back == v and math.copysign(1, back) == math.copysign(1, v)
    json.dumps(node, allow_nan=False)


def test_encode_structures():
    @dataclasses.dataclass
    class Row:
        k: int
        value: float

    tree = encode({"I": DyadicInterval(2, -3), "box": Interval(0.5, 2.0), "rows": [Row(1, 0.1)],
                   "arr": np.array([1.5, 2.0]), "flag": np.bool_(True), "n": np.int64(4), "none": None})
    assert tree["I"] == {"j": 2, "k": -3}
    assert decode_float(tree["box"]["length"]) == 2.0
    assert tree["rows"][0]["k"] == 1 and decode_float(tree["rows"][0]["value"]) == 0.1
    assert [decode_float(x) for x in tree["arr"]] == [1.5, 2.0]
    assert tree["flag"] is True and tree["n"] == 4 and tree["none"] is None
    with pytest.raises(TypeError):
        encode({"x": object()})
    assert dumps({"b": 1.0, "a": 2}) == dumps({"a": 2, "b": 1.0})


def test_write_report_sidecar(tmp_path):
    out = tmp_path / "sub" / "r.json"
    write_report(out, {"value": 0.5}, {"seconds": 1.25})
    assert json.loads(out.read_text())["value"]["hex"] == (0.5).hex()
    meta = json.loads(metadata_path(out).read_text())
    assert meta["seconds"] == 1.25 and "version" in meta and "numpy" in meta
    assert sorted(p.name for p in out.parent.iterdir()) == ["r.json", "r.json.meta.json"]


# --- commands ---------------------------------------------------------------


def test_show_config(capsys):
    assert cli.main(["show-config", "--window", SMALL]) == 0
    text = capsys.readouterr().out
    assert parse_config(text).window == WindowSection(2, 2.0, -1, 2)


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[kernel]\nname = nonsense\n")
    assert run(tmp_path, "cmo", "--config", str(bad))[0] == 2
    assert run(tmp_path, "cmo", "--config", str(tmp_path / "missing.ini"))[0] == 2
    assert run(tmp_path, "t1", "--kernel", "paraproduct")[0] == 2
    assert run(tmp_path, "cmo", "--window", "1,2")[0] == 2


def test_numeric_error_exit_3(tmp_path, monkeypatch):
    def fail(cfg):
        raise ConvergenceError("no convergence")

    monkeypatch.setitem(cli.COMMANDS, "cmo", fail)
    code, body, _ = run(tmp_path, "cmo")
    assert code == 3 and body is None


def test_kernel_verify_exit_codes(tmp_path):
    code, body, _ = run(tmp_path, "kernel-verify", "--kernel", "zero")
    assert code == 0 and body["violations"] == []
    code, body, _ = run(tmp_path, "kernel-verify", "--kernel", "commutator_gauss")
    assert code == 0 and body["violations"] == [] and len(body["certificates"]) == 100
    declared = tmp_path / "h.ini"
    declared.write_text("[kernel]\nname = hilbert\ntriple = power:1\n")
    code, body, _ = run(tmp_path, "kernel-verify", "--config", str(declared))
    assert code == 1 and body["violations"]


def test_t1_zero_kernel_table(tmp_path):
    code, body, _ = run(tmp_path, "t1", "--kernel", "zero")
    assert code == 0
    assert [r["k"] for r in body["table"]] == list(range(2, 10))
    assert all(dec(r["value"]) == 0.0 and dec(r["error_bound"]) == 0.0 for r in body["table"])
    assert dec(body["limit"]) == 0.0


def test_paraproduct_zero_symbol(tmp_path):
    cfg = tmp_path / "p.ini"
    cfg.write_text(f"[symbol]\nb = zero\n[window]\nM = 2\nR = 2.0\nj_min = -1\nj_max = 2\n")
    code, body, _ = run(tmp_path, "paraproduct", "--config", str(cfg))
    assert code == 0
    assert dec(body["reproduction_error"]) == 0.0 and dec(body["adjoint_one"]) == 0.0
    assert all(dec(r["tail_norm"]) == 0.0 and dec(r["cmo_modulus"]) == 0.0 for r in body["compactness"]["rows"])
    assert all(dec(v) == 0.0 for pair in body["consistency"]["routes"] for v in pair)


def test_cmo_single_wavelet_step(tmp_path):
    I = DyadicInterval(3, -5)
    threshold = next(M for M in range(1, 10) if is_lagom(I, M))
    assert threshold == 3
    cfg = tmp_path / "c.ini"
    cfg.write_text("[symbol]\nb = wavelet:3:-5\n[cmo]\nM_values = 1..4\n")
    code, body, _ = run(tmp_path, "cmo", "--config", str(cfg))
    assert code == 0
    moduli = [dec(r["modulus"]) for r in body["moduli"]]
    assert moduli == [I.length ** -0.5, I.length ** -0.5, 0.0, 0.0]
    assert dec(body["bmo_norm"]) == I.length ** -0.5


def test_compactness_zero_kernel(tmp_path):
    code, body, _ = run(tmp_path, "compactness", "--kernel", "zero", "--window", SMALL)
    assert code == 0
    assert all(dec(r["tail_norm"]) == 0.0 for r in body["tail_norms"])


def test_compactness_rank_one_paraproduct(tmp_path):
    # a single-coefficient paraproduct is the rank-one operator b ⟨·, φ_J⟩ ψ_J with J in D_2 \ D_1
    J = DyadicInterval(2, 3)
    assert not is_lagom(J, 1) and is_lagom(J, 2)
    code, body, _ = run(tmp_path, "compactness", "--kernel", "paraproduct:b=wavelet:2:3", "--window", SMALL)
    assert code == 0
    tails = {r["M"]: dec(r["tail_norm"]) for r in body["tail_norms"]}
    assert tails[1] == pytest.approx(dec(body["op_norm"]), rel=1e-12) and tails[1] > 0
    assert tails[2] == tails[3] == tails[4] == 0.0


def test_compactness_cache_env(tmp_path, monkeypatch):
    cache = tmp_path / "cache"
    monkeypatch.setenv("CZKIT_CACHE_DIR", str(cache))
    code1, body1, out1 = run(tmp_path, "compactness", "--kernel", "hilbert", "--window", SMALL, name="a.json")
    assert code1 == 0 and any(cache.iterdir())
    code2, body2, out2 = run(tmp_path, "compactness", "--kernel", "hilbert", "--window", SMALL, name="b.json")
    assert out1.read_bytes() == out2.read_bytes()
    assert json.loads(metadata_path(out1).read_text())["cache_dir"] == str(cache)


@pytest.mark.parametrize("command, extra", [
    ("kernel-verify", ["--kernel", "damped_hilbert"]),
    ("t1", []),
    ("cmo", []),
    ("compactness", ["--kernel", "commutator_gauss", "--window", SMALL, "--threads", "2"]),
])
def test_reports_byte_identical(tmp_path, command, extra):
    a = run(tmp_path, command, *extra, name="a.json")
    b = run(tmp_path, command, *extra, name="b.json")
    assert a[0] == b[0] == 0
    assert a[2].read_bytes() == b[2].read_bytes()
    assert "timestamp" not in a[2].read_text() and "seconds" not in a[2].read_text()
    assert "timestamp" in json.loads(metadata_path(a[2]).read_text())


def test_thread_count_does_not_change_report(tmp_path):
    one = run(tmp_path, "compactness", "--kernel", "damped_hilbert", "--window", SMALL, name="one.json")
    four = run(tmp_path, "compactness", "--kernel", "damped_hilbert", "--window", SMALL, "--threads", "4",
               name="four.json")
    assert one[2].read_bytes() == four[2].read_bytes()


def test_console_entry_point(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run([sys.executable, "-m", "czkit.cli", "cmo", "--out", str(out)], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "cmo: pass" in proc.stdout
    assert json.loads(out.read_text())["command"] == "cmo"
