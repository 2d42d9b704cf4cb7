"""Configuration parsing and command-line behavior tests.

CLI tests drive main() in-process so exit codes and stdout can be
asserted without spawning interpreters.
"""

import json
import math

import pytest

from qvibe.cli import main
from qvibe.config import (
    Config,
    build_channel,
    build_fringe,
    build_options,
    build_pair,
    build_signal,
    load_config,
    parse_config,
    parse_quantity,
    resolve_operating_delay,
)
from qvibe.core import SPEED_OF_LIGHT, quadrature_delay
from qvibe.errors import ConfigError
from qvibe.simulate import SignalComponent


# ----- quantity parsing -----


def test_parse_quantity_accepts_units():
    assert parse_quantity("10 ms", "time", "t") == 0.01
    assert parse_quantity("100 ps", "time", "t") == 100e-12
    assert parse_quantity("1.55 um", "length", "l") == 1.55e-6
    assert parse_quantity("177 THz", "frequency", "f") == 177e12
    assert abs(parse_quantity("-90 deg", "angle", "a") + math.pi / 2) < 1e-15
    assert parse_quantity("2.5 rad", "angle", "a") == 2.5
    assert parse_quantity("0.13", "bare", "r") == 0.13
    assert parse_quantity("7", "int", "n") == 7
    assert parse_quantity("true", "bool", "b") is True
    assert parse_quantity("No", "bool", "b") is False
    assert parse_quantity("quadrature", "time_or_quadrature", "op") == "quadrature"
    assert parse_quantity("2 fs", "time_or_quadrature", "op") == 2e-15


def test_parse_quantity_components_and_lists():
    comp = parse_quantity("10 Hz | 20 nm | 0.5 rad", "component", "c")
    assert comp == SignalComponent(10.0, 20e-9, 0.5)
    comp2 = parse_quantity("1 kHz|5 nm", "component", "c")
    assert comp2.phase == 0.0
    assert parse_quantity("10000 | 59000", "int_list", "ns") == (10000, 59000)
    assert parse_quantity("0.0|0.87", "bare_list", "vals") == (0.0, 0.87)


def test_parse_quantity_rejections():
    cases = [
        ("10", "time"),  # dimensioned values need a unit
        ("0.5 Hz", "bare"),  # dimensionless values must not have one
        ("2.5", "int"),
        ("10 parsec", "length"),
        ("abc", "frequency"),
        ("", "str"),
        ("maybe", "bool"),
        ("10 Hz | 20 nm | 1 rad | extra", "component"),
    ]
    for text, kind in cases:
        with pytest.raises(ConfigError):
            parse_quantity(text, kind, "x")


# ----- INI / JSON parsing -----


INI_TEXT = """
# tone scenario
[pair]
detuning = 177 THz
visibility = 0.9

[signal]
kind = pure_tone
frequency = 10 Hz
amplitude_pp = 20 nm

[channel]
rate_c = 190 kHz
rate_a = 190 kHz

[run]
mode = quantum
t_exp = 1 s
seed = 611

[analysis]
f_max = 200 Hz
"""


def test_ini_parses_and_types_values():
    cfg = parse_config(INI_TEXT, "inline")
    assert cfg.get("pair", "detuning") == 177e12
    assert cfg.get("pair", "visibility") == 0.9
    assert cfg.get("run", "seed") == 611
    assert cfg.get("run", "t_exp") == 1.0
    assert cfg.get("signal", "amplitude_pp") == 20e-9
    assert cfg.get("run", "missing", "fallback") == "fallback"
    with pytest.raises(ConfigError):
        cfg.get("run", "missing")


def test_ini_rejects_unknown_and_duplicates():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[volume]\nlevel = 11\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[pair]\ncolor = red\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("[pair]\nvisibility = 1\nvisibility = 0.9\n")
    with pytest.raises(ConfigError, match="outside"):
        parse_config("visibility = 1\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("[pair]\nvisibility\n")


def test_json_config_equivalent_to_ini():
    doc = {
        "pair.detuning": "177 THz",
        "pair.visibility": 0.9,
        "signal.kind": "pure_tone",
        "signal.frequency": "10 Hz",
        "signal.amplitude_pp": "20 nm",
        "run.seed": 611,
    }
    cfg_json = parse_config(json.dumps(doc))
    cfg_ini = parse_config(INI_TEXT)
    assert build_pair(cfg_json) == build_pair(cfg_ini)
    assert cfg_json.get("run", "seed") == 611


def test_json_config_rejections():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config("{broken")
    with pytest.raises(ConfigError, match="section.key"):
        parse_config(json.dumps({"seed": 1}))
    # A JSON array does not sniff as JSON (no leading brace); it falls
    # through to the INI parser and is rejected there.
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")
    # Dimensioned quantities must be strings carrying their unit even in
    # JSON; a bare number is ambiguous and is refused.
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"pair.detuning": 177e12})).get("pair", "detuning")


# ----- builders -----


def test_build_pair_default_and_wavelengths():
    pair = build_pair(Config({}))
    assert abs(pair.delta_omega - 2 * math.pi * 177e12) < 1e-3
    assert pair.visibility_v0 == 1.0
    cfg = parse_config("[pair]\nlambda_1 = 810 nm\nlambda_2 = 1550 nm\n")
    pair_wl = build_pair(cfg)
    expected = 2 * math.pi * SPEED_OF_LIGHT * abs(1 / 810e-9 - 1 / 1550e-9)
    assert abs(pair_wl.delta_omega - expected) < 1e-3 * expected
    with pytest.raises(ConfigError, match="both lambda_1 and lambda_2"):
        build_pair(parse_config("[pair]\nlambda_1 = 810 nm\n"))


def test_build_fringe_defaults():
    fringe = build_fringe(Config({}))
    assert abs(fringe.omega_optical - 2 * math.pi * SPEED_OF_LIGHT / 1550e-9) < 1.0
    assert fringe.phase_offset == -math.pi / 2
    assert fringe.arm_intensity_ratio == 1.0
    custom = build_fringe(parse_config("[classical]\nwavelength = 780 nm\narm_ratio = 0.13\n"))
    assert abs(custom.omega_optical - 2 * math.pi * SPEED_OF_LIGHT / 780e-9) < 1.0
    assert custom.arm_intensity_ratio == 0.13


def test_build_channel_reads_degradations():
    ch = build_channel(parse_config("[channel]\nloss = 0.87\nbackground = 0.5\ngeometry = 1\n"))
    assert ch.loss_b == 0.87
    assert ch.background_fraction == 0.5
    assert ch.geometry.g == 1


def test_resolve_operating_delay_modes():
    pair = build_pair(Config({}))
    assert resolve_operating_delay(Config({}), pair, "quantum") == quadrature_delay(pair)
    assert resolve_operating_delay(Config({}), pair, "classical") == 0.0
    cfg = parse_config("[signal]\ntau_op = 2 fs\n")
    assert resolve_operating_delay(cfg, pair, "quantum") == 2e-15
    with pytest.raises(ConfigError):
        resolve_operating_delay(
            parse_config("[signal]\ntau_op = quadrature\n"), pair, "classical"
        )


def test_build_signal_kinds():
    pair = build_pair(Config({}))
    tone = build_signal(parse_config(
        "[signal]\nkind = pure_tone\nfrequency = 10 Hz\namplitude_pp = 20 nm\n"
    ), pair, "quantum")
    assert len(tone.components) == 1
    assert tone.dc_offset_delay == quadrature_delay(pair)
    square = build_signal(parse_config(
        "[signal]\nkind = square_wave\nfrequency = 10 Hz\namplitude_pp = 55 nm\nharmonics = 7\n"
    ), pair, "quantum")
    assert [c.frequency for c in square.components] == [10.0, 30.0, 50.0, 70.0]
    multi = build_signal(parse_config(
        "[signal]\nkind = multi_tone\ncomponent_1 = 50 Hz | 36 nm\ncomponent_2 = 100 Hz | 22 nm\n"
    ), pair, "classical")
    assert len(multi.components) == 2
    assert multi.dc_offset_delay == 0.0
    with pytest.raises(ConfigError):
        build_signal(parse_config("[signal]\nkind = chirp\n"), pair, "quantum")


def test_build_options_overrides_win():
    cfg = parse_config("[analysis]\np_fa = 0.01\nf_max = 1 kHz\n")
    opts = build_options(cfg)
    assert opts.p_fa == 0.01 and opts.f_max == 1e3
    opts2 = build_options(cfg, {"p_fa": 0.001, "f_max": None})
    assert opts2.p_fa == 0.001 and opts2.f_max == 1e3


# ----- end-to-end CLI -----


def write_tone_config(tmp_path, seed=611):
    cfg_path = tmp_path / "tone.ini"
    cfg_path.write_text(INI_TEXT.replace("seed = 611", f"seed = {seed}"))
    return cfg_path


def test_cli_simulate_then_estimate(tmp_path, capsys):
    cfg = write_tone_config(tmp_path)
    out = tmp_path / "run1"
    assert main(["simulate", "-c", str(cfg), "--out", str(out)]) == 0
    assert (out / "coincidence.txt").exists()
    assert (out / "anticoincidence.txt").exists()
    truth = json.loads((out / "ground_truth.json").read_text())
    assert truth["components"][0]["f"] == 10.0
    capsys.readouterr()

    est_dir = tmp_path / "est"
    code = main([
        "estimate",
        str(out / "coincidence.txt"),
        str(out / "anticoincidence.txt"),
        "-c", str(cfg),
        "--out", str(est_dir),
    ])
    captured = capsys.readouterr().out
    assert code == 0
    assert "displacement_pp=" in captured
    assert "component f=" in captured
    assert (est_dir / "spectrum.csv").exists()
    recon = json.loads((est_dir / "reconstruction.json").read_text())
    assert recon["mode"] == "quantum"
    assert abs(recon["displacement_pp"] - 20e-9) < 5e-9


def test_cli_simulate_is_deterministic(tmp_path):
    cfg = write_tone_config(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "-c", str(cfg), "--out", str(out_a)]) == 0
    assert main(["simulate", "-c", str(cfg), "--out", str(out_b)]) == 0
    for name in ("coincidence.txt", "anticoincidence.txt", "ground_truth.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_cli_binary_streams_round_trip(tmp_path, capsys):
    cfg = write_tone_config(tmp_path, seed=612)
    out = tmp_path / "bin"
    assert main(["simulate", "-c", str(cfg), "--out", str(out), "--binary"]) == 0
    capsys.readouterr()
    code = main([
        "estimate",
        str(out / "coincidence.bin"),
        str(out / "anticoincidence.bin"),
        "-c", str(cfg),
        "--format", "json",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mode"] == "quantum"
    assert abs(doc["components"][0]["f_hat"] - 10.0) < 0.3


def test_cli_exit_codes(tmp_path, capsys):
    bad_cfg = tmp_path / "bad.ini"
    bad_cfg.write_text("[pair]\nvisibility = 2 THz\n")
    assert main(["simulate", "-c", str(bad_cfg), "--out", str(tmp_path)]) == 2

    good_cfg = write_tone_config(tmp_path)
    assert main(["estimate", str(tmp_path / "nope.txt"), str(tmp_path / "nope2.txt"),
                 "-c", str(good_cfg)]) == 3

    # Two event-free streams cannot set a detection threshold.
    empty1 = tmp_path / "empty1.txt"
    empty2 = tmp_path / "empty2.txt"
    empty1.write_text("qvibe-ts v1 coincidence 100 1.0 0\n")
    empty2.write_text("qvibe-ts v1 anticoincidence 100 1.0 0\n")
    assert main(["estimate", str(empty1), str(empty2), "-c", str(good_cfg)]) == 4
    capsys.readouterr()


def test_cli_qcrb_reports_ratio(capsys):
    code = main(["qcrb", "--n-pairs", "10000", "--trials", "200", "--seed", "5"])
    out = capsys.readouterr().out
    assert code == 0
    assert "n_pairs=10000" in out
    assert "ratio=" in out


def test_cli_spectrum_csv_to_stdout(tmp_path, capsys):
    cfg = write_tone_config(tmp_path, seed=613)
    out = tmp_path / "s"
    assert main(["simulate", "-c", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    code = main([
        "estimate",
        str(out / "coincidence.txt"),
        str(out / "anticoincidence.txt"),
        "-c", str(cfg),
        "--format", "csv",
    ])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "f_hz,re_y,im_y,abs_y,kappa"
    assert len(lines) == 335  # header plus the 334-bin grid
