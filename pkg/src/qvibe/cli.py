"""Command-line front end.

Subcommands map one-to-one onto the library drivers:

* ``simulate``   one exposure -> timestamp stream files + ground truth
* ``estimate``   two stream files -> spectrum table + reconstruction
* ``trials``     repeated exposures of one scenario -> spread statistics
* ``sweep``      tone stepped across frequencies -> per-point table
* ``advantage``  paired quantum/classical runs under channel degradation
* ``qcrb``       closed-form precision bound vs Monte Carlo estimator

Exit codes: 0 success, 2 configuration problem, 3 file/stream problem,
4 analysis could not proceed. All output is deterministic for a fixed
configuration and seed: floats print via repr and JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    Config,
    build_channel,
    build_fringe,
    build_options,
    build_pair,
    build_signal,
    load_config,
)
from .core import GeometryFactor
from .errors import AnalysisError, ConfigError, StreamFormatError
from .estimate import classical_pipeline, quantum_pipeline
from .metrology import (
    TrialScenario,
    background_advantage_setup,
    loss_advantage_setup,
    monte_carlo_delay_std,
    qcrb_delay_std,
    qcrb_displacement_std,
    run_advantage_experiment,
    run_amplitude_trials,
    run_frequency_sweep,
)
from .simulate import DEFAULT_TICK, simulate_classical_run, simulate_quantum_run
from .streamio import (
    read_stream,
    write_ground_truth,
    write_stream_binary,
    write_stream_text,
)

_MODES = ("quantum", "classical")


def _fmt(x: float) -> str:
    return repr(float(x))


def _require_mode(mode: str) -> str:
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}, got {mode!r}")
    return mode


def _seed_of(args, cfg: Config, default: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.get("run", "seed", default)


def _outdir(args) -> Path:
    out = Path(args.out if args.out else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    mode = _require_mode(args.mode or cfg.get("run", "mode", "quantum"))
    pair = build_pair(cfg)
    channel = build_channel(cfg)
    signal = build_signal(cfg, pair, mode)
    t_exp = cfg.get("run", "t_exp", 1.0)
    seed = _seed_of(args, cfg)
    tick = cfg.get("run", "tick", DEFAULT_TICK)
    binary = args.binary or cfg.get("run", "binary", False)
    out = _outdir(args)
    if mode == "quantum":
        run = simulate_quantum_run(pair, signal, channel, t_exp, seed, tick)
        streams = ((run.coincidences, "coincidence"), (run.anticoincidences, "anticoincidence"))
    else:
        run = simulate_classical_run(build_fringe(cfg), signal, channel, t_exp, seed, tick)
        streams = ((run.port1, "port1"), (run.port2, "port2"))
    write = write_stream_binary if binary else write_stream_text
    ext = ".bin" if binary else ".txt"
    for stream, name in streams:
        path = out / (name + ext)
        write(stream, path)
        print(f"wrote {path} ({len(stream)} events)")
    truth_path = out / "ground_truth.json"
    write_ground_truth(run.truth, truth_path)
    print(f"wrote {truth_path}")
    print(f"mode={mode} t_exp={_fmt(t_exp)} seed={seed}")
    return 0


def _load_optional_config(args) -> Config:
    if args.config:
        return load_config(args.config)
    return Config({}, "<defaults>")


def cmd_estimate(args) -> int:
    cfg = _load_optional_config(args)
    mode = _require_mode(args.mode or cfg.get("run", "mode", "quantum"))
    stream_1 = read_stream(args.stream1)
    stream_2 = read_stream(args.stream2)
    options = build_options(cfg, {"p_fa": args.p_fa, "f_max": args.f_max})
    ratio = args.ratio if args.ratio is not None else cfg.get("analysis", "ratio", 1.0)
    geometry = GeometryFactor(cfg.get("channel", "geometry", 2))
    if mode == "quantum":
        result = quantum_pipeline(
            stream_1, stream_2, pair=build_pair(cfg), geometry=geometry,
            ratio=ratio, options=options,
        )
    else:
        result = classical_pipeline(
            stream_1, stream_2, fringe_ref=build_fringe(cfg), geometry=geometry,
            ratio=ratio, options=options,
        )
    spectrum, recon = result.spectrum, result.reconstruction
    if args.out:
        out = _outdir(args)
        spectrum.to_csv(out / "spectrum.csv")
        print(f"wrote {out / 'spectrum.csv'}")
        if recon is not None:
            recon.to_json(out / "reconstruction.json")
            print(f"wrote {out / 'reconstruction.json'}")
    if args.format == "csv":
        spectrum.to_csv(_StdoutPath())
        return 0
    if args.format == "json":
        doc = recon.to_json() if recon is not None else {"detected": False}
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    print(
        f"scanned {spectrum.frequencies.size} bins up to {_fmt(float(spectrum.frequencies[-1]))} Hz,"
        f" threshold {_fmt(spectrum.threshold_kappa)}"
    )
    if recon is None:
        print("no components detected")
        return 0
    for comp in recon.components:
        note = "" if comp.refined else " (unrefined)"
        print(
            f"component f={_fmt(comp.f_hat)} Hz theta={_fmt(comp.theta_hat)} rad"
            f" a_c={_fmt(comp.a_hat_c)} a_a={_fmt(comp.a_hat_a)}{note}"
        )
    print(f"displacement_pp={_fmt(recon.displacement_pp)} m")
    print(
        f"clamp_fractions flux={_fmt(recon.flux_clamp_fraction)}"
        f" arccos={_fmt(recon.arccos_clamp_fraction)}"
    )
    return 0


class _StdoutPath:
    """Minimal Path stand-in so table writers can target stdout."""

    def write_text(self, text: str) -> None:
        sys.stdout.write(text)


def cmd_trials(args) -> int:
    cfg = load_config(args.config)
    pair = build_pair(cfg)
    channel = build_channel(cfg)
    signal = build_signal(cfg, pair, "quantum")
    scenario = TrialScenario(
        pair=pair,
        signal=signal,
        channel=channel,
        t_exp=cfg.get("run", "t_exp", 1.0),
        options=build_options(cfg, {"p_fa": args.p_fa, "f_max": args.f_max}),
        tick_duration=cfg.get("run", "tick", DEFAULT_TICK),
    )
    n_trials = args.trials if args.trials is not None else cfg.get("run", "trials", 10)
    stats = run_amplitude_trials(scenario, n_trials, _seed_of(args, cfg), args.threads)
    for rec in stats.records:
        if rec.detected:
            print(f"trial seed={rec.seed} f_hat={_fmt(rec.f_hat)} pp_hat={_fmt(rec.pp_hat)}")
        else:
            print(f"trial seed={rec.seed} no detection")
    print(f"truth f={_fmt(stats.truth_f)} Hz pp={_fmt(stats.truth_pp)} m")
    print(f"f_mean={_fmt(stats.f_mean)} f_std={_fmt(stats.f_std)}")
    print(f"pp_mean={_fmt(stats.pp_mean)} pp_std={_fmt(stats.pp_std)}")
    print(f"detection_rate={_fmt(stats.detection_rate)}")
    if args.out:
        doc = {
            "truth": {"f": stats.truth_f, "pp": stats.truth_pp},
            "f_mean": stats.f_mean,
            "f_std": stats.f_std,
            "pp_mean": stats.pp_mean,
            "pp_std": stats.pp_std,
            "detection_rate": stats.detection_rate,
            "records": [
                {
                    "seed": rec.seed,
                    "detected": rec.detected,
                    "f_hat": rec.f_hat,
                    "pp_hat": rec.pp_hat,
                    "n_components": rec.n_components,
                }
                for rec in stats.records
            ],
        }
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    start = cfg.get("sweep", "start")
    stop = cfg.get("sweep", "stop")
    step = cfg.get("sweep", "step")
    if step <= 0 or stop < start:
        raise ConfigError("[sweep] needs stop >= start and step > 0")
    freqs = []
    f = start
    while f <= stop * (1.0 + 1e-12):
        freqs.append(f)
        f += step
    points = run_frequency_sweep(
        freqs,
        build_pair(cfg),
        build_channel(cfg),
        cfg.get("sweep", "amplitude_pp"),
        cfg.get("sweep", "exposure"),
        build_options(cfg, {"p_fa": args.p_fa, "f_max": args.f_max}),
        playback_scale=cfg.get("sweep", "playback_scale", 0.0),
        base_seed=_seed_of(args, cfg),
        max_workers=args.threads,
    )
    header = "f_nominal,f_true,detected,f_hat,rel_offset,pp_hat"
    lines = [header]
    for p in points:
        lines.append(
            f"{_fmt(p.f_nominal)},{_fmt(p.f_true)},{int(p.detected)},"
            f"{_fmt(p.f_hat)},{_fmt(p.rel_offset)},{_fmt(p.pp_hat)}"
        )
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    if args.out:
        Path(args.out).write_text(table)
        print(f"wrote {args.out}")
    return 0


def cmd_advantage(args) -> int:
    cfg = load_config(args.config)
    experiment = cfg.get("advantage", "experiment", "loss")
    kwargs = {}
    if cfg.has("advantage", "values"):
        kwargs["loss_values" if experiment == "loss" else "background_values"] = cfg.get(
            "advantage", "values"
        )
    if cfg.has("advantage", "target_pairs"):
        kwargs["target_pairs"] = cfg.get("advantage", "target_pairs")
    if cfg.has("advantage", "fundamental"):
        kwargs["fundamental"] = cfg.get("advantage", "fundamental")
    if cfg.has("advantage", "amplitude_pp"):
        kwargs["amplitude_pp"] = cfg.get("advantage", "amplitude_pp")
    if experiment == "loss":
        setup = loss_advantage_setup(**kwargs)
    elif experiment == "background":
        setup = background_advantage_setup(**kwargs)
    else:
        raise ConfigError(f"[advantage] experiment must be loss or background, got {experiment!r}")
    outcomes = run_advantage_experiment(setup, _seed_of(args, cfg), args.threads)
    doc = []
    for o in outcomes:
        print(
            f"{o.condition.label}: events q={o.quantum_events} c={o.classical_events}"
            f" truth_pp={_fmt(o.truth_pp)}"
        )
        print(
            f"  quantum pp={_fmt(o.quantum_pp)} recovery={_fmt(o.quantum_recovery)}"
            f" harmonics={len(o.quantum_harmonics)}"
        )
        print(
            f"  classical pp={_fmt(o.classical_pp)} recovery={_fmt(o.classical_recovery)}"
            f" harmonics={len(o.classical_harmonics)}"
        )
        doc.append(
            {
                "label": o.condition.label,
                "loss_b": o.condition.loss_b,
                "background_fraction": o.condition.background_fraction,
                "t_exp_quantum": o.condition.t_exp_quantum,
                "t_exp_classical": o.condition.t_exp_classical,
                "truth_pp": o.truth_pp,
                "quantum_pp": o.quantum_pp,
                "classical_pp": o.classical_pp,
                "quantum_events": o.quantum_events,
                "classical_events": o.classical_events,
                "quantum_harmonics": list(o.quantum_harmonics),
                "classical_harmonics": list(o.classical_harmonics),
            }
        )
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_qcrb(args) -> int:
    cfg = _load_optional_config(args)
    pair = build_pair(cfg)
    geometry = GeometryFactor(cfg.get("channel", "geometry", 1))
    if args.n_pairs:
        n_list = tuple(args.n_pairs)
    else:
        n_list = cfg.get("qcrb", "n_pairs", (10_000,))
    trials = args.trials if args.trials is not None else cfg.get("qcrb", "trials", 1000)
    factor = (
        args.calibration_factor
        if args.calibration_factor is not None
        else cfg.get("qcrb", "calibration_factor", 0.0)
    )
    seed = _seed_of(args, cfg)
    for i, n in enumerate(n_list):
        cal = int(factor * n) if factor > 0 else None
        mc = monte_carlo_delay_std(
            int(n), trials, seed + i, pair, v0=pair.visibility_v0, calibration_pairs=cal
        )
        print(
            f"n_pairs={int(n)} bound_tau={_fmt(mc.bound)} s"
            f" bound_x={_fmt(qcrb_displacement_std(int(n), pair, geometry))} m"
            f" mc_sigma_tau={_fmt(mc.sigma_tau)} s ratio={_fmt(mc.ratio_to_bound)}"
        )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qvibe",
        description="Two-colour interferometric vibrometry: simulation and estimation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", "-c", required=config_required, help="configuration file")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")

    p = sub.add_parser("simulate", help="generate timestamp streams for one exposure")
    common(p)
    p.add_argument("--out", "-o", default=".", help="output directory")
    p.add_argument("--mode", choices=_MODES, default=None)
    p.add_argument("--binary", action="store_true", help="write binary streams")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run the estimation pipeline on two stream files")
    p.add_argument("stream1", help="coincidence (or port-1) stream file")
    p.add_argument("stream2", help="anti-coincidence (or port-2) stream file")
    common(p, config_required=False)
    p.add_argument("--out", "-o", default=None, help="output directory")
    p.add_argument("--mode", choices=_MODES, default=None)
    p.add_argument("--p-fa", type=float, default=None, help="override [analysis] p_fa")
    p.add_argument("--f-max", type=float, default=None, help="override [analysis] f_max in Hz")
    p.add_argument("--ratio", type=float, default=None, help="override [analysis] ratio")
    p.add_argument("--format", choices=("human", "json", "csv"), default="human")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("trials", help="repeat one scenario and report spread statistics")
    common(p)
    p.add_argument("--out", "-o", default=None, help="write statistics JSON here")
    p.add_argument("--trials", type=int, default=None, help="override [run] trials")
    p.add_argument("--p-fa", type=float, default=None)
    p.add_argument("--f-max", type=float, default=None)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("sweep", help="step a tone across frequencies")
    common(p)
    p.add_argument("--out", "-o", default=None, help="write the sweep table here")
    p.add_argument("--p-fa", type=float, default=None)
    p.add_argument("--f-max", type=float, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("advantage", help="compare channels under loss or background")
    common(p)
    p.add_argument("--out", "-o", default=None, help="write outcome JSON here")
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("qcrb", help="precision bound and Monte Carlo saturation")
    common(p, config_required=False)
    p.add_argument("--n-pairs", type=int, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument(
        "--calibration-factor", type=float, default=None,
        help="calibration pairs as a multiple of n_pairs (0 = known ratio)",
    )
    p.set_defaults(func=cmd_qcrb)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StreamFormatError as exc:
        print(f"stream error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
