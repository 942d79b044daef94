"""Kommandozeile fuer den Crowd-Navigation-Benchmark.

Unterbefehle:
    run             Batch aus Seeds x Episoden ausfuehren, Report/Log/Plots schreiben
    score           Gesamtindex F aus Rohmetriken oder Teilscores berechnen
    metric          Kruemmungsfenster und M_cdr einer Trajektorie ausgeben
    plot            SVG einer Episode aus einem Trajektorienlog oder Policy-Vergleich (--compare)
    protocol-check  Handshake und drei Beispielbeobachtungen gegen eine externe Policy

Exit-Codes: 0 Erfolg, 2 Konfigurations-/Eingabefehler, 3 Fehler der externen Policy.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from crowdnav.bench import EmptyBatch, RunSpec, run_batch, run_comparison
from crowdnav.config import ScenarioConfig, ScenarioConfigError, apply_overrides, load_scenario_config, preset
from crowdnav.data_io import (
    TrajectoryFormatError,
    dump_json,
    ensure_dirs,
    episode_rows,
    load_json,
    load_log_frame,
    load_metrics_file,
    load_trajectory,
    save_text,
)
from crowdnav.policies import PolicyKind
from crowdnav.protocol import DEFAULT_TIMEOUT, ExternalPolicyFailure, PolicyProcess, protocol_roundtrip
from crowdnav.report import emit_comparison_plot, emit_plot, emit_report, emit_trajectory_log, log_from_frame
from crowdnav.scoring import (
    SCORE_KEYS,
    BatchMetrics,
    InvalidMetrics,
    InvalidWeights,
    ScoringConfig,
    combine_scores,
    comprehensive_score,
    format_breakdown,
)
from crowdnav.sim import Observation, ObservedHuman, PlacementFailure, RobotState
from crowdnav.trajmetric import DEFAULT_TAU, InsufficientPoints, SmoothnessConfig, discontinuity_ratio, windows_frame

logger = logging.getLogger("crowdnav")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_POLICY = 3

CONFIG_ERRORS = (
    ScenarioConfigError,
    InvalidWeights,
    InvalidMetrics,
    InsufficientPoints,
    TrajectoryFormatError,
    PlacementFailure,
    FileNotFoundError,
    ValueError,
)


def _setup_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    if args.config:
        return load_scenario_config(Path(args.config), args.preset)
    return preset(args.preset or "low")


def _scoring(path: Optional[str], density: str, t_star: float) -> ScoringConfig:
    if not path:
        return ScoringConfig.for_density(density, t_star=t_star)
    data = load_json(Path(path))
    data.setdefault("t_star", t_star)
    return ScoringConfig.from_dict(data, density)


def _preflight(command: str, cfg: ScenarioConfig, timeout: float) -> None:
    with PolicyProcess(command, timeout=timeout) as endpoint:
        endpoint.start(cfg.dt, cfg.time_limit)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = apply_overrides(
        _scenario(args),
        lam=args.lam,
        tau_c=args.tau_c,
        w_smooth=args.w_smooth,
        enabled=False if args.no_shaping else None,
    )
    if args.seeds < 1 or args.episodes < 1:
        raise ValueError("--seeds und --episodes muessen >= 1 sein")
    spec = RunSpec(
        scenario=cfg,
        policy=PolicyKind.parse(args.policy),
        episodes_per_seed=args.episodes,
        seeds=tuple(range(args.seed_base, args.seed_base + args.seeds)),
        scoring=_scoring(args.scoring, cfg.density_preset, cfg.optimal_time),
        smoothness=SmoothnessConfig(tau=args.tau if args.tau is not None else DEFAULT_TAU),
    )
    if spec.policy.name == "external":
        _preflight(spec.policy.command or "", cfg, DEFAULT_TIMEOUT)

    logger.info(
        "Starte %s: Preset %s, %d Seeds x %d Episoden",
        spec.policy.label(), cfg.density_preset, len(spec.seeds), spec.episodes_per_seed,
    )
    report = run_batch(spec, workers=args.workers)

    out_dir = Path(args.out)
    ensure_dirs(out_dir)
    save_text(emit_report(report, "json"), out_dir / "report.json", "JSON-Datei")
    save_text(emit_report(report, "csv"), out_dir / "report.csv", "Tabelle")
    save_text(emit_trajectory_log(report.records), out_dir / "trajectories.jsonl", "Trajektorienlog")
    if args.plots:
        plots_dir = out_dir / "plots"
        ensure_dirs(plots_dir)
        for ep, record in enumerate(report.records[: args.plots]):
            if record.log is None:
                logger.warning("Episode %d ohne Log (Protokollfehler), kein Plot", ep)
                continue
            save_text(emit_plot(record.log, cfg), plots_dir / f"episode_{ep:04d}.svg", "SVG")
    sys.stdout.write(emit_report(report, "markdown").decode("utf-8"))
    return EXIT_OK


def _metric_key(key: str) -> str:
    # Tabellenspalten wie M_sr / F_saf auf Feldnamen abbilden
    key = str(key).strip().lower()
    return key[2:] if key.startswith("m_") else key


def cmd_score(args: argparse.Namespace) -> int:
    data = load_metrics_file(Path(args.metrics))
    if isinstance(data.get("pooled"), dict):
        data = data["pooled"]
    data = {_metric_key(key): value for key, value in data.items()}
    cfg = _scoring(args.scoring, args.density, args.t_star)
    if all(key in data and data[key] is not None for key in SCORE_KEYS):
        breakdown = combine_scores({key: data[key] for key in SCORE_KEYS}, cfg.weights)
    else:
        breakdown = comprehensive_score(BatchMetrics.from_dict(data), cfg)
    sys.stdout.write(dump_json(breakdown.to_dict()) + "\n")
    sys.stdout.write(format_breakdown(breakdown) + "\n")
    return EXIT_OK


def cmd_metric(args: argparse.Namespace) -> int:
    traj = load_trajectory(Path(args.trajectory), args.ep)
    cfg = SmoothnessConfig(tau=args.tau if args.tau is not None else DEFAULT_TAU)
    frame = windows_frame(traj, cfg)
    ratio = discontinuity_ratio(traj, cfg)
    sys.stdout.write(frame.to_string(index=False, float_format=lambda v: f"{v:.6f}") + "\n")
    sys.stdout.write(f"M_cdr = {ratio:.6f} (tau = {cfg.tau:.6f}, windows = {len(frame)})\n")
    return EXIT_OK


def _plot_comparison(args: argparse.Namespace) -> int:
    cfg = _scenario(args)
    kinds = [PolicyKind.parse(name.strip()) for name in args.compare.split(",") if name.strip()]
    records = run_comparison(cfg, kinds, args.seed, args.index)
    svg = emit_comparison_plot(records, cfg)
    out = Path(args.out) if args.out else Path("out") / f"compare_seed{args.seed}_ep{args.index:04d}.svg"
    save_text(svg, out, "SVG")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    if args.compare:
        return _plot_comparison(args)
    if not args.log:
        raise ValueError("plot braucht ein Trajektorienlog oder --compare")
    path = Path(args.log)
    rows = episode_rows(load_log_frame(path), args.ep, path)
    svg = emit_plot(log_from_frame(rows), _scenario(args))
    out = Path(args.out) if args.out else path.parent / "plots" / f"episode_{args.ep:04d}.svg"
    save_text(svg, out, "SVG")
    return EXIT_OK


def _synthetic_observations(cfg: ScenarioConfig) -> List[Observation]:
    sx, sy = cfg.robot_start
    gx, gy = cfg.robot_goal
    observations = []
    for k in range(3):
        t = k * cfg.dt
        robot = RobotState(
            px=sx, py=sy + k * cfg.dt * cfg.v_max, vx=0.0, vy=cfg.v_max if k else 0.0,
            gx=gx, gy=gy, v_max=cfg.v_max, theta=math.atan2(gy - sy, gx - sx), rho=cfg.robot_radius,
        )
        human = ObservedHuman(hid=0, px=1.0 - 0.25 * k, py=0.0, rho=cfg.human_radius)
        observations.append(Observation(robot=robot, humans=(human,), time=t))
    return observations


def cmd_protocol_check(args: argparse.Namespace) -> int:
    cfg = preset("low")
    with PolicyProcess(args.command, timeout=args.timeout) as endpoint:
        endpoint.start(cfg.dt, cfg.time_limit)
        logger.info("Handshake ok")
        for obs in _synthetic_observations(cfg):
            action = protocol_roundtrip(endpoint, obs)
            sys.stdout.write(dump_json({"t": obs.time, "vx": action.vx, "vy": action.vy}, indent=None) + "\n")
    logger.info("Protokoll ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="nur Warnungen und Fehler loggen")
    parser = argparse.ArgumentParser(prog="crowdnav", description="Crowd-Navigation-Benchmark")
    sub = parser.add_subparsers(dest="command_name", required=True)

    run = sub.add_parser("run", parents=[common], help="Batch ausfuehren")
    run.add_argument("--preset", choices=["low", "high"], default=None)
    run.add_argument("--config", default=None, help="Szenario-JSON (auf dem Preset angewendet)")
    run.add_argument("--policy", default="orca", help="orca | sfm | greedy | external:<cmd>")
    run.add_argument("--seeds", type=int, default=10, help="Anzahl Seeds")
    run.add_argument("--seed-base", type=int, default=0, help="erster Seed")
    run.add_argument("--episodes", type=int, default=500, help="Episoden je Seed")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--tau", type=float, default=None, help="Schwelle fuer M_cdr (Standard ln 2)")
    run.add_argument("--tau-c", type=float, default=None)
    run.add_argument("--lambda", dest="lam", type=float, default=None)
    run.add_argument("--w-smooth", type=float, default=None)
    run.add_argument("--no-shaping", action="store_true")
    run.add_argument("--scoring", default=None, help="Scoring-JSON")
    run.add_argument("--plots", type=int, default=0, help="SVGs der ersten K Episoden")
    run.add_argument("--out", default="out/run")
    run.set_defaults(func=cmd_run)

    score = sub.add_parser("score", parents=[common], help="Gesamtindex berechnen")
    score.add_argument("metrics", help="JSON/CSV mit Rohmetriken oder Teilscores")
    score.add_argument("--scoring", default=None)
    score.add_argument("--density", choices=["low", "high"], default="low")
    score.add_argument("--t-star", type=float, default=8.0)
    score.set_defaults(func=cmd_score)

    metric = sub.add_parser("metric", parents=[common], help="Kruemmungsmetrik einer Trajektorie")
    metric.add_argument("trajectory", help="CSV (t,x,y) oder JSONL-Log")
    metric.add_argument("--tau", type=float, default=None)
    metric.add_argument("--ep", type=int, default=0, help="Episode im JSONL-Log")
    metric.set_defaults(func=cmd_metric)

    plot = sub.add_parser("plot", parents=[common], help="SVG aus Trajektorienlog")
    plot.add_argument("log", nargs="?", default=None)
    plot.add_argument("--ep", type=int, default=0)
    plot.add_argument("--preset", choices=["low", "high"], default=None)
    plot.add_argument("--config", default=None)
    plot.add_argument("--compare", default=None, help="Policies fuer eine Episode, z.B. orca,sfm,greedy")
    plot.add_argument("--seed", type=int, default=0, help="Seed der Vergleichsepisode")
    plot.add_argument("--index", type=int, default=0, help="Episodenindex der Vergleichsepisode")
    plot.add_argument("--out", default=None)
    plot.set_defaults(func=cmd_plot)

    check = sub.add_parser("protocol-check", parents=[common], help="externe Policy pruefen")
    check.add_argument("command", help="Befehlszeile der Policy")
    check.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    check.set_defaults(func=cmd_protocol_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.quiet)
    try:
        return args.func(args)
    except ExternalPolicyFailure as exc:
        logger.error("Externe Policy fehlgeschlagen: %s", exc)
        return EXIT_POLICY
    except EmptyBatch as exc:
        logger.error("%s", exc)
        return EXIT_POLICY
    except CONFIG_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
