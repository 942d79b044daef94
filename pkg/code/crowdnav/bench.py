"""Batch-Ausfuehrung mit Seeds und Aggregation der Episodenmetriken."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import ScenarioConfig
from .policies import PolicyKind, make_policy
from .protocol import ExternalPolicyFailure
from .scoring import SCORE_KEYS, BatchMetrics, ScoreBreakdown, ScoringConfig, comprehensive_score
from .sim import episode_seed, generate_scenario, min_separation, observe, step
from .trajmetric import SmoothnessConfig, Trajectory, discontinuity_ratio

logger = logging.getLogger(__name__)

OUTCOMES = ("success", "collision", "timeout")
PROTOCOL_FAILURE = "protocol_failure"
METRIC_KEYS = ("sr", "cr", "tr", "at", "dr", "md", "cdr")

_TERMINAL_TO_OUTCOME = {"goal": "success", "collision": "collision", "timeout": "timeout"}


class EmptyBatch(ValueError):
    """Keine auswertbaren Episoden."""


@dataclass(frozen=True)
class RunSpec:
    scenario: ScenarioConfig
    policy: PolicyKind
    episodes_per_seed: int
    seeds: Tuple[int, ...]
    scoring: ScoringConfig
    smoothness: SmoothnessConfig = field(default_factory=SmoothnessConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.episodes_per_seed < 1:
            raise ValueError(f"episodes_per_seed muss >= 1 sein: {self.episodes_per_seed}")
        if not self.seeds:
            raise ValueError("Mindestens ein Seed noetig")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"Seeds muessen verschieden sein: {self.seeds}")

    def parameters(self) -> Dict[str, object]:
        return {
            "scenario": self.scenario.to_dict(),
            "policy": self.policy.label(),
            "seeds": list(self.seeds),
            "episodes_per_seed": self.episodes_per_seed,
            "scoring": self.scoring.to_dict(),
            "smoothness": {"tau": self.smoothness.tau, "eps_len": self.smoothness.eps_len},
        }


@dataclass(frozen=True)
class EpisodeLog:
    """Zustand je Zeitschritt, Zeile 0 ist der Startzustand."""

    times: np.ndarray  # (T+1,)
    robot: np.ndarray  # (T+1, 2)
    humans: np.ndarray  # (T+1, n, 2)
    r_base: np.ndarray
    r_shape: np.ndarray
    d: np.ndarray  # d_t, +inf ohne Menschen

    def closest_step(self) -> int:
        if not np.isfinite(self.d).any():
            return 0
        return int(np.nanargmin(np.where(np.isfinite(self.d), self.d, np.nan)))


@dataclass(frozen=True)
class EpisodeRecord:
    seed: int
    index: int
    outcome: str
    nav_time: float
    trajectory: Optional[Trajectory]
    min_sep: float
    discomfort_steps: int
    total_steps: int
    cdr: Optional[float]
    log: Optional[EpisodeLog] = None
    error: Optional[str] = None


def run_episode(spec: RunSpec, seed: int, index: int) -> EpisodeRecord:
    """Spielt eine Episode; ExternalPolicyFailure wird weitergereicht."""
    cfg = spec.scenario
    world = generate_scenario(cfg, episode_seed(seed, index))
    policy = make_policy(spec.policy, cfg)

    times = [0.0]
    robot_xy = [world.robot.position]
    humans_xy = [world.human_positions()]
    r_base = [0.0]
    r_shape = [0.0]
    seps = [min_separation(world)]
    step_seps: List[float] = []
    try:
        obs = observe(world)
        while True:
            outcome = step(world, policy.decide(obs))
            times.append(world.time)
            robot_xy.append(world.robot.position)
            humans_xy.append(world.human_positions())
            r_base.append(outcome.reward_base)
            r_shape.append(outcome.reward_shaping)
            seps.append(outcome.d_min)
            step_seps.append(outcome.d_min)
            if outcome.terminal != "none":
                break
            obs = outcome.observation
    finally:
        policy.close()

    trajectory = Trajectory.from_points(world.robot_path, cfg.dt)
    cdr = discontinuity_ratio(trajectory, spec.smoothness) if len(trajectory) >= 4 else None
    discomfort = sum(1 for d in step_seps if 0.0 <= d < cfg.discomfort_dist)
    n_humans = len(world.humans)
    log = EpisodeLog(
        times=np.array(times),
        robot=np.array(robot_xy, dtype=float),
        humans=np.array(humans_xy, dtype=float).reshape(len(times), n_humans, 2),
        r_base=np.array(r_base),
        r_shape=np.array(r_shape),
        d=np.array(seps),
    )
    return EpisodeRecord(
        seed=seed,
        index=index,
        outcome=_TERMINAL_TO_OUTCOME[world.terminal],
        nav_time=world.time,
        trajectory=trajectory,
        min_sep=min(step_seps),
        discomfort_steps=discomfort,
        total_steps=world.steps,
        cdr=cdr,
        log=log,
    )


def _run_task(task: Tuple[RunSpec, int, int]) -> EpisodeRecord:
    spec, seed, index = task
    try:
        return run_episode(spec, seed, index)
    except ExternalPolicyFailure as exc:
        return EpisodeRecord(
            seed=seed, index=index, outcome=PROTOCOL_FAILURE, nav_time=0.0, trajectory=None,
            min_sep=math.inf, discomfort_steps=0, total_steps=0, cdr=None, error=str(exc),
        )


def batch_metrics(frame: pd.DataFrame) -> BatchMetrics:
    """Metriken einer Menge gueltiger Episoden (eine Zeile je Episode)."""
    n = len(frame)
    counts = frame["outcome"].value_counts()
    sr, cr, tr = (counts.get(o, 0) / n for o in OUTCOMES)
    success_times = frame.loc[frame["outcome"] == "success", "nav_time"]
    at = float(success_times.mean()) if len(success_times) else None
    dr = float(frame["discomfort_steps"].sum() / frame["total_steps"].sum())
    finite_sep = frame.loc[np.isfinite(frame["min_sep"]), "min_sep"]
    md = float(finite_sep.mean()) if len(finite_sep) else None
    cdr_values = frame["cdr"].dropna()
    if len(cdr_values):
        cdr = float(cdr_values.mean())
    else:
        logger.warning("Keine Episode mit mindestens 4 Pfadpunkten - M_cdr auf 0 gesetzt")
        cdr = 0.0
    return BatchMetrics(sr=float(sr), cr=float(cr), tr=float(tr), at=at, dr=dr, md=md, cdr=cdr)


@dataclass(frozen=True)
class SeedResult:
    seed: int
    episodes: int
    excluded: int
    metrics: Optional[BatchMetrics]
    scores: Optional[ScoreBreakdown]


@dataclass(frozen=True)
class AggregateReport:
    pooled: BatchMetrics
    scores: ScoreBreakdown
    per_seed: Tuple[SeedResult, ...]
    mean_seed_scores: Dict[str, float]
    stddev: Dict[str, Dict[str, Optional[float]]]
    episodes: int
    excluded_episodes: int
    parameters: Dict[str, object] = field(default_factory=dict)
    records: Tuple[EpisodeRecord, ...] = field(default=(), repr=False, compare=False)

    def to_dict(self) -> Dict[str, object]:
        return {
            "per_seed": [
                {
                    "seed": s.seed,
                    "episodes": s.episodes,
                    "excluded": s.excluded,
                    "metrics": s.metrics.to_dict() if s.metrics else None,
                    "scores": _score_dict(s.scores) if s.scores else None,
                }
                for s in self.per_seed
            ],
            "pooled": self.pooled.to_dict(),
            "scores": _score_dict(self.scores),
            "mean_seed_scores": dict(self.mean_seed_scores),
            "stddev": self.stddev,
            "episodes": self.episodes,
            "excluded_episodes": self.excluded_episodes,
            "parameters": self.parameters,
        }


def _score_dict(breakdown: ScoreBreakdown) -> Dict[str, object]:
    data = {key: getattr(breakdown, key) for key in SCORE_KEYS}
    data["comprehensive"] = breakdown.comprehensive
    data["efficiency_defined"] = breakdown.efficiency_defined
    return data


def _nan_to_none(value: float) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


def aggregate(
    records: Sequence[EpisodeRecord],
    scoring: ScoringConfig,
    parameters: Optional[Dict[str, object]] = None,
) -> AggregateReport:
    """Gepoolte und seedweise Metriken; unabhaengig von der Reihenfolge der Records."""
    ordered = tuple(sorted(records, key=lambda r: (r.seed, r.index)))
    valid = [r for r in ordered if r.outcome != PROTOCOL_FAILURE]
    excluded = len(ordered) - len(valid)
    if excluded:
        logger.warning("%d Episode(n) wegen Protokollfehlern ausgeschlossen", excluded)
    if not valid:
        raise EmptyBatch("Keine auswertbaren Episoden")

    frame = pd.DataFrame(
        {
            "seed": [r.seed for r in valid],
            "outcome": [r.outcome for r in valid],
            "nav_time": [r.nav_time for r in valid],
            "min_sep": [r.min_sep for r in valid],
            "discomfort_steps": [r.discomfort_steps for r in valid],
            "total_steps": [r.total_steps for r in valid],
            "cdr": pd.array([r.cdr for r in valid], dtype="Float64"),
        }
    )
    pooled = batch_metrics(frame)
    scores = comprehensive_score(pooled, scoring)

    per_seed: List[SeedResult] = []
    all_seeds = sorted({r.seed for r in ordered})
    grouped = dict(tuple(frame.groupby("seed", sort=True)))
    for seed in all_seeds:
        n_total = sum(1 for r in ordered if r.seed == seed)
        group = grouped.get(seed)
        if group is None:
            logger.warning("Seed %d: alle Episoden ausgeschlossen", seed)
            per_seed.append(SeedResult(seed, n_total, n_total, None, None))
            continue
        metrics = batch_metrics(group)
        per_seed.append(
            SeedResult(seed, n_total, n_total - len(group), metrics, comprehensive_score(metrics, scoring))
        )

    scored = [s for s in per_seed if s.scores is not None]
    score_frame = pd.DataFrame(
        [{**{k: getattr(s.scores, k) for k in SCORE_KEYS}, "comprehensive": s.scores.comprehensive}
         for s in scored]
    )
    metric_frame = pd.DataFrame([s.metrics.to_dict() for s in scored], columns=list(METRIC_KEYS))
    metric_frame = metric_frame.astype(float)
    mean_seed_scores = {k: float(v) for k, v in score_frame.mean().items()}
    stddev = {
        "metrics": {k: _nan_to_none(v) for k, v in metric_frame.std(ddof=0).items()},
        "scores": {k: _nan_to_none(v) for k, v in score_frame.std(ddof=0).items()},
    }
    return AggregateReport(
        pooled=pooled,
        scores=scores,
        per_seed=tuple(per_seed),
        mean_seed_scores=mean_seed_scores,
        stddev=stddev,
        episodes=len(ordered),
        excluded_episodes=excluded,
        parameters=dict(parameters or {}),
        records=ordered,
    )


def run_records(spec: RunSpec, workers: Optional[int] = None) -> List[EpisodeRecord]:
    """Alle Episoden des RunSpec, sortiert nach (seed, index)."""
    tasks = [(spec, seed, index) for seed in spec.seeds for index in range(spec.episodes_per_seed)]
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(tasks) == 1:
        records = [_run_task(task) for task in tasks]
    else:
        chunksize = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=chunksize))
    logger.info("%d Episoden abgeschlossen (%d Worker)", len(records), workers)
    return sorted(records, key=lambda r: (r.seed, r.index))


def run_batch(spec: RunSpec, workers: Optional[int] = None) -> AggregateReport:
    records = run_records(spec, workers)
    failures = [r for r in records if r.outcome == PROTOCOL_FAILURE]
    if failures and len(failures) == len(records):
        raise ExternalPolicyFailure(f"Alle Episoden fehlgeschlagen: {failures[0].error}")
    return aggregate(records, spec.scoring, spec.parameters())


def run_comparison(
    cfg: ScenarioConfig, policies: Sequence[PolicyKind], seed: int, index: int
) -> Dict[str, EpisodeRecord]:
    """Dieselbe Episode (seed, index) fuer mehrere Policies; die Menschen laufen identisch."""
    if not policies:
        raise ValueError("Mindestens eine Policy noetig")
    scoring = ScoringConfig.for_density(cfg.density_preset, t_star=cfg.optimal_time)
    records: Dict[str, EpisodeRecord] = {}
    for kind in policies:
        spec = RunSpec(scenario=cfg, policy=kind, episodes_per_seed=1, seeds=(seed,), scoring=scoring)
        records[kind.label()] = run_episode(spec, seed, index)
    return records
