"""Report-, Log- und Plot-Ausgabe eines Benchmark-Laufs."""

from __future__ import annotations

import io
import logging
from typing import Dict, List, Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .bench import AggregateReport, EpisodeLog, EpisodeRecord  # noqa: E402
from .config import ScenarioConfig  # noqa: E402
from .data_io import dump_json, iter_lines  # noqa: E402
from .scoring import BatchMetrics, ScoreBreakdown  # noqa: E402

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("json", "csv", "markdown")
TABLE_COLUMNS = [
    "comprehensive", "F_saf", "F_suc", "F_comf", "F_traj", "F_effic",
    "M_sr", "M_cr", "M_tr", "M_dr", "M_md", "M_cdr", "M_at",
]
SVG_HASH_SALT = "crowdnav"


def _table_row(scope: str, metrics: Optional[BatchMetrics], scores: Optional[ScoreBreakdown]) -> Dict:
    row: Dict[str, object] = {"scope": scope}
    if scores is not None:
        row.update(
            comprehensive=scores.comprehensive, F_saf=scores.f_saf, F_suc=scores.f_suc,
            F_comf=scores.f_comf, F_traj=scores.f_traj, F_effic=scores.f_effic,
        )
    if metrics is not None:
        row.update(
            M_sr=metrics.sr, M_cr=metrics.cr, M_tr=metrics.tr, M_dr=metrics.dr,
            M_md=metrics.md, M_cdr=metrics.cdr, M_at=metrics.at,
        )
    return row


def report_frame(report: AggregateReport) -> pd.DataFrame:
    """Eine Zeile fuer die gepoolten Werte, danach eine je Seed."""
    rows = [_table_row("pooled", report.pooled, report.scores)]
    for seed in report.per_seed:
        rows.append(_table_row(f"seed:{seed.seed}", seed.metrics, seed.scores))
    return pd.DataFrame(rows, columns=["scope"] + TABLE_COLUMNS)


def _fmt(value: Optional[float], pattern: str) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "-"
    return pattern.format(value)


def markdown_table(report: AggregateReport, label: str) -> str:
    header = ["Method", "F", "F_saf", "F_suc", "F_comf", "F_traj", "F_effic",
              "M_sr (%)", "M_cr (%)", "M_tr (%)", "M_dr (%)", "M_md (m)", "M_cdr (%)", "M_at (s)"]
    s, m = report.scores, report.pooled
    cells = [label] + [_fmt(v, "{:.3f}") for v in (s.comprehensive, s.f_saf, s.f_suc, s.f_comf, s.f_traj)]
    cells.append(_fmt(s.f_effic, "{:.3f}") if s.efficiency_defined else "-")
    cells += [_fmt(v * 100.0, "{:.1f}") for v in (m.sr, m.cr, m.tr, m.dr)]
    cells.append(_fmt(m.md, "{:.3f}"))
    cells.append(_fmt(m.cdr * 100.0, "{:.2f}"))
    cells.append(_fmt(m.at, "{:.3f}"))
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
        "| " + " | ".join(cells) + " |",
    ]
    return "\n".join(lines) + "\n"


def emit_report(report: AggregateReport, fmt: str) -> bytes:
    if fmt == "json":
        return (dump_json(report.to_dict()) + "\n").encode("utf-8")
    if fmt == "csv":
        return report_frame(report).to_csv(index=False, lineterminator="\n").encode("utf-8")
    if fmt == "markdown":
        label = str(report.parameters.get("policy", "policy"))
        return markdown_table(report, label).encode("utf-8")
    raise ValueError(f"Unbekanntes Reportformat: {fmt} (erlaubt: {REPORT_FORMATS})")


def log_lines(ep: int, log: EpisodeLog) -> List[Dict[str, object]]:
    return [
        {
            "ep": ep,
            "t": t,
            "robot": robot,
            "humans": humans,
            "r_base": r_base,
            "r_shape": r_shape,
            "d": d,
        }
        for t, robot, humans, r_base, r_shape, d in zip(
            log.times.tolist(), log.robot.tolist(), log.humans.tolist(),
            log.r_base.tolist(), log.r_shape.tolist(), log.d.tolist(),
        )
    ]


def emit_trajectory_log(records: Sequence[EpisodeRecord]) -> bytes:
    """JSONL, eine Zeile je Zeitschritt; ``ep`` ist die Position in (seed, index)-Ordnung."""
    ordered = sorted(records, key=lambda r: (r.seed, r.index))
    objects: List[Dict[str, object]] = []
    for ep, record in enumerate(ordered):
        if record.log is None:
            continue
        objects.extend(log_lines(ep, record.log))
    return iter_lines(objects)


def log_from_frame(rows: pd.DataFrame) -> EpisodeLog:
    """Baut ein EpisodeLog aus den Zeilen einer Episode des JSONL-Logs."""
    n = len(rows)
    humans = [h if isinstance(h, list) else [] for h in rows["humans"]]
    n_humans = len(humans[0]) if humans else 0
    d = pd.to_numeric(rows["d"], errors="coerce").fillna(np.inf).to_numpy(dtype=float)
    return EpisodeLog(
        times=pd.to_numeric(rows["t"], errors="coerce").to_numpy(dtype=float),
        robot=np.array(rows["robot"].tolist(), dtype=float).reshape(n, 2),
        humans=np.array(humans, dtype=float).reshape(n, n_humans, 2),
        r_base=pd.to_numeric(rows["r_base"], errors="coerce").fillna(0.0).to_numpy(dtype=float),
        r_shape=pd.to_numeric(rows["r_shape"], errors="coerce").fillna(0.0).to_numpy(dtype=float),
        d=d,
    )


def emit_plot(log: EpisodeLog, cfg: ScenarioConfig, title: Optional[str] = None) -> bytes:
    """SVG mit Roboter- und Menschenpfaden, Start/Ziel und Diskomfortkreisen."""
    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        for i in range(log.humans.shape[1]):
            path = log.humans[:, i, :]
            ax.plot(path[:, 0], path[:, 1], color="tab:gray", lw=0.8, alpha=0.7)
            ax.plot(path[0, 0], path[0, 1], "o", color="tab:gray", ms=3)
        ax.plot(log.robot[:, 0], log.robot[:, 1], color="tab:red", lw=1.5, label="robot")
        ax.plot(*cfg.robot_start, "s", color="tab:green", ms=6, label="start")
        ax.plot(*cfg.robot_goal, "*", color="tab:blue", ms=10, label="goal")

        k = log.closest_step()
        radius = cfg.human_radius + cfg.discomfort_dist
        for x, y in log.humans[k].tolist():
            ax.add_patch(plt.Circle((x, y), radius, fill=False, ls="--", lw=0.8, color="tab:orange"))
        rx, ry = log.robot[k]
        ax.add_patch(plt.Circle((rx, ry), cfg.robot_radius, fill=False, color="tab:red"))

        ax.set_aspect("equal", "box")
        lim = max(cfg.circle_radius, abs(cfg.robot_start[1]), abs(cfg.robot_goal[1])) + 1.5
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_title(title or f"t = {log.times[-1]:.2f} s, closest approach at t = {log.times[k]:.2f} s")
        ax.legend(loc="upper right", fontsize=8)
        buffer = io.BytesIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return buffer.getvalue()


def shared_human_tracks(logs: Sequence[EpisodeLog]) -> np.ndarray:
    """Laengste Menschenspur; die gemeinsamen Praefixe aller Logs muessen uebereinstimmen."""
    if not logs:
        raise ValueError("Mindestens ein Log noetig")
    longest = max(logs, key=lambda log: log.humans.shape[0]).humans
    for log in logs:
        steps = log.humans.shape[0]
        if log.humans.shape[1:] != longest.shape[1:] or not np.allclose(log.humans, longest[:steps]):
            raise ValueError("Menschenspuren der Policies weichen voneinander ab")
    return longest


def emit_comparison_plot(
    records_by_policy: Mapping[str, EpisodeRecord],
    cfg: ScenarioConfig,
    title: Optional[str] = None,
) -> bytes:
    """SVG einer Episode mit einem Roboterpfad je Policy ueber denselben Menschenspuren."""
    logs = {label: record.log for label, record in records_by_policy.items() if record.log is not None}
    if not logs:
        raise ValueError("Keine Episode mit Log zum Vergleichen")
    humans = shared_human_tracks(list(logs.values()))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]

    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        for i in range(humans.shape[1]):
            path = humans[:, i, :]
            ax.plot(path[:, 0], path[:, 1], color="tab:gray", lw=0.8, alpha=0.7)
            ax.plot(path[0, 0], path[0, 1], "o", color="tab:gray", ms=3)
        for n, (label, log) in enumerate(logs.items()):
            record = records_by_policy[label]
            ax.plot(
                log.robot[:, 0], log.robot[:, 1], color=colors[n % len(colors)], lw=1.5,
                label=f"{label} ({record.outcome})",
            )
        ax.plot(*cfg.robot_start, "s", color="black", ms=6, label="start")
        ax.plot(*cfg.robot_goal, "*", color="black", ms=10, label="goal")

        ax.set_aspect("equal", "box")
        lim = max(cfg.circle_radius, abs(cfg.robot_start[1]), abs(cfg.robot_goal[1])) + 1.5
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        first = next(iter(records_by_policy.values()))
        ax.set_title(title or f"seed {first.seed}, episode {first.index}")
        ax.legend(loc="upper right", fontsize=8)
        buffer = io.BytesIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return buffer.getvalue()
