"""Prioritaetsgewichtete Gesamtbewertung aus fuenf normierten Teilscores."""  # Zweck der Datei

from __future__ import annotations  # Moderne Typfeatures aktivieren

import logging  # Hinweise bei Sonderfaellen
import math  # Potenzen und Endlichkeitspruefungen
from dataclasses import asdict, dataclass, field  # Konfigurationsobjekte
from typing import Dict, Mapping, Optional  # Typ-Hilfen

logger = logging.getLogger(__name__)

SCORE_KEYS = ("f_saf", "f_suc", "f_comf", "f_traj", "f_effic")  # Reihenfolge wie in den Tabellen
DENSITY_TAU_S = {"low": 0.05, "high": 0.1}  # Sicherheitsschwelle je Dichte


class InvalidWeights(ValueError):
    """Gewichte summieren nicht zu 1 oder verletzen die Prioritaetsordnung."""


class InvalidMetrics(ValueError):
    """Rohmetriken ausserhalb ihres Wertebereichs."""


@dataclass(frozen=True)
class Weights:
    w_saf: float = 0.40
    w_suc: float = 0.25
    w_comf: float = 0.15
    w_traj: float = 0.12
    w_effic: float = 0.08

    def as_tuple(self) -> tuple:
        return (self.w_saf, self.w_suc, self.w_comf, self.w_traj, self.w_effic)


def validate_weights(weights: Weights) -> None:
    values = weights.as_tuple()
    if any(w < 0 or not math.isfinite(w) for w in values):  # Negative Gewichte verboten
        raise InvalidWeights(f"Gewichte muessen >= 0 sein: {values}")
    total = sum(values)
    if abs(total - 1.0) > 1e-9:  # Summe muss 1 ergeben
        raise InvalidWeights(f"Gewichte summieren zu {total:.12g} statt 1")
    w = weights
    if not (w.w_saf > w.w_suc > w.w_comf >= w.w_traj >= w.w_effic):  # Sicherheit zuerst
        raise InvalidWeights(
            "Ordnung w_saf > w_suc > w_comf >= w_traj >= w_effic verletzt: "
            f"{values}"
        )


@dataclass(frozen=True)
class ScoringConfig:
    tau_S: float = 0.05  # Sicherheitsschwelle
    beta: float = 4.0  # Steilheit der Sicherheitskurve
    gamma: float = 10.0  # Empfindlichkeit fuer M_dr und M_cdr
    lambda_comf: float = 0.5  # Mischung der Komfort-Teilterme
    tau_md_min: float = 0.5  # Gewuenschte Mindestdistanz in Metern
    t_star: float = 8.0  # Optimale Zeit in Sekunden
    weights: Weights = field(default_factory=Weights)

    def __post_init__(self) -> None:
        for name in ("tau_S", "beta", "gamma", "tau_md_min", "t_star"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} muss positiv sein, erhalten: {value}")
        if not 0.0 <= self.lambda_comf <= 1.0:
            raise ValueError(f"lambda_comf muss in [0, 1] liegen: {self.lambda_comf}")

    @classmethod
    def for_density(cls, density: str, **overrides) -> "ScoringConfig":
        if density not in DENSITY_TAU_S:
            raise ValueError(f"Unbekannte Dichte: {density}")
        params = {"tau_S": DENSITY_TAU_S[density]}
        params.update(overrides)
        return cls(**params)

    @classmethod
    def from_dict(cls, data: Mapping, density: str = "low") -> "ScoringConfig":
        params = dict(data)
        weights = params.pop("weights", None)
        params.pop("density", None)
        unknown = set(params) - {f for f in cls.__dataclass_fields__ if f != "weights"}
        if unknown:
            raise ValueError(f"Unbekannte Scoring-Felder: {sorted(unknown)}")
        if weights is not None:
            params["weights"] = Weights(**{k: float(v) for k, v in weights.items()})
        density = data.get("density", density)
        return cls.for_density(density, **{k: v for k, v in params.items()})

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class BatchMetrics:
    sr: float  # Erfolgsrate
    cr: float  # Kollisionsrate
    tr: float  # Timeout-Rate
    at: Optional[float]  # Mittlere Zeit der Erfolge (None ohne Erfolge)
    dr: float  # Diskomfortrate
    md: Optional[float]  # Mittlere minimale Distanz (None ohne Menschen)
    cdr: float  # Mittlere Kruemmungs-Unstetigkeitsrate

    def __post_init__(self) -> None:
        for name in ("sr", "cr", "tr", "dr", "cdr"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise InvalidMetrics(f"{name} muss in [0, 1] liegen, erhalten: {value}")
        if abs(self.sr + self.cr + self.tr - 1.0) > 1e-9:
            raise InvalidMetrics(
                f"sr + cr + tr = {self.sr + self.cr + self.tr:.12g} statt 1"
            )
        if self.sr > 0 and (self.at is None or not self.at > 0):
            raise InvalidMetrics(f"at muss positiv sein wenn sr > 0, erhalten: {self.at}")
        if self.md is not None and not math.isfinite(self.md):
            raise InvalidMetrics(f"md muss endlich sein, erhalten: {self.md}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "BatchMetrics":
        def _opt(key: str) -> Optional[float]:
            value = data.get(key)
            if value is None or (isinstance(value, float) and math.isnan(value)):
                return None
            return float(value)

        try:
            return cls(
                sr=float(data["sr"]),
                cr=float(data["cr"]),
                tr=float(data["tr"]),
                at=_opt("at"),
                dr=float(data["dr"]),
                md=_opt("md"),
                cdr=float(data["cdr"]),
            )
        except KeyError as exc:
            raise InvalidMetrics(f"Metrik fehlt: {exc.args[0]}") from exc

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


@dataclass(frozen=True)
class ScoreBreakdown:
    f_saf: float
    f_suc: float
    f_comf: float
    f_traj: float
    f_effic: float
    comprehensive: float
    f_comf_dn: Optional[float] = None
    f_comf_md: Optional[float] = None
    efficiency_defined: bool = True

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def safety_score(cr: float, tau_S: float = 0.05, beta: float = 4.0) -> float:
    """F_saf = 1 / (1 + (cr / tau_S)^beta); exakt 1 bei cr=0 und 0.5 bei cr=tau_S."""
    return 1.0 / (1.0 + (cr / tau_S) ** beta)


def success_score(sr: float) -> float:
    return float(sr)


def comfort_score(
    dr: float,
    md: Optional[float],
    gamma: float = 10.0,
    lambda_comf: float = 0.5,
    tau_md_min: float = 0.5,
) -> tuple:
    """Liefert (f_comf_dn, f_comf_md, f_comf)."""
    f_dn = (1.0 - dr) ** gamma
    if md is None:  # Ohne Menschen in der Naehe gilt die Distanz als ideal
        f_md = 1.0
    else:
        f_md = min(1.0, max(0.0, md / tau_md_min))
    return f_dn, f_md, lambda_comf * f_dn + (1.0 - lambda_comf) * f_md


def trajectory_score(cdr: float, gamma: float = 10.0) -> float:
    return (1.0 - cdr) ** gamma


def efficiency_score(at: float, t_star: float) -> float:
    return min(1.0, t_star / at)


def combine_scores(scores: Mapping[str, float], weights: Weights) -> ScoreBreakdown:
    """Gewichtete Summe fuer bereits berechnete Teilscores."""
    validate_weights(weights)
    values = []
    for key in SCORE_KEYS:
        value = float(scores[key])
        if not 0.0 <= value <= 1.0:
            raise InvalidMetrics(f"{key} muss in [0, 1] liegen, erhalten: {value}")
        values.append(value)
    total = sum(w * s for w, s in zip(weights.as_tuple(), values))
    return ScoreBreakdown(*values, comprehensive=total)


def comprehensive_score(metrics: BatchMetrics, cfg: ScoringConfig) -> ScoreBreakdown:
    """Berechnet alle fuenf Teilscores und den Gesamtindex F."""
    validate_weights(cfg.weights)
    f_saf = safety_score(metrics.cr, cfg.tau_S, cfg.beta)
    f_suc = success_score(metrics.sr)
    f_dn, f_md, f_comf = comfort_score(
        metrics.dr, metrics.md, cfg.gamma, cfg.lambda_comf, cfg.tau_md_min
    )
    f_traj = trajectory_score(metrics.cdr, cfg.gamma)
    efficiency_defined = metrics.sr > 0 and metrics.at is not None
    if efficiency_defined:
        f_effic = efficiency_score(metrics.at, cfg.t_star)
    else:
        logger.warning("Keine erfolgreichen Episoden - Effizienzscore auf 0 gesetzt")
        f_effic = 0.0
    values = (f_saf, f_suc, f_comf, f_traj, f_effic)
    total = sum(w * s for w, s in zip(cfg.weights.as_tuple(), values))
    return ScoreBreakdown(
        f_saf=f_saf,
        f_suc=f_suc,
        f_comf=f_comf,
        f_traj=f_traj,
        f_effic=f_effic,
        comprehensive=total,
        f_comf_dn=f_dn,
        f_comf_md=f_md,
        efficiency_defined=efficiency_defined,
    )


def format_breakdown(breakdown: ScoreBreakdown) -> str:
    """Ausgerichtete Klartext-Tabelle fuer die Konsole."""
    rows = [("comprehensive", breakdown.comprehensive)]
    rows += [(key, getattr(breakdown, key)) for key in SCORE_KEYS]
    if breakdown.f_comf_dn is not None:
        rows.append(("f_comf_dn", breakdown.f_comf_dn))
        rows.append(("f_comf_md", breakdown.f_comf_md))
    width = max(len(name) for name, _ in rows)
    lines = [f"{'score'.ljust(width)}  value", f"{'-' * width}  -----"]
    for name, value in rows:
        lines.append(f"{name.ljust(width)}  {value:.3f}")
    if not breakdown.efficiency_defined:
        lines.append("(f_effic undefined: no successful episodes)")
    return "\n".join(lines)
