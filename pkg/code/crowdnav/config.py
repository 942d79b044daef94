"""Szenario-Konfiguration: Presets, JSON-Dateien und Flag-Overrides."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from .orca import OrcaParams
from .social_force import SfmParams

logger = logging.getLogger(__name__)

DENSITY_PRESETS = ("low", "high")
HUMAN_POLICIES = ("orca", "sfm")

# Roboter-Baselines: volles Ausweichen gegen nicht reagierende Menschen, groesserer Abstand
ROBOT_ORCA = OrcaParams(time_horizon=5.0, safety_margin=0.3, responsibility=1.0)
ROBOT_SFM = SfmParams(relaxation_time=0.5, A=8.0, B=0.8)


class ScenarioConfigError(ValueError):
    """Ungueltige oder unvollstaendige Szenario-Konfiguration."""


@dataclass(frozen=True)
class ShapingConfig:
    enabled: bool = True
    lam: float = 1.0  # Skalierung lambda der Kruemmungsstrafe
    tau_c: float = 0.5
    w_smooth: float = 0.2

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ScenarioConfigError(f"shaping.lambda muss positiv sein: {self.lam}")
        if not 0.0 <= self.tau_c < 1.0:
            raise ScenarioConfigError(f"shaping.tau_c muss in [0, 1) liegen: {self.tau_c}")
        if self.w_smooth < 0:
            raise ScenarioConfigError(f"shaping.w_smooth muss >= 0 sein: {self.w_smooth}")


@dataclass(frozen=True)
class ScenarioConfig:
    density_preset: str = "low"
    n_humans: int = 5
    circle_radius: float = 4.0
    dt: float = 0.25
    time_limit: float = 30.0
    sensing_range: float = 5.0
    robot_start: Tuple[float, float] = (0.0, -4.0)
    robot_goal: Tuple[float, float] = (0.0, 4.0)
    v_max: float = 1.0
    robot_radius: float = 0.3
    human_radius: float = 0.3
    human_pref_speed: float = 1.0
    goal_switch_prob: float = 0.005
    invisible_robot: bool = True
    human_policy: str = "orca"
    discomfort_dist: float = 0.5
    placement_margin: float = 0.2
    continuous_separation: bool = False
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    orca: OrcaParams = field(default_factory=OrcaParams)
    sfm: SfmParams = field(default_factory=SfmParams)
    robot_orca: OrcaParams = ROBOT_ORCA
    robot_sfm: SfmParams = ROBOT_SFM

    def __post_init__(self) -> None:
        object.__setattr__(self, "robot_start", _pair(self.robot_start, "robot_start"))
        object.__setattr__(self, "robot_goal", _pair(self.robot_goal, "robot_goal"))
        if self.density_preset not in DENSITY_PRESETS:
            raise ScenarioConfigError(f"Unbekanntes Preset: {self.density_preset}")
        if self.human_policy not in HUMAN_POLICIES:
            raise ScenarioConfigError(f"Unbekannte Menschen-Policy: {self.human_policy}")
        if not self.dt > 0 or not self.time_limit > 0:
            raise ScenarioConfigError("dt und time_limit muessen positiv sein")
        if self.n_humans < 0:
            raise ScenarioConfigError(f"n_humans muss >= 0 sein: {self.n_humans}")
        for name in ("circle_radius", "sensing_range", "v_max", "robot_radius",
                     "human_radius", "human_pref_speed"):
            if not getattr(self, name) > 0:
                raise ScenarioConfigError(f"{name} muss positiv sein: {getattr(self, name)}")
        if not 0.0 <= self.goal_switch_prob <= 1.0:
            raise ScenarioConfigError(f"goal_switch_prob ausserhalb [0, 1]: {self.goal_switch_prob}")
        if self.discomfort_dist < 0 or self.placement_margin < 0:
            raise ScenarioConfigError("discomfort_dist und placement_margin muessen >= 0 sein")
        if not self.invisible_robot:
            raise ScenarioConfigError("Nur der invisible-robot-Modus wird unterstuetzt")

    @property
    def optimal_time(self) -> float:
        """T*: Luftlinie Start-Ziel bei Maximalgeschwindigkeit."""
        sx, sy = self.robot_start
        gx, gy = self.robot_goal
        return math.hypot(gx - sx, gy - sy) / self.v_max

    def human_orca_params(self) -> OrcaParams:
        return replace(self.orca, max_speed=self.human_pref_speed)

    def human_sfm_params(self) -> SfmParams:
        return replace(self.sfm, max_speed=self.human_pref_speed)

    def robot_orca_params(self) -> OrcaParams:
        return replace(self.robot_orca, max_speed=self.v_max)

    def robot_sfm_params(self) -> SfmParams:
        return replace(self.robot_sfm, max_speed=self.v_max)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["robot_start"] = list(self.robot_start)
        data["robot_goal"] = list(self.robot_goal)
        shaping = data.pop("shaping")
        data["shaping"] = {
            "enabled": shaping["enabled"],
            "lambda": shaping["lam"],
            "tau_c": shaping["tau_c"],
            "w_smooth": shaping["w_smooth"],
        }
        for section in ("orca", "sfm", "robot_orca", "robot_sfm"):
            data[section].pop("max_speed")
        return data


def _pair(value: Any, name: str) -> Tuple[float, float]:
    try:
        x, y = value
        pair = (float(x), float(y))
    except (TypeError, ValueError) as exc:
        raise ScenarioConfigError(f"{name} muss ein Punkt [x, y] sein: {value!r}") from exc
    if not all(math.isfinite(c) for c in pair):
        raise ScenarioConfigError(f"{name} enthaelt nicht-endliche Werte: {value!r}")
    return pair


def preset(name: str) -> ScenarioConfig:
    """Eingebaute Presets: ``low`` (5 Menschen, r=4 m) und ``high`` (20 Menschen, r=6 m)."""
    if name == "low":
        return ScenarioConfig(density_preset="low", n_humans=5, circle_radius=4.0)
    if name == "high":
        return ScenarioConfig(density_preset="high", n_humans=20, circle_radius=6.0)
    raise ScenarioConfigError(f"Unbekanntes Preset: {name}")


def _nested(cls, current, raw: Mapping[str, Any], section: str, rename: Optional[Dict[str, str]] = None):
    rename = rename or {}
    allowed = {f.name for f in fields(cls)} - {"max_speed"}
    values = {}
    for key, value in raw.items():
        attr = rename.get(key, key)
        if attr not in allowed:
            raise ScenarioConfigError(f"Unbekanntes Feld {section}.{key}")
        values[attr] = value
    try:
        return replace(current, **values)
    except (TypeError, ValueError) as exc:
        raise ScenarioConfigError(f"Ungueltiger Abschnitt {section}: {exc}") from exc


def config_from_dict(data: Mapping[str, Any], base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Wendet ein JSON-Objekt (Feldnamen wie ScenarioConfig) auf ein Preset an."""
    if base is None:
        base = preset(str(data.get("density_preset", "low")))
    top_level = {f.name for f in fields(ScenarioConfig)}
    values: Dict[str, Any] = {}
    for key, value in data.items():
        if key not in top_level:
            raise ScenarioConfigError(f"Unbekanntes Feld {key}")
        if key == "shaping":
            values[key] = _nested(ShapingConfig, base.shaping, value, "shaping", {"lambda": "lam"})
        elif key in ("orca", "robot_orca"):
            values[key] = _nested(OrcaParams, getattr(base, key), value, key)
        elif key in ("sfm", "robot_sfm"):
            values[key] = _nested(SfmParams, getattr(base, key), value, key)
        else:
            values[key] = value
    try:
        return replace(base, **values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioConfigError):
            raise
        raise ScenarioConfigError(str(exc)) from exc


def load_scenario_config(path: Path, preset_name: Optional[str] = None) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioConfigError(f"Konfigurationsdatei nicht gefunden: {path}")
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ScenarioConfigError(f"{path}: kein gueltiges JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioConfigError(f"{path}: JSON-Objekt erwartet")
    name = preset_name or str(data.get("density_preset", "low"))
    logger.info("Lade Szenario-Konfiguration %s (Preset %s)", path, name)
    try:
        return config_from_dict(data, preset(name))
    except ScenarioConfigError as exc:
        raise ScenarioConfigError(f"{path}: {exc}") from exc


def apply_overrides(cfg: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    """Flag-Overrides (None = nicht gesetzt) haben Vorrang vor Dateiwerten."""
    shaping_keys = {"lam", "tau_c", "w_smooth", "enabled"}
    shaping_values = {k: v for k, v in overrides.items() if k in shaping_keys and v is not None}
    other = {k: v for k, v in overrides.items() if k not in shaping_keys and v is not None}
    shaping = replace(cfg.shaping, **shaping_values) if shaping_values else cfg.shaping
    return replace(cfg, shaping=shaping, **other)
