"""Diskrete Kruemmungsgeometrie fuer Roboterpfade.

Berechnet die Umkreiskruemmung aus drei Punkten, die Kruemmungsfenster aus
vier aufeinanderfolgenden Punkten, den Anteil der C2-Unstetigkeiten (M_cdr)
und die weiche Glattheitsstrafe, die im Reward-Shaping verwendet wird.

Alle Funktionen sind rein und arbeiten auf unveraenderlichen Eingaben.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

DEFAULT_TAU = math.log(2.0)  # entspricht tau_c = 0.5
DEFAULT_EPS_LEN = 1e-6  # Segmente kuerzer als das gelten als entartet


class InsufficientPoints(ValueError):
    """Ein Pfad hat weniger als vier Punkte."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Punkt mit nicht-endlichen Koordinaten: ({self.x}, {self.y})")


PointLike = Union[Point2, Sequence[float]]


def _xy(p: PointLike) -> Tuple[float, float]:
    if isinstance(p, Point2):
        return p.x, p.y
    return float(p[0]), float(p[1])


@dataclass(frozen=True)
class Trajectory:
    """Geordnete Folge von 2D-Positionen mit gleichmaessigem Zeitschritt ``dt``."""

    points: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("Trajektorie enthaelt NaN oder Inf")
        if not self.dt > 0:
            raise ValueError(f"dt muss positiv sein, erhalten: {self.dt}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points: Sequence[PointLike], dt: float) -> "Trajectory":
        return cls(np.array([_xy(p) for p in points], dtype=float).reshape(-1, 2), dt)

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class CurvatureWindow:
    kappa1: float
    kappa2: float
    delta: float
    degenerate: bool


@dataclass(frozen=True)
class SmoothnessConfig:
    tau: float = DEFAULT_TAU
    eps_len: float = DEFAULT_EPS_LEN

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau muss positiv sein, erhalten: {self.tau}")
        if not self.eps_len > 0:
            raise ValueError(f"eps_len muss positiv sein, erhalten: {self.eps_len}")


def circumcircle_curvature(
    p1: PointLike, p2: PointLike, p3: PointLike, eps_len: float = DEFAULT_EPS_LEN
) -> float:
    """Kehrwert des Umkreisradius durch drei Punkte; 0 bei entarteten Eingaben."""
    x1, y1 = _xy(p1)
    x2, y2 = _xy(p2)
    x3, y3 = _xy(p3)
    d12 = math.hypot(x2 - x1, y2 - y1)
    d23 = math.hypot(x3 - x2, y3 - y2)
    d13 = math.hypot(x3 - x1, y3 - y1)
    if d12 < eps_len or d23 < eps_len or d13 < eps_len:
        return 0.0
    cross = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
    return 2.0 * abs(cross) / (d12 * d23 * d13)


def _triple_curvatures(points: np.ndarray, eps_len: float) -> Tuple[np.ndarray, np.ndarray]:
    """Kruemmung aller Punkt-Tripel (N-2 Werte) plus Maske fuer entartete Tripel."""
    a, b, c = points[:-2], points[1:-1], points[2:]
    d12 = np.hypot(*(b - a).T)
    d23 = np.hypot(*(c - b).T)
    d13 = np.hypot(*(c - a).T)
    degenerate = (d12 < eps_len) | (d23 < eps_len) | (d13 < eps_len)
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    denom = np.where(degenerate, 1.0, d12 * d23 * d13)
    kappa = np.where(degenerate, 0.0, 2.0 * np.abs(cross) / denom)
    return kappa, degenerate


def curvature_windows(traj: Trajectory, cfg: SmoothnessConfig) -> List[CurvatureWindow]:
    """Liefert genau N-3 Vierpunkt-Fenster mit kappa1, kappa2 und |kappa2 - kappa1|."""
    n = len(traj)
    if n < 4:
        raise InsufficientPoints(f"Mindestens 4 Punkte noetig, erhalten: {n}")
    kappa, degenerate = _triple_curvatures(traj.points, cfg.eps_len)
    windows: List[CurvatureWindow] = []
    for i in range(n - 3):
        k1, k2 = float(kappa[i]), float(kappa[i + 1])
        windows.append(
            CurvatureWindow(
                kappa1=k1,
                kappa2=k2,
                delta=abs(k2 - k1),
                degenerate=bool(degenerate[i] or degenerate[i + 1]),
            )
        )
    return windows


def count_discontinuities(windows: Sequence[CurvatureWindow], tau: float) -> int:
    # entartete Fenster zaehlen nie als Bruch, bleiben aber im Nenner
    return sum(1 for w in windows if not w.degenerate and w.delta >= tau)


def discontinuity_ratio(traj: Trajectory, cfg: SmoothnessConfig) -> float:
    """M_cdr: Anteil der nicht-entarteten Fenster mit |delta kappa| >= tau an allen N-3 Fenstern."""
    windows = curvature_windows(traj, cfg)
    return count_discontinuities(windows, cfg.tau) / len(windows)


def windows_frame(traj: Trajectory, cfg: SmoothnessConfig) -> pd.DataFrame:
    """Fenster als Tabelle (fuer die CLI-Ausgabe)."""
    windows = curvature_windows(traj, cfg)
    frame = pd.DataFrame(
        {
            "window": np.arange(len(windows)),
            "kappa1": [w.kappa1 for w in windows],
            "kappa2": [w.kappa2 for w in windows],
            "delta": [w.delta for w in windows],
            "degenerate": [w.degenerate for w in windows],
        }
    )
    frame["discontinuous"] = (~frame["degenerate"]) & (frame["delta"] >= cfg.tau)
    return frame


def smoothness_penalty(delta_kappa: float, lam: float = 1.0, tau_c: float = 0.5) -> float:
    """Weiche Exponentialstrafe: lam * (1 - exp(-|dk|)), nur falls dieser Wert tau_c uebersteigt."""
    if not lam > 0:
        raise ValueError(f"lambda muss positiv sein, erhalten: {lam}")
    if not 0.0 <= tau_c < 1.0:
        raise ValueError(f"tau_c muss in [0, 1) liegen, erhalten: {tau_c}")
    # m > tau_c  <=>  |dk| > -ln(1 - tau_c)
    if abs(delta_kappa) <= -math.log(1.0 - tau_c):
        return 0.0
    return lam * (1.0 - math.exp(-abs(delta_kappa)))


def last_window_delta(points: Sequence[PointLike], eps_len: float = DEFAULT_EPS_LEN) -> float:
    """|delta kappa| der letzten vier Punkte; 0 wenn das Fenster entartet ist."""
    if len(points) < 4:
        raise InsufficientPoints(f"Mindestens 4 Punkte noetig, erhalten: {len(points)}")
    p0, p1, p2, p3 = points[-4:]
    xy = [_xy(p) for p in (p0, p1, p2, p3)]
    for a, b in zip(xy, xy[1:]):
        if math.hypot(b[0] - a[0], b[1] - a[1]) < eps_len:
            return 0.0
    if math.hypot(xy[2][0] - xy[0][0], xy[2][1] - xy[0][1]) < eps_len:
        return 0.0
    if math.hypot(xy[3][0] - xy[1][0], xy[3][1] - xy[1][1]) < eps_len:
        return 0.0
    k1 = circumcircle_curvature(xy[0], xy[1], xy[2], eps_len)
    k2 = circumcircle_curvature(xy[1], xy[2], xy[3], eps_len)
    return abs(k2 - k1)
