"""Optimal Reciprocal Collision Avoidance (ORCA) in 2D.

Jeder Nachbar erzeugt eine Halbebene zulaessiger Geschwindigkeiten; der Agent
waehlt die Geschwindigkeit, die seiner Wunschgeschwindigkeit am naechsten liegt
und in allen Halbebenen sowie im Geschwindigkeitskreis liegt. Haben die
Halbebenen keinen gemeinsamen Punkt, minimiert das Ersatzprogramm die groesste
Verletzung.

Vektoren sind einfache ``(x, y)``-Tupel; der Loeser laeuft einmal je Agent und
Schritt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

Vec = Tuple[float, float]

RVO_EPSILON = 1e-5


class Line(NamedTuple):
    """Gerichtete Gerade; zulaessige Geschwindigkeiten liegen links davon (oder darauf)."""

    point: Vec
    direction: Vec


@dataclass(frozen=True)
class AgentState:
    px: float
    py: float
    vx: float
    vy: float
    radius: float

    @property
    def position(self) -> Vec:
        return (self.px, self.py)

    @property
    def velocity(self) -> Vec:
        return (self.vx, self.vy)


@dataclass(frozen=True)
class OrcaParams:
    time_horizon: float = 5.0
    neighbor_dist: float = 10.0
    max_speed: float = 1.0
    max_neighbors: int = 10
    safety_margin: float = 0.01  # wird jedem Radius zugeschlagen
    responsibility: float = 0.5  # Anteil am Ausweichen (0.5 = reziprok)

    def __post_init__(self) -> None:
        if not (self.time_horizon > 0 and self.neighbor_dist > 0 and self.max_speed > 0):
            raise ValueError(f"ORCA-Parameter muessen positiv sein: {self}")
        if self.max_neighbors < 1 or self.safety_margin < 0 or not 0.0 < self.responsibility <= 1.0:
            raise ValueError(f"Ungueltige ORCA-Parameter: {self}")


def _det(a: Vec, b: Vec) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _dot(a: Vec, b: Vec) -> float:
    return a[0] * b[0] + a[1] * b[1]


def _sub(a: Vec, b: Vec) -> Vec:
    return (a[0] - b[0], a[1] - b[1])


def _add(a: Vec, b: Vec) -> Vec:
    return (a[0] + b[0], a[1] + b[1])


def _scale(a: Vec, s: float) -> Vec:
    return (a[0] * s, a[1] * s)


def _abs_sq(a: Vec) -> float:
    return a[0] * a[0] + a[1] * a[1]


def _normalize(a: Vec) -> Vec:
    length = math.sqrt(_abs_sq(a))
    return (a[0] / length, a[1] / length)


def clamp_speed(v: Vec, max_speed: float) -> Vec:
    """Skaliert ``v`` auf hoechstens ``max_speed``, Richtung bleibt erhalten."""
    speed_sq = _abs_sq(v)
    if speed_sq <= max_speed * max_speed:
        return (float(v[0]), float(v[1]))
    speed = math.sqrt(speed_sq)
    return (v[0] * max_speed / speed, v[1] * max_speed / speed)


def violates(line: Line, v: Vec, tol: float = 0.0) -> bool:
    return _det(line.direction, _sub(line.point, v)) > tol


def orca_lines(
    agent: AgentState, neighbors: Sequence[AgentState], params: OrcaParams, dt: float
) -> List[Line]:
    """Halbebenen der Nachbarn innerhalb ``neighbor_dist`` (naechste zuerst)."""
    inv_horizon = 1.0 / params.time_horizon
    inv_dt = 1.0 / dt
    pos = agent.position
    vel = agent.velocity

    candidates = []
    for idx, other in enumerate(neighbors):
        rel_pos = _sub(other.position, pos)
        dist_sq = _abs_sq(rel_pos)
        if dist_sq <= params.neighbor_dist * params.neighbor_dist:
            candidates.append((dist_sq, idx, other))
    candidates.sort(key=lambda c: (c[0], c[1]))

    lines: List[Line] = []
    for dist_sq, _, other in candidates[: params.max_neighbors]:
        rel_pos = _sub(other.position, pos)
        rel_vel = _sub(vel, other.velocity)
        combined_radius = agent.radius + other.radius + 2.0 * params.safety_margin
        combined_radius_sq = combined_radius * combined_radius

        if dist_sq > combined_radius_sq:
            # noch keine Ueberlappung: Projektion auf den abgeschnittenen VO-Kegel
            w = _sub(rel_vel, _scale(rel_pos, inv_horizon))
            w_length_sq = _abs_sq(w)
            dot1 = _dot(w, rel_pos)
            if dot1 < 0.0 and dot1 * dot1 > combined_radius_sq * w_length_sq:
                w_length = math.sqrt(w_length_sq)
                unit_w = _scale(w, 1.0 / w_length)
                direction = (unit_w[1], -unit_w[0])
                u = _scale(unit_w, combined_radius * inv_horizon - w_length)
            else:
                leg = math.sqrt(dist_sq - combined_radius_sq)
                if _det(rel_pos, w) >= 0.0:
                    # linker Schenkel; Gleichstand wird gegen den Uhrzeigersinn aufgeloest
                    direction = (
                        (rel_pos[0] * leg - rel_pos[1] * combined_radius) / dist_sq,
                        (rel_pos[0] * combined_radius + rel_pos[1] * leg) / dist_sq,
                    )
                else:
                    direction = (
                        -(rel_pos[0] * leg + rel_pos[1] * combined_radius) / dist_sq,
                        -(-rel_pos[0] * combined_radius + rel_pos[1] * leg) / dist_sq,
                    )
                u = _sub(_scale(direction, _dot(rel_vel, direction)), rel_vel)
        else:
            # bereits ueberlappend: innerhalb eines Zeitschritts aufloesen
            w = _sub(rel_vel, _scale(rel_pos, inv_dt))
            w_length = math.sqrt(_abs_sq(w))
            if w_length == 0.0:
                unit_w = (1.0, 0.0)
            else:
                unit_w = _scale(w, 1.0 / w_length)
            direction = (unit_w[1], -unit_w[0])
            u = _scale(unit_w, combined_radius * inv_dt - w_length)

        lines.append(Line(_add(vel, _scale(u, params.responsibility)), direction))
    return lines


def _linear_program1(
    lines: Sequence[Line],
    line_no: int,
    radius: float,
    opt_velocity: Vec,
    direction_opt: bool,
) -> Tuple[bool, Vec]:
    line = lines[line_no]
    dot_product = _dot(line.point, line.direction)
    discriminant = dot_product * dot_product + radius * radius - _abs_sq(line.point)
    if discriminant < 0.0:
        return False, (0.0, 0.0)

    sqrt_disc = math.sqrt(discriminant)
    t_left = -dot_product - sqrt_disc
    t_right = -dot_product + sqrt_disc

    for i in range(line_no):
        denominator = _det(line.direction, lines[i].direction)
        numerator = _det(lines[i].direction, _sub(line.point, lines[i].point))
        if abs(denominator) <= RVO_EPSILON:
            if numerator < 0.0:
                return False, (0.0, 0.0)
            continue
        t = numerator / denominator
        if denominator >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, (0.0, 0.0)

    if direction_opt:
        if _dot(opt_velocity, line.direction) > 0.0:
            return True, _add(line.point, _scale(line.direction, t_right))
        return True, _add(line.point, _scale(line.direction, t_left))

    t = _dot(line.direction, _sub(opt_velocity, line.point))
    if t < t_left:
        t = t_left
    elif t > t_right:
        t = t_right
    return True, _add(line.point, _scale(line.direction, t))


def _linear_program2(
    lines: Sequence[Line], radius: float, opt_velocity: Vec, direction_opt: bool
) -> Tuple[int, Vec]:
    if direction_opt:
        result = _scale(opt_velocity, radius)
    elif _abs_sq(opt_velocity) > radius * radius:
        result = _scale(_normalize(opt_velocity), radius)
    else:
        result = opt_velocity

    for i, line in enumerate(lines):
        if _det(line.direction, _sub(line.point, result)) > 0.0:
            ok, candidate = _linear_program1(lines, i, radius, opt_velocity, direction_opt)
            if not ok:
                return i, result
            result = candidate
    return len(lines), result


def _linear_program3(
    lines: Sequence[Line], begin_line: int, radius: float, result: Vec
) -> Vec:
    distance = 0.0
    for i in range(begin_line, len(lines)):
        line_i = lines[i]
        if _det(line_i.direction, _sub(line_i.point, result)) > distance:
            proj_lines: List[Line] = []
            for j in range(i):
                line_j = lines[j]
                determinant = _det(line_i.direction, line_j.direction)
                if abs(determinant) <= RVO_EPSILON:
                    if _dot(line_i.direction, line_j.direction) > 0.0:
                        continue
                    point = _scale(_add(line_i.point, line_j.point), 0.5)
                else:
                    t = _det(line_j.direction, _sub(line_i.point, line_j.point)) / determinant
                    point = _add(line_i.point, _scale(line_i.direction, t))
                direction = _normalize(_sub(line_j.direction, line_i.direction))
                proj_lines.append(Line(point, direction))

            opt = (-line_i.direction[1], line_i.direction[0])
            fail, candidate = _linear_program2(proj_lines, radius, opt, True)
            if fail >= len(proj_lines):
                result = candidate
            distance = _det(line_i.direction, _sub(line_i.point, result))
    return result


def solve_lines(lines: Sequence[Line], pref_vel: Vec, max_speed: float) -> Tuple[Vec, bool]:
    """Naechste zulaessige Geschwindigkeit; Flag False, wenn das Ersatzprogramm noetig war."""
    fail, result = _linear_program2(lines, max_speed, pref_vel, False)
    if fail < len(lines):
        return _linear_program3(lines, fail, max_speed, result), False
    return result, True


def orca_velocity(
    agent: AgentState,
    neighbors: Sequence[AgentState],
    params: OrcaParams,
    pref_vel: Vec,
    dt: float = 0.25,
) -> Vec:
    """ORCA-Geschwindigkeit fuer ``agent`` bei bekannten Nachbarzustaenden."""
    lines = orca_lines(agent, neighbors, params, dt)
    velocity, _ = solve_lines(lines, (float(pref_vel[0]), float(pref_vel[1])), params.max_speed)
    return clamp_speed(velocity, params.max_speed)
