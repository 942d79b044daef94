"""Social-Force-Modell: Zielanziehung plus exponentielle Abstossung.

Ein Euler-Schritt der Geschwindigkeit mit Einheitsmasse:

    v' = clamp(v + dt * (f_goal + sum f_rep), max_speed)
    f_goal = (v_des - v) / relaxation_time
    f_rep  = A * exp((r_ij - d_ij) / B) * n_ij
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .orca import AgentState, clamp_speed

Vec = Tuple[float, float]


@dataclass(frozen=True)
class SfmParams:
    relaxation_time: float = 0.5
    A: float = 2.0
    B: float = 0.3
    max_speed: float = 1.0

    def __post_init__(self) -> None:
        if not (self.relaxation_time > 0 and self.A >= 0 and self.B > 0 and self.max_speed > 0):
            raise ValueError(f"Ungueltige SFM-Parameter: {self}")


def desired_velocity(position: Vec, goal: Vec, pref_speed: float) -> Vec:
    dx, dy = goal[0] - position[0], goal[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return (0.0, 0.0)
    return (pref_speed * dx / dist, pref_speed * dy / dist)


def repulsive_force(agent: AgentState, other: AgentState, params: SfmParams) -> Vec:
    dx, dy = agent.px - other.px, agent.py - other.py
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return (0.0, 0.0)  # keine definierte Richtung
    magnitude = params.A * math.exp((agent.radius + other.radius - dist) / params.B)
    return (magnitude * dx / dist, magnitude * dy / dist)


def sfm_velocity(
    agent: AgentState,
    neighbors: Sequence[AgentState],
    params: SfmParams,
    goal: Vec,
    pref_speed: float,
    dt: float = 0.25,
) -> Vec:
    v_des = desired_velocity(agent.position, goal, pref_speed)
    fx = (v_des[0] - agent.vx) / params.relaxation_time
    fy = (v_des[1] - agent.vy) / params.relaxation_time
    for other in neighbors:
        rx, ry = repulsive_force(agent, other, params)
        fx += rx
        fy += ry
    return clamp_speed((agent.vx + dt * fx, agent.vy + dt * fy), params.max_speed)
