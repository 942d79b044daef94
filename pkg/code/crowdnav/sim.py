"""Crowd-Navigation-Umgebung: Weltzustand, Szenarien, Menschenbewegung, Rewards.

Ein Roboter (holonom, Geschwindigkeitssteuerung) faehrt von ``robot_start``
nach ``robot_goal`` durch eine Menge von Menschen auf einem Kreis. Die
Menschen bewegen sich mit ORCA oder dem Social-Force-Modell und sehen den
Roboter nicht. Der Zufallsstrom der Welt wird nur von den Menschen verbraucht.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .config import ScenarioConfig
from .orca import AgentState, clamp_speed, orca_velocity
from .social_force import sfm_velocity
from .trajmetric import DEFAULT_EPS_LEN, last_window_delta, smoothness_penalty

logger = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 10_000
HEADING_MIN_SPEED = 1e-6

_MASK64 = (1 << 64) - 1


class PlacementFailure(RuntimeError):
    """Rejection-Sampling fand keine ueberlappungsfreie Startaufstellung."""


class SteppedTerminalEpisode(RuntimeError):
    """``step`` wurde auf einer bereits beendeten Episode aufgerufen."""


@dataclass
class RobotState:
    px: float
    py: float
    vx: float
    vy: float
    gx: float
    gy: float
    v_max: float
    theta: float
    rho: float

    @property
    def position(self) -> Tuple[float, float]:
        return (self.px, self.py)


@dataclass
class HumanAgent:
    px: float
    py: float
    vx: float
    vy: float
    gx: float
    gy: float
    pref_speed: float
    rho: float
    policy_kind: str = "orca"

    @property
    def position(self) -> Tuple[float, float]:
        return (self.px, self.py)

    def kinematic(self) -> AgentState:
        return AgentState(self.px, self.py, self.vx, self.vy, self.rho)


@dataclass(frozen=True)
class ObservedHuman:
    """Beobachtbarer Teil eines Menschen; ``hid`` bleibt intern (Geschwindigkeitsschaetzung)."""

    hid: int
    px: float
    py: float
    rho: float


@dataclass(frozen=True)
class Observation:
    robot: RobotState
    humans: Tuple[ObservedHuman, ...]
    time: float


@dataclass(frozen=True)
class Action:
    vx: float
    vy: float

    def clamped(self, v_max: float) -> "Action":
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise ValueError(f"Aktion mit nicht-endlichen Werten: ({self.vx}, {self.vy})")
        vx, vy = clamp_speed((self.vx, self.vy), v_max)
        return Action(vx, vy)


@dataclass(frozen=True)
class StepOutcome:
    observation: Observation
    reward_base: float
    reward_shaping: float
    reward_total: float
    d_min: float
    terminal: str


@dataclass
class WorldState:
    cfg: ScenarioConfig
    seed: int
    robot: Optional[RobotState]
    humans: List[HumanAgent]
    rng: np.random.Generator
    steps: int = 0
    terminal: str = "none"
    robot_path: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def time(self) -> float:
        return self.steps * self.cfg.dt

    def human_positions(self) -> np.ndarray:
        if not self.humans:
            return np.empty((0, 2))
        return np.array([[h.px, h.py] for h in self.humans], dtype=float)


def episode_seed(seed: int, index: int) -> int:
    """Leitet den Episodenseed per splitmix64 aus (seed, index) ab."""
    z = ((seed & _MASK64) * 0x9E3779B97F4A7C15 + (index & _MASK64) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _point_on_circle(rng: np.random.Generator, radius: float) -> Tuple[float, float]:
    angle = rng.random() * 2.0 * math.pi
    return (radius * math.cos(angle), radius * math.sin(angle))


def _clear_of(point: Tuple[float, float], others: np.ndarray, others_rho: np.ndarray,
              rho: float, margin: float) -> bool:
    if others.shape[0] == 0:
        return True
    dist = cdist(np.array([point]), others)[0]
    return bool(np.all(dist - others_rho - rho > margin))


def generate_scenario(cfg: ScenarioConfig, seed: int) -> WorldState:
    """Kreisaufstellung mit gestoerten Winkelpositionen und antipodalen Zielen."""
    rng = np.random.default_rng(seed)
    sx, sy = cfg.robot_start
    gx, gy = cfg.robot_goal
    robot = RobotState(
        px=sx, py=sy, vx=0.0, vy=0.0, gx=gx, gy=gy,
        v_max=cfg.v_max, theta=math.atan2(gy - sy, gx - sx), rho=cfg.robot_radius,
    )

    # Startpunkte muessen frei von allen Positionen und Zielen sein
    occupied = [(sx, sy), (gx, gy)]
    occupied_rho = [cfg.robot_radius, cfg.robot_radius]
    humans: List[HumanAgent] = []
    attempts = 0
    for _ in range(cfg.n_humans):
        while True:
            attempts += 1
            if attempts > MAX_PLACEMENT_ATTEMPTS:
                raise PlacementFailure(
                    f"Keine Aufstellung fuer {cfg.n_humans} Menschen auf r={cfg.circle_radius} "
                    f"nach {MAX_PLACEMENT_ATTEMPTS} Versuchen (seed={seed})"
                )
            angle = rng.random() * 2.0 * math.pi
            noise_x = (rng.random() - 0.5) * cfg.human_pref_speed
            noise_y = (rng.random() - 0.5) * cfg.human_pref_speed
            px = cfg.circle_radius * math.cos(angle) + noise_x
            py = cfg.circle_radius * math.sin(angle) + noise_y
            candidate_goal = (-px, -py)
            arr = np.array(occupied, dtype=float)
            rho_arr = np.array(occupied_rho, dtype=float)
            if _clear_of((px, py), arr, rho_arr, cfg.human_radius, cfg.placement_margin) and \
                    _clear_of(candidate_goal, arr, rho_arr, cfg.human_radius, cfg.placement_margin):
                break
        humans.append(
            HumanAgent(
                px=px, py=py, vx=0.0, vy=0.0, gx=-px, gy=-py,
                pref_speed=cfg.human_pref_speed, rho=cfg.human_radius,
                policy_kind=cfg.human_policy,
            )
        )
        occupied.extend([(px, py), (-px, -py)])
        occupied_rho.extend([cfg.human_radius, cfg.human_radius])

    logger.debug("Szenario seed=%d: %d Menschen nach %d Versuchen", seed, len(humans), attempts)
    world = WorldState(cfg=cfg, seed=seed, robot=robot, humans=humans, rng=rng)
    world.robot_path.append((sx, sy))
    return world


def generate_humans_only(cfg: ScenarioConfig, seed: int) -> WorldState:
    """Gleiche Aufstellung wie ``generate_scenario``, aber ohne Roboter."""
    world = generate_scenario(cfg, seed)
    world.robot = None
    world.robot_path = []
    return world


def _surface_separations(robot_xy: np.ndarray, humans_xy: np.ndarray, rho_r: float,
                         rho_h: np.ndarray) -> np.ndarray:
    return cdist(robot_xy.reshape(1, 2), humans_xy)[0] - rho_h - rho_r


def min_separation(world: WorldState) -> float:
    """Kleinster Oberflaechenabstand Roboter-Mensch; +inf ohne Menschen."""
    if not world.humans or world.robot is None:
        return math.inf
    rho_h = np.array([h.rho for h in world.humans])
    seps = _surface_separations(
        np.array(world.robot.position), world.human_positions(), world.robot.rho, rho_h
    )
    return float(seps.min())


def human_min_separation(world: WorldState) -> float:
    """Kleinster Oberflaechenabstand zwischen zwei Menschen; +inf bei weniger als zwei."""
    if len(world.humans) < 2:
        return math.inf
    rho = np.array([h.rho for h in world.humans])
    centre = pdist(world.human_positions())
    i, j = np.triu_indices(len(world.humans), k=1)
    return float((centre - rho[i] - rho[j]).min())


def continuous_min_separation(
    robot_before: Tuple[float, float],
    robot_after: Tuple[float, float],
    humans_before: np.ndarray,
    humans_after: np.ndarray,
    rho_r: float,
    rho_h: np.ndarray,
) -> float:
    """Minimaler Abstand ueber das ganze Intervall bei konstanter Relativgeschwindigkeit."""
    if humans_before.shape[0] == 0:
        return math.inf
    rel0 = humans_before - np.asarray(robot_before)
    rel1 = humans_after - np.asarray(robot_after)
    delta = rel1 - rel0
    length_sq = np.einsum("ij,ij->i", delta, delta)
    safe = np.where(length_sq > 0.0, length_sq, 1.0)
    s = np.clip(-np.einsum("ij,ij->i", rel0, delta) / safe, 0.0, 1.0)
    s = np.where(length_sq > 0.0, s, 0.0)
    closest = rel0 + s[:, None] * delta
    return float((np.hypot(closest[:, 0], closest[:, 1]) - rho_h - rho_r).min())


def base_reward(d_t: float, reached_goal: bool) -> float:
    """Kollision -0.25, Ziel +1, Naehe -0.1 + d/2 unter 0.2 m, sonst 0."""
    if d_t < 0.0:
        return -0.25
    if reached_goal:
        return 1.0
    if d_t < 0.2:
        return -0.1 + d_t / 2.0
    return 0.0


def reassign_goal(human: HumanAgent, rng: np.random.Generator, radius: float) -> None:
    human.gx, human.gy = _point_on_circle(rng, radius)


def maybe_switch_goal(human: HumanAgent, rng: np.random.Generator, p: float, radius: float) -> bool:
    """Zieht genau eine Zufallszahl; mit Wahrscheinlichkeit ``p`` neues Ziel."""
    if rng.random() < p:
        reassign_goal(human, rng, radius)
        return True
    return False


def _human_pref_velocity(human: HumanAgent, dt: float) -> Tuple[float, float]:
    # auf dem Ziel anhalten statt darueber hinaus zu laufen
    return clamp_speed(((human.gx - human.px) / dt, (human.gy - human.py) / dt), human.pref_speed)


def _human_velocities(world: WorldState) -> List[Tuple[float, float]]:
    cfg = world.cfg
    states = [h.kinematic() for h in world.humans]
    orca_params = cfg.human_orca_params()
    sfm_params = cfg.human_sfm_params()
    velocities = []
    for i, human in enumerate(world.humans):
        neighbors = states[:i] + states[i + 1:]
        if human.policy_kind == "sfm":
            vel = sfm_velocity(
                states[i], neighbors, sfm_params, (human.gx, human.gy), human.pref_speed, cfg.dt
            )
        else:
            vel = orca_velocity(
                states[i], neighbors, orca_params, _human_pref_velocity(human, cfg.dt), cfg.dt
            )
        velocities.append(vel)
    return velocities


def _advance_humans(world: WorldState) -> None:
    cfg = world.cfg
    # Geschwindigkeiten aller Menschen aus dem Zustand zu Beginn des Schritts
    velocities = _human_velocities(world)
    for human, (vx, vy) in zip(world.humans, velocities):
        human.vx, human.vy = vx, vy
        human.px += vx * cfg.dt
        human.py += vy * cfg.dt
    for human in world.humans:
        if math.hypot(human.gx - human.px, human.gy - human.py) < human.rho:
            reassign_goal(human, world.rng, cfg.circle_radius)
        else:
            maybe_switch_goal(human, world.rng, cfg.goal_switch_prob, cfg.circle_radius)


def step_humans(world: WorldState) -> None:
    """Bewegt nur die Menschen um einen Zeitschritt (Roboter unsichtbar oder abwesend)."""
    _advance_humans(world)
    world.steps += 1


def observe(world: WorldState) -> Observation:
    robot = world.robot
    if robot is None:
        raise ValueError("Beobachtung ohne Roboter nicht definiert")
    visible = []
    for hid, human in enumerate(world.humans):
        if math.hypot(human.px - robot.px, human.py - robot.py) <= world.cfg.sensing_range:
            visible.append(ObservedHuman(hid=hid, px=human.px, py=human.py, rho=human.rho))
    return Observation(robot=replace(robot), humans=tuple(visible), time=world.time)


def shaping_reward(world: WorldState) -> float:
    """-w_smooth * Kruemmungsstrafe der letzten vier Roboterpositionen (sonst 0)."""
    shaping = world.cfg.shaping
    if not shaping.enabled or len(world.robot_path) < 4:
        return 0.0
    delta = last_window_delta(world.robot_path[-4:], DEFAULT_EPS_LEN)
    penalty = smoothness_penalty(delta, shaping.lam, shaping.tau_c)
    if penalty == 0.0:
        return 0.0
    return -shaping.w_smooth * penalty


def step(world: WorldState, action: Action) -> StepOutcome:
    """Ein Zeitschritt: Menschen und Roboter bewegen sich, dann Abstand, Terminal und Reward."""
    if world.terminal != "none":
        raise SteppedTerminalEpisode(f"Episode bereits beendet ({world.terminal})")
    robot = world.robot
    if robot is None:
        raise ValueError("step braucht einen Roboter, fuer Menschen allein step_humans nutzen")
    cfg = world.cfg
    act = action.clamped(robot.v_max)

    robot_before = robot.position
    humans_before = world.human_positions()
    rho_h = np.array([h.rho for h in world.humans], dtype=float)
    d_before = min_separation(world)

    _advance_humans(world)
    robot.vx, robot.vy = act.vx, act.vy
    robot.px += act.vx * cfg.dt
    robot.py += act.vy * cfg.dt
    if math.hypot(act.vx, act.vy) > HEADING_MIN_SPEED:
        robot.theta = math.atan2(act.vy, act.vx)
    world.steps += 1
    world.robot_path.append(robot.position)

    d_after = min_separation(world)
    if cfg.continuous_separation:
        d_t = continuous_min_separation(
            robot_before, robot.position, humans_before, world.human_positions(), robot.rho, rho_h
        )
    else:
        d_t = min(d_before, d_after)

    reached_goal = math.hypot(robot.px - robot.gx, robot.py - robot.gy) < robot.rho
    if d_t < 0.0:
        terminal = "collision"
    elif reached_goal:
        terminal = "goal"
    elif world.time >= cfg.time_limit - 1e-9:
        terminal = "timeout"
    else:
        terminal = "none"
    world.terminal = terminal

    r_base = base_reward(d_t, reached_goal)
    r_shaping = shaping_reward(world)
    return StepOutcome(
        observation=observe(world),
        reward_base=r_base,
        reward_shaping=r_shaping,
        reward_total=r_base + r_shaping,
        d_min=d_t,
        terminal=terminal,
    )
