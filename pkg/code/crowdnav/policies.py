"""Robot-Controller: Baselines (greedy, ORCA, SFM) und externe Policies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .config import ScenarioConfig
from .orca import AgentState, orca_velocity
from .protocol import DEFAULT_TIMEOUT, PolicyProcess, protocol_roundtrip
from .sim import Action, Observation
from .social_force import sfm_velocity

logger = logging.getLogger(__name__)

POLICY_NAMES = ("greedy", "orca", "sfm", "external")


@dataclass(frozen=True)
class PolicyKind:
    name: str
    command: Optional[str] = None

    def __post_init__(self) -> None:
        if self.name not in POLICY_NAMES:
            raise ValueError(f"Unbekannte Policy: {self.name}")
        if self.name == "external" and not (self.command and self.command.strip()):
            raise ValueError("external braucht einen Befehl: external:<cmd>")

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        """``orca`` | ``sfm`` | ``greedy`` | ``external:<cmd>``."""
        if text.startswith("external:"):
            return cls("external", text[len("external:"):])
        return cls(text)

    def label(self) -> str:
        return f"external:{self.command}" if self.name == "external" else self.name


def _greedy_velocity(obs: Observation) -> Tuple[float, float]:
    r = obs.robot
    dx, dy = r.gx - r.px, r.gy - r.py
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return (0.0, 0.0)
    return (r.v_max * dx / dist, r.v_max * dy / dist)


class RobotPolicy:
    def decide(self, obs: Observation) -> Action:
        raise NotImplementedError

    def close(self) -> None:
        pass


class GoalGreedy(RobotPolicy):
    def decide(self, obs: Observation) -> Action:
        vx, vy = _greedy_velocity(obs)
        return Action(vx, vy).clamped(obs.robot.v_max)


class _NeighborTracker(RobotPolicy):
    """Schaetzt Menschengeschwindigkeiten aus zwei aufeinanderfolgenden Beobachtungen."""

    def __init__(self) -> None:
        self._last: Dict[int, Tuple[float, float]] = {}
        self._last_time: Optional[float] = None

    def neighbors(self, obs: Observation) -> List[AgentState]:
        states = []
        elapsed = None if self._last_time is None else obs.time - self._last_time
        for h in obs.humans:
            prev = self._last.get(h.hid)
            if prev is None or not elapsed:
                vx = vy = 0.0  # erste Beobachtung
            else:
                vx = (h.px - prev[0]) / elapsed
                vy = (h.py - prev[1]) / elapsed
            states.append(AgentState(h.px, h.py, vx, vy, h.rho))
        self._last = {h.hid: (h.px, h.py) for h in obs.humans}
        self._last_time = obs.time
        return states

    @staticmethod
    def robot_state(obs: Observation) -> AgentState:
        r = obs.robot
        return AgentState(r.px, r.py, r.vx, r.vy, r.rho)


class OrcaRobot(_NeighborTracker):
    def __init__(self, cfg: ScenarioConfig) -> None:
        super().__init__()
        self.params = cfg.robot_orca_params()
        self.dt = cfg.dt

    def decide(self, obs: Observation) -> Action:
        neighbors = self.neighbors(obs)
        vel = orca_velocity(self.robot_state(obs), neighbors, self.params, _greedy_velocity(obs), self.dt)
        return Action(*vel).clamped(obs.robot.v_max)


class SfmRobot(_NeighborTracker):
    def __init__(self, cfg: ScenarioConfig) -> None:
        super().__init__()
        self.params = cfg.robot_sfm_params()
        self.dt = cfg.dt

    def decide(self, obs: Observation) -> Action:
        neighbors = self.neighbors(obs)
        r = obs.robot
        vel = sfm_velocity(self.robot_state(obs), neighbors, self.params, (r.gx, r.gy), r.v_max, self.dt)
        return Action(*vel).clamped(r.v_max)


class ExternalPolicy(RobotPolicy):
    def __init__(self, command: str, cfg: ScenarioConfig, timeout: float = DEFAULT_TIMEOUT) -> None:
        self.endpoint = PolicyProcess(command, timeout=timeout)
        try:
            self.endpoint.start(cfg.dt, cfg.time_limit)
        except Exception:
            self.endpoint.close()
            raise

    def decide(self, obs: Observation) -> Action:
        return protocol_roundtrip(self.endpoint, obs)

    def close(self) -> None:
        self.endpoint.close()


def make_policy(kind: PolicyKind, cfg: ScenarioConfig, timeout: float = DEFAULT_TIMEOUT) -> RobotPolicy:
    if kind.name == "greedy":
        return GoalGreedy()
    if kind.name == "orca":
        return OrcaRobot(cfg)
    if kind.name == "sfm":
        return SfmRobot(cfg)
    return ExternalPolicy(kind.command or "", cfg, timeout)


def decide(policy: RobotPolicy, obs: Observation) -> Action:
    return policy.decide(obs)
