"""Tests for the robot baselines and policy selection."""

import math

import pytest

from crowdnav.config import preset
from crowdnav.policies import GoalGreedy, OrcaRobot, PolicyKind, SfmRobot, make_policy
from crowdnav.sim import Observation, ObservedHuman, RobotState


# Test Fixtures


def make_obs(px=0.0, py=-4.0, humans=(), t=0.0):
    robot = RobotState(px=px, py=py, vx=0.0, vy=0.0, gx=0.0, gy=4.0, v_max=1.0,
                       theta=math.pi / 2, rho=0.3)
    return Observation(robot=robot, humans=tuple(humans), time=t)


# Test Cases


def test_greedy_heads_to_goal():
    """Test full speed towards the goal and a stop on the goal."""
    policy = GoalGreedy()
    action = policy.decide(make_obs())
    assert (action.vx, action.vy) == pytest.approx((0.0, 1.0))
    stop = policy.decide(make_obs(py=4.0))
    assert (stop.vx, stop.vy) == (0.0, 0.0)


def test_orca_without_humans_matches_greedy():
    """Test that ORCA falls back to the preferred velocity with nobody around."""
    cfg = preset("low")
    orca = OrcaRobot(cfg).decide(make_obs())
    greedy = GoalGreedy().decide(make_obs())
    assert (orca.vx, orca.vy) == pytest.approx((greedy.vx, greedy.vy))


def test_neighbor_velocities_from_consecutive_observations():
    """Test finite-difference velocity estimates keyed by human id."""
    policy = OrcaRobot(preset("low"))
    first = policy.neighbors(make_obs(humans=[ObservedHuman(0, 2.0, 0.0, 0.3)], t=0.0))
    assert (first[0].vx, first[0].vy) == (0.0, 0.0)
    second = policy.neighbors(
        make_obs(humans=[ObservedHuman(0, 1.75, 0.0, 0.3), ObservedHuman(3, 0.0, 1.0, 0.3)], t=0.25)
    )
    assert (second[0].vx, second[0].vy) == pytest.approx((-1.0, 0.0))
    assert (second[1].vx, second[1].vy) == (0.0, 0.0)


def test_orca_robot_avoids_human_ahead():
    """Test that a human directly ahead deflects the ORCA robot."""
    policy = OrcaRobot(preset("low"))
    obs = make_obs(humans=[ObservedHuman(0, 0.0, -3.0, 0.3)])
    action = policy.decide(obs)
    assert math.hypot(action.vx, action.vy) <= 1.0 + 1e-9
    assert abs(action.vx) > 1e-6 or action.vy < 1.0 - 1e-6


def test_robot_baselines_use_robot_sections():
    """Test that the robot controllers take the robot parameters, not the humans'."""
    cfg = preset("low")
    assert OrcaRobot(cfg).params == cfg.robot_orca_params()
    assert OrcaRobot(cfg).params.responsibility == 1.0
    assert SfmRobot(cfg).params == cfg.robot_sfm_params()
    assert SfmRobot(cfg).params != cfg.human_sfm_params()


def test_sfm_robot_respects_speed_limit():
    """Test SFM baseline output stays within v_max."""
    policy = SfmRobot(preset("low"))
    action = policy.decide(make_obs(humans=[ObservedHuman(0, 0.0, -3.4, 0.3)]))
    assert math.hypot(action.vx, action.vy) <= 1.0 + 1e-9


def test_policy_kind_parsing():
    """Test names, external commands and rejection of unknown policies."""
    assert PolicyKind.parse("orca") == PolicyKind("orca")
    ext = PolicyKind.parse("external:python my_policy.py --fast")
    assert ext.name == "external"
    assert ext.command == "python my_policy.py --fast"
    assert ext.label() == "external:python my_policy.py --fast"
    with pytest.raises(ValueError):
        PolicyKind.parse("rl")
    with pytest.raises(ValueError):
        PolicyKind.parse("external:")


def test_make_policy_builds_baselines():
    """Test the factory for the built-in controllers."""
    cfg = preset("low")
    assert isinstance(make_policy(PolicyKind("greedy"), cfg), GoalGreedy)
    assert isinstance(make_policy(PolicyKind("orca"), cfg), OrcaRobot)
    assert isinstance(make_policy(PolicyKind("sfm"), cfg), SfmRobot)
