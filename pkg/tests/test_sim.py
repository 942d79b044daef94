"""Tests for the crowd navigation environment.

Covers scenario generation, separation, base and shaped rewards, terminal
precedence, human goal switching, determinism and the invisible-robot setting.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from crowdnav.config import preset
from crowdnav.sim import (
    Action,
    HumanAgent,
    PlacementFailure,
    SteppedTerminalEpisode,
    base_reward,
    continuous_min_separation,
    episode_seed,
    generate_humans_only,
    generate_scenario,
    human_min_separation,
    maybe_switch_goal,
    min_separation,
    observe,
    reassign_goal,
    step,
    step_humans,
)


# Test Fixtures


@pytest.fixture
def low():
    """Low-density preset."""
    return preset("low")


def empty_world(**overrides):
    cfg = replace(preset("low"), n_humans=0, **overrides)
    return generate_scenario(cfg, 0)


def add_human(world, x, y, gx=None, gy=None):
    world.humans.append(
        HumanAgent(px=x, py=y, vx=0.0, vy=0.0, gx=x if gx is None else gx, gy=y if gy is None else gy,
                   pref_speed=1.0, rho=0.3)
    )


def greedy_action(world):
    r = world.robot
    dx, dy = r.gx - r.px, r.gy - r.py
    dist = math.hypot(dx, dy)
    return Action(dx / dist, dy / dist) if dist > 0 else Action(0.0, 0.0)


# Test Cases: scenario generation


def test_low_preset_layout(low):
    """Test 5 humans near the 4 m circle with antipodal goals and the fixed robot route."""
    world = generate_scenario(low, 42)
    assert len(world.humans) == 5
    assert world.robot.position == (0.0, -4.0)
    assert (world.robot.gx, world.robot.gy) == (0.0, 4.0)
    for h in world.humans:
        assert abs(math.hypot(h.px, h.py) - 4.0) <= math.sqrt(2) / 2 + 1e-12
        assert (h.gx, h.gy) == (-h.px, -h.py)


def test_high_preset_layout():
    """Test 20 humans on the 6 m circle without initial overlap."""
    world = generate_scenario(preset("high"), 3)
    assert len(world.humans) == 20
    for h in world.humans:
        assert abs(math.hypot(h.px, h.py) - 6.0) <= math.sqrt(2) / 2 + 1e-12
    assert human_min_separation(world) > 0.0
    assert min_separation(world) > 0.0


def test_generation_is_deterministic(low):
    """Test that the same seed gives bitwise identical worlds."""
    a = generate_scenario(low, 123)
    b = generate_scenario(low, 123)
    assert np.array_equal(a.human_positions(), b.human_positions())
    assert [(h.gx, h.gy) for h in a.humans] == [(h.gx, h.gy) for h in b.humans]
    c = generate_scenario(low, 124)
    assert not np.array_equal(a.human_positions(), c.human_positions())


def test_placement_failure_when_too_crowded():
    """Test that impossible layouts raise PlacementFailure."""
    cfg = replace(preset("low"), n_humans=60, circle_radius=1.0)
    with pytest.raises(PlacementFailure):
        generate_scenario(cfg, 0)


def test_episode_seed_mix():
    """Test that the 64-bit seed mix is stable and separates neighbouring inputs."""
    assert episode_seed(0, 0) == episode_seed(0, 0)
    seeds = {episode_seed(s, i) for s in range(10) for i in range(100)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2**64 for s in seeds)


# Test Cases: separation and rewards


def test_min_separation_examples():
    """Test surface separation, overlap and the no-human sentinel."""
    world = empty_world()
    assert min_separation(world) == math.inf
    world.robot.px, world.robot.py = 0.0, 0.0
    add_human(world, 1.0, 0.0)
    assert min_separation(world) == pytest.approx(0.4)
    world.humans[0].px = 0.5
    assert min_separation(world) == pytest.approx(-0.1)


def test_continuous_separation_catches_pass_through():
    """Test that the interval minimum sees a crossing the endpoints miss."""
    before_h = np.array([[1.0, 0.0]])
    after_h = np.array([[0.0, 0.0]])
    d = continuous_min_separation((0.0, 0.0), (1.0, 0.0), before_h, after_h, 0.3, np.array([0.3]))
    assert d == pytest.approx(-0.6)


@pytest.mark.parametrize(
    "d_t,goal,expected",
    [
        (-0.01, False, -0.25),
        (-0.01, True, -0.25),
        (0.1, False, -0.05),
        (1.0, True, 1.0),
        (0.0, False, -0.1),
        (0.2, False, 0.0),
        (math.inf, False, 0.0),
    ],
)
def test_base_reward_branches(d_t, goal, expected):
    """Test every base-reward branch."""
    assert base_reward(d_t, goal) == pytest.approx(expected, abs=1e-15)


def test_proximity_reward_is_continuous_at_boundary():
    """Test that -0.1 + d/2 tends to 0 as d approaches 0.2."""
    for eps in (1e-3, 1e-6, 1e-9):
        assert abs(base_reward(0.2 - eps, False)) <= eps


# Test Cases: stepping


def test_euler_integration():
    """Test one step from (0, -4) at (0, 1) m/s."""
    world = empty_world()
    outcome = step(world, Action(0.0, 1.0))
    assert world.robot.position == (0.0, -3.75)
    assert outcome.terminal == "none"
    assert outcome.d_min == math.inf
    assert outcome.reward_base == 0.0


def test_action_is_clamped_and_heading_updated():
    """Test speed clamping and the heading rule."""
    world = empty_world()
    theta0 = world.robot.theta
    step(world, Action(0.0, 0.0))
    assert world.robot.theta == theta0
    step(world, Action(3.0, 4.0))
    assert (world.robot.vx, world.robot.vy) == pytest.approx((0.6, 0.8))
    assert world.robot.theta == pytest.approx(math.atan2(0.8, 0.6))


def test_straight_motion_has_no_shaping():
    """Test that constant straight motion never triggers the curvature penalty."""
    world = empty_world()
    for _ in range(8):
        outcome = step(world, Action(0.0, 1.0))
        assert outcome.reward_shaping == 0.0


def test_sharp_turn_is_penalised():
    """Test the shaped reward after a right-angle turn."""
    world = empty_world()
    for _ in range(3):
        step(world, Action(0.0, 1.0))
    outcome = step(world, Action(1.0, 0.0))
    kappa = 2 * 0.0625 / (0.25 * 0.25 * math.hypot(0.25, 0.25))
    expected = -0.2 * (1.0 - math.exp(-kappa))
    assert outcome.reward_shaping == pytest.approx(expected)
    assert outcome.reward_total == pytest.approx(outcome.reward_base + outcome.reward_shaping)

    plain = empty_world(shaping=replace(preset("low").shaping, enabled=False))
    for _ in range(3):
        step(plain, Action(0.0, 1.0))
    assert step(plain, Action(1.0, 0.0)).reward_shaping == 0.0


def test_shaped_reward_never_exceeds_base(low):
    """Test shaped <= base and the shaping bounds over 10,000 random steps."""
    rng = np.random.default_rng(5)
    w_lam = low.shaping.w_smooth * low.shaping.lam
    steps = 0
    seed = 0
    while steps < 10_000:
        world = generate_scenario(low, seed)
        seed += 1
        while world.terminal == "none" and steps < 10_000:
            angle = rng.uniform(0, 2 * math.pi)
            speed = rng.uniform(0, 1.2)
            out = step(world, Action(speed * math.cos(angle), speed * math.sin(angle)))
            steps += 1
            assert out.reward_total <= out.reward_base
            assert -w_lam <= out.reward_shaping <= 0.0
            assert out.reward_total == out.reward_base + out.reward_shaping


def test_goal_reached_around_eight_seconds():
    """Test that driving straight to the goal ends with success after about 8 s."""
    world = empty_world()
    outcome = None
    while world.terminal == "none":
        outcome = step(world, greedy_action(world))
    assert outcome.terminal == "goal"
    assert outcome.reward_base == 1.0
    assert abs(world.time - 8.0) <= 0.25


def test_collision_beats_goal():
    """Test terminal precedence when a collision and goal arrival coincide."""
    world = empty_world()
    world.robot.py = 3.8
    add_human(world, 0.0, 4.2)
    outcome = step(world, Action(0.0, 1.0))
    assert outcome.terminal == "collision"
    assert outcome.reward_base == -0.25


def test_timeout_and_terminal_guard():
    """Test timeout at the time limit and the guard against stepping a finished episode."""
    world = empty_world(time_limit=1.0)
    outcomes = [step(world, Action(0.0, 0.0)) for _ in range(4)]
    assert [o.terminal for o in outcomes] == ["none", "none", "none", "timeout"]
    with pytest.raises(SteppedTerminalEpisode):
        step(world, Action(0.0, 0.0))


def test_sensing_range():
    """Test that humans at 5 m are observed and at 5.1 m are not."""
    world = empty_world()
    add_human(world, 3.0, -4.0)
    add_human(world, 5.0, -4.0)
    add_human(world, -5.1, -4.0)
    obs = observe(world)
    assert [h.hid for h in obs.humans] == [0, 1]
    world.robot.px = 99.0
    assert obs.robot.px == 0.0


def test_speed_bounds_hold(low):
    """Test that every agent respects its speed limit after each step."""
    world = generate_scenario(low, 9)
    rng = np.random.default_rng(1)
    while world.terminal == "none":
        step(world, Action(*rng.uniform(-2, 2, size=2)))
        assert math.hypot(world.robot.vx, world.robot.vy) <= world.robot.v_max + 1e-9
        for h in world.humans:
            assert math.hypot(h.vx, h.vy) <= h.pref_speed + 1e-9


def test_stepping_is_deterministic(low):
    """Test identical trajectories and rewards for identical seeds and actions."""
    def roll():
        world = generate_scenario(low, 77)
        rewards, positions = [], []
        for k in range(60):
            if world.terminal != "none":
                break
            out = step(world, Action(math.sin(k / 5.0), 0.8))
            rewards.append((out.reward_base, out.reward_shaping, out.d_min))
            positions.append(world.human_positions().copy())
        return rewards, positions

    r1, p1 = roll()
    r2, p2 = roll()
    assert r1 == r2
    assert all(np.array_equal(a, b) for a, b in zip(p1, p2))


# Test Cases: humans


def test_goal_switching_rules():
    """Test reassignment onto the circle and the p = 0 / p = 1 extremes."""
    rng = np.random.default_rng(0)
    human = HumanAgent(px=1.0, py=0.0, vx=0.0, vy=0.0, gx=-1.0, gy=0.0, pref_speed=1.0, rho=0.3)
    assert not maybe_switch_goal(human, rng, 0.0, 4.0)
    assert (human.gx, human.gy) == (-1.0, 0.0)
    assert maybe_switch_goal(human, rng, 1.0, 4.0)
    assert math.hypot(human.gx, human.gy) == pytest.approx(4.0)
    reassign_goal(human, rng, 6.0)
    assert math.hypot(human.gx, human.gy) == pytest.approx(6.0)


def test_human_at_goal_gets_new_goal():
    """Test forced reassignment when a human stands on its goal."""
    world = empty_world(goal_switch_prob=0.0)
    add_human(world, 2.0, 0.0)
    step_humans(world)
    h = world.humans[0]
    assert (h.gx, h.gy) != (2.0, 0.0)
    assert math.hypot(h.gx, h.gy) == pytest.approx(4.0)


def test_goal_schedule_is_reproducible(low):
    """Test that a fixed seed yields the same goal-switch schedule."""
    cfg = replace(low, goal_switch_prob=0.2)

    def schedule():
        world = generate_humans_only(cfg, 31)
        goals = []
        for _ in range(50):
            step_humans(world)
            goals.append([(h.gx, h.gy) for h in world.humans])
        return goals

    assert schedule() == schedule()


def test_invisible_robot_does_not_affect_humans(low):
    """Test bitwise identical human trajectories with and without the robot."""
    for seed in range(5):
        with_robot = generate_scenario(low, seed)
        without = generate_humans_only(low, seed)
        while with_robot.terminal == "none":
            step(with_robot, greedy_action(with_robot))
            step_humans(without)
            assert np.array_equal(with_robot.human_positions(), without.human_positions())


def test_orca_humans_never_collide(low):
    """Test zero human-human collisions over 500 humans-only low-density episodes."""
    steps = int(round(low.time_limit / low.dt))
    for seed in range(500):
        world = generate_humans_only(low, seed)
        for _ in range(steps):
            step_humans(world)
            assert human_min_separation(world) >= 0.0, f"collision in episode {seed} at t={world.time}"


def test_sfm_humans_move_towards_goals(low):
    """Test that social-force humans make progress and respect their speed."""
    cfg = replace(low, human_policy="sfm", goal_switch_prob=0.0)
    world = generate_humans_only(cfg, 8)
    start = [math.hypot(h.gx - h.px, h.gy - h.py) for h in world.humans]
    for _ in range(8):
        step_humans(world)
        assert all(math.hypot(h.vx, h.vy) <= 1.0 + 1e-9 for h in world.humans)
    end = [math.hypot(h.gx - h.px, h.gy - h.py) for h in world.humans]
    assert sum(end) < sum(start)
