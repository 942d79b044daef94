"""Tests for the ORCA velocity solver.

The linear-program result is checked against a brute-force search over a
400 x 400 velocity grid: the solver must be feasible and at least as close
to the preferred velocity as the best feasible grid point (within 1e-2).
"""

import math

import numpy as np
import pytest

from crowdnav.orca import AgentState, OrcaParams, clamp_speed, orca_lines, orca_velocity, solve_lines, violates

GRID = 400


# Test Fixtures


@pytest.fixture
def grid():
    """Velocity grid covering the unit speed disc."""
    axis = np.linspace(-1.0, 1.0, GRID)
    vx, vy = np.meshgrid(axis, axis)
    pts = np.column_stack([vx.ravel(), vy.ravel()])
    return pts[np.hypot(pts[:, 0], pts[:, 1]) <= 1.0]


def grid_optimum(grid_pts, lines, pref):
    """Distance from pref to the nearest grid velocity satisfying every half-plane."""
    ok = np.ones(len(grid_pts), dtype=bool)
    for line in lines:
        px, py = line.point
        dx, dy = line.direction
        det = dx * (py - grid_pts[:, 1]) - dy * (px - grid_pts[:, 0])
        ok &= det <= 0.0
    if not ok.any():
        return None
    return float(np.hypot(*(grid_pts[ok] - np.asarray(pref)).T).min())


def random_instance(rng):
    agent = AgentState(0.0, 0.0, *clamp_speed(tuple(rng.uniform(-1, 1, 2)), 1.0), 0.3)
    neighbors = []
    for _ in range(int(rng.integers(1, 6))):
        angle = rng.uniform(0, 2 * math.pi)
        dist = rng.uniform(0.8, 6.0)
        vel = clamp_speed(tuple(rng.uniform(-1, 1, 2)), 1.0)
        neighbors.append(AgentState(dist * math.cos(angle), dist * math.sin(angle), vel[0], vel[1], 0.3))
    pref = clamp_speed(tuple(rng.uniform(-1.2, 1.2, 2)), 1.0)
    return agent, neighbors, pref


# Test Cases


def test_no_neighbors_returns_pref_velocity():
    """Test that an unconstrained agent keeps its preferred velocity exactly."""
    agent = AgentState(0.0, 0.0, 0.2, 0.1, 0.3)
    assert orca_velocity(agent, [], OrcaParams(), (0.6, -0.3)) == (0.6, -0.3)


def test_pref_velocity_is_clamped():
    """Test that a too fast preferred velocity is projected onto the speed disc."""
    agent = AgentState(0.0, 0.0, 0.0, 0.0, 0.3)
    vx, vy = orca_velocity(agent, [], OrcaParams(), (3.0, 4.0))
    assert (vx, vy) == pytest.approx((0.6, 0.8), abs=1e-12)


def test_static_neighbor_ahead_matches_grid(grid):
    """Test the static obstacle case against the grid oracle."""
    params = OrcaParams(time_horizon=2.0)
    agent = AgentState(0.0, 0.0, 0.0, 0.0, 0.3)
    neighbor = AgentState(2.0, 0.0, 0.0, 0.0, 0.3)
    lines = orca_lines(agent, [neighbor], params, 0.25)
    vel, feasible = solve_lines(lines, (1.0, 0.0), params.max_speed)
    assert feasible
    assert not any(violates(line, vel, 1e-9) for line in lines)
    best = grid_optimum(grid, lines, (1.0, 0.0))
    dist = math.hypot(vel[0] - 1.0, vel[1])
    assert dist <= best + 1e-9
    assert best - dist <= 1e-2


def test_random_instances_match_grid_oracle(grid):
    """Test 100 random 1-5 neighbor instances against the brute-force oracle."""
    rng = np.random.default_rng(2024)
    params = OrcaParams(time_horizon=2.0)
    checked = 0
    while checked < 100:
        agent, neighbors, pref = random_instance(rng)
        lines = orca_lines(agent, neighbors, params, 0.25)
        vel, feasible = solve_lines(lines, pref, params.max_speed)
        best = grid_optimum(grid, lines, pref)
        if not feasible or best is None:
            continue
        checked += 1
        assert math.hypot(*vel) <= 1.0 + 1e-9
        for line in lines:
            assert not violates(line, vel, 1e-9), f"constraint violated: {line} at {vel}"
        dist = math.hypot(vel[0] - pref[0], vel[1] - pref[1])
        assert dist <= best + 1e-9, f"solver {dist} worse than grid {best}"
        assert best - dist <= 1e-2


def test_head_on_symmetry():
    """Test that mirrored head-on agents get point-reflected velocities."""
    params = OrcaParams()
    a = AgentState(-2.0, 0.0, 1.0, 0.0, 0.3)
    b = AgentState(2.0, 0.0, -1.0, 0.0, 0.3)
    va = orca_velocity(a, [b], params, (1.0, 0.0))
    vb = orca_velocity(b, [a], params, (-1.0, 0.0))
    assert abs(va[0] + vb[0]) <= 1e-9
    assert abs(va[1] + vb[1]) <= 1e-9
    # the tie resolves to one side instead of a dead stop
    assert abs(va[1]) > 1e-6


def test_overlap_resolved_within_one_step():
    """Test that an overlapping pair is pushed apart to the combined radius in one dt."""
    params = OrcaParams()
    dt = 0.25
    a = AgentState(0.0, 0.0, 0.0, 0.0, 0.3)
    b = AgentState(0.5, 0.0, 0.0, 0.0, 0.3)
    va = orca_velocity(a, [b], params, (0.0, 0.0), dt)
    vb = orca_velocity(b, [a], params, (0.0, 0.0), dt)
    assert va == pytest.approx((-0.24, 0.0), abs=1e-12)
    assert vb == pytest.approx((0.24, 0.0), abs=1e-12)
    gap = (b.px + vb[0] * dt) - (a.px + va[0] * dt)
    assert gap >= 0.6


def test_neighbors_beyond_range_are_ignored():
    """Test that neighbor_dist and max_neighbors limit the constraint set."""
    agent = AgentState(0.0, 0.0, 0.0, 0.0, 0.3)
    far = AgentState(20.0, 0.0, -1.0, 0.0, 0.3)
    assert orca_lines(agent, [far], OrcaParams(), 0.25) == []
    crowd = [AgentState(1.0 + i, 0.5, 0.0, 0.0, 0.3) for i in range(5)]
    assert len(orca_lines(agent, crowd, OrcaParams(max_neighbors=3), 0.25)) == 3


def test_infeasible_region_falls_back():
    """Test that a surrounded agent still gets a bounded velocity from the fallback program."""
    params = OrcaParams(time_horizon=5.0)
    agent = AgentState(0.0, 0.0, 0.0, 0.0, 0.3)
    ring = []
    for k in range(8):
        angle = 2 * math.pi * k / 8
        ring.append(AgentState(0.65 * math.cos(angle), 0.65 * math.sin(angle),
                               -math.cos(angle), -math.sin(angle), 0.3))
    lines = orca_lines(agent, ring, params, 0.25)
    vel, feasible = solve_lines(lines, (1.0, 0.0), params.max_speed)
    assert not feasible
    assert math.hypot(*vel) <= 1.0 + 1e-9


def test_invalid_params_rejected():
    """Test OrcaParams validation."""
    with pytest.raises(ValueError):
        OrcaParams(time_horizon=0.0)
    with pytest.raises(ValueError):
        OrcaParams(max_neighbors=0)


def test_full_responsibility_doubles_the_correction():
    """Test that an agent taking all of the avoidance moves twice as far as a reciprocal one."""
    dt = 0.25
    a = AgentState(0.0, 0.0, 0.0, 0.0, 0.3)
    b = AgentState(0.5, 0.0, 0.0, 0.0, 0.3)
    half = orca_velocity(a, [b], OrcaParams(), (0.0, 0.0), dt)
    full = orca_velocity(a, [b], OrcaParams(responsibility=1.0), (0.0, 0.0), dt)
    assert full == pytest.approx((2 * half[0], 0.0), abs=1e-12)
    assert full == pytest.approx((-0.48, 0.0), abs=1e-12)


@pytest.mark.parametrize("responsibility", [0.0, -0.5, 1.5])
def test_responsibility_must_be_a_share(responsibility):
    """Test rejection of responsibility outside (0, 1]."""
    with pytest.raises(ValueError):
        OrcaParams(responsibility=responsibility)
