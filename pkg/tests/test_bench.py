"""Tests for batch execution and aggregation of episode outcomes."""

import math
import random
from dataclasses import replace

import numpy as np
import pytest

from crowdnav.bench import (
    PROTOCOL_FAILURE,
    EmptyBatch,
    EpisodeRecord,
    RunSpec,
    aggregate,
    run_batch,
    run_episode,
    run_comparison,
    run_records,
)
from crowdnav.config import preset
from crowdnav.policies import PolicyKind
from crowdnav.report import emit_comparison_plot, emit_report, emit_trajectory_log, shared_human_tracks
from crowdnav.scoring import ScoringConfig


# Test Fixtures


@pytest.fixture
def scoring():
    return ScoringConfig.for_density("low")


def make_spec(policy="orca", seeds=(0,), episodes=1, density="low", **scenario):
    cfg = replace(preset(density), **scenario)
    return RunSpec(
        scenario=cfg,
        policy=PolicyKind.parse(policy),
        episodes_per_seed=episodes,
        seeds=seeds,
        scoring=ScoringConfig.for_density(density, t_star=cfg.optimal_time),
    )


def record(seed, index, outcome, nav_time, min_sep, discomfort, total, cdr):
    return EpisodeRecord(
        seed=seed, index=index, outcome=outcome, nav_time=nav_time, trajectory=None,
        min_sep=min_sep, discomfort_steps=discomfort, total_steps=total, cdr=cdr,
    )


@pytest.fixture
def three_outcomes():
    """One success, one collision and one timeout across two seeds."""
    return [
        record(0, 0, "success", 8.0, 0.3, 1, 32, 0.0),
        record(0, 1, "collision", 2.0, -0.1, 0, 8, 0.2),
        record(1, 0, "timeout", 30.0, 1.0, 0, 120, None),
    ]


# Test Cases: single episodes


def test_empty_world_greedy_success():
    """Test that the greedy robot reaches the goal in about 8 s without humans."""
    rec = run_episode(make_spec("greedy", n_humans=0), 0, 0)
    assert rec.outcome == "success"
    assert abs(rec.nav_time - 8.0) <= 0.25
    assert rec.cdr == 0.0
    assert rec.min_sep == math.inf
    assert rec.discomfort_steps == 0
    assert rec.log.times[0] == 0.0
    assert len(rec.log.times) == rec.total_steps + 1
    assert tuple(rec.log.robot[0]) == (0.0, -4.0)


def test_episode_is_reproducible():
    """Test identical records for the same (seed, index)."""
    spec = make_spec("orca")
    a = run_episode(spec, 3, 7)
    b = run_episode(spec, 3, 7)
    assert (a.outcome, a.nav_time, a.min_sep, a.cdr) == (b.outcome, b.nav_time, b.min_sep, b.cdr)
    assert np.array_equal(a.log.robot, b.log.robot)
    assert np.array_equal(a.log.humans, b.log.humans)


def test_run_spec_validation():
    """Test rejection of empty, duplicate or non-positive batch settings."""
    with pytest.raises(ValueError):
        make_spec(seeds=())
    with pytest.raises(ValueError):
        make_spec(seeds=(1, 1))
    with pytest.raises(ValueError):
        make_spec(episodes=0)


# Test Cases: aggregation


def test_aggregate_rates(three_outcomes, scoring):
    """Test pooled rates, average time, discomfort, distance and curvature metrics."""
    report = aggregate(three_outcomes, scoring)
    m = report.pooled
    assert (m.sr, m.cr, m.tr) == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    assert m.at == 8.0
    assert m.dr == pytest.approx(1 / 160)
    assert m.md == pytest.approx(0.4)
    assert m.cdr == pytest.approx(0.1)
    assert report.episodes == 3
    assert [s.seed for s in report.per_seed] == [0, 1]
    assert report.per_seed[1].scores.efficiency_defined is False
    assert report.per_seed[1].metrics.cdr == 0.0


def test_aggregate_ignores_order(three_outcomes, scoring):
    """Test that shuffled records produce the same report."""
    shuffled = list(three_outcomes)
    random.Random(4).shuffle(shuffled)
    assert aggregate(shuffled, scoring).to_dict() == aggregate(three_outcomes, scoring).to_dict()


def test_protocol_failures_are_excluded(three_outcomes, scoring):
    """Test that failed episodes are counted but not scored."""
    failed = replace(record(1, 1, PROTOCOL_FAILURE, 0.0, math.inf, 0, 0, None), error="timeout")
    report = aggregate(three_outcomes + [failed], scoring)
    assert report.excluded_episodes == 1
    assert report.episodes == 4
    assert report.pooled == aggregate(three_outcomes, scoring).pooled
    assert report.per_seed[1].excluded == 1


def test_all_failed_is_empty(scoring):
    """Test EmptyBatch when no episode can be scored."""
    with pytest.raises(EmptyBatch):
        aggregate([record(0, 0, PROTOCOL_FAILURE, 0.0, math.inf, 0, 0, None)], scoring)


def test_stddev_over_seeds(three_outcomes, scoring):
    """Test population standard deviation of per-seed metrics."""
    report = aggregate(three_outcomes, scoring)
    # seed 0: sr 0.5, seed 1: sr 0.0
    assert report.stddev["metrics"]["sr"] == pytest.approx(0.25)
    assert report.stddev["metrics"]["at"] == pytest.approx(0.0)


# Test Cases: batches


def test_batch_outputs_are_byte_identical():
    """Test identical report and log bytes across repeated runs and worker counts."""
    spec = make_spec("orca", seeds=(0, 1), episodes=2)
    serial = run_batch(spec, workers=1)
    again = run_batch(spec, workers=1)
    parallel = run_batch(spec, workers=2)
    for fmt in ("json", "csv"):
        assert emit_report(serial, fmt) == emit_report(again, fmt) == emit_report(parallel, fmt)
    log = emit_trajectory_log(serial.records)
    assert log == emit_trajectory_log(again.records) == emit_trajectory_log(parallel.records)


def test_records_sorted_by_seed_and_index():
    """Test the canonical record order."""
    records = run_records(make_spec("greedy", seeds=(5, 2), episodes=2, n_humans=0), workers=1)
    assert [(r.seed, r.index) for r in records] == [(2, 0), (2, 1), (5, 0), (5, 1)]


# Test Cases: policy comparison


@pytest.fixture(scope="module")
def comparison():
    return run_comparison(preset("low"), [PolicyKind.parse(p) for p in ("orca", "sfm", "greedy")], 2, 5)


def test_comparison_labels_and_episode(comparison):
    """Test one record per policy, all for the same (seed, index)."""
    assert list(comparison) == ["orca", "sfm", "greedy"]
    assert {(r.seed, r.index) for r in comparison.values()} == {(2, 5)}


def test_comparison_humans_match_across_policies(comparison):
    """Test that the human tracks agree over the common prefix for every policy."""
    logs = [r.log for r in comparison.values()]
    steps = min(log.humans.shape[0] for log in logs)
    for log in logs[1:]:
        assert np.array_equal(log.humans[:steps], logs[0].humans[:steps])
    assert shared_human_tracks(logs).shape[0] == max(log.humans.shape[0] for log in logs)


def test_comparison_humans_match_single_runs(comparison):
    """Test that the comparison replays exactly the episode of a regular run."""
    single = run_episode(make_spec("sfm"), 2, 5)
    assert np.array_equal(single.log.robot, comparison["sfm"].log.robot)
    assert np.array_equal(single.log.humans, comparison["sfm"].log.humans)


def test_comparison_plot_is_deterministic(comparison):
    """Test identical SVG bytes for repeated calls over the same records."""
    cfg = preset("low")
    svg = emit_comparison_plot(comparison, cfg)
    assert svg == emit_comparison_plot(comparison, cfg)
    assert svg.decode("utf-8").lstrip().startswith("<?xml")
    assert svg != emit_comparison_plot({"orca": comparison["orca"]}, cfg)


def test_comparison_needs_policies():
    """Test rejection of an empty policy list."""
    with pytest.raises(ValueError):
        run_comparison(preset("low"), [], 0, 0)


# Test Cases: baseline outcomes over many episodes


@pytest.mark.slow
def test_orca_low_density_reaches_goal():
    """Test ORCA success rate and average time in the low-density scene."""
    report = run_batch(make_spec("orca", episodes=100), workers=2)
    assert report.pooled.sr >= 0.857
    assert 13.686 - 3.0 <= report.pooled.at <= 13.686 + 3.0


@pytest.mark.slow
def test_orca_collides_more_in_dense_crowd():
    """Test more collisions and some timeouts for ORCA in the dense scene."""
    low = run_batch(make_spec("orca", episodes=50), workers=2).pooled
    high = run_batch(make_spec("orca", episodes=50, density="high"), workers=2).pooled
    assert high.cr > low.cr
    assert high.tr > 0.0


@pytest.mark.slow
def test_sfm_times_out_more_in_dense_crowd():
    """Test that the social force robot stalls more often among many humans."""
    low = run_batch(make_spec("sfm", episodes=50), workers=2).pooled
    high = run_batch(make_spec("sfm", episodes=50, density="high"), workers=2).pooled
    assert high.tr > low.tr
