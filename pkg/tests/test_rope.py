"""Rotary-embedding properties: norm preservation, shift invariance, 1-D reduction."""

import numpy as np
import pytest

from omnistream import (
    PositionTriple,
    RopeConfig,
    apply_rotary,
    attention_score,
    build_plan,
    default_split,
    rope_1d_angles,
)


def classic_rope_score(q, k, pos_q, pos_k, head_dim, theta=10000.0):
    """Independent 1-D rotary oracle via complex rotation of coordinate pairs."""
    j = np.arange(head_dim // 2)
    freqs = theta ** (-2.0 * j / head_dim)
    qc = (q[0::2] + 1j * q[1::2]) * np.exp(1j * pos_q * freqs)
    kc = (k[0::2] + 1j * k[1::2]) * np.exp(1j * pos_k * freqs)
    return float(np.sum(qc * np.conj(kc)).real)


def random_splits(rng, head_dim, count):
    pairs = head_dim // 2
    for _ in range(count):
        cut = np.sort(rng.integers(0, pairs + 1, size=2))
        yield (int(cut[0]), int(cut[1] - cut[0]), int(pairs - cut[1]))


def test_default_split_proportions():
    assert default_split(64) == (16, 8, 8)
    assert default_split(16) == (4, 2, 2)
    assert sum(default_split(10)) == 5


def test_config_rejects_bad_split():
    with pytest.raises(ValueError):
        RopeConfig(head_dim=8, split=(1, 1, 1))
    with pytest.raises(ValueError):
        RopeConfig(head_dim=7)


def test_zero_position_gives_zero_angles():
    cfg = RopeConfig(head_dim=8)
    plan = build_plan([PositionTriple(0, 0, 0)], cfg)
    assert np.all(plan.angles == 0.0)


def test_unit_temporal_position_unit_frequency():
    # split (1,0,0), head_dim=2: freq(0) = 10000**0 = 1, so angle = 1.0 rad
    cfg = RopeConfig(head_dim=2, split=(1, 0, 0))
    plan = build_plan([PositionTriple(1, 0, 0)], cfg)
    assert plan.angles.shape == (1, 1)
    assert plan.angles[0, 0] == pytest.approx(1.0, abs=0)


def test_text_plan_matches_1d_schedule():
    cfg = RopeConfig(head_dim=16, split=(3, 4, 1))
    positions = [0, 1, 5, 12]
    plan = build_plan([PositionTriple(i, i, i) for i in positions], cfg)
    np.testing.assert_array_equal(plan.angles, rope_1d_angles(positions, 16))


def test_apply_rotary_identity_at_zero():
    rng = np.random.default_rng(0)
    v = rng.normal(size=12)
    np.testing.assert_array_equal(apply_rotary(v, np.zeros(6)), v)


def test_apply_rotary_quarter_turn():
    out = apply_rotary(np.array([1.0, 0.0]), np.array([np.pi / 2]))
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-12)


def test_apply_rotary_rejects_length_mismatch():
    with pytest.raises(ValueError):
        apply_rotary(np.zeros(5), np.zeros(2))


def test_norm_preserved_thousand_vectors():
    rng = np.random.default_rng(42)
    cfg = RopeConfig(head_dim=16)
    for _ in range(1000):
        v = rng.normal(size=16)
        tr = PositionTriple(*rng.integers(0, 500, size=3).tolist())
        out = apply_rotary(v, build_plan([tr], cfg).row(0))
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) < 1e-12


def test_equal_positions_cancel():
    rng = np.random.default_rng(1)
    cfg = RopeConfig(head_dim=8)
    for _ in range(50):
        q, k = rng.normal(size=(2, 8))
        p = PositionTriple(*rng.integers(0, 100, size=3).tolist())
        assert attention_score(q, k, p, p, cfg) == pytest.approx(float(q @ k), abs=1e-12)


def test_relative_shift_invariance():
    rng = np.random.default_rng(2)
    cfg = RopeConfig(head_dim=16, split=(3, 2, 3))
    for _ in range(300):
        q, k = rng.normal(size=(2, 16))
        p1 = PositionTriple(*rng.integers(0, 200, size=3).tolist())
        p2 = PositionTriple(*rng.integers(0, 200, size=3).tolist())
        d = rng.integers(0, 100, size=3).tolist()
        p1s = PositionTriple(p1.t + d[0], p1.h + d[1], p1.w + d[2])
        p2s = PositionTriple(p2.t + d[0], p2.h + d[1], p2.w + d[2])
        assert attention_score(q, k, p1, p2, cfg) == pytest.approx(
            attention_score(q, k, p1s, p2s, cfg), abs=1e-9
        )


def test_text_scores_reduce_to_1d_for_any_split():
    rng = np.random.default_rng(3)
    head_dim = 16
    for split in random_splits(rng, head_dim, 20):
        cfg = RopeConfig(head_dim, split=split)
        q, k = rng.normal(size=(2, head_dim))
        i, j = rng.integers(0, 300, size=2).tolist()
        got = attention_score(q, k, PositionTriple(i, i, i), PositionTriple(j, j, j), cfg)
        want = classic_rope_score(q, k, i, j, head_dim)
        assert got == pytest.approx(want, abs=1e-12)


def test_build_plan_deterministic():
    cfg = RopeConfig(head_dim=8)
    triples = [PositionTriple(3, 1, 4), PositionTriple(1, 5, 9)]
    a = build_plan(triples, cfg).angles
    b = build_plan(triples, cfg).angles
    np.testing.assert_array_equal(a, b)


def test_plan_csv_round_trips_values():
    cfg = RopeConfig(head_dim=4)
    plan = build_plan([PositionTriple(2, 3, 4)], cfg)
    lines = plan.to_csv().strip().splitlines()
    assert lines[0] == "index,pair0,pair1"
    values = [float(x) for x in lines[1].split(",")[1:]]
    np.testing.assert_array_equal(values, plan.angles[0])
