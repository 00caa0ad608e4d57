"""Mask recipes against brute-force constructions."""

import numpy as np
import pytest

from omnistream import (
    audio_block_mask,
    causal_mask,
    dit_window_mask,
    mask_receptive_field,
    masked_attention,
    prefill_plan,
)


def brute_block_mask(n, size):
    return np.array([[i // size == j // size for j in range(n)] for i in range(n)])


def brute_dit_mask(n, size, lb, la):
    return np.array(
        [[-lb <= j // size - i // size <= la for j in range(n)] for i in range(n)]
    )


def test_audio_block_mask_two_full_blocks():
    mask = audio_block_mask(100, 50)
    np.testing.assert_array_equal(mask.allow, brute_block_mask(100, 50))
    assert mask.allow[:50, :50].all() and mask.allow[50:, 50:].all()
    assert not mask.allow[:50, 50:].any()


def test_audio_block_mask_single_partial_block():
    assert audio_block_mask(3, 50).allow.all()


def test_audio_block_mask_boundary_element():
    mask = audio_block_mask(51, 50)
    assert mask.receptive_field(50) == {50}
    np.testing.assert_array_equal(mask.allow, brute_block_mask(51, 50))


def test_audio_block_mask_is_equivalence_relation():
    mask = audio_block_mask(73, 10).allow
    np.testing.assert_array_equal(mask, mask.T)  # symmetric
    assert mask.diagonal().all()  # reflexive
    reach2 = mask @ mask  # transitive: two hops stay inside the block
    np.testing.assert_array_equal(reach2 > 0, mask)


def test_causal_small():
    assert causal_mask(1).allow.tolist() == [[True]]
    np.testing.assert_array_equal(causal_mask(3).allow, np.tril(np.ones((3, 3), bool)))


def test_causal_row_counts():
    mask = causal_mask(17)
    for i in range(17):
        assert mask.allow[i].sum() == i + 1


def test_dit_window_four_blocks():
    mask = dit_window_mask(32, 4)
    i = 5 * 4  # a query in block 5
    allowed_blocks = {j // 4 for j in mask.receptive_field(i)}
    assert allowed_blocks == {3, 4, 5, 6}
    np.testing.assert_array_equal(mask.allow, brute_dit_mask(32, 4, 2, 1))


def test_dit_window_single_block_all_true():
    assert dit_window_mask(3, 4).allow.all()


def test_dit_window_clips_at_start():
    mask = dit_window_mask(16, 4)
    assert {j // 4 for j in mask.receptive_field(0)} == {0, 1}


def test_dit_window_bound_property():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        size = int(rng.integers(1, 6))
        mask = dit_window_mask(n, size)
        for i in range(n):
            bi = i // size
            blocks = {j // size for j in mask.receptive_field(i)}
            assert all(-2 <= b - bi <= 1 for b in blocks)
            if (bi + 1) * size < n:
                assert bi + 1 in blocks  # lookahead live
            if (bi + 2) * size < n:
                assert bi + 2 not in blocks  # never two ahead


def test_prefill_plan_examples():
    assert prefill_plan(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert prefill_plan(4, 4) == [(0, 4)]
    assert prefill_plan(0, 4) == []


def test_prefill_plan_partitions():
    rng = np.random.default_rng(6)
    for _ in range(100):
        total = int(rng.integers(0, 200))
        chunk = int(rng.integers(1, 20))
        spans = prefill_plan(total, chunk)
        covered = [i for s, e in spans for i in range(s, e)]
        assert covered == list(range(total))
        assert all(e - s == chunk for s, e in spans[:-1])


def test_receptive_field_helper():
    assert mask_receptive_field(causal_mask(3), 1) == {0, 1}
    assert mask_receptive_field(audio_block_mask(100, 50), 60) == set(range(50, 100))


def test_mask_dumps():
    mask = causal_mask(2)
    assert mask.to_csv() == "1,0\n1,1\n"
    assert mask.to_pgm() == "P2\n2 2\n1\n1 0\n1 1\n"


def test_blockwise_streaming_equivalence():
    # audio-encoder attention block by block equals full attention under the
    # block mask: blocks are independent, so results agree to roundoff
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(1, 120))
        size = int(rng.integers(1, 60))
        q, k, v = rng.normal(size=(3, n, 8))
        full = masked_attention(q, k, v, audio_block_mask(n, size).allow)
        per_block = np.vstack([
            masked_attention(q[s:e], k[s:e], v[s:e], np.ones((e - s, e - s), bool))
            for s, e in prefill_plan(n, size)
        ])
        assert np.max(np.abs(full - per_block)) <= 1e-12
