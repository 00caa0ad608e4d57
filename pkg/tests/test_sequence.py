"""Position assignment, interleaving, and packing properties."""

import numpy as np
import pytest

from omnistream import (
    Kind,
    ModalitySegment,
    PositionTriple,
    assign_audio_positions,
    assign_image_positions,
    assign_text_positions,
    assign_video_positions,
    image_as_video,
    interleave_video_audio,
    pack_sequence,
)


def test_text_positions_from_zero():
    assert assign_text_positions(3, 0) == [
        PositionTriple(0, 0, 0),
        PositionTriple(1, 1, 1),
        PositionTriple(2, 2, 2),
    ]


def test_text_positions_empty():
    assert assign_text_positions(0, 5) == []


def test_text_positions_continue_after_previous_modality():
    # a preceding modality ended at 99, the next span starts at 100
    assert assign_text_positions(2, 100) == [
        PositionTriple(100, 100, 100),
        PositionTriple(101, 101, 101),
    ]


def test_audio_fifty_frames_cover_two_seconds():
    n_frames = 2000 // 40  # arithmetic oracle: 2000 ms at 40 ms per frame
    assert n_frames == 50
    triples = assign_audio_positions(n_frames, 0)
    assert triples[0] == PositionTriple(0, 0, 0)
    assert triples[-1] == PositionTriple(49, 49, 49)
    assert len(triples) == 50


def test_audio_single_frame_offset():
    assert assign_audio_positions(1, 7) == [PositionTriple(7, 7, 7)]


def test_audio_empty():
    assert assign_audio_positions(0, 0) == []


def test_image_two_by_two_row_major():
    assert assign_image_positions(2, 2, 0) == [
        PositionTriple(0, 0, 0),
        PositionTriple(0, 0, 1),
        PositionTriple(0, 1, 0),
        PositionTriple(0, 1, 1),
    ]


def test_image_offset_matches_row_major_rederivation():
    h, w, start = 1, 3, 4
    # independent re-derivation: element index -> (row, col) by divmod
    expected = []
    for i in range(h * w):
        r, c = divmod(i, w)
        expected.append(PositionTriple(start, start + r, start + c))
    assert assign_image_positions(h, w, start) == expected


def test_image_rejects_zero_grid():
    with pytest.raises(ValueError):
        assign_image_positions(0, 3, 0)


def test_video_temporal_ids_from_timestamps():
    ids = [tid for tid, _ in assign_video_positions([0, 1000], 1, 1, 0)]
    assert ids == [0, 1000 // 40]
    assert ids == [0, 25]


def test_video_single_frame_reduces_to_image():
    (_, triples), = assign_video_positions([0], 2, 1, 0)
    assert triples == [PositionTriple(0, 0, 0), PositionTriple(0, 1, 0)]


def test_video_rejects_duplicate_timestamps():
    with pytest.raises(ValueError):
        assign_video_positions([0, 0], 1, 1, 0)


def test_video_rounding_is_half_up():
    # 500/40 = 12.5 rounds up to 13; 460/40 = 11.5 rounds up to 12
    ids = [tid for tid, _ in assign_video_positions([460, 500], 1, 1, 0)]
    assert ids == [12, 13]


def test_video_monotone_ids():
    rng = np.random.default_rng(11)
    for _ in range(200):
        times = np.cumsum(rng.integers(1, 200, size=8)).tolist()
        ids = [tid for tid, _ in assign_video_positions(times, 1, 1, 0)]
        assert all(b >= a for a, b in zip(ids, ids[1:]))
        gaps = [t2 - t1 for t1, t2 in zip(times, times[1:])]
        for (a, b), gap in zip(zip(ids, ids[1:]), gaps):
            if gap >= 40:
                assert b > a


def test_image_as_video_two_identical_frames():
    frames = image_as_video(ModalitySegment.image(2, 2))
    assert [f.kind for f in frames] == [Kind.VIDEO_FRAME, Kind.VIDEO_FRAME]
    assert frames[0].grid == frames[1].grid == (2, 2)
    assert (frames[0].time_ms, frames[1].time_ms) == (0, 40)
    # consecutive temporal IDs once packed
    packed = pack_sequence(frames)
    tids = sorted({e.triple.t for e in packed.elements})
    assert tids == [0, 1]


def test_image_as_video_minimal_grid():
    frames = image_as_video(ModalitySegment.image(1, 1))
    assert [f.length for f in frames] == [1, 1]


def test_image_as_video_rejects_non_image():
    with pytest.raises(ValueError):
        image_as_video(ModalitySegment.audio(5))


def _brute_force_windows(video_times, audio_start, n_audio, chunk_ms=2000):
    """Oracle: classify every frame by timestamp into half-open windows."""
    windows = {}
    for t in video_times:
        windows.setdefault(t // chunk_ms, ([], []))[0].append(t)
    for i in range(n_audio):
        t = audio_start + 40 * i
        windows.setdefault(t // chunk_ms, ([], []))[1].append(i)
    return windows


def test_interleave_four_seconds_two_fps():
    video = [ModalitySegment.video_frame(1, 1, t) for t in range(0, 4000, 500)]
    audio = ModalitySegment.audio(100, time_ms=0)
    out = interleave_video_audio(video, audio)

    oracle = _brute_force_windows(list(range(0, 4000, 500)), 0, 100)
    assert sorted(oracle) == [0, 1]
    assert len(oracle[0][0]) == 4 and oracle[0][1] == list(range(50))
    assert len(oracle[1][0]) == 4 and oracle[1][1] == list(range(50, 100))

    kinds = [s.kind for s in out]
    assert kinds == [Kind.VIDEO_FRAME] * 4 + [Kind.AUDIO] + [Kind.VIDEO_FRAME] * 4 + [Kind.AUDIO]
    assert out[4].length == 50 and out[4].time_ms == 0
    assert out[9].length == 50 and out[9].time_ms == 2000


def test_interleave_frame_at_exact_boundary_goes_right():
    video = [ModalitySegment.video_frame(1, 1, 2000)]
    audio = ModalitySegment.audio(1, time_ms=0)
    out = interleave_video_audio(video, audio)
    # window 0 holds only the audio frame, window 1 the video frame
    assert [s.kind for s in out] == [Kind.AUDIO, Kind.VIDEO_FRAME]


def test_interleave_audio_only():
    out = interleave_video_audio([], ModalitySegment.audio(25, time_ms=0))
    assert len(out) == 1 and out[0].kind is Kind.AUDIO and out[0].length == 25


def test_interleave_rejects_empty_both_sides():
    with pytest.raises(ValueError):
        interleave_video_audio([], None)


def test_interleave_is_permutation_and_window_ordered():
    rng = np.random.default_rng(23)
    for _ in range(200):
        n_video = int(rng.integers(0, 12))
        times = sorted(rng.choice(8000, size=n_video, replace=False).tolist())
        video = [ModalitySegment.video_frame(1, 1, int(t)) for t in times]
        n_audio = int(rng.integers(0, 120))
        audio_start = int(rng.integers(0, 2000))
        audio = ModalitySegment.audio(n_audio, time_ms=audio_start) if n_audio else None
        if not video and audio is None:
            continue
        out = interleave_video_audio(video, audio)

        out_video_times = sorted(s.time_ms for s in out if s.kind is Kind.VIDEO_FRAME)
        assert out_video_times == times  # multiset equality, times are unique
        assert sum(s.length for s in out if s.kind is Kind.AUDIO) == n_audio

        # reconstruct (window, lane, time) and demand sorted order
        order = []
        for s in out:
            if s.kind is Kind.VIDEO_FRAME:
                order.append((s.time_ms // 2000, 0, s.time_ms))
            else:
                for i in range(s.length):
                    t = s.time_ms + 40 * i
                    order.append((t // 2000, 1, t))
        assert order == sorted(order)


def test_pack_text_then_audio_boundary():
    packed = pack_sequence([ModalitySegment.text(3), ModalitySegment.audio(2)])
    assert [tuple(e.triple) for e in packed.elements] == [
        (0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3), (4, 4, 4),
    ]
    assert packed.max_position == 4


def test_pack_image_max_position():
    packed = pack_sequence([ModalitySegment.image(2, 3)])
    assert len(packed) == 6
    brute_max = max(max(e.triple) for e in packed.elements)
    assert packed.max_position == brute_max == 2


def test_pack_rejects_empty():
    with pytest.raises(ValueError):
        pack_sequence([])


def _random_segments(rng, allow_timed_runs=True):
    segments = []
    for _ in range(int(rng.integers(1, 7))):
        kind = rng.integers(0, 4)
        if kind == 0:
            segments.append(ModalitySegment.text(int(rng.integers(1, 6))))
        elif kind == 1:
            segments.append(ModalitySegment.audio(int(rng.integers(1, 8)), time_ms=int(rng.integers(0, 3)) * 40))
        elif kind == 2:
            segments.append(ModalitySegment.image(int(rng.integers(1, 4)), int(rng.integers(1, 4))))
        else:
            segments.append(ModalitySegment.video_frame(int(rng.integers(1, 3)), int(rng.integers(1, 3)), time_ms=int(rng.integers(0, 50)) * 40))
    return segments


def _spans(segments):
    """Span grouping rule: maximal runs of timed segments, singletons otherwise."""
    spans, run = [], []
    for idx, seg in enumerate(segments):
        if seg.kind in (Kind.AUDIO, Kind.VIDEO_FRAME):
            run.append(idx)
        else:
            if run:
                spans.append(run)
                run = []
            spans.append([idx])
    if run:
        spans.append(run)
    return spans


def test_pack_boundary_rule_random_segment_lists():
    rng = np.random.default_rng(7)
    for _ in range(300):
        segments = _random_segments(rng)
        packed = pack_sequence(segments)
        by_segment = {}
        for e in packed.elements:
            by_segment.setdefault(e.segment_index, []).append(e.triple)
        prev_max = -1
        for span in _spans(segments):
            triples = [t for idx in span for t in by_segment[idx]]
            lo = min(min(t) for t in triples)
            hi = max(max(t) for t in triples)
            assert lo == prev_max + 1
            prev_max = hi
        assert packed.max_position == prev_max


def test_pack_text_audio_identity_components():
    rng = np.random.default_rng(13)
    for _ in range(100):
        packed = pack_sequence(_random_segments(rng))
        for e in packed.elements:
            if e.kind in (Kind.TEXT, Kind.AUDIO):
                assert e.triple.t == e.triple.h == e.triple.w


def test_pack_interleaved_share_temporal_clock():
    video = [ModalitySegment.video_frame(1, 1, t) for t in (0, 2000)]
    audio = ModalitySegment.audio(100, time_ms=0)
    packed = pack_sequence([ModalitySegment.text(4)] + interleave_video_audio(video, audio))
    base = 4
    vid = [e.triple.t for e in packed.elements if e.kind is Kind.VIDEO_FRAME]
    aud = [e.triple.t for e in packed.elements if e.kind is Kind.AUDIO]
    # video at 0 ms and audio frame 0 share a temporal ID; video at 2000 ms
    # shares with audio frame 50
    assert vid == [base, base + 50]
    assert aud[0] == base and aud[50] == base + 50


def test_pack_deterministic():
    rng = np.random.default_rng(17)
    for _ in range(50):
        segments = _random_segments(rng)
        assert pack_sequence(segments) == pack_sequence(segments)
