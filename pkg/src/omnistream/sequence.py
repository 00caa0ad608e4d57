"""Position assignment and ordering for mixed text/audio/image/video sequences.

Every sequence element carries a (temporal, height, width) position triple.
Text and audio use identical components; one temporal unit corresponds to
40 ms of real time for timed modalities. Synchronized audio and video are
ordered by splitting the shared timeline into 2-second windows with the
video tokens of each window placed ahead of its audio frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

AUDIO_FRAME_MS = 40
TEMPORAL_UNIT_MS = 40
INTERLEAVE_CHUNK_MS = 2000


class Kind(Enum):
    TEXT = "text"
    AUDIO = "audio"
    IMAGE = "image"
    VIDEO_FRAME = "video"


class PositionTriple(NamedTuple):
    """Temporal/height/width position IDs of one sequence element."""

    t: int
    h: int
    w: int


class PackedElement(NamedTuple):
    kind: Kind
    triple: PositionTriple
    segment_index: int


@dataclass(frozen=True)
class ModalitySegment:
    """A typed run of sequence elements with optional grid and timing info.

    Args:
        kind: element modality.
        length: number of sequence elements in the run (>= 1).
        grid: (h_tokens, w_tokens) for IMAGE / VIDEO_FRAME, None otherwise.
        time_ms: start time for AUDIO / VIDEO_FRAME, None for TEXT / IMAGE.
        frame_ms: audio frame duration; fixed at 40 ms.
    """

    kind: Kind
    length: int
    grid: Optional[tuple[int, int]] = None
    time_ms: Optional[int] = None
    frame_ms: int = AUDIO_FRAME_MS

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError(f"segment length must be >= 1, got {self.length}")
        if self.kind in (Kind.IMAGE, Kind.VIDEO_FRAME):
            if self.grid is None:
                raise ValueError(f"{self.kind.value} segment requires a grid")
            h, w = self.grid
            if h < 1 or w < 1:
                raise ValueError(f"grid sides must be >= 1, got {self.grid}")
            if self.length != h * w:
                raise ValueError(
                    f"length {self.length} does not match grid {h}x{w}"
                )
        elif self.grid is not None:
            raise ValueError(f"{self.kind.value} segment must not carry a grid")
        if self.kind in (Kind.AUDIO, Kind.VIDEO_FRAME):
            if self.time_ms is None or self.time_ms < 0:
                raise ValueError(
                    f"{self.kind.value} segment requires time_ms >= 0"
                )
        elif self.time_ms is not None:
            raise ValueError(f"{self.kind.value} segment must not carry time_ms")
        if self.kind is Kind.AUDIO and self.frame_ms != AUDIO_FRAME_MS:
            raise ValueError(f"audio frames are fixed at {AUDIO_FRAME_MS} ms")

    @staticmethod
    def text(n: int) -> "ModalitySegment":
        return ModalitySegment(Kind.TEXT, n)

    @staticmethod
    def audio(n_frames: int, time_ms: int = 0) -> "ModalitySegment":
        return ModalitySegment(Kind.AUDIO, n_frames, time_ms=time_ms)

    @staticmethod
    def image(h_tokens: int, w_tokens: int) -> "ModalitySegment":
        return ModalitySegment(Kind.IMAGE, h_tokens * w_tokens, grid=(h_tokens, w_tokens))

    @staticmethod
    def video_frame(h_tokens: int, w_tokens: int, time_ms: int) -> "ModalitySegment":
        return ModalitySegment(
            Kind.VIDEO_FRAME, h_tokens * w_tokens, grid=(h_tokens, w_tokens), time_ms=time_ms
        )


@dataclass(frozen=True)
class PackedSequence:
    """Model-input ordering of elements with their position triples."""

    elements: tuple[PackedElement, ...]
    max_position: int

    def __len__(self) -> int:
        return len(self.elements)

    def triples(self) -> list[PositionTriple]:
        return [e.triple for e in self.elements]

    def kinds(self) -> list[Kind]:
        return [e.kind for e in self.elements]


def _temporal_id(time_ms: int) -> int:
    # round-half-up of time/40, exact in integer arithmetic
    return (time_ms + TEMPORAL_UNIT_MS // 2) // TEMPORAL_UNIT_MS


def assign_text_positions(n: int, start: int) -> list[PositionTriple]:
    """Consecutive identical-component triples for n text tokens."""
    if n < 0 or start < 0:
        raise ValueError("n and start must be non-negative")
    return [PositionTriple(start + i, start + i, start + i) for i in range(n)]


def assign_audio_positions(n_frames: int, start: int) -> list[PositionTriple]:
    """One temporal unit (40 ms) per audio frame, identical components."""
    if n_frames < 0 or start < 0:
        raise ValueError("n_frames and start must be non-negative")
    return [PositionTriple(start + i, start + i, start + i) for i in range(n_frames)]


def assign_image_positions(h_tokens: int, w_tokens: int, start: int) -> list[PositionTriple]:
    """Constant temporal ID, row-major height/width IDs offset from `start`."""
    if h_tokens < 1 or w_tokens < 1:
        raise ValueError(f"grid must be at least 1x1, got {h_tokens}x{w_tokens}")
    if start < 0:
        raise ValueError("start must be non-negative")
    return [
        PositionTriple(start, start + r, start + c)
        for r in range(h_tokens)
        for c in range(w_tokens)
    ]


def assign_video_positions(
    frame_times_ms: Sequence[int], h_tokens: int, w_tokens: int, start: int
) -> list[tuple[int, list[PositionTriple]]]:
    """Per-frame temporal IDs from real timestamps, grid IDs as for images.

    A frame at time tau receives temporal ID ``start + round(tau / 40)``
    (half-up), so uneven frame rates land on the 40 ms clock.

    Returns:
        One (frame_temporal_id, triples) pair per frame, in input order.
    """
    if start < 0:
        raise ValueError("start must be non-negative")
    for a, b in zip(frame_times_ms, frame_times_ms[1:]):
        if b <= a:
            raise ValueError(f"frame times must be strictly increasing, got {a} then {b}")
    if frame_times_ms and frame_times_ms[0] < 0:
        raise ValueError("frame times must be non-negative")
    out = []
    for tau in frame_times_ms:
        tid = start + _temporal_id(tau)
        out.append((tid, assign_image_positions(h_tokens, w_tokens, tid)))
    return out


def image_as_video(segment: ModalitySegment) -> list[ModalitySegment]:
    """Represent a still image as two identical video frames, 40 ms apart."""
    if segment.kind is not Kind.IMAGE:
        raise ValueError(f"expected an image segment, got {segment.kind.value}")
    h, w = segment.grid
    return [
        ModalitySegment.video_frame(h, w, time_ms=0),
        ModalitySegment.video_frame(h, w, time_ms=AUDIO_FRAME_MS),
    ]


def interleave_video_audio(
    video_frames: Sequence[ModalitySegment],
    audio: Optional[ModalitySegment],
    chunk_ms: int = INTERLEAVE_CHUNK_MS,
) -> list[ModalitySegment]:
    """Order a synchronized audio/video timeline into 2-second windows.

    The time axis is cut into half-open windows [k*chunk_ms, (k+1)*chunk_ms).
    Within each window every video frame precedes every audio frame; windows
    are emitted in ascending order, trailing partial window included. Audio
    is re-emitted as one segment per window it spans.

    Args:
        video_frames: VIDEO_FRAME segments (any order; sorted by time here).
        audio: a single AUDIO segment, or None for video-only input.
        chunk_ms: window length in milliseconds.

    Returns:
        The interleaved segment list.
    """
    if chunk_ms <= 0:
        raise ValueError("chunk_ms must be positive")
    for seg in video_frames:
        if seg.kind is not Kind.VIDEO_FRAME:
            raise ValueError(f"video_frames must contain video frames, got {seg.kind.value}")
    if audio is not None and audio.kind is not Kind.AUDIO:
        raise ValueError(f"audio side must be an audio segment, got {audio.kind.value}")
    if not video_frames and audio is None:
        raise ValueError("nothing to interleave: no video frames and no audio")

    windows: dict[int, tuple[list[ModalitySegment], list[int]]] = {}

    def bucket(k: int) -> tuple[list[ModalitySegment], list[int]]:
        return windows.setdefault(k, ([], []))

    for seg in sorted(video_frames, key=lambda s: s.time_ms):
        bucket(seg.time_ms // chunk_ms)[0].append(seg)
    if audio is not None:
        for i in range(audio.length):
            t = audio.time_ms + i * audio.frame_ms
            bucket(t // chunk_ms)[1].append(i)

    out: list[ModalitySegment] = []
    for k in sorted(windows):
        vids, audio_idx = windows[k]
        out.extend(vids)
        if audio_idx:
            # frames of one window are contiguous in the source audio
            first = audio_idx[0]
            out.append(
                ModalitySegment.audio(
                    len(audio_idx), time_ms=audio.time_ms + first * audio.frame_ms
                )
            )
    return out


def _is_timed(seg: ModalitySegment) -> bool:
    return seg.kind in (Kind.AUDIO, Kind.VIDEO_FRAME)


def pack_sequence(segments: Sequence[ModalitySegment]) -> PackedSequence:
    """Assign position triples to an ordered segment list.

    Each span starts one past the maximum position component assigned so
    far. A maximal run of consecutive timed segments (audio / video frames)
    forms a single span with one temporal clock anchored at the earliest
    timestamp in the run, so simultaneous audio and video content receives
    equal temporal IDs. Untimed segments are spans of their own.
    """
    if not segments:
        raise ValueError("cannot pack an empty segment list")

    elements: list[PackedElement] = []
    prev_max = -1

    def emit(kind: Kind, triples: Sequence[PositionTriple], seg_idx: int) -> None:
        nonlocal prev_max
        for tr in triples:
            elements.append(PackedElement(kind, tr, seg_idx))
            prev_max = max(prev_max, tr.t, tr.h, tr.w)

    i = 0
    n = len(segments)
    while i < n:
        seg = segments[i]
        base = prev_max + 1
        if not _is_timed(seg):
            if seg.kind is Kind.TEXT:
                emit(Kind.TEXT, assign_text_positions(seg.length, base), i)
            else:
                h, w = seg.grid
                emit(Kind.IMAGE, assign_image_positions(h, w, base), i)
            i += 1
            continue

        # timed run: shared clock across consecutive audio / video segments
        j = i
        while j < n and _is_timed(segments[j]):
            j += 1
        run = range(i, j)
        t0 = min(segments[r].time_ms for r in run)
        for r in run:
            s = segments[r]
            if s.kind is Kind.AUDIO:
                first = base + _temporal_id(s.time_ms - t0)
                emit(Kind.AUDIO, assign_audio_positions(s.length, first), r)
            else:
                h, w = s.grid
                rel = s.time_ms - t0
                (_, triples), = assign_video_positions([rel], h, w, base)
                emit(Kind.VIDEO_FRAME, triples, r)
        i = j

    return PackedSequence(tuple(elements), prev_max)
