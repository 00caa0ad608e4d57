"""First-packet latency accounting over a synthetic stage-cost model.

A pipeline trace is a list of timestamped stage events. The time to first
audio splits into four additive parts: input processing (prefill), from
input ready to the first speech code, from the first code to the first
decoded audio chunk, and a fixed architecture-inherent overhead.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

PREFILL_CHUNK = "prefill_chunk"
TEXT_TOKEN = "text_token"
SPEECH_CODE = "speech_code"
MEL_CHUNK = "mel_chunk"
WAVE_CHUNK = "wave_chunk"


@dataclass(frozen=True)
class StageCosts:
    """Per-event stage durations (ms) plus a fixed architecture overhead."""

    prefill_chunk: float = 0.0
    thinker_step: float = 0.0
    talker_step: float = 0.0
    dit_chunk: float = 0.0
    vocoder_chunk: float = 0.0
    architecture: float = 0.0

    def __post_init__(self) -> None:
        for name, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"stage cost {name} must be non-negative")


@dataclass(frozen=True)
class TraceEvent:
    kind: str
    index: int
    t_start: float
    t_end: float


@dataclass(frozen=True)
class LatencyBreakdown:
    """Four additive components of the first-packet delay."""

    input_processing: float
    text_to_first_code: float
    code_to_first_audio: float
    architecture: float

    @property
    def total(self) -> float:
        return (
            self.input_processing
            + self.text_to_first_code
            + self.code_to_first_audio
            + self.architecture
        )

    def as_dict(self) -> dict[str, float]:
        d = asdict(self)
        d["total"] = self.total
        return d


def simulate_first_packet(
    costs: StageCosts,
    n_prefill_chunks: int = 4,
    block_size: int = 4,
    lookahead: int = 1,
) -> list[TraceEvent]:
    """Sequential trace up to the first audio chunk.

    One speech code is produced per text step; the first mel chunk needs
    block 0 plus ``lookahead`` further blocks of codes before it can be
    decoded and vocoded.
    """
    if n_prefill_chunks < 0 or block_size < 1 or lookahead < 0:
        raise ValueError("invalid simulation sizes")
    events: list[TraceEvent] = []
    t = 0.0

    def run(kind: str, index: int, cost: float) -> None:
        nonlocal t
        events.append(TraceEvent(kind, index, t, t + cost))
        t += cost

    for i in range(n_prefill_chunks):
        run(PREFILL_CHUNK, i, costs.prefill_chunk)
    codes_needed = block_size * (1 + lookahead)
    for i in range(codes_needed):
        run(TEXT_TOKEN, i, costs.thinker_step)
        run(SPEECH_CODE, i, costs.talker_step)
    run(MEL_CHUNK, 0, costs.dit_chunk)
    run(WAVE_CHUNK, 0, costs.vocoder_chunk)
    return events


def _first(trace: Sequence[TraceEvent], kind: str) -> TraceEvent | None:
    for e in trace:
        if e.kind == kind:
            return e
    return None


def first_packet_latency(trace: Sequence[TraceEvent], costs: StageCosts) -> LatencyBreakdown:
    """Split the trace's time-to-first-audio into the four components."""
    first_code = _first(trace, SPEECH_CODE)
    first_mel = _first(trace, MEL_CHUNK)
    if first_code is None or first_mel is None:
        raise ValueError("trace must contain a speech code and a decoded chunk")
    input_done = max((e.t_end for e in trace if e.kind == PREFILL_CHUNK), default=0.0)
    first_wave = _first(trace, WAVE_CHUNK)
    audio_ready = (first_wave or first_mel).t_end
    parts = (
        input_done,
        first_code.t_end - input_done,
        audio_ready - first_code.t_end,
        costs.architecture,
    )
    if any(p < 0 for p in parts):
        raise ValueError("trace stages are out of order")
    return LatencyBreakdown(*parts)
