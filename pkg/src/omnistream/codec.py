"""Toy streaming code-to-waveform pipeline with exact chunk equivalence.

Speech codes are grouped into blocks; a one-layer attention decoder turns
each block into a mel chunk while structurally restricted to a four-block
window (two behind, one ahead), so chunks can be emitted one block of
lookahead behind the input. A fixed-receptive-field FIR stage then maps
mel frames to waveform samples chunk by chunk. Both stages evaluate each
output element from exactly the same gathered inputs whether run streamed
or offline, so the two paths agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .masks import BlockLayout, dit_window_mask
from .model import _softmax
from .rope import DEFAULT_THETA, rope_1d_angles, rotate_pairs

MEL_CHANNELS = 128
DEFAULT_BLOCK_SIZE = 4


@dataclass(frozen=True)
class CodeBlockStream:
    """A speech-code sequence with its fixed block grouping."""

    codes: tuple[int, ...]
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple(int(c) for c in self.codes))
        if not self.codes:
            raise ValueError("code stream must be non-empty")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    @property
    def layout(self) -> BlockLayout:
        return BlockLayout(self.block_size)

    @property
    def n_blocks(self) -> int:
        return self.layout.n_blocks(len(self.codes))

    def block_codes(self, k: int) -> tuple[int, ...]:
        lo, hi = self.layout.span(k, len(self.codes))
        return self.codes[lo:hi]


@dataclass(frozen=True)
class MelChunk:
    """Mel frames decoded from one code block."""

    block_index: int
    frames: np.ndarray  # (n_frames, MEL_CHANNELS)

    def __post_init__(self) -> None:
        if self.frames.ndim != 2 or self.frames.shape[1] != MEL_CHANNELS:
            raise ValueError(f"mel frames must have {MEL_CHANNELS} channels")


@dataclass(frozen=True)
class DecoderParams:
    """One masked attention layer plus a linear head over code embeddings."""

    embed: np.ndarray  # (speech_vocab, d)
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    head: np.ndarray  # (d, frames_per_code * MEL_CHANNELS)
    lookback: int = 2
    lookahead: int = 1
    theta_base: float = DEFAULT_THETA

    @property
    def d(self) -> int:
        return self.embed.shape[1]

    @property
    def frames_per_code(self) -> int:
        return self.head.shape[1] // MEL_CHANNELS


def init_decoder_params(
    seed: int = 0,
    speech_vocab: int = 128,
    d: int = 32,
    frames_per_code: int = 2,
    lookback: int = 2,
    lookahead: int = 1,
) -> DecoderParams:
    rng = np.random.default_rng(seed)
    u = lambda *shape: rng.uniform(-0.5, 0.5, size=shape)
    return DecoderParams(
        embed=u(speech_vocab, d),
        wq=u(d, d), wk=u(d, d), wv=u(d, d),
        head=u(d, frames_per_code * MEL_CHANNELS),
        lookback=lookback, lookahead=lookahead,
    )


def _qkv(stream: CodeBlockStream, params: DecoderParams, index: int):
    # one code at a time so streamed and offline paths share every float op
    code = stream.codes[index]
    if not 0 <= code < params.embed.shape[0]:
        raise ValueError(f"code {code} outside vocabulary of {params.embed.shape[0]}")
    e = params.embed[code]
    angles = rope_1d_angles([index], params.d, params.theta_base)[0]
    q = rotate_pairs(e @ params.wq, angles)
    k = rotate_pairs(e @ params.wk, angles)
    v = e @ params.wv
    return q, k, v


def _attend_code(
    stream: CodeBlockStream, i: int, key_indices: Sequence[int], params: DecoderParams
) -> np.ndarray:
    """Mel frames for code i attending the given keys (ascending order)."""
    q_i = _qkv(stream, params, i)[0]
    keys = np.stack([_qkv(stream, params, j)[1] for j in key_indices])
    vals = np.stack([_qkv(stream, params, j)[2] for j in key_indices])
    p = _softmax((keys @ q_i / np.sqrt(params.d))[None, :])[0]
    return ((p @ vals) @ params.head).reshape(params.frames_per_code, MEL_CHANNELS)


def decode_block(stream: CodeBlockStream, k: int, params: DecoderParams) -> MelChunk:
    """Decode block k's mel frames from blocks k-lookback .. k+lookahead only.

    The window is sliced out arithmetically, so codes outside it cannot
    influence the result by construction.
    """
    if not 0 <= k < stream.n_blocks:
        raise ValueError(f"block index {k} out of range [0, {stream.n_blocks})")
    n = len(stream.codes)
    lo, hi = stream.layout.span(k, n)
    win_lo = max(0, (k - params.lookback) * stream.block_size)
    win_hi = min(n, (k + params.lookahead + 1) * stream.block_size)
    window = range(win_lo, win_hi)
    rows = [_attend_code(stream, i, window, params) for i in range(lo, hi)]
    return MelChunk(k, np.concatenate(rows, axis=0))


def offline_decode(stream: CodeBlockStream, params: DecoderParams) -> list[MelChunk]:
    """Full-sequence decode with per-code key sets read off the dense mask."""
    n = len(stream.codes)
    mask = dit_window_mask(n, stream.block_size, params.lookback, params.lookahead)
    layout = stream.layout
    chunks = []
    for k in range(stream.n_blocks):
        lo, hi = layout.span(k, n)
        rows = [
            _attend_code(stream, i, sorted(mask.receptive_field(i)), params)
            for i in range(lo, hi)
        ]
        chunks.append(MelChunk(k, np.concatenate(rows, axis=0)))
    return chunks


class StreamingCodeDecoder:
    """Incremental decoder: feed blocks in order, collect chunks as they free up.

    Chunk k becomes available once block k+lookahead has arrived (or the
    stream ends); a producer may therefore run one block ahead of the
    consumer, which is the pipeline's algorithmic latency.
    """

    def __init__(self, params: DecoderParams, block_size: int = DEFAULT_BLOCK_SIZE):
        self.params = params
        self.block_size = block_size
        self._codes: list[int] = []
        self._blocks_in = 0
        self._emitted = 0
        self._finished = False

    def ingest(self, block_codes: Sequence[int]) -> list[MelChunk]:
        """Add the next block of codes; returns newly decodable chunks."""
        if self._finished:
            raise ValueError("decoder already finished")
        if not block_codes:
            raise ValueError("a block must contain at least one code")
        if self._blocks_in > 0 and len(self._codes) % self.block_size != 0:
            raise ValueError("only the final block may be partial; call finish()")
        self._codes.extend(int(c) for c in block_codes)
        self._blocks_in += 1
        return self._drain(upto=self._blocks_in - 1 - self.params.lookahead)

    def finish(self) -> list[MelChunk]:
        """Flush the chunks still waiting on lookahead at end of input."""
        self._finished = True
        return self._drain(upto=self._blocks_in - 1)

    def _drain(self, upto: int) -> list[MelChunk]:
        stream = CodeBlockStream(tuple(self._codes), self.block_size) if self._codes else None
        out = []
        while self._emitted <= upto:
            out.append(decode_block(stream, self._emitted, self.params))
            self._emitted += 1
        return out


def stream_decode(stream: CodeBlockStream, params: DecoderParams) -> list[MelChunk]:
    """Feed the stream block by block; concatenation equals offline_decode."""
    dec = StreamingCodeDecoder(params, stream.block_size)
    chunks: list[MelChunk] = []
    for k in range(stream.n_blocks):
        chunks.extend(dec.ingest(stream.block_codes(k)))
    chunks.extend(dec.finish())
    return chunks


def mel_frames(chunks: Sequence[MelChunk]) -> np.ndarray:
    return np.concatenate([c.frames for c in chunks], axis=0)


# ---------------------------------------------------------------------------
# waveform stage


@dataclass(frozen=True)
class FirVocoder:
    """Causal FIR map from mel frames to samples with an R-frame field."""

    weights: np.ndarray  # (receptive_field, MEL_CHANNELS, samples_per_frame)
    bias: np.ndarray  # (samples_per_frame,)

    def __post_init__(self) -> None:
        if self.weights.ndim != 3 or self.weights.shape[1] != MEL_CHANNELS:
            raise ValueError("weights must be (R, MEL_CHANNELS, samples_per_frame)")
        if self.weights.shape[0] < 1:
            raise ValueError("receptive field must be >= 1")

    @property
    def receptive_field(self) -> int:
        return self.weights.shape[0]

    @property
    def samples_per_frame(self) -> int:
        return self.weights.shape[2]


def init_vocoder(seed: int = 0, receptive_field: int = 8, samples_per_frame: int = 4) -> FirVocoder:
    rng = np.random.default_rng(seed)
    return FirVocoder(
        weights=rng.uniform(-0.1, 0.1, size=(receptive_field, MEL_CHANNELS, samples_per_frame)),
        bias=rng.uniform(-0.1, 0.1, size=samples_per_frame),
    )


def _fir_frame(window: np.ndarray, filt: FirVocoder) -> np.ndarray:
    # window rows are frames t-R+1 .. t (zero-padded at stream start)
    return np.tensordot(window, filt.weights, axes=([0, 1], [0, 1])) + filt.bias


def vocode(mel: np.ndarray, filt: FirVocoder) -> np.ndarray:
    """Offline waveform: samples_per_frame samples per mel frame."""
    mel = np.asarray(mel, dtype=np.float64)
    if mel.ndim != 2 or mel.shape[1] != MEL_CHANNELS:
        raise ValueError(f"mel must be (n_frames, {MEL_CHANNELS})")
    r = filt.receptive_field
    padded = np.vstack([np.zeros((r - 1, MEL_CHANNELS)), mel])
    return np.concatenate([_fir_frame(padded[t : t + r], filt) for t in range(mel.shape[0])])


def vocode_chunked(mel: np.ndarray, filt: FirVocoder, chunk_frames: int) -> np.ndarray:
    """Chunk-by-chunk waveform keeping R-1 frames of context; equals vocode()."""
    if chunk_frames < 1:
        raise ValueError("chunk_frames must be >= 1")
    mel = np.asarray(mel, dtype=np.float64)
    r = filt.receptive_field
    context = np.zeros((r - 1, MEL_CHANNELS))
    out = []
    for s in range(0, mel.shape[0], chunk_frames):
        chunk = mel[s : s + chunk_frames]
        buf = np.vstack([context, chunk])
        for t in range(chunk.shape[0]):
            out.append(_fir_frame(buf[t : t + r], filt))
        context = buf[buf.shape[0] - (r - 1) :] if r > 1 else np.zeros((0, MEL_CHANNELS))
    return np.concatenate(out) if out else np.zeros(0)
