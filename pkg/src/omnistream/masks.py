"""Dense attention-mask constructors for streaming layouts.

Covers the 2-second block mask of the audio encoder, plain causal masks,
the code-to-mel sliding-window mask (2 blocks back, 1 ahead), and the
chunk schedule used for prefilling. Masks are materialized densely; at
larger scale each recipe reduces to per-row index intervals
(block masks: [block_start, block_end); causal: [0, i]; window:
[(b-lookback)*size, (b+lookahead+1)*size)).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

AUDIO_FRAMES_PER_BLOCK = 50  # 2 s of 40 ms frames


@dataclass(frozen=True)
class BlockLayout:
    """Partition of sequence indices into fixed-size blocks."""

    block_size: int

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    def block_of(self, i: int) -> int:
        return i // self.block_size

    def n_blocks(self, n: int) -> int:
        return -(-n // self.block_size)

    def span(self, block: int, n: int) -> tuple[int, int]:
        """Half-open index span of a block, clipped to sequence length."""
        lo = block * self.block_size
        return lo, min(lo + self.block_size, n)


@dataclass(frozen=True)
class AttentionMask:
    """Boolean allow-matrix: allow[i, j] means query i may attend key j."""

    allow: np.ndarray

    def __post_init__(self) -> None:
        a = self.allow
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.dtype != np.bool_:
            raise ValueError("allow must be a square boolean matrix")

    @property
    def n(self) -> int:
        return self.allow.shape[0]

    def receptive_field(self, i: int) -> set[int]:
        return set(np.flatnonzero(self.allow[i]).tolist())

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.allow:
            buf.write(",".join("1" if v else "0" for v in row) + "\n")
        return buf.getvalue()

    def to_pgm(self) -> str:
        """Plain PGM (P2) dump, 1 = allowed, for quick visualization."""
        buf = io.StringIO()
        buf.write(f"P2\n{self.n} {self.n}\n1\n")
        for row in self.allow:
            buf.write(" ".join("1" if v else "0" for v in row) + "\n")
        return buf.getvalue()


def audio_block_mask(n_frames: int, frames_per_block: int = AUDIO_FRAMES_PER_BLOCK) -> AttentionMask:
    """Bidirectional attention inside fixed 2-second blocks, none across."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    layout = BlockLayout(frames_per_block)
    blocks = np.arange(n_frames) // layout.block_size
    return AttentionMask(blocks[:, None] == blocks[None, :])


def causal_mask(n: int) -> AttentionMask:
    """Lower-triangular decoder mask."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(n)
    return AttentionMask(idx[None, :] <= idx[:, None])


def dit_window_mask(
    n_codes: int, block_size: int, lookback: int = 2, lookahead: int = 1
) -> AttentionMask:
    """Sliding-window block mask for the code-to-mel decoder.

    Query blocks see ``lookback`` blocks behind through ``lookahead`` blocks
    ahead of themselves, a receptive field of lookback + 1 + lookahead
    blocks (4 with the defaults).
    """
    if n_codes < 1:
        raise ValueError("n_codes must be >= 1")
    if lookback < 0 or lookahead < 0:
        raise ValueError("lookback and lookahead must be non-negative")
    layout = BlockLayout(block_size)
    blocks = np.arange(n_codes) // layout.block_size
    diff = blocks[None, :] - blocks[:, None]  # key block minus query block
    return AttentionMask((diff >= -lookback) & (diff <= lookahead))


def prefill_plan(total_len: int, chunk_len: int) -> list[tuple[int, int]]:
    """Consecutive half-open spans of at most chunk_len covering [0, total_len)."""
    if total_len < 0:
        raise ValueError("total_len must be >= 0")
    if chunk_len < 1:
        raise ValueError("chunk_len must be >= 1")
    return [(s, min(s + chunk_len, total_len)) for s in range(0, total_len, chunk_len)]


def mask_receptive_field(mask: AttentionMask, i: int) -> set[int]:
    """Key indices query i may attend under the mask."""
    return mask.receptive_field(i)
