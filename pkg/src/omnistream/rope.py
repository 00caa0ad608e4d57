"""Rotary position embedding split into temporal/height/width channel groups.

The head_dim/2 rotation pairs are partitioned into three contiguous groups
(t, h, w). Pair j keeps the standard rotary frequency for its global index,
``theta_base ** (-2j / head_dim)``, and draws its rotation angle from the
position-triple component its group belongs to. With identical components
(text, audio) every pair angle matches the plain 1-D schedule, so scores
reduce exactly to ordinary rotary attention for any split.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .sequence import PositionTriple

DEFAULT_THETA = 10000.0


def default_split(head_dim: int) -> tuple[int, int, int]:
    """Proportional 2:1:1 allocation of head_dim/2 pairs to (t, h, w)."""
    pairs = head_dim // 2
    quarter = pairs // 4
    return (pairs - 2 * quarter, quarter, quarter)


@dataclass(frozen=True)
class RopeConfig:
    """Rotary geometry: head size, per-component pair counts, frequency base.

    ``split`` gives the number of rotation pairs driven by the temporal,
    height and width components; the three counts must sum to head_dim/2.
    When omitted it defaults to the 2:1:1 allocation.
    """

    head_dim: int
    split: Optional[tuple[int, int, int]] = None
    theta_base: float = DEFAULT_THETA

    def __post_init__(self) -> None:
        if self.head_dim <= 0 or self.head_dim % 2 != 0:
            raise ValueError(f"head_dim must be a positive even integer, got {self.head_dim}")
        if self.theta_base <= 0:
            raise ValueError("theta_base must be positive")
        if self.split is None:
            object.__setattr__(self, "split", default_split(self.head_dim))
        d_t, d_h, d_w = self.split
        if min(d_t, d_h, d_w) < 0 or d_t + d_h + d_w != self.head_dim // 2:
            raise ValueError(
                f"split {self.split} must be non-negative and sum to head_dim/2 = {self.head_dim // 2}"
            )

    @property
    def n_pairs(self) -> int:
        return self.head_dim // 2

    def inv_freq(self) -> np.ndarray:
        """Frequency of each pair: theta_base ** (-2j / head_dim)."""
        j = np.arange(self.n_pairs, dtype=np.float64)
        return self.theta_base ** (-2.0 * j / self.head_dim)

    def component_of_pair(self) -> np.ndarray:
        """Component index (0=t, 1=h, 2=w) driving each pair."""
        d_t, d_h, d_w = self.split
        return np.repeat([0, 1, 2], [d_t, d_h, d_w])


@dataclass(frozen=True)
class RotationPlan:
    """Per-element rotation angles, one row of head_dim/2 radians each."""

    angles: np.ndarray  # (n, head_dim // 2)

    def row(self, i: int) -> np.ndarray:
        return self.angles[i]

    def to_csv(self) -> str:
        """Angle table as CSV (element index, then one column per pair)."""
        buf = io.StringIO()
        buf.write("index," + ",".join(f"pair{j}" for j in range(self.angles.shape[1])) + "\n")
        for i, row in enumerate(self.angles):
            buf.write(f"{i}," + ",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def build_plan(triples: Sequence[PositionTriple], cfg: RopeConfig) -> RotationPlan:
    """Angle table for a triple sequence: angle[i, j] = triple[i][c(j)] * freq(j)."""
    pos = np.asarray([(p[0], p[1], p[2]) for p in triples], dtype=np.float64)
    pos = pos.reshape(-1, 3)  # keeps the empty case 2-D
    driver = pos[:, cfg.component_of_pair()]  # (n, pairs)
    return RotationPlan(driver * cfg.inv_freq())


def rotate_pairs(x: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rotate adjacent coordinate pairs (x[2j], x[2j+1]) by angles[..., j].

    Works on any leading batch shape; the trailing axis of ``x`` must be
    twice the trailing axis of ``angles``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 2 * angles.shape[-1]:
        raise ValueError(
            f"vector length {x.shape[-1]} does not match {angles.shape[-1]} rotation pairs"
        )
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = x[..., 0::2], x[..., 1::2]
    out = np.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def apply_rotary(vec: np.ndarray, plan_row: np.ndarray) -> np.ndarray:
    """Apply one plan row to a single head_dim vector (norm preserving)."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError("apply_rotary expects a 1-D vector")
    return rotate_pairs(vec, np.asarray(plan_row, dtype=np.float64))


def attention_score(
    q: np.ndarray,
    k: np.ndarray,
    pq: PositionTriple,
    pk: PositionTriple,
    cfg: RopeConfig,
) -> float:
    """Dot product of the rotated query and key at their positions."""
    plan = build_plan([pq, pk], cfg)
    return float(np.dot(apply_rotary(q, plan.row(0)), apply_rotary(k, plan.row(1))))


def rope_1d_angles(positions: Sequence[int], head_dim: int, theta_base: float = DEFAULT_THETA) -> np.ndarray:
    """Classic 1-D rotary angle table: angle[i, j] = pos[i] * theta ** (-2j/D)."""
    cfg = RopeConfig(head_dim, split=(head_dim // 2, 0, 0), theta_base=theta_base)
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 1)
    return pos * cfg.inv_freq()
