"""Preference objective over sequence log-probabilities.

The loss is a logistic function of the policy-vs-reference log-probability
margin between a preferred and a dispreferred sequence:
``-log sigmoid(beta * ((lp_pw - lp_rw) - (lp_pl - lp_rl)))``. A ranking
helper picks the winner/loser pair from reward-scored candidates; the
reward itself is whatever scalar function the caller supplies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class DpoTriplet:
    """Policy and reference sequence log-probs for a preference pair."""

    lp_policy_w: float
    lp_policy_l: float
    lp_ref_w: float
    lp_ref_l: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("lp_policy_w", "lp_policy_l", "lp_ref_w", "lp_ref_l"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive and finite")

    def margin(self) -> float:
        """Winner log-ratio minus loser log-ratio."""
        return (self.lp_policy_w - self.lp_ref_w) - (self.lp_policy_l - self.lp_ref_l)


def dpo_loss(t: DpoTriplet) -> float:
    """-log sigmoid(beta * margin); log 2 at zero margin."""
    return float(np.logaddexp(0.0, -t.beta * t.margin()))


def sequence_logprob(logits: np.ndarray, tokens: Sequence[int]) -> float:
    """Sum over steps of log softmax(logits_t)[token_t] (not length-normalized)."""
    logits = np.asarray(logits, dtype=np.float64)
    tokens = np.asarray(tokens, dtype=np.intp)
    if logits.ndim != 2 or logits.shape[0] != tokens.shape[0]:
        raise ValueError("need one logit row per token")
    z = logits - logits.max(axis=-1, keepdims=True)
    logp = z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))
    return float(np.sum(logp[np.arange(len(tokens)), tokens]))


class RankedPair(NamedTuple):
    winner: Any
    loser: Any
    winner_index: int
    loser_index: int


def rank_candidates(candidates: Sequence[tuple[Any, float]]) -> RankedPair:
    """Pick (max-reward, min-reward) candidates; ties go to the lowest index.

    The loser is drawn from the remaining candidates, so winner and loser
    always differ, even when every reward is equal.
    """
    if len(candidates) < 2:
        raise ValueError("need at least two candidates to rank")
    rewards = [float(r) for _, r in candidates]
    i_w = max(range(len(rewards)), key=lambda i: (rewards[i], -i))
    rest = [i for i in range(len(rewards)) if i != i_w]
    i_l = min(rest, key=lambda i: (rewards[i], i))
    return RankedPair(candidates[i_w][0], candidates[i_l][0], i_w, i_l)
