"""Toy dual-track generator: a text decoder feeding a speech-code decoder.

The thinker is a small pre-norm transformer decoder over packed multimodal
sequences with three-component rotary positions; the talker is a second
causal decoder whose per-step input is the sum of the thinker's hidden
state and the embedding of the token the thinker just sampled. Everything
runs in float64 numpy with hand-written backward passes so analytic
gradients can be checked against central differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .masks import AttentionMask, causal_mask, prefill_plan
from .rope import DEFAULT_THETA, RopeConfig, build_plan, rope_1d_angles, rotate_pairs
from .sequence import Kind, PackedSequence

TEXT_EOS = 0
SPEECH_EOS = 0

_KIND_INDEX = {k: i for i, k in enumerate(Kind)}
_GELU_C = float(np.sqrt(2.0 / np.pi))
_RMS_EPS = 1e-6


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling knobs: nucleus mass, repetition penalty, temperature, seed."""

    top_p: float = 0.9
    repetition_penalty: float = 1.1
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.top_p <= 1.0):
            raise ValueError("top_p must lie in (0, 1]")
        if self.repetition_penalty < 1.0:
            raise ValueError("repetition_penalty must be >= 1")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")


@dataclass
class ModelParams:
    """Dimensions plus every weight matrix, keyed by dotted names."""

    d_model: int
    n_heads: int
    n_layers_thinker: int
    n_layers_talker: int
    text_vocab: int
    speech_vocab: int
    d_ff: int
    rope_cfg: RopeConfig
    weights: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be a multiple of n_heads")
        if self.rope_cfg.head_dim != self.head_dim:
            raise ValueError("rope_cfg.head_dim must equal d_model / n_heads")
        for name, w in self.weights.items():
            if not np.all(np.isfinite(w)):
                raise ValueError(f"non-finite weight {name}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    @classmethod
    def create(
        cls,
        seed: int = 0,
        d_model: int = 64,
        n_heads: int = 4,
        n_layers_thinker: int = 2,
        n_layers_talker: int = 2,
        text_vocab: int = 256,
        speech_vocab: int = 128,
        d_ff: Optional[int] = None,
        rope_split: Optional[tuple[int, int, int]] = None,
        theta_base: float = DEFAULT_THETA,
    ) -> "ModelParams":
        """Seeded uniform(-0.05, 0.05) initialization of every matrix."""
        if d_ff is None:
            d_ff = 2 * d_model
        head_dim = d_model // n_heads
        rope_cfg = RopeConfig(head_dim, split=rope_split, theta_base=theta_base)
        rng = np.random.default_rng(seed)
        w: dict[str, np.ndarray] = {}

        def mat(name: str, *shape: int) -> None:
            w[name] = rng.uniform(-0.05, 0.05, size=shape)

        def stack(prefix: str, n_layers: int, vocab_out: int) -> None:
            for li in range(n_layers):
                w[f"{prefix}.{li}.ln1.g"] = np.ones(d_model)
                mat(f"{prefix}.{li}.wq", d_model, d_model)
                mat(f"{prefix}.{li}.wk", d_model, d_model)
                mat(f"{prefix}.{li}.wv", d_model, d_model)
                mat(f"{prefix}.{li}.wo", d_model, d_model)
                w[f"{prefix}.{li}.ln2.g"] = np.ones(d_model)
                mat(f"{prefix}.{li}.w1", d_model, d_ff)
                mat(f"{prefix}.{li}.w2", d_ff, d_model)
            w[f"{prefix}.lnf.g"] = np.ones(d_model)
            mat(f"{prefix}.head", d_model, vocab_out)

        mat("thinker.embed", text_vocab, d_model)
        mat("thinker.modal_embed", len(Kind), d_model)
        stack("thinker", n_layers_thinker, text_vocab)
        stack("talker", n_layers_talker, speech_vocab)
        return cls(
            d_model, n_heads, n_layers_thinker, n_layers_talker,
            text_vocab, speech_vocab, d_ff, rope_cfg, w,
        )

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(w) for name, w in self.weights.items()}


# ---------------------------------------------------------------------------
# forward / backward primitives


def _softmax(s: np.ndarray) -> np.ndarray:
    m = np.max(s, axis=-1, keepdims=True)
    e = np.exp(s - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def _rmsnorm_fwd(x, g):
    ms = np.mean(x * x, axis=-1, keepdims=True)
    r = 1.0 / np.sqrt(ms + _RMS_EPS)
    return x * r * g, (x, g, r)


def _rmsnorm_bwd(dy, cache):
    x, g, r = cache
    d = x.shape[-1]
    dg = np.sum(dy * x * r, axis=0)
    dyg = dy * g
    s = np.sum(dyg * x, axis=-1, keepdims=True)
    dx = dyg * r - (r ** 3) * x * s / d
    return dx, dg


def _gelu(x):
    u = _GELU_C * (x + 0.044715 * x ** 3)
    return 0.5 * x * (1.0 + np.tanh(u))


def _gelu_grad(x):
    u = _GELU_C * (x + 0.044715 * x ** 3)
    th = np.tanh(u)
    du = _GELU_C * (1.0 + 3.0 * 0.044715 * x ** 2)
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th ** 2) * du


def _split_heads(x, n_heads):
    n, d = x.shape
    return x.reshape(n, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(x):
    h, n, hd = x.shape
    return x.transpose(1, 0, 2).reshape(n, h * hd)


def _attn_fwd(x, angles, allow, wq, wk, wv, wo, n_heads):
    hd = x.shape[1] // n_heads
    q = _split_heads(x @ wq, n_heads)
    k = _split_heads(x @ wk, n_heads)
    v = _split_heads(x @ wv, n_heads)
    qr = rotate_pairs(q, angles)
    kr = rotate_pairs(k, angles)
    scale = 1.0 / np.sqrt(hd)
    s = np.einsum("hid,hjd->hij", qr, kr) * scale
    s = np.where(allow, s, -np.inf)
    p = _softmax(s)
    om = _merge_heads(np.einsum("hij,hjd->hid", p, v))
    out = om @ wo
    cache = (x, angles, v, qr, kr, p, om, wq, wk, wv, wo, scale, n_heads)
    return out, cache


def _attn_bwd(dout, cache):
    x, angles, v, qr, kr, p, om, wq, wk, wv, wo, scale, n_heads = cache
    dwo = om.T @ dout
    do = _split_heads(dout @ wo.T, n_heads)
    dp = np.einsum("hid,hjd->hij", do, v)
    dv = np.einsum("hij,hid->hjd", p, do)
    ds = p * (dp - np.sum(dp * p, axis=-1, keepdims=True)) * scale
    dqr = np.einsum("hij,hjd->hid", ds, kr)
    dkr = np.einsum("hij,hid->hjd", ds, qr)
    dqm = _merge_heads(rotate_pairs(dqr, -angles))
    dkm = _merge_heads(rotate_pairs(dkr, -angles))
    dvm = _merge_heads(dv)
    dx = dqm @ wq.T + dkm @ wk.T + dvm @ wv.T
    return dx, x.T @ dqm, x.T @ dkm, x.T @ dvm, dwo


def _mlp_fwd(x, w1, w2):
    a = x @ w1
    h = _gelu(a)
    return h @ w2, (x, a, h, w1, w2)


def _mlp_bwd(dout, cache):
    x, a, h, w1, w2 = cache
    dw2 = h.T @ dout
    da = (dout @ w2.T) * _gelu_grad(a)
    return da @ w1.T, x.T @ da, dw2


def _stack_fwd(x, angles, allow, params: ModelParams, prefix: str, n_layers: int):
    w = params.weights
    caches = []
    for li in range(n_layers):
        xn1, c1 = _rmsnorm_fwd(x, w[f"{prefix}.{li}.ln1.g"])
        a, ca = _attn_fwd(
            xn1, angles, allow,
            w[f"{prefix}.{li}.wq"], w[f"{prefix}.{li}.wk"],
            w[f"{prefix}.{li}.wv"], w[f"{prefix}.{li}.wo"],
            params.n_heads,
        )
        x1 = x + a
        xn2, c2 = _rmsnorm_fwd(x1, w[f"{prefix}.{li}.ln2.g"])
        m, cm = _mlp_fwd(xn2, w[f"{prefix}.{li}.w1"], w[f"{prefix}.{li}.w2"])
        x = x1 + m
        caches.append((c1, ca, c2, cm))
    h, cf = _rmsnorm_fwd(x, w[f"{prefix}.lnf.g"])
    return h, (caches, cf)


def _stack_bwd(dh, stack_cache, prefix: str, n_layers: int, grads):
    caches, cf = stack_cache
    dx, dgf = _rmsnorm_bwd(dh, cf)
    grads[f"{prefix}.lnf.g"] += dgf
    for li in reversed(range(n_layers)):
        c1, ca, c2, cm = caches[li]
        dxn2, dw1, dw2 = _mlp_bwd(dx, cm)
        grads[f"{prefix}.{li}.w1"] += dw1
        grads[f"{prefix}.{li}.w2"] += dw2
        dx1, dg2 = _rmsnorm_bwd(dxn2, c2)
        grads[f"{prefix}.{li}.ln2.g"] += dg2
        dx1 = dx1 + dx
        dxn1, dwq, dwk, dwv, dwo = _attn_bwd(dx1, ca)
        grads[f"{prefix}.{li}.wq"] += dwq
        grads[f"{prefix}.{li}.wk"] += dwk
        grads[f"{prefix}.{li}.wv"] += dwv
        grads[f"{prefix}.{li}.wo"] += dwo
        dx0, dg1 = _rmsnorm_bwd(dxn1, c1)
        grads[f"{prefix}.{li}.ln1.g"] += dg1
        dx = dx0 + dx1
    return dx


def _cross_entropy(logits, targets):
    n = logits.shape[0]
    z = logits - logits.max(axis=-1, keepdims=True)
    logp = z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))
    loss = -float(np.mean(logp[np.arange(n), targets]))
    dlogits = np.exp(logp)
    dlogits[np.arange(n), targets] -= 1.0
    return loss, dlogits / n


# ---------------------------------------------------------------------------
# thinker


def embed_tokens(token_ids: Sequence[int], params: ModelParams) -> np.ndarray:
    return params.weights["thinker.embed"][np.asarray(token_ids, dtype=np.intp)]


def prompt_embeddings(packed: PackedSequence, params: ModelParams) -> np.ndarray:
    """Deterministic per-modality input vectors for a packed prompt."""
    idx = np.asarray([_KIND_INDEX[e.kind] for e in packed.elements], dtype=np.intp)
    return params.weights["thinker.modal_embed"][idx]


def _check_thinker_inputs(packed, embeddings, params, mask):
    x = np.asarray(embeddings, dtype=np.float64)
    n = len(packed)
    if x.shape != (n, params.d_model):
        raise ValueError(f"embeddings shape {x.shape} does not match ({n}, {params.d_model})")
    if mask.n != n:
        raise ValueError(f"mask size {mask.n} does not match sequence length {n}")
    return x


def _thinker_fwd_cached(packed, embeddings, params, mask):
    x = _check_thinker_inputs(packed, embeddings, params, mask)
    angles = build_plan(packed.triples(), params.rope_cfg).angles
    h, cache = _stack_fwd(x, angles, mask.allow, params, "thinker", params.n_layers_thinker)
    logits = h @ params.weights["thinker.head"]
    return h, logits, cache


def thinker_forward(
    packed: PackedSequence,
    embeddings: np.ndarray,
    params: ModelParams,
    mask: AttentionMask,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the text decoder; returns (hidden states, text logits)."""
    h, logits, _ = _thinker_fwd_cached(packed, embeddings, params, mask)
    return h, logits


def thinker_forward_chunked(
    packed: PackedSequence,
    embeddings: np.ndarray,
    params: ModelParams,
    chunk_len: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Causal forward in prefill chunks with per-layer key/value caches.

    Matches the single-pass causal ``thinker_forward`` to floating-point
    roundoff; used to demonstrate prefill equivalence.
    """
    n = len(packed)
    x_all = _check_thinker_inputs(packed, embeddings, params, causal_mask(max(n, 1)))
    angles_all = build_plan(packed.triples(), params.rope_cfg).angles
    w = params.weights
    n_layers = params.n_layers_thinker
    key_cache = [None] * n_layers
    val_cache = [None] * n_layers
    hiddens, logits_out = [], []
    for s, e in prefill_plan(n, chunk_len):
        x = x_all[s:e]
        angles = angles_all[s:e]
        allow = np.arange(e)[None, :] <= np.arange(s, e)[:, None]
        for li in range(n_layers):
            xn1, _ = _rmsnorm_fwd(x, w[f"thinker.{li}.ln1.g"])
            q = _split_heads(xn1 @ w[f"thinker.{li}.wq"], params.n_heads)
            k = _split_heads(xn1 @ w[f"thinker.{li}.wk"], params.n_heads)
            v = _split_heads(xn1 @ w[f"thinker.{li}.wv"], params.n_heads)
            qr = rotate_pairs(q, angles)
            kr = rotate_pairs(k, angles)
            key_cache[li] = kr if key_cache[li] is None else np.concatenate([key_cache[li], kr], axis=1)
            val_cache[li] = v if val_cache[li] is None else np.concatenate([val_cache[li], v], axis=1)
            scores = np.einsum("hid,hjd->hij", qr, key_cache[li]) / np.sqrt(params.head_dim)
            p = _softmax(np.where(allow, scores, -np.inf))
            att = _merge_heads(np.einsum("hij,hjd->hid", p, val_cache[li])) @ w[f"thinker.{li}.wo"]
            x1 = x + att
            xn2, _ = _rmsnorm_fwd(x1, w[f"thinker.{li}.ln2.g"])
            m, _ = _mlp_fwd(xn2, w[f"thinker.{li}.w1"], w[f"thinker.{li}.w2"])
            x = x1 + m
        h, _ = _rmsnorm_fwd(x, w["thinker.lnf.g"])
        hiddens.append(h)
        logits_out.append(h @ w["thinker.head"])
    return np.vstack(hiddens), np.vstack(logits_out)


def masked_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray, allow: np.ndarray) -> np.ndarray:
    """Single-head scaled dot-product attention under a boolean mask."""
    s = (q @ k.T) / np.sqrt(q.shape[-1])
    return _softmax(np.where(allow, s, -np.inf)) @ v


# ---------------------------------------------------------------------------
# sampling


def nucleus_indices(probs: np.ndarray, top_p: float) -> np.ndarray:
    """Smallest descending-probability prefix whose mass reaches top_p."""
    order = np.argsort(-probs, kind="stable")
    csum = np.cumsum(probs[order])
    cut = int(np.searchsorted(csum, top_p))
    return order[: min(cut, len(order) - 1) + 1]


def sample_token(
    logits: np.ndarray,
    history: Sequence[int],
    sampler: SamplerConfig,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """Penalized, temperature-scaled nucleus draw; deterministic given seed.

    Repetition penalty divides positive logits and multiplies negative
    logits of tokens already in ``history``.
    """
    z = np.asarray(logits, dtype=np.float64).copy()
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    if rng is None:
        rng = np.random.default_rng(sampler.seed)
    if history and sampler.repetition_penalty != 1.0:
        ids = np.unique(np.asarray(history, dtype=np.intp))
        pen = sampler.repetition_penalty
        z[ids] = np.where(z[ids] > 0, z[ids] / pen, z[ids] * pen)
    z /= sampler.temperature
    probs = _softmax(z[None, :])[0]
    keep = nucleus_indices(probs, sampler.top_p)
    kept = probs[keep]
    kept /= kept.sum()
    pick = int(np.searchsorted(np.cumsum(kept), rng.random()))
    return int(keep[min(pick, len(keep) - 1)])


# ---------------------------------------------------------------------------
# talker


@dataclass(frozen=True)
class TalkerInput:
    """One step of talker conditioning: hidden state plus token embedding."""

    thinker_hidden: np.ndarray
    text_embed: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.thinker_hidden, dtype=np.float64)
        e = np.asarray(self.text_embed, dtype=np.float64)
        if h.shape != e.shape or h.ndim != 1:
            raise ValueError("thinker_hidden and text_embed must be equal-length vectors")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(e))):
            raise ValueError("talker inputs must be finite")
        object.__setattr__(self, "thinker_hidden", h)
        object.__setattr__(self, "text_embed", e)

    def combined(self) -> np.ndarray:
        return self.thinker_hidden + self.text_embed


@dataclass(frozen=True)
class TalkerState:
    """Accumulated talker context vectors; empty at stream start."""

    inputs: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return 0 if self.inputs is None else self.inputs.shape[0]


def _talker_fwd_cached(inputs: np.ndarray, params: ModelParams):
    m = inputs.shape[0]
    angles = rope_1d_angles(range(m), params.head_dim, params.rope_cfg.theta_base)
    allow = causal_mask(m).allow
    h, cache = _stack_fwd(inputs, angles, allow, params, "talker", params.n_layers_talker)
    return h, h @ params.weights["talker.head"], cache


def talker_forward(inputs: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Causal talker pass over a context of combined input vectors."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != params.d_model:
        raise ValueError(f"talker inputs must be (m, {params.d_model})")
    h, logits, _ = _talker_fwd_cached(inputs, params)
    return h, logits


def talker_step(
    state: TalkerState, talker_input: TalkerInput, params: ModelParams
) -> tuple[np.ndarray, TalkerState]:
    """Append one combined input vector and return next-code logits."""
    vec = talker_input.combined()
    if vec.shape != (params.d_model,):
        raise ValueError(f"talker input dimension {vec.shape[0]} != d_model {params.d_model}")
    ctx = vec[None, :] if state.inputs is None else np.vstack([state.inputs, vec])
    _, logits = talker_forward(ctx, params)
    return logits[-1], TalkerState(ctx)


# ---------------------------------------------------------------------------
# losses with analytic gradients


def thinker_text_loss(
    packed: PackedSequence,
    input_ids: Sequence[int],
    targets: Sequence[int],
    params: ModelParams,
    mask: Optional[AttentionMask] = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean next-token cross-entropy of the thinker plus analytic gradients."""
    if mask is None:
        mask = causal_mask(len(packed))
    ids = np.asarray(input_ids, dtype=np.intp)
    tgt = np.asarray(targets, dtype=np.intp)
    x = embed_tokens(ids, params)
    h, logits, cache = _thinker_fwd_cached(packed, x, params, mask)
    loss, dlogits = _cross_entropy(logits, tgt)
    grads = params.zero_grads()
    grads["thinker.head"] += h.T @ dlogits
    dh = dlogits @ params.weights["thinker.head"].T
    dx = _stack_bwd(dh, cache, "thinker", params.n_layers_thinker, grads)
    np.add.at(grads["thinker.embed"], ids, dx)
    return loss, grads


def talker_speech_loss(
    inputs: np.ndarray,
    targets: Sequence[int],
    params: ModelParams,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean speech-code cross-entropy of the talker plus analytic gradients."""
    loss, grads, _ = _talker_loss_full(np.asarray(inputs, dtype=np.float64), targets, params)
    return loss, grads


def _talker_loss_full(inputs, targets, params):
    tgt = np.asarray(targets, dtype=np.intp)
    h, logits, cache = _talker_fwd_cached(inputs, params)
    loss, dlogits = _cross_entropy(logits, tgt)
    grads = params.zero_grads()
    grads["talker.head"] += h.T @ dlogits
    dh = dlogits @ params.weights["talker.head"].T
    dinputs = _stack_bwd(dh, cache, "talker", params.n_layers_talker, grads)
    return loss, grads, dinputs


def joint_loss(
    packed: PackedSequence,
    input_ids: Sequence[int],
    text_targets: Sequence[int],
    speech_targets: Sequence[int],
    params: ModelParams,
    text_weight: float = 1.0,
    speech_weight: float = 1.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted text + speech loss with gradients through the shared hiddens.

    The talker is teacher-forced on the text targets: its input at step i is
    the thinker hidden state at i plus the embedding of text target i, which
    is the training-time analogue of feeding back the sampled token. Speech
    gradients therefore reach every thinker weight.
    """
    mask = causal_mask(len(packed))
    ids = np.asarray(input_ids, dtype=np.intp)
    text_tgt = np.asarray(text_targets, dtype=np.intp)
    x = embed_tokens(ids, params)
    h, logits, cache = _thinker_fwd_cached(packed, x, params, mask)
    text_loss, dlogits = _cross_entropy(logits, text_tgt)

    talker_in = h + params.weights["thinker.embed"][text_tgt]
    speech_loss, grads, dtalker_in = _talker_loss_full(talker_in, speech_targets, params)
    for g in grads.values():
        g *= speech_weight

    grads["thinker.head"] += text_weight * (h.T @ dlogits)
    dh = text_weight * (dlogits @ params.weights["thinker.head"].T) + speech_weight * dtalker_in
    dx = _stack_bwd(dh, cache, "thinker", params.n_layers_thinker, grads)
    np.add.at(grads["thinker.embed"], ids, dx)
    np.add.at(grads["thinker.embed"], text_tgt, speech_weight * dtalker_in)
    return text_weight * text_loss + speech_weight * speech_loss, grads


# ---------------------------------------------------------------------------
# streaming generation


class StreamKind(Enum):
    TEXT_TOKEN = "text_token"
    SPEECH_CODE = "speech_code"
    TEXT_END = "text_end"
    SPEECH_END = "speech_end"


@dataclass(frozen=True)
class StreamEvent:
    kind: StreamKind
    id: int
    step: int


@dataclass(frozen=True)
class StreamResult:
    """Ordered event stream; ``truncated`` marks a hard step-cap cutoff."""

    events: tuple[StreamEvent, ...]
    truncated: bool

    def counts(self) -> dict[str, int]:
        out = {k.value: 0 for k in StreamKind}
        for e in self.events:
            out[e.kind.value] += 1
        return out


def generate_stream(
    prompt: PackedSequence,
    params: ModelParams,
    sampler: SamplerConfig,
    max_text_tokens: int = 16,
    max_tail_steps: int = 256,
) -> StreamResult:
    """Run the dual-track loop: one speech code per text step, then a tail.

    Each step the thinker samples a token and the talker immediately
    consumes (hidden state, token embedding) and samples one speech code.
    Text ends when TEXT_EOS is drawn or the text budget runs out; the
    talker then keeps consuming the final hidden state (with the EOS
    embedding) until SPEECH_EOS arrives or ``max_tail_steps`` pass, in
    which case the stream is cut and flagged truncated. Speech never ends
    before text: SPEECH_EOS drawn during the text phase counts as an
    ordinary code. No timing or alignment information is consumed.
    """
    rng = np.random.default_rng(sampler.seed)
    emb = params.weights["thinker.embed"]
    events: list[StreamEvent] = []
    step = 0

    def emit(kind: StreamKind, token: int) -> None:
        nonlocal step
        events.append(StreamEvent(kind, int(token), step))
        step += 1

    x = prompt_embeddings(prompt, params)
    next_pos = prompt.max_position + 1
    packed = prompt
    state = TalkerState()
    text_history: list[int] = []
    speech_history: list[int] = []

    # text phase: thinker token + talker code per step
    final_hidden = None
    while final_hidden is None:
        hidden, logits = thinker_forward(packed, x, params, causal_mask(len(packed)))
        tok = sample_token(logits[-1], text_history, sampler, rng)
        hid = hidden[-1]
        ending = tok == TEXT_EOS or len(text_history) >= max_text_tokens
        if ending:
            tok = TEXT_EOS
            emit(StreamKind.TEXT_END, TEXT_EOS)
            final_hidden = hid
        else:
            emit(StreamKind.TEXT_TOKEN, tok)
            text_history.append(tok)
            x = np.vstack([x, emb[tok]])
            packed = _extend_text(packed, next_pos)
            next_pos += 1
        code_logits, state = talker_step(state, TalkerInput(hid, emb[tok]), params)
        code = sample_token(code_logits, speech_history, sampler, rng)
        if ending and code == SPEECH_EOS:
            emit(StreamKind.SPEECH_END, code)
            return StreamResult(tuple(events), False)
        emit(StreamKind.SPEECH_CODE, code)
        speech_history.append(code)

    # tail: speech continues from the final hidden state
    for _ in range(max_tail_steps):
        code_logits, state = talker_step(state, TalkerInput(final_hidden, emb[TEXT_EOS]), params)
        code = sample_token(code_logits, speech_history, sampler, rng)
        if code == SPEECH_EOS:
            emit(StreamKind.SPEECH_END, code)
            return StreamResult(tuple(events), False)
        emit(StreamKind.SPEECH_CODE, code)
        speech_history.append(code)
    return StreamResult(tuple(events), True)


def _extend_text(packed: PackedSequence, pos: int) -> PackedSequence:
    from .sequence import PackedElement, PositionTriple

    tr = PositionTriple(pos, pos, pos)
    seg_idx = (packed.elements[-1].segment_index + 1) if packed.elements else 0
    return PackedSequence(
        packed.elements + (PackedElement(Kind.TEXT, tr, seg_idx),),
        max(packed.max_position, pos),
    )
