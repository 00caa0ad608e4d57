"""Desk-scale streaming-multimodal sequence machinery.

Subpackages by capability: position assignment and time-interleaving
(`sequence`), three-component rotary embedding (`rope`), attention-mask
recipes (`masks`), the toy dual-track generator (`model`), chunked
code-to-waveform decoding (`codec`), the preference objective (`dpo`),
and first-packet latency accounting (`latency`).
"""

from .codec import (
    MEL_CHANNELS,
    CodeBlockStream,
    DecoderParams,
    FirVocoder,
    MelChunk,
    StreamingCodeDecoder,
    decode_block,
    init_decoder_params,
    init_vocoder,
    mel_frames,
    offline_decode,
    stream_decode,
    vocode,
    vocode_chunked,
)
from .dpo import DpoTriplet, RankedPair, dpo_loss, rank_candidates, sequence_logprob
from .latency import (
    LatencyBreakdown,
    StageCosts,
    TraceEvent,
    first_packet_latency,
    simulate_first_packet,
)
from .manifest import ManifestError, load_manifest, parse_manifest, positions_csv
from .masks import (
    AttentionMask,
    BlockLayout,
    audio_block_mask,
    causal_mask,
    dit_window_mask,
    mask_receptive_field,
    prefill_plan,
)
from .model import (
    SPEECH_EOS,
    TEXT_EOS,
    ModelParams,
    SamplerConfig,
    StreamEvent,
    StreamKind,
    StreamResult,
    TalkerInput,
    TalkerState,
    embed_tokens,
    generate_stream,
    joint_loss,
    masked_attention,
    nucleus_indices,
    prompt_embeddings,
    sample_token,
    talker_forward,
    talker_speech_loss,
    talker_step,
    thinker_forward,
    thinker_forward_chunked,
    thinker_text_loss,
)
from .rope import (
    RopeConfig,
    RotationPlan,
    apply_rotary,
    attention_score,
    build_plan,
    default_split,
    rope_1d_angles,
    rotate_pairs,
)
from .sequence import (
    AUDIO_FRAME_MS,
    INTERLEAVE_CHUNK_MS,
    Kind,
    ModalitySegment,
    PackedElement,
    PackedSequence,
    PositionTriple,
    assign_audio_positions,
    assign_image_positions,
    assign_text_positions,
    assign_video_positions,
    image_as_video,
    interleave_video_audio,
    pack_sequence,
)

__version__ = "0.1.0"
