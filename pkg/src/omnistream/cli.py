"""Command-line driver: pack manifests, dump masks, generate, decode, report.

Every command's randomness flows from the single configured seed, so a
fixed config yields byte-identical outputs. Stdout stays machine-parseable
(CSV or JSON-lines per command); errors go to stderr with a nonzero exit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import codec, dpo, latency
from .manifest import ManifestError, load_manifest, positions_csv
from .masks import audio_block_mask, causal_mask, dit_window_mask
from .model import ModelParams, SamplerConfig, generate_stream
from .numerics import central_difference
from .sequence import pack_sequence


@dataclass
class RunConfig:
    """All knobs with their defaults; a config file may override any field."""

    seed: int = 0
    d_model: int = 64
    n_heads: int = 4
    n_layers_thinker: int = 2
    n_layers_talker: int = 2
    text_vocab: int = 256
    speech_vocab: int = 128
    top_p: float = 0.9
    repetition_penalty: float = 1.1
    temperature: float = 1.0
    max_text_tokens: int = 16
    max_tail_steps: int = 256
    codec_block_size: int = 4
    codec_d: int = 32
    frames_per_code: int = 2
    vocoder_receptive_field: int = 8
    samples_per_frame: int = 4
    vocode_chunk_frames: int = 5
    audio_frames_per_block: int = 50
    prefill_chunks: int = 4
    cost_prefill_chunk: float = 0.0
    cost_thinker_step: float = 0.0
    cost_talker_step: float = 0.0
    cost_dit_chunk: float = 0.0
    cost_vocoder_chunk: float = 0.0
    cost_architecture: float = 0.0

    @classmethod
    def load(cls, path: Optional[str], seed: Optional[int]) -> "RunConfig":
        cfg = cls()
        if path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            cfg = dataclasses.replace(cfg, **data)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        return cfg

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.top_p, self.repetition_penalty, self.temperature, self.seed)

    def model_params(self) -> ModelParams:
        return ModelParams.create(
            seed=self.seed,
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers_thinker=self.n_layers_thinker,
            n_layers_talker=self.n_layers_talker,
            text_vocab=self.text_vocab,
            speech_vocab=self.speech_vocab,
        )

    def stage_costs(self) -> latency.StageCosts:
        return latency.StageCosts(
            prefill_chunk=self.cost_prefill_chunk,
            thinker_step=self.cost_thinker_step,
            talker_step=self.cost_talker_step,
            dit_chunk=self.cost_dit_chunk,
            vocoder_chunk=self.cost_vocoder_chunk,
            architecture=self.cost_architecture,
        )


def _write_or_print(text: str, out_dir: Optional[str], filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
    else:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text, encoding="utf-8")


def cmd_pack(args: argparse.Namespace) -> int:
    segments = load_manifest(args.manifest)
    if not segments:
        raise ManifestError(f"manifest {args.manifest} contains no segments")
    csv = positions_csv(pack_sequence(segments))
    _write_or_print(csv, args.out, "positions.csv")
    return 0


def cmd_mask(args: argparse.Namespace) -> int:
    if args.kind == "causal":
        if args.n is None:
            raise ValueError("mask causal requires --n")
        mask = causal_mask(args.n)
    elif args.kind == "audio-block":
        if args.frames is None:
            raise ValueError("mask audio-block requires --frames")
        mask = audio_block_mask(args.frames, args.block)
    else:  # dit
        if args.codes is None:
            raise ValueError("mask dit requires --codes")
        mask = dit_window_mask(args.codes, args.block, args.lookback, args.lookahead)
    text = mask.to_pgm() if args.format == "pgm" else mask.to_csv()
    _write_or_print(text, args.out, f"mask_{args.kind}.{args.format}")
    return 0


def _event_lines(result) -> str:
    lines = [
        json.dumps({"kind": e.kind.value, "id": e.id, "step": e.step})
        for e in result.events
    ]
    lines.append(
        json.dumps({"kind": "stream_summary", "events": len(result.events), "truncated": result.truncated})
    )
    return "\n".join(lines) + "\n"


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config, args.seed)
    segments = load_manifest(args.manifest)
    if not segments:
        raise ManifestError(f"manifest {args.manifest} contains no segments")
    result = generate_stream(
        pack_sequence(segments),
        cfg.model_params(),
        cfg.sampler(),
        max_text_tokens=cfg.max_text_tokens,
        max_tail_steps=cfg.max_tail_steps,
    )
    _write_or_print(_event_lines(result), args.out, "events.jsonl")
    return 0


def _read_codes(path: str) -> list[int]:
    codes = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        obj = json.loads(line)
        if isinstance(obj, int):
            codes.append(obj)
        elif isinstance(obj, dict) and obj.get("kind") == "speech_code":
            codes.append(int(obj["id"]))
        elif isinstance(obj, dict) and obj.get("kind") in ("text_token", "text_end", "speech_end", "stream_summary"):
            continue
        else:
            raise ValueError(f"cannot read a speech code from line {line!r}")
    return codes


def _mel_csv(chunks) -> str:
    lines = ["chunk,frame," + ",".join(f"c{i}" for i in range(codec.MEL_CHANNELS))]
    for ch in chunks:
        for fi, frame in enumerate(ch.frames):
            lines.append(f"{ch.block_index},{fi}," + ",".join(repr(float(v)) for v in frame))
    return "\n".join(lines) + "\n"


def _wave_csv(samples: np.ndarray) -> str:
    return "sample\n" + "\n".join(repr(float(s)) for s in samples) + "\n"


def cmd_decode(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config, args.seed)
    codes = _read_codes(args.codes)
    stream = codec.CodeBlockStream(tuple(codes), args.block or cfg.codec_block_size)
    params = codec.init_decoder_params(
        seed=cfg.seed, speech_vocab=cfg.speech_vocab, d=cfg.codec_d,
        frames_per_code=cfg.frames_per_code,
    )
    chunks = codec.offline_decode(stream, params) if args.offline else codec.stream_decode(stream, params)
    mel = codec.mel_frames(chunks)
    filt = codec.init_vocoder(cfg.seed, cfg.vocoder_receptive_field, cfg.samples_per_frame)
    wave = codec.vocode_chunked(mel, filt, cfg.vocode_chunk_frames)
    summary = {"codes": len(codes), "chunks": len(chunks), "frames": int(mel.shape[0]), "samples": int(wave.shape[0])}
    if args.offline_diff:
        mel_off = codec.mel_frames(codec.offline_decode(stream, params))
        wave_off = codec.vocode(mel_off, filt)
        summary["max_abs_diff"] = float(
            max(np.max(np.abs(mel - mel_off)), np.max(np.abs(wave - wave_off)))
        )
    if args.out is not None:
        _write_or_print(_mel_csv(chunks), args.out, "mel.csv")
        _write_or_print(_wave_csv(wave), args.out, "waveform.csv")
    sys.stdout.write(json.dumps(summary) + "\n")
    return 0


def cmd_latency(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config, args.seed)
    costs = cfg.stage_costs()
    trace = latency.simulate_first_packet(
        costs, n_prefill_chunks=cfg.prefill_chunks, block_size=cfg.codec_block_size
    )
    report = latency.first_packet_latency(trace, costs).as_dict()
    sys.stdout.write(json.dumps(report) + "\n")
    return 0


def cmd_dpo_demo(args: argparse.Namespace) -> int:
    rows = Path(args.triplets).read_text(encoding="utf-8").splitlines()
    header = [h.strip() for h in rows[0].split(",")]
    expected = ["lp_policy_w", "lp_policy_l", "lp_ref_w", "lp_ref_l", "beta"]
    if header != expected:
        raise ValueError(f"triplet CSV header must be {','.join(expected)}")
    for raw in rows[1:]:
        if not raw.strip():
            continue
        pw, pl, rw, rl, beta = (float(v) for v in raw.split(","))
        t = dpo.DpoTriplet(pw, pl, rw, rl, beta)
        loss = dpo.dpo_loss(t)
        d_pw = central_difference(
            lambda v: dpo.dpo_loss(dpo.DpoTriplet(v, pl, rw, rl, beta)), pw
        )
        d_pl = central_difference(
            lambda v: dpo.dpo_loss(dpo.DpoTriplet(pw, v, rw, rl, beta)), pl
        )
        sys.stdout.write(json.dumps({
            "loss": loss,
            "grad_lp_policy_w": d_pw,
            "grad_lp_policy_l": d_pl,
            "grad_signs_ok": d_pw < 0 < d_pl,
        }) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omnistream",
        description="Streaming-multimodal sequence toolkit: positions, masks, generation, decoding.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file overriding RunConfig defaults")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="directory for output files (default: stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pack", parents=[common], help="manifest -> position CSV")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("mask", parents=[common], help="dump an attention mask")
    p.add_argument("kind", choices=["causal", "audio-block", "dit"])
    p.add_argument("--n", type=int, help="sequence length (causal)")
    p.add_argument("--frames", type=int, help="audio frames (audio-block)")
    p.add_argument("--codes", type=int, help="speech codes (dit)")
    p.add_argument("--block", type=int, default=50, help="block size in elements")
    p.add_argument("--lookback", type=int, default=2)
    p.add_argument("--lookahead", type=int, default=1)
    p.add_argument("--format", choices=["csv", "pgm"], default="csv")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("generate", parents=[common], help="stream text + speech events")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decode", parents=[common], help="speech codes -> mel + waveform")
    p.add_argument("--codes", required=True, help="JSON-lines file of codes or events")
    p.add_argument("--block", type=int, help="codes per block (default from config)")
    p.add_argument("--offline", action="store_true", help="use the offline oracle path")
    p.add_argument("--offline-diff", action="store_true",
                   help="also run the oracle and report the max abs difference")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("latency", parents=[common], help="first-packet latency breakdown")
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("dpo-demo", parents=[common], help="losses + gradient checks for triplets")
    p.add_argument("--triplets", required=True, help="CSV of lp_policy_w,lp_policy_l,lp_ref_w,lp_ref_l,beta")
    p.set_defaults(func=cmd_dpo_demo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
