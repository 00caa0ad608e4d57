"""Line-oriented segment manifests and the position CSV dump.

Manifest grammar, one segment per line (``#`` starts a comment):

    text;n=3
    audio;frames=50;time=0
    image;grid=2x2
    video;times=0,500,1000;grid=2x2

A ``video`` line expands to one VIDEO_FRAME segment per timestamp.
"""

from __future__ import annotations

import io
from pathlib import Path

from .sequence import ModalitySegment, PackedSequence


class ManifestError(ValueError):
    """Malformed manifest line; message carries the 1-based line number."""


def _parse_params(body: str, line_no: int) -> dict[str, str]:
    params: dict[str, str] = {}
    for part in body:
        if "=" not in part:
            raise ManifestError(f"line {line_no}: expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def _grid(value: str, line_no: int) -> tuple[int, int]:
    try:
        h, w = value.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise ManifestError(f"line {line_no}: grid must look like 2x3, got {value!r}") from None


def parse_manifest(text: str) -> list[ModalitySegment]:
    """Parse manifest text into segments, reporting errors by line number."""
    segments: list[ModalitySegment] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *body = [p.strip() for p in line.split(";")]
        params = _parse_params(body, line_no)
        try:
            if kind == "text":
                segments.append(ModalitySegment.text(int(params["n"])))
            elif kind == "audio":
                segments.append(
                    ModalitySegment.audio(int(params["frames"]), time_ms=int(params.get("time", 0)))
                )
            elif kind == "image":
                segments.append(ModalitySegment.image(*_grid(params["grid"], line_no)))
            elif kind == "video":
                h, w = _grid(params["grid"], line_no)
                times = [int(t) for t in params["times"].split(",") if t.strip()]
                if not times:
                    raise ManifestError(f"line {line_no}: video needs at least one timestamp")
                segments.extend(ModalitySegment.video_frame(h, w, t) for t in times)
            else:
                raise ManifestError(f"line {line_no}: unknown segment kind {kind!r}")
        except KeyError as e:
            raise ManifestError(f"line {line_no}: missing parameter {e.args[0]!r}") from None
        except ManifestError:
            raise
        except ValueError as e:
            raise ManifestError(f"line {line_no}: {e}") from None
    return segments


def load_manifest(path: str | Path) -> list[ModalitySegment]:
    return parse_manifest(Path(path).read_text(encoding="utf-8"))


def positions_csv(packed: PackedSequence) -> str:
    """CSV of (index, kind, t, h, w) in model-input order."""
    buf = io.StringIO()
    buf.write("index,kind,t,h,w\n")
    for i, el in enumerate(packed.elements):
        buf.write(f"{i},{el.kind.value},{el.triple.t},{el.triple.h},{el.triple.w}\n")
    return buf.getvalue()
