"""Sonorization schemes.

Scheme 1 (retrieval): scan every audio embedding in the store and assign
the one closest to the query frame under normalized cosine distance.

Scheme 2 (generative): caption the frame, generate audio per caption,
encode everything, and rank the (caption, audio) pairs by absolute
inconsistency against the frame. The captioner, generator, and encoder
are external processes behind a documented file contract, so the neural
models never become a dependency of this package and deterministic mocks
can stand in for them.

Adapter contract:
  * command template with `{input}` and `{output}` placeholders (plus an
    optional `{k}` variant index), run once per output;
  * exit code 0 means success; nonzero or timeout raises AdapterFailure;
  * captioner: input = frame uri, output = UTF-8 text, one caption per
    line, exactly `variants` lines;
  * audio generator: input = caption text file, output = one audio file
    (opaque bytes);
  * encoder: input = manifest of assets to encode, output = embedding
    archive covering every manifest id.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .core import Embedding, Modality
from .errors import (
    AdapterFailure,
    AdapterProtocolError,
    NoAudioAssets,
    WrongModality,
    ZeroVector,
)
from .kernels import dis_cos_many
from .metrics import RankedResult, rank_by_inconsistency, sort_entries
from .store import AssetRecord, EmbeddingStore, read_archive, write_manifest

SCHEME_RETRIEVAL = "retrieval"
SCHEME_GENERATIVE = "generative"

_ADAPTER_KINDS = ("captioner", "audio_generator", "encoder")


@dataclass(frozen=True)
class AdapterSpec:
    """External process adapter: command template, output count, timeout."""

    kind: str
    command: str
    variants: int = 1
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in _ADAPTER_KINDS:
            raise ValueError(f"adapter kind must be one of {_ADAPTER_KINDS}, got {self.kind!r}")
        if self.variants < 1:
            raise ValueError(f"variants must be >= 1, got {self.variants}")
        for placeholder in ("{input}", "{output}"):
            if placeholder not in self.command:
                raise ValueError(f"command template must contain {placeholder}")


@dataclass(frozen=True)
class CaptionLineage:
    """Which caption (and which generator run) produced a candidate audio."""

    audio_id: str
    caption_id: str
    caption_index: int
    variant_index: int
    caption: str


@dataclass(frozen=True)
class SonorizationPlan:
    frame_id: str
    candidates: RankedResult
    chosen_audio_id: str
    scheme: str
    lineage: tuple[CaptionLineage, ...] = field(default=())

    def __post_init__(self):
        if self.chosen_audio_id != self.candidates.best_id:
            raise ValueError("chosen_audio_id must be the top-ranked candidate")


def sonorize_scheme1(frame: Embedding, store: EmbeddingStore, k: int = 10) -> SonorizationPlan:
    """Assign the stored audio with the smallest normalized cosine distance."""
    if frame.modality is not Modality.IMAGE:
        raise WrongModality(f"query must be an image embedding, got {frame.modality.wire_name}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ids, matrix = store.matrix(Modality.AUDIO)
    if not ids:
        raise NoAudioAssets("store has no audio embeddings")
    try:
        scores = dis_cos_many(frame.as_float64(), matrix)
    except ValueError as exc:
        raise ZeroVector(str(exc)) from None
    entries = sort_entries(zip(ids, scores.tolist()), k)
    ranked = RankedResult(query_id=frame.id, entries=entries, metric_name="dis_cos")
    return SonorizationPlan(
        frame_id=frame.id,
        candidates=ranked,
        chosen_audio_id=ranked.best_id,
        scheme=SCHEME_RETRIEVAL,
    )


def run_adapter(spec: AdapterSpec, input_path, output_path, variant_index: int = 0) -> None:
    """Run one adapter invocation, raising AdapterFailure on any breakage."""
    argv = [
        token.replace("{input}", str(input_path))
        .replace("{output}", str(output_path))
        .replace("{k}", str(variant_index))
        for token in shlex.split(spec.command)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=spec.timeout)
    except subprocess.TimeoutExpired:
        raise AdapterFailure(spec.kind, f"timed out after {spec.timeout}s") from None
    except OSError as exc:
        raise AdapterFailure(spec.kind, f"could not execute: {exc}") from None
    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", errors="replace").strip()
        raise AdapterFailure(
            spec.kind, f"exit code {proc.returncode}" + (f": {stderr[-500:]}" if stderr else "")
        )


def _read_captions(path, spec: AdapterSpec) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise AdapterProtocolError(spec.kind, f"unreadable caption output: {exc}") from None
    captions = [line.strip() for line in lines if line.strip()]
    if len(captions) != spec.variants:
        raise AdapterProtocolError(
            spec.kind, f"expected {spec.variants} captions, got {len(captions)}"
        )
    return captions


def sonorize_scheme2(
    frame_asset: AssetRecord,
    captioner: AdapterSpec,
    generator: AdapterSpec,
    encoder: AdapterSpec,
    k: int = 10,
    workdir=None,
) -> SonorizationPlan:
    """Text-mediated generation pipeline for one frame.

    Produces captioner.variants captions, generator.variants audios per
    caption, embeds frame + captions + audios through the encoder, and
    ranks every (caption, audio) pair by |inc| against the frame.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if workdir is None:
        with tempfile.TemporaryDirectory(prefix="sonomap-scheme2-") as tmp:
            return sonorize_scheme2(frame_asset, captioner, generator, encoder, k, tmp)
    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)

    captions_path = work / "captions.txt"
    run_adapter(captioner, frame_asset.uri, captions_path)
    captions = _read_captions(captions_path, captioner)

    # Generate audio variants per caption; ids follow the frame#child
    # convention so provenance survives the encoder round-trip.
    to_encode = [frame_asset]
    audio_records: list[tuple[str, str, int, int, str]] = []
    for ci, caption in enumerate(captions):
        caption_id = f"{frame_asset.id}#t{ci}"
        caption_file = work / f"caption_{ci}.txt"
        caption_file.write_text(caption + "\n", encoding="utf-8")
        to_encode.append(
            AssetRecord(caption_id, Modality.TEXT, frame_asset.scene, str(caption_file), caption)
        )
        for vi in range(generator.variants):
            audio_id = f"{frame_asset.id}#a{ci}_{vi}"
            audio_file = work / f"audio_{ci}_{vi}.bin"
            run_adapter(generator, caption_file, audio_file, variant_index=vi)
            if not audio_file.exists():
                raise AdapterProtocolError(
                    generator.kind, f"no output file for caption {ci} variant {vi}"
                )
            to_encode.append(
                AssetRecord(audio_id, Modality.AUDIO, frame_asset.scene, str(audio_file))
            )
            audio_records.append((audio_id, caption_id, ci, vi, caption))

    encode_manifest = work / "encode_manifest.jsonl"
    write_manifest(encode_manifest, to_encode)
    archive_path = work / "embeddings.emb"
    run_adapter(encoder, encode_manifest, archive_path)
    try:
        _, encoded = read_archive(archive_path)
    except Exception as exc:
        raise AdapterProtocolError(encoder.kind, f"bad embedding archive: {exc}") from None

    by_id = {emb.id: emb for emb in encoded}
    for rec in to_encode:
        emb = by_id.get(rec.id)
        if emb is None:
            raise AdapterProtocolError(encoder.kind, f"missing embedding for id {rec.id!r}")
        if emb.modality is not rec.modality:
            raise AdapterProtocolError(
                encoder.kind,
                f"id {rec.id!r}: expected {rec.modality.wire_name}, got {emb.modality.wire_name}",
            )

    pairs = [(by_id[caption_id], by_id[audio_id]) for audio_id, caption_id, *_ in audio_records]
    ranked = rank_by_inconsistency(by_id[frame_asset.id], pairs, k)
    lineage = tuple(
        CaptionLineage(audio_id, caption_id, ci, vi, caption)
        for audio_id, caption_id, ci, vi, caption in audio_records
    )
    return SonorizationPlan(
        frame_id=frame_asset.id,
        candidates=ranked,
        chosen_audio_id=ranked.best_id,
        scheme=SCHEME_GENERATIVE,
        lineage=lineage,
    )
