"""Asset manifests, embedding archives, and the immutable embedding store.

Two interchange formats decouple the package from whatever encoders
produced the vectors:

Manifest (UTF-8, one JSON object per line):
    {"id": ..., "modality": "image"|"text"|"audio", "scene": ...,
     "uri": ..., "caption": ...}
    caption is optional; unknown keys are ignored. ids must be unique and
    non-empty, scenes non-empty.

Embedding archive (binary, little-endian):
    magic "EMB1" | u32 dim | u32 count | count records of
    u16 id-byte-length | id (UTF-8) | u8 modality code | dim x f32

Derived assets (captions, generated audios) link to their parent frame by
id convention: everything before the first '#' is the parent frame id,
e.g. "s00f003#a1" is an audio child of frame "s00f003".
"""

from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType

import numpy as np

from .core import Embedding, Modality, normalize
from .errors import (
    DimMismatch,
    DuplicateId,
    OrphanEmbedding,
    ParseError,
    UnknownId,
    UnknownScene,
    WrongModality,
)

ARCHIVE_MAGIC = b"EMB1"

_MANIFEST_KEYS = ("id", "modality", "scene", "uri", "caption")


@dataclass(frozen=True)
class AssetRecord:
    """One cataloged asset: a frame, a caption, or an audio file."""

    id: str
    modality: Modality
    scene: str
    uri: str
    caption: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("asset id must be non-empty")
        if not self.scene:
            raise ValueError(f"asset {self.id!r}: scene must be non-empty")
        object.__setattr__(self, "modality", Modality(self.modality))


def parent_frame_id(asset_id: str) -> str:
    """Parent frame of a derived asset id; the id itself for frames."""
    return asset_id.split("#", 1)[0]


# -- manifest ----------------------------------------------------------------

def read_manifest(path) -> list[AssetRecord]:
    """Parse a manifest file, preserving line order.

    Raises ParseError (with line number) on malformed lines and
    DuplicateId on repeated ids. Blank lines are allowed and skipped.
    """
    records: list[AssetRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "record must be a JSON object")
            for key in ("id", "modality", "scene", "uri"):
                if key not in obj:
                    raise ParseError(path, lineno, f"missing key {key!r}")
            try:
                modality = Modality.from_name(str(obj["modality"]))
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            try:
                record = AssetRecord(
                    id=str(obj["id"]),
                    modality=modality,
                    scene=str(obj["scene"]),
                    uri=str(obj["uri"]),
                    caption=None if obj.get("caption") is None else str(obj["caption"]),
                )
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            if record.id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate asset id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    return records


def write_manifest(path, records) -> None:
    """Write records as canonical manifest lines (one JSON object each)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "id": rec.id,
                "modality": rec.modality.wire_name,
                "scene": rec.scene,
                "uri": rec.uri,
            }
            if rec.caption is not None:
                obj["caption"] = rec.caption
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


# -- archive -----------------------------------------------------------------

def read_archive(path) -> tuple[int, list[Embedding]]:
    """Read an embedding archive, preserving record order.

    Raises ParseError on structural damage (the reported line number is
    the 1-based record index, 0 for the header) and DuplicateId on
    repeated ids.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != ARCHIVE_MAGIC:
        raise ParseError(path, 0, "bad magic; not an EMB1 archive")
    dim, count = struct.unpack_from("<II", data, 4)
    if dim < 2:
        raise ParseError(path, 0, f"dim must be >= 2, got {dim}")

    embeddings: list[Embedding] = []
    seen: set[str] = set()
    offset = 12
    vec_bytes = 4 * dim
    for idx in range(1, count + 1):
        if offset + 2 > len(data):
            raise ParseError(path, idx, "truncated record header")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 1 + vec_bytes > len(data):
            raise ParseError(path, idx, "truncated record body")
        try:
            asset_id = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError:
            raise ParseError(path, idx, "id is not valid UTF-8") from None
        offset += id_len
        code = data[offset]
        offset += 1
        try:
            modality = Modality(code)
        except ValueError:
            raise ParseError(path, idx, f"unknown modality code {code}") from None
        vector = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
        if asset_id in seen:
            raise DuplicateId(f"{path}: record {idx}: duplicate embedding id {asset_id!r}")
        seen.add(asset_id)
        try:
            embeddings.append(Embedding(asset_id, modality, vector))
        except ValueError as exc:
            raise ParseError(path, idx, str(exc)) from None
    if offset != len(data):
        raise ParseError(path, count, f"{len(data) - offset} trailing bytes after last record")
    return dim, embeddings


def write_archive(path, dim: int, embeddings) -> None:
    """Write embeddings in archive format; all vectors must have length dim."""
    chunks = [ARCHIVE_MAGIC, struct.pack("<II", dim, len(embeddings))]
    for emb in embeddings:
        if emb.dim != dim:
            raise DimMismatch(f"embedding {emb.id!r} has dim {emb.dim}, archive dim {dim}")
        id_bytes = emb.id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValueError(f"embedding id too long: {emb.id!r}")
        chunks.append(struct.pack("<H", len(id_bytes)))
        chunks.append(id_bytes)
        chunks.append(struct.pack("<B", int(emb.modality)))
        chunks.append(emb.vector.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


# -- store -------------------------------------------------------------------

class EmbeddingStore:
    """Immutable, dimension-consistent embedding collection.

    Iteration order everywhere is archive (ingestion) order, so two
    ingests of the same files behave identically. Instances are safe to
    share across threads once built.
    """

    def __init__(self, dim: int, assets, embeddings):
        self._dim = dim
        self._assets = MappingProxyType({rec.id: rec for rec in assets})
        self._entries = MappingProxyType({emb.id: emb for emb in embeddings})
        partitions: dict[Modality, list[str]] = {m: [] for m in Modality}
        scene_index: dict[str, dict[Modality, list[str]]] = {
            rec.scene: {m: [] for m in Modality} for rec in assets
        }
        for emb in embeddings:
            partitions[emb.modality].append(emb.id)
            scene_index[self._assets[emb.id].scene][emb.modality].append(emb.id)
        self._partitions = {m: tuple(ids) for m, ids in partitions.items()}
        self._scene_index = {s: {m: tuple(v) for m, v in by_m.items()} for s, by_m in scene_index.items()}
        self._matrices: dict[Modality, tuple[tuple[str, ...], np.ndarray]] = {}
        self._matrix_lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._entries

    def ids(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def get(self, asset_id: str) -> Embedding:
        try:
            return self._entries[asset_id]
        except KeyError:
            raise UnknownId(f"no embedding for id {asset_id!r}") from None

    def asset(self, asset_id: str) -> AssetRecord:
        try:
            return self._assets[asset_id]
        except KeyError:
            raise UnknownId(f"no asset record for id {asset_id!r}") from None

    def assets(self) -> tuple[AssetRecord, ...]:
        return tuple(self._assets.values())

    def scene_of(self, asset_id: str) -> str:
        return self.asset(asset_id).scene

    def scenes(self) -> tuple[str, ...]:
        return tuple(self._scene_index)

    def counts(self) -> dict[str, int]:
        return {m.wire_name: len(self._partitions[m]) for m in Modality}

    def by_modality(self, modality: Modality) -> list[Embedding]:
        return [self._entries[i] for i in self._partitions[Modality(modality)]]

    def by_scene(self, scene: str, modality: Modality) -> list[Embedding]:
        try:
            by_m = self._scene_index[scene]
        except KeyError:
            raise UnknownScene(f"unknown scene {scene!r}") from None
        return [self._entries[i] for i in by_m[Modality(modality)]]

    def matrix(self, modality: Modality) -> tuple[tuple[str, ...], np.ndarray]:
        """(ids, row matrix) for one modality; rows follow ingestion order.

        Built lazily on first use (and kept), under a lock so concurrent
        readers share one copy.
        """
        modality = Modality(modality)
        with self._matrix_lock:
            if modality not in self._matrices:
                ids = self._partitions[modality]
                if ids:
                    mat = np.stack([self._entries[i].vector for i in ids]).astype(np.float32)
                else:
                    mat = np.empty((0, self._dim), dtype=np.float32)
                mat.flags.writeable = False
                self._matrices[modality] = (ids, mat)
            return self._matrices[modality]

    def siblings(self, frame_id: str, modality: Modality) -> list[Embedding]:
        """Embeddings derived from frame_id (by id convention), in order."""
        modality = Modality(modality)
        return [
            emb
            for emb in self.by_modality(modality)
            if emb.id != frame_id and parent_frame_id(emb.id) == frame_id
        ]


def build_store(assets, embeddings, dim: int | None = None, normalize_vectors: bool = False) -> EmbeddingStore:
    """Assemble a store from in-memory records, applying ingest validation."""
    asset_map = {}
    for rec in assets:
        if rec.id in asset_map:
            raise DuplicateId(f"duplicate asset id {rec.id!r}")
        asset_map[rec.id] = rec
    if dim is None:
        if not embeddings:
            raise ValueError("dim is required for a store with no embeddings")
        dim = embeddings[0].dim

    seen: set[str] = set()
    final: list[Embedding] = []
    for emb in embeddings:
        if emb.dim != dim:
            raise DimMismatch(f"embedding {emb.id!r} has dim {emb.dim}, expected {dim}")
        if emb.id in seen:
            raise DuplicateId(f"duplicate embedding id {emb.id!r}")
        seen.add(emb.id)
        rec = asset_map.get(emb.id)
        if rec is None:
            raise OrphanEmbedding(f"embedding id {emb.id!r} absent from manifest")
        if rec.modality != emb.modality:
            raise WrongModality(
                f"id {emb.id!r}: archive says {emb.modality.wire_name}, "
                f"manifest says {rec.modality.wire_name}"
            )
        final.append(normalize(emb) if normalize_vectors else emb)
    return EmbeddingStore(dim, list(asset_map.values()), final)


def ingest(manifest_path, archive_path, normalize_vectors: bool = True) -> EmbeddingStore:
    """Load manifest + archive into an immutable store.

    Every archived embedding must resolve to a manifest record of the
    same modality. With normalize_vectors (the default, matching the
    hypersphere model) every stored vector is unit-normalized; pass False
    to preserve raw encoder magnitudes.
    """
    assets = read_manifest(manifest_path)
    dim, embeddings = read_archive(archive_path)
    return build_store(assets, embeddings, dim=dim, normalize_vectors=normalize_vectors)
