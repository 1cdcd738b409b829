"""Deterministic synthetic multimodal embedding spaces.

Stand-in for neural encoders in tests, demos, and benchmarks. Every scene
gets a random unit anchor; frames scatter around it by at most
intra_scene_spread radians; each text/audio child is its frame rotated by
gap_angle toward a fixed per-modality offset direction (the controllable
modality gap), then perturbed by at most noise radians.

Randomness is counter-based: every entity draws from its own generator
keyed by (seed, entity coordinates), so output is reproducible regardless
of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Embedding, Modality
from .errors import InvalidConfig
from .store import AssetRecord, EmbeddingStore, build_store

_MASK64 = (1 << 64) - 1

# Key-space tags so distinct entity kinds never share a stream.
_TAG_ANCHOR = 1
_TAG_OFFSET = 2
_TAG_FRAME = 3
_TAG_CHILD = 4


@dataclass(frozen=True)
class SyntheticSpaceConfig:
    dim: int = 32
    n_scenes: int = 3
    frames_per_scene: int = 4
    texts_per_frame: int = 1
    audios_per_frame: int = 1
    gap_angle: float = 0.3
    intra_scene_spread: float = 0.05
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 3:
            raise InvalidConfig(f"dim must be >= 3, got {self.dim}")
        if self.n_scenes < 1:
            raise InvalidConfig(f"n_scenes must be >= 1, got {self.n_scenes}")
        for name in ("frames_per_scene", "texts_per_frame", "audios_per_frame"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        if not 0.0 <= self.gap_angle <= math.pi / 2:
            raise InvalidConfig(f"gap_angle must be in [0, pi/2], got {self.gap_angle}")
        if self.intra_scene_spread < 0 or self.noise < 0:
            raise InvalidConfig("intra_scene_spread and noise must be >= 0")


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one entity, stable under generation order."""
    return np.random.default_rng([seed & _MASK64, *key])


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform random direction on the unit sphere (float64)."""
    while True:
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def rotate_toward(v: np.ndarray, direction: np.ndarray, angle: float) -> np.ndarray:
    """Rotate unit vector v by `angle` radians toward `direction`.

    Only the component of `direction` orthogonal to v matters, so the
    result keeps unit norm and sits at exactly `angle` from v (for
    angle in [0, pi/2]). Raises ValueError when `direction` is parallel
    to v and no rotation plane exists.
    """
    if angle == 0.0:
        return v
    ortho = direction - np.dot(direction, v) * v
    n = np.linalg.norm(ortho)
    if n < 1e-9:
        raise ValueError("direction is parallel to v; rotation plane undefined")
    return math.cos(angle) * v + math.sin(angle) * (ortho / n)


def perturb(rng: np.random.Generator, v: np.ndarray, max_angle: float) -> np.ndarray:
    """Rotate v by a uniform random angle in [0, max_angle] toward a random direction."""
    if max_angle == 0.0:
        return v
    angle = rng.uniform(0.0, max_angle)
    for _ in range(16):
        try:
            return rotate_toward(v, random_unit(rng, v.shape[0]), angle)
        except ValueError:
            continue
    raise RuntimeError("could not find a rotation plane (dim too small?)")


def _rotate_with_fallback(rng, v, direction, angle):
    # The shared per-modality offset can (rarely) be parallel to a frame
    # vector; fall back to an entity-keyed random plane so output stays
    # deterministic.
    try:
        return rotate_toward(v, direction, angle)
    except ValueError:
        return perturb(rng, v, angle) if angle > 0 else v


def scene_label(scene_index: int) -> str:
    return f"scene-{scene_index:02d}"


def frame_id(scene_index: int, frame_index: int) -> str:
    return f"s{scene_index:02d}f{frame_index:03d}"


def generate(cfg: SyntheticSpaceConfig) -> tuple[list[AssetRecord], EmbeddingStore]:
    """Build the manifest records and embedding store for one config.

    Child assets link to their frame via the `frame#tK` / `frame#aK` id
    convention. All vectors are unit-norm by construction.
    """
    offsets = {
        Modality.TEXT: random_unit(keyed_rng(cfg.seed, _TAG_OFFSET, int(Modality.TEXT)), cfg.dim),
        Modality.AUDIO: random_unit(keyed_rng(cfg.seed, _TAG_OFFSET, int(Modality.AUDIO)), cfg.dim),
    }

    records: list[AssetRecord] = []
    embeddings: list[Embedding] = []

    for s in range(cfg.n_scenes):
        scene = scene_label(s)
        anchor = random_unit(keyed_rng(cfg.seed, _TAG_ANCHOR, s), cfg.dim)
        for f in range(cfg.frames_per_scene):
            fid = frame_id(s, f)
            frame_vec = perturb(
                keyed_rng(cfg.seed, _TAG_FRAME, s, f), anchor, cfg.intra_scene_spread
            )
            records.append(
                AssetRecord(fid, Modality.IMAGE, scene, f"synth://{scene}/{fid}.png")
            )
            embeddings.append(Embedding(fid, Modality.IMAGE, frame_vec.astype(np.float32)))

            for modality, prefix, count in (
                (Modality.TEXT, "t", cfg.texts_per_frame),
                (Modality.AUDIO, "a", cfg.audios_per_frame),
            ):
                for k in range(count):
                    cid = f"{fid}#{prefix}{k}"
                    rng = keyed_rng(cfg.seed, _TAG_CHILD, s, f, int(modality), k)
                    vec = _rotate_with_fallback(rng, frame_vec, offsets[modality], cfg.gap_angle)
                    vec = perturb(rng, vec, cfg.noise)
                    caption = f"synthetic caption {k} for {fid}" if modality is Modality.TEXT else None
                    ext = "txt" if modality is Modality.TEXT else "wav"
                    records.append(
                        AssetRecord(cid, modality, scene, f"synth://{scene}/{cid}.{ext}", caption)
                    )
                    embeddings.append(Embedding(cid, modality, vec.astype(np.float32)))

    return records, build_store(records, embeddings, dim=cfg.dim)
