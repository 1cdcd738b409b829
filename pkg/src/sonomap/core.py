"""Vector math on (near-)hyperspherical embedding spaces.

Embeddings are modality-tagged vectors stored as float32 (matching what
multimodal encoders emit); every computation here runs in float64 and only
the stored representation is 32-bit. All functions are pure and safe to
call concurrently.

Distance conventions used throughout the package:

    cosine_similarity  in [-1, 1]   (+1 parallel, 0 orthogonal, -1 opposite)
    dis_cos            in [0, 1]    ((1 - cos) / 2; 0 parallel, 1 opposite)
    euclidean          in [0, inf)  (plain L2; at most 2 on the unit sphere)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import AntipodalVectors, DimMismatch, NotUnitNorm, ZeroVector

# Norms below this are treated as zero (well above float64 noise, far below
# any meaningful embedding magnitude).
ZERO_NORM_EPS = 1e-12

# Unit-norm precondition tolerance. Float32 storage of a normalized vector
# perturbs the norm by ~6e-8, so this passes normalized inputs and still
# rejects genuinely unnormalized ones.
UNIT_NORM_TOL = 1e-4

# Below this arc angle slerp degenerates to normalized lerp (sin(omega)
# division would blow up).
SLERP_LERP_THRESHOLD = 1e-6

# cos(a, b) must exceed -1 + this margin for slerp to have a defined path.
ANTIPODAL_MARGIN = 1e-6


class Modality(enum.IntEnum):
    """Asset modality with stable wire codes."""

    IMAGE = 0
    TEXT = 1
    AUDIO = 2

    @classmethod
    def from_name(cls, name: str) -> "Modality":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown modality {name!r}") from None

    @property
    def wire_name(self) -> str:
        return self.name.lower()


@dataclass(frozen=True, eq=False)
class Embedding:
    """One modality-tagged vector.

    The vector is a read-only 1-D float32 array with at least 2 finite
    components.
    """

    id: str
    modality: Modality
    vector: np.ndarray = field(repr=False)

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float32)
        if vec.ndim != 1:
            raise ValueError(f"embedding {self.id!r}: vector must be 1-D")
        if vec.shape[0] < 2:
            raise ValueError(f"embedding {self.id!r}: dim must be >= 2")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"embedding {self.id!r}: non-finite component")
        vec = vec.copy()
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)
        object.__setattr__(self, "modality", Modality(self.modality))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def as_float64(self) -> np.ndarray:
        return self.vector.astype(np.float64)


def _check_dims(a: Embedding, b: Embedding) -> None:
    if a.dim != b.dim:
        raise DimMismatch(f"dim {a.dim} ({a.id!r}) vs {b.dim} ({b.id!r})")


def norm_of(v: Embedding) -> float:
    """Euclidean norm, computed in float64."""
    return float(np.linalg.norm(v.as_float64()))


def normalize(v: Embedding) -> Embedding:
    """Rescale to unit euclidean norm, preserving id and modality.

    Raises ZeroVector when the norm is below ZERO_NORM_EPS.
    """
    vec = v.as_float64()
    n = float(np.linalg.norm(vec))
    if n < ZERO_NORM_EPS:
        raise ZeroVector(f"embedding {v.id!r} has zero norm")
    return Embedding(v.id, v.modality, (vec / n).astype(np.float32))


def is_unit(v: Embedding, tol: float = UNIT_NORM_TOL) -> bool:
    return abs(norm_of(v) - 1.0) <= tol


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """cos of the angle between a and b, clamped to [-1, 1].

    Neither input needs to be unit-norm; the result is invariant under
    positive rescaling of either argument.
    """
    _check_dims(a, b)
    av, bv = a.as_float64(), b.as_float64()
    na, nb = float(np.linalg.norm(av)), float(np.linalg.norm(bv))
    if na < ZERO_NORM_EPS:
        raise ZeroVector(f"embedding {a.id!r} has zero norm")
    if nb < ZERO_NORM_EPS:
        raise ZeroVector(f"embedding {b.id!r} has zero norm")
    sim = float(np.dot(av, bv) / (na * nb))
    return min(1.0, max(-1.0, sim))


def dis_cos(a: Embedding, b: Embedding) -> float:
    """Normalized cosine distance (1 - cos) / 2, in [0, 1].

    0 iff the vectors are parallel, 1 iff antiparallel, 0.5 when
    orthogonal.
    """
    return (1.0 - cosine_similarity(a, b)) / 2.0


def euclidean(a: Embedding, b: Embedding) -> float:
    """Plain L2 distance between the stored vectors."""
    _check_dims(a, b)
    return float(np.linalg.norm(a.as_float64() - b.as_float64()))


def slerp(a: Embedding, b: Embedding, theta: float) -> Embedding:
    """Spherical linear interpolation along the great circle from a to b.

    theta=0 returns a, theta=1 returns b, and every intermediate result
    lies on the unit sphere. Inputs must be unit-norm and not antipodal
    (the interpolation path between opposite vectors is ambiguous, so
    that case raises instead of picking an arbitrary great circle).
    Below an arc of SLERP_LERP_THRESHOLD radians the result falls back
    to normalized linear interpolation.
    """
    _check_dims(a, b)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    if not is_unit(a):
        raise NotUnitNorm(f"embedding {a.id!r} has norm {norm_of(a):.6f}")
    if not is_unit(b):
        raise NotUnitNorm(f"embedding {b.id!r} has norm {norm_of(b):.6f}")

    # Compute on exactly renormalized float64 directions: storage rounds
    # the inputs to ~1e-7 off unit, and near-antipodal weights would
    # amplify that beyond the 1e-6 output-norm guarantee.
    av, bv = a.as_float64(), b.as_float64()
    av = av / np.linalg.norm(av)
    bv = bv / np.linalg.norm(bv)
    cos_ab = min(1.0, max(-1.0, float(np.dot(av, bv))))
    if cos_ab <= -1.0 + ANTIPODAL_MARGIN:
        raise AntipodalVectors(f"{a.id!r} and {b.id!r} are antipodal (cos={cos_ab:.8f})")

    out_id = f"slerp({a.id},{b.id};{theta:g})"
    omega = float(np.arccos(cos_ab))
    if omega < SLERP_LERP_THRESHOLD:
        mixed = (1.0 - theta) * av + theta * bv
        n = float(np.linalg.norm(mixed))
        if n < ZERO_NORM_EPS:
            raise ZeroVector(f"degenerate interpolation between {a.id!r} and {b.id!r}")
        return Embedding(out_id, a.modality, (mixed / n).astype(np.float32))

    sin_omega = float(np.sin(omega))
    wa = float(np.sin((1.0 - theta) * omega)) / sin_omega
    wb = float(np.sin(theta * omega)) / sin_omega
    return Embedding(out_id, a.modality, (wa * av + wb * bv).astype(np.float32))
