"""Objective consistency metrics and candidate ranking.

Three measures drive every evaluation:

  * inconsistency: inc = 2 * dis_cos(image, text) - dis_cos(image, audio),
    ranging over [-1, 2]. 0 means the three representations agree; the
    extremes mean image/text disagree while image/audio coincide (+2) or
    the other way around (-1).
  * cross-subspace audio target: the spherical displacement from a
    reference frame toward a target frame, transported onto the reference
    audio and re-projected to the unit sphere.
  * target distance: cosine (normalized) or euclidean distance between a
    candidate audio and that target; zero means a perfect match.

Rankings sort ascending (lower is better for every metric here) with a
deterministic lexicographic tie-break on candidate id.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .core import (
    Embedding,
    Modality,
    dis_cos,
    euclidean,
    is_unit,
    norm_of,
    normalize,
    slerp,
)
from .errors import EmptyCandidates, NotUnitNorm, WrongModality

INC_MIN = -1.0
INC_MAX = 2.0


class DistanceKind(str, enum.Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class SlerpParams:
    """Interpolation weight and distance flavor for target construction.

    theta weights the interpolation toward the reference frame: theta=1
    reproduces the reference exactly (no displacement transported),
    theta=0 transports the full displacement to the target frame. The
    evaluation default is the halfway point.
    """

    theta: float = 0.5
    distance_kind: DistanceKind = DistanceKind.COSINE

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [0, 1], got {self.theta}")
        object.__setattr__(self, "distance_kind", DistanceKind(self.distance_kind))


@dataclass(frozen=True)
class InconsistencyReport:
    frame_id: str
    text_id: str
    audio_id: str
    d_image_text: float
    d_image_audio: float
    inc: float

    def component(self, name: str) -> float:
        if name not in ("d_image_text", "d_image_audio", "inc"):
            raise ValueError(f"unknown component {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class RankedResult:
    """Candidates ordered ascending by score, ties broken by id."""

    query_id: str
    entries: tuple[tuple[str, float], ...]
    metric_name: str

    def __post_init__(self):
        entries = tuple((str(i), float(s)) for i, s in self.entries)
        if any(entries[j][::-1] > entries[j + 1][::-1] for j in range(len(entries) - 1)):
            raise ValueError("entries must be sorted ascending by (score, id)")
        object.__setattr__(self, "entries", entries)

    @property
    def best_id(self) -> str:
        return self.entries[0][0]


def _require_modality(emb: Embedding, expected: Modality, role: str) -> None:
    if emb.modality is not expected:
        raise WrongModality(
            f"{role} must be {expected.wire_name}, got {emb.modality.wire_name} ({emb.id!r})"
        )


def inconsistency(e_image: Embedding, e_text: Embedding, e_audio: Embedding) -> InconsistencyReport:
    """Three-way consistency report for one (frame, caption, audio) triple."""
    _require_modality(e_image, Modality.IMAGE, "first argument")
    _require_modality(e_text, Modality.TEXT, "second argument")
    _require_modality(e_audio, Modality.AUDIO, "third argument")
    d_it = dis_cos(e_image, e_text)
    d_ia = dis_cos(e_image, e_audio)
    return InconsistencyReport(
        frame_id=e_image.id,
        text_id=e_text.id,
        audio_id=e_audio.id,
        d_image_text=d_it,
        d_image_audio=d_ia,
        inc=2.0 * d_it - d_ia,
    )


def slerp_audio_target(
    e_ref_audio: Embedding,
    e_ref_frame: Embedding,
    e_target_frame: Embedding,
    params: SlerpParams = SlerpParams(),
) -> Embedding:
    """Project the frame-subspace displacement onto the audio subspace.

    Interpolates from the target frame toward the reference frame
    (weight theta), takes the displacement of that midpoint relative to
    the reference frame, adds it to the reference audio, and re-projects
    onto the unit sphere. Coincident frames return the reference audio
    unchanged (up to storage precision).
    """
    _require_modality(e_ref_audio, Modality.AUDIO, "reference audio")
    _require_modality(e_ref_frame, Modality.IMAGE, "reference frame")
    _require_modality(e_target_frame, Modality.IMAGE, "target frame")
    if not is_unit(e_ref_audio):
        raise NotUnitNorm(f"embedding {e_ref_audio.id!r} has norm {norm_of(e_ref_audio):.6f}")

    mid = slerp(e_target_frame, e_ref_frame, params.theta)
    transported = e_ref_audio.as_float64() + (mid.as_float64() - e_ref_frame.as_float64())
    out_id = f"target({e_ref_audio.id}|{e_ref_frame.id}->{e_target_frame.id})"
    return normalize(Embedding(out_id, Modality.AUDIO, transported.astype("float32")))


def slerp_distance(
    e_candidate_audio: Embedding,
    e_audio_target: Embedding,
    params: SlerpParams = SlerpParams(),
) -> float:
    """Distance from a candidate audio to the constructed target (>= 0)."""
    _require_modality(e_candidate_audio, Modality.AUDIO, "candidate")
    if params.distance_kind is DistanceKind.COSINE:
        return dis_cos(e_candidate_audio, e_audio_target)
    return euclidean(e_candidate_audio, e_audio_target)


def sort_entries(
    scored: Iterable[tuple[str, float]], k: int
) -> tuple[tuple[str, float], ...]:
    """Ascending (score, id) sort truncated to k; rejects non-finite scores."""
    pairs = []
    for cid, score in scored:
        score = float(score)
        if not math.isfinite(score):
            raise ValueError(f"non-finite score for candidate {cid!r}")
        pairs.append((str(cid), score))
    pairs.sort(key=lambda t: (t[1], t[0]))
    return tuple(pairs[:k])


def rank_candidates(
    query_score: Callable[[Embedding], float],
    candidates: Sequence[Embedding],
    k: int,
    *,
    query_id: str = "",
    metric_name: str = "score",
) -> RankedResult:
    """Score every candidate and keep the k best (lowest) scores."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not candidates:
        raise EmptyCandidates("no candidates to rank")
    entries = sort_entries(((c.id, query_score(c)) for c in candidates), k)
    return RankedResult(query_id=query_id, entries=entries, metric_name=metric_name)


def rank_by_inconsistency(
    e_image: Embedding,
    pairs: Sequence[tuple[Embedding, Embedding]],
    k: int,
) -> RankedResult:
    """Rank (text, audio) pairs by |inc| against one image.

    The candidate id is the audio id (the asset a sonorization would
    pick); the raw signed inc is available via `inconsistency` when sign
    analysis matters.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not pairs:
        raise EmptyCandidates("no (text, audio) pairs to rank")
    scored = []
    for e_text, e_audio in pairs:
        report = inconsistency(e_image, e_text, e_audio)
        scored.append((report.audio_id, abs(report.inc)))
    return RankedResult(
        query_id=e_image.id,
        entries=sort_entries(scored, k),
        metric_name="abs_inconsistency",
    )
