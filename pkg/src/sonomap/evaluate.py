"""Evaluation harness: MOS aggregation, histograms, pair statistics,
and correlation between objective metrics and subjective ratings.

Ratings travel in a flat CSV with header
``rater_id,frame_id,audio_id,mos,timestamp`` (timestamp ISO-8601 UTC).
Standard deviations everywhere are population-style (divisor n), which is
the descriptive convention the reports use; document this when comparing
against tools that default to the n-1 estimator.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateSeries,
    EmptyInput,
    EmptyRatings,
    InvalidMos,
    LengthMismatch,
    MissingMetric,
    ParseError,
    UnknownFrame,
)
from .metrics import InconsistencyReport, SlerpParams, slerp_audio_target, slerp_distance
from .store import AssetRecord, EmbeddingStore

RATINGS_FIELDS = ("rater_id", "frame_id", "audio_id", "mos", "timestamp")

RELATED = "related"
UNRELATED = "unrelated"

# Valid ranges of the histogram components.
_COMPONENT_RANGES = {
    "d_image_text": (0.0, 1.0),
    "d_image_audio": (0.0, 1.0),
    "inc": (-1.0, 2.0),
}


@dataclass(frozen=True)
class RatingRecord:
    """One human MOS judgment for a (frame, audio) pair."""

    rater_id: str
    frame_id: str
    audio_id: str
    mos: int
    timestamp: datetime

    def __post_init__(self):
        if not isinstance(self.mos, int) or isinstance(self.mos, bool) or not 1 <= self.mos <= 5:
            raise InvalidMos(f"mos must be an integer in 1..5, got {self.mos!r}")
        ts = self.timestamp
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "timestamp", ts.astimezone(timezone.utc))

    @property
    def pair(self) -> tuple[str, str]:
        return (self.frame_id, self.audio_id)


@dataclass(frozen=True)
class GroupStat:
    group: str
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class PairStats:
    """One cell of the audio-relation x image-relation table."""

    audio_relation: str
    image_relation: str
    mean: float | None
    std: float | None
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.n >= 1 and (self.mean is None or self.std is None or self.std < 0):
            raise ValueError("populated cells need mean and std >= 0")


@dataclass(frozen=True)
class Histogram:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    total: int

    def __post_init__(self):
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ValueError("need exactly one more edge than counts")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise ValueError("bin edges must be strictly ascending")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")
        if sum(self.counts) != self.total:
            raise ValueError("counts must sum to total")


@dataclass(frozen=True)
class CorrelationReport:
    metric_name: str
    r: float
    n: int

    def __post_init__(self):
        if not -1.0 <= self.r <= 1.0:
            raise ValueError(f"r must be in [-1, 1], got {self.r}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")


# -- ratings file ------------------------------------------------------------

def format_rating_row(record: RatingRecord) -> str:
    """One CSV row (newline-terminated) in the ratings format."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            record.rater_id,
            record.frame_id,
            record.audio_id,
            str(record.mos),
            record.timestamp.isoformat(),
        ]
    )
    return buf.getvalue()


def write_ratings(path, records: Iterable[RatingRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(RATINGS_FIELDS) + "\n")
        for rec in records:
            fh.write(format_rating_row(rec))


def read_ratings(path) -> list[RatingRecord]:
    """Parse a ratings CSV; errors carry the offending line number."""
    records: list[RatingRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 0, "empty ratings file") from None
        if tuple(header) != RATINGS_FIELDS:
            raise ParseError(path, 1, f"bad header: expected {','.join(RATINGS_FIELDS)}")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(RATINGS_FIELDS):
                raise ParseError(path, lineno, f"expected {len(RATINGS_FIELDS)} fields, got {len(row)}")
            rater_id, frame_id, audio_id, mos_text, ts_text = row
            try:
                mos = int(mos_text)
            except ValueError:
                raise ParseError(path, lineno, f"mos must be an integer, got {mos_text!r}") from None
            try:
                ts = datetime.fromisoformat(ts_text)
            except ValueError:
                raise ParseError(path, lineno, f"bad ISO-8601 timestamp {ts_text!r}") from None
            try:
                records.append(RatingRecord(rater_id, frame_id, audio_id, mos, ts))
            except InvalidMos as exc:
                raise ParseError(path, lineno, str(exc)) from None
    return records


def read_pair_list(path) -> list[tuple[str, str]]:
    """CSV with header ``frame_id,audio_id``, one pair per line."""
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 0, "empty pair file") from None
        if tuple(header) != ("frame_id", "audio_id"):
            raise ParseError(path, 1, "bad header: expected frame_id,audio_id")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(path, reader.line_num, f"expected 2 fields, got {len(row)}")
            pairs.append((row[0], row[1]))
    return pairs


def read_metric_csv(path) -> dict[tuple[str, str], float]:
    """CSV with header ``frame_id,audio_id,value`` mapping pairs to scores."""
    values: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 0, "empty metric file") from None
        if tuple(header) != ("frame_id", "audio_id", "value"):
            raise ParseError(path, 1, "bad header: expected frame_id,audio_id,value")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(path, reader.line_num, f"expected 3 fields, got {len(row)}")
            try:
                value = float(row[2])
            except ValueError:
                raise ParseError(path, reader.line_num, f"bad metric value {row[2]!r}") from None
            if not math.isfinite(value):
                raise ParseError(path, reader.line_num, f"non-finite metric value {row[2]!r}")
            values[(row[0], row[1])] = value
    return values


def write_metric_csv(path, values: Mapping[tuple[str, str], float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", "audio_id", "value"])
        for (frame_id, audio_id), value in values.items():
            writer.writerow([frame_id, audio_id, repr(float(value))])


# -- aggregation -------------------------------------------------------------

def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())  # population std, divisor n


def pair_label(frame_id: str, audio_id: str) -> str:
    return f"{frame_id}|{audio_id}"


def mos_aggregate(
    ratings: Sequence[RatingRecord],
    group_by: str = "scene",
    assets: EmbeddingStore | Iterable[AssetRecord] | Mapping[str, str] | None = None,
) -> list[GroupStat]:
    """Mean/std/n of MOS per scene or per (frame, audio) pair.

    group_by="scene" needs a way to resolve frames to scenes: a store,
    the manifest records, or a plain id->scene mapping.
    """
    if not ratings:
        raise EmptyRatings("no ratings to aggregate")
    if group_by not in ("scene", "pair"):
        raise ValueError(f"group_by must be 'scene' or 'pair', got {group_by!r}")

    if group_by == "pair":
        labeler = lambda rec: pair_label(rec.frame_id, rec.audio_id)  # noqa: E731
    else:
        if assets is None:
            raise ValueError("group_by='scene' requires assets for scene lookup")
        if isinstance(assets, EmbeddingStore):
            scene_map = {rec.id: rec.scene for rec in assets.assets()}
        elif isinstance(assets, Mapping):
            scene_map = dict(assets)
        else:
            scene_map = {rec.id: rec.scene for rec in assets}

        def labeler(rec):
            try:
                return scene_map[rec.frame_id]
            except KeyError:
                raise UnknownFrame(f"frame {rec.frame_id!r} has no scene") from None

    groups: dict[str, list[int]] = {}
    for rec in ratings:
        groups.setdefault(labeler(rec), []).append(rec.mos)

    out = []
    for label in sorted(groups):
        mean, std = _mean_std(groups[label])
        out.append(GroupStat(label, mean, std, len(groups[label])))
    return out


def inconsistency_histogram(
    reports: Sequence[InconsistencyReport], component: str, bins: int
) -> Histogram:
    """Equal-width histogram of one report component over its valid range.

    Bins are left-closed/right-open, except the last bin which is closed;
    values are clipped to the component range so counts always conserve
    the input size.
    """
    if component not in _COMPONENT_RANGES:
        raise ValueError(f"component must be one of {sorted(_COMPONENT_RANGES)}, got {component!r}")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if not reports:
        raise EmptyInput("no reports to histogram")
    lo, hi = _COMPONENT_RANGES[component]
    values = np.clip([rep.component(component) for rep in reports], lo, hi)
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return Histogram(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        total=len(reports),
    )


def pair_stats(
    store: EmbeddingStore,
    references: Sequence[tuple[str, str]],
    targets: Sequence[tuple[str, str]],
    params: SlerpParams = SlerpParams(),
) -> list[PairStats]:
    """Target-distance statistics per (audio relation, image relation) cell.

    For every reference (frame, audio) and every target (frame, audio),
    builds the cross-subspace audio target from the reference pair and
    the target frame, measures the target audio's distance to it, and
    buckets the result by whether the audio/image scenes match the
    reference's. Cells nobody hits are reported with n=0 and no mean.
    """
    for fid, aid in list(references) + list(targets):
        store.get(fid), store.get(aid)  # raises UnknownId early

    cells: dict[tuple[str, str], list[float]] = {
        (a, i): [] for a in (RELATED, UNRELATED) for i in (RELATED, UNRELATED)
    }
    for ref_frame_id, ref_audio_id in references:
        ref_frame = store.get(ref_frame_id)
        ref_audio = store.get(ref_audio_id)
        ref_frame_scene = store.scene_of(ref_frame_id)
        ref_audio_scene = store.scene_of(ref_audio_id)
        for tgt_frame_id, tgt_audio_id in targets:
            target = slerp_audio_target(ref_audio, ref_frame, store.get(tgt_frame_id), params)
            d = slerp_distance(store.get(tgt_audio_id), target, params)
            audio_rel = RELATED if store.scene_of(tgt_audio_id) == ref_audio_scene else UNRELATED
            image_rel = RELATED if store.scene_of(tgt_frame_id) == ref_frame_scene else UNRELATED
            cells[(audio_rel, image_rel)].append(d)

    out = []
    for audio_rel in (RELATED, UNRELATED):
        for image_rel in (RELATED, UNRELATED):
            values = cells[(audio_rel, image_rel)]
            if values:
                mean, std = _mean_std(values)
                out.append(PairStats(audio_rel, image_rel, mean, std, len(values)))
            else:
                out.append(PairStats(audio_rel, image_rel, None, None, 0))
    return out


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient, clamped to [-1, 1]."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise LengthMismatch(f"series lengths {xs.shape} vs {ys.shape}")
    if xs.size < 2:
        raise ValueError(f"need at least 2 points, got {xs.size}")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSeries("a constant series has no defined correlation")
    r = float(np.dot(dx, dy)) / (sx * sy)
    return min(1.0, max(-1.0, r))


def correlate(
    ratings: Sequence[RatingRecord],
    metric_values: Mapping[tuple[str, str], float],
    metric_name: str,
    average_raters: bool = True,
) -> CorrelationReport:
    """Pearson correlation between a metric and the MOS judgments.

    With average_raters (default) multiple judgments of the same pair
    collapse to their mean before correlating; with it off, every rating
    is an independent point, which is the right mode for rater-level
    correlation tables.
    """
    if not ratings:
        raise EmptyRatings("no ratings to correlate")
    for rec in ratings:
        if rec.pair not in metric_values:
            raise MissingMetric(f"no metric value for pair {rec.pair!r}")

    if average_raters:
        by_pair: dict[tuple[str, str], list[int]] = {}
        for rec in ratings:
            by_pair.setdefault(rec.pair, []).append(rec.mos)
        pairs = sorted(by_pair)
        mos_series = [float(np.mean(by_pair[p])) for p in pairs]
        metric_series = [float(metric_values[p]) for p in pairs]
    else:
        mos_series = [float(rec.mos) for rec in ratings]
        metric_series = [float(metric_values[rec.pair]) for rec in ratings]

    if len(mos_series) < 2:
        raise DegenerateSeries("need at least 2 joined points")
    r = pearson(metric_series, mos_series)
    return CorrelationReport(metric_name=metric_name, r=r, n=len(mos_series))
