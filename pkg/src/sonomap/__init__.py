"""Image-guided scene sonification over multimodal embedding spaces.

Retrieval-based audio assignment, text-mediated generation orchestration,
objective consistency metrics, and the subjective (MOS) evaluation
harness, all operating on precomputed embeddings.
"""

from .core import (
    Embedding,
    Modality,
    cosine_similarity,
    dis_cos,
    euclidean,
    normalize,
    slerp,
)
from .errors import SonomapError
from .metrics import (
    DistanceKind,
    InconsistencyReport,
    RankedResult,
    SlerpParams,
    inconsistency,
    rank_by_inconsistency,
    rank_candidates,
    slerp_audio_target,
    slerp_distance,
)
from .retrieval import AdapterSpec, SonorizationPlan, sonorize_scheme1, sonorize_scheme2
from .store import AssetRecord, EmbeddingStore, ingest, read_archive, read_manifest, write_archive, write_manifest
from .synth import SyntheticSpaceConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AdapterSpec",
    "AssetRecord",
    "DistanceKind",
    "Embedding",
    "EmbeddingStore",
    "InconsistencyReport",
    "Modality",
    "RankedResult",
    "SlerpParams",
    "SonomapError",
    "SonorizationPlan",
    "SyntheticSpaceConfig",
    "__version__",
    "cosine_similarity",
    "dis_cos",
    "euclidean",
    "generate",
    "inconsistency",
    "ingest",
    "normalize",
    "rank_by_inconsistency",
    "rank_candidates",
    "read_archive",
    "read_manifest",
    "slerp",
    "slerp_audio_target",
    "slerp_distance",
    "sonorize_scheme1",
    "sonorize_scheme2",
    "write_archive",
    "write_manifest",
]
