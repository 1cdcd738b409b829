import sys

import numpy as np
import pytest

from sonomap.core import Embedding, Modality


def unit(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return v / np.linalg.norm(v)


def emb(asset_id: str, modality: Modality, values) -> Embedding:
    return Embedding(asset_id, modality, np.asarray(values, dtype=np.float32))


def unit_emb(asset_id: str, modality: Modality, values) -> Embedding:
    return emb(asset_id, modality, unit(values))


def random_unit_emb(rng, asset_id, modality, dim) -> Embedding:
    return unit_emb(asset_id, modality, rng.standard_normal(dim))


# -- mock adapter scripts ------------------------------------------------------

_CAPTIONER = """\
import sys

n, inp, out = int(sys.argv[1]), sys.argv[2], sys.argv[3]
stem = inp.rsplit("/", 1)[-1]
with open(out, "w", encoding="utf-8") as fh:
    for k in range(n):
        fh.write(f"caption {k} of {stem}\\n")
"""

_GENERATOR = """\
import pathlib
import sys

inp, out = sys.argv[1], sys.argv[2]
variant = sys.argv[3] if len(sys.argv) > 3 else "0"
text = pathlib.Path(inp).read_text(encoding="utf-8")
pathlib.Path(out).write_text(f"AUDIO[{variant}] {text}", encoding="utf-8")
"""

# Deterministic encoder: every asset maps to a unit vector keyed by its
# parent frame id, with text/audio children rotated away by a configurable
# modality gap plus per-asset noise. gap=0, noise=0 collapses all children
# onto their frame.
_ENCODER = """\
import sys
import zlib

import numpy as np

from sonomap.core import Embedding, Modality
from sonomap.store import parent_frame_id, read_manifest, write_archive
from sonomap.synth import keyed_rng, perturb, random_unit, rotate_toward

gap, noise, dim = float(sys.argv[1]), float(sys.argv[2]), int(sys.argv[3])
inp, out = sys.argv[4], sys.argv[5]

records = read_manifest(inp)
offsets = {
    Modality.TEXT: random_unit(keyed_rng(99, 1), dim),
    Modality.AUDIO: random_unit(keyed_rng(99, 2), dim),
}
embeddings = []
for rec in records:
    parent_key = zlib.crc32(parent_frame_id(rec.id).encode())
    vec = random_unit(keyed_rng(parent_key, 0), dim)
    if rec.modality is not Modality.IMAGE:
        if gap > 0:
            vec = rotate_toward(vec, offsets[rec.modality], gap)
        if noise > 0:
            vec = perturb(keyed_rng(zlib.crc32(rec.id.encode()), 1), vec, noise)
    embeddings.append(Embedding(rec.id, rec.modality, vec.astype(np.float32)))
write_archive(out, dim, embeddings)
"""

_SLEEPER = """\
import time

time.sleep(30)
"""

_FAILER = """\
import sys

sys.stderr.write("adapter exploded on purpose\\n")
sys.exit(3)
"""


@pytest.fixture(scope="session")
def adapter_scripts(tmp_path_factory):
    """Write the mock adapter scripts once; returns path templates."""
    root = tmp_path_factory.mktemp("adapters")
    scripts = {
        "captioner": _CAPTIONER,
        "generator": _GENERATOR,
        "encoder": _ENCODER,
        "sleeper": _SLEEPER,
        "failer": _FAILER,
    }
    paths = {}
    for name, source in scripts.items():
        path = root / f"mock_{name}.py"
        path.write_text(source, encoding="utf-8")
        paths[name] = path
    return paths


def captioner_cmd(paths, n=3):
    return f"{sys.executable} {paths['captioner']} {n} {{input}} {{output}}"


def generator_cmd(paths):
    return f"{sys.executable} {paths['generator']} {{input}} {{output}} {{k}}"


def encoder_cmd(paths, gap=0.0, noise=0.0, dim=16):
    return f"{sys.executable} {paths['encoder']} {gap} {noise} {dim} {{input}} {{output}}"
