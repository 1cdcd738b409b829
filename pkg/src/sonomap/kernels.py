"""Backend selection for the batch scan kernels.

Prefers the compiled extension (_ckernels) and falls back to the numpy
implementation (_pykernels) when the extension is absent or when the
SONOMAP_PURE_PYTHON environment variable is set to a non-empty value.
BACKEND names the active implementation; benchmarks/bench_kernels.py
compares the two.
"""

import os

if os.environ.get("SONOMAP_PURE_PYTHON"):
    from sonomap._pykernels import dis_cos_many, euclidean_many

    BACKEND = "python"
else:
    try:
        from sonomap._ckernels import dis_cos_many, euclidean_many

        BACKEND = "c"
    except ImportError:
        from sonomap._pykernels import dis_cos_many, euclidean_many

        BACKEND = "python"

__all__ = ["BACKEND", "dis_cos_many", "euclidean_many"]
