"""Hot numerical loops, compiled with numba when available.

Set ``RANKSPARSE_BACKEND=numpy`` to force the pure-numpy path; the default
``auto`` uses numba if it imports cleanly.  Both backends expose the same
functions with the same signatures, so ``kernels.numpy_impl`` and
``kernels.numba_impl`` can be compared directly.
"""

import os

from . import numpy_impl

_requested = os.environ.get("RANKSPARSE_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ImportError(
        f"RANKSPARSE_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

try:
    from . import numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    if _requested == "numba":
        raise
    numba_impl = None

if numba_impl is not None and _requested != "numpy":
    BACKEND = "numba"
    _impl = numba_impl
else:
    BACKEND = "numpy"
    _impl = numpy_impl

soft_threshold = _impl.soft_threshold
project_t = _impl.project_t
admm_loop = _impl.admm_loop
certificate_fixed_point = _impl.certificate_fixed_point
transversality_power = _impl.transversality_power

__all__ = [
    "BACKEND",
    "admm_loop",
    "certificate_fixed_point",
    "numba_impl",
    "numpy_impl",
    "project_t",
    "soft_threshold",
    "transversality_power",
]
