"""Kernel backend selection.

The hot solver loops (conjugate-gradient iterations) come in two
implementations: a compiled Cython core and a vectorized NumPy fallback.
The compiled core is preferred when importable; set ``KSNS_KERNELS`` to
``cython`` or ``numpy`` to force a choice. ``ksns bench-kernels`` compares
the two.
"""

import os

from . import _numpy_backend

_requested = os.environ.get("KSNS_KERNELS", "").strip().lower()

if _requested == "numpy":
    backend = _numpy_backend
else:
    try:
        from . import _cykernels as backend  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "KSNS_KERNELS=cython requested but the compiled extension is "
                "not available; reinstall the package with a C compiler"
            )
        backend = _numpy_backend

numpy_backend = _numpy_backend

try:
    from . import _cykernels as cython_backend
except ImportError:
    cython_backend = None

backend_name = backend.NAME
cg_solve = backend.cg_solve
apply_operator = backend.apply_operator
