"""Backend selection for the hot loops.

The compiled extension is used when it is importable; setting the
environment variable ``WERNERWIT_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

import numpy as np

from wernerwit import _kernels_py

try:
    from wernerwit import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

if os.environ.get("WERNERWIT_PURE_PYTHON") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

_impl = BACKENDS[BACKEND]


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    # The kernel rotates its argument in place, so always hand it a copy.
    return _impl.jacobi_eigh(np.array(a, dtype=np.float64, order="C", copy=True), tol, max_sweeps)


def lowest_eigpair(h):
    return _impl.lowest_eigpair(_c(h))


def seesaw_product(w, starts, tol=1e-12, max_iter=500):
    """Product-state see-saw on ``w[a, b, a', b']`` from side-A ``starts``."""
    return _impl.seesaw_product(_c(w), _c(starts), tol, max_iter)


def seesaw_rank_two(x, frames, tol=1e-12, max_iter=500):
    """Schmidt-rank-two see-saw on ``x[a, b, a', b']`` from side-B 2-frames."""
    return _impl.seesaw_rank_two(_c(x), _c(frames), tol, max_iter)


def get_backend(name):
    """Return the kernel module registered under ``name``."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}"
        ) from None
