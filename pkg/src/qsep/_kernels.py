"""Backend dispatch for the hot determinant-sweep kernels.

The environment variable ``QSEP_BACKEND`` selects the implementation:

* ``auto`` (default) - numba if importable, else numpy;
* ``numba`` - require the jitted kernels;
* ``numpy`` - force the vectorized fallback.

Both backends compute identical values; see ``benchmarks/bench_kernels.py``
for a timing comparison.
"""

import os

import numpy as np

from . import _kernels_numpy

_ENV_VAR = "QSEP_BACKEND"
_impl = _kernels_numpy
_active = "numpy"


def set_backend(name):
    """Select the kernel backend ('numba' or 'numpy') at runtime."""
    global _impl, _active
    if name == "numpy":
        _impl, _active = _kernels_numpy, "numpy"
    elif name == "numba":
        from . import _kernels_numba
        _impl, _active = _kernels_numba, "numba"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def backend():
    """Name of the active kernel backend."""
    return _active


def _init_from_env():
    choice = os.environ.get(_ENV_VAR, "auto").lower()
    if choice == "numpy":
        set_backend("numpy")
    elif choice == "numba":
        set_backend("numba")
    elif choice == "auto":
        try:
            set_backend("numba")
        except ImportError:
            set_backend("numpy")
    else:
        raise ValueError(f"{_ENV_VAR} must be auto, numba, or numpy, got {choice!r}")


def _c2(x):
    return np.ascontiguousarray(x, dtype=np.complex128)


def ratio_stack(mats):
    return _impl.ratio_stack(_c2(mats))


def scaling_ratios(ab, taus):
    return _impl.scaling_ratios(_c2(ab), np.ascontiguousarray(taus, dtype=np.float64))


def rotation_ratios(ab, zs):
    return _impl.rotation_ratios(_c2(ab), _c2(np.atleast_1d(zs)))


def congruence_ratios(a, b, ts, ss):
    return _impl.congruence_ratios(_c2(a), _c2(b), _c2(ts), _c2(ss))


def unitary_ratios(a, b, us, vs):
    return _impl.unitary_ratios(_c2(a), _c2(b), _c2(us), _c2(vs))


_init_from_env()
