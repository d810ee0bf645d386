"""Hot numerical kernels with a compiled core and a NumPy fallback.

The Cython extension ``_ckernels`` is used when it was built; otherwise the
NumPy versions in ``_pykernels`` are used. Setting the environment variable
``GEOSANDWICH_PURE_PYTHON=1`` forces the fallback.

Kernels
-------
chord_min
    Minimum chord interpolant over (direction, back length, forward length).
envelope_1d_exhaustive
    All-chords lower envelope on a 1-D grid (cubic reference computation).
interp_regular
    Multilinear interpolation on a regular, optionally periodic, grid.
rk4_conformal
    Batched RK4 geodesic integration for conformal chart metrics.
"""

import os

from . import _pykernels

__all__ = [
    "BACKEND",
    "chord_min",
    "envelope_1d_exhaustive",
    "interp_regular",
    "rk4_conformal",
    "python_kernels",
    "compiled_kernels",
]

python_kernels = _pykernels

compiled_kernels = None
if os.environ.get("GEOSANDWICH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

if compiled_kernels is not None:
    BACKEND = "compiled"
    chord_min = compiled_kernels.chord_min
    envelope_1d_exhaustive = compiled_kernels.envelope_1d_exhaustive
    interp_regular = compiled_kernels.interp_regular
    rk4_conformal = compiled_kernels.rk4_conformal
else:
    BACKEND = "python"
    chord_min = _pykernels.chord_min
    envelope_1d_exhaustive = _pykernels.envelope_1d_exhaustive
    interp_regular = _pykernels.interp_regular
    rk4_conformal = _pykernels.rk4_conformal
