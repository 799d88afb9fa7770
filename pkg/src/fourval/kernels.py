"""Backend selection for the hot mesh kernels.

Prefers the compiled Cython extension when it was built; otherwise falls back
to the pure-NumPy implementations with identical semantics.  The choice is
exposed as ``BACKEND`` ("cython" or "numpy").  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

from . import _kernels_np

try:
    from . import _kernels as _compiled

    BACKEND = "cython"
    nig2d_mgf_mesh = _compiled.nig2d_mgf_mesh
    dhsv_mgf_mesh = _compiled.dhsv_mgf_mesh
except ImportError:
    BACKEND = "numpy"
    nig2d_mgf_mesh = _kernels_np.nig2d_mgf_mesh
    dhsv_mgf_mesh = _kernels_np.dhsv_mgf_mesh

# Path/scalar helpers have no compiled twin; they are cheap.
anchored_unwrap = _kernels_np.anchored_unwrap
continuous_log_path = _kernels_np.continuous_log_path
continuous_log_mesh = _kernels_np.continuous_log_mesh
