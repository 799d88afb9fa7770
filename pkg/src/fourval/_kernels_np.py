"""NumPy implementations of the hot mesh kernels.

These are the reference implementations; `fourval._kernels` (Cython) provides
drop-in compiled twins selected at import time by :mod:`fourval.kernels`.
All functions evaluate moment generating functions on tensor grids
``z_i = R_i + 1j*u_i`` and are pure.
"""

from __future__ import annotations

import numpy as np

from .errors import BranchTrackingError

BACKEND_NAME = "numpy"

_TWO_PI = 2.0 * np.pi


def anchored_unwrap(angles, anchor):
    """Unwrap a 1d sequence of principal angles so adjacent steps stay in
    (-pi, pi], keeping the value at ``anchor`` on its principal branch."""
    out = np.unwrap(np.asarray(angles, dtype=float))
    out -= _TWO_PI * np.round((out[anchor] - angles[anchor]) / _TWO_PI)
    return out


def continuous_log_path(w, anchor, max_step=2.6):
    """Branch-continuous complex log along a 1d path of values ``w``.

    The branch is anchored to the principal value at index ``anchor`` (which
    the caller guarantees to be unambiguous, e.g. the node nearest u = 0).
    A phase step larger than ``max_step`` between adjacent nodes means the
    path is too coarse to track reliably.
    """
    w = np.asarray(w, dtype=complex)
    ang = anchored_unwrap(np.angle(w), anchor)
    steps = np.abs(np.diff(ang))
    if steps.size and steps.max() > max_step:
        raise BranchTrackingError(
            "phase step %.3f rad between adjacent nodes exceeds %.3f; "
            "refine the quadrature grid" % (steps.max(), max_step)
        )
    return np.log(np.abs(w)) + 1j * ang


def continuous_log_mesh(w, i0, j0, max_step=2.6):
    """Branch-continuous complex log on a 2d mesh.

    Separable unwrap: first along row ``i0`` (anchored at column ``j0``),
    then along every column (anchored at row ``i0``).
    """
    w = np.asarray(w, dtype=complex)
    ang = np.angle(w)
    row = anchored_unwrap(ang[i0, :], j0)
    full = np.unwrap(ang, axis=0)
    full += _TWO_PI * np.round((row - full[i0, :]) / _TWO_PI)
    worst = 0.0
    if full.shape[0] > 1:
        worst = max(worst, np.abs(np.diff(full, axis=0)).max())
    if full.shape[1] > 1:
        worst = max(worst, np.abs(np.diff(full, axis=1)).max())
    if worst > max_step:
        raise BranchTrackingError(
            "phase step %.3f rad between adjacent mesh nodes exceeds %.3f; "
            "refine the quadrature grid" % (worst, max_step)
        )
    return np.log(np.abs(w)) + 1j * full


def nig2d_mgf_mesh(alpha, beta1, beta2, delta, mu1, mu2,
                   d11, d12, d22, R1, R2, u1, u2, T):
    """M_{H_T}(R + i u) of the 2d NIG law on a structured mesh.

    ``u1``/``u2`` are matching 2d arrays of mesh coordinates (a tensor grid
    is just the broadcast special case); returns a complex array of the same
    shape.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    w1 = (beta1 + R1) + 1j * u1
    w2 = (beta2 + R2) + 1j * u2
    quad = d11 * w1 * w1 + 2.0 * d12 * (w1 * w2) + d22 * w2 * w2
    gamma0 = alpha * alpha - (d11 * beta1 * beta1
                              + 2.0 * d12 * beta1 * beta2
                              + d22 * beta2 * beta2)
    root = np.sqrt(alpha * alpha - quad)
    expo = ((mu1 * R1 + mu2 * R2) + 1j * (mu1 * u1 + mu2 * u2)
            + delta * (np.sqrt(gamma0) - root))
    return np.exp(T * expo)


def dhsv_terms(s1, s2, s3, r12, r13, r23, kappa, z1, z2):
    """Auxiliary (zeta, gamma, theta) of the two-asset SV moment generating
    function, broadcast over complex arguments z1, z2."""
    zeta = 0.5 * (s1 * s1 * z1 * z1 + s2 * s2 * z2 * z2
                  + 2.0 * r12 * s1 * s2 * z1 * z2
                  - s1 * s1 * z1 - s2 * s2 * z2)
    gamma = kappa - r13 * s1 * s3 * z1 - r23 * s2 * s3 * z2
    theta = np.sqrt(gamma * gamma - 2.0 * s3 * s3 * zeta)
    return zeta, gamma, theta


def dhsv_exponent_from_log(zeta, gamma, theta, log_w, v0, kappa, mu_v, s3, T):
    """Exponent of the SV MGF (initial log-prices excluded) given a
    branch-resolved log of D/(2 theta)."""
    em = -np.expm1(-theta * T)          # 1 - exp(-theta T), stable near 0
    D = 2.0 * theta - (theta - gamma) * em
    vterm = 2.0 * zeta * em / D * v0
    return vterm - (kappa * mu_v / (s3 * s3)) * (2.0 * log_w + (theta - gamma) * T)


def dhsv_mgf_mesh(s1, s2, s3, r12, r13, r23, v0, kappa, mu_v,
                  R1, R2, u1, u2, T, max_step=2.6):
    """M_{X_T}(R + i u) of the two-asset SV model on a structured mesh
    (matching 2d coordinate arrays), with the initial log-prices factored
    out (X starts at 0).

    The complex log is tracked continuously across the mesh, anchored at the
    node closest to u = 0 where the principal branch is unambiguous.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    z1 = R1 + 1j * u1
    z2 = R2 + 1j * u2
    zeta, gamma, theta = dhsv_terms(s1, s2, s3, r12, r13, r23, kappa, z1, z2)
    em = -np.expm1(-theta * T)
    D = 2.0 * theta - (theta - gamma) * em
    w = D / (2.0 * theta)
    i0, j0 = np.unravel_index(int(np.argmin(u1 * u1 + u2 * u2)), w.shape)
    log_w = continuous_log_mesh(w, int(i0), int(j0), max_step=max_step)
    expo = dhsv_exponent_from_log(zeta, gamma, theta, log_w, v0, kappa, mu_v, s3, T)
    return np.exp(expo)
