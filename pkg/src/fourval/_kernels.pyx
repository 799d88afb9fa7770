# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot mesh kernels in ``_kernels_np``.

Same formulas, same branch-tracking semantics (anchored at the node nearest
u = 0, unwinding phase jumps larger than pi, failing on steps beyond
``max_step``); fused loops avoid the temporaries of the NumPy path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, expm1, fabs, log, round, sin, sqrt, M_PI

from .errors import BranchTrackingError

cnp.import_array()

ctypedef double complex dcplx

cdef extern from "complex.h" nogil:
    dcplx csqrt(dcplx)
    dcplx cexp(dcplx)
    double creal(dcplx)
    double cimag(dcplx)
    double cabs(dcplx)


cdef inline dcplx cexpm1(dcplx z) nogil:
    # e^z - 1, stable for small |z|
    cdef double x = creal(z), y = cimag(z)
    cdef double s = sin(0.5 * y)
    return (expm1(x) * cos(y) - 2.0 * s * s) + 1j * (exp(x) * sin(y))


def nig2d_mgf_mesh(double alpha, double beta1, double beta2, double delta,
                   double mu1, double mu2, double d11, double d12, double d22,
                   double R1, double R2, u1, u2, double T):
    """M_{H_T}(R + i u) of the 2d NIG law on a structured mesh (matching 2d
    coordinate arrays)."""
    cdef double[:, ::1] x1 = np.ascontiguousarray(u1, dtype=np.float64)
    cdef double[:, ::1] x2 = np.ascontiguousarray(u2, dtype=np.float64)
    cdef Py_ssize_t n1 = x1.shape[0], n2 = x1.shape[1], i, j
    out_arr = np.empty((n1, n2), dtype=np.complex128)
    cdef dcplx[:, ::1] out = out_arr
    cdef double a1 = beta1 + R1, a2 = beta2 + R2
    cdef double gamma0 = alpha * alpha - (d11 * beta1 * beta1
                                          + 2.0 * d12 * beta1 * beta2
                                          + d22 * beta2 * beta2)
    cdef double root0 = sqrt(gamma0)
    cdef double base_re = mu1 * R1 + mu2 * R2
    cdef dcplx w1, w2, quad, expo
    with nogil:
        for i in range(n1):
            for j in range(n2):
                w1 = a1 + 1j * x1[i, j]
                w2 = a2 + 1j * x2[i, j]
                quad = d11 * w1 * w1 + 2.0 * d12 * w1 * w2 + d22 * w2 * w2
                expo = (base_re + 1j * (mu1 * x1[i, j] + mu2 * x2[i, j])
                        + delta * (root0 - csqrt(alpha * alpha - quad)))
                out[i, j] = cexp(T * expo)
    return out_arr


cdef inline dcplx _dhsv_node(double s1, double s2, double s3,
                             double r12, double r13, double r23,
                             double v0, double kappa, double mu_v,
                             dcplx z1, dcplx z2, double T,
                             double ref_ang, double max_step,
                             double* ang_out, int* fail) nogil:
    cdef dcplx zeta, gamma, theta, em, D, w, log_w, expo
    cdef double ang
    zeta = 0.5 * (s1 * s1 * z1 * z1 + s2 * s2 * z2 * z2
                  + 2.0 * r12 * s1 * s2 * z1 * z2
                  - s1 * s1 * z1 - s2 * s2 * z2)
    gamma = kappa - r13 * s1 * s3 * z1 - r23 * s2 * s3 * z2
    theta = csqrt(gamma * gamma - 2.0 * s3 * s3 * zeta)
    em = -cexpm1(-theta * T)
    D = 2.0 * theta - (theta - gamma) * em
    w = D / (2.0 * theta)
    ang = atan2(cimag(w), creal(w))
    if ref_ang == ref_ang:  # not NaN: unwind against the reference
        ang += 2.0 * M_PI * round((ref_ang - ang) / (2.0 * M_PI))
        if fabs(ang - ref_ang) > max_step:
            fail[0] = 1
    ang_out[0] = ang
    log_w = log(cabs(w)) + 1j * ang
    expo = (2.0 * zeta * em / D * v0
            - (kappa * mu_v / (s3 * s3)) * (2.0 * log_w + (theta - gamma) * T))
    return cexp(expo)


def dhsv_mgf_mesh(double s1, double s2, double s3, double r12, double r13,
                  double r23, double v0, double kappa, double mu_v,
                  double R1, double R2, u1, u2, double T,
                  double max_step=2.6):
    """M_{X_T}(R + i u) of the two-asset SV model on a structured mesh
    (matching 2d coordinate arrays; initial log-prices factored out), with
    continuous log tracking anchored at the node closest to u = 0."""
    cdef double[:, ::1] x1 = np.ascontiguousarray(u1, dtype=np.float64)
    cdef double[:, ::1] x2 = np.ascontiguousarray(u2, dtype=np.float64)
    cdef Py_ssize_t n1 = x1.shape[0], n2 = x1.shape[1], i, j
    cdef Py_ssize_t i0 = 0, j0 = 0
    cdef double best = x1[0, 0] * x1[0, 0] + x2[0, 0] * x2[0, 0], cand
    for i in range(n1):
        for j in range(n2):
            cand = x1[i, j] * x1[i, j] + x2[i, j] * x2[i, j]
            if cand < best:
                best = cand
                i0 = i
                j0 = j
    out_arr = np.empty((n1, n2), dtype=np.complex128)
    row_ang_arr = np.empty(n2, dtype=np.float64)
    cdef dcplx[:, ::1] out = out_arr
    cdef double[::1] row_ang = row_ang_arr
    cdef double nan = float("nan")
    cdef double ang = 0.0, ref
    cdef int fail = 0
    cdef dcplx z1, z2
    with nogil:
        # anchor row i0: principal at j0, then track outward in j
        ref = nan
        for j in range(j0, n2):
            z1 = R1 + 1j * x1[i0, j]
            z2 = R2 + 1j * x2[i0, j]
            out[i0, j] = _dhsv_node(s1, s2, s3, r12, r13, r23, v0, kappa, mu_v,
                                    z1, z2, T, ref, max_step, &ang, &fail)
            row_ang[j] = ang
            ref = ang
        ref = row_ang[j0]
        for j in range(j0 - 1, -1, -1):
            z1 = R1 + 1j * x1[i0, j]
            z2 = R2 + 1j * x2[i0, j]
            out[i0, j] = _dhsv_node(s1, s2, s3, r12, r13, r23, v0, kappa, mu_v,
                                    z1, z2, T, ref, max_step, &ang, &fail)
            row_ang[j] = ang
            ref = ang
        # columns: track outward in i from the anchor row
        for j in range(n2):
            ref = row_ang[j]
            for i in range(i0 + 1, n1):
                z1 = R1 + 1j * x1[i, j]
                z2 = R2 + 1j * x2[i, j]
                out[i, j] = _dhsv_node(s1, s2, s3, r12, r13, r23, v0, kappa, mu_v,
                                       z1, z2, T, ref, max_step, &ang, &fail)
                ref = ang
            ref = row_ang[j]
            for i in range(i0 - 1, -1, -1):
                z1 = R1 + 1j * x1[i, j]
                z2 = R2 + 1j * x2[i, j]
                out[i, j] = _dhsv_node(s1, s2, s3, r12, r13, r23, v0, kappa, mu_v,
                                       z1, z2, T, ref, max_step, &ang, &fail)
                ref = ang
    if fail:
        raise BranchTrackingError(
            "phase step between adjacent mesh nodes exceeds %.3f; "
            "refine the quadrature grid" % max_step)
    return out_arr
