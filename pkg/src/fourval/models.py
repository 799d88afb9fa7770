"""Driving processes: closed-form extended moment generating functions,
martingale drift fixing, moment strips and decay bounds.

Every supported model exposes M_{X_T}(z) for complex z with Re(z) inside the
moment strip, where X is the log-price increment (X_0 = 0).  All evaluations
are pure functions of (params, z, T).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from ._kernels_np import dhsv_exponent_from_log, dhsv_terms
from .errors import InfeasibleError, ParameterError, StripError

KIND_BROWNIAN = "Brownian1d"
KIND_CP = "CompoundPoissonDrift1d"
KIND_NIG1D = "NIG1d"
KIND_NIG2D = "NIG2d"
KIND_DHSV = "DHSV2d"
KIND_GENERIC = "GenericLevy"

_EXP_OVERFLOW = 700.0


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevyTriplet:
    """Levy triplet (b, c, jumps) with truncation function h(x) = x.

    ``jumps`` is a finite list of (jump vector, intensity) pairs describing a
    compound-Poisson jump measure.  All supported jump measures have finite
    exponential moments, which is what makes h(x) = x admissible.
    """

    b: np.ndarray
    c: np.ndarray
    jumps: tuple

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if c.shape != (b.size, b.size):
            raise ParameterError(f"diffusion matrix shape {c.shape} does not match drift size {b.size}")
        if not np.allclose(c, c.T, atol=1e-12):
            raise ParameterError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(c).min() < -1e-12:
            raise ParameterError("diffusion matrix must be positive semi-definite")
        jumps = []
        for x, lam in self.jumps:
            x = np.atleast_1d(np.asarray(x, dtype=float))
            if x.size != b.size:
                raise ParameterError("jump vector dimension mismatch")
            if lam < 0:
                raise ParameterError("jump intensities must be nonnegative")
            jumps.append((x, float(lam)))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dimension(self) -> int:
        return self.b.size

    def cumulant(self, z) -> np.ndarray:
        """kappa(z) = <b,z> + 1/2 <z,cz> + sum_j lam_j (e^{<z,x_j>} - 1 - <z,x_j>).

        ``z`` has shape (..., d); bilinear (non-Hermitian) products throughout.
        M_{H_T}(z) = exp(T * kappa(z)).
        """
        z = np.asarray(z, dtype=complex)
        if self.dimension == 1 and (z.ndim == 0 or z.shape[-1:] != (1,)):
            z = z[..., None]
        out = z @ self.b + 0.5 * np.einsum("...i,ij,...j->...", z, self.c, z)
        for x, lam in self.jumps:
            s = z @ x
            out = out + lam * (np.exp(s) - 1.0 - s)
        return out

    def drift_uncompensated(self) -> np.ndarray:
        """Drift of the path representation H_t = b~ t + sum of raw jumps."""
        bt = self.b.copy()
        for x, lam in self.jumps:
            bt -= lam * x
        return bt


@dataclass(frozen=True)
class NigParams:
    """Multivariate (d = 1 or 2) normal inverse Gaussian parameters.

    For d = 2 this is the (alpha, beta, delta, mu, Delta) parameterization
    with det(Delta) = 1; d = 1 is the same formula with scalar Delta = 1.
    """

    alpha: float
    beta: np.ndarray
    delta: float
    mu: np.ndarray
    Delta: np.ndarray

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        Delta = np.atleast_2d(np.asarray(self.Delta, dtype=float))
        if self.alpha <= 0 or self.delta <= 0:
            raise ParameterError("alpha and delta must be positive")
        d = beta.size
        if mu.size != d or Delta.shape != (d, d):
            raise ParameterError("inconsistent NIG parameter dimensions")
        if not np.allclose(Delta, Delta.T, atol=1e-12):
            raise ParameterError("Delta must be symmetric")
        if np.linalg.eigvalsh(Delta).min() <= 0:
            raise ParameterError("Delta must be positive definite")
        if abs(np.linalg.det(Delta) - 1.0) > 1e-12:
            raise ParameterError("det(Delta) must equal 1")
        if self.alpha ** 2 <= float(beta @ Delta @ beta):
            raise ParameterError("alpha^2 must exceed <beta, Delta beta>")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Delta", Delta)

    @property
    def dimension(self) -> int:
        return self.beta.size

    def quad(self, v) -> np.ndarray:
        v = np.asarray(v)
        return np.einsum("...i,ij,...j->...", v, self.Delta, v)

    @property
    def gamma0(self) -> float:
        """alpha^2 - <beta, Delta beta> (squared steepness at the center)."""
        return self.alpha ** 2 - float(self.quad(self.beta))

    def strip_slack(self, R) -> float:
        R = np.atleast_1d(np.asarray(R, dtype=float))
        return self.alpha ** 2 - float(self.quad(self.beta + R))

    def log_mgf(self, z) -> np.ndarray:
        """Time-1 log MGF at complex z of shape (..., d), principal square
        roots, bilinear complex products.  The real part of z must stay in
        the moment strip ({R : <beta+R, Delta(beta+R)> <= alpha^2})."""
        z = np.asarray(z, dtype=complex)
        if self.dimension == 1 and (z.ndim == 0 or z.shape[-1:] != (1,)):
            z = z[..., None]
        slack = self.alpha ** 2 - self.quad(self.beta + z.real)
        if np.min(slack) < 0.0:
            raise StripError(
                "Re(z) outside the NIG moment strip "
                "(alpha^2 < <beta+R, Delta (beta+R)>)")
        root = np.sqrt(self.alpha ** 2 - self.quad(self.beta + z))
        return z @ self.mu + self.delta * (math.sqrt(self.gamma0) - root)

    def covariance(self) -> np.ndarray:
        g = self.gamma0
        if g <= 0:
            raise StripError("covariance requires alpha^2 > <beta, Delta beta>")
        Db = self.Delta @ self.beta
        return self.delta * g ** -0.5 * (self.Delta + np.outer(Db, Db) / g)

    def amplitude_bound(self, R, u_norm) -> float:
        """Upper bound for |M_H(R + iu)| at |u| = u_norm (time-1 MGF)."""
        R = np.atleast_1d(np.asarray(R, dtype=float))
        if self.strip_slack(R) < 0:
            raise StripError("R outside the NIG moment strip")
        lam_min = np.linalg.eigvalsh(self.Delta).min()
        expo = (float(R @ self.mu) + self.delta * math.sqrt(self.gamma0)
                - self.delta * math.sqrt(lam_min) * u_norm)
        return math.exp(expo)

    def marginal(self, i: int) -> "NigParams":
        """Univariate NIG law of component i (marginals of a multivariate
        NIG are again NIG)."""
        dii = self.Delta[i, i]
        Db_i = (self.Delta @ self.beta)[i]
        beta1 = Db_i / dii
        alpha1 = math.sqrt(self.gamma0 / dii + beta1 ** 2)
        delta1 = self.delta * math.sqrt(dii)
        return NigParams(alpha1, np.array([beta1]), delta1,
                         np.array([self.mu[i]]), np.array([[1.0]]))


@dataclass(frozen=True)
class DHSVParams:
    """Two-asset Heston-type stochastic volatility model with one
    square-root variance factor (closed-form joint MGF)."""

    sigma1: float
    sigma2: float
    sigma3: float
    rho12: float
    rho13: float
    rho23: float
    v0: float
    kappa: float
    mu_v: float
    H0: np.ndarray

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "sigma3", "v0", "kappa", "mu_v"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("rho12", "rho13", "rho23"):
            if abs(getattr(self, name)) > 1:
                raise ParameterError(f"{name} must lie in [-1, 1]")
        if np.linalg.eigvalsh(self.correlation()).min() < -1e-12:
            raise ParameterError("correlation matrix must be positive semi-definite")
        object.__setattr__(self, "H0", np.atleast_1d(np.asarray(self.H0, dtype=float)))
        if self.H0.size != 2:
            raise ParameterError("H0 must be a 2-vector")

    def correlation(self) -> np.ndarray:
        return np.array([
            [1.0, self.rho12, self.rho13],
            [self.rho12, 1.0, self.rho23],
            [self.rho13, self.rho23, 1.0],
        ])

    def log_mgf_h(self, z, T, tracker=None) -> np.ndarray:
        """log M_{H_T}(z) including the <z, H0> term, for z of shape (..., 2).

        Scalar z may carry a :class:`DhsvBranchContext` so that successive
        evaluations along one quadrature path keep a continuous log branch.
        """
        z = np.asarray(z, dtype=complex)
        z1, z2 = z[..., 0], z[..., 1]
        zeta, gamma, theta = _dhsv_terms(self, z1, z2)
        em = -np.expm1(-theta * T)
        D = 2.0 * theta - (theta - gamma) * em
        w = D / (2.0 * theta)
        if tracker is not None:
            log_w = tracker.log(w)
        else:
            log_w = np.log(np.asarray(w, dtype=complex))
        expo = dhsv_exponent_from_log(zeta, gamma, theta, log_w,
                                      self.v0, self.kappa, self.mu_v,
                                      self.sigma3, T)
        return z1 * self.H0[0] + z2 * self.H0[1] + expo


def _dhsv_terms(p: DHSVParams, z1, z2):
    return dhsv_terms(p.sigma1, p.sigma2, p.sigma3,
                      p.rho12, p.rho13, p.rho23, p.kappa, z1, z2)


class DhsvBranchContext:
    """Continuous-branch state for sequential scalar MGF evaluations along a
    single quadrature path.  Owned by one caller at a time; not shareable."""

    def __init__(self, max_step: float = 2.6):
        self.max_step = max_step
        self._prev = None

    def log(self, w):
        w = complex(w)
        ang = np.angle(w)
        if self._prev is not None:
            ang += 2.0 * np.pi * round((self._prev - ang) / (2.0 * np.pi))
            if abs(ang - self._prev) > self.max_step:
                from .errors import BranchTrackingError
                raise BranchTrackingError(
                    "phase step %.3f rad between consecutive evaluations "
                    "exceeds %.3f" % (abs(ang - self._prev), self.max_step))
        self._prev = ang
        return math.log(abs(w)) + 1j * ang


# ---------------------------------------------------------------------------
# moment strip
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentStrip:
    """The set {R in R^d : M_{X_T}(R) < infinity} as a membership predicate
    plus, in low dimension, an explicit region description."""

    dimension: int
    predicate: Callable[[np.ndarray], bool]
    margin: Callable[[np.ndarray], float]
    description: str

    def contains(self, R) -> bool:
        return bool(self.predicate(np.atleast_1d(np.asarray(R, dtype=float))))

    def interior_margin(self, R) -> float:
        """Positive inside the open strip, <= 0 on or beyond the boundary.
        The scale is strip-specific; only the sign is portable."""
        return float(self.margin(np.atleast_1d(np.asarray(R, dtype=float))))


# ---------------------------------------------------------------------------
# model specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """A driving process: kind tag, parameter record, dimension, and whether
    the law of X_T is atomless (pure compound-Poisson-plus-drift is not)."""

    kind: str
    params: object
    dimension: int
    atomless: bool
    closed_form_mgf: bool = True

    # -- constructors -------------------------------------------------------

    @staticmethod
    def brownian(c: float, b: float = 0.0) -> "ModelSpec":
        trip = LevyTriplet(np.array([b]), np.array([[c]]), ())
        return ModelSpec(KIND_BROWNIAN, trip, 1, atomless=c > 0)

    @staticmethod
    def compound_poisson(jumps: Sequence, b: float = 0.0) -> "ModelSpec":
        trip = LevyTriplet(np.array([b]), np.array([[0.0]]),
                           tuple((np.array([x]), lam) for x, lam in jumps))
        return ModelSpec(KIND_CP, trip, 1, atomless=False)

    @staticmethod
    def generic_levy(triplet: LevyTriplet) -> "ModelSpec":
        atomless = np.linalg.eigvalsh(triplet.c).max() > 0
        return ModelSpec(KIND_GENERIC, triplet, triplet.dimension, atomless)

    @staticmethod
    def nig1d(alpha, beta, delta, mu=0.0) -> "ModelSpec":
        p = NigParams(alpha, np.array([beta]), delta, np.array([mu]), np.array([[1.0]]))
        return ModelSpec(KIND_NIG1D, p, 1, atomless=True)

    @staticmethod
    def nig2d(alpha, beta, delta, Delta, mu=(0.0, 0.0)) -> "ModelSpec":
        p = NigParams(alpha, np.asarray(beta, float), delta,
                      np.asarray(mu, float), np.asarray(Delta, float))
        return ModelSpec(KIND_NIG2D, p, 2, atomless=True)

    @staticmethod
    def dhsv(sigma1, sigma2, sigma3, rho12, rho13, rho23, v0, kappa, mu_v,
             H0=(0.0, 0.0)) -> "ModelSpec":
        p = DHSVParams(sigma1, sigma2, sigma3, rho12, rho13, rho23,
                       v0, kappa, mu_v, np.asarray(H0, float))
        return ModelSpec(KIND_DHSV, p, 2, atomless=True)

    # -- MGF evaluation ------------------------------------------------------

    def log_mgf(self, z, T: float):
        """log M_{X_T}(z).  X is the increment of the log-price from 0; for
        the SV model the initial log-prices are factored out."""
        if self.kind in (KIND_BROWNIAN, KIND_CP, KIND_GENERIC):
            return T * self.params.cumulant(z)
        if self.kind in (KIND_NIG1D, KIND_NIG2D):
            return T * self.params.log_mgf(z)
        if self.kind == KIND_DHSV:
            z = np.asarray(z, dtype=complex)
            h0 = self.params.H0
            return self.params.log_mgf_h(z, T) - (z[..., 0] * h0[0] + z[..., 1] * h0[1])
        raise ParameterError(f"unknown model kind {self.kind!r}")

    def mgf(self, z, T: float):
        return np.exp(self.log_mgf(z, T))

    def mgf_line(self, R: np.ndarray, u: np.ndarray, T: float):
        """M_{X_T}(R + iu) on a 1d path of nodes u (d=1) with continuous
        branch handling where the model needs it."""
        if self.dimension != 1:
            raise ParameterError("mgf_line applies to one-dimensional models")
        z = np.asarray(R, float).reshape(()) + 1j * np.asarray(u, float)
        return self.mgf(z, T)

    def mgf_mesh(self, R: np.ndarray, u1: np.ndarray, u2: np.ndarray, T: float):
        """M_{X_T}(R + iu) on a structured mesh (d=2 models).

        ``u1``/``u2`` are either axis vectors (tensor grid) or matching 2d
        coordinate arrays (e.g. a sheared grid).  Dispatches to the compiled
        kernels when available; membership of R in the moment strip is the
        caller's responsibility on this hot path.
        """
        if self.dimension != 2:
            raise ParameterError("mgf_mesh applies to two-dimensional models")
        R = np.asarray(R, dtype=float)
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        if u1.ndim == 1:
            u1, u2 = np.broadcast_arrays(u1[:, None], u2[None, :])
        u1 = np.ascontiguousarray(u1)
        u2 = np.ascontiguousarray(u2)
        if self.kind == KIND_NIG2D:
            p = self.params
            return kernels.nig2d_mgf_mesh(
                p.alpha, p.beta[0], p.beta[1], p.delta, p.mu[0], p.mu[1],
                p.Delta[0, 0], p.Delta[0, 1], p.Delta[1, 1],
                R[0], R[1], u1, u2, T)
        if self.kind == KIND_DHSV:
            p = self.params
            return kernels.dhsv_mgf_mesh(
                p.sigma1, p.sigma2, p.sigma3, p.rho12, p.rho13, p.rho23,
                p.v0, p.kappa, p.mu_v, R[0], R[1], u1, u2, T)
        z = np.empty(u1.shape + (2,), dtype=complex)
        z[..., 0] = R[0] + 1j * u1
        z[..., 1] = R[1] + 1j * u2
        return self.mgf(z, T)

    # -- strips, drift, bounds ----------------------------------------------

    def moment_strip(self, T: float = 1.0) -> MomentStrip:
        if self.kind in (KIND_BROWNIAN, KIND_CP, KIND_GENERIC):
            return MomentStrip(self.dimension, lambda R: True, lambda R: np.inf,
                               "all of R^d (finite exponential moments everywhere)")
        if self.kind in (KIND_NIG1D, KIND_NIG2D):
            p = self.params
            return MomentStrip(
                self.dimension,
                lambda R: p.strip_slack(R) >= 0.0,
                lambda R: p.strip_slack(R),
                "{R : <beta+R, Delta (beta+R)> <= alpha^2}")
        if self.kind == KIND_DHSV:
            return MomentStrip(
                2,
                lambda R: _dhsv_strip_ok(self.params, R, T),
                lambda R: 1.0 if _dhsv_strip_ok(self.params, R, T) else -1.0,
                "checked by attempted evaluation with branch tracking "
                "(conservative; no closed form)")
        raise ParameterError(f"unknown model kind {self.kind!r}")

    def phase_rate(self, R: np.ndarray, T: float) -> np.ndarray:
        """Per-axis bound on |d/du_i Im log M(R + iu)| — the model's
        contribution to the oscillation rate of pricing integrands."""
        R = np.atleast_1d(np.asarray(R, dtype=float))
        if self.kind in (KIND_BROWNIAN, KIND_CP, KIND_GENERIC):
            trip = self.params
            rate = np.abs(trip.b + trip.c @ R)
            for x, lam in trip.jumps:
                rate = rate + lam * np.abs(x) * math.exp(float(x @ R))
            return T * rate
        if self.kind in (KIND_NIG1D, KIND_NIG2D):
            p = self.params
            return T * (np.abs(p.mu) + p.delta * np.sqrt(np.diag(p.Delta)))
        if self.kind == KIND_DHSV:
            return T * _dhsv_phase_rate(self, R, T)
        raise ParameterError(f"unknown model kind {self.kind!r}")

    def amplitude_bound(self, R: np.ndarray, T: float) -> Optional[Callable[[float], float]]:
        """|M_{X_T}(R+iu)| <= bound(|u|), or None when the model has no decay
        certificate (pure compound Poisson)."""
        R = np.atleast_1d(np.asarray(R, dtype=float))
        if self.kind in (KIND_NIG1D, KIND_NIG2D):
            p = self.params
            lam_min = np.linalg.eigvalsh(p.Delta).min()
            m0 = T * (float(R @ p.mu) + p.delta * math.sqrt(p.gamma0))
            a = T * p.delta * math.sqrt(lam_min)
            return lambda r: math.exp(min(m0 - a * r, _EXP_OVERFLOW))
        if self.kind in (KIND_BROWNIAN, KIND_GENERIC, KIND_CP):
            trip = self.params
            c_min = np.linalg.eigvalsh(trip.c).min()
            kR = float(np.real(trip.cumulant(R.astype(complex))))
            if c_min <= 0:
                return None
            return lambda r: math.exp(min(T * (kR - 0.5 * c_min * r * r), _EXP_OVERFLOW))
        if self.kind == KIND_DHSV:
            return _dhsv_amplitude_fit(self, R, T)
        raise ParameterError(f"unknown model kind {self.kind!r}")


def _dhsv_strip_ok(p: DHSVParams, R, T: float) -> bool:
    R = np.atleast_1d(np.asarray(R, dtype=float))
    zeta, gamma, theta = _dhsv_terms(p, complex(R[0]), complex(R[1]))
    t = np.linspace(T / 256.0, T, 256)
    em = -np.expm1(-theta * t)
    D = 2.0 * theta - (theta - gamma) * em
    scale = abs(theta) + abs(gamma) + 1e-30
    if np.min(np.abs(D)) / scale < 1e-6:
        return False
    try:
        expo = p.log_mgf_h(np.array([complex(R[0]), complex(R[1])]), T)
    except Exception:
        return False
    return bool(np.isfinite(expo.real) and expo.real < _EXP_OVERFLOW)


def _dhsv_phase_rate(model: "ModelSpec", R, T: float) -> np.ndarray:
    """Sampled bound on the phase rate of log M along each axis."""
    p = model.params
    rate = np.zeros(2)
    h = 0.25
    for axis in range(2):
        for r in (2.0, 8.0, 32.0, 128.0):
            u = np.zeros(2)
            u[axis] = r
            za = np.array([R[0] + 1j * u[0], R[1] + 1j * u[1]])
            zb = za.copy()
            zb[axis] += 1j * h
            va = model.log_mgf(za, T)
            vb = model.log_mgf(zb, T)
            rate[axis] = max(rate[axis], abs((vb.imag - va.imag)) / h / max(T, 1e-12))
    return 1.5 * rate + 1e-3


def _dhsv_amplitude_fit(model: "ModelSpec", R, T: float) -> Optional[Callable[[float], float]]:
    """Conservative exponential envelope fitted from samples along the axes
    and the diagonals (no closed-form decay estimate exists)."""
    dirs = [(1.0, 0.0), (0.0, 1.0), (0.7071, 0.7071), (0.7071, -0.7071)]
    radii = (20.0, 40.0, 80.0)
    m0 = 0.0
    a_best = math.inf
    for dx, dy in dirs:
        vals = []
        for r in radii:
            z = np.array([R[0] + 1j * dx * r, R[1] + 1j * dy * r])
            vals.append(float(np.real(model.log_mgf(z, T))))
        m0 = max(m0, vals[0] + (vals[0] - vals[1]) * radii[0] / (radii[1] - radii[0]))
        a = (vals[-2] - vals[-1]) / (radii[-1] - radii[-2])
        if a <= 0:
            return None
        a_best = min(a_best, a)
    a_safe = 0.8 * a_best
    c0 = m0 + a_safe * 0.0 + 1.0
    return lambda r: math.exp(min(c0 - a_safe * r, _EXP_OVERFLOW))


# ---------------------------------------------------------------------------
# martingale drift fixing
# ---------------------------------------------------------------------------

def fix_drift(model: ModelSpec, r: float = 0.0, q: float = 0.0) -> ModelSpec:
    """Adjust the free drift so that E[e^{X_T^i}] = e^{(r-q)T} per component.

    The SV model is a martingale by construction and has no free drift.
    """
    target = r - q
    if model.kind in (KIND_BROWNIAN, KIND_CP, KIND_GENERIC):
        trip = model.params
        d = trip.dimension
        b_new = np.empty(d)
        for i in range(d):
            e_i = np.zeros(d)
            e_i[i] = 1.0
            k_no_drift = float(np.real(trip.cumulant(e_i.astype(complex)))) - trip.b[i]
            b_new[i] = target - k_no_drift
        new_trip = LevyTriplet(b_new, trip.c, trip.jumps)
        return replace(model, params=new_trip)
    if model.kind in (KIND_NIG1D, KIND_NIG2D):
        p = model.params
        d = p.dimension
        mu_new = np.empty(d)
        for i in range(d):
            e_i = np.zeros(d)
            e_i[i] = 1.0
            slack = p.strip_slack(e_i)
            if slack < 0:
                raise InfeasibleError(
                    "component %d has no exponential moment: "
                    "alpha^2 < <beta+e_i, Delta (beta+e_i)>" % i)
            mu_new[i] = target - p.delta * (math.sqrt(p.gamma0) - math.sqrt(slack))
        new_p = NigParams(p.alpha, p.beta, p.delta, mu_new, p.Delta)
        return replace(model, params=new_p)
    if model.kind == KIND_DHSV:
        if abs(target) > 0:
            raise InfeasibleError(
                "the SV model is a martingale by construction and has no free "
                "drift to absorb r - q != 0")
        return model
    raise ParameterError(f"unknown model kind {model.kind!r}")


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def model_from_dict(doc: dict, r: float = 0.0, q: float = 0.0) -> ModelSpec:
    """Build a model from its JSON document.  A missing drift parameter is
    fixed automatically from the martingale condition."""
    doc = dict(doc)
    kind = doc.pop("kind", None)
    if kind is None:
        raise ParameterError("model document lacks a 'kind' field")
    try:
        if kind == KIND_BROWNIAN:
            has_drift = "b" in doc
            m = ModelSpec.brownian(float(doc["c"]), float(doc.get("b", 0.0)))
        elif kind == KIND_CP:
            has_drift = "b" in doc
            m = ModelSpec.compound_poisson([(float(x), float(lam)) for x, lam in doc["jumps"]],
                                           float(doc.get("b", 0.0)))
        elif kind == KIND_GENERIC:
            has_drift = "b" in doc
            d = np.atleast_2d(np.asarray(doc["c"], float)).shape[0]
            trip = LevyTriplet(np.asarray(doc.get("b", np.zeros(d)), float),
                               np.asarray(doc["c"], float),
                               tuple((np.asarray(x, float), float(lam))
                                     for x, lam in doc.get("jumps", ())))
            m = ModelSpec.generic_levy(trip)
        elif kind == KIND_NIG1D:
            has_drift = "mu" in doc
            m = ModelSpec.nig1d(float(doc["alpha"]), float(doc["beta"]),
                                float(doc["delta"]), float(doc.get("mu", 0.0)))
        elif kind == KIND_NIG2D:
            has_drift = "mu" in doc
            m = ModelSpec.nig2d(float(doc["alpha"]), doc["beta"], float(doc["delta"]),
                                doc["Delta"], doc.get("mu", (0.0, 0.0)))
        elif kind == KIND_DHSV:
            has_drift = True
            m = ModelSpec.dhsv(float(doc["sigma1"]), float(doc["sigma2"]), float(doc["sigma3"]),
                               float(doc["rho12"]), float(doc["rho13"]), float(doc["rho23"]),
                               float(doc["v0"]), float(doc["kappa"]), float(doc["mu_v"]),
                               doc.get("H0", (0.0, 0.0)))
        else:
            raise ParameterError(f"unknown model kind {kind!r}")
    except KeyError as exc:
        raise ParameterError(f"model document for {kind} lacks field {exc}") from exc
    if not has_drift:
        m = fix_drift(m, r, q)
    return m


def model_from_json(path, r: float = 0.0, q: float = 0.0) -> ModelSpec:
    with open(path) as fh:
        return model_from_dict(json.load(fh), r, q)
