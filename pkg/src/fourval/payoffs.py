"""Payoff functions in log-coordinates, their closed-form Fourier transforms
with admissible dampening strips, and the damping selection heuristic.

Each transform is analytic on an open horizontal strip of Im(z); the damping
vector R places the inversion contour inside that strip and must also lie in
the model's moment strip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InfeasibleError, ParameterError
from .models import ModelSpec

CONTINUOUS = "continuous_integrable"     # dampened payoff in L1_bc with L1 transform
DISCONTINUOUS = "discontinuous_L1"       # dampened payoff in L1 only

_INF = math.inf


@dataclass(frozen=True)
class PayoffSpec:
    """A payoff selected by kind tag plus strike/barrier parameters."""

    kind: str
    K: Optional[float] = None
    B: Optional[float] = None
    B_low: Optional[float] = None
    B_high: Optional[float] = None
    d: int = 1
    factors: Optional[tuple] = None

    _REQUIRED = {
        "Call": ("K",), "Put": ("K",), "SelfQuantoCall": ("K",),
        "PowerCall2": ("K",), "MinCall": ("K",), "MaxPut": ("K",),
        "DigitalCall": ("B",), "DigitalPut": ("B",),
        "AssetOrNothingCall": ("B",), "DoubleDigital": ("B_low", "B_high"),
        "Product": ("factors",),
    }

    def __post_init__(self):
        required = self._REQUIRED.get(self.kind)
        if required is None:
            raise ParameterError(f"unknown payoff kind {self.kind!r}")
        for name in required:
            if getattr(self, name) is None:
                raise ParameterError(f"{self.kind} payoff requires {name}")
        for name in ("K", "B", "B_low", "B_high"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.kind == "DoubleDigital" and not (self.B_low < self.B_high):
            raise ParameterError("DoubleDigital requires 0 < B_low < B_high")
        if self.kind in ("MinCall", "MaxPut") and self.d < 1:
            raise ParameterError("basket dimension must be >= 1")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def call(K): return PayoffSpec("Call", K=float(K))

    @staticmethod
    def put(K): return PayoffSpec("Put", K=float(K))

    @staticmethod
    def digital_call(B): return PayoffSpec("DigitalCall", B=float(B))

    @staticmethod
    def digital_put(B): return PayoffSpec("DigitalPut", B=float(B))

    @staticmethod
    def asset_or_nothing_call(B): return PayoffSpec("AssetOrNothingCall", B=float(B))

    @staticmethod
    def double_digital(B_low, B_high):
        return PayoffSpec("DoubleDigital", B_low=float(B_low), B_high=float(B_high))

    @staticmethod
    def self_quanto_call(K): return PayoffSpec("SelfQuantoCall", K=float(K))

    @staticmethod
    def power_call2(K): return PayoffSpec("PowerCall2", K=float(K))

    @staticmethod
    def min_call(K, d=2): return PayoffSpec("MinCall", K=float(K), d=int(d))

    @staticmethod
    def max_put(K, d=2): return PayoffSpec("MaxPut", K=float(K), d=int(d))

    @staticmethod
    def product(factors: Sequence["PayoffSpec"]):
        factors = tuple(factors)
        if not factors:
            raise ParameterError("product payoff needs at least one factor")
        for f in factors:
            if f.dimension != 1:
                raise ParameterError("product factors must be one-dimensional")
        return PayoffSpec("Product", factors=factors)

    @property
    def dimension(self) -> int:
        if self.kind in ("MinCall", "MaxPut"):
            return self.d
        if self.kind == "Product":
            return len(self.factors)
        return 1


@dataclass(frozen=True)
class PayoffTransform:
    """Closed-form Fourier transform f_hat(z), its admissibility strip for
    Im(z), and the regularity class that drives theorem dispatch."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    dimension: int
    axis_intervals: tuple            # per-axis open interval for Im(z_k)
    regularity: str
    sum_gt: Optional[float] = None   # additionally Im(sum z_k) > sum_gt
    nonzero_axes: tuple = ()         # axes where Im(z_k) = 0 is excluded

    def strip_contains(self, R) -> bool:
        R = np.atleast_1d(np.asarray(R, dtype=float))
        if R.size != self.dimension:
            return False
        for i, (lo, hi) in enumerate(self.axis_intervals):
            if not (lo < R[i] < hi):
                return False
        for i in self.nonzero_axes:
            if R[i] == 0.0:
                return False
        if self.sum_gt is not None and not (R.sum() > self.sum_gt):
            return False
        return True

    def strip_description(self) -> str:
        parts = [f"Im z_{i + 1} in ({lo}, {hi})" for i, (lo, hi) in enumerate(self.axis_intervals)]
        for i in self.nonzero_axes:
            parts.append(f"Im z_{i + 1} != 0")
        if self.sum_gt is not None:
            parts.append(f"Im sum z > {self.sum_gt}")
        return ", ".join(parts)


def _pow(base: float, expo) -> np.ndarray:
    # base**expo for positive base and complex exponent arrays
    return np.exp(np.asarray(expo, dtype=complex) * math.log(base))


def transform(spec: PayoffSpec) -> PayoffTransform:
    """Closed-form transform and strip for every supported payoff."""
    kind = spec.kind
    if kind == "Call":
        K = spec.K
        return PayoffTransform(lambda z: _pow(K, 1 + 1j * z) / (1j * z * (1 + 1j * z)),
                               1, ((1.0, _INF),), CONTINUOUS)
    if kind == "Put":
        K = spec.K
        return PayoffTransform(lambda z: _pow(K, 1 + 1j * z) / (1j * z * (1 + 1j * z)),
                               1, ((-_INF, 0.0),), CONTINUOUS)
    if kind == "DigitalCall":
        B = spec.B
        return PayoffTransform(lambda z: -_pow(B, 1j * z) / (1j * z),
                               1, ((0.0, _INF),), DISCONTINUOUS)
    if kind == "DigitalPut":
        B = spec.B
        return PayoffTransform(lambda z: _pow(B, 1j * z) / (1j * z),
                               1, ((-_INF, 0.0),), DISCONTINUOUS)
    if kind == "AssetOrNothingCall":
        B = spec.B
        return PayoffTransform(lambda z: -_pow(B, 1 + 1j * z) / (1 + 1j * z),
                               1, ((1.0, _INF),), DISCONTINUOUS)
    if kind == "DoubleDigital":
        lo, hi = spec.B_low, spec.B_high
        return PayoffTransform(lambda z: (_pow(hi, 1j * z) - _pow(lo, 1j * z)) / (1j * z),
                               1, ((-_INF, _INF),), DISCONTINUOUS, nonzero_axes=(0,))
    if kind == "SelfQuantoCall":
        K = spec.K
        return PayoffTransform(lambda z: _pow(K, 2 + 1j * z) / ((1 + 1j * z) * (2 + 1j * z)),
                               1, ((2.0, _INF),), CONTINUOUS)
    if kind == "PowerCall2":
        K = spec.K
        return PayoffTransform(
            lambda z: -2.0 * _pow(K, 2 + 1j * z) / (1j * z * (1 + 1j * z) * (2 + 1j * z)),
            1, ((2.0, _INF),), CONTINUOUS)
    if kind == "MinCall":
        K, d = spec.K, spec.d
        sign = (-1.0) ** d

        def _min_call(z):
            z = np.asarray(z, dtype=complex)
            s = z.sum(axis=-1)
            denom = sign * (1 + 1j * s) * np.prod(1j * z, axis=-1)
            return -_pow(K, 1 + 1j * s) / denom

        return PayoffTransform(_min_call, d, ((0.0, _INF),) * d, CONTINUOUS, sum_gt=1.0)
    if kind == "MaxPut":
        K, d = spec.K, spec.d

        def _max_put(z):
            z = np.asarray(z, dtype=complex)
            s = z.sum(axis=-1)
            return _pow(K, 1 + 1j * s) / ((1 + 1j * s) * np.prod(1j * z, axis=-1))

        return PayoffTransform(_max_put, d, ((-_INF, 0.0),) * d, CONTINUOUS)
    if kind == "Product":
        parts = [transform(f) for f in spec.factors]

        def _product(z):
            z = np.asarray(z, dtype=complex)
            out = parts[0].evaluate(z[..., 0])
            for i, p in enumerate(parts[1:], start=1):
                out = out * p.evaluate(z[..., i])
            return out

        regularity = CONTINUOUS if all(p.regularity == CONTINUOUS for p in parts) \
            else DISCONTINUOUS
        nonzero = tuple(i for i, p in enumerate(parts) if p.nonzero_axes)
        return PayoffTransform(_product, len(parts),
                               tuple(p.axis_intervals[0] for p in parts),
                               regularity, nonzero_axes=nonzero)
    raise ParameterError(f"unknown payoff kind {kind!r}")


def payoff_eval(spec: PayoffSpec, x) -> np.ndarray:
    """Pointwise payoff in log-coordinates, e.g. Call: (e^x - K)^+.

    ``x`` has shape (..., d) for multi-asset payoffs, any shape for d = 1.
    """
    kind = spec.kind
    x = np.asarray(x, dtype=float)
    if kind == "Call":
        return np.maximum(np.exp(x) - spec.K, 0.0)
    if kind == "Put":
        return np.maximum(spec.K - np.exp(x), 0.0)
    if kind == "DigitalCall":
        return (np.exp(x) > spec.B).astype(float)
    if kind == "DigitalPut":
        return (np.exp(x) < spec.B).astype(float)
    if kind == "AssetOrNothingCall":
        s = np.exp(x)
        return s * (s > spec.B)
    if kind == "DoubleDigital":
        s = np.exp(x)
        return ((s > spec.B_low) & (s < spec.B_high)).astype(float)
    if kind == "SelfQuantoCall":
        s = np.exp(x)
        return s * np.maximum(s - spec.K, 0.0)
    if kind == "PowerCall2":
        return np.maximum(np.exp(x) - spec.K, 0.0) ** 2
    if kind == "MinCall":
        return np.maximum(np.exp(x).min(axis=-1) - spec.K, 0.0)
    if kind == "MaxPut":
        return np.maximum(spec.K - np.exp(x).max(axis=-1), 0.0)
    if kind == "Product":
        out = payoff_eval(spec.factors[0], x[..., 0])
        for i, f in enumerate(spec.factors[1:], start=1):
            out = out * payoff_eval(f, x[..., i])
        return out
    raise ParameterError(f"unknown payoff kind {kind!r}")


def decay_estimate(spec: PayoffSpec, R: float, u_grid) -> float:
    """Least-squares decay exponent p of |f_hat(u + iR)| ~ u^{-p} on a log
    grid (one-dimensional payoffs)."""
    if spec.dimension != 1:
        raise ParameterError("decay_estimate applies to one-dimensional payoffs")
    tf = transform(spec)
    if not tf.strip_contains([R]):
        raise InfeasibleError(f"R={R} not admissible for {spec.kind}: "
                              f"{tf.strip_description()}")
    u = np.asarray(u_grid, dtype=float)
    vals = np.abs(tf.evaluate(u + 1j * R))
    slope, _ = np.polyfit(np.log(u), np.log(vals), 1)
    return -float(slope)


_DEFAULT_DAMPING = {
    "Call": 1.75,
    "Put": -1.0,
    "DigitalCall": 0.5,
    "DigitalPut": -0.5,
    "AssetOrNothingCall": 1.5,
    "DoubleDigital": 0.5,
    "SelfQuantoCall": 2.5,
    "PowerCall2": 2.5,
    "MinCall": 0.75,
    "MaxPut": -1.0,
}


def default_damping(spec: PayoffSpec) -> np.ndarray:
    if spec.kind == "Product":
        return np.array([default_damping(f)[0] for f in spec.factors])
    if spec.kind in ("MinCall", "MaxPut"):
        return np.full(spec.d, _DEFAULT_DAMPING[spec.kind])
    return np.array([_DEFAULT_DAMPING[spec.kind]])


def select_damping(spec: PayoffSpec, model: ModelSpec, T: float = 1.0) -> np.ndarray:
    """Pick R strictly interior to both the payoff strip and the model moment
    strip: the per-kind default when the model strip is unbounded, otherwise
    moved toward the model strip's center until both constraints hold."""
    tf = transform(spec)
    if tf.dimension != model.dimension:
        raise ParameterError("payoff dimension does not match model dimension")
    R0 = default_damping(spec)
    strip = model.moment_strip(T)
    if strip.interior_margin(R0) > 0 and tf.strip_contains(R0):
        return R0

    if model.kind in ("NIG1d", "NIG2d") and model.dimension == 1:
        p = model.params
        m_lo, m_hi = -p.beta[0] - p.alpha, -p.beta[0] + p.alpha
        lo, hi = tf.axis_intervals[0]
        lo, hi = max(lo, m_lo), min(hi, m_hi)
        if lo >= hi:
            raise InfeasibleError(
                f"empty damping strip: payoff needs {tf.strip_description()}, "
                f"model moment strip is [{m_lo:.4g}, {m_hi:.4g}]")
        mid = 0.5 * (lo + hi)
        if 0.0 in getattr(tf, "nonzero_axes", ()) and mid == 0.0:
            mid = 0.5 * hi if hi > 0 else 0.5 * lo
        return np.array([mid])

    # multi-dimensional (or numerically described) strips: scale toward the
    # strip center, keeping the payoff constraints.
    center = -model.params.beta if model.kind == "NIG2d" else np.zeros(model.dimension)
    for t in np.linspace(1.0, 0.0, 201)[:-1]:
        R = center + t * (R0 - center)
        if strip.interior_margin(R) > 0 and tf.strip_contains(R):
            return R
    raise InfeasibleError(
        f"no damping vector found: payoff needs {tf.strip_description()}, "
        f"model strip: {strip.description}")
