"""Independent Monte-Carlo valuation used for acceptance testing.

Terminal laws are simulated exactly wherever the model admits it (Gaussian,
compound Poisson, NIG via inverse-Gaussian subordination); only the SV model
needs a full-truncation Euler scheme.  Path generation is partitioned into
blocks with per-block seeding so estimates are reproducible bit-for-bit for a
fixed (model, config, seed) and the reduction order is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError
from .models import (KIND_BROWNIAN, KIND_CP, KIND_DHSV, KIND_GENERIC,
                     KIND_NIG1D, KIND_NIG2D, ModelSpec)
from .payoffs import PayoffSpec, payoff_eval

_BLOCK = 125_000


@dataclass(frozen=True)
class McConfig:
    paths: int = 1_000_000
    steps: int = 500          # Euler schemes only
    seed: int = 20260801
    antithetic: bool = True

    def __post_init__(self):
        if self.paths < 10_000:
            raise ParameterError("need at least 1e4 paths for CI validity")
        if self.steps < 1:
            raise ParameterError("steps must be positive")


@dataclass
class McEstimate:
    mean: float
    std_error: float
    ci95: tuple

    @staticmethod
    def from_moments(total: float, total_sq: float, n: int) -> "McEstimate":
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0)
        se = math.sqrt(var / n)
        return McEstimate(mean, se, (mean - 1.96 * se, mean + 1.96 * se))


def _block_plan(cfg: McConfig):
    """(block sizes, per-block seed sequences); sizes are even so antithetic
    pairs never straddle a block."""
    n = cfg.paths if cfg.paths % 2 == 0 else cfg.paths + 1
    sizes = []
    left = n
    while left > 0:
        take = min(_BLOCK, left)
        sizes.append(take)
        left -= take
    children = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    return sizes, children


def _pair(z: np.ndarray) -> np.ndarray:
    return np.concatenate((z, -z), axis=0)


def _draw_levy_block(model: ModelSpec, T: float, size: int, rng, antithetic: bool):
    trip = model.params
    d = trip.dimension
    half = size // 2 if antithetic else size
    chol = None
    if np.linalg.eigvalsh(trip.c).max() > 0:
        chol = np.linalg.cholesky(trip.c * T + 1e-300 * np.eye(d))
    out = np.tile(trip.drift_uncompensated() * T, (size, 1))
    if chol is not None:
        z = rng.standard_normal((half, d))
        if antithetic:
            z = _pair(z)
        out += z @ chol.T
    for x, lam in trip.jumps:
        counts = rng.poisson(lam * T, size=size)
        out += counts[:, None] * x[None, :]
    return out


def _draw_nig_block(model: ModelSpec, T: float, size: int, rng, antithetic: bool):
    p = model.params
    d = p.dimension
    gam = math.sqrt(p.gamma0)
    # inverse-Gaussian subordinator: mean dT/gam, shape (dT)^2
    ig = rng.wald(p.delta * T / gam, (p.delta * T) ** 2, size=size)
    half = size // 2 if antithetic else size
    z = rng.standard_normal((half, d))
    if antithetic:
        z = _pair(z)
    chol = np.linalg.cholesky(p.Delta)
    drift_part = ig[:, None] * (p.Delta @ p.beta)[None, :]
    return p.mu * T + drift_part + np.sqrt(ig)[:, None] * (z @ chol.T)


def _euler_dhsv_block(model: ModelSpec, maturities: Sequence[float], size: int,
                      rng, antithetic: bool, steps: int):
    """Full-truncation Euler on (H1, H2, v); v+ enters drift and diffusion.
    Returns {T: (size, 2) array of X_T} with X starting at 0."""
    p = model.params
    t_max = max(maturities)
    knots = sorted(set(float(t) for t in maturities))
    chol = np.linalg.cholesky(p.correlation() + 1e-14 * np.eye(3))
    half = size // 2 if antithetic else size
    h = np.zeros((size, 2))
    v = np.full(size, p.v0)
    out = {}
    t = 0.0
    for knot in knots:
        n_seg = max(1, int(round(steps * (knot - t) / t_max)))
        dt = (knot - t) / n_seg
        sq_dt = math.sqrt(dt)
        for _ in range(n_seg):
            z = rng.standard_normal((half, 3))
            if antithetic:
                z = _pair(z)
            z = z @ chol.T
            vp = np.maximum(v, 0.0)
            sq_v = np.sqrt(vp)
            h[:, 0] += -0.5 * p.sigma1 ** 2 * vp * dt + p.sigma1 * sq_v * sq_dt * z[:, 0]
            h[:, 1] += -0.5 * p.sigma2 ** 2 * vp * dt + p.sigma2 * sq_v * sq_dt * z[:, 1]
            v = v + p.kappa * (p.mu_v - vp) * dt + p.sigma3 * sq_v * sq_dt * z[:, 2]
        t = knot
        out[knot] = h.copy()
    return out


def simulate_terminal_multi(model: ModelSpec, maturities: Sequence[float],
                            cfg: McConfig) -> dict:
    """{T: (paths, d) array of X_T draws}.  Exact per maturity for the Levy
    and NIG kinds; one checkpointed Euler sweep for the SV model."""
    maturities = [float(t) for t in maturities]
    sizes, children = _block_plan(cfg)
    if model.kind == KIND_DHSV:
        chunks = {t: [] for t in maturities}
        for size, child in zip(sizes, children):
            rng = np.random.Generator(np.random.Philox(child))
            block = _euler_dhsv_block(model, maturities, size, rng,
                                      cfg.antithetic, cfg.steps)
            for t in maturities:
                chunks[t].append(block[t])
        return {t: np.concatenate(chunks[t], axis=0)[:cfg.paths] for t in maturities}
    out = {}
    for ti, t in enumerate(maturities):
        chunks = []
        for size, child in zip(sizes, children):
            rng = np.random.Generator(np.random.Philox(child.spawn(len(maturities))[ti]))
            if model.kind in (KIND_BROWNIAN, KIND_CP, KIND_GENERIC):
                chunks.append(_draw_levy_block(model, t, size, rng, cfg.antithetic))
            elif model.kind in (KIND_NIG1D, KIND_NIG2D):
                chunks.append(_draw_nig_block(model, t, size, rng, cfg.antithetic))
            else:
                raise ParameterError(f"no simulator for model kind {model.kind!r}")
        out[t] = np.concatenate(chunks, axis=0)[:cfg.paths]
    return out


def simulate_terminal(model: ModelSpec, T: float, cfg: McConfig) -> np.ndarray:
    """Terminal draws X_T of shape (paths, d); the drift must already be fixed."""
    return simulate_terminal_multi(model, [T], cfg)[float(T)]


def _pair_estimate(samples: np.ndarray, antithetic: bool) -> McEstimate:
    if antithetic:
        n = samples.size // 2 * 2
        pairs = 0.5 * (samples[:n:2] + samples[1:n:2])
    else:
        pairs = samples
    total = float(pairs.sum())
    total_sq = float((pairs * pairs).sum())
    return McEstimate.from_moments(total, total_sq, pairs.size)


def _interleave_antithetic(draws: np.ndarray) -> np.ndarray:
    """Reorder block-wise [z; -z] stacking into adjacent antithetic pairs."""
    n = draws.shape[0]
    half = n // 2
    out = np.empty_like(draws)
    out[0::2] = draws[:half]
    out[1::2] = draws[half:2 * half]
    return out


def _payoff_samples(model: ModelSpec, payoff: PayoffSpec, spot, T: float,
                    cfg: McConfig) -> np.ndarray:
    spot = np.atleast_1d(np.asarray(spot, dtype=float))
    draws = simulate_terminal(model, T, cfg)
    if cfg.antithetic:
        # draws come blockwise as [z; -z]; blocks are even-sized, so pairing
        # adjacent elements after an in-block interleave is exact
        sizes, _ = _block_plan(cfg)
        pieces = []
        start = 0
        for size in sizes:
            stop = min(start + size, draws.shape[0])
            pieces.append(_interleave_antithetic(draws[start:stop]))
            start = stop
        draws = np.concatenate(pieces, axis=0)
    x = draws + np.log(spot)[None, :]
    if payoff.dimension == 1:
        return payoff_eval(payoff, x[:, 0])
    return payoff_eval(payoff, x)


def price_mc(model: ModelSpec, payoff: PayoffSpec, spot, T: float,
             rate: float = 0.0, cfg: Optional[McConfig] = None) -> McEstimate:
    """Discounted sample-mean price with its standard error (computed from
    antithetic pair means when pairing is on)."""
    cfg = cfg or McConfig()
    vals = math.exp(-rate * T) * _payoff_samples(model, payoff, spot, T, cfg)
    return _pair_estimate(vals, cfg.antithetic)


def cdf_mc(model: ModelSpec, T: float, x: float,
           cfg: Optional[McConfig] = None) -> McEstimate:
    """Empirical P(X_T <= x) for one-dimensional models."""
    cfg = cfg or McConfig()
    if model.dimension != 1:
        raise ParameterError("cdf_mc applies to one-dimensional models")
    draws = simulate_terminal(model, T, cfg)[:, 0]
    ind = (draws <= x).astype(float)
    return _pair_estimate(ind, antithetic=False)
