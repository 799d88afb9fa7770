"""fourval: Fourier-inversion valuation of European-style options.

Damped payoff transforms against closed-form model moment generating
functions, integrated as Lebesgue integrals, symmetric-cap pointwise limits,
or cube-capped L^2 limits depending on payoff regularity and the law of the
driving process; Fourier-space delta and gamma; Monte-Carlo oracle for
validation.
"""

from .errors import (AccuracyError, BranchTrackingError, ConfigError,
                     FourvalError, InfeasibleError, NumericalError,
                     ParameterError, StripError)
from .kernels import BACKEND
from .models import (DHSVParams, LevyTriplet, ModelSpec, MomentStrip,
                     NigParams, fix_drift, model_from_dict, model_from_json)
from .mc_oracle import McConfig, McEstimate, cdf_mc, price_mc, simulate_terminal
from .payoffs import (PayoffSpec, PayoffTransform, decay_estimate,
                      default_damping, payoff_eval, select_damping, transform)
from .pricer import (PriceRequest, PriceResult, check_conditions, delta,
                     digital_value_midpoint_check, gamma, price, price_min_two,
                     price_strike_grid)
from .quadrature import (CapResult, QuadConfig, integrate_capped,
                         integrate_cube_capped, integrate_line,
                         integrate_plane, pinsky_cap_scan,
                         pinsky_spherical_demo)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BACKEND", "BranchTrackingError", "CapResult",
    "ConfigError", "DHSVParams", "FourvalError", "InfeasibleError",
    "LevyTriplet", "McConfig", "McEstimate", "ModelSpec", "MomentStrip",
    "NigParams", "NumericalError", "ParameterError", "PayoffSpec",
    "PayoffTransform", "PriceRequest", "PriceResult", "QuadConfig",
    "StripError", "cdf_mc", "check_conditions", "decay_estimate",
    "default_damping", "delta", "digital_value_midpoint_check", "fix_drift",
    "gamma", "integrate_capped", "integrate_cube_capped", "integrate_line",
    "integrate_plane", "model_from_dict", "model_from_json", "payoff_eval",
    "pinsky_cap_scan", "pinsky_spherical_demo", "price", "price_mc",
    "price_min_two", "price_strike_grid", "select_damping",
    "simulate_terminal", "transform",
]
