"""reskit: reservoir computing, recurrent kernels, and structured variants.

The package splits into small layers:

- :mod:`reskit.transforms` -- fast Walsh-Hadamard transform and the
  sign-diagonal structured operator built from it.
- :mod:`reskit.reservoir` -- dense and structured echo-state reservoirs.
- :mod:`reskit.recurrent_kernel` -- deterministic Gram recursions matching
  the wide-reservoir limit.
- :mod:`reskit.learning` -- ridge readouts and closed-loop forecasting.
- :mod:`reskit.ks_data` -- a Kuramoto-Sivashinsky integrator and dataset IO.
- :mod:`reskit.experiments` -- reproducible experiment runners and the
  ``reskit`` command line.
"""

from .errors import (ConditioningError, ConfigError, DimensionError, DivergenceError,
                     FormatError, IntegrationError, KindError, NumericError, ReskitError)
from .ks_data import KSConfig, Dataset, estimate_lyapunov, load_dataset, save_dataset, simulate_ks, windowize
from .learning import (KernelForecaster, ReservoirForecaster, RidgeModel, forecast_closed_loop,
                       forecast_direct, load_model, nmse_curve, predict_step, reservoir_features,
                       ridge_fit, save_model)
from .recurrent_kernel import (RKParams, RKState, add_linear_kernel, build_gram_test,
                               build_gram_train, init_rk_state, kernel_scalar,
                               kind_for_activation, mc_kernel_estimate, rk_update_ri,
                               rk_update_ti)
from .reservoir import (ReservoirParams, ReservoirState, WeightSet, concat_state, init_weights,
                        random_state, run, step, zero_state)
from .rng import make_rng, step_seed
from .transforms import StructuredOperator, fwht, fwht_in_place, materialize, next_pow2, structured_matvec

__version__ = "0.1.0"

__all__ = [
    "ReskitError", "DimensionError", "NumericError", "KindError", "ConditioningError",
    "DivergenceError", "IntegrationError", "FormatError", "ConfigError",
    "make_rng", "step_seed",
    "fwht", "fwht_in_place", "next_pow2", "StructuredOperator", "structured_matvec",
    "materialize",
    "ReservoirParams", "ReservoirState", "WeightSet", "init_weights", "zero_state",
    "random_state", "step", "run", "concat_state",
    "RKParams", "RKState", "init_rk_state", "rk_update_ri", "rk_update_ti",
    "build_gram_train", "build_gram_test", "add_linear_kernel", "kernel_scalar",
    "kind_for_activation", "mc_kernel_estimate",
    "RidgeModel", "ridge_fit", "predict_step", "ReservoirForecaster", "KernelForecaster",
    "forecast_closed_loop", "forecast_direct", "nmse_curve", "reservoir_features",
    "save_model", "load_model",
    "KSConfig", "Dataset", "simulate_ks", "estimate_lyapunov", "windowize",
    "save_dataset", "load_dataset",
    "__version__",
]
