"""Experiment kind -> runner function.  Runners share one signature:

``runner(cfg, out_dir=None) -> (rows, curves)`` where ``rows`` is a list of
flat dicts for results.csv and ``curves`` maps names to ``(header, columns)``
pairs for curves/<name>.csv.  Only the dataset generator writes files itself.
"""

from .convergence import run_convergence
from .prediction import run_prediction
from .recdirect import run_recdirect
from .simulate import run_simulate
from .stability import run_stability
from .timing import run_timing

EXPERIMENTS = {
    "convergence": run_convergence,
    "predict": run_prediction,
    "stability": run_stability,
    "timing": run_timing,
    "recdirect": run_recdirect,
    "simulate-ks": run_simulate,
}
