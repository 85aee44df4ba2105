"""Long-range percolation on Z with 1/r^2 edge law: samplers, FK chains, oriented
reachability and a multi-scale block renormalisation with Monte Carlo checks."""
from .config import Configuration, sample_configuration
from .errors import LrpercError
from .params import ModelParams, ScaleParams
from .renorm import run_renormalization

__all__ = ["Configuration", "LrpercError", "ModelParams", "ScaleParams",
           "run_renormalization", "sample_configuration"]
__version__ = "0.1.0"
