"""Sample-based Schrodinger bridges from a learned transformed potential.

The potential ``g`` is fitted by minimising the empirical fixed-point residual
``log g - log C[g]`` on source and target samples; bridge samples are then
drawn with an Euler-Maruyama scheme whose drift comes from ``g``.
"""

from .core import BACKEND
from .data import PointCloud
from .errors import (ConfigError, ConvergenceError, NumericError, ParseError, TrainingAbort,
                     UsageError)
from .kernels import KernelParams, ScheduleKind, SdeSchedule
from .operator import ClipBounds, RiskConfig, empirical_C, empirical_risk
from .potential import GaussianEnvelope, HermitePotential, MlpPotential, param_gradient
from .sampler import DriftContext, drift, euler_maruyama, sample_bridge
from .train import TrainConfig, train

__version__ = "0.1.0"
