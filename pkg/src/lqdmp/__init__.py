"""Optimal steering and sampling-based motion planning for linear-affine
systems with a mixed time/energy cost."""

from .exceptions import (CacheMismatch, DimensionError, DimensionMismatch,
                         ExpOverflow, GramianFailure, LQDMPError,
                         NoConnection, NotControllable, NotPositiveDefinite,
                         OutOfDomain, RejectionStall, RNotSPD, ScenarioError)
from .system import (ControllabilityInfo, LinearAffineSystem,
                     controllability_info, double_integrator, validate)
from .gramian import (GramianAt, gramian, matrix_exponential, spectrum,
                      weighted_norm, zero_input_response)
from .steering import (SteeringResult, Steerer, Trajectory, control_at,
                       cost_fixed_time, fixed_time_steer, optimal_steer,
                       reachable, state_at)

__version__ = '0.1.0'

__all__ = [
    'LQDMPError', 'DimensionMismatch', 'NotControllable', 'RNotSPD',
    'GramianFailure', 'NotPositiveDefinite', 'ExpOverflow', 'NoConnection',
    'OutOfDomain', 'RejectionStall', 'ScenarioError', 'CacheMismatch',
    'DimensionError',
    'LinearAffineSystem', 'ControllabilityInfo', 'validate',
    'controllability_info', 'double_integrator',
    'GramianAt', 'gramian', 'matrix_exponential', 'spectrum',
    'weighted_norm', 'zero_input_response',
    'SteeringResult', 'Steerer', 'Trajectory', 'control_at',
    'cost_fixed_time', 'fixed_time_steer', 'optimal_steer', 'reachable',
    'state_at',
]
