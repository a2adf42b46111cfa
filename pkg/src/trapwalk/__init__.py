"""Discrete-time random walk with random trapping times.

A walker at site z waits T steps (T drawn afresh from a trapping law p at
each arrival) and then jumps to z +/- 1.  The package computes the exact
mean squared displacement, the exact laws of the renewal count and of the
position, Monte Carlo ensembles, effective power-law exponents and
empirical limit-theorem diagnostics.
"""

from .distributions import (Custom, Deterministic, Exponential, PowerLawZeta,
                            TrappingDistribution, TruncatedPowerLaw, load_custom_csv,
                            parse_spec)
from .errors import (ConfigError, DomainError, FitDiverged, HorizonTooLarge, InfiniteMean,
                     ParseError, TrapwalkError, ValidationError, WindowError, ZeroEscape)
from .exact_law import (CountDistribution, PositionDistribution, brute_force_distribution,
                        count_distribution, position_distribution, position_table)
from .limit_diagnostics import clt_check, concentration_check, heavy_tail_scaling_check
from .montecarlo import (EnsembleStats, Trajectory, ensemble_msd, ensemble_samples,
                         simulate_walker, trajectory_violations)
from .msd_engine import (BoundEnvelope, MsdSeries, linear_bounds, msd_series,
                         renewal_mass)
from ._rng import RandomStream
from .scaling_fit import (ExponentFit, SigmoidFit, beta_sweep, powerlaw_fit, sigmoid_fit,
                          slow_variation_profile)
from .zeta import hurwitz_zeta, zeta

__version__ = "0.1.0"
