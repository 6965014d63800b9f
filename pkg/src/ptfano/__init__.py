"""Stationary states, scattering and lattice dynamics of a side-coupled PT dimer."""

__version__ = "0.1.0"

from .dimer import (AsymmetricMode, Regime, RegimeReport, SymmetricMode, asymmetric_modes,
                    mode_census, symmetric_modes, symmetric_regime)
from .errors import (Blowup, DegenerateEquation, InsideBand, NoConvergence, NotLinear, NotSteady,
                     OutsideBand, PtFanoError)
from .lattice import LatticeConfig, probe_stability, run_scattering_sim
from .model import DimerParams, DimerState, dimer_rhs, stationary_dimer_residual
from .pinned import PinnedMode, decay_factor, effective_params, pinned_asymmetric, pinned_symmetric
from .scattering import (Branch, ScatteringSolution, SolverOpts, eit_branch, fano_family,
                         linear_spectrum, power_sweep, solve_scattering, ultimate_asymmetric)
