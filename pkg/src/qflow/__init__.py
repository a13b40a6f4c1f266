"""Finite-difference solver for compressible nematic liquid-crystal flow (Q-tensor model)."""

from .diagnostics import (DiagnosticsRecord, apriori_bounds_check, record,
                          steady_state_check, theta_exponent)
from .driver import (SimConfig, load_config, load_snapshot, make_initial, save_snapshot,
                     simulate, steady, sweep)
from .dynamics import ENERGY_CONSISTENT, Discretization, State, apply_bc, assemble
from .energetics import Params, dissipation, molecular_field, total_energy
from .errors import (ConfigInvalid, FormatError, IoError, NonFinite, NonpositiveDensity,
                     NumericalFailure, QFlowError, SteadyStateTimeout)
from .grid import Grid
from .integrator import StepControl, advance, run, stable_dt, step

__version__ = "0.1.0"
