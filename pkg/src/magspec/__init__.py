"""Magnetic Schrodinger operators: classical orbits, Weyl densities and the
degenerate-zone correction term."""

from .errors import (
    AccuracyError,
    DegeneracyError,
    DomainError,
    MagspecError,
    NumericalFailure,
    UsageError,
)
from .model import EffectiveModel, action, drift_increment_I, find_kstar, period_T
from .fields import MetricTensor, ScalarField, TwoForm, VectorPotential, canonical_field, magnetic_line
from .dynamics import (
    MagneticSystem,
    PhasePoint,
    guiding_center_error_scan,
    integrate_trajectory,
    simulate_model,
)
from .weyl import WeylParams, landau_density_2d, magnetic_weyl_density
from .correction import AuxOperator1D, bohr_sommerfeld_count, correction_term, fd_eigencount, g_function

__version__ = "0.1.0"
