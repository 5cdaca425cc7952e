"""B-spline Dirac pseudospectra and partial-wave renormalized self-energies
for the 1s state of hydrogen-like ions."""

from .constants import ALPHA, M_E_EV
from .splinebasis import SplineBasis, build_basis
from .spectrum import DiracBasis, DiracState, SpectrumSet, build_spectrum, sommerfeld_energy
from .selfenergy import (PartialWaveSeries, SelfEnergyEngine, bound_se_partial,
                         free_counterterm_partial, renormalized_se)
from .sese import SeseResult, g_function, sese_irreducible, sign_approximation
from .analysis import FitResult, comparison_table, fit_c, g_reference

__version__ = "0.1.0"
