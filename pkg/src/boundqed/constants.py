"""Physical constants and unit conversions.

Internally everything is in relativistic units (hbar = c = m_e = 1): energies
in m_e, lengths in 1/m_e. Human-facing energies are in eV.
"""

ALPHA = 1.0 / 137.035999
M_E_EV = 510998.95

# Bumped whenever a constant above changes so cached spectra are invalidated.
CONSTANTS_VERSION = "2"


def to_ev(energy):
    return energy * M_E_EV


def coulomb_radius(Z):
    """Reduced Coulomb radius 1/(Z alpha m_e) in relativistic units."""
    return 1.0 / (Z * ALPHA)
