"""Selberg and Ruelle zeta functions, heat theta series and regularized determinants
for rank-one locally symmetric models, evaluated from length spectra and eigenvalue data."""

__version__ = "0.1.0"

from .errors import GeozetaError
from .heat import (EigenvalueSpectrum, PlancherelModel, det_prime, l2_heat_trace, l2_torsion,
                   novikov_shubin_estimate, resolvent_bridge_check, spectral_zeta, theta_geometric,
                   torsion, torsion_ratio_assembly)
from .lie import (GroupDatum, ShiftEntry, alternating_binomial, casimir_principal_series, formal_degree,
                  get_datum, load_catalog, restricted_root_pattern)
from .spectrum import LengthSpectrum, load_spectrum, synth_spectrum, write_spectrum
from .zeta import (log_ruelle, log_selberg, log_selberg_derivative, opposite_parabolic_check,
                   zero_free_region_check)

__all__ = [
    "GeozetaError", "EigenvalueSpectrum", "PlancherelModel", "GroupDatum", "ShiftEntry", "LengthSpectrum",
    "alternating_binomial", "casimir_principal_series", "formal_degree", "get_datum", "load_catalog",
    "restricted_root_pattern", "load_spectrum", "synth_spectrum", "write_spectrum",
    "log_selberg", "log_selberg_derivative", "log_ruelle", "opposite_parabolic_check", "zero_free_region_check",
    "theta_geometric", "resolvent_bridge_check", "spectral_zeta", "det_prime", "torsion", "l2_heat_trace",
    "novikov_shubin_estimate", "l2_torsion", "torsion_ratio_assembly",
]
