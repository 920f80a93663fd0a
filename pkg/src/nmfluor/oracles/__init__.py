"""Independent reference solvers used to validate the virtual ensemble."""

from .decay import DecayAmplitude, decay_amplitude, single_excitation_sector
from .discrete_modes import KernelFitError, discrete_mode_oracle, fit_mode_comb
from .lindblad import (FockCutoffError, LindbladSystem, lindblad_baseline,
                       markov_two_level)

__all__ = [
    "DecayAmplitude", "decay_amplitude", "single_excitation_sector",
    "KernelFitError", "discrete_mode_oracle", "fit_mode_comb",
    "FockCutoffError", "LindbladSystem", "lindblad_baseline", "markov_two_level",
]
