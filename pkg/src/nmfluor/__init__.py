"""Non-Markovian resonance fluorescence of a two-level atom by virtual density matrices."""

from .core import EXCITED, GROUND, flatten, left_super, right_super, u0_propagator, unflatten
from .ensemble import (EvolutionOperator, VirtualEnsemble, apply_lowering,
                       build_evolution_operator, initial_ensemble, label_decode,
                       label_encode, project, propagate, step)
from .kernels import (BandgapKernel, CavityKernel, FlatKernel, KernelSamples,
                      bandgap_kernel, born_markov_rate, cavity_kernel, moment_weights,
                      sample_kernel, trapezoid_weights)
from .observables import (CorrelationTrace, NotConverged, Spectrum, correlation_function,
                          detect_steady_state, excited_population, expectation,
                          run_to_steady_state, spectrum)

__version__ = "0.1.0"

__all__ = [
    "EXCITED", "GROUND", "flatten", "unflatten", "left_super", "right_super", "u0_propagator",
    "EvolutionOperator", "VirtualEnsemble", "apply_lowering", "build_evolution_operator",
    "initial_ensemble", "label_decode", "label_encode", "project", "propagate", "step",
    "BandgapKernel", "CavityKernel", "FlatKernel", "KernelSamples", "bandgap_kernel",
    "born_markov_rate", "cavity_kernel", "moment_weights", "sample_kernel", "trapezoid_weights",
    "CorrelationTrace", "NotConverged", "Spectrum", "correlation_function",
    "detect_steady_state", "excited_population", "expectation", "run_to_steady_state",
    "spectrum",
]
