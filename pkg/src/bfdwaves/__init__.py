"""Spectral lab for Boussinesq/Full-dispersion internal-wave systems.

Modules:

* :mod:`bfdwaves.params`: modelling and abcd coefficients, well-posedness classes
* :mod:`bfdwaves.spectral`: periodic grid, transforms, Fourier multipliers
* :mod:`bfdwaves.theory`: speed conditions, speed limit, linear dispersion
* :mod:`bfdwaves.solitary`: solitary-wave profiles (Petviashvili + MPE)
* :mod:`bfdwaves.integrator`: composition time stepping and discrete invariants
* :mod:`bfdwaves.experiments`: propagation, collision, resolution and convergence runs
"""
from .params import AbcdSystem, ModelingParameters, classify, reduced_parameters
from .spectral import PeriodicGrid, SymbolSet, WaveState
from .solitary import ProfileSolveConfig, SolitaryWave, solve_profile
from .integrator import EvolveConfig, discrete_energy, discrete_momentum, evolve
from .theory import c_gamma, dispersion

__version__ = "0.1.0"

__all__ = [
    "AbcdSystem", "ModelingParameters", "classify", "reduced_parameters",
    "PeriodicGrid", "SymbolSet", "WaveState",
    "ProfileSolveConfig", "SolitaryWave", "solve_profile",
    "EvolveConfig", "discrete_energy", "discrete_momentum", "evolve",
    "c_gamma", "dispersion",
]
