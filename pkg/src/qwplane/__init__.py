"""Biased four-state quantum walk on the square lattice: simulation and formula audit."""
from . import _backend
from .coin import (BiasParams, CoinMode, InitialCoinSpec, StateVariant, build_coin,
                   build_initial_state, split_projectors, unitarity_certificate)
from .evolution import evolve, mean_position, new_localized, probabilities, step

__all__ = [
    "BACKEND",
    "BiasParams",
    "CoinMode",
    "InitialCoinSpec",
    "StateVariant",
    "build_coin",
    "build_initial_state",
    "split_projectors",
    "unitarity_certificate",
    "evolve",
    "mean_position",
    "new_localized",
    "probabilities",
    "step",
]

BACKEND = _backend.name

__version__ = "0.1.0"
