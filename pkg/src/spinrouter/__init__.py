"""Quantum state routing on XX spin networks in the single-excitation sector."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DomainError, LabelError, NumericalError,
                     SpecificationError, SpinRouterError, UnitsError)
from .model import (BarrierRouterSpec, Block, RingRouterSpec, Receiver,
                    SingleExcitationHamiltonian, build_barrier_hamiltonian, build_hamiltonian,
                    build_ring_hamiltonian, validate_parity)
from .spectral import SpectralDecomposition, diagonalize
from .dynamics import (AmplitudeSeries, TransferResult, evolve_amplitude, evolve_amplitude_ode,
                       fidelity_map, find_peak, transfer_probability)
from .routing import RoutingScheme, RoutingTable, Scheme, routing_table

__all__ = [
    "AmplitudeSeries", "BarrierRouterSpec", "Block", "ConfigurationError", "DomainError",
    "LabelError", "NumericalError", "Receiver", "RingRouterSpec", "RoutingScheme",
    "RoutingTable", "Scheme", "SingleExcitationHamiltonian", "SpecificationError",
    "SpectralDecomposition", "SpinRouterError", "TransferResult", "UnitsError",
    "build_barrier_hamiltonian", "build_hamiltonian", "build_ring_hamiltonian", "diagonalize",
    "evolve_amplitude", "evolve_amplitude_ode", "fidelity_map", "find_peak", "routing_table",
    "transfer_probability", "validate_parity",
]
