"""Continuous-variable photonic quantum simulator on truncated Fock spaces."""

__version__ = "0.1.0"

from .errors import (ConfigError, ContractError, GridDomainError, HermiteRangeWarning,
                     LeakageWarning, QuadratureError, TrainingFailure,
                     ZeroProbabilityError)
from .fock import (PositionGrid, QumodeState, coherent_state, fidelity, ground_state,
                   hermite_fn, position_density)
from .gates import (Beamsplitter, ControlX, ControlZ, Displace, Rotate, Squeeze,
                    apply_gate, gate_matrix, leakage)
from .measurement import MeasurementRecord, homodyne, pnr_postselect
from .evolver import (EvolverSpec, Potential, build_evolver_ket, evolver_coefficients,
                      h1_eval, reconstruct_wavefunction)
from .trotter import (EvolutionTrace, TrotterConfig, evolve, trotter_step_circuit,
                      trotter_step_direct)
from .oracles import (FockHamiltonian, exact_evolution, grid_schrodinger,
                      kl_divergence, l2_density_error)
from .trainer import (PrepCircuitConfig, SPSASettings, TrainHistory, clements_pairs,
                      parameter_count, run_prep_circuit, train)
from .lattice import (LatticeConfig, lattice_h1, qft_evolve, qft_trotter_step)

__all__ = [
    "__version__",
    "ConfigError", "ContractError", "GridDomainError", "HermiteRangeWarning",
    "LeakageWarning", "QuadratureError", "TrainingFailure", "ZeroProbabilityError",
    "PositionGrid", "QumodeState", "coherent_state", "fidelity", "ground_state",
    "hermite_fn", "position_density",
    "Beamsplitter", "ControlX", "ControlZ", "Displace", "Rotate", "Squeeze",
    "apply_gate", "gate_matrix", "leakage",
    "MeasurementRecord", "homodyne", "pnr_postselect",
    "EvolverSpec", "Potential", "build_evolver_ket", "evolver_coefficients",
    "h1_eval", "reconstruct_wavefunction",
    "EvolutionTrace", "TrotterConfig", "evolve", "trotter_step_circuit",
    "trotter_step_direct",
    "FockHamiltonian", "exact_evolution", "grid_schrodinger", "kl_divergence",
    "l2_density_error",
    "PrepCircuitConfig", "SPSASettings", "TrainHistory", "clements_pairs",
    "parameter_count", "run_prep_circuit", "train",
    "LatticeConfig", "lattice_h1", "qft_evolve", "qft_trotter_step",
]
