"""Long-range XY spin-chain quench simulator with entanglement diagnostics.

Simulates quenches of product states under H = sum_{m<n} J_mn (X_m X_n +
Y_m Y_n) with power-law couplings J_mn = J0 / |m - n|^alpha on an open
chain, exploiting excitation-number conservation throughout, and measures
how quantum information delocalizes: Von Neumann entropies of arbitrary
site subsets, mutual information, and the tripartite mutual information
across subsystem partitionings, including exhaustive partition scans and
the closed-form single-excitation diagnostics.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .entropy import (EntropyTablePlan, SchmidtSpectrum, SiteSubset,
                      SubsetEntropyTable, monogamy_gap, mutual_information,
                      subset_entropy_table, subsystem_spectrum, tmi,
                      von_neumann)
from .errors import (CapacityError, ConfigError, ConvergenceError,
                     NumericalConsistencyError, SpinChainError)
from .model import (CouplingMatrix, ModelSpec, SectorBasis, SectorHamiltonian,
                    StateVector, apply_hamiltonian, coupling_matrix,
                    enumerate_sector, neel_state, sector_dimension,
                    single_excitation_state, total_excitation_mask_weight)
from .onebody import (OccupationWeights, binary_entropy, occupation_weights,
                      onebody_tmi_scan, simplex_scan, tmi_binary)
from .partitions import (PartitionSet, PartitionTriple, TmiSeries,
                         contiguous_quarters, enumerate_partitions,
                         lightcone_onset, minmax_tmi, tau_sign_change)
from .propagate import (TimeGrid, Trajectory, evolve, evolve_dense,
                        evolve_krylov, onebody_amplitudes, onebody_propagator)

__all__ = [
    "__version__",
    "CapacityError", "ConfigError", "ConvergenceError",
    "NumericalConsistencyError", "SpinChainError",
    "CouplingMatrix", "ModelSpec", "SectorBasis", "SectorHamiltonian",
    "StateVector", "apply_hamiltonian", "coupling_matrix", "enumerate_sector",
    "neel_state", "sector_dimension", "single_excitation_state",
    "total_excitation_mask_weight",
    "TimeGrid", "Trajectory", "evolve", "evolve_dense", "evolve_krylov",
    "onebody_propagator", "onebody_amplitudes",
    "EntropyTablePlan", "SchmidtSpectrum", "SiteSubset", "SubsetEntropyTable",
    "monogamy_gap", "mutual_information", "subset_entropy_table",
    "subsystem_spectrum", "tmi", "von_neumann",
    "OccupationWeights", "binary_entropy", "occupation_weights",
    "onebody_tmi_scan", "simplex_scan", "tmi_binary",
    "PartitionSet", "PartitionTriple", "TmiSeries", "contiguous_quarters",
    "enumerate_partitions", "lightcone_onset", "minmax_tmi", "tau_sign_change",
    "RunConfig", "load_config",
]
