"""Exact density-matrix simulation and benchmarking of spin-bath reservoirs."""

from .errors import ConfigError, DivergenceError, NumericalError
from .linalg import (
    MAX_QUBITS,
    DensityMatrix,
    HermitianEigen,
    hermitian_eig,
    kron,
    partial_trace,
    propagator,
    pseudoinverse,
    trace_norm,
)
from .hamiltonian import (
    CouplingSet,
    HamiltonianRealization,
    ReservoirParams,
    build_hamiltonian,
    build_propagator,
    embed_pauli,
    export_couplings,
    import_couplings,
    sample_couplings,
)
from .reservoir import (
    FeatureMatrix,
    ObservableSet,
    ReservoirConfig,
    encode_input,
    evolve_step,
    inject_input,
    measure,
    run_trajectory,
)
from .readout import ReadoutWeights, fit_linear, mse, predict, squared_correlation
from .tasks import (
    SplitSpec,
    TaskDataset,
    gen_uniform_inputs,
    narma_series,
    scale_inputs,
    split_dataset,
    stm_targets,
)
from .esp import EspRecord, backflow_count, dual_trajectory, window_stats
from .harness import (
    ExperimentConfig,
    EspRunResult,
    RegimeSpec,
    SweepResult,
    aggregate,
    default_config,
    load_config,
    run_esp,
    run_narma,
    run_stm,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "NumericalError",
    "MAX_QUBITS",
    "DensityMatrix",
    "HermitianEigen",
    "hermitian_eig",
    "kron",
    "partial_trace",
    "propagator",
    "pseudoinverse",
    "trace_norm",
    "CouplingSet",
    "HamiltonianRealization",
    "ReservoirParams",
    "build_hamiltonian",
    "build_propagator",
    "embed_pauli",
    "export_couplings",
    "import_couplings",
    "sample_couplings",
    "FeatureMatrix",
    "ObservableSet",
    "ReservoirConfig",
    "encode_input",
    "evolve_step",
    "inject_input",
    "measure",
    "run_trajectory",
    "ReadoutWeights",
    "fit_linear",
    "mse",
    "predict",
    "squared_correlation",
    "SplitSpec",
    "TaskDataset",
    "gen_uniform_inputs",
    "narma_series",
    "scale_inputs",
    "split_dataset",
    "stm_targets",
    "EspRecord",
    "backflow_count",
    "dual_trajectory",
    "window_stats",
    "ExperimentConfig",
    "EspRunResult",
    "RegimeSpec",
    "SweepResult",
    "aggregate",
    "default_config",
    "load_config",
    "run_esp",
    "run_narma",
    "run_stm",
    "__version__",
]
