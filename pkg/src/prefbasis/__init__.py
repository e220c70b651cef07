"""Numerical toolkit for the preferred-basis problem in quantum measurement.

Bipartite Schmidt forms and their non-uniqueness, three-party expansions and
their uniqueness, recoil measurement models (Stern-Gerlach, polarizing beam
splitter) and environment-induced dephasing.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .tensor import (  # noqa: F401
    DenseOperator,
    DensityMatrix,
    Observable,
    PureState,
    apply_unitary,
    eig_hermitian,
    matricize,
    partial_trace,
    svd,
    tensor_product,
)
from .decomposition import (  # noqa: F401
    ScanResult,
    SchmidtDecomposition,
    TriDecomposition,
    conditional_vector,
    degenerate_alternatives,
    find_tridecomposition,
    is_product,
    scan_product_conditioning,
    schmidt,
    verify_uniqueness,
)
from .measurement import (  # noqa: F401
    GaussianWavepacket,
    MeasurementModel,
    SGParams,
    build_premeasurement,
    build_three_dof,
    gaussian_overlap,
    momentum_boost,
    simulate_pbs,
    simulate_stern_gerlach,
)
from .decoherence import (  # noqa: F401
    DecoherenceReport,
    EnvironmentModel,
    build_env_coupling,
    decoherence_factor,
    demo_einselection_pathology,
    demo_pointer_superposition,
    evolve,
)
