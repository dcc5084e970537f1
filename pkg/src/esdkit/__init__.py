"""Quantum-correlation measures and entanglement sudden death models."""

from .qcore import (
    DensityMatrix,
    Partition,
    PureState,
    SchmidtDecomposition,
    SubsystemLayout,
    enumerate_partitions,
    reduced_state,
    schmidt,
    tensor_product,
    von_neumann_entropy,
)
from .measures import (
    DiscordOptions,
    concurrence_mixed,
    concurrence_pure,
    discord_pure_bipartition,
    discord_two_qubit,
    n_concurrence,
    q_auxiliary,
)
from .geoment import GEOptions, absolute_ge, best_product_overlap, hierarchy, relative_ge
from .dynamics import (
    JCParams,
    WWModel,
    WWParams,
    invariant_sigma,
    jc_evolve_numeric,
    jc_state,
    ww_solve,
)

__version__ = "0.1.0"
