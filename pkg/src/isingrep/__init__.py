"""Simulation and exact verification of the Ising model's graphical representations.

Builders for finite lattices, GF(2) even-subgraph algebra, coupled samplers
for the random-cluster / loop O(1) / random-current measures, brute-force
enumeration oracles, torus wrap-around analysis and Monte Carlo estimators
with batch-means error bars.
"""

from ._jit import NUMBA_ENABLED
from .lattice import (
    BoundaryCondition,
    EdgeSubset,
    Hyperplane,
    LatticeError,
    MultiGraph,
    build_box,
    build_cut_lattice,
    build_hexagonal_patch,
    build_hexagonal_torus,
    build_slab_sheet,
    build_torus,
    cycle_graph,
    edge_subset_by_coords,
    hyperplane,
    path_graph,
    quotient,
)
from .evens import (
    CycleBasis,
    EdgeConfig,
    SourceSet,
    count_even_log2,
    cycle_basis,
    is_even,
    marginal_ueg_exact,
    sample_ueg,
    sample_uog,
    sample_wired_ueg,
    source_map,
)
from .models import (
    Current,
    ModelParams,
    OracleSizeError,
    SpinConfig,
    convert,
    dual_parameter,
    interfaces,
    planar_dual,
    sample_bernoulli,
    sample_current,
    sample_double_current,
    sample_ising,
    sample_loop,
    sample_rc_exact,
    sample_rc_exact_coupled,
    sample_rc_sw,
    weight_current,
    weight_ising,
    weight_loop,
    weight_rc,
)
from .oracle import (
    Distribution,
    bernoulli_distribution,
    connectivity,
    correlation,
    current_truncated,
    enumerate_interfaces,
    enumerate_ising,
    enumerate_loop,
    enumerate_rc,
    enumerate_ueg,
    pushforward_ueg,
    pushforward_union,
    tv_distance,
)
from .topology import (
    WindingReport,
    classify_components,
    count_disjoint_wraparounds,
    crossing_parity,
    group_orbit_stats,
    xor_action,
)
from .estimators import EdgeEvent, EstimateRow, SamplerSpec, clusters, estimate, mixing_gap

__version__ = "0.1.0"
