"""Arboreal extensions of finite posets with few jumps."""

from .characterization import (
    PartitionCertificate,
    certificate_to_extension,
    extension_to_certificate,
    induced_relation,
    solve_by_components,
    verify_certificate,
)
from .errors import (
    ArborealError,
    CycleError,
    FormatError,
    InfeasibleAssignment,
    InvalidCertificate,
    MalformedCertificate,
    TooLargeError,
    UnreachableError,
    UnrootedError,
)
from .exact import SolveResult, Status, brute_force_oracle, solve_exact_bb
from .extension import (
    ArborealExtension,
    greedy_heuristic_algo2,
    jumps_of,
    minimal_extension_algo1,
    numpred,
    verify_minimality,
)
from .flowmodel import MipModel, build_flow_model, decode_solution, export_lp
from .poset import (
    CoveringGraph,
    Poset,
    add_root,
    incomparable_pairs,
    induced_subposet,
    is_arboreal,
    levels,
    poset_from_labeled_pairs,
    poset_from_relations,
    transitive_reduction,
    violations,
)
from .sop import instance_stats, instance_to_poset, load_poset, parse_sop

__version__ = "0.1.0"
