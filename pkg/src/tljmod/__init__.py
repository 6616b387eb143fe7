"""Balanced fair graphs and fundamental solutions for graph-generated
Temperley-Lieb-Jones 2-categories."""
from .classify import (
    DimensionFunction,
    InconsistentCycle,
    IsoWitness,
    check_dimension_function,
    check_iso_witness,
    check_mw_type,
    fair_graph_isomorphic,
    find_inconsistent_cycle,
    graph_from_solution,
    random_solution,
    solution_from_graph,
    solutions_equivalent,
    verify_equivalence_witness,
)
from .diagrams import (
    Diagram,
    ElementarySlice,
    GammaPath,
    Morphism2,
    adjoint,
    compose_horizontal,
    compose_vertical,
    decompose_to_slices,
    identity_diagram,
    make_cap,
    make_cup,
    make_path,
    validate_diagram,
)
from .errors import CompositionError, GammaMismatchError, PreconditionError, TLJError, UnsupportedError
from .fair import (
    BalancedInvolution,
    FairEdge,
    FairGraph,
    FairVertex,
    balance_obstructions,
    check_fair,
    check_involution,
    check_structure,
    fair_graph,
    find_balanced_involution,
    generate_family,
    lambda1,
)
from .graph import BiGraph, Edge, GammaKind, gamma1, gammas_equal, is_connected, standard_gamma, validate_bigraph
from .report import ValidationReport, Violation
from .solution import (
    AntiLinearBlock,
    BlockOperator,
    FundamentalSolution,
    check_zigzag,
    conjugate_solution,
    cups_from_phi,
    evaluate_functor,
    phi_from_cups,
    random_unitary_family,
)

__version__ = "0.1.0"
