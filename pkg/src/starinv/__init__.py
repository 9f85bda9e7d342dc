"""starinv: computable invariants of finite-dimensional operator algebras.

Ordered K-theory and Elliott invariants, Cuntz-semigroup presentations with
their sequence completions and equivalence relation, radius of comparison,
and a continuous-logic evaluator with stable/real-rank tests.  Exact
rational arithmetic everywhere except operator norms and the quantifier
optimizer.
"""

from .presentations import (
    BlockElement,
    BratteliDiagram,
    FDAlgebra,
    ParseError,
    Term,
    TAdd,
    TAdj,
    TConst,
    TMul,
    TScale,
    TVar,
    UnboundVariableError,
    ValidationError,
    emit_bratteli,
    emit_fd_algebra,
    eval_term,
    operator_norm,
    parse_bratteli,
    parse_fd_algebra,
)
from .ktheory import (
    AbelianSemigroupTable,
    GroupHom,
    GroupTable,
    GrothendieckResult,
    IsoVerdict,
    MvNSemigroup,
    OrderedGroupWithUnit,
    TRIVIAL_GROUP,
    emit_ordered_group,
    grothendieck,
    k0_connecting_map,
    k1_finite_dimensional,
    mv_semigroup,
    ordered_group_isomorphic,
    ordered_k0,
    parse_ordered_group,
)
from .states_pairing import (
    ElliottInvariant,
    GroupState,
    Polytope,
    UnboundedStateSpaceError,
    elliott_invariant,
    elliott_isomorphic,
    emit_elliott,
    nearest_point,
    pairing,
    state_space,
    trace_simplex,
)
from .cuntz import (
    INF,
    CuPresentation,
    CuSeq,
    CuValidationReport,
    CuVerdict,
    FiniteCuTable,
    MorphismCode,
    NBarPower,
    RadiusResult,
    WCompletion,
    check_morphism_code,
    comparison_holds,
    constant_seq,
    cu_equivalent,
    cu_of_fd_algebra,
    cuseq_add,
    emit_cu,
    eta,
    identity_code,
    parse_cu,
    radius_of_comparison,
    seq_approx,
    seq_le,
    seq_ll,
    validate_cu_presentation,
    w_completion,
)
from .logic import (
    EvalConfig,
    EvalResult,
    Formula,
    RankVerdict,
    TheoryFingerprint,
    evaluate,
    parse_formula,
    real_rank_leq,
    rescale_into_ball,
    stable_rank_leq,
    theory_fingerprint,
    truncation_scale,
)

__version__ = "0.1.0"
