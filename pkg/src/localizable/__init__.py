"""Localizability of bipartite measurements under non-adaptive local operations."""
from .bipartite import (
    DoubleKet,
    MeasurementBasis,
    Povm,
    RankOnePovm,
    ValidationError,
    contract_triple,
    partial_trace,
    refine_povm,
    schmidt_rank,
    validate_measurement_basis,
)
from .error_basis import (
    LatinSquare,
    UnitaryErrorBasis,
    check_lu_equivalent_to_nice,
    check_nice,
    gen_pauli,
    gen_weyl_heisenberg,
    random_me_basis,
    random_ueb,
    validate_ueb,
)
from .ideal import (
    BlockBasisSpec,
    IdealProtocol,
    Instrument,
    build_block_basis,
    build_ideal_protocol,
    simulate_block_protocol,
    simulate_ideal,
)
from .localizability import (
    Localization,
    NotLocalizableError,
    OutOfHypothesisError,
    PatternFunction,
    Reason,
    Verdict,
    classify_equal_resource,
    compress_resource,
    construct_localization,
    outcome_bound,
    triple_product_closure,
    verify_localization,
)
from .numeric import DEFAULT_TOL, Tolerance, proportional_up_to_scalar
from .two_qubit import TwoQubitClass, TwoQubitTag, canonicalize_product_basis, classify_two_qubit
