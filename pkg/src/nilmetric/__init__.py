"""nilmetric: homogeneous distances and dilations on nilpotent Lie groups.

The library works in exponential coordinates of the first kind: a simply
connected nilpotent group is identified with its Lie algebra, products
are truncated Baker-Campbell-Hausdorff series (exact at finite step),
and one-parameter dilation groups are matrix exponentials of
derivations.  On top of that it decides when dilation-homogeneous
left-invariant distances exist, constructs their unit balls by a
recursive layered construction, evaluates the distances numerically in
batches, and splits dilating automorphisms into a compact part times a
real-spectrum one-parameter part.
"""

from .algebra import (
    CheckResult,
    LieAlgebra,
    abelian,
    algebra_from_json,
    algebra_to_json,
    check_automorphism,
    check_derivation,
    engel,
    heisenberg,
    induced_on_quotient,
    is_ideal,
    quotient,
    rototranslation,
)
from .catalog import CATALOG, catalog_entry, validate_catalog
from .decompose import (
    DilationDecomposition,
    RealifyResult,
    add_compact_part,
    decompose_automorphism,
    realify,
)
from .grading import (
    ExistenceVerdict,
    Grading,
    Layer,
    classify_automorphism,
    classify_derivation,
    grading_from_automorphism,
    grading_from_derivation,
    hausdorff_dimension,
    split_derivation,
)
from .group import GroupOps, bch_coefficients, bch_product, dilate, inverse
from .metric import (
    AlgebraView,
    BuildParams,
    BuildRejected,
    DilationAction,
    HomogeneousDistance,
    LayeredBall,
    NormBall,
    NumericFailure,
    PolyBall,
    averaged_distance,
    ball_from_json,
    ball_to_json,
    bilipschitz_constants,
    box_ball,
    box_ball_certificate,
    build_ball,
    build_distance,
    compact_closure_samples,
    dilate_ball,
    find_chi_constant,
    sphere_polyline,
    sup_distance,
    tuned_norm,
    verify_A_convexity,
    verify_axioms,
)
from .spectral import (
    EigenCluster,
    SpectralData,
    SpectralError,
    generalized_eigenspaces,
    lambda_pow,
    lambda_pow_exact,
    log_unipotent,
    spectral_map,
)

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "LieAlgebra",
    "abelian",
    "algebra_from_json",
    "algebra_to_json",
    "check_automorphism",
    "check_derivation",
    "engel",
    "heisenberg",
    "induced_on_quotient",
    "is_ideal",
    "quotient",
    "rototranslation",
    "CATALOG",
    "catalog_entry",
    "validate_catalog",
    "DilationDecomposition",
    "RealifyResult",
    "add_compact_part",
    "decompose_automorphism",
    "realify",
    "ExistenceVerdict",
    "Grading",
    "Layer",
    "classify_automorphism",
    "classify_derivation",
    "grading_from_automorphism",
    "grading_from_derivation",
    "hausdorff_dimension",
    "split_derivation",
    "GroupOps",
    "bch_coefficients",
    "bch_product",
    "dilate",
    "inverse",
    "AlgebraView",
    "BuildParams",
    "BuildRejected",
    "DilationAction",
    "HomogeneousDistance",
    "LayeredBall",
    "NormBall",
    "NumericFailure",
    "PolyBall",
    "averaged_distance",
    "ball_from_json",
    "ball_to_json",
    "bilipschitz_constants",
    "box_ball",
    "box_ball_certificate",
    "build_ball",
    "build_distance",
    "compact_closure_samples",
    "dilate_ball",
    "find_chi_constant",
    "sphere_polyline",
    "sup_distance",
    "tuned_norm",
    "verify_A_convexity",
    "verify_axioms",
    "EigenCluster",
    "SpectralData",
    "SpectralError",
    "generalized_eigenspaces",
    "lambda_pow",
    "lambda_pow_exact",
    "log_unipotent",
    "spectral_map",
]
