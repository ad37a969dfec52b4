"""Numerical commutants of tensor-word unitary symmetries.

>>> from tensorcommutant import parse_word, commutant_basis
>>> commutant_basis(parse_word("U,U,U^H", {"U": 2}), seed=7).dim
2
"""

__version__ = "0.1.0"

from .closed_forms import (
    FamilySpec,
    OperatorLibrary,
    PsdRegion,
    build_library,
    family_matrix,
    library_for_word,
    m_tensor_m,
    named_operator,
    normalize_state,
    omega_projector,
    permutation_operator,
    psd_region,
    swap_operator,
)
from .commutant import (
    CommutantBasis,
    RecognitionReport,
    algebra_closure,
    block_partition,
    check_block_structure,
    check_invariance,
    commutant_basis,
    recognize_basis,
    verify_block_structure,
)
from .matrix_core import (
    RankPolicy,
    Spectrum,
    apply_modifier,
    hermitian_eig,
    hs_inner,
    joint_nullspace,
    kron,
    matmul,
    matrix_from_json,
    matrix_to_json,
)
from .symmetry import (
    SymmetryWord,
    instantiate_word,
    parse_word,
    sample_haar_orthogonal,
    sample_haar_unitary,
    structured_generators,
    unitary_2x2,
)
from .twirl import TwirlResult, convergence_report, exact_project, mc_twirl
