"""Checkers for the axioms and their consequences."""

from optheory.axioms.causality import check_causality, check_no_signalling, joint_table
from optheory.axioms.cloning import no_cloning_check
from optheory.axioms.entanglement import entanglement_existence, is_entangled_pure, maximally_entangled
from optheory.axioms.purification import (
    check_purification_uniqueness,
    classical_dilation_search,
    dilate_channel,
    purify_state,
)
from optheory.axioms.purity import (
    check_purity_preservation,
    extreme_transformations,
    is_pure_state,
    is_pure_transformation,
)
from optheory.axioms.report import (
    CERTIFIED,
    FAILS,
    HOLDS,
    IMPOSSIBLE,
    CheckReport,
    CloningVerdict,
    Dilation,
    EntanglementVerdict,
    InfeasibilityCertificate,
    PurificationResult,
    PurityVerdict,
)

__all__ = [
    "CERTIFIED",
    "FAILS",
    "HOLDS",
    "IMPOSSIBLE",
    "CheckReport",
    "CloningVerdict",
    "Dilation",
    "EntanglementVerdict",
    "InfeasibilityCertificate",
    "PurificationResult",
    "PurityVerdict",
    "check_causality",
    "check_no_signalling",
    "check_purification_uniqueness",
    "check_purity_preservation",
    "classical_dilation_search",
    "dilate_channel",
    "entanglement_existence",
    "extreme_transformations",
    "is_entangled_pure",
    "is_pure_state",
    "is_pure_transformation",
    "joint_table",
    "maximally_entangled",
    "no_cloning_check",
    "purify_state",
]
