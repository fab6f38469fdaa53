"""Belief-function fusion over power sets and hyper-power sets.

The toolkit builds propositions from a frame of discernment with meets and
joins, validates mass functions over a constraint model, combines sources
with conflict-redistributing rules (conjunctive, mixed, hybrid, and the
proportional-conflict-redistribution family), scores the fused results with
credibility / plausibility / pignistic functionals, and runs reproducible
fusion experiments with divergence and accuracy reporting.
"""

from .errors import FusionError, ParseError, ValidationError
from .frame import (
    ConstraintModel,
    Frame,
    LatticeElement,
    atom,
    bottom,
    dsm_cardinality,
    enumerate_dsm_lattice,
    format_element,
    free_model,
    hybrid_model,
    is_empty_under,
    join,
    make_frame,
    meet,
    parse_element,
    parse_model_spec,
    shafer_model,
    top,
    union_decomposition,
)
from .bba import (
    MassFunction,
    auto_conflict,
    format_bba_blocks,
    make_bba,
    parse_bba_blocks,
    total_conflict,
    vacuous,
)
from .rules import (
    RuleSpec,
    combine,
    combine_all,
    combine_conjunctive,
    combine_dsmh,
    combine_dubois_prade,
    combine_pcr5,
    combine_pcr6,
    combine_pcrf,
    combine_pcrg,
    parse_rule_list,
    parse_rule_spec,
)
from .decision import (
    DecisionPolicy,
    credibility,
    decide,
    parse_policy,
    pignistic,
    plausibility,
)
from .expertmodels import (
    AnnotationEntry,
    CertaintyWeights,
    ClassifierCalibrator,
    TileAnnotation,
    exclusive_frame,
    model_m3,
    model_m4,
    model_m5,
    model_m5_generalized,
)
from .harness import (
    ExperimentConfig,
    FusionReport,
    SyntheticSpec,
    accuracy_with_ci,
    divergence_matrix,
    generate_synthetic_panel,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "FusionError", "ParseError", "ValidationError",
    "Frame", "LatticeElement", "ConstraintModel",
    "make_frame", "atom", "top", "bottom", "meet", "join",
    "enumerate_dsm_lattice", "union_decomposition", "is_empty_under",
    "dsm_cardinality", "free_model", "shafer_model", "hybrid_model",
    "parse_model_spec", "parse_element", "format_element",
    "MassFunction", "make_bba", "vacuous", "total_conflict", "auto_conflict",
    "parse_bba_blocks", "format_bba_blocks",
    "RuleSpec", "parse_rule_spec", "parse_rule_list", "combine", "combine_all",
    "combine_conjunctive", "combine_dubois_prade", "combine_dsmh",
    "combine_pcr5", "combine_pcr6", "combine_pcrf", "combine_pcrg",
    "DecisionPolicy", "parse_policy", "credibility", "plausibility",
    "pignistic", "decide",
    "CertaintyWeights", "AnnotationEntry", "TileAnnotation", "exclusive_frame",
    "model_m3", "model_m4", "model_m5", "model_m5_generalized",
    "ClassifierCalibrator",
    "SyntheticSpec", "ExperimentConfig", "FusionReport",
    "generate_synthetic_panel", "divergence_matrix", "accuracy_with_ci",
    "run_experiment",
    "__version__",
]
