"""Graph-structured trajectory extraction from travelogues.

The package models visiting order graphs (geographic inclusion plus
temporal transition relations over visited locations), predicts visit
status and graph relations with pluggable scorers and rule systems,
evaluates predictions with pair F1 and agreement measures, and
generates seeded synthetic corpora for benchmarking.
"""

from .corpus import (
    CorpusSplit,
    CorpusStats,
    Document,
    GraphAnnotation,
    SchemaError,
    corpus_stats,
    document_graph,
    document_nodes,
    load_corpus,
    parse_corpus,
    parse_document,
    save_corpus,
    serialize_corpus,
    serialize_document,
    split_corpus,
)
from .evaluation import (
    AgreementReport,
    PairF1Report,
    cohens_kappa,
    evaluate_irp,
    evaluate_trp,
    iaa_f1,
    measure_agreement,
    pair_f1,
)
from .graph import (
    OrderRelation,
    Violation,
    ViolationCode,
    ViolationError,
    VisitingOrderGraph,
    build_graph,
    depth,
    order_relation,
    split_multi_visit,
    validate,
)
from .model import (
    EOS,
    ROOT,
    Entity,
    EntityLabel,
    Mention,
    MentionLabel,
    Sentence,
    VisitNode,
    parse_node_ref,
)
from .synth import (
    DEFAULT_PLACE_LEVELS,
    GeneratedCorpus,
    HeuristicParentScorer,
    OracleScorer,
    SynthConfig,
    generate_corpus,
    heuristic_parent_scorer,
    oracle_scorer,
)
from .vop import (
    RelationKind,
    decode_transitions,
    first_mention,
    flat_baseline,
    irp_candidates,
    naive_score_decode,
    occorder,
    occorder_transitions,
    predict_parents,
    random_order_baseline,
    random_parent_baseline,
    random_transitions,
    representative_mention,
    sequence_sort_decode,
    trp_candidates,
)
from .vsp import (
    ClassificationReport,
    MajorityScorer,
    VspPrediction,
    aggregate_mla,
    entity_label_histogram,
    evaluate_vsp,
    majority_baseline,
    majority_label,
    mention_label_histogram,
    predict_entity_labels,
    predict_mention_labels,
    predict_vsp,
)

__version__ = "0.1.0"
