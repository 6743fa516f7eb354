"""Predicting privacy disclosure decisions from social-graph structure and
location-sharing survey answers: feature derivation, binary classifiers,
and an undersampled repeated cross-validation protocol with factor ablation.
"""

from .data import (
    LocationRecord,
    OsnGraph,
    OsnUser,
    RequestRecord,
    StatsReport,
    dataset_stats,
    load_location_records,
    load_osn_graph,
    save_location_records,
    save_osn_graph,
)
from .errors import (
    EmptyDatasetError,
    ModelIntegrityError,
    ModelVersionError,
    ParseError,
    PrivpredError,
    ReferentialIntegrityError,
    SchemaError,
    VocabularyError,
)
from .evaluation import (
    AblationReport,
    AudienceSurveyDataset,
    EvalResult,
    MatrixDataset,
    ablate,
    adapted_cv,
    auc,
    confusion,
    f1_score,
    render_ablation_table,
    render_results_table,
    undersample,
    undersample_indices,
)
from .location_features import (
    ProbabilityTable,
    audience_trustworthiness,
    build_location_features,
    build_probability_table,
    conditional_sharing_probability,
    location_sensitivity,
    overall_sharing_probability,
)
from .loglinear import (
    FactorAggregator,
    FactorScores,
    LoglinearModel,
    aggregate_factors,
    train_loglinear,
)
from .matrix import FeatureMatrix
from .missing import MissingValueFilter, replace_missing
from .model_io import load_model, save_model
from .naive_bayes import NaiveBayesModel, train_naive_bayes
from .osn_features import (
    OverlapFeatures,
    SensitivityTable,
    build_osn_features,
    build_sensitivity_table,
    derive_labels,
    follow_tendency,
    overlap_features,
    profile_sensitivity,
    trustworthiness,
)
from .pipeline import FittedPipeline, Learner, make_learner, predict
from .synth import (
    PlantedRule,
    generate_location_survey,
    generate_osn_graph,
    separated_location_rule,
    separated_osn_rule,
)
from .tree import TreeModel, TreeParams, train_decision_tree

__version__ = "0.1.0"
