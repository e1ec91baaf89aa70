"""Classification as a sequential decision process.

Two deterministic MDPs share one linear policy engine: a feature-acquiring
classifier that buys feature values one at a time before labeling each datum,
and a text classifier that reads documents sentence-by-sentence.  Policies
are trained by approximate policy iteration with Monte-Carlo rollouts.
"""

from .baselines import (
    L1LinearModel,
    MajorityClassifier,
    majority_baseline,
    model_sparsity,
    train_l1,
)
from .data import (
    Corpus,
    FeatureScaler,
    TabularDataset,
    load_corpus,
    normalize_features,
    parse_sparse_rows,
    split,
    split_corpus,
    tfidf_vectorize,
    write_sparse_rows,
)
from .errors import (
    CacheInvalidError,
    DatasetError,
    DatumwiseError,
    DimensionMismatchError,
    InvalidActionError,
    NumericalError,
    OutOfRangeError,
    ParseError,
    TerminalStateError,
)
from .estimators import DatumWiseClassifier, L1SparseLogistic, SequentialTextClassifier
from .evaluation import (
    EvalReport,
    SparsityAccuracyCurve,
    accuracy_at_sparsity,
    build_curve,
    evaluate,
    evaluate_text,
    sweep_lambda,
)
from .feature_mdp import (
    ClassifyAs,
    DatumState,
    FeatureAcquisitionProblem,
    RewardParams,
    SelectFeature,
    classify,
    classify_trace,
    featurize_constrained,
    featurize_unconstrained,
    incremental_action_scores,
    masked_restrict,
)
from .learner import (
    IterationDiagnostics,
    RolloutConfig,
    RolloutSample,
    alpha_mixture_select,
    evaluate_actions,
    fit_policy,
    sample_states,
    train,
)
from .mdp import (
    BlockLayout,
    EpisodeTrace,
    LinearPolicy,
    block_vector,
    greedy_action,
    run_episode,
    score,
)
from .serialize import ModelBundle, load_model, save_model
from .synth import two_subspace_dataset
from .text_mdp import (
    Document,
    ReadingState,
    TextReadingProblem,
    classify_document,
    f1_reward,
    mono_reward,
    text_available_actions,
    text_featurize,
    text_transition,
)

__version__ = "0.1.0"
