"""guesslab: a desk-scale laboratory for a partially non-cooperative
visual guessing game.

Simulates the two-player question game with cooperative and deceptive
answer-players, trains question policies by supervised pretraining and
episodic REINFORCE under configurable terminal rewards, and ships executable
versions of the error estimators, cooperation bound, and concentration
inequalities that relate the two guessing tasks. A small HTTP service lets a
human play the answer-player seat against a trained agent.
"""

from .agent import (
    AgentConfig,
    BeliefState,
    CoopClassifierParams,
    FeatureLayout,
    GuesserMode,
    GuesserParams,
    PolicyParams,
    QuestionAgent,
    SelectMode,
    belief_update,
    classify_cooperation,
    extract_features,
    guess_object,
    replay_belief,
    uniform_belief,
)
from .answerers import (
    AnswerStrategy,
    FeatureMode,
    LearnedNCParams,
    StrategyPool,
    alternate_goal,
    answer,
    bind_episode,
    contradict,
    cooperative,
    default_pool,
    fit_learned_nc,
    learned_nc,
    mixture_nc,
    sample_answerer,
    spam,
)
from .corpus import (
    CorpusStats,
    compute_corpus_stats,
    detect_spam,
    ingest_external_corpus,
    make_synthetic_fixture,
    read_records,
    write_records,
)
from .game import (
    Answer,
    Attribute,
    CoopLabel,
    DialogueTurn,
    GameRecord,
    ObjectSpec,
    Question,
    Scene,
    SceneConfig,
    generate_scene,
    question_space,
    render_question,
    run_episode,
    truth_answer,
)
from .harness import (
    ExperimentConfig,
    emit_plot_data,
    evaluate_policy,
    run_experiment,
)
from .theory import (
    BoundReport,
    EffectivenessReport,
    FiniteHypothesisClass,
    LabeledSample,
    alpha_improvement,
    cer,
    coop_gap,
    effectiveness_estimate,
    erm,
    improvement_concentration_check,
    oer,
    oer_conditional,
    p_hat,
    phat_concentration_check,
    policy_improvement_check,
    sym_diff_class,
    cooperation_bound_check,
    triangle_inequality_check,
    vc_dimension_exact,
    vc_confidence_term,
)
from .training import (
    RewardSpec,
    TrainHyper,
    exact_objective,
    pretrain_supervised,
    reinforce_gradient_estimate,
    reinforce_train,
    rollout_episode,
)

__version__ = "0.1.0"
