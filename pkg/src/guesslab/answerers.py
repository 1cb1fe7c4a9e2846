"""Answer-player strategies: the cooperative oracle and the deceivers.

The non-cooperative pool covers the strategies people actually use when told
to mislead: spamming one fixed answer, contradicting the truth, answering as
if a decoy object were the goal, plus a learned imitator fitted on logged
non-cooperative games with configurable information access.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigError, InsufficientDataError, ModelShapeError
from .game import (
    Answer,
    Attribute,
    CoopLabel,
    DialogueTurn,
    GameRecord,
    Question,
    Scene,
    question_space,
    truth_answer,
)

ANSWER_ORDER = (Answer.YES, Answer.NO, Answer.NA)


class StrategyKind(Enum):
    COOPERATIVE = "cooperative"
    SPAM = "spam"
    CONTRADICT = "contradict"
    ALTERNATE_GOAL = "alternate_goal"
    LEARNED_NC = "learned_nc"
    MIXTURE_NC = "mixture_nc"


class FeatureMode(str, Enum):
    """Information access of the learned non-cooperative answerer."""

    Q_GOAL = "q_goal"            # goal object + immediate question
    Q_GOAL_HIST = "q_goal_hist"  # + dialogue history summary
    Q_GOAL_IMG = "q_goal_img"    # + whole-scene attribute histograms
    ALL = "all"


@dataclass(frozen=True)
class LearnedNCParams:
    """Multinomial-logistic answer model: weights (3, dim+1), last column is
    the bias. The feature dimension is determined by ``feature_mode`` and the
    scene configuration the model was fitted for."""

    weights: np.ndarray
    feature_mode: FeatureMode
    scene_config_json: tuple

    def expected_dim(self) -> int:
        from .game import SceneConfig

        cfg = SceneConfig.from_json(dict(self.scene_config_json))
        return answer_feature_dim(cfg, self.feature_mode)

    def validate(self) -> None:
        dim = self.expected_dim()
        if self.weights.shape != (3, dim + 1):
            raise ModelShapeError(
                f"learned answerer weights shape {self.weights.shape}, "
                f"expected (3, {dim + 1}) for mode {self.feature_mode.value}"
            )

    def to_json(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "feature_mode": self.feature_mode.value,
            "scene_config": dict(self.scene_config_json),
        }

    @classmethod
    def from_json(cls, data: dict) -> "LearnedNCParams":
        return cls(
            weights=np.asarray(data["weights"], dtype=float),
            feature_mode=FeatureMode(data["feature_mode"]),
            scene_config_json=tuple(sorted(data["scene_config"].items())),
        )


@dataclass(frozen=True)
class AnswerStrategy:
    """Immutable description of one answer-player.

    ``decoy`` on an ALTERNATE_GOAL strategy is the per-episode fixed decoy
    object; it is chosen at episode start (see :func:`bind_episode`) and must
    never equal the goal.
    """

    kind: StrategyKind
    fixed_answer: Answer | None = None
    decoy: int | None = None
    learned: LearnedNCParams | None = None
    components: tuple["AnswerStrategy", ...] = ()
    mixture_weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is StrategyKind.SPAM and not isinstance(self.fixed_answer, Answer):
            raise ConfigError("spam strategy needs a fixed Answer")
        if self.kind is StrategyKind.LEARNED_NC:
            if self.learned is None:
                raise ConfigError("learned strategy needs fitted parameters")
            self.learned.validate()
        if self.kind is StrategyKind.MIXTURE_NC:
            if not self.components:
                raise ConfigError("mixture strategy needs components")
            if any(c.label is CoopLabel.CP for c in self.components):
                raise ConfigError("mixture components must all be non-cooperative")
            w = np.asarray(self.mixture_weights, dtype=float)
            if len(w) != len(self.components) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ConfigError("mixture weights must be nonnegative and sum to 1")

    @property
    def label(self) -> CoopLabel:
        return CoopLabel.CP if self.kind is StrategyKind.COOPERATIVE else CoopLabel.NC

    @property
    def tag(self) -> str:
        if self.kind is StrategyKind.COOPERATIVE:
            return "coop"
        if self.kind is StrategyKind.SPAM:
            return f"spam_{self.fixed_answer.value}"
        if self.kind is StrategyKind.CONTRADICT:
            return "contradict"
        if self.kind is StrategyKind.ALTERNATE_GOAL:
            return "altgoal"
        if self.kind is StrategyKind.LEARNED_NC:
            return f"learned_nc:{self.learned.feature_mode.value}"
        return "mixture_nc"


def cooperative() -> AnswerStrategy:
    return AnswerStrategy(kind=StrategyKind.COOPERATIVE)


def spam(fixed: Answer) -> AnswerStrategy:
    return AnswerStrategy(kind=StrategyKind.SPAM, fixed_answer=fixed)


def contradict() -> AnswerStrategy:
    return AnswerStrategy(kind=StrategyKind.CONTRADICT)


def alternate_goal(decoy: int | None = None) -> AnswerStrategy:
    return AnswerStrategy(kind=StrategyKind.ALTERNATE_GOAL, decoy=decoy)


def learned_nc(params: LearnedNCParams) -> AnswerStrategy:
    return AnswerStrategy(kind=StrategyKind.LEARNED_NC, learned=params)


def mixture_nc(components: Sequence[AnswerStrategy], weights: Sequence[float]) -> AnswerStrategy:
    return AnswerStrategy(
        kind=StrategyKind.MIXTURE_NC,
        components=tuple(components),
        mixture_weights=tuple(float(w) for w in weights),
    )


def default_nc_pool() -> tuple[AnswerStrategy, ...]:
    """The three scripted deception strategies, used as the default pool."""
    return (spam(Answer.NO), contradict(), alternate_goal())


@dataclass(frozen=True)
class StrategyPool:
    """Exactly one cooperative strategy plus at least one NC strategy."""

    non_cooperative: tuple[AnswerStrategy, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.non_cooperative:
            raise ConfigError("pool needs at least one non-cooperative strategy")
        if any(s.label is CoopLabel.CP for s in self.non_cooperative):
            raise ConfigError("pool's NC side contains a cooperative strategy")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(self.non_cooperative) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ConfigError("pool weights must be nonnegative and sum to 1")


def default_pool() -> StrategyPool:
    return StrategyPool(non_cooperative=default_nc_pool())


def sample_answerer(
    p_nc: float,
    pool: StrategyPool,
    rng: np.random.Generator,
) -> tuple[AnswerStrategy, CoopLabel]:
    """Draw the answer-player for one episode: non-cooperative with
    probability ``p_nc`` (required to lie strictly inside (0, 1)), uniform or
    pool-weighted among the NC strategies otherwise cooperative."""
    if not 0.0 < p_nc < 1.0:
        raise ConfigError(f"p_nc must be in the open interval (0, 1), got {p_nc}")
    if rng.random() < p_nc:
        idx = int(rng.choice(len(pool.non_cooperative), p=pool.weights))
        return pool.non_cooperative[idx], CoopLabel.NC
    return cooperative(), CoopLabel.CP


def resolve_decoy(scene: Scene, rng: np.random.Generator) -> int:
    """Default decoy rule: uniform over the non-goal objects."""
    candidates = [i for i in range(scene.n_objects) if i != scene.goal]
    return int(candidates[int(rng.integers(len(candidates)))])


def bind_episode(
    strategy: AnswerStrategy, scene: Scene, rng: np.random.Generator
) -> "BoundAnswerer":
    """Fix all per-episode choices (decoy object, mixture component) and
    return an answerer usable by :func:`guesslab.game.run_episode`."""
    resolved = strategy
    if strategy.kind is StrategyKind.MIXTURE_NC:
        idx = int(rng.choice(len(strategy.components), p=np.asarray(strategy.mixture_weights)))
        resolved = strategy.components[idx]
    if resolved.kind is StrategyKind.ALTERNATE_GOAL and resolved.decoy is None:
        resolved = replace(resolved, decoy=resolve_decoy(scene, rng))
    return BoundAnswerer(strategy=resolved)


@dataclass(frozen=True)
class BoundAnswerer:
    strategy: AnswerStrategy

    @property
    def label(self) -> CoopLabel:
        return self.strategy.label

    @property
    def tag(self) -> str:
        return self.strategy.tag

    def respond(
        self,
        scene: Scene,
        history: Sequence[DialogueTurn],
        question: Question,
        rng: np.random.Generator,
    ) -> Answer:
        return answer(self.strategy, scene, history, question, rng)


def answer(
    strategy: AnswerStrategy,
    scene: Scene,
    history: Sequence[DialogueTurn],
    question: Question,
    rng: np.random.Generator,
) -> Answer:
    """Produce one answer. Cooperative answers truthfully about the goal;
    spam repeats its fixed answer; contradict negates the truth (n/a stays
    n/a, it has no negation); alternate-goal answers truthfully about its
    fixed decoy; the learned model samples from its softmax."""
    kind = strategy.kind
    if kind is StrategyKind.COOPERATIVE:
        return truth_answer(scene, scene.goal, question)
    if kind is StrategyKind.SPAM:
        return strategy.fixed_answer
    if kind is StrategyKind.CONTRADICT:
        truth = truth_answer(scene, scene.goal, question)
        if truth is Answer.YES:
            return Answer.NO
        if truth is Answer.NO:
            return Answer.YES
        return Answer.NA
    if kind is StrategyKind.ALTERNATE_GOAL:
        decoy = strategy.decoy
        if decoy is None:
            raise ConfigError("alternate-goal strategy was not bound to an episode decoy")
        if decoy == scene.goal and scene.n_objects >= 2:
            raise ConfigError("alternate-goal decoy equals the goal object")
        return truth_answer(scene, decoy, question)
    if kind is StrategyKind.LEARNED_NC:
        probs = learned_answer_probs(strategy.learned, scene, history, question)
        idx = int(rng.choice(3, p=probs))
        return ANSWER_ORDER[idx]
    raise ConfigError("mixture strategy must be bound to an episode before answering")


# --- learned non-cooperative answerer -------------------------------------


def _onehot(index: int, size: int) -> np.ndarray:
    v = np.zeros(size)
    if 0 <= index < size:
        v[index] = 1.0
    return v


def answer_feature_dim(config, mode: FeatureMode) -> int:
    space = question_space(config)
    n_attr_vals = config.n_categories + config.n_colors + 3 + 2 * config.grid_dim
    base = 3 + 5 + len(space) + n_attr_vals
    hist = 7
    img = config.n_categories + config.n_colors + 3
    if mode is FeatureMode.Q_GOAL:
        return base
    if mode is FeatureMode.Q_GOAL_HIST:
        return base + hist
    if mode is FeatureMode.Q_GOAL_IMG:
        return base + img
    return base + hist + img


def answer_features(
    config,
    mode: FeatureMode,
    scene: Scene,
    history: Sequence[DialogueTurn],
    question: Question,
    max_rounds: int = 5,
) -> np.ndarray:
    """Hand-designed features of (question, goal[, history][, scene]).

    The base block includes the truthful-answer one-hot for the goal, which
    is exactly the information an answerer conditioned on goal + question
    has available.
    """
    space = question_space(config)
    goal = scene.goal_object
    truth = truth_answer(scene, scene.goal, question)
    blocks = [
        _onehot(ANSWER_ORDER.index(truth), 3),
        _onehot(list(Attribute).index(question.attribute), 5),
        _onehot(space.index(question) if question in space else -1, len(space)),
        _onehot(config.categories.index(goal.category), config.n_categories),
        _onehot(config.colors.index(goal.color), config.n_colors),
        _onehot(SIZE_INDEX[goal.size], 3),
        _onehot(goal.cell[0], config.grid_dim),
        _onehot(goal.cell[1], config.grid_dim),
    ]
    if mode in (FeatureMode.Q_GOAL_HIST, FeatureMode.ALL):
        counts = np.zeros(3)
        for turn in history:
            counts[ANSWER_ORDER.index(turn.answer)] += 1.0
        last = _onehot(ANSWER_ORDER.index(history[-1].answer) if history else -1, 3)
        blocks.append(counts / max(max_rounds, 1))
        blocks.append(last)
        blocks.append(np.array([len(history) / max(max_rounds, 1)]))
    if mode in (FeatureMode.Q_GOAL_IMG, FeatureMode.ALL):
        cat_hist = np.zeros(config.n_categories)
        col_hist = np.zeros(config.n_colors)
        size_hist = np.zeros(3)
        for obj in scene.objects:
            cat_hist[config.categories.index(obj.category)] += 1.0
            col_hist[config.colors.index(obj.color)] += 1.0
            size_hist[SIZE_INDEX[obj.size]] += 1.0
        n = scene.n_objects
        blocks.extend([cat_hist / n, col_hist / n, size_hist / n])
    return np.concatenate(blocks)


SIZE_INDEX = {"small": 0, "medium": 1, "large": 2}


def learned_answer_probs(
    params: LearnedNCParams,
    scene: Scene,
    history: Sequence[DialogueTurn],
    question: Question,
) -> np.ndarray:
    from .game import SceneConfig

    cfg = SceneConfig.from_json(dict(params.scene_config_json))
    phi = answer_features(cfg, params.feature_mode, scene, history, question)
    if params.weights.shape != (3, phi.size + 1):
        raise ModelShapeError(
            f"weights shape {params.weights.shape} does not match feature dim {phi.size}"
        )
    logits = params.weights[:, :-1] @ phi + params.weights[:, -1]
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


def fit_learned_nc(
    corpus: Sequence[GameRecord],
    feature_mode: FeatureMode,
    hyper: dict | None = None,
) -> LearnedNCParams:
    """Fit the learned NC answerer on logged non-cooperative games by
    full-batch gradient descent on the multinomial cross-entropy.

    The step size backtracks whenever a step would increase the loss, so the
    recorded loss sequence is non-increasing. Deterministic given the hyper
    seed (initialization is zero; the seed is kept for API stability).
    """
    if not corpus:
        raise InsufficientDataError("cannot fit the learned answerer on an empty corpus")
    for rec in corpus:
        if rec.coop_label is not CoopLabel.NC:
            raise ConfigError("learned answerer corpus must contain only NC-labeled games")
    hyper = dict(hyper or {})
    lr = float(hyper.get("lr", 0.5))
    epochs = int(hyper.get("epochs", 200))
    max_rounds = max((len(r.turns) for r in corpus), default=1)

    cfg = corpus[0].scene.config
    feats, targets = [], []
    for rec in corpus:
        for t, turn in enumerate(rec.turns):
            feats.append(
                answer_features(cfg, feature_mode, rec.scene, rec.turns[:t], turn.question, max_rounds)
            )
            targets.append(ANSWER_ORDER.index(turn.answer))
    X = np.column_stack([np.asarray(feats), np.ones(len(feats))])
    y = np.asarray(targets)
    n, d = X.shape
    W = np.zeros((3, d))

    def loss_of(weights: np.ndarray) -> float:
        logits = X @ weights.T
        logits -= logits.max(axis=1, keepdims=True)
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        return float(-logp[np.arange(n), y].mean())

    prev = loss_of(W)
    for _ in range(epochs):
        logits = X @ W.T
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        probs[np.arange(n), y] -= 1.0
        grad = probs.T @ X / n
        step = lr
        cand = W - step * grad
        cand_loss = loss_of(cand)
        while cand_loss > prev + 1e-12 and step >= 1e-12:
            step /= 2.0
            cand = W - step * grad
            cand_loss = loss_of(cand)
        if cand_loss > prev + 1e-12:
            break
        W, prev = cand, cand_loss
    return LearnedNCParams(
        weights=W,
        feature_mode=feature_mode,
        scene_config_json=tuple(sorted(cfg.to_json().items())),
    )
