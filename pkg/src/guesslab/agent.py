"""The question-player: belief tracking, question policy, and both guesses.

The agent keeps a Bayesian belief over which object is the goal, assuming
answers are wrong with a small rate ``lie_rate`` (so that deceptive answers
never zero the posterior out entirely). Questions are chosen by a softmax
policy over the finite question space: each question gets a logit equal to a
per-question bias plus a learned weighting of question statistics computed
from the current belief (how much belief mass would answer yes, how even the
yes/no split is, whether the question was already asked, and so on).

After the last round the agent guesses the goal object and the answer-player's
cooperation simultaneously: the object guess from the belief (or a linear
scorer), the cooperation guess from a linear classifier over a fixed-length
dialogue feature vector. Neither guess sees the other.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigError, ConfigMismatchError, ModelShapeError
from .game import (
    Answer,
    Attribute,
    CoopLabel,
    DialogueTurn,
    GameRecord,
    Question,
    Scene,
    SceneConfig,
    question_space,
    truth_answer,
    truth_table_yes,
)

N_POLICY_WEIGHTS = 10


class SelectMode(str, Enum):
    SAMPLE = "sample"
    GREEDY = "greedy"


class GuesserMode(str, Enum):
    BELIEF_ARGMAX = "belief_argmax"
    LINEAR = "linear"


# Per-object inputs of the LINEAR guesser: belief, gap to the max, belief
# entropy, constant.
N_GUESSER_FEATURES = 4


@dataclass
class BeliefState:
    """Normalized distribution over scene objects plus the assumed answer
    noise. ``fallback`` records that an update once produced an all-zero
    posterior (possible only at lie_rate == 0) and was reset to uniform."""

    probs: np.ndarray
    lie_rate: float
    fallback: bool = False

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        if not 0.0 <= self.lie_rate <= 0.5:
            raise ConfigError(f"lie_rate must be in [0, 0.5], got {self.lie_rate}")
        if abs(self.probs.sum() - 1.0) > 1e-9 or np.any(self.probs < 0):
            raise ConfigError("belief probabilities must be nonnegative and sum to 1")

    @property
    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())


def uniform_belief(n_objects: int, lie_rate: float = 0.05) -> BeliefState:
    return BeliefState(probs=np.full(n_objects, 1.0 / n_objects), lie_rate=lie_rate)


def belief_update(
    belief: BeliefState, scene: Scene, question: Question, answer: Answer
) -> BeliefState:
    """Posterior over goal candidates after observing one answer.

    An object is consistent with (question, answer) when the truthful answer
    about it equals the observed answer; consistent objects get likelihood
    (1 - lie_rate), inconsistent ones lie_rate. N/a observations carry no
    evidence and leave the belief unchanged.
    """
    if len(belief.probs) != scene.n_objects:
        raise ConfigError("belief dimension does not match the scene")
    if answer is Answer.NA:
        return BeliefState(belief.probs.copy(), belief.lie_rate, belief.fallback)
    consistent = np.array(
        [truth_answer(scene, i, question) is answer for i in range(scene.n_objects)],
        dtype=float,
    )
    like = (1.0 - belief.lie_rate) * consistent + belief.lie_rate * (1.0 - consistent)
    posterior = belief.probs * like
    total = posterior.sum()
    if total <= 0.0:
        return BeliefState(
            probs=np.full(scene.n_objects, 1.0 / scene.n_objects),
            lie_rate=belief.lie_rate,
            fallback=True,
        )
    return BeliefState(probs=posterior / total, lie_rate=belief.lie_rate, fallback=belief.fallback)


@dataclass(frozen=True)
class AgentConfig:
    """Everything that fixes the agent's input/output spaces."""

    scene: SceneConfig = field(default_factory=SceneConfig)
    max_rounds: int = 5
    lie_rate: float = 0.05
    space: tuple[Question, ...] | None = None

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if self.space is None:
            object.__setattr__(self, "space", question_space(self.scene))

    @property
    def n_questions(self) -> int:
        return len(self.space)

    @property
    def max_objects(self) -> int:
        return self.scene.n_objects

    def to_json(self) -> dict:
        return {
            "scene": self.scene.to_json(),
            "max_rounds": self.max_rounds,
            "lie_rate": self.lie_rate,
            "space": [q.to_json() for q in self.space],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AgentConfig":
        return cls(
            scene=SceneConfig.from_json(data["scene"]),
            max_rounds=int(data["max_rounds"]),
            lie_rate=float(data["lie_rate"]),
            space=tuple(Question.from_json(q) for q in data["space"]),
        )

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class PolicyParams:
    """Question policy: logits = bias[q] + weights . psi(q, state)."""

    bias: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.bias = np.asarray(self.bias, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (N_POLICY_WEIGHTS,):
            raise ModelShapeError(
                f"policy weights must have shape ({N_POLICY_WEIGHTS},), got {self.weights.shape}"
            )
        if not (np.isfinite(self.bias).all() and np.isfinite(self.weights).all()):
            raise ConfigError("policy parameters must be finite")

    def copy(self) -> "PolicyParams":
        return PolicyParams(bias=self.bias.copy(), weights=self.weights.copy())

    def to_json(self) -> dict:
        return {"bias": self.bias.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PolicyParams":
        return cls(bias=np.asarray(data["bias"]), weights=np.asarray(data["weights"]))


def zero_policy(n_questions: int) -> PolicyParams:
    return PolicyParams(bias=np.zeros(n_questions), weights=np.zeros(N_POLICY_WEIGHTS))


@dataclass
class GuesserParams:
    mode: GuesserMode = GuesserMode.BELIEF_ARGMAX
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode is GuesserMode.LINEAR:
            if self.weights is None:
                raise ConfigError("linear guesser needs weights")
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (N_GUESSER_FEATURES,):
                raise ModelShapeError(
                    f"linear guesser weights must have shape ({N_GUESSER_FEATURES},)"
                )

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "weights": None if self.weights is None else self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "GuesserParams":
        w = data.get("weights")
        return cls(
            mode=GuesserMode(data["mode"]),
            weights=None if w is None else np.asarray(w),
        )


@dataclass
class CoopClassifierParams:
    """Linear cooperation detector: NC iff weights . features > threshold."""

    weights: np.ndarray
    threshold: float = 0.0

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if not (np.isfinite(self.weights).all() and np.isfinite(self.threshold)):
            raise ConfigError("classifier parameters must be finite")

    def copy(self) -> "CoopClassifierParams":
        return CoopClassifierParams(weights=self.weights.copy(), threshold=self.threshold)

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "threshold": self.threshold}

    @classmethod
    def from_json(cls, data: dict) -> "CoopClassifierParams":
        return cls(weights=np.asarray(data["weights"]), threshold=float(data["threshold"]))


def zero_classifier(layout: "FeatureLayout") -> CoopClassifierParams:
    return CoopClassifierParams(weights=np.zeros(layout.dim), threshold=0.0)


# --- dialogue features ------------------------------------------------------


N_SCALAR_FEATURES = 10


@dataclass(frozen=True)
class FeatureLayout:
    """Index map of the fixed-length dialogue feature vector.

    Blocks, in order: per-round question/answer one-hots, final belief padded
    to ``max_objects``, belief-entropy trajectory (one entry per round plus
    the prior), then scalar summaries: agreement count, contradiction count,
    yes/no/na counts, minimum and mean answer support, the belief fallback
    flag, the best single-object answer consistency, and the fraction of
    objects consistent with every yes/no answer.
    """

    n_questions: int
    max_rounds: int
    max_objects: int

    @property
    def round_block(self) -> int:
        return self.n_questions + 3

    @property
    def dim(self) -> int:
        return (
            self.max_rounds * self.round_block
            + self.max_objects
            + (self.max_rounds + 1)
            + N_SCALAR_FEATURES
        )

    @property
    def belief_start(self) -> int:
        return self.max_rounds * self.round_block

    @property
    def entropy_start(self) -> int:
        return self.belief_start + self.max_objects

    @property
    def scalars_start(self) -> int:
        return self.entropy_start + self.max_rounds + 1

    @property
    def idx_agreement_count(self) -> int:
        return self.scalars_start

    @property
    def idx_contradiction_count(self) -> int:
        return self.scalars_start + 1

    @property
    def idx_fallback(self) -> int:
        return self.scalars_start + 7

    @property
    def idx_max_consistency(self) -> int:
        return self.scalars_start + 8

    @property
    def idx_frac_consistent(self) -> int:
        return self.scalars_start + 9

    @classmethod
    def for_config(cls, config: AgentConfig) -> "FeatureLayout":
        return cls(
            n_questions=config.n_questions,
            max_rounds=config.max_rounds,
            max_objects=config.max_objects,
        )


def build_features(
    layout: FeatureLayout,
    space: Sequence[Question],
    scene: Scene,
    turns: Sequence[DialogueTurn],
    trace: Sequence[BeliefState],
) -> np.ndarray:
    """Assemble the dialogue feature vector from an episode's raw pieces.

    ``trace`` must hold the belief before any update followed by the belief
    after each round, so ``len(trace) == len(turns) + 1``. An answer's
    support is the belief mass (before updating) of objects consistent with
    it; a round counts as a contradiction when that support falls below 0.5,
    as agreement otherwise. N/a rounds have support 1 by convention.
    """
    if len(turns) != layout.max_rounds:
        raise ConfigMismatchError(
            f"record has {len(turns)} turns, layout expects {layout.max_rounds}"
        )
    if len(trace) != len(turns) + 1:
        raise ConfigMismatchError("belief trace must have one more entry than turns")
    if scene.n_objects > layout.max_objects:
        raise ConfigMismatchError(
            f"scene has {scene.n_objects} objects, layout allows {layout.max_objects}"
        )
    index = {q: j for j, q in enumerate(space)}
    x = np.zeros(layout.dim)
    answers = (Answer.YES, Answer.NO, Answer.NA)
    supports = []
    consistency = np.zeros(scene.n_objects)
    n_binary = 0
    for t, turn in enumerate(turns):
        base = t * layout.round_block
        j = index.get(turn.question)
        if j is not None:
            x[base + j] = 1.0
        x[base + layout.n_questions + answers.index(turn.answer)] = 1.0
        if turn.answer is Answer.NA:
            supports.append(1.0)
        else:
            consistent = np.array(
                [
                    truth_answer(scene, i, turn.question) is turn.answer
                    for i in range(scene.n_objects)
                ],
                dtype=float,
            )
            supports.append(float(trace[t].probs @ consistent))
            consistency += consistent
            n_binary += 1
    final = trace[-1].probs
    x[layout.belief_start : layout.belief_start + scene.n_objects] = final
    for t, b in enumerate(trace):
        x[layout.entropy_start + t] = b.entropy
    supports_arr = np.asarray(supports)
    counts = {a: sum(1 for t in turns if t.answer is a) for a in answers}
    s = layout.scalars_start
    x[s] = float((supports_arr >= 0.5).sum())
    x[s + 1] = float((supports_arr < 0.5).sum())
    x[s + 2] = counts[Answer.YES]
    x[s + 3] = counts[Answer.NO]
    x[s + 4] = counts[Answer.NA]
    x[s + 5] = float(supports_arr.min())
    x[s + 6] = float(supports_arr.mean())
    x[s + 7] = 1.0 if any(b.fallback for b in trace) else 0.0
    # A truthful dialogue always leaves the goal consistent with every
    # yes/no answer; deceptive answer patterns often fit no object at all.
    if n_binary > 0:
        per_object = consistency / n_binary
        x[s + 8] = float(per_object.max())
        x[s + 9] = float(np.mean(per_object >= 1.0))
    else:
        x[s + 8] = 1.0
        x[s + 9] = 1.0
    return x


def extract_features(
    record: GameRecord,
    trace: Sequence[BeliefState],
    layout: FeatureLayout,
    space: Sequence[Question] | None = None,
) -> np.ndarray:
    """Feature vector of a finished episode given its belief trace."""
    if space is None:
        space = question_space(record.scene.config)
    return build_features(layout, space, record.scene, record.turns, trace)


def replay_belief(record: GameRecord, lie_rate: float) -> list[BeliefState]:
    """Recompute the belief trace of a logged episode."""
    belief = uniform_belief(record.scene.n_objects, lie_rate)
    trace = [belief]
    for turn in record.turns:
        belief = belief_update(belief, record.scene, turn.question, turn.answer)
        trace.append(belief)
    return trace


# --- policy -----------------------------------------------------------------


def policy_features(
    truth_yes: np.ndarray,
    belief: BeliefState,
    round_no: int,
    max_rounds: int,
    asked: np.ndarray,
) -> np.ndarray:
    """(n_questions, N_POLICY_WEIGHTS) state features for every question.

    Only question-varying features matter (constants cancel in the softmax):
    the belief mass that would truthfully answer yes, how balanced that split
    is, a repeat flag, round interactions, and the question's attribute kind.
    """
    n_questions = truth_yes.shape[1]
    p_yes = belief.probs @ truth_yes
    split = 4.0 * p_yes * (1.0 - p_yes)
    rf = (round_no - 1) / max(max_rounds - 1, 1)
    psi = np.zeros((n_questions, N_POLICY_WEIGHTS))
    psi[:, 0] = p_yes
    psi[:, 1] = split
    psi[:, 2] = asked
    psi[:, 3] = p_yes * rf
    psi[:, 4] = split * rf
    return psi


def attribute_onehots(space: Sequence[Question]) -> np.ndarray:
    attrs = list(Attribute)
    out = np.zeros((len(space), 5))
    for j, q in enumerate(space):
        out[j, attrs.index(q.attribute)] = 1.0
    return out


def policy_logits(policy: PolicyParams, psi: np.ndarray) -> np.ndarray:
    if policy.bias.shape[0] != psi.shape[0]:
        raise ModelShapeError(
            f"policy bias has {policy.bias.shape[0]} entries for {psi.shape[0]} questions"
        )
    return policy.bias + psi @ policy.weights


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


# --- guessing ---------------------------------------------------------------


def guesser_object_features(belief: BeliefState) -> np.ndarray:
    """(n_objects, N_GUESSER_FEATURES) inputs of the LINEAR guesser."""
    n = len(belief.probs)
    ent = belief.entropy
    top = float(belief.probs.max())
    return np.column_stack(
        [belief.probs, top - belief.probs, np.full(n, ent), np.ones(n)]
    )


def guess_object(
    guesser: GuesserParams, features: np.ndarray, belief: BeliefState
) -> int:
    """Goal-object guess; ties break to the lowest index."""
    if guesser.mode is GuesserMode.BELIEF_ARGMAX:
        return int(np.argmax(belief.probs))
    scores = guesser_object_features(belief) @ guesser.weights
    return int(np.argmax(scores))


def classify_cooperation(
    classifier: CoopClassifierParams, features: np.ndarray
) -> CoopLabel:
    """NC iff the linear score strictly exceeds the threshold; the boundary
    itself classifies as CP."""
    if classifier.weights.shape[0] != features.shape[0]:
        raise ModelShapeError(
            f"classifier expects {classifier.weights.shape[0]} features, got {features.shape[0]}"
        )
    score = float(classifier.weights @ features)
    return CoopLabel.NC if score > classifier.threshold else CoopLabel.CP


def nc_probability(classifier: CoopClassifierParams, features: np.ndarray) -> float:
    score = float(classifier.weights @ features) - classifier.threshold
    return float(1.0 / (1.0 + np.exp(-np.clip(score, -500, 500))))


# --- the agent --------------------------------------------------------------


@dataclass
class AgentSession:
    """Mutable per-episode state of the question-player."""

    scene: Scene
    truth_yes: np.ndarray
    attr_onehots: np.ndarray
    belief: BeliefState
    trace: list[BeliefState]
    turns: list[DialogueTurn]
    asked: np.ndarray
    round_no: int = 1
    log_prob: float = 0.0
    score_bias: np.ndarray | None = None
    score_weights: np.ndarray | None = None


@dataclass
class QuestionAgent:
    """Bundles the three learned components behind the episode protocol."""

    config: AgentConfig
    policy: PolicyParams
    guesser: GuesserParams
    coop: CoopClassifierParams
    mode: SelectMode = SelectMode.SAMPLE
    track_scores: bool = False

    @classmethod
    def fresh(cls, config: AgentConfig, **kwargs) -> "QuestionAgent":
        layout = FeatureLayout.for_config(config)
        return cls(
            config=config,
            policy=zero_policy(config.n_questions),
            guesser=GuesserParams(),
            coop=zero_classifier(layout),
            **kwargs,
        )

    @property
    def layout(self) -> FeatureLayout:
        return FeatureLayout.for_config(self.config)

    def begin(self, scene: Scene) -> AgentSession:
        belief = uniform_belief(scene.n_objects, self.config.lie_rate)
        session = AgentSession(
            scene=scene,
            truth_yes=truth_table_yes(scene, self.config.space),
            attr_onehots=attribute_onehots(self.config.space),
            belief=belief,
            trace=[belief],
            turns=[],
            asked=np.zeros(self.config.n_questions),
        )
        if self.track_scores:
            session.score_bias = np.zeros(self.config.n_questions)
            session.score_weights = np.zeros(N_POLICY_WEIGHTS)
        return session

    def current_psi(self, session: AgentSession, round_no: int) -> np.ndarray:
        psi = policy_features(
            session.truth_yes,
            session.belief,
            round_no,
            self.config.max_rounds,
            session.asked,
        )
        psi[:, 5:] = session.attr_onehots
        return psi

    def next_question(
        self, session: AgentSession, round_no: int, rng: np.random.Generator
    ) -> Question:
        if not 1 <= round_no <= self.config.max_rounds:
            raise ConfigError(f"round {round_no} outside [1, {self.config.max_rounds}]")
        psi = self.current_psi(session, round_no)
        probs = softmax(policy_logits(self.policy, psi))
        if self.mode is SelectMode.GREEDY:
            j = int(np.argmax(probs))
        else:
            j = int(rng.choice(len(probs), p=probs))
        session.log_prob += float(np.log(max(probs[j], 1e-300)))
        if self.track_scores:
            onehot = np.zeros(len(probs))
            onehot[j] = 1.0
            session.score_bias += onehot - probs
            session.score_weights += psi[j] - probs @ psi
        session.round_no = round_no
        return self.config.space[j]

    def observe(self, session: AgentSession, question: Question, answer: Answer) -> None:
        j = self.config.space.index(question) if question in self.config.space else None
        if j is not None:
            session.asked[j] = 1.0
        session.turns.append(DialogueTurn(question, answer, session.round_no))
        session.belief = belief_update(session.belief, session.scene, question, answer)
        session.trace.append(session.belief)

    def features(self, session: AgentSession) -> np.ndarray:
        return build_features(
            self.layout, self.config.space, session.scene, session.turns, session.trace
        )

    def guesses(self, session: AgentSession) -> tuple[int, CoopLabel]:
        x = self.features(session)
        return (
            guess_object(self.guesser, x, session.belief),
            classify_cooperation(self.coop, x),
        )

    def with_params(
        self,
        policy: PolicyParams | None = None,
        coop: CoopClassifierParams | None = None,
        **kwargs,
    ) -> "QuestionAgent":
        return replace(
            self,
            policy=policy if policy is not None else self.policy,
            coop=coop if coop is not None else self.coop,
            **kwargs,
        )


# --- checkpoints ------------------------------------------------------------


def checkpoint_to_json(agent: QuestionAgent, seed: int) -> dict:
    return {
        "format": "guesslab-checkpoint-v1",
        "seed": seed,
        "config": agent.config.to_json(),
        "config_hash": agent.config.config_hash(),
        "policy": agent.policy.to_json(),
        "guesser": agent.guesser.to_json(),
        "coop": agent.coop.to_json(),
    }


def checkpoint_from_json(data: dict, mode: SelectMode = SelectMode.GREEDY) -> QuestionAgent:
    if data.get("format") != "guesslab-checkpoint-v1":
        raise ConfigError(f"unknown checkpoint format {data.get('format')!r}")
    config = AgentConfig.from_json(data["config"])
    return QuestionAgent(
        config=config,
        policy=PolicyParams.from_json(data["policy"]),
        guesser=GuesserParams.from_json(data["guesser"]),
        coop=CoopClassifierParams.from_json(data["coop"]),
        mode=mode,
    )
