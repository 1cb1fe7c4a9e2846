"""Policy learning: supervised pretraining and episodic REINFORCE.

Pretraining clones a heuristic teacher that always asks the question with the
largest expected reduction in belief entropy, on cooperative self-play games.
REINFORCE then fine-tunes the same policy on simulated games where the
answer-player is non-cooperative with probability ``p_nc``; the only nonzero
reward arrives at the end of the episode (discount fixed to 1) and scores the
final guesses. The cooperation classifier is trained simultaneously, one
supervised gradient step per episode on the finished dialogue's features.

The module also contains an exact-objective calculator that enumerates every
trajectory of a small game; it exists so the sampled policy gradient can be
checked against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agent import (
    AgentConfig,
    AgentSession,
    BeliefState,
    CoopClassifierParams,
    FeatureLayout,
    GuesserParams,
    PolicyParams,
    QuestionAgent,
    SelectMode,
    attribute_onehots,
    belief_update,
    build_features,
    classify_cooperation,
    guess_object,
    nc_probability,
    policy_features,
    policy_logits,
    softmax,
    uniform_belief,
)
from .answerers import (
    AnswerStrategy,
    StrategyKind,
    StrategyPool,
    answer,
    bind_episode,
    cooperative,
    default_pool,
    sample_answerer,
)
from .errors import ConfigError, TrainingAbortedError
from .game import (
    CoopLabel,
    DialogueTurn,
    GameRecord,
    Scene,
    generate_scene,
    truth_table_yes,
)

_DETERMINISTIC_KINDS = {
    StrategyKind.COOPERATIVE,
    StrategyKind.SPAM,
    StrategyKind.CONTRADICT,
    StrategyKind.ALTERNATE_GOAL,
}


@dataclass(frozen=True)
class RewardSpec:
    """Terminal reward: which guess(es) get paid.

    ``coop``  -> 1 if the cooperation guess is right else 0
    ``object`` -> 1 if the object guess is right else 0
    ``mixed`` -> lam * object + (1 - lam) * coop
    """

    kind: str
    lam: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("coop", "object", "mixed"):
            raise ConfigError(f"unknown reward kind {self.kind!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"mixture weight must be in [0, 1], got {self.lam}")

    def value(self, object_correct: bool, coop_correct: bool) -> float:
        if self.kind == "coop":
            return float(coop_correct)
        if self.kind == "object":
            return float(object_correct)
        return self.lam * float(object_correct) + (1.0 - self.lam) * float(coop_correct)


COOP_ONLY = RewardSpec("coop")
OBJECT_ONLY = RewardSpec("object")


def rollout_episode(
    agent: QuestionAgent,
    bound_answerer,
    scene: Scene,
    rng: np.random.Generator,
    seed: int = 0,
) -> tuple[GameRecord, AgentSession]:
    """Play one episode and return both the record and the agent session
    (the session carries the belief trace and, when tracking is on, the
    accumulated policy score vectors)."""
    session = agent.begin(scene)
    for round_no in range(1, agent.config.max_rounds + 1):
        q = agent.next_question(session, round_no, rng)
        a = bound_answerer.respond(scene, tuple(session.turns), q, rng)
        agent.observe(session, q, a)
    object_guess, coop_guess = agent.guesses(session)
    record = GameRecord(
        scene=scene,
        turns=tuple(session.turns),
        coop_label=bound_answerer.label,
        strategy_tag=bound_answerer.tag,
        object_guess=object_guess,
        coop_guess=coop_guess,
        seed=seed,
    )
    return record, session


# --- information-gain teacher ------------------------------------------------


def _column_entropies(weighted: np.ndarray) -> np.ndarray:
    """Entropy of each column of a nonnegative matrix after normalization."""
    sums = weighted.sum(axis=0)
    safe = np.where(sums > 0, sums, 1.0)
    norm = weighted / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(norm > 0, np.log(norm), 0.0)
    return -(norm * logs).sum(axis=0)


def expected_entropy_reduction(
    truth_yes: np.ndarray, belief: BeliefState
) -> np.ndarray:
    """Per-question expected drop in belief entropy, under the agent's own
    noise model for answers."""
    b = belief.probs
    eps = belief.lie_rate
    p_yes_truth = b @ truth_yes
    p_yes_obs = (1.0 - eps) * p_yes_truth + eps * (1.0 - p_yes_truth)
    like_yes = (1.0 - eps) * truth_yes + eps * (1.0 - truth_yes)
    weighted_yes = b[:, None] * like_yes
    weighted_no = b[:, None] * (1.0 - like_yes)
    h_yes = _column_entropies(weighted_yes)
    h_no = _column_entropies(weighted_no)
    prior_entropy = belief.entropy
    return prior_entropy - (p_yes_obs * h_yes + (1.0 - p_yes_obs) * h_no)


@dataclass
class PretrainResult:
    policy: PolicyParams
    guesser: GuesserParams
    losses: list[float] = field(default_factory=list)


def pretrain_supervised(
    config: AgentConfig,
    n_games: int,
    rng: np.random.Generator,
    hyper: dict | None = None,
) -> PretrainResult:
    """Behavior-clone the entropy-reduction teacher on cooperative games.

    Returns the fitted policy and a belief-argmax guesser, plus the per-epoch
    cross-entropy losses (non-increasing by construction of the step search).
    """
    if n_games < 1:
        raise ConfigError(f"n_games must be >= 1, got {n_games}")
    hyper = dict(hyper or {})
    lr = float(hyper.get("lr", 2.0))
    epochs = int(hyper.get("epochs", 30))

    attr = attribute_onehots(config.space)
    psis: list[np.ndarray] = []
    choices: list[int] = []
    oracle = cooperative()
    for _ in range(n_games):
        scene = generate_scene(config.scene, rng)
        truth_yes = truth_table_yes(scene, config.space)
        belief = uniform_belief(scene.n_objects, config.lie_rate)
        asked = np.zeros(config.n_questions)
        turns: list[DialogueTurn] = []
        for round_no in range(1, config.max_rounds + 1):
            psi = policy_features(truth_yes, belief, round_no, config.max_rounds, asked)
            psi[:, 5:] = attr
            gains = expected_entropy_reduction(truth_yes, belief)
            j = int(np.argmax(gains))
            psis.append(psi)
            choices.append(j)
            q = config.space[j]
            a = answer(oracle, scene, tuple(turns), q, rng)
            turns.append(DialogueTurn(q, a, round_no))
            asked = asked.copy()
            asked[j] = 1.0
            belief = belief_update(belief, scene, q, a)

    psi_stack = np.stack(psis)
    target = np.asarray(choices)
    n = len(target)
    bias = np.zeros(config.n_questions)
    weights = np.zeros(psi_stack.shape[2])

    def loss_of(b: np.ndarray, w: np.ndarray) -> float:
        logits = b[None, :] + psi_stack @ w
        logits = logits - logits.max(axis=1, keepdims=True)
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        return float(-logp[np.arange(n), target].mean())

    losses = [loss_of(bias, weights)]
    for _ in range(epochs):
        logits = bias[None, :] + psi_stack @ weights
        logits = logits - logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        probs[np.arange(n), target] -= 1.0
        g_bias = probs.mean(axis=0)
        g_w = np.einsum("nq,nqf->f", probs, psi_stack) / n
        step = lr
        cand_b, cand_w = bias - step * g_bias, weights - step * g_w
        cand_loss = loss_of(cand_b, cand_w)
        while cand_loss > losses[-1] + 1e-12 and step >= 1e-12:
            step /= 2.0
            cand_b, cand_w = bias - step * g_bias, weights - step * g_w
            cand_loss = loss_of(cand_b, cand_w)
        if cand_loss > losses[-1] + 1e-12:
            break
        bias, weights = cand_b, cand_w
        losses.append(cand_loss)
    return PretrainResult(
        policy=PolicyParams(bias=bias, weights=weights),
        guesser=GuesserParams(),
        losses=losses,
    )


# --- REINFORCE fine-tuning ----------------------------------------------------


@dataclass(frozen=True)
class TrainHyper:
    policy_lr: float = 0.05
    coop_lr: float = 0.3
    epochs: int = 10
    lr_decay: str = "none"  # "linear" anneals the policy step to 0
    tail_average: float = 0.25  # fraction of final episodes whose parameter
    # iterates are averaged into the returned model (0 disables); averaging
    # the tail removes the endpoint lottery of a stochastic-gradient run

    def __post_init__(self) -> None:
        if self.lr_decay not in ("linear", "none"):
            raise ConfigError(f"unknown lr_decay {self.lr_decay!r}")
        if not 0.0 <= self.tail_average <= 1.0:
            raise ConfigError("tail_average must be in [0, 1]")

    def policy_lr_at(self, episode: int, episodes: int) -> float:
        if self.lr_decay == "linear" and episodes > 1:
            return self.policy_lr * (1.0 - episode / episodes)
        return self.policy_lr


@dataclass
class TrainResult:
    policy: PolicyParams
    coop: CoopClassifierParams
    curve: list[dict] = field(default_factory=list)
    guesser: GuesserParams | None = None


def guesser_sgd_step(
    guesser: GuesserParams, belief: BeliefState, goal: int, lr: float
) -> None:
    """One in-place softmax-regression step of the LINEAR guesser toward the
    true goal; a no-op for the parameter-free belief-argmax guesser."""
    from .agent import GuesserMode, guesser_object_features, softmax

    if guesser.mode is not GuesserMode.LINEAR:
        return
    feats = guesser_object_features(belief)
    probs = softmax(feats @ guesser.weights)
    onehot = np.zeros(len(probs))
    onehot[goal] = 1.0
    guesser.weights -= lr * feats.T @ (probs - onehot)


def coop_sgd_step(
    coop: CoopClassifierParams, x: np.ndarray, label: CoopLabel, lr: float
) -> None:
    """One in-place logistic-regression step on (features, cooperation).

    The step is normalized by the squared feature norm so the same nominal
    rate stays stable across dialogue distributions with very different
    feature scales.
    """
    target = 1.0 if label is CoopLabel.NC else 0.0
    p = nc_probability(coop, x)
    err = p - target
    scale = lr / (1.0 + 0.25 * float(x @ x))
    coop.weights -= scale * err * x
    coop.threshold += scale * err


def reinforce_train(
    agent: QuestionAgent,
    reward: RewardSpec,
    p_nc: float,
    episodes: int,
    rng: np.random.Generator,
    baseline: str = "mean",
    hyper: TrainHyper | None = None,
    pool: StrategyPool | None = None,
    force_cooperative: bool = False,
    train_guesser: bool = False,
    eval_hook=None,
) -> TrainResult:
    """Episodic REINFORCE with terminal reward and a running-mean baseline.

    Per episode: draw the answer-player (Bernoulli(p_nc) over the pool, or
    cooperative when ``force_cooperative`` is set, a debug mode for
    boundary-probability experiments), roll the dialogue out with the
    sampling policy, pay the terminal reward, and take one ascent step on the
    policy plus one supervised step on the cooperation classifier. The
    object guesser is fixed by default; ``train_guesser`` additionally takes
    a supervised step on a LINEAR guesser each episode.

    ``eval_hook(epoch, policy, coop) -> dict`` may inject evaluation metrics
    into the returned per-epoch curve.
    """
    if baseline not in ("mean", "none"):
        raise ConfigError(f"unknown baseline {baseline!r}")
    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    if not force_cooperative and not 0.0 < p_nc < 1.0:
        raise ConfigError(f"p_nc must be in (0, 1), got {p_nc}")
    hyper = hyper or TrainHyper()
    pool = pool or default_pool()

    policy = agent.policy.copy()
    coop = agent.coop.copy()
    guesser = agent.guesser
    from .agent import GuesserMode

    if train_guesser and guesser.mode is GuesserMode.LINEAR:
        guesser = GuesserParams(mode=GuesserMode.LINEAR, weights=guesser.weights.copy())
    worker = agent.with_params(
        policy=policy, coop=coop, guesser=guesser, mode=SelectMode.SAMPLE, track_scores=True
    )

    running_mean = 0.0
    seen = 0
    curve: list[dict] = []
    per_epoch = max(episodes // max(hyper.epochs, 1), 1)
    epoch_rewards: list[float] = []
    tail_start = episodes - int(round(hyper.tail_average * episodes))
    tail_count = 0
    tail_bias = np.zeros_like(policy.bias)
    tail_weights = np.zeros_like(policy.weights)
    tail_coop_w = np.zeros_like(coop.weights)
    tail_coop_thr = 0.0

    for ep in range(episodes):
        scene = generate_scene(agent.config.scene, rng)
        if force_cooperative:
            strategy, label = cooperative(), CoopLabel.CP
        else:
            strategy, label = sample_answerer(p_nc, pool, rng)
        bound = bind_episode(strategy, scene, rng)
        try:
            record, session = rollout_episode(worker, bound, scene, rng, seed=ep)
        except (ValueError, FloatingPointError) as exc:
            norm = float(np.linalg.norm(policy.bias) + np.linalg.norm(policy.weights))
            raise TrainingAbortedError(episode=ep, seed=ep, param_norm=norm) from exc
        rho = reward.value(record.object_guess == scene.goal, record.coop_guess == label)
        advantage = rho - (running_mean if baseline == "mean" else 0.0)

        lr = hyper.policy_lr_at(ep, episodes)
        policy.bias += lr * advantage * session.score_bias
        policy.weights += lr * advantage * session.score_weights

        x = worker.features(session)
        coop_sgd_step(coop, x, label, hyper.coop_lr)
        if train_guesser:
            guesser_sgd_step(guesser, session.belief, scene.goal, hyper.coop_lr)

        if not (
            np.isfinite(policy.bias).all()
            and np.isfinite(policy.weights).all()
            and np.isfinite(coop.weights).all()
        ):
            norm = float(np.linalg.norm(policy.bias) + np.linalg.norm(policy.weights))
            raise TrainingAbortedError(episode=ep, seed=ep, param_norm=norm)

        seen += 1
        running_mean += (rho - running_mean) / seen
        epoch_rewards.append(rho)
        if ep >= tail_start:
            tail_count += 1
            tail_bias += policy.bias
            tail_weights += policy.weights
            tail_coop_w += coop.weights
            tail_coop_thr += coop.threshold
        if len(epoch_rewards) >= per_epoch or ep == episodes - 1:
            row = {
                "epoch": len(curve),
                "mean_reward": float(np.mean(epoch_rewards)),
            }
            if eval_hook is not None:
                row.update(eval_hook(len(curve), policy, coop))
            curve.append(row)
            epoch_rewards = []

    if tail_count > 0:
        policy = PolicyParams(bias=tail_bias / tail_count, weights=tail_weights / tail_count)
        coop = CoopClassifierParams(
            weights=tail_coop_w / tail_count, threshold=tail_coop_thr / tail_count
        )
    return TrainResult(policy=policy, coop=coop, curve=curve, guesser=guesser)


# --- exact objective on enumerable games --------------------------------------


def exact_objective(
    config: AgentConfig,
    policy: PolicyParams,
    guesser: GuesserParams,
    coop: CoopClassifierParams,
    scene: Scene,
    answerer_dist: list[tuple[AnswerStrategy, float]],
    reward: RewardSpec,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Expected terminal reward of the sampling policy, plus its exact
    gradient, by summing over every trajectory of the game.

    Only deterministic answer strategies are enumerable; alternate-goal
    strategies must already carry a fixed decoy.
    """
    probs_total = sum(p for _, p in answerer_dist)
    if abs(probs_total - 1.0) > 1e-9:
        raise ConfigError("answerer distribution must sum to 1")
    for strategy, _ in answerer_dist:
        if strategy.kind not in _DETERMINISTIC_KINDS:
            raise ConfigError(f"cannot enumerate stochastic strategy {strategy.tag}")
        if strategy.kind is StrategyKind.ALTERNATE_GOAL and strategy.decoy is None:
            raise ConfigError("alternate-goal strategy needs a fixed decoy for enumeration")

    layout = FeatureLayout.for_config(config)
    attr = attribute_onehots(config.space)
    truth_yes = truth_table_yes(scene, config.space)
    dummy_rng = np.random.default_rng(0)

    total_j = 0.0
    grad_bias = np.zeros_like(policy.bias)
    grad_weights = np.zeros_like(policy.weights)

    def recurse(
        strategy: AnswerStrategy,
        label: CoopLabel,
        belief: BeliefState,
        asked: np.ndarray,
        turns: tuple[DialogueTurn, ...],
        trace: tuple[BeliefState, ...],
        round_no: int,
        path_prob: float,
        score_bias: np.ndarray,
        score_weights: np.ndarray,
    ) -> None:
        nonlocal total_j, grad_bias, grad_weights
        if round_no > config.max_rounds:
            x = build_features(layout, config.space, scene, turns, trace)
            yhat = guess_object(guesser, x, belief)
            zhat = classify_cooperation(coop, x)
            rho = reward.value(yhat == scene.goal, zhat == label)
            total_j += path_prob * rho
            grad_bias += path_prob * rho * score_bias
            grad_weights += path_prob * rho * score_weights
            return
        psi = policy_features(truth_yes, belief, round_no, config.max_rounds, asked)
        psi[:, 5:] = attr
        pi = softmax(policy_logits(policy, psi))
        mean_psi = pi @ psi
        for j, q in enumerate(config.space):
            if pi[j] <= 0.0:
                continue
            a = answer(strategy, scene, turns, q, dummy_rng)
            new_belief = belief_update(belief, scene, q, a)
            new_asked = asked.copy()
            new_asked[j] = 1.0
            onehot = np.zeros_like(pi)
            onehot[j] = 1.0
            recurse(
                strategy,
                label,
                new_belief,
                new_asked,
                turns + (DialogueTurn(q, a, round_no),),
                trace + (new_belief,),
                round_no + 1,
                path_prob * float(pi[j]),
                score_bias + (onehot - pi),
                score_weights + (psi[j] - mean_psi),
            )

    for strategy, p_strategy in answerer_dist:
        belief0 = uniform_belief(scene.n_objects, config.lie_rate)
        recurse(
            strategy,
            strategy.label,
            belief0,
            np.zeros(config.n_questions),
            (),
            (belief0,),
            1,
            p_strategy,
            np.zeros(config.n_questions),
            np.zeros(policy.weights.shape[0]),
        )
    return total_j, grad_bias, grad_weights


def reinforce_gradient_estimate(
    config: AgentConfig,
    policy: PolicyParams,
    guesser: GuesserParams,
    coop: CoopClassifierParams,
    scene: Scene,
    answerer_dist: list[tuple[AnswerStrategy, float]],
    reward: RewardSpec,
    episodes: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo policy-gradient estimate on a fixed scene.

    Uses the running mean of previous rewards as baseline, which keeps the
    estimator unbiased while cutting its variance; matches the update used by
    :func:`reinforce_train`.
    """
    agent = QuestionAgent(
        config=config,
        policy=policy,
        guesser=guesser,
        coop=coop,
        mode=SelectMode.SAMPLE,
        track_scores=True,
    )
    strategies = [s for s, _ in answerer_dist]
    weights = np.asarray([p for _, p in answerer_dist])
    g_bias = np.zeros_like(policy.bias)
    g_weights = np.zeros_like(policy.weights)
    running_mean = 0.0
    for ep in range(episodes):
        idx = int(rng.choice(len(strategies), p=weights))
        strategy = strategies[idx]
        bound = bind_episode(strategy, scene, rng)
        record, session = rollout_episode(agent, bound, scene, rng, seed=ep)
        rho = reward.value(
            record.object_guess == scene.goal, record.coop_guess == bound.label
        )
        advantage = rho - running_mean
        g_bias += advantage * session.score_bias
        g_weights += advantage * session.score_weights
        running_mean += (rho - running_mean) / (ep + 1)
    return g_bias / episodes, g_weights / episodes
