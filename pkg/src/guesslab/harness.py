"""Experiment runner: the cooperative-fraction sweep and its CSV outputs.

One experiment crosses a grid of non-cooperation probabilities with five
question-player strategies: RL fine-tuned for cooperation detection only, for
object identification only, for an even mixture of both, no RL at all (the
supervised-pretrained policy), and a random-guess floor. Every cell is
evaluated against the same fixed scene set with the same per-episode
answer-player assignments, so differences between strategies are differences
in dialogue, not in luck.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import (
    AgentConfig,
    CoopClassifierParams,
    QuestionAgent,
    SelectMode,
    zero_policy,
)
from .answerers import StrategyPool, bind_episode, sample_answerer
from .errors import ConfigError
from .game import CoopLabel, GameRecord, Scene, SceneConfig, generate_scene
from .theory import LabeledSample
from .training import (
    PretrainResult,
    RewardSpec,
    TrainHyper,
    pretrain_supervised,
    reinforce_train,
    rollout_episode,
)

STRATEGY_NAMES = ("coop", "object", "mixed:0.5", "none", "random")


def default_experiment_pool() -> StrategyPool:
    """NC pool for the sweep: spam weighted at one half, matching its
    prominence among observed human deception, contradiction and
    alternate-goal splitting the rest."""
    from .answerers import alternate_goal, contradict, spam
    from .game import Answer

    return StrategyPool(
        non_cooperative=(spam(Answer.NO), contradict(), alternate_goal()),
        weights=(0.5, 0.25, 0.25),
    )


def parse_strategy(name: str) -> RewardSpec | None:
    """Map a strategy flag to its reward, or None for the untrained ones."""
    if name == "coop":
        return RewardSpec("coop")
    if name == "object":
        return RewardSpec("object")
    if name.startswith("mixed"):
        lam = 0.5
        if ":" in name:
            lam = float(name.split(":", 1)[1])
        return RewardSpec("mixed", lam=lam)
    if name in ("none", "random"):
        return None
    raise ConfigError(f"unknown strategy {name!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    p_nc_grid: tuple[float, ...] = (0.3, 0.5, 0.7)
    strategies: tuple[str, ...] = STRATEGY_NAMES
    seeds: tuple[int, ...] = (0, 1, 2)
    scene: SceneConfig = field(default_factory=lambda: SceneConfig(n_objects=8))
    max_rounds: int = 5
    lie_rate: float = 0.05
    train_episodes: int = 8000
    eval_episodes: int = 1500
    pretrain_games: int = 20
    pretrain_epochs: int = 2
    hyper: TrainHyper = field(default_factory=TrainHyper)
    eval_seed: int = 990

    def __post_init__(self) -> None:
        if not self.p_nc_grid or not all(0.0 < p < 1.0 for p in self.p_nc_grid):
            raise ConfigError("p_nc grid values must lie in (0, 1)")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for s in self.strategies:
            parse_strategy(s)

    def agent_config(self) -> AgentConfig:
        return AgentConfig(scene=self.scene, max_rounds=self.max_rounds, lie_rate=self.lie_rate)


@dataclass
class EvalResult:
    """Per-episode outcomes of one evaluation pass."""

    y: np.ndarray
    y_hat: np.ndarray
    z: np.ndarray  # 1 for NC
    z_hat: np.ndarray
    records: list[GameRecord] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.y)

    @property
    def oer_all(self) -> float:
        return float(np.mean(self.y_hat != self.y))

    def oer_cond(self, nc: bool) -> float:
        mask = self.z == (1 if nc else 0)
        if not mask.any():
            raise ConfigError("no evaluation episodes with the requested label")
        return float(np.mean(self.y_hat[mask] != self.y[mask]))

    @property
    def cer(self) -> float:
        return float(np.mean(self.z_hat != self.z))

    @property
    def nc_fraction(self) -> float:
        return float(np.mean(self.z))

    @property
    def mean_object_reward(self) -> float:
        return float(np.mean(self.y_hat == self.y))

    @property
    def mean_coop_reward(self) -> float:
        return float(np.mean(self.z_hat == self.z))

    def to_labeled_sample(self, tag: str = "") -> tuple[LabeledSample, dict]:
        """The evaluation episodes as an abstract labeled sample, with lookup
        hypotheses reproducing the agent's recorded guesses.

        Each point is (tag, episode index), so samples from different runs
        can share one hypothesis: merge the per-run lookups with
        :func:`merge_hypotheses` and the same callable is total on both.
        """
        xs = tuple((tag, i) for i in range(self.m))
        ys = tuple(int(v) for v in self.y)
        zs = tuple(CoopLabel.NC if v else CoopLabel.CP for v in self.z)
        sample = LabeledSample(xs=xs, ys=ys, zs=zs)
        y_hat = self.y_hat.copy()
        z_hat = self.z_hat.copy()
        hyps = {
            "o": lambda x: int(y_hat[x[1]]),
            "c": lambda x: CoopLabel.NC if z_hat[x[1]] else CoopLabel.CP,
        }
        return sample, hyps


def merge_hypotheses(per_tag: dict[str, dict], which: str = "o"):
    """One hypothesis total on the union of tagged samples: dispatches each
    point (tag, index) to that run's recorded guess."""

    def hypothesis(x):
        return per_tag[x[0]][which](x)

    return hypothesis


def make_eval_scenes(config: SceneConfig, n: int, seed: int) -> list[Scene]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7001]))
    return [generate_scene(config, rng) for _ in range(n)]


def evaluate_policy(
    agent: QuestionAgent,
    scenes: list[Scene],
    p_nc: float,
    pool: StrategyPool,
    assign_seed: int,
    random_guess: bool = False,
    keep_records: bool = False,
) -> EvalResult:
    """Evaluate one agent on a fixed scene set.

    The answer-player draw for episode i depends only on ``assign_seed`` and
    i, never on the agent, so different agents face identical opponents; this
    is also what makes the realized NC fraction a pure function of the cell,
    not of the strategy under test.
    """
    y, y_hat, z, z_hat = [], [], [], []
    records: list[GameRecord] = []
    for i, scene in enumerate(scenes):
        assign_rng = np.random.default_rng(np.random.SeedSequence([assign_seed, i, 11]))
        strategy, label = sample_answerer(p_nc, pool, assign_rng)
        dialog_rng = np.random.default_rng(np.random.SeedSequence([assign_seed, i, 23]))
        bound = bind_episode(strategy, scene, dialog_rng)
        record, _ = rollout_episode(agent, bound, scene, dialog_rng, seed=i)
        if random_guess:
            guess_rng = np.random.default_rng(np.random.SeedSequence([assign_seed, i, 31]))
            yhat_i = int(guess_rng.integers(scene.n_objects))
            zhat_i = int(guess_rng.integers(2))
        else:
            yhat_i = record.object_guess
            zhat_i = 1 if record.coop_guess is CoopLabel.NC else 0
        y.append(scene.goal)
        y_hat.append(yhat_i)
        z.append(1 if label is CoopLabel.NC else 0)
        z_hat.append(zhat_i)
        if keep_records:
            records.append(record)
    return EvalResult(
        y=np.asarray(y),
        y_hat=np.asarray(y_hat),
        z=np.asarray(z),
        z_hat=np.asarray(z_hat),
        records=records,
    )


@dataclass
class CellResult:
    p_nc: float
    strategy: str
    seed: int
    n_eval: int
    oer_all: float
    oer_cp: float
    oer_nc: float
    cer: float
    nc_fraction: float
    mean_train_reward: float | None

    def to_row(self) -> dict:
        return {
            "p_nc": self.p_nc,
            "pct_cooperative": round(1.0 - self.p_nc, 10),
            "strategy": self.strategy,
            "seed": self.seed,
            "n_eval": self.n_eval,
            "oer_all": self.oer_all,
            "oer_cp": self.oer_cp,
            "oer_nc": self.oer_nc,
            "cer": self.cer,
            "nc_fraction": self.nc_fraction,
            "mean_train_reward": "" if self.mean_train_reward is None else self.mean_train_reward,
        }


RESULT_COLUMNS = (
    "p_nc",
    "pct_cooperative",
    "strategy",
    "seed",
    "n_eval",
    "oer_all",
    "oer_cp",
    "oer_nc",
    "cer",
    "nc_fraction",
    "mean_train_reward",
)


def run_experiment(
    cfg: ExperimentConfig,
    pool: StrategyPool | None = None,
    progress=None,
) -> list[CellResult]:
    """Run the full sweep and return one result row per
    (p_nc, strategy, seed) cell."""
    pool = pool or default_experiment_pool()
    agent_cfg = cfg.agent_config()
    eval_scenes = make_eval_scenes(cfg.scene, cfg.eval_episodes, cfg.eval_seed)

    pretrained: dict[int, PretrainResult] = {}
    for seed in cfg.seeds:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
        pretrained[seed] = pretrain_supervised(
            agent_cfg, cfg.pretrain_games, rng, hyper={"epochs": cfg.pretrain_epochs}
        )

    results: list[CellResult] = []
    for p_nc in cfg.p_nc_grid:
        p_key = int(round(p_nc * 1000))
        for strategy_name in cfg.strategies:
            reward = parse_strategy(strategy_name)
            for seed in cfg.seeds:
                base = pretrained[seed]
                agent = QuestionAgent(
                    config=agent_cfg,
                    policy=base.policy.copy(),
                    guesser=base.guesser,
                    coop=CoopClassifierParams(
                        weights=np.zeros(QuestionAgent.fresh(agent_cfg).layout.dim)
                    ),
                    mode=SelectMode.SAMPLE,
                )
                mean_train_reward = None
                if strategy_name == "random":
                    eval_agent = agent.with_params(policy=zero_policy(agent_cfg.n_questions))
                elif strategy_name == "none":
                    train_rng = np.random.default_rng(
                        np.random.SeedSequence([seed, p_key, 301])
                    )
                    trained = reinforce_train(
                        agent,
                        RewardSpec("object"),
                        p_nc,
                        cfg.train_episodes,
                        train_rng,
                        hyper=TrainHyper(
                            policy_lr=0.0,
                            coop_lr=cfg.hyper.coop_lr,
                            epochs=cfg.hyper.epochs,
                            lr_decay=cfg.hyper.lr_decay,
                        ),
                        pool=pool,
                    )
                    mean_train_reward = trained.curve[-1]["mean_reward"]
                    eval_agent = agent.with_params(policy=trained.policy, coop=trained.coop)
                else:
                    train_rng = np.random.default_rng(
                        np.random.SeedSequence([seed, p_key, 301])
                    )
                    trained = reinforce_train(
                        agent,
                        reward,
                        p_nc,
                        cfg.train_episodes,
                        train_rng,
                        hyper=cfg.hyper,
                        pool=pool,
                    )
                    mean_train_reward = trained.curve[-1]["mean_reward"]
                    eval_agent = agent.with_params(policy=trained.policy, coop=trained.coop)

                ev = evaluate_policy(
                    eval_agent,
                    eval_scenes,
                    p_nc,
                    pool,
                    assign_seed=int(p_key * 1000 + seed),
                    random_guess=(strategy_name == "random"),
                )
                results.append(
                    CellResult(
                        p_nc=p_nc,
                        strategy=strategy_name,
                        seed=seed,
                        n_eval=ev.m,
                        oer_all=ev.oer_all,
                        oer_cp=ev.oer_cond(nc=False),
                        oer_nc=ev.oer_cond(nc=True),
                        cer=ev.cer,
                        nc_fraction=ev.nc_fraction,
                        mean_train_reward=mean_train_reward,
                    )
                )
                if progress is not None:
                    progress(results[-1])
    return results


def results_to_csv(results: list[CellResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for cell in results:
        writer.writerow(cell.to_row())
    return buf.getvalue()


PLOT_METRICS = ("oer_all", "oer_cp", "oer_nc", "cer")


def emit_plot_data(results: list[CellResult], out_dir) -> list[Path]:
    """One CSV per metric with (pct_cooperative, strategy, mean, stderr over
    seeds); the stderr column is left empty with a single seed rather than
    pretending the spread is zero."""
    if not results:
        raise ConfigError("no results to aggregate")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in PLOT_METRICS:
        groups: dict[tuple[float, str], list[float]] = {}
        for cell in results:
            groups.setdefault((cell.p_nc, cell.strategy), []).append(getattr(cell, metric))
        path = out_dir / f"{metric}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["pct_cooperative", "strategy", "mean", "stderr"])
            for (p_nc, strategy), values in sorted(groups.items()):
                mean = float(np.mean(values))
                if len(values) > 1:
                    stderr = float(np.std(values, ddof=1) / np.sqrt(len(values)))
                    writer.writerow([round(1.0 - p_nc, 10), strategy, mean, stderr])
                else:
                    writer.writerow([round(1.0 - p_nc, 10), strategy, mean, ""])
        written.append(path)
    return written


def aggregate_metric(
    results: list[CellResult], metric: str
) -> dict[tuple[float, str], float]:
    """Seed-mean of one metric per (p_nc, strategy); the independent
    aggregation used to cross-check the plot CSVs."""
    sums: dict[tuple[float, str], list[float]] = {}
    for cell in results:
        sums.setdefault((cell.p_nc, cell.strategy), []).append(getattr(cell, metric))
    return {key: sum(v) / len(v) for key, v in sums.items()}
