"""Command-line entry points.

Subcommands: ``simulate`` (write a game log), ``train`` (pretrain + RL
fine-tune a checkpoint), ``evaluate`` (score a checkpoint, or run the full
strategy sweep with ``--grid``), ``stats`` (corpus statistics), ``verify-theory``
(the bound and concentration batteries), ``serve`` (the human play service).

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .agent import (
    AgentConfig,
    QuestionAgent,
    SelectMode,
    checkpoint_from_json,
    checkpoint_to_json,
)
from .answerers import default_pool
from .corpus import compute_corpus_stats, write_records
from .errors import ConfigError, DataError, GuessLabError
from .game import SceneConfig, generate_scene
from .harness import (
    ExperimentConfig,
    emit_plot_data,
    evaluate_policy,
    make_eval_scenes,
    results_to_csv,
    run_experiment,
)
from .theory import (
    improvement_concentration_check,
    phat_concentration_check,
    run_bound_battery,
    triangle_inequality_exhaustive,
    write_battery_csv,
)
from .training import (
    RewardSpec,
    TrainHyper,
    pretrain_supervised,
    reinforce_train,
    rollout_episode,
)
from .answerers import bind_episode, sample_answerer


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scene-objects", type=int, default=4)
    parser.add_argument("--rounds", type=int, default=5)
    parser.add_argument("--out", type=Path, default=Path("out"))


def _scene_config(args: argparse.Namespace) -> SceneConfig:
    return SceneConfig(n_objects=args.scene_objects)


def _agent_config(args: argparse.Namespace) -> AgentConfig:
    return AgentConfig(scene=_scene_config(args), max_rounds=args.rounds)


def _load_checkpoint(path: Path) -> QuestionAgent:
    try:
        with open(path, encoding="utf-8") as fh:
            return checkpoint_from_json(json.load(fh))
    except FileNotFoundError:
        raise DataError(f"no such checkpoint: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint {path} is not valid JSON: {exc.msg}") from None


def _reward_from_flag(value: str) -> RewardSpec | None:
    if value == "none" or value == "random":
        return None
    if value == "coop":
        return RewardSpec("coop")
    if value == "object":
        return RewardSpec("object")
    if value.startswith("mixed"):
        lam = float(value.split(":", 1)[1]) if ":" in value else 0.5
        return RewardSpec("mixed", lam=lam)
    raise ConfigError(f"unknown reward {value!r}")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _agent_config(args)
    rng = np.random.default_rng(args.seed)
    if args.checkpoint:
        agent = _load_checkpoint(args.checkpoint).with_params(mode=SelectMode.SAMPLE)
        cfg = agent.config
    else:
        agent = QuestionAgent.fresh(cfg, mode=SelectMode.SAMPLE)
    pool = default_pool()
    records = []
    for i in range(args.episodes):
        scene = generate_scene(cfg.scene, rng)
        strategy, _label = sample_answerer(args.p_nc, pool, rng)
        bound = bind_episode(strategy, scene, rng)
        record, _ = rollout_episode(agent, bound, scene, rng, seed=i)
        records.append(record)
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "games.jsonl"
    n = write_records(out_path, records)
    print(f"wrote {n} games to {out_path}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _agent_config(args)
    rng = np.random.default_rng(args.seed)
    pre = pretrain_supervised(cfg, args.pretrain_games, rng)
    agent = QuestionAgent(
        config=cfg,
        policy=pre.policy,
        guesser=pre.guesser,
        coop=QuestionAgent.fresh(cfg).coop,
        mode=SelectMode.SAMPLE,
    )
    reward = _reward_from_flag(args.reward)
    eval_scenes = make_eval_scenes(cfg.scene, 150, args.seed + 7)
    pool = default_pool()

    def eval_hook(epoch: int, policy, coop) -> dict:
        snapshot = agent.with_params(policy=policy.copy(), coop=coop.copy())
        ev = evaluate_policy(snapshot, eval_scenes, args.p_nc, pool, assign_seed=args.seed + epoch)
        return {"oer_eval": ev.oer_all, "cer_eval": ev.cer}

    hyper = TrainHyper(policy_lr=0.0) if reward is None else TrainHyper()
    result = reinforce_train(
        agent,
        reward or RewardSpec("object"),
        args.p_nc,
        args.episodes,
        rng,
        hyper=hyper,
        eval_hook=eval_hook,
    )
    curve_rows = result.curve
    trained = agent.with_params(policy=result.policy, coop=result.coop)
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt_path = args.out / "checkpoint.json"
    with open(ckpt_path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_json(trained, args.seed), fh)
    curve_path = args.out / "curve.csv"
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,mean_reward,oer_eval,cer_eval\n")
        for row in curve_rows:
            fh.write(
                f"{row['epoch']},{row['mean_reward']},{row.get('oer_eval', '')},{row.get('cer_eval', '')}\n"
            )
    print(f"wrote {ckpt_path} and {curve_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    if args.grid:
        grid = tuple(float(v) for v in args.grid.split(","))
        seeds = tuple(int(v) for v in args.seeds.split(","))
        cfg = ExperimentConfig(
            p_nc_grid=grid,
            seeds=seeds,
            scene=_scene_config(args),
            max_rounds=args.rounds,
            train_episodes=args.episodes,
            eval_episodes=args.eval_episodes,
        )
        results = run_experiment(cfg)
        csv_text = results_to_csv(results)
        (args.out / "sweep.csv").write_text(csv_text)
        emit_plot_data(results, args.out / "plots")
        print(f"wrote sweep results for {len(results)} cells to {args.out}")
        return 0
    if not args.checkpoint:
        raise ConfigError("evaluate needs --checkpoint or --grid")
    agent = _load_checkpoint(args.checkpoint).with_params(mode=SelectMode.SAMPLE)
    scenes = make_eval_scenes(agent.config.scene, args.eval_episodes, args.seed)
    ev = evaluate_policy(agent, scenes, args.p_nc, default_pool(), assign_seed=args.seed)
    summary = {
        "n_eval": ev.m,
        "oer_all": ev.oer_all,
        "oer_cp": ev.oer_cond(nc=False),
        "oer_nc": ev.oer_cond(nc=True),
        "cer": ev.cer,
        "nc_fraction": ev.nc_fraction,
    }
    (args.out / "eval.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    fmt = "guesswhat-json" if args.format == "guesswhat-json" else "jsonl"
    stats = compute_corpus_stats(args.corpus, fmt=fmt)
    print(json.dumps(stats.to_json(), indent=2))
    return 0


def cmd_verify_theory(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    ok = True

    battery = run_bound_battery(args.instances, rng)
    write_battery_csv(battery, args.out / "bound_battery.csv")
    line = f"cooperation bound battery: {battery.instances} instances, {battery.violations} violations"
    print(("PASS " if battery.all_hold else "FAIL ") + line)
    ok &= battery.all_hold

    tri = triangle_inequality_exhaustive(3)
    print(("PASS " if tri else "FAIL ") + "triangle inequality, exhaustive 3-label check")
    ok &= tri

    lem = improvement_concentration_check(0.3, 0.1, 200, trials=20000, rng=rng)
    print(
        ("PASS " if lem.within_bound else "FAIL ")
        + f"improvement concentration: freq {lem.violation_freq:.5f} <= bound {lem.bound:.5f} + slack"
    )
    ok &= lem.within_bound

    conc = phat_concentration_check(0.5, 100, 0.3, trials=20000, rng=rng)
    print(
        ("PASS " if conc.within_bound else "FAIL ")
        + f"p_hat concentration: freq {conc.violation_freq:.5f} <= {conc.bound:.5f} + slack"
    )
    ok &= conc.within_bound
    return 0 if ok else 1


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    agent = _load_checkpoint(args.checkpoint)
    app = create_app(
        {"default": agent, args.checkpoint.stem: agent},
        log_path=args.log,
        server_seed=args.seed,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guesslab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="roll out games against the strategy pool")
    _add_common(p_sim)
    p_sim.add_argument("--p-nc", dest="p_nc", type=float, default=0.5)
    p_sim.add_argument("--episodes", type=int, default=100)
    p_sim.add_argument("--checkpoint", type=Path, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="pretrain then RL fine-tune a checkpoint")
    _add_common(p_train)
    p_train.add_argument("--p-nc", dest="p_nc", type=float, default=0.5)
    p_train.add_argument(
        "--reward", default="object", help="coop | object | mixed:<lam> | none | random"
    )
    p_train.add_argument("--episodes", type=int, default=2000)
    p_train.add_argument("--pretrain-games", type=int, default=300)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a checkpoint or run the sweep")
    _add_common(p_eval)
    p_eval.add_argument("--p-nc", dest="p_nc", type=float, default=0.5)
    p_eval.add_argument("--checkpoint", type=Path, default=None)
    p_eval.add_argument("--episodes", type=int, default=2000, help="training episodes per sweep cell")
    p_eval.add_argument("--eval-episodes", type=int, default=400)
    p_eval.add_argument("--grid", default=None, help="comma-separated p_nc grid, e.g. 0.3,0.5,0.7")
    p_eval.add_argument("--seeds", default="0,1,2")
    p_eval.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser("stats", help="corpus statistics")
    p_stats.add_argument("--corpus", type=Path, required=True)
    p_stats.add_argument("--format", choices=["jsonl", "guesswhat-json"], default="jsonl")
    p_stats.set_defaults(func=cmd_stats)

    p_verify = sub.add_parser("verify-theory", help="run the bound and concentration batteries")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--instances", type=int, default=200)
    p_verify.add_argument("--out", type=Path, default=Path("out"))
    p_verify.set_defaults(func=cmd_verify_theory)

    p_serve = sub.add_parser("serve", help="run the human play service")
    p_serve.add_argument("--checkpoint", type=Path, required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--log", type=Path, default=Path("human_games.jsonl"))
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except GuessLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
