"""Single entry point wiring the full workflow.

Subcommands: datagen, pretrain, sft, rlft, eval, serve, cycle-demo, e2e.
Every artifact-producing run writes one run manifest with the full config
snapshot, seeds, and input/output artifact hashes, so runs chain by hash.
Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import presets
from .cycle import cycle_demo
from .evalbench import (EvalSuite, EvalReport, evaluate_dig, evaluate_reach,
                        evaluate_recovery, ood_scenarios)
from .experts import (CollectionError, DatasetReader, collect_demonstrations,
                      make_expert, rollout_success, train_ppo_expert)
from .experts.ppo_expert import PPOExpertConfig
from .nn import (GPTPolicy, GPTPolicyConfig, LSTMPolicy, RNNPolicyConfig,
                 load_checkpoint, save_checkpoint)
from .rlft import RLFTConfig, rlft_run
from .simcore import ConfigError, TaskConfig, sample_task_config
from .train import BCConfig, ReplaySpec, WindowDataset, bc_train, sft

SUITE_TASKS = {"dig": "dig", "abort": "abort_reset", "dump": "dump",
               "move": "move_arm"}


def workspace() -> Path:
    return Path(os.environ.get("EXT_WORKSPACE", "ext_workspace"))


def _hash_path(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for p in sorted(path.rglob("*")):
            if p.is_file():
                h.update(p.name.encode())
                h.update(p.read_bytes())
    elif path.is_file():
        h.update(path.read_bytes())
    else:
        return "missing"
    return h.hexdigest()[:16]


def write_manifest(out: Path, subcommand: str, args: dict,
                   inputs: dict, outputs: dict) -> None:
    out = Path(out)
    target = out / "run_manifest.json" if out.is_dir() else out.with_suffix(".run.json")
    snapshot = {k: v for k, v in args.items()
                if isinstance(v, (str, int, float, bool, list, dict, type(None)))}
    manifest = {
        "subcommand": subcommand,
        "config": snapshot,
        "seed": args.get("seed"),
        "inputs": {k: _hash_path(Path(v)) for k, v in inputs.items()},
        "outputs": {k: _hash_path(Path(v)) for k, v in outputs.items()},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(manifest, indent=2))


# --- subcommands -----------------------------------------------------------

def cmd_datagen(a) -> int:
    expert_ckpt = load_checkpoint(a.expert_ckpt) if a.expert_ckpt else None
    if a.expert == "rl" and expert_ckpt is None:
        print("datagen: --expert rl needs --expert-ckpt (train one with "
              "'ext e2e' or the train_ppo_expert API)", file=sys.stderr)
        return 2
    if a.expert == "teleop" and expert_ckpt is None:
        print("datagen: --expert teleop needs --expert-ckpt for the digging phase",
              file=sys.stderr)
        return 2
    expert = make_expert(a.task, dig_ckpt=expert_ckpt)
    manifest = collect_demonstrations(expert, a.task, a.episodes, a.seed, a.out,
                                      expert_kind=a.expert)
    write_manifest(Path(a.out), "datagen", vars(a),
                   inputs={"expert_ckpt": a.expert_ckpt} if a.expert_ckpt else {},
                   outputs={"dataset": a.out})
    print(f"datagen: stored {manifest['counts']['episodes']} episodes "
          f"({manifest['counts']['steps']} steps) in {a.out}")
    return 0


def cmd_pretrain(a) -> int:
    dirs = [Path(d) for d in a.data.split(",")]
    readers = [DatasetReader(d) for d in dirs]
    cfg = BCConfig.preset(presets.BC_PRESET[a.preset], seed=a.seed)
    if a.steps:
        cfg.steps = a.steps
    if a.arch == "gpt":
        policy = GPTPolicy(GPTPolicyConfig.preset("paper" if a.preset == "paper"
                                                  else "tiny"), seed=a.seed)
    else:
        policy = LSTMPolicy(RNNPolicyConfig.preset("paper" if a.preset == "paper"
                                                   else "tiny"), seed=a.seed)
    dataset = WindowDataset(readers, cfg.context_K)
    prov = {"datasets": {str(d): r.manifest_hash() for d, r in zip(dirs, readers)}}
    ckpt, _curve = bc_train(policy, dataset, cfg, provenance=prov,
                            curve_path=Path(a.out).with_suffix(".curve.csv"))
    save_checkpoint(ckpt, a.out)
    write_manifest(Path(a.out), "pretrain", vars(a),
                   inputs={str(d): str(d) for d in dirs}, outputs={"ckpt": a.out})
    print(f"pretrain: {a.arch} holdout_l1={ckpt.provenance.get('holdout_l1')} -> {a.out}")
    return 0


def cmd_sft(a) -> int:
    base = load_checkpoint(a.ckpt)
    new_readers = [DatasetReader(d) for d in a.data.split(",")]
    replay_readers = [DatasetReader(d) for d in a.replay_data.split(",")] if a.replay_data else []
    counts = {}
    if a.replay:
        for part in a.replay.split(","):
            task, n = part.split("=")
            counts[task] = int(n)
    cfg = BCConfig.preset(presets.BC_PRESET[a.preset], seed=a.seed)
    if a.steps:
        cfg.steps = a.steps
    ckpt, _curve = sft(base, new_readers, replay_readers, ReplaySpec(counts), cfg)
    save_checkpoint(ckpt, a.out)
    write_manifest(Path(a.out), "sft", vars(a), inputs={"base": a.ckpt},
                   outputs={"ckpt": a.out})
    print(f"sft: holdout_l1={ckpt.provenance.get('holdout_l1')} -> {a.out}")
    return 0


def cmd_rlft(a) -> int:
    base = load_checkpoint(a.ckpt)
    env_cfg = json.loads(Path(a.env_config).read_text())
    task = env_cfg.get("task", "dig")
    dist = env_cfg.get("distribution", "ood_stairs")
    factories = ood_scenarios(task)
    preset = presets.RLFT[a.preset]
    cfg = (RLFTConfig.preset(preset) if isinstance(preset, str)
           else RLFTConfig.preset("desk", **preset))
    if a.kl_coef is not None:
        cfg.kl_coef = a.kl_coef
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for s in range(a.seeds):
        cfg.seed = a.seed + s

        def success_eval(ck, factory, seed):
            return rollout_success(ck, factory, env_cfg.get("eval_episodes", 100), seed)

        adapted, summary = rlft_run(base, factories[dist], cfg,
                                    original_factory=factories["train"],
                                    eval_fn=success_eval,
                                    metrics_path=out / f"seed{cfg.seed}.csv")
        save_checkpoint(adapted, out / f"seed{cfg.seed}.ckpt")
        summaries.append(summary)
        print(f"rlft seed {cfg.seed}: adapt {summary.get('adapt_success_pre')} -> "
              f"{summary.get('adapt_success_post')}, original "
              f"{summary.get('original_success_pre')} -> {summary.get('original_success_post')}")
    (out / "summary.json").write_text(json.dumps({
        "distribution": dist, "seeds": a.seeds, "config": cfg.__dict__,
        "runs": summaries}, indent=2))
    write_manifest(out, "rlft", vars(a), inputs={"base": a.ckpt},
                   outputs={"out": str(out)})
    return 0


def cmd_eval(a) -> int:
    ckpt = load_checkpoint(a.ckpt)
    task = SUITE_TASKS[a.suite]
    perturbation = None
    if a.perturb:
        parts = dict(p.split("=") for p in a.perturb.split(","))
        perturbation = {"delay_max": float(parts.get("delay", 0)),
                        "vel_noise_amp": float(parts.get("noise", 0))}
    n = a.episodes or presets.EVAL_SIZES[a.preset][task]
    suite = EvalSuite(task=task, n_configs=n, seed=a.seed,
                      distribution=a.dist, perturbation=perturbation)
    if task == "dig":
        result = evaluate_dig(ckpt, suite)
    elif task == "abort_reset":
        result = evaluate_recovery(ckpt, suite)
    else:
        result = evaluate_reach(ckpt, suite)
    report = EvalReport.from_eval(a.ckpt, suite, result, ckpt.param_hash()[:12])
    report.save(a.out)
    write_manifest(Path(a.out), "eval", vars(a), inputs={"ckpt": a.ckpt},
                   outputs={"report": a.out})
    shown = {k: v for k, v in report.metrics.items() if k != "failure_reasons"}
    print(f"eval {a.suite}/{a.dist}: {shown}")
    return 0


def cmd_serve(a) -> int:
    from .service import serve
    host, port = a.bind.rsplit(":", 1)
    ckpt = load_checkpoint(a.expert_ckpt)
    srv = serve(host, int(port), a.task, ckpt, dataset_dir=a.dataset_dir,
                tick_hz=a.tick_hz, seed=a.seed)
    print(f"serving {a.task} teleop on ws://{host}:{port} (ctrl-c to stop)")
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        srv.stop()
    return 0


def cmd_cycle_demo(a) -> int:
    ckpt = load_checkpoint(a.ckpt)
    stats = cycle_demo(ckpt, n_cycles=a.cycles, seed=a.seed)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cycles.json").write_text(json.dumps(stats, indent=2))
    write_manifest(out, "cycle-demo", vars(a), inputs={"ckpt": a.ckpt},
                   outputs={"out": str(out)})
    print(f"cycle-demo: {stats['n_success']}/{stats['n_cycles']} cycles succeeded, "
          f"mean volume {stats['mean_volume_m3']} m3, "
          f"mean duration {stats['mean_duration_s']} s")
    return 0 if stats["n_success"] * 2 >= stats["n_cycles"] else 3


def cmd_e2e(a) -> int:
    presets.guard_paper(a.preset, a.i_know_this_is_huge)
    ws = workspace() / a.preset
    ws.mkdir(parents=True, exist_ok=True)
    episodes = presets.DATAGEN_EPISODES[a.preset]
    stage = "train-expert"
    try:
        expert_path = ws / "dig_expert.ckpt"
        if not expert_path.exists():
            cfg = PPOExpertConfig.preset("desk", **presets.PPO_EXPERT[a.preset],
                                         seed=a.seed)
            ckpt, _ = train_ppo_expert(lambda s: sample_task_config("dig", s), cfg)
            save_checkpoint(ckpt, expert_path)
        expert = load_checkpoint(expert_path)

        stage = "datagen"
        for task in ("dig", "dump", "move_arm", "abort_reset"):
            out = ws / "data" / task
            if not (out / "manifest.json").exists():
                kind = {"dig": "rl", "dump": "scripted", "move_arm": "scripted",
                        "abort_reset": "teleop"}[task]
                collect_demonstrations(make_expert(task, dig_ckpt=expert), task,
                                       episodes[task], a.seed, out, expert_kind=kind)

        stage = "pretrain"
        ckpt_path = ws / "gpt4task.ckpt"
        if not ckpt_path.exists():
            readers = [DatasetReader(ws / "data" / t)
                       for t in ("dig", "dump", "move_arm", "abort_reset")]
            cfg = BCConfig.preset(presets.BC_PRESET[a.preset], seed=a.seed)
            policy = GPTPolicy(GPTPolicyConfig.preset(
                "paper" if a.preset == "paper" else "tiny"), seed=a.seed)
            ckpt, _ = bc_train(policy, WindowDataset(readers, cfg.context_K), cfg)
            save_checkpoint(ckpt, ckpt_path)

        stage = "eval"
        sizes = presets.EVAL_SIZES[a.preset]
        reports = ws / "reports"
        for suite_name, task in SUITE_TASKS.items():
            args = argparse.Namespace(ckpt=str(ckpt_path), suite=suite_name,
                                      dist="train", perturb=None, seed=a.seed,
                                      episodes=sizes[task], preset=a.preset,
                                      out=str(reports / f"{suite_name}.json"))
            cmd_eval(args)

        stage = "cycle-demo"
        args = argparse.Namespace(ckpt=str(ckpt_path), cycles=presets.CYCLE_DEMO[a.preset],
                                  seed=a.seed, out=str(ws / "cycle_demo"))
        cmd_cycle_demo(args)
    except Exception as e:
        print(f"e2e failed at stage {stage}: {e}", file=sys.stderr)
        raise StageFailure(stage) from e
    write_manifest(ws, "e2e", vars(a), inputs={},
                   outputs={"workspace": str(ws)})
    print(f"e2e: artifacts in {ws}")
    return 0


class StageFailure(RuntimeError):
    pass


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ext", description=__doc__)
    p.add_argument("--config", help="JSON file with default argument values")
    sub = p.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("datagen", help="collect demonstrations")
    d.add_argument("--task", required=True,
                   choices=["dig", "dump", "move_arm", "abort_reset"])
    d.add_argument("--expert", required=True, choices=["rl", "scripted", "teleop"])
    d.add_argument("--episodes", type=int, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.add_argument("--expert-ckpt", dest="expert_ckpt")
    d.set_defaults(fn=cmd_datagen)

    t = sub.add_parser("pretrain", help="behavior-cloning pretraining")
    t.add_argument("--data", required=True, help="comma-separated dataset dirs")
    t.add_argument("--arch", default="gpt", choices=["gpt", "rnn"])
    t.add_argument("--preset", default="tiny", choices=["tiny", "desk", "paper"])
    t.add_argument("--steps", type=int)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_pretrain)

    s = sub.add_parser("sft", help="supervised fine-tuning with replay")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--replay", help="task=count,task=count")
    s.add_argument("--replay-data", dest="replay_data",
                   help="comma-separated pretraining dataset dirs")
    s.add_argument("--preset", default="tiny", choices=["tiny", "desk", "paper"])
    s.add_argument("--steps", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_sft)

    r = sub.add_parser("rlft", help="KL-regularized PPO fine-tuning")
    r.add_argument("--ckpt", required=True)
    r.add_argument("--env-config", dest="env_config", required=True)
    r.add_argument("--preset", default="desk", choices=["tiny", "desk", "paper"])
    r.add_argument("--seeds", type=int, default=3)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--kl-coef", dest="kl_coef", type=float)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_rlft)

    e = sub.add_parser("eval", help="run an evaluation suite")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--suite", required=True, choices=list(SUITE_TASKS))
    e.add_argument("--dist", default="train",
                   choices=["train", "ood_stairs", "ood_soil", "ood_bucket"])
    e.add_argument("--perturb", help="delay=0.75,noise=0.2")
    e.add_argument("--episodes", type=int)
    e.add_argument("--preset", default="tiny", choices=["tiny", "desk", "paper"])
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(fn=cmd_eval)

    v = sub.add_parser("serve", help="teleoperation session server")
    v.add_argument("--bind", default="127.0.0.1:8765")
    v.add_argument("--task", default="abort_reset")
    v.add_argument("--expert-ckpt", dest="expert_ckpt", required=True)
    v.add_argument("--dataset-dir", dest="dataset_dir")
    v.add_argument("--tick-hz", dest="tick_hz", type=float, default=10.0)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(fn=cmd_serve)

    c = sub.add_parser("cycle-demo", help="scripted dig-dump-move cycles")
    c.add_argument("--ckpt", required=True)
    c.add_argument("--cycles", type=int, default=6)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=cmd_cycle_demo)

    z = sub.add_parser("e2e", help="full desk pipeline with fixed seeds")
    z.add_argument("--preset", default="tiny", choices=["tiny", "desk", "paper"])
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--i-know-this-is-huge", action="store_true",
                   dest="i_know_this_is_huge")
    z.set_defaults(fn=cmd_e2e)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, _ = parser.parse_known_args(argv)
    if getattr(args, "config", None):
        overrides = json.loads(Path(args.config).read_text())
        parser.set_defaults(**overrides)
        args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, FileNotFoundError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (StageFailure, CollectionError, RuntimeError) as e:
        print(f"stage failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
