"""
Command line: ``dnsarsa {run,batch,replay,compare}``.

Every subcommand takes ``--config`` (flat ``key = value`` file) and the
common overrides ``--seed --out --steps --explore-steps --no-learning``.
Exit status is 0 on success and 2 on configuration, parse or numerical
errors (the diagnostic goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import (AlignmentError, ConfigurationError, SimulationDivergence,
                     WeightFileError)
from .experiment import (ExperimentConfig, export_metrics, format_config, load_config,
                         run_batch, run_experiment, periodic_suffix, target_period)
from .weights import load_weights, save_weights


def _common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--steps", type=int, help="total steps")
    p.add_argument("--explore-steps", type=int, help="steps with exploration noise")
    p.add_argument("--no-learning", action="store_true", help="freeze the weights")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="dnsarsa", description=__doc__.splitlines()[1])
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="one closed-loop run")
    _common(p)
    p = sub.add_parser("batch", help="several seeds")
    _common(p)
    p.add_argument("--seeds", type=int, default=13, help="number of seeds (default 13)")
    p.add_argument("--workers", type=int, help="parallel processes (default: CPU count)")
    p = sub.add_parser("replay", help="load weights, run without exploration")
    _common(p)
    p.add_argument("--weights", required=True)
    p = sub.add_parser("compare", help="DN vs tabular SARSA(lambda) report")
    _common(p)
    p.add_argument("--scripted", type=int, metavar="N",
                   help="use the scripted 3-behavior harness with N transitions")
    return ap


def config_from_args(args, **extra) -> ExperimentConfig:
    over = dict(seed=args.seed, total_steps=args.steps, exploration_steps=args.explore_steps,
                out_dir=args.out)
    if args.no_learning:
        over["learning"] = False
    over.update(extra)
    return load_config(args.config, **over)


def _out_dir(cfg, default):
    out = Path(cfg.out_dir or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    cfg = config_from_args(args)
    log = run_experiment(cfg)
    out = _out_dir(cfg, f"run_seed{cfg.seed}")
    paths = export_metrics(log, out)
    save_weights(log.W_final, out / "weights.txt")
    (out / "config.txt").write_text(format_config(cfg))
    print(f"seed {cfg.seed}: {log.n_steps} steps, {len(log.onset_step)} completions, "
          f"discovery step {log.discovery_step()}, total reward {log.r.sum() * cfg.dt:g}")
    print(f"wrote {', '.join(str(p) for p in paths.values())}, {out / 'weights.txt'}")
    return 0


def cmd_batch(args):
    cfg = config_from_args(args)
    res = run_batch(cfg, args.seeds, workers=args.workers)
    out = _out_dir(cfg, "batch")
    summary = {
        "seeds": [r.seed for r in res.runs],
        "discovery_step": {str(r.seed): r.discovery_step for r in res.runs},
        "exploration_completions": {str(r.seed): r.exploration_completions for r in res.runs},
        "converged": {str(r.seed): r.converged for r in res.runs},
        "failures": {str(k): v for k, v in res.failures.items()},
    }
    (out / "batch_summary.json").write_text(json.dumps(summary, indent=1))
    curve = res.mean_cumulative_reward()
    np.savetxt(out / "mean_cumulative_reward.csv",
               np.column_stack([np.arange(len(curve)) * cfg.dt, curve]),
               delimiter=",", header="t,cumulative_reward", comments="")
    td = res.mean_td_curve()
    np.savetxt(out / "mean_td.csv", np.column_stack([np.arange(len(td)), td]),
               delimiter=",", header="bin,mean_abs_td", comments="")
    for r in res.runs:
        state = r.error or ("converged" if r.converged else "not converged")
        print(f"seed {r.seed}: discovery {r.discovery_step}, "
              f"{r.exploration_completions} exploration completions, {state}")
    print(f"wrote {out}")
    return 0 if not res.failures else 1


def cmd_replay(args):
    cfg = config_from_args(args)
    W = load_weights(args.weights, expect_k=cfg.K)
    if args.explore_steps is None:
        cfg.exploration_steps = 0
    log = run_experiment(cfg, W)
    out = _out_dir(cfg, f"replay_seed{cfg.seed}")
    export_metrics(log, out)
    n = periodic_suffix(log.completions(), cfg.target_seq)
    print(f"seed {cfg.seed}: completions {log.completions()[-12:]}, "
          f"{n // len(target_period(cfg.target_seq))} full target cycles at the end, "
          f"reward episodes {len(log.reward_episode_steps())}")
    return 0


def cmd_compare(args):
    from .oracle import compare
    if args.scripted:
        from .scripted import random_walk, scripted_run
        cfg = config_from_args(args)
        seq = random_walk(3, args.scripted + 2, np.random.default_rng(cfg.seed))
        log = scripted_run(seq, k=3, lp=cfg.learner_params())
    else:
        log = run_experiment(config_from_args(args))
    report = compare(log, gamma=log.config.gamma)
    text = report.table()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.txt").write_text(text)
    sys.stdout.write("\n".join(text.splitlines()[-2:]) + "\n")
    return 0


COMMANDS = {"run": cmd_run, "batch": cmd_batch, "replay": cmd_replay, "compare": cmd_compare}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigurationError, WeightFileError, AlignmentError, SimulationDivergence,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
