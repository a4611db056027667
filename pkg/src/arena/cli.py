"""Command line entry point: ``arena sim|pve|pvp|stats|verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_overrides
from .replay import read_replay, replay_paths, write_replay
from .stats import compute_stats, emit_csv
from .tournament import (
    CampaignConfig,
    Cadence,
    load_pool,
    pve_eval,
    resimulate,
    run_campaign,
    simulate_to_replay,
)
from .worldgen import N_TEAMS


def _cmd_sim(args) -> int:
    policies = list(args.policies)
    if len(policies) == 1:
        policies *= N_TEAMS
    if len(policies) != N_TEAMS:
        print(f"--policies needs 1 or {N_TEAMS} identifiers, got {len(policies)}", file=sys.stderr)
        return 2
    map_cfg, sim_cfg = load_overrides(args.config)
    state, score, rep = simulate_to_replay(args.seed, policies, map_cfg, sim_cfg)
    if args.replay:
        write_replay(args.replay, rep)
    out = {
        "seed": args.seed, "ticks": state.tick, "state_hash": state.state_hash(),
        "teams": [dict(team=t, policy=p, **s.to_dict()) for t, (p, s) in enumerate(zip(policies, score.teams))],
    }
    print(json.dumps(out, indent=1))
    return 0


def _cmd_pve(args) -> int:
    map_cfg, sim_cfg = load_overrides(args.config)
    rep = pve_eval(args.candidate, args.stage, args.rounds, args.seed, args.replays, args.workers,
                   map_cfg=map_cfg, sim_cfg=sim_cfg)
    print(json.dumps({
        "candidate": rep.candidate, "stage": rep.stage, "matches": len(rep.records), "ranks": rep.ranks,
        "top1_ratio": rep.top1_ratio, "stage2_eligible": rep.eligible,
    }, indent=1))
    return 0


def _cmd_pvp(args) -> int:
    map_cfg, sim_cfg = load_overrides(args.config)
    cfg = CampaignConfig(store=args.out, parallelism=args.workers, seed=args.seed, map_cfg=map_cfg,
                         sim_cfg=sim_cfg, deterministic=not args.completion_order)
    if args.matches:
        cfg.daily_matches = cfg.weekly_matches = args.matches
    rows = run_campaign(cfg, Cadence(args.cadence), load_pool(args.pool))
    for row in rows:
        print(f"{row['submission']:<24} mu={row['mu']:7.3f} sigma={row['sigma']:6.3f} "
              f"score={row['conservative']:7.3f} matches={row['matches']}")
    return 0


def _cmd_stats(args) -> int:
    paths = replay_paths(args.replays)
    if not paths:
        print(f"no replays under {args.replays}", file=sys.stderr)
        return 1
    for p in emit_csv(compute_stats(paths), args.out):
        print(p)
    return 0


def _cmd_verify(args) -> int:
    status = 0
    for path in args.replays:
        rep = read_replay(path)
        ok_score = rep.recompute_score() == rep.score()
        ok_sim = True
        if not args.no_resim:
            h, score = resimulate(rep)
            ok_sim = h == rep.footer["state_hash"] and score == rep.score()
        print(f"{path}: score {'ok' if ok_score else 'MISMATCH'}, resim {'ok' if ok_sim else 'MISMATCH'}")
        status |= not (ok_score and ok_sim)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arena", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sim", help="run one match")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", type=Path)
    s.add_argument("--policies", nargs="+", default=["mixture"])
    s.add_argument("--replay", type=Path)
    s.set_defaults(func=_cmd_sim)

    s = sub.add_parser("pve", help="evaluate a candidate against built-in teams")
    s.add_argument("--stage", type=int, choices=(1, 2), default=1)
    s.add_argument("--candidate", required=True)
    s.add_argument("--rounds", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", type=Path)
    s.add_argument("--replays", type=Path)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=_cmd_pve)

    s = sub.add_parser("pvp", help="run a rated campaign over a submission pool")
    s.add_argument("--pool", type=Path, required=True)
    s.add_argument("--cadence", choices=[c.value for c in Cadence], default="daily")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", type=Path)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--matches", type=int, help="override the cadence's per-submission match count")
    s.add_argument("--completion-order", action="store_true", help="rate in completion order (non-deterministic)")
    s.set_defaults(func=_cmd_pvp)

    s = sub.add_parser("stats", help="aggregate replays into CSV tables")
    s.add_argument("--replays", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=_cmd_stats)

    s = sub.add_parser("verify", help="check replay checksums, scores and re-simulation")
    s.add_argument("replays", nargs="+", type=Path)
    s.add_argument("--no-resim", action="store_true")
    s.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
