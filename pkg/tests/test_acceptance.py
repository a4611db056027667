"""Acceptance criteria 1-10, one test each, with a pass/fail line per criterion."""

from __future__ import annotations

import json
import math
import random
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import ndimage, stats

from arena.audit import audit_gold, audit_items, check_invariants
from arena.cli import main as arena_main
from arena.combat import dominance_multiplier
from arena.entities import CONTENTION_REASONS, AttackStyle
from arena.policies import resolve_policy
from arena.rating import Rating, rate_match, ranks_from_totals
from arena.replay import read_replay, replay_from_state, write_replay
from arena.scoring import TeamOutcome, match_score, score_outcomes, survival_fractions
from arena.sim import fog_damage, fog_rectangle, reset, step
from arena.tournament import (
    CampaignConfig,
    Cadence,
    MatchSpec,
    ResultStore,
    load_pool,
    policy_seed,
    build_configs,
    pve_eval,
    pvp_schedule,
    resimulate,
    run_campaign,
    run_match,
    stage_gate,
)

from conftest import ACCEPTANCE
from test_rating import _oracle_two
from test_scoring import _oracle

BASELINES = ("mixture", "combat", "reckless", "ruthless", "coward")
N_BASELINE_MATCHES = 100

# item uid transitions that make up a valid lifecycle
VALID_TRANSITIONS = {
    ("created", "inventory"), ("created", "listing"),
    ("inventory", "equipped"), ("equipped", "inventory"),
    ("inventory", "listing"), ("listing", "inventory"),
    ("inventory", "consumed"), ("equipped", "consumed"),
    ("inventory", "destroyed"), ("equipped", "destroyed"), ("listing", "destroyed"),
    ("inventory", "emptied"), ("listing", "merged"),
}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def _mixed_lineup(seed: int) -> list[str]:
    rng = random.Random(f"lineup:{seed}")
    return [rng.choice(BASELINES) for _ in range(16)]


@pytest.fixture(scope="session")
def baseline_matches(tmp_path_factory):
    """100 seeded full matches of mixed baseline teams, checked tick by tick."""
    out = tmp_path_factory.mktemp("baseline_replays")
    results = []
    for seed in range(N_BASELINE_MATCHES):
        lineup = _mixed_lineup(seed)
        mcfg, scfg = build_configs(seed)
        pols = [resolve_policy(p) for p in lineup]
        t0 = time.perf_counter()
        state, obs = reset(seed, mcfg, scfg)
        violations = check_invariants(state)
        masks = Counter()
        prev = state.fog
        while not state.done:
            acts = [pols[k].act(obs[k], policy_seed(seed, k, state.tick)) for k in range(16)]
            state, obs, events = step(state, acts)
            violations += check_invariants(state, prev)
            prev = state.fog
            masks.update(e["reason"] for e in events if e["e"] == "Masked")
        items = audit_items(state.events(), state)
        gold = audit_gold(state.events(), state)
        score = match_score(state)
        write_replay(out / f"base{seed:03d}.jsonl.gz", replay_from_state(state, lineup, score))
        results.append({
            "seed": seed, "violations": violations, "items": items, "gold": gold, "masks": masks,
            "minted": state.gold_minted, "held": sum(a.gold for a in state.agents),
            "seconds": time.perf_counter() - t0, "ticks": state.tick,
        })
    return out, results


# 1 -------------------------------------------------------------------------------------

def test_criterion_01_scoring_oracle():
    outs = [TeamOutcome(0, 5, 1281, 2, 1.5)] + [TeamOutcome(t, 0, 100 + t, 0, 1.0) for t in range(1, 16)]
    worked = score_outcomes(outs).teams[0].total
    rng = random.Random(1)
    bad = 0
    for _ in range(1000):
        raw = []
        for t in range(16):
            death = rng.randint(0, 12)
            surv = rng.randint(1, 8) if death == 12 else 0
            raw.append(TeamOutcome(t, rng.randint(0, 15), death, surv, rng.randint(8, 11) / 8))
        pts, ranks = _oracle(raw)
        score = score_outcomes(raw)
        exact = [Fraction(x).limit_denominator(10**6) for x in score.totals]
        if sum(survival_fractions(raw)) != 32 or exact != pts or score.ranks != ranks:
            bad += 1
    report(1, worked == 12.5 and bad == 0, f"worked example {worked}, {bad}/1000 fuzzed sets disagree with brute force")


# 2 -------------------------------------------------------------------------------------

def test_criterion_02_dominance_table():
    S = AttackStyle
    table = {(a, d): dominance_multiplier(a, d) for a in S for d in S}
    wins = {k for k, v in table.items() if v == 1.5}
    cycle = {(S.MELEE, S.RANGE), (S.RANGE, S.MAGE), (S.MAGE, S.MELEE)}
    others_one = all(v == 1.0 for k, v in table.items() if k not in wins)
    report(2, wins == cycle and others_one, f"1.5 entries {sorted((a.name, d.name) for a, d in wins)}")


# 3 -------------------------------------------------------------------------------------

def _safe_mask(tick: int, size: int = 128):
    # shrink one ring per 16 ticks from tick 240; never past the center tile
    k = 0 if tick < 240 else 1 + (tick - 240) // 16
    lo, hi = k, size - 1 - k
    if lo > hi:
        lo = hi = size // 2
    mask = np.zeros((size, size), dtype=bool)
    mask[lo:hi + 1, lo:hi + 1] = True
    return mask


def test_criterion_03_fog_law():
    rng = random.Random(3)
    cache = {}
    bad = 0
    inside_hits = 0
    for _ in range(10_000):
        t = rng.randint(0, 1400)
        pos = (rng.randrange(128), rng.randrange(128))
        if t not in cache:
            mask = _safe_mask(t)
            dist = ndimage.distance_transform_cdt(~mask, metric="chessboard")
            rr, cc = np.nonzero(mask)
            cache[t] = (mask, dist, (rr.min(), rr.max()))
        mask, dist, (lo, hi) = cache[t]
        rect = fog_rectangle(t, 128)
        if rect != (lo, hi) or fog_damage(pos, rect) != dist[pos]:
            bad += 1
        if mask[pos]:
            inside_hits += fog_damage(pos, rect) != 0
    minimal = all(fog_rectangle(t, 128) == (64, 64) for t in range(1264, 1400))
    report(3, bad == 0 and inside_hits == 0 and minimal,
           f"{bad}/10000 mismatches, {inside_hits} damaged inside, minimal from 1264: {minimal}")


# 4 -------------------------------------------------------------------------------------

def test_criterion_04_determinism(tmp_path):
    slots = tuple(BASELINES[k % 5] for k in range(16))
    spec = MatchSpec("det", 4242, slots, 17)
    a = run_match(spec, tmp_path / "a")
    b = run_match(spec, tmp_path / "b")
    bytes_a = open(a.replay, "rb").read()
    bytes_b = open(b.replay, "rb").read()
    rep = read_replay(a.replay)
    h, score = resimulate(rep)
    ok = (bytes_a == bytes_b and a.state_hash == b.state_hash and h == a.state_hash
          and score.to_dict() == a.score and rep.score().to_dict() == a.score
          and rep.header["sim_cfg"]["horizon"] == 1280)
    report(4, ok, f"replays identical: {bytes_a == bytes_b}, hash {a.state_hash[:12]}, resim score match: {score.to_dict() == a.score}")


# 5 -------------------------------------------------------------------------------------

def test_criterion_05_conservation(baseline_matches):
    _, results = baseline_matches
    gold_bad = [r["seed"] for r in results if r["gold"] or r["minted"] != r["held"]]
    item_bad = [r["seed"] for r in results if r["items"].violations]
    trans = Counter()
    for r in results:
        trans.update(r["items"].transitions)
    illegal = set(trans) - VALID_TRANSITIONS
    minted = sum(r["minted"] for r in results)
    report(5, not gold_bad and not item_bad and not illegal and len(results) == N_BASELINE_MATCHES,
           f"{len(results)} matches, {minted} gold minted, gold errors in {gold_bad[:5]}, "
           f"item errors in {item_bad[:5]}, illegal transitions {sorted(illegal)}")


# 6 -------------------------------------------------------------------------------------

def test_criterion_06_trueskill():
    rng = random.Random(6)
    worst = 0.0
    for _ in range(200):
        a = Rating(rng.uniform(0, 50), rng.uniform(0.5, 9))
        b = Rating(rng.uniform(0, 50), rng.uniform(0.5, 9))
        got = rate_match([a, b], [1, 2])
        for g, w in zip(got, _oracle_two(a, b, "win")):
            worst = max(worst, abs(g.mu - w.mu), abs(g.sigma - w.sigma))

    league_rng = random.Random(2022)
    strengths = list(np.linspace(10, 40, 16))
    league_rng.shuffle(strengths)
    ratings = [Rating(25, 25 / 3)] * 16
    sigma_ok = True
    tau_param = 25 / 300
    for _ in range(1000):
        perf = [s + league_rng.gauss(0, 25 / 6) for s in strengths]
        new = rate_match(ratings, ranks_from_totals(perf))
        sigma_ok &= all(n.sigma <= math.sqrt(o.sigma ** 2 + tau_param ** 2) + 1e-12 for o, n in zip(ratings, new))
        ratings = new
    tau = stats.kendalltau(strengths, [r.mu for r in ratings]).statistic
    report(6, worst < 1e-3 and tau >= 0.9 and sigma_ok,
           f"max |oracle diff| {worst:.2e}, league Kendall tau {tau:.3f}, sigma bound held: {sigma_ok}")


# 7 -------------------------------------------------------------------------------------

TINY_MAP = {"size": 64, "npc_count": 4}
TINY_SIM = {"horizon": 4}


def _pool(tmp_path, n):
    d = tmp_path / f"pool{n}"
    d.mkdir()
    for i in range(n):
        (d / f"sub{i:02d}.json").write_text(json.dumps({"policy": BASELINES[i % 5]}))
    return load_pool(d)


def _per_submission(store: ResultStore, pool) -> dict[str, int]:
    ident_to_sub = {v: k for k, v in pool.items()}
    counts = Counter()
    for rec in store.records.values():
        for sid in {ident_to_sub[i] for i in rec.spec["slots"]}:
            counts[sid] += 1
    return counts


def test_criterion_07_evaluation_pipeline(tmp_path):
    pve = pve_eval("mixture", stage=1, rounds=10, seed=7)
    pve_ok = len(pve.records) == 10 and 0.0 <= pve.top1_ratio <= 1.0
    gate_ok = stage_gate(0.4) and stage_gate(0.9) and not stage_gate(0.39) and not stage_gate(0.0)

    pool = _pool(tmp_path, 16)
    counts = {}
    dup = {}
    for cadence, need in ((Cadence.DAILY, 100), (Cadence.WEEKLY, 1000)):
        cfg = CampaignConfig(store=tmp_path / cadence.value, map_cfg=TINY_MAP, sim_cfg=TINY_SIM)
        # crash part way, then resume
        run_campaign(cfg, cadence, pool, stop_after=need // 3)
        run_campaign(cfg, cadence, pool)
        store = ResultStore(cfg.store)
        per = _per_submission(store, pool)
        counts[cadence.value] = min(per.values())
        dup[cadence.value] = len(store.applied) - len(set(store.applied))
        n_specs = len(pvp_schedule(list(pool.values()), need, cfg.seed, cfg.map_cfg, cfg.sim_cfg,
                                   prefix=cadence.value))
        dup[cadence.value] += abs(len(store.applied) - n_specs)
    ok = (pve_ok and gate_ok and counts["daily"] >= 100 and counts["weekly"] >= 1000
          and not any(dup.values()))
    report(7, ok, f"PvE {len(pve.records)} matches, Top-1 {pve.top1_ratio:.2f} (eligible {pve.eligible}); "
                  f"min matches/submission daily {counts['daily']} weekly {counts['weekly']}; "
                  f"double/missed ratings {dup}")


# 8 -------------------------------------------------------------------------------------

def test_criterion_08_invariants(baseline_matches):
    _, results = baseline_matches
    viol = [(r["seed"], v) for r in results for v in r["violations"]]
    masks = Counter()
    for r in results:
        masks.update(r["masks"])
    validation = {k: v for k, v in masks.items() if k not in CONTENTION_REASONS}
    ticks = sum(r["ticks"] for r in results)
    report(8, not viol and not validation and len(results) == N_BASELINE_MATCHES,
           f"{len(results)} matches / {ticks} ticks, {len(viol)} violations {viol[:3]}, "
           f"masks {dict(masks)}")


# 9 -------------------------------------------------------------------------------------

def test_criterion_09_throughput(tmp_path):
    t0 = time.perf_counter()
    rec = run_match(MatchSpec("speed", 99, tuple(BASELINES[k % 5] for k in range(16)), 5))
    single = time.perf_counter() - t0

    d = tmp_path / "pool"
    d.mkdir()
    for i in range(16):
        (d / f"s{i:02d}.json").write_text(json.dumps({"policy": BASELINES[i % 5]}))
    cfg = CampaignConfig(store=tmp_path / "daily", parallelism=8, daily_matches=100)
    t0 = time.perf_counter()
    run_campaign(cfg, Cadence.DAILY, load_pool(d))
    campaign = time.perf_counter() - t0
    n = len(ResultStore(cfg.store).records)
    report(9, rec.ok and single <= 10 and campaign <= 600 and n == 100,
           f"single match {single:.1f}s ({rec.score and 'ok'}), {n}-match daily campaign at parallelism 8 "
           f"{campaign:.0f}s")


# 10 ------------------------------------------------------------------------------------

def test_criterion_10_analytics(baseline_matches, tmp_path, capsys):
    replays, _ = baseline_matches
    out = tmp_path / "csv"
    code = arena_main(["stats", "--replays", str(replays), "--out", str(out)])
    capsys.readouterr()
    families = sorted(p.stem for p in out.glob("*.csv"))
    expected = sorted(["item_distribution", "item_quantity", "buy_sell_ratio", "price_grid", "team_radar"])
    levels, prices = [], []
    weapons = {"sword", "bow", "wand"}
    with (out / "price_grid.csv").open() as fh:
        next(fh)
        for line in fh:
            kind, level, qty, mean = line.strip().split(",")
            if kind in weapons:
                for _ in range(int(qty)):  # one point per listing
                    levels.append(int(level))
                    prices.append(float(mean))
    rho = stats.spearmanr(levels, prices).statistic if len(set(levels)) > 1 else float("nan")
    report(10, code == 0 and families == expected and rho > 0,
           f"{len(families)} CSV families, {len(levels)} weapon listings over "
           f"{len(set(levels))} levels, Spearman rho {rho:.3f}")
