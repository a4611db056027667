from __future__ import annotations

import json

import pytest

from arena.cli import main
from arena.rating import Rating
from arena.tournament import (
    STAGE_BUILTINS,
    CampaignConfig,
    Cadence,
    MatchSpec,
    ResultStore,
    StoreCorrupt,
    appearances,
    load_pool,
    pve_eval,
    pve_schedule,
    pvp_schedule,
    rate_record,
    run_campaign,
    run_match,
    stage_gate,
    verify_record,
)

TINY_MAP = {"size": 64, "npc_count": 4}
TINY_SIM = {"horizon": 6}
SHORT_SIM = {"horizon": 80, "fog_start": 40, "fog_interval": 4}


def _spec(seed=3, slots=None, sim=TINY_SIM):
    slots = slots or ("mixture", "combat") * 8
    return MatchSpec(f"m{seed}", seed, slots, seed + 1, dict(TINY_MAP), dict(sim))


def test_stage_rosters():
    assert STAGE_BUILTINS[1] == ("mixture",) * 8 + ("combat",) * 7
    assert STAGE_BUILTINS[2] == ("reckless",) * 5 + ("ruthless",) * 5 + ("coward",) * 5


def test_team_slots_is_a_permutation():
    spec = _spec()
    slots = spec.team_slots()
    assert sorted(slots) == list(range(16)) and slots == spec.team_slots()
    assert spec.team_policies() == [spec.slots[s] for s in slots]


def test_run_match_is_reproducible(tmp_path):
    a = run_match(_spec(sim=SHORT_SIM), tmp_path / "a")
    b = run_match(_spec(sim=SHORT_SIM), tmp_path / "b")
    assert a.ok and a.state_hash == b.state_hash and a.score == b.score
    with open(a.replay, "rb") as fa, open(b.replay, "rb") as fb:
        assert fa.read() == fb.read()
    assert verify_record(a)


def test_slot_ranks_follow_permutation():
    rec = run_match(_spec(sim=SHORT_SIM))
    ranks = rec.slot_ranks()
    for team, slot in enumerate(rec.team_slots):
        assert ranks[slot] == rec.score["teams"][team]["rank"]


def test_broken_submission_gives_error_record(tmp_path):
    rec = run_match(_spec(slots=(str(tmp_path / "missing.json"),) + ("idle",) * 15))
    assert not rec.ok and "PolicyLoadError" in rec.error and rec.score is None


def test_pve_runs_ten_matches():
    rep = pve_eval("combat", stage=1, rounds=10, seed=1, map_cfg=TINY_MAP, sim_cfg=TINY_SIM)
    assert len(rep.records) == 10 and len(rep.ranks) == 10
    assert rep.top1_ratio == sum(r == 1 for r in rep.ranks) / 10
    assert rep.eligible == (rep.top1_ratio >= 0.4)
    assert all(r.spec["slots"][0] == "combat" for r in rep.records)


def test_pve_schedule_is_seeded():
    a = pve_schedule("x", 2, seed=4)
    assert a == pve_schedule("x", 2, seed=4) and a != pve_schedule("x", 2, seed=5)
    assert all(s.slots[1:] == STAGE_BUILTINS[2] for s in a)
    with pytest.raises(ValueError):
        pve_schedule("x", 3)


@pytest.mark.parametrize("ratio,ok", [(0.4, True), (0.5, True), (0.39, False), (0.0, False)])
def test_stage_gate(ratio, ok):
    assert stage_gate(ratio) is ok


@pytest.mark.parametrize("size,n", [(16, 100), (3, 100), (20, 100), (2, 5)])
def test_pvp_schedule_gives_everyone_enough_matches(size, n):
    pool = [f"s{i}" for i in range(size)]
    specs = pvp_schedule(pool, n, seed=1)
    counts = {}
    for spec in specs:
        assert len(spec.slots) == 16
        if size >= 16:
            assert len(set(spec.slots)) == 16
        for s in set(spec.slots):
            counts[s] = counts.get(s, 0) + 1
    assert set(counts) == set(pool) and min(counts.values()) >= n
    assert pvp_schedule(pool, n, seed=1) == specs


def test_pvp_schedule_rejects_bad_pools():
    with pytest.raises(ValueError):
        pvp_schedule(["a"], 3)
    with pytest.raises(ValueError):
        pvp_schedule(["a", "a", "b"], 3)


def test_duplicate_submission_rated_once_per_match():
    rec = run_match(_spec(slots=("mixture",) * 8 + ("combat",) * 8))
    post = rate_record({}, rec, lambda i: i)
    assert set(post) == {"mixture", "combat"}
    assert all(isinstance(r, Rating) for r in post.values())


def _pool_dir(tmp_path, n):
    d = tmp_path / "pool"
    d.mkdir()
    names = ["mixture", "combat", "reckless", "ruthless", "coward", "idle"]
    for i in range(n):
        (d / f"sub{i:02d}.json").write_text(json.dumps({"policy": names[i % len(names)]}))
    return d


def _cfg(store, **kw):
    return CampaignConfig(store=store, map_cfg=dict(TINY_MAP), sim_cfg=dict(TINY_SIM), **kw)


def test_crash_resume_rates_each_match_once(tmp_path):
    pool = load_pool(_pool_dir(tmp_path, 6))
    full = run_campaign(_cfg(tmp_path / "full", daily_matches=12), Cadence.DAILY, pool)

    cfg = _cfg(tmp_path / "crash", daily_matches=12)
    run_campaign(cfg, Cadence.DAILY, pool, stop_after=5)
    # crash between recording a match and rating it
    store = ResultStore(cfg.store)
    specs = pvp_schedule(list(pool.values()), 12, cfg.seed, cfg.map_cfg, cfg.sim_cfg, prefix="daily")
    nxt = next(s for s in specs if s.match_id not in store.records)
    store.append(run_match(nxt, store.replay_dir))
    # and a torn half-written line on top
    with store.records_path.open("ab") as fh:
        fh.write(b'{"record": {"match_id": "tor')
    resumed = run_campaign(cfg, Cadence.DAILY, pool)

    store = ResultStore(cfg.store)
    assert len(store.applied) == len(set(store.applied)) == len(specs)
    assert resumed == full


def test_completion_order_mode_rates_every_match(tmp_path):
    pool = load_pool(_pool_dir(tmp_path, 4))
    cfg = _cfg(tmp_path / "co", daily_matches=5, deterministic=False, parallelism=2)
    rows = run_campaign(cfg, Cadence.DAILY, pool)
    store = ResultStore(cfg.store)
    assert len(store.applied) == len(store.records) == len(set(store.applied))
    assert {r["submission"] for r in rows} == set(pool)


def test_corrupt_store_refused(tmp_path):
    pool = load_pool(_pool_dir(tmp_path, 3))
    cfg = _cfg(tmp_path / "s", daily_matches=2)
    run_campaign(cfg, Cadence.DAILY, pool)
    path = cfg.store / "records.jsonl"
    lines = path.read_bytes().split(b"\n")
    lines[0] = lines[0].replace(b'"seed":', b'"seed":9', 1)
    path.write_bytes(b"\n".join(lines))
    with pytest.raises(StoreCorrupt):
        ResultStore(cfg.store)


def test_corrupt_ratings_refused(tmp_path):
    pool = load_pool(_pool_dir(tmp_path, 3))
    cfg = _cfg(tmp_path / "s", daily_matches=2)
    run_campaign(cfg, Cadence.DAILY, pool)
    p = cfg.store / "ratings.json"
    p.write_bytes(p.read_bytes().replace(b'"mu":', b'"mu":1', 1))
    with pytest.raises(StoreCorrupt):
        ResultStore(cfg.store)


def test_error_records_are_skipped_by_rating(tmp_path):
    d = _pool_dir(tmp_path, 3)
    (d / "broken.json").write_text("{}")
    pool = load_pool(d)
    cfg = _cfg(tmp_path / "s", daily_matches=2)
    rows = run_campaign(cfg, Cadence.DAILY, pool)
    store = ResultStore(cfg.store)
    assert any(not r.ok for r in store.records.values())
    assert len(store.applied) == len(store.records)
    assert "broken" in {r["submission"] for r in rows}


def test_leaderboard_csv(tmp_path):
    pool = load_pool(_pool_dir(tmp_path, 3))
    cfg = _cfg(tmp_path / "s", daily_matches=2)
    rows = run_campaign(cfg, Cadence.DAILY, pool)
    text = (cfg.store / "leaderboard.csv").read_text().splitlines()
    assert text[0] == "submission,mu,sigma,conservative,matches"
    assert len(text) == 1 + len(rows)
    scores = [r["conservative"] for r in rows]
    assert scores == sorted(scores, reverse=True)


def test_appearances_count_distinct_submissions():
    recs = [run_match(_spec(slots=("mixture",) * 15 + ("combat",)))]
    assert appearances(recs) == {"mixture": 1, "combat": 1}


def test_cli_sim_verify_stats(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("size: 64\nnpc_count: 8\nhorizon: 60\nfog_start: 20\n")
    rp = tmp_path / "r" / "one.jsonl"
    assert main(["sim", "--seed", "4", "--config", str(cfg), "--policies", "combat", "--replay", str(rp)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["teams"]) == 16
    assert main(["verify", str(rp)]) == 0
    assert "score ok, resim ok" in capsys.readouterr().out
    assert main(["stats", "--replays", str(tmp_path / "r"), "--out", str(tmp_path / "csv")]) == 0
    assert len(list((tmp_path / "csv").glob("*.csv"))) == 5


def test_cli_pve_and_pvp(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("size: 64\nnpc_count: 4\nhorizon: 6\n")
    assert main(["pve", "--candidate", "mixture", "--rounds", "10", "--config", str(cfg)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["matches"] == 10 and 0 <= rep["top1_ratio"] <= 1
    pool = _pool_dir(tmp_path, 3)
    assert main(["pvp", "--pool", str(pool), "--out", str(tmp_path / "st"), "--matches", "2",
                 "--config", str(cfg)]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_cli_rejects_bad_policy_count(capsys):
    assert main(["sim", "--policies", "idle", "combat"]) == 2
