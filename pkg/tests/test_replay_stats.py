from __future__ import annotations

import csv
import gzip
import math
from collections import Counter

import pytest

from arena.entities import CATEGORY, ItemKind
from arena.replay import (
    FORMAT_VERSION,
    Replay,
    ReplayError,
    from_bytes,
    read_replay,
    replay_paths,
    to_bytes,
    write_replay,
)
from arena.stats import CSV_HEADERS, StatsError, StatsReport, compute_stats, emit_csv, replay_stats
from arena.tournament import resimulate, simulate_to_replay

SHORT_MAP = {"size": 64, "npc_count": 24}
SHORT_SIM = {"horizon": 120, "fog_start": 60, "fog_interval": 4}
MIX = ["mixture", "combat", "reckless", "ruthless", "coward", "idle", "mixture", "combat"] * 2


@pytest.fixture(scope="module")
def replays():
    return [simulate_to_replay(seed, MIX, SHORT_MAP, SHORT_SIM)[2] for seed in (1, 2, 3)]


def test_replay_round_trip(replays, tmp_path):
    r = replays[0]
    assert r.header["format_version"] == FORMAT_VERSION
    assert from_bytes(to_bytes(r)) == r
    for name in ("a.jsonl", "b.jsonl.gz"):
        path = write_replay(tmp_path / name, r)
        assert read_replay(path) == r
    assert [p.name for p in replay_paths(tmp_path)] == ["a.jsonl", "b.jsonl.gz"]


def test_gzip_bytes_are_reproducible(replays, tmp_path):
    a = write_replay(tmp_path / "x.jsonl.gz", replays[0]).read_bytes()
    b = write_replay(tmp_path / "y.jsonl.gz", replays[0]).read_bytes()
    assert a == b and gzip.decompress(a) == to_bytes(replays[0])


def test_score_recomputes_from_events(replays):
    for r in replays:
        assert r.recompute_score() == r.score()


def test_resimulation_matches_footer(replays):
    h, score = resimulate(replays[0])
    assert h == replays[0].footer["state_hash"] and score == replays[0].score()


def test_tampered_replay_rejected(replays):
    data = to_bytes(replays[0])
    lines = data.split(b"\n")
    lines[1] = lines[1].replace(b'"t":0', b'"t":0 ')
    with pytest.raises(ReplayError):
        from_bytes(b"\n".join(lines))
    # rewrite the stored final tick without updating the checksum
    head, footer = data.rstrip(b"\n").rsplit(b"\n", 1)
    forged = footer.replace(b'"final_tick":', b'"final_tick":1', 1)
    assert forged != footer
    with pytest.raises(ReplayError, match="checksum"):
        from_bytes(head + b"\n" + forged + b"\n")


def test_truncated_replay_rejected(replays):
    data = to_bytes(replays[0])
    with pytest.raises(ReplayError):
        from_bytes(data[: len(data) // 2])


def test_unknown_version_rejected(replays):
    r = replays[0]
    data = to_bytes(r).replace(b'"format_version":1', b'"format_version":9', 1)
    with pytest.raises(ReplayError, match="format_version"):
        from_bytes(data)


def test_ticks_must_increase():
    r = Replay({"horizon": 5, "policies": []}, [(3, []), (3, [])], {})
    with pytest.raises(ReplayError):
        to_bytes(r)


def _recount(replay):
    """Independent tallies straight from the event stream."""
    lists, buys, made = Counter(), Counter(), Counter()
    prices = {}
    for _, ev in replay.events():
        if ev["e"] == "List":
            cat = CATEGORY[ItemKind(ev["kind"])].name.lower()
            lists[cat] += 1
            prices.setdefault((ItemKind(ev["kind"]).name.lower(), ev["level"]), []).append(ev["price"])
        elif ev["e"] == "Buy":
            buys[CATEGORY[ItemKind(ev["kind"])].name.lower()] += 1
        if ev["e"] in ("Harvest", "Loot") and "kind" in ev:
            made[CATEGORY[ItemKind(ev["kind"])].name.lower()] += 1
    return lists, buys, made, prices


def test_stats_match_recount(replays):
    rep = compute_stats(replays)
    lists, buys, made = Counter(), Counter(), Counter()
    prices: dict = {}
    for r in replays:
        l, b, m, p = _recount(r)
        lists += l
        buys += b
        made += m
        for k, v in p.items():
            prices.setdefault(k, []).extend(v)
    assert +rep.lists == lists and +rep.buys == buys and +rep.item_distribution == made
    grid = rep.price_grid
    assert set(grid) == set(prices)
    for key, vals in prices.items():
        assert grid[key]["quantity"] == len(vals)
        assert grid[key]["mean_price"] == pytest.approx(sum(vals) / len(vals))


def test_stats_fold_order_free(replays):
    a = compute_stats(replays)
    b = compute_stats(list(reversed(replays)))
    assert a == b


def test_radar_covers_every_policy(replays):
    rep = compute_stats(replays)
    radar = rep.team_radar
    assert set(radar) == set(MIX)
    assert sum(r["appearances"] for r in radar.values()) == 16 * len(replays)
    for r in radar.values():
        assert 0 <= r["survival_tick"] <= SHORT_SIM["horizon"] + 1


def test_buy_sell_ratio_edges():
    rep = StatsReport()
    rep.buys["weapon"] = 2
    rep.lists["armor"] = 4
    rep.buys["armor"] = 1
    assert rep.buy_sell_ratio == {"armor": 0.25, "weapon": math.inf}


def test_empty_stats_rejected():
    with pytest.raises(StatsError):
        compute_stats([])


def test_emit_csv(replays, tmp_path):
    paths = emit_csv(compute_stats(replays), tmp_path)
    assert sorted(p.stem for p in paths) == sorted(CSV_HEADERS)
    for p in paths:
        with p.open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_HEADERS[p.stem]
        assert all(len(r) == len(rows[0]) for r in rows)


def test_replay_stats_single(replays):
    assert replay_stats(replays[0]).radar
