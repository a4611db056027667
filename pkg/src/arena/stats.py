"""Aggregate trade, item and per-team statistics over replay files.

All aggregates are integer sums, so folding replays in any order gives the
same report; means are taken only when a report is written out.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .entities import CATEGORY, NPC_ID_BASE, ItemKind
from .replay import Replay, read_replay
from .scoring import outcomes_from_events
from .worldgen import TEAM_SIZE

RATIO_INF = math.inf  # written as "inf" when a category was bought but never listed

RADAR_FIELDS = (
    "defeat_credits", "survival_tick", "damage_dealt", "damage_taken", "gold_earned", "equipment_score",
)

CSV_HEADERS = {
    "item_distribution": ("category", "count"),
    "item_quantity": ("kind", "count"),
    "buy_sell_ratio": ("category", "buys", "lists", "ratio"),
    "price_grid": ("kind", "level", "quantity", "mean_price"),
    "team_radar": ("policy", "appearances") + RADAR_FIELDS,
}


class StatsError(ValueError):
    pass


@dataclass
class StatsReport:
    item_distribution: Counter = field(default_factory=Counter)  # category name -> items created
    item_quantity: Counter = field(default_factory=Counter)  # kind name -> items created
    buys: Counter = field(default_factory=Counter)  # category name -> Buy events
    lists: Counter = field(default_factory=Counter)  # category name -> List events
    price_qty: Counter = field(default_factory=Counter)  # (kind name, level) -> listings
    price_sum: Counter = field(default_factory=Counter)  # (kind name, level) -> summed price
    radar: dict = field(default_factory=dict)  # policy -> Counter of RADAR_FIELDS + appearances

    @property
    def buy_sell_ratio(self) -> dict[str, float]:
        out = {}
        for cat in sorted(set(self.buys) | set(self.lists)):
            b, s = self.buys[cat], self.lists[cat]
            out[cat] = b / s if s else (RATIO_INF if b else 0.0)
        return out

    @property
    def price_grid(self) -> dict[tuple[str, int], dict]:
        return {
            key: {"quantity": q, "mean_price": self.price_sum[key] / q}
            for key, q in sorted(self.price_qty.items()) if q
        }

    @property
    def team_radar(self) -> dict[str, dict[str, float]]:
        out = {}
        for policy in sorted(self.radar):
            c = self.radar[policy]
            n = c["appearances"]
            out[policy] = {"appearances": n, **{f: c[f] / n for f in RADAR_FIELDS}}
        return out

    def merge(self, other: StatsReport) -> StatsReport:
        for name in ("item_distribution", "item_quantity", "buys", "lists", "price_qty", "price_sum"):
            getattr(self, name).update(getattr(other, name))
        for policy, c in other.radar.items():
            self.radar.setdefault(policy, Counter()).update(c)
        return self


def _category(kind: int) -> str:
    return CATEGORY[ItemKind(kind)].name.lower()


def _kind(kind: int) -> str:
    return ItemKind(kind).name.lower()


def replay_stats(replay: Replay) -> StatsReport:
    rep = StatsReport()
    policies = replay.policies
    n_teams = len(policies)
    team_stats = [Counter() for _ in range(n_teams)]
    for _tick, ev in replay.events():
        e = ev["e"]
        if e in ("Harvest", "Loot") and ev.get("kind") is not None:
            rep.item_distribution[_category(ev["kind"])] += 1
            rep.item_quantity[_kind(ev["kind"])] += 1
        if e == "Loot":
            team_stats[ev["a"] // TEAM_SIZE]["gold_earned"] += ev["gold"]
        elif e == "List":
            cat = _category(ev["kind"])
            rep.lists[cat] += 1
            key = (_kind(ev["kind"]), ev["level"])
            rep.price_qty[key] += 1
            rep.price_sum[key] += ev["price"]
        elif e == "Buy":
            rep.buys[_category(ev["kind"])] += 1
            team_stats[ev["seller"] // TEAM_SIZE]["gold_earned"] += ev["price"]
        elif e == "Attack":
            if ev["a"] < NPC_ID_BASE:
                team_stats[ev["a"] // TEAM_SIZE]["damage_dealt"] += ev["dmg"]
            if ev["t"] < NPC_ID_BASE:
                team_stats[ev["t"] // TEAM_SIZE]["damage_taken"] += ev["dmg"]
        elif e == "Death":
            team_stats[ev["team"]]["equipment_score"] += ev["eq"]
        elif e == "MatchEnd":
            for _aid, team, _levels, eq in ev["survivors"]:
                team_stats[team]["equipment_score"] += eq
    outcomes = outcomes_from_events(replay.events(), replay.horizon, n_teams=n_teams)
    for team, o in enumerate(outcomes):
        c = team_stats[team]
        c["defeat_credits"] += o.defeat_credits
        c["survival_tick"] += o.death_tick
        c["appearances"] += 1
        rep.radar.setdefault(policies[team], Counter()).update(c)
    return rep


def compute_stats(replays) -> StatsReport:
    """Fold replays (objects or paths) into one report."""
    report = StatsReport()
    n = 0
    for r in replays:
        if not isinstance(r, Replay):
            r = read_replay(r)
        report.merge(replay_stats(r))
        n += 1
    if n == 0:
        raise StatsError("no replays to summarize")
    return report


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


def report_rows(report: StatsReport) -> dict[str, list[tuple]]:
    return {
        "item_distribution": sorted(report.item_distribution.items()),
        "item_quantity": sorted(report.item_quantity.items()),
        "buy_sell_ratio": [
            (cat, report.buys[cat], report.lists[cat], ratio) for cat, ratio in report.buy_sell_ratio.items()
        ],
        "price_grid": [
            (kind, level, g["quantity"], g["mean_price"]) for (kind, level), g in report.price_grid.items()
        ],
        "team_radar": [
            (policy, r["appearances"]) + tuple(r[f] for f in RADAR_FIELDS)
            for policy, r in report.team_radar.items()
        ],
    }


def emit_csv(report: StatsReport, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in report_rows(report).items():
        path = out_dir / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADERS[name])
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        written.append(path)
    return written
