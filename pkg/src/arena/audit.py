"""State invariants and event-log conservation checks.

``check_invariants`` inspects a live WorldState. ``audit_items`` and
``audit_gold`` replay an event stream and follow every item uid and every
gold piece, optionally comparing the result with a final state.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .economy import required_level
from .entities import CATEGORY, Category
from .sim import fog_rectangle
from .worldgen import DEGRADED, PASSABLE_LUT, TerrainKind

DEGRADED_LUT = np.array([k in DEGRADED for k in TerrainKind], dtype=bool)

# uid states; the last four are terminal
INVENTORY, EQUIPPED, LISTING = "inventory", "equipped", "listing"
CONSUMED, DESTROYED, MERGED, EMPTIED = "consumed", "destroyed", "merged", "emptied"
TERMINAL = frozenset({CONSUMED, DESTROYED, MERGED, EMPTIED})


def check_invariants(state, prev_fog=None) -> list[str]:
    """Violations of the per-tick state invariants (empty when all hold)."""
    out = []
    cfg = state.cfg
    seen: dict = {}
    for a in state.agents:
        if not 0 <= a.hp <= 100:
            out.append(f"agent {a.agent_id} hp {a.hp}")
        if not 0 <= a.food <= 100 or not 0 <= a.water <= 100:
            out.append(f"agent {a.agent_id} food/water {a.food}/{a.water}")
        if len(a.inventory) > cfg.inventory_size:
            out.append(f"agent {a.agent_id} holds {len(a.inventory)} stacks")
        for it in a.inventory:
            if it.quantity < 1:
                out.append(f"agent {a.agent_id} empty stack {it.uid}")
        for it in a.equipment:
            if it is None:
                continue
            if CATEGORY[it.kind] is not Category.CONSUMABLE and it.level > required_level(a, it.kind):
                out.append(f"agent {a.agent_id} wears {it.kind.name} L{it.level} above its level")
        if a.alive:
            if a.pos in seen:
                out.append(f"tile {a.pos} shared by {seen[a.pos]} and {a.agent_id}")
            seen[a.pos] = a.agent_id
            if state.occupancy.get(a.pos) != a.agent_id:
                out.append(f"occupancy map disagrees at {a.pos}")
            if not PASSABLE_LUT[state.map.kinds[a.pos]]:
                out.append(f"agent {a.agent_id} on impassable tile {a.pos}")
    for n in state.npcs:
        if n.alive:
            if n.pos in seen:
                out.append(f"tile {n.pos} shared by {seen[n.pos]} and {n.npc_id}")
            seen[n.pos] = n.npc_id
    if len(state.occupancy) != len(seen):
        out.append(f"occupancy map has {len(state.occupancy)} entries for {len(seen)} live entities")
    timers = state.map.respawn > 0
    if timers.any() and not DEGRADED_LUT[state.map.kinds[timers]].all():
        out.append("respawn timer on a tile that is not degraded")
    fog = state.fog
    expect = fog_rectangle(max(state.tick - 1, 0), state.map.size, cfg.fog_start, cfg.fog_interval)
    if fog != expect:
        out.append(f"fog {fog} != {expect} at tick {state.tick}")
    if prev_fog is not None and not (fog[0] >= prev_fog[0] and fog[1] <= prev_fog[1]):
        out.append(f"fog grew from {prev_fog} to {fog}")
    return out


@dataclass
class _Uid:
    state: str
    qty: int
    owner: int


@dataclass
class ItemAudit:
    violations: list
    uids: dict  # uid -> _Uid
    transitions: Counter  # (from, to) -> count

    @property
    def ok(self) -> bool:
        return not self.violations

    def live(self) -> dict[int, _Uid]:
        return {u: r for u, r in self.uids.items() if r.state not in TERMINAL}


def audit_items(events, final_state=None) -> ItemAudit:
    """Follow each item uid from creation through its transitions."""
    uids: dict[int, _Uid] = {}
    trans: Counter = Counter()
    bad: list[str] = []

    def move(uid, to, tick, why):
        rec = uids[uid]
        trans[(rec.state, to)] += 1
        rec.state = to

    def expect(uid, states, owner, tick, why) -> _Uid | None:
        rec = uids.get(uid)
        if rec is None:
            bad.append(f"t{tick} {why}: unknown uid {uid}")
            return None
        if rec.state not in states:
            bad.append(f"t{tick} {why}: uid {uid} is {rec.state}")
            return None
        if owner is not None and rec.owner != owner:
            bad.append(f"t{tick} {why}: uid {uid} belongs to {rec.owner}, not {owner}")
            return None
        return rec

    def gain(uid, owner, tick, why):
        rec = uids.get(uid)
        if rec is None:
            uids[uid] = _Uid(INVENTORY, 1, owner)
            trans[("created", INVENTORY)] += 1
        elif expect(uid, (INVENTORY,), owner, tick, why) is not None:
            rec.qty += 1

    def lose(uid, owner, states, tick, why, terminal):
        rec = expect(uid, states, owner, tick, why)
        if rec is None:
            return
        rec.qty -= 1
        if rec.qty == 0:
            move(uid, terminal, tick, why)

    for tick, ev in events:
        e = ev["e"]
        if e == "Harvest" and "uid" in ev:
            gain(ev["uid"], ev["a"], tick, e)
        elif e == "Loot" and ev.get("uid") is not None:
            gain(ev["uid"], ev["a"], tick, e)
        elif e == "List":
            lose(ev["src"], ev["seller"], (INVENTORY,), tick, e, EMPTIED)
            if ev["uid"] in uids:
                bad.append(f"t{tick} List reuses uid {ev['uid']}")
            uids[ev["uid"]] = _Uid(LISTING, 1, ev["seller"])
            trans[("created", LISTING)] += 1
        elif e == "Buy":
            rec = expect(ev["uid"], (LISTING,), ev["seller"], tick, e)
            if rec is None:
                continue
            if ev["into"] == ev["uid"]:
                rec.owner = ev["buyer"]
                move(ev["uid"], INVENTORY, tick, e)
            else:
                into = expect(ev["into"], (INVENTORY,), ev["buyer"], tick, e)
                if into is not None:
                    into.qty += rec.qty
                rec.qty = 0
                move(ev["uid"], MERGED, tick, e)
        elif e == "Use":
            if ev.get("effect") == "consume":
                lose(ev["uid"], ev["a"], (INVENTORY,), tick, e, CONSUMED)
            else:
                if expect(ev["uid"], (INVENTORY,), ev["a"], tick, e) is not None:
                    move(ev["uid"], EQUIPPED, tick, e)
                prev = ev.get("unequipped")
                if prev is not None and expect(prev, (EQUIPPED,), ev["a"], tick, e) is not None:
                    move(prev, INVENTORY, tick, e)
        elif e == "Attack" and "ammo" in ev:
            lose(ev["ammo"], ev["a"], (EQUIPPED,), tick, e, CONSUMED)
        elif e == "Delist":
            if expect(ev["uid"], (LISTING,), ev["seller"], tick, e) is not None:
                move(ev["uid"], DESTROYED, tick, e)
        elif e == "Death":
            for uid, rec in uids.items():
                if rec.owner == ev["a"] and rec.state in (INVENTORY, EQUIPPED):
                    move(uid, DESTROYED, tick, e)

    audit = ItemAudit(bad, uids, trans)
    if final_state is not None:
        _compare_final(audit, final_state)
    return audit


def _compare_final(audit: ItemAudit, state) -> None:
    actual = {}
    for a in state.agents:
        if not a.alive:
            continue
        for it in a.inventory:
            actual[it.uid] = (INVENTORY, it.quantity, a.agent_id)
        for it in a.equipment:
            if it is None:
                continue
            actual[it.uid] = (EQUIPPED, it.quantity, a.agent_id)
    for l in state.market.listings.values():
        actual[l.item.uid] = (LISTING, l.item.quantity, l.seller)
    derived = {u: (r.state, r.qty, r.owner) for u, r in audit.live().items()}
    for uid in sorted(set(actual) | set(derived)):
        if actual.get(uid) != derived.get(uid):
            audit.violations.append(f"final uid {uid}: state has {actual.get(uid)}, log implies {derived.get(uid)}")


def audit_gold(events, final_state=None) -> list[str]:
    """Gold enters only through NPC loot and moves only through purchases."""
    gold: Counter = Counter()
    minted = 0
    bad = []
    for tick, ev in events:
        e = ev["e"]
        if e == "Loot":
            gold[ev["a"]] += ev["gold"]
            minted += ev["gold"]
        elif e == "Buy":
            gold[ev["buyer"]] -= ev["price"]
            gold[ev["seller"]] += ev["price"]
            if gold[ev["buyer"]] < 0:
                bad.append(f"t{tick} agent {ev['buyer']} overdrawn")
    if sum(gold.values()) != minted:
        bad.append(f"gold held {sum(gold.values())} != minted {minted}")
    if final_state is not None:
        held = sum(a.gold for a in final_state.agents)
        if held != final_state.gold_minted or held != minted:
            bad.append(f"state holds {held}, state minted {final_state.gold_minted}, log minted {minted}")
        for a in final_state.agents:
            if a.gold != gold[a.agent_id]:
                bad.append(f"agent {a.agent_id} gold {a.gold} != {gold[a.agent_id]} from log")
    return bad
