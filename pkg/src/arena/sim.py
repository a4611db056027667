"""The tick engine: world state, observations, and the per-tick resolution order.

One call to :func:`step` resolves a tick in this fixed order:

 1. communication          7. harvest
 2. market sells           8. NPC actions
 3. market buys            9. metabolism and fog damage
 4. item use / equip      10. deaths, loot and defeat credit
 5. attacks               11. resource respawn timers
 6. moves (lower agent id wins conflicts)
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import combat, economy
from .config import SimConfig
from .entities import (
    NPC_ID_BASE,
    RESOURCE_PRODUCT,
    TOOL_SKILL,
    ActionError,
    AgentState,
    AttackStyle,
    NpcState,
    Slot,
)
from .worldgen import (
    DEGRADES_TO,
    HARVESTABLE_LUT,
    N_TEAMS,
    PASSABLE_LUT,
    RESPAWNS_TO,
    TEAM_SIZE,
    GameMap,
    MapGenConfig,
    TerrainKind,
    generate_map,
    npc_placement,
    spawn_positions,
)

N_AGENTS = N_TEAMS * TEAM_SIZE

_RESPAWN_LUT = np.arange(len(TerrainKind), dtype=np.uint8)
for _degraded, _source in RESPAWNS_TO.items():
    _RESPAWN_LUT[_degraded] = _source
_DEGRADE_LUT = np.arange(len(TerrainKind), dtype=np.uint8)
for _source, _degraded in DEGRADES_TO.items():
    _DEGRADE_LUT[_source] = _degraded


class Move(IntEnum):
    NORTH = 0
    SOUTH = 1
    EAST = 2
    WEST = 3
    STAY = 4


DELTAS = {Move.NORTH: (-1, 0), Move.SOUTH: (1, 0), Move.EAST: (0, 1), Move.WEST: (0, -1), Move.STAY: (0, 0)}


@dataclass(slots=True)
class AgentAction:
    move: Move = Move.STAY
    attack: tuple[int, AttackStyle] | None = None
    use: int | None = None
    sell: tuple[int, int] | None = None
    buy: int | None = None
    comm: int | None = None

    def to_dict(self) -> dict:
        return {
            "move": int(self.move),
            "attack": None if self.attack is None else [int(self.attack[0]), int(self.attack[1])],
            "use": self.use,
            "sell": None if self.sell is None else [int(self.sell[0]), int(self.sell[1])],
            "buy": self.buy,
            "comm": self.comm,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> AgentAction:
        if not d:
            return cls()
        attack = d.get("attack")
        sell = d.get("sell")
        return cls(
            move=Move(int(d.get("move", Move.STAY))),
            attack=None if attack is None else (int(attack[0]), AttackStyle(int(attack[1]))),
            use=d.get("use"),
            sell=None if sell is None else (int(sell[0]), int(sell[1])),
            buy=d.get("buy"),
            comm=d.get("comm"),
        )


STAY = AgentAction()


# --- fog -------------------------------------------------------------------

def fog_inset(tick: int, fog_start: int = 240, interval: int = 16) -> int:
    if tick < fog_start:
        return 0
    return (tick - fog_start) // interval + 1


def fog_rectangle(tick: int, size: int, fog_start: int = 240, interval: int = 16) -> tuple[int, int]:
    """Safe square ``(lo, hi)``: tiles with lo <= row, col <= hi are safe."""
    inset = fog_inset(tick, fog_start, interval)
    center = size // 2
    return min(inset, center), max(size - 1 - inset, center)


def fog_distance(pos, rect) -> int:
    lo, hi = rect
    r, c = pos
    return max(lo - r, r - hi, lo - c, c - hi, 0)


def fog_damage(pos, rect, c_fog: int = 1) -> int:
    return c_fog * fog_distance(pos, rect)


# --- metabolism ---------------------------------------------------------------

def metabolism(agent: AgentState, cfg: SimConfig = SimConfig()) -> AgentState:
    agent.food_half = max(0, agent.food_half - cfg.food_decay_half)
    agent.water_half = max(0, agent.water_half - cfg.water_decay_half)
    hp = agent.hp
    if agent.food_half == 0:
        hp -= cfg.starve_damage
    if agent.water_half == 0:
        hp -= cfg.thirst_damage
    threshold = 2 * cfg.regen_threshold
    if agent.food_half > threshold and agent.water_half > threshold:
        hp += cfg.regen
    agent.hp = max(0, min(100, hp))
    return agent


# --- state ----------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class EntityView:
    """Public view of an agent or NPC."""

    id: int
    team: int  # -1 for NPCs
    pos: tuple[int, int]
    hp: int
    level: float
    style: AttackStyle
    equipment: tuple[int, ...]
    npc_type: int | None = None

    @property
    def is_npc(self) -> bool:
        return self.team < 0


@dataclass(frozen=True, slots=True)
class ListingView:
    listing_id: int
    seller: int
    kind: int
    level: int
    price: int


@dataclass
class TeamObservation:
    """What one team sees at the start of a tick.

    ``members`` are the team's own AgentStates in member order and must be
    treated as read-only. ``patches[i]`` is ``(origin, terrain)`` for living
    member i, the clipped 15x15 window around it.
    """

    team_id: int
    tick: int
    map_size: int
    fog: tuple[int, int]
    members: tuple
    patches: tuple
    entities: tuple
    market_window: tuple
    comms: tuple

    def entity(self, entity_id: int) -> EntityView | None:
        for e in self.entities:
            if e.id == entity_id:
                return e
        return None

    def terrain_at(self, member: int, pos) -> int | None:
        """Terrain kind at global ``pos`` if inside member's patch."""
        patch = self.patches[member]
        if patch is None:
            return None
        (r0, c0), grid = patch
        r, c = pos[0] - r0, pos[1] - c0
        if 0 <= r < grid.shape[0] and 0 <= c < grid.shape[1]:
            return int(grid[r, c])
        return None

    def to_dict(self) -> dict:
        members = []
        for agent, patch in zip(self.members, self.patches):
            members.append({
                "id": agent.agent_id,
                "pos": list(agent.pos),
                "alive": agent.alive,
                "hp": agent.hp,
                "food": agent.food,
                "water": agent.water,
                "levels": list(agent.levels),
                "xp": list(agent.xp),
                "gold": agent.gold,
                "inventory": [it.as_list() for it in agent.inventory],
                "equipment": [None if it is None else it.as_list() for it in agent.equipment],
                "patch": None if patch is None else {"origin": list(patch[0]), "tiles": patch[1].tolist()},
            })
        return {
            "team": self.team_id,
            "tick": self.tick,
            "map_size": self.map_size,
            "fog": list(self.fog),
            "members": members,
            "entities": [
                {"id": e.id, "team": e.team, "pos": list(e.pos), "hp": e.hp, "level": e.level,
                 "style": int(e.style), "equipment": list(e.equipment), "npc_type": e.npc_type}
                for e in self.entities
            ],
            "market": [
                [l.listing_id, l.seller, l.kind, l.level, l.price] for l in self.market_window
            ],
            "comms": [list(c) for c in self.comms],
        }


@dataclass
class WorldState:
    tick: int
    map: GameMap
    agents: list[AgentState]
    npcs: list[NpcState]
    market: economy.Market
    cfg: SimConfig
    map_cfg: MapGenConfig
    seed: int
    rng: random.Random
    fog: tuple[int, int]
    occupancy: dict = field(default_factory=dict)
    next_uid: int = 0
    comms: list = field(default_factory=list)
    window_ids: list = field(default_factory=list)
    log: list = field(default_factory=list)
    gold_minted: int = 0
    done: bool = False

    def new_uid(self) -> int:
        uid = self.next_uid
        self.next_uid += 1
        return uid

    def entity(self, entity_id: int):
        if 0 <= entity_id < len(self.agents):
            return self.agents[entity_id]
        k = entity_id - NPC_ID_BASE
        if 0 <= k < len(self.npcs):
            return self.npcs[k]
        return None

    def team_of(self, entity_id: int) -> int | None:
        if 0 <= entity_id < len(self.agents):
            return self.agents[entity_id].team_id
        return None

    def teams_alive(self) -> set[int]:
        return {a.team_id for a in self.agents if a.alive}

    def events(self):
        for tick, events in self.log:
            for ev in events:
                yield tick, ev

    def state_hash(self) -> str:
        return state_hash(self)


def state_hash(state: WorldState) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<qq", state.tick, state.next_uid))
    h.update(state.map.kinds.tobytes())
    h.update(state.map.respawn.tobytes())
    for a in state.agents:
        h.update(repr((
            a.agent_id, a.team_id, a.pos, a.hp, a.food_half, a.water_half, a.xp, a.gold, a.alive,
            a.death_tick, [it.as_list() for it in a.inventory],
            [None if it is None else it.as_list() for it in a.equipment],
        )).encode())
    for n in state.npcs:
        h.update(repr((n.npc_id, n.pos, int(n.npc_type), n.level, n.hp, int(n.style), n.last_hitter, n.alive)).encode())
    for lid in sorted(state.market.listings):
        l = state.market.listings[lid]
        h.update(repr((lid, l.seller, l.item.as_list(), l.price)).encode())
    h.update(repr(state.rng.getstate()).encode())
    return h.hexdigest()


def npc_max_hp(level: int, cfg: SimConfig) -> int:
    return min(100, cfg.npc_hp_base + cfg.npc_hp_per_level * level)


def reset(seed: int, cfg: MapGenConfig | None = None, sim_cfg: SimConfig | None = None,
          game_map: GameMap | None = None) -> tuple[WorldState, list[TeamObservation]]:
    """Fresh match on ``game_map``, else on a map generated from ``cfg`` (default: seeded by ``seed``)."""
    sim_cfg = sim_cfg or SimConfig()
    if cfg is None:
        cfg = MapGenConfig(seed=seed)
    if game_map is None:
        game_map = generate_map(cfg)
    else:
        game_map = game_map.copy()
    plan = spawn_positions(seed, game_map)
    agents = []
    for team, slots in enumerate(plan.team_slots):
        for k, pos in enumerate(slots):
            agents.append(AgentState(agent_id=team * TEAM_SIZE + k, team_id=team, pos=pos))
    npcs = [
        NpcState(NPC_ID_BASE + i, s.pos, s.npc_type, s.level, npc_max_hp(s.level, sim_cfg), AttackStyle(s.style))
        for i, s in enumerate(npc_placement(seed, game_map, cfg.npc_count))
    ]
    state = WorldState(
        tick=0, map=game_map, agents=agents, npcs=npcs, market=economy.Market(), cfg=sim_cfg,
        map_cfg=cfg, seed=seed, rng=random.Random(seed * 1_000_003 + 17),
        fog=fog_rectangle(0, game_map.size, sim_cfg.fog_start, sim_cfg.fog_interval),
    )
    for a in agents:
        state.occupancy[a.pos] = a.agent_id
    for n in npcs:
        state.occupancy[n.pos] = n.npc_id
    return state, observe_all(state)


# --- observation ----------------------------------------------------------------------

def _entity_view(state: WorldState, ent) -> EntityView:
    if isinstance(ent, NpcState):
        return EntityView(ent.npc_id, -1, ent.pos, ent.hp, float(ent.level), ent.style, (0,) * 6, int(ent.npc_type))
    eq = tuple(0 if it is None else it.level for it in ent.equipment)
    return EntityView(ent.agent_id, ent.team_id, ent.pos, ent.hp, ent.combat_level(), ent.main_style(), eq)


def _patch(game_map: GameMap, pos, radius: int):
    r0 = max(0, pos[0] - radius)
    c0 = max(0, pos[1] - radius)
    grid = game_map.kinds[r0:pos[0] + radius + 1, c0:pos[1] + radius + 1].copy()
    return (r0, c0), grid


class _TickView:
    """Per-tick caches shared by all team observations."""

    def __init__(self, state: WorldState):
        self.state = state
        ents = [a for a in state.agents if a.alive] + [n for n in state.npcs if n.alive]
        self.ents = ents
        self.pos = np.array([e.pos for e in ents], dtype=np.int32).reshape(-1, 2)
        self.views: dict[int, EntityView] = {}
        window = state.market.window(state.cfg.market_window)
        state.window_ids = [l.listing_id for l in window]
        self.market = tuple(ListingView(l.listing_id, l.seller, int(l.item.kind), l.item.level, l.price) for l in window)
        self.comm_pos = np.array([c[2] for c in state.comms], dtype=np.int32).reshape(-1, 2)

    def view(self, ent) -> EntityView:
        key = ent.npc_id if isinstance(ent, NpcState) else ent.agent_id
        v = self.views.get(key)
        if v is None:
            v = self.views[key] = _entity_view(self.state, ent)
        return v


def _observe(tv: _TickView, team_id: int) -> TeamObservation:
    state = tv.state
    radius = state.cfg.vision_radius
    members = tuple(state.agents[team_id * TEAM_SIZE:(team_id + 1) * TEAM_SIZE])
    live = [a for a in members if a.alive]
    patches = tuple(_patch(state.map, a.pos, radius) if a.alive else None for a in members)
    entities = ()
    comms = ()
    if live:
        mpos = np.array([a.pos for a in live], dtype=np.int32)
        if len(tv.ents):
            d = np.abs(tv.pos[:, None, :] - mpos[None, :, :]).max(axis=2)
            seen = np.flatnonzero((d <= radius).any(axis=1))
            entities = tuple(
                tv.view(tv.ents[i]) for i in seen
                if isinstance(tv.ents[i], NpcState) or tv.ents[i].team_id != team_id
            )
        if state.comms:
            d = np.abs(tv.comm_pos[:, None, :] - mpos[None, :, :]).max(axis=2)
            heard = (d <= radius).any(axis=1)
            comms = tuple(
                (c[0], c[1]) for c, h in zip(state.comms, heard)
                if h or state.agents[c[0]].team_id == team_id
            )
    elif state.comms:
        comms = tuple((c[0], c[1]) for c in state.comms if state.agents[c[0]].team_id == team_id)
    return TeamObservation(
        team_id=team_id, tick=state.tick, map_size=state.map.size, fog=state.fog, members=members,
        patches=patches, entities=entities, market_window=tv.market, comms=comms,
    )


def observe(state: WorldState, team_id: int) -> TeamObservation:
    return _observe(_TickView(state), team_id)


def observe_all(state: WorldState) -> list[TeamObservation]:
    tv = _TickView(state)
    return [_observe(tv, t) for t in range(N_TEAMS)]


# --- harvest ------------------------------------------------------------------------

_ADJ = ((-1, 0), (1, 0), (0, 1), (0, -1))


def _harvest_item(state: WorldState, agent: AgentState, tile: int, pos, events: list) -> bool:
    product, skill = RESOURCE_PRODUCT[TerrainKind(tile)]
    tool = agent.equipment[Slot.TOOL]
    level = tool.level if tool is not None and TOOL_SKILL[tool.kind] == skill else 1
    cfg = state.cfg
    try:
        stack = economy.add_item(agent, product, level, 1, state.new_uid, cfg.inventory_size)
    except ActionError:
        events.append({"e": "HarvestLost", "a": agent.agent_id, "tile": tile, "pos": list(pos)})
        return False
    agent.xp[skill] += 1
    agent.levels[skill] = min(cfg.max_level, 1 + agent.xp[skill] // cfg.xp_per_level)
    _degrade(state, pos, tile)
    events.append({
        "e": "Harvest", "a": agent.agent_id, "tile": tile, "pos": list(pos), "uid": stack.uid,
        "kind": int(product), "level": level, "qty": 1,
    })
    return True


def _degrade(state: WorldState, pos, tile: int) -> None:
    m = state.map
    m.kinds[pos] = _DEGRADE_LUT[tile]
    if tile != TerrainKind.WATER:
        m.respawn[pos] = state.cfg.respawn_ticks


def harvest(state: WorldState, agent: AgentState) -> list[dict]:
    """Harvest the agent's tile and adjacent water/fish; returns events."""
    events: list[dict] = []
    kinds = state.map.kinds
    size = state.map.size
    pos = agent.pos
    tile = int(kinds[pos])
    got_item = False
    if tile == TerrainKind.FOREST:
        agent.food_half = 200
        _degrade(state, pos, tile)
        events.append({"e": "Harvest", "a": agent.agent_id, "tile": tile, "pos": list(pos), "food": 100})
    elif HARVESTABLE_LUT[tile]:
        got_item = _harvest_item(state, agent, tile, pos, events)
    r, c = pos
    water_done = agent.water_half >= 200
    for dr, dc in _ADJ:
        q = (r + dr, c + dc)
        if not (0 <= q[0] < size and 0 <= q[1] < size):
            continue
        t = int(kinds[q])
        if t == TerrainKind.WATER and not water_done:
            agent.water_half = 200
            water_done = True
            events.append({"e": "Harvest", "a": agent.agent_id, "tile": t, "pos": list(q), "water": 100})
        elif t == TerrainKind.FISH and not got_item:
            _harvest_item(state, agent, t, q, events)
            got_item = True
    return events


# --- step ---------------------------------------------------------------------------------

def _mask(events, agent_id, action, reason):
    events.append({"e": "Masked", "a": agent_id, "action": action, "reason": reason})


def _normalize_actions(actions) -> dict[int, AgentAction]:
    """Flatten team action sets into ``{agent_id: AgentAction}``."""
    out: dict[int, AgentAction] = {}
    if actions is None:
        return out
    items = actions.items() if isinstance(actions, dict) else enumerate(actions)
    for team, acts in items:
        if acts is None:
            continue
        for k, act in enumerate(acts):
            if k >= TEAM_SIZE:
                break
            if act is None:
                continue
            if isinstance(act, dict):
                act = AgentAction.from_dict(act)
            out[int(team) * TEAM_SIZE + k] = act
    return out


def step(state: WorldState, actions) -> tuple[WorldState, list[TeamObservation], list[dict]]:
    """Advance one tick in place. ``actions`` maps team id to 8 AgentActions."""
    if state.done:
        raise RuntimeError("match is over")
    cfg = state.cfg
    acts = _normalize_actions(actions)
    events: list[dict] = []
    tick = state.tick
    agents = state.agents
    live = [a for a in agents if a.alive]
    for a in live:
        act = acts.get(a.agent_id)
        if act is not None and not isinstance(act, AgentAction):
            raise TypeError(f"action for agent {a.agent_id} must be an AgentAction")

    fog = fog_rectangle(tick, state.map.size, cfg.fog_start, cfg.fog_interval)
    if fog != state.fog:
        events.append({"e": "FogShrink", "lo": fog[0], "hi": fog[1]})
        state.fog = fog

    # uids as seen by the policy, so indices stay stable across phases
    inv_uids = {a.agent_id: [it.uid for it in a.inventory] for a in live if a.agent_id in acts}

    def resolve_index(agent, index):
        uids = inv_uids.get(agent.agent_id, [])
        if index is None or not isinstance(index, int) or not 0 <= index < len(uids):
            return None
        uid = uids[index]
        for j, it in enumerate(agent.inventory):
            if it.uid == uid:
                return j
        return None

    # 1. communicate
    state.comms = []
    for a in live:
        act = acts.get(a.agent_id)
        if act is None or act.comm is None:
            continue
        if not isinstance(act.comm, int) or not 0 <= act.comm < cfg.comm_tokens:
            _mask(events, a.agent_id, "comm", "BadToken")
            continue
        state.comms.append((a.agent_id, act.comm, a.pos))
        events.append({"e": "Comm", "a": a.agent_id, "tok": act.comm})

    # 2. sells
    for a in live:
        act = acts.get(a.agent_id)
        if act is None or act.sell is None:
            continue
        index, price = act.sell
        j = resolve_index(a, index)
        if j is None:
            _mask(events, a.agent_id, "sell", "EmptySlot")
            continue
        try:
            _, ev = economy.list_item(a, j, price, state.market, state.new_uid)
        except ActionError as err:
            _mask(events, a.agent_id, "sell", err.reason)
            continue
        events.append(ev)

    # 3. buys
    orders = [
        economy.BuyOrder(a.agent_id, acts[a.agent_id].buy)
        for a in live
        if a.agent_id in acts and acts[a.agent_id].buy is not None
    ]
    if orders:
        bad = [o for o in orders if not isinstance(o.window_index, int)]
        for o in bad:
            _mask(events, o.buyer, "buy", "BadWindowIndex")
        orders = [o for o in orders if isinstance(o.window_index, int)]
        events.extend(economy.resolve_purchases(
            state.market, orders, agents, state.window_ids, state.new_uid, cfg.inventory_size,
        ))

    # 4. use / equip
    for a in live:
        act = acts.get(a.agent_id)
        if act is None or act.use is None:
            continue
        j = resolve_index(a, act.use)
        if j is None:
            _mask(events, a.agent_id, "use", "EmptySlot")
            continue
        try:
            events.append(economy.use_item(a, j, cfg.consumable_restore, cfg.inventory_size))
        except ActionError as err:
            _mask(events, a.agent_id, "use", err.reason)

    # 5. attacks
    radius = cfg.vision_radius
    for a in live:
        act = acts.get(a.agent_id)
        if act is None or act.attack is None or a.hp <= 0:
            continue
        target_id, style = act.attack
        try:
            style = AttackStyle(style)
        except ValueError:
            _mask(events, a.agent_id, "attack", "BadStyle")
            continue
        target = state.entity(target_id) if isinstance(target_id, int) else None
        if target is None or not target.alive:
            _mask(events, a.agent_id, "attack", "InvalidTarget")
            continue
        if isinstance(target, AgentState) and target.team_id == a.team_id:
            _mask(events, a.agent_id, "attack", "FriendlyFire")
            continue
        if max(abs(target.pos[0] - a.pos[0]), abs(target.pos[1] - a.pos[1])) > radius:
            _mask(events, a.agent_id, "attack", "OutOfRange")
            continue
        events.append(combat.attack(a, target, style, cfg))

    # 6. moves
    occ = state.occupancy
    passable = PASSABLE_LUT
    kinds = state.map.kinds
    size = state.map.size
    for a in live:
        act = acts.get(a.agent_id)
        if act is None or a.hp <= 0 or act.move == Move.STAY:
            continue
        try:
            dr, dc = DELTAS[Move(act.move)]
        except ValueError:
            _mask(events, a.agent_id, "move", "BadDirection")
            continue
        dest = (a.pos[0] + dr, a.pos[1] + dc)
        if not (0 <= dest[0] < size and 0 <= dest[1] < size) or not passable[kinds[dest]]:
            _mask(events, a.agent_id, "move", "Blocked")
            continue
        if dest in occ:
            _mask(events, a.agent_id, "move", "Occupied")
            continue
        del occ[a.pos]
        occ[dest] = a.agent_id
        a.pos = dest
        events.append({"e": "Move", "a": a.agent_id, "p": [dest[0], dest[1]]})

    # 7. harvest
    for a in live:
        if a.hp > 0:
            events.extend(harvest(state, a))

    # 8. NPC actions
    _npc_phase(state, events)

    # 9. metabolism + fog
    for a in live:
        if a.hp <= 0:
            continue
        metabolism(a, cfg)
        dmg = fog_damage(a.pos, fog, cfg.fog_damage)
        if dmg:
            a.hp = max(0, a.hp - dmg)
            events.append({"e": "FogDamage", "a": a.agent_id, "dmg": dmg})

    # 10. deaths
    _resolve_deaths(state, live, events)

    # 11. respawn
    m = state.map
    pending = m.respawn > 0
    if pending.any():
        m.respawn[pending] -= 1
        regrow = pending & (m.respawn == 0)
        if regrow.any():
            m.kinds[regrow] = _RESPAWN_LUT[m.kinds[regrow]]

    state.log.append((tick, events))
    state.tick += 1
    alive_teams = state.teams_alive()
    if state.tick >= cfg.horizon or len(alive_teams) <= 1:
        _finish(state)
    return state, observe_all(state), events


def _npc_phase(state: WorldState, events: list) -> None:
    cfg = state.cfg
    radius = cfg.vision_radius
    npcs = [n for n in state.npcs if n.alive and n.hp > 0]
    live_agents = [a for a in state.agents if a.alive and a.hp > 0]
    if not npcs or not live_agents:
        return
    apos = np.array([a.pos for a in live_agents], dtype=np.int32)
    npos = np.array([n.pos for n in npcs], dtype=np.int32)
    dist = np.abs(npos[:, None, :] - apos[None, :, :]).max(axis=2)
    near = dist <= radius
    rows = np.flatnonzero(near.any(axis=1))
    occ = state.occupancy
    kinds = state.map.kinds
    size = state.map.size
    for i in rows:
        npc = npcs[i]
        cols = np.flatnonzero(near[i])
        in_view = [(int(dist[i, j]), live_agents[j].agent_id, live_agents[j]) for j in cols]
        hitter = None
        if npc.last_hitter is not None and npc.last_hitter < NPC_ID_BASE:
            cand = state.agents[npc.last_hitter]
            if cand.alive and cand.hp > 0 and max(abs(cand.pos[0] - npc.pos[0]), abs(cand.pos[1] - npc.pos[1])) <= radius:
                hitter = cand
        action = combat.npc_act(npc, in_view, hitter)
        if action.target is not None:
            target = state.agents[action.target]
            if target.hp > 0:
                events.append(combat.attack(npc, target, action.style, cfg))
        if action.move is not None:
            dest = (npc.pos[0] + action.move[0], npc.pos[1] + action.move[1])
            if (0 <= dest[0] < size and 0 <= dest[1] < size and PASSABLE_LUT[kinds[dest]]
                    and dest not in occ):
                del occ[npc.pos]
                occ[dest] = npc.npc_id
                npc.pos = dest


def _resolve_deaths(state: WorldState, live, events: list) -> None:
    tick = state.tick
    for a in live:
        if a.hp > 0:
            continue
        a.alive = False
        a.death_tick = tick
        a.frozen_level_snapshot = a.mean_level()
        del state.occupancy[a.pos]
        killer = a.killed_by
        if killer is None:
            cause = "env"
        elif killer >= NPC_ID_BASE:
            cause = "npc"
        else:
            cause = "attack"
        events.append({
            "e": "Death", "a": a.agent_id, "team": a.team_id, "cause": cause, "killer": killer,
            "levels": a.level_sum(), "eq": a.equipment_score(),
        })
        credit = combat.record_defeat(a, killer, state.team_of)
        if credit is not None:
            events.append(credit)
        events.extend(economy.delist_seller(state.market, a.agent_id))
    for n in state.npcs:
        if not n.alive or n.hp > 0:
            continue
        n.alive = False
        del state.occupancy[n.pos]
        events.append({"e": "NpcDeath", "npc": n.npc_id, "level": n.level, "killer": n.last_hitter})
        if n.last_hitter is None or n.last_hitter >= NPC_ID_BASE:
            continue
        hitter = state.agents[n.last_hitter]
        if not hitter.alive:
            continue
        kind, level, gold = combat.npc_loot(n.level, state.rng)
        hitter.gold += gold
        state.gold_minted += gold
        ev = {"e": "Loot", "npc": n.npc_id, "a": hitter.agent_id, "gold": gold, "kind": int(kind), "level": level}
        try:
            stack = economy.add_item(hitter, kind, level, 1, state.new_uid, state.cfg.inventory_size)
            ev["uid"] = stack.uid
        except ActionError:
            ev["uid"] = None
            ev["dropped"] = True
        events.append(ev)


def _finish(state: WorldState) -> None:
    state.done = True
    survivors = []
    for a in state.agents:
        if a.alive:
            a.frozen_level_snapshot = a.mean_level()
            survivors.append([a.agent_id, a.team_id, a.level_sum(), a.equipment_score()])
    state.log[-1][1].append({"e": "MatchEnd", "tick": state.tick, "survivors": survivors})
