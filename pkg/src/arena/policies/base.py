"""Policy interface and the movement/targeting helpers shared by scripted teams."""

from __future__ import annotations

import numpy as np

from ..combat import counter_style
from ..economy import can_use, has_room, required_level
from ..entities import CATEGORY, STYLE_OF, WEAPON_FOR, Category, ItemKind, Slot, slot_for
from ..sim import DELTAS, AgentAction, Move, TeamObservation, fog_distance
from ..worldgen import PASSABLE_LUT, TerrainKind

MOVES = (Move.NORTH, Move.SOUTH, Move.EAST, Move.WEST)


class Policy:
    """A team controller.

    ``act`` returns one :class:`AgentAction` per team member. Implementations
    only emit actions that are legal for the observation they were given.
    """

    name = "policy"
    deterministic = True

    def act(self, obs: TeamObservation, rng_seed: int = 0, scratch: dict | None = None) -> list[AgentAction]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class IdlePolicy(Policy):
    name = "idle"

    def act(self, obs, rng_seed=0, scratch=None):
        return [AgentAction() for _ in obs.members]


def cheb(a, b) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class TeamContext:
    """Per-tick derived data for one team observation."""

    def __init__(self, obs: TeamObservation):
        self.obs = obs
        occupied = {e.pos for e in obs.entities}
        occupied.update(a.pos for a in obs.members if a.alive)
        self.occupied = occupied
        self.enemy_agents = [e for e in obs.entities if not e.is_npc]
        self.npcs = [e for e in obs.entities if e.is_npc]
        self.claimed: set = set()  # tiles teammates already plan to step on

    def passable(self, i: int, pos) -> bool:
        kind = self.obs.terrain_at(i, pos)
        return kind is not None and bool(PASSABLE_LUT[kind])

    def free(self, i: int, pos) -> bool:
        return self.passable(i, pos) and pos not in self.occupied and pos not in self.claimed

    def _pick(self, i: int, key) -> Move:
        """Best legal move by ``key`` (lower is better), or STAY if none improves."""
        pos = self.obs.members[i].pos
        here = key(pos)
        best, best_key = Move.STAY, here
        sidestep, side_key = None, None
        for mv in MOVES:
            dr, dc = DELTAS[mv]
            dest = (pos[0] + dr, pos[1] + dc)
            if not self.free(i, dest):
                continue
            k = key(dest)
            if k < best_key:
                best, best_key = mv, k
            elif k[0] == here[0] and (side_key is None or k < side_key):
                sidestep, side_key = mv, k
        if best is Move.STAY and sidestep is not None and here[0] > 0:
            best = sidestep
        return best

    def toward(self, i: int, goal, stop: int = 0) -> Move:
        pos = self.obs.members[i].pos
        if manhattan(pos, goal) <= stop:
            return Move.STAY
        return self._pick(i, lambda p: (manhattan(p, goal), cheb(p, goal)))

    def away(self, i: int, threat) -> Move:
        return self._pick(i, lambda p: (-cheb(p, threat), -manhattan(p, threat)))

    def into_safe(self, i: int) -> Move:
        fog = self.obs.fog
        lo, hi = fog
        def key(p):
            goal = (min(max(p[0], lo), hi), min(max(p[1], lo), hi))
            return (fog_distance(p, fog), manhattan(p, goal))
        return self._pick(i, key)

    def claim(self, i: int, move: Move) -> Move:
        if move is not Move.STAY:
            pos = self.obs.members[i].pos
            dr, dc = DELTAS[move]
            self.claimed.add((pos[0] + dr, pos[1] + dc))
        return move

    def nearest_tile(self, i: int, kinds, search_team: bool = True):
        """Nearest visible tile of ``kinds`` by Manhattan distance, or None."""
        pos = self.obs.members[i].pos
        lut = np.zeros(len(TerrainKind), dtype=bool)
        lut[list(kinds)] = True
        order = [i] + ([j for j in range(len(self.obs.members)) if j != i] if search_team else [])
        for j in order:
            patch = self.obs.patches[j]
            if patch is None:
                continue
            (r0, c0), grid = patch
            rr, cc = np.nonzero(lut[grid])
            if rr.size == 0:
                continue
            rr = rr + r0
            cc = cc + c0
            d = np.abs(rr - pos[0]) + np.abs(cc - pos[1])
            k = int(np.lexsort((cc, rr, d))[0])
            return int(rr[k]), int(cc[k])
        return None

    def in_reach(self, i: int, entities, radius: int = 7):
        pos = self.obs.members[i].pos
        return [e for e in entities if cheb(pos, e.pos) <= radius]


def nearest(pos, entities):
    if not entities:
        return None
    return min(entities, key=lambda e: (cheb(pos, e.pos), e.id))


def attack_on(target) -> tuple[int, int]:
    return target.id, counter_style(target.style)


def survival_goal(ctx: TeamContext, i: int, threshold: float = 35.0):
    """Tile to head for when food or water runs low, else None."""
    agent = ctx.obs.members[i]
    if agent.water < threshold:
        water = ctx.nearest_tile(i, [TerrainKind.WATER])
        if water is not None:
            return water, 1
    if agent.food < threshold:
        forest = ctx.nearest_tile(i, [TerrainKind.FOREST])
        if forest is not None:
            return forest, 0
    return None


def consume_index(agent, hp_below: int = 50, need_below: float = 30.0) -> int | None:
    """Inventory index of a restoring consumable the agent should use now."""
    for j, it in enumerate(agent.inventory):
        if it.kind == ItemKind.POULTICE and agent.hp < hp_below:
            return j
        if it.kind == ItemKind.RATION and (agent.food < need_below or agent.water < need_below):
            return j
    return None


def upgrade_index(agent, slots=None) -> int | None:
    """Inventory index of an equippable item better than what is worn."""
    best, best_gain = None, 0
    for j, it in enumerate(agent.inventory):
        cat = CATEGORY[it.kind]
        if cat is Category.CONSUMABLE:
            continue
        slot = slot_for(it.kind)
        if slots is not None and slot not in slots:
            continue
        if not can_use(agent, it):
            continue
        cur = agent.equipment[slot]
        if slot is Slot.WEAPON or slot is Slot.AMMO:
            main = agent.main_style()
            if STYLE_OF[it.kind] != main:
                continue
            if cur is not None and STYLE_OF[cur.kind] != main:
                cur = None
        gain = it.level - (cur.level if cur is not None else 0)
        if slot is Slot.AMMO and cur is not None and cur.kind == it.kind and cur.level == it.level:
            gain = 0
        if gain > best_gain:
            best, best_gain = j, gain
    return best


_KINDS = list(ItemKind)
_SLOTS = [slot_for(k) for k in _KINDS]


def affordable_upgrade(agent, market_window, taken: set, slots) -> int | None:
    """Window index of the cheapest listing that would upgrade ``agent``."""
    main = agent.main_style()
    for idx, l in enumerate(market_window):
        if l.price > agent.gold:
            break  # the window is sorted by price
        if l.listing_id in taken or l.seller == agent.agent_id:
            continue
        kind = _KINDS[l.kind]
        slot = _SLOTS[l.kind]
        if slot is None or slot not in slots:
            continue
        if slot is Slot.WEAPON and kind != WEAPON_FOR[main]:
            continue
        if slot is Slot.AMMO and STYLE_OF[kind] != main:
            continue
        if l.level > required_level(agent, kind):
            continue
        cur = agent.equipment[slot]
        if cur is not None and cur.level >= l.level and (slot is not Slot.WEAPON or cur.kind == kind):
            continue
        if not has_room(agent, kind, l.level):
            continue
        return idx
    return None
