"""Built-in scripted teams.

``mixture`` and ``combat`` are the stage-1 opponents. ``reckless``,
``ruthless`` and ``coward`` are hand-written heuristics that imitate the
behaviour of the learned stage-2 opponents; they are approximations, not
reproductions of trained agents.
"""

from __future__ import annotations

from ..entities import (
    CATEGORY,
    RESOURCE_FOR_SKILL,
    STYLE_OF,
    TOOL_FOR_SKILL,
    TOOL_SKILL,
    AttackStyle,
    Category,
    ItemKind,
    SkillKind,
    Slot,
)
from ..economy import can_use
from ..sim import AgentAction, Move, fog_distance
from ..worldgen import TerrainKind, map_center
from .base import (
    Policy,
    TeamContext,
    affordable_upgrade,
    attack_on,
    cheb,
    consume_index,
    nearest,
    survival_goal,
    upgrade_index,
)

COMBAT_SLOTS = frozenset({Slot.WEAPON, Slot.HAT, Slot.TOP, Slot.BOTTOM, Slot.AMMO})
ARMOR_ONLY = frozenset({Slot.HAT, Slot.TOP, Slot.BOTTOM})


def _use_or_equip(agent, slots) -> int | None:
    j = consume_index(agent)
    if j is None:
        j = upgrade_index(agent, slots)
    return j


def _pick_target(ctx: TeamContext, i: int, prefer_agents: bool = True):
    pos = ctx.obs.members[i].pos
    agents = ctx.in_reach(i, ctx.enemy_agents)
    if agents and prefer_agents:
        return nearest(pos, agents)
    npcs = ctx.in_reach(i, ctx.npcs)
    return nearest(pos, npcs) if npcs else nearest(pos, agents)


def _center_move(ctx: TeamContext, i: int, stop: int = 4) -> Move:
    return ctx.toward(i, map_center(ctx.obs.map_size), stop=stop)


class MixturePolicy(Policy):
    """Member i specialises in skill i: three hunters and five gatherers."""

    name = "mixture"

    def act(self, obs, rng_seed=0, scratch=None):
        ctx = TeamContext(obs)
        out = []
        for i, agent in enumerate(obs.members):
            if not agent.alive:
                out.append(AgentAction())
                continue
            skill = SkillKind(i % 8)
            out.append(self._member(ctx, i, agent, skill))
        return out

    def _member(self, ctx: TeamContext, i: int, agent, skill: SkillKind) -> AgentAction:
        act = AgentAction()
        obs = ctx.obs
        combat = skill <= SkillKind.MAGE
        if combat:
            act.use = consume_index(agent)
            if act.use is None:
                act.use = _specialist_upgrade(agent, AttackStyle(int(skill)))
        else:
            act.use = consume_index(agent)
            if act.use is None:
                act.use = _tool_upgrade(agent, skill)
        sell = _mixture_surplus(agent, skill, exclude=act.use)
        if sell is not None:
            act.sell = (sell, agent.inventory[sell].level)

        if combat:
            prey = ctx.in_reach(i, ctx.npcs)
            if prey:
                target = min(prey, key=lambda e: (e.level, cheb(agent.pos, e.pos), e.id))
                act.attack = (target.id, AttackStyle(int(skill)))

        if fog_distance(agent.pos, obs.fog) > 0:
            move = ctx.into_safe(i)
        else:
            goal = survival_goal(ctx, i)
            if goal is not None:
                move = ctx.toward(i, goal[0], stop=goal[1])
            elif combat:
                if ctx.npcs:
                    weakest = min(ctx.npcs, key=lambda e: (e.level, cheb(agent.pos, e.pos), e.id))
                    move = ctx.toward(i, weakest.pos, stop=3)
                else:
                    move = _center_move(ctx, i, stop=12)
            else:
                tile = RESOURCE_FOR_SKILL[skill]
                spot = ctx.nearest_tile(i, [int(tile)], search_team=False)
                if spot is not None:
                    move = ctx.toward(i, spot, stop=1 if tile is TerrainKind.FISH else 0)
                else:
                    move = _center_move(ctx, i, stop=12)
        act.move = ctx.claim(i, move)
        return act


def _specialist_upgrade(agent, style: AttackStyle) -> int | None:
    best, gain = None, 0
    for j, it in enumerate(agent.inventory):
        cat = CATEGORY[it.kind]
        if cat is Category.ARMOR:
            slot = {ItemKind.HAT: Slot.HAT, ItemKind.TOP: Slot.TOP, ItemKind.BOTTOM: Slot.BOTTOM}[it.kind]
        elif cat in (Category.WEAPON, Category.AMMUNITION) and STYLE_OF[it.kind] == style:
            slot = Slot.WEAPON if cat is Category.WEAPON else Slot.AMMO
        else:
            continue
        if not can_use(agent, it):
            continue
        cur = agent.equipment[slot]
        g = it.level - (cur.level if cur is not None else 0)
        if g > gain:
            best, gain = j, g
    return best


def _tool_upgrade(agent, skill: SkillKind) -> int | None:
    tool_kind = TOOL_FOR_SKILL[skill]
    cur = agent.equipment[Slot.TOOL]
    have = cur.level if cur is not None and cur.kind == tool_kind else 0
    best, gain = None, 0
    for j, it in enumerate(agent.inventory):
        if it.kind == tool_kind and can_use(agent, it) and it.level - have > gain:
            best, gain = j, it.level - have
    return best


def _mixture_surplus(agent, skill: SkillKind, exclude) -> int | None:
    """First inventory slot the specialist has no use for."""
    for j, it in enumerate(agent.inventory):
        if j == exclude:
            continue
        cat = CATEGORY[it.kind]
        if cat is Category.CONSUMABLE:
            if it.quantity > 3:
                return j
            continue
        if skill <= SkillKind.MAGE:
            style = AttackStyle(int(skill))
            if cat is Category.ARMOR:
                continue
            if cat in (Category.WEAPON, Category.AMMUNITION) and STYLE_OF[it.kind] == style:
                continue
            return j
        if cat is Category.TOOL and TOOL_SKILL[it.kind] == skill:
            continue
        return j
    return None


class CombatPolicy(Policy):
    """Attacks everything nearby; the only retreat is from the fog."""

    name = "combat"
    economy = False

    def act(self, obs, rng_seed=0, scratch=None):
        ctx = TeamContext(obs)
        out = []
        taken: set = set()
        for i, agent in enumerate(obs.members):
            if not agent.alive:
                out.append(AgentAction())
                continue
            act = AgentAction()
            target = _pick_target(ctx, i)
            if target is not None:
                act.attack = attack_on(target)
            self._items(agent, act, obs, taken)
            act.move = ctx.claim(i, self._move(ctx, i, agent))
            out.append(act)
        return out

    def _items(self, agent, act, obs, taken) -> None:
        act.use = _use_or_equip(agent, COMBAT_SLOTS)

    def _move(self, ctx: TeamContext, i: int, agent) -> Move:
        if fog_distance(agent.pos, ctx.obs.fog) > 0:
            return ctx.into_safe(i)
        if ctx.enemy_agents:
            foe = nearest(agent.pos, ctx.enemy_agents)
            return ctx.toward(i, foe.pos, stop=2)
        if agent.food < 20 or agent.water < 20:
            goal = survival_goal(ctx, i, threshold=20)
            if goal is not None:
                return ctx.toward(i, goal[0], stop=goal[1])
        if ctx.npcs:
            return ctx.toward(i, nearest(agent.pos, ctx.npcs).pos, stop=3)
        return _center_move(ctx, i)


def _economy(agent, act: AgentAction, obs, taken: set) -> None:
    """Equip best, sell surplus, buy the cheapest affordable upgrade."""
    act.use = _use_or_equip(agent, COMBAT_SLOTS)
    sell = _combat_surplus(agent, exclude=act.use)
    if sell is not None:
        act.sell = (sell, 2 * agent.inventory[sell].level)
    idx = affordable_upgrade(agent, obs.market_window, taken, COMBAT_SLOTS)
    if idx is not None:
        act.buy = idx
        taken.add(obs.market_window[idx].listing_id)


def _combat_surplus(agent, exclude) -> int | None:
    main = agent.main_style()
    for j, it in enumerate(agent.inventory):
        if j == exclude:
            continue
        cat = CATEGORY[it.kind]
        if cat is Category.CONSUMABLE:
            if it.quantity > 2:
                return j
            continue
        if cat in (Category.WEAPON, Category.AMMUNITION):
            if STYLE_OF[it.kind] != main:
                return j
            cur = agent.equipment[Slot.WEAPON if cat is Category.WEAPON else Slot.AMMO]
            if cur is not None and cur.kind == it.kind and cur.level > it.level:
                return j
            continue
        if cat is Category.TOOL:
            return j
        cur = agent.equipment[{ItemKind.HAT: Slot.HAT, ItemKind.TOP: Slot.TOP, ItemKind.BOTTOM: Slot.BOTTOM}[it.kind]]
        if cur is not None and cur.level >= it.level:
            return j
    return None


class RecklessPolicy(CombatPolicy):
    """Combat team that also equips, sells and buys."""

    name = "reckless"
    economy = True

    def _items(self, agent, act, obs, taken) -> None:
        _economy(agent, act, obs, taken)

    def _move(self, ctx, i, agent):
        if fog_distance(agent.pos, ctx.obs.fog) <= 0 and not ctx.enemy_agents:
            goal = survival_goal(ctx, i)
            if goal is not None:
                return ctx.toward(i, goal[0], stop=goal[1])
        return super()._move(ctx, i, agent)


class RuthlessPolicy(RecklessPolicy):
    """Reckless plus focus fire on one team-wide target and regrouping."""

    name = "ruthless"
    regroup_radius = 6

    def act(self, obs, rng_seed=0, scratch=None):
        ctx = TeamContext(obs)
        live = [(i, a) for i, a in enumerate(obs.members) if a.alive]
        out = [AgentAction() for _ in obs.members]
        if not live:
            return out
        focus = self._focus(ctx, live)
        cr = round(sum(a.pos[0] for _, a in live) / len(live))
        cc = round(sum(a.pos[1] for _, a in live) / len(live))
        taken: set = set()
        for i, agent in live:
            act = out[i]
            if focus is not None and cheb(agent.pos, focus.pos) <= 7:
                act.attack = attack_on(focus)
            self._items(agent, act, obs, taken)
            if fog_distance(agent.pos, obs.fog) > 0:
                move = ctx.into_safe(i)
            elif cheb(agent.pos, (cr, cc)) > self.regroup_radius:
                move = ctx.toward(i, (cr, cc), stop=2)
            elif focus is not None and cheb(agent.pos, focus.pos) > 2:
                move = ctx.toward(i, focus.pos, stop=2)
            else:
                move = RecklessPolicy._move(self, ctx, i, agent)
            act.move = ctx.claim(i, move)
        return out

    @staticmethod
    def _focus(ctx: TeamContext, live):
        pool = ctx.enemy_agents or ctx.npcs
        if not pool:
            return None
        return min(pool, key=lambda e: (min(cheb(a.pos, e.pos) for _, a in live), e.id))


class CowardPolicy(Policy):
    """Hugs the edge of the safe zone and only picks on weaker targets."""

    name = "coward"
    edge_margin = 2

    def act(self, obs, rng_seed=0, scratch=None):
        ctx = TeamContext(obs)
        out = []
        taken: set = set()
        for i, agent in enumerate(obs.members):
            if not agent.alive:
                out.append(AgentAction())
                continue
            act = AgentAction()
            mine = agent.combat_level()
            weaker = [e for e in ctx.in_reach(i, obs.entities) if e.level < mine]
            if weaker:
                act.attack = attack_on(nearest(agent.pos, weaker))
            _economy(agent, act, obs, taken)
            act.move = ctx.claim(i, self._move(ctx, i, agent, mine))
            out.append(act)
        return out

    def _move(self, ctx: TeamContext, i: int, agent, mine: float) -> Move:
        obs = ctx.obs
        if fog_distance(agent.pos, obs.fog) > 0:
            return ctx.into_safe(i)
        threats = [e for e in obs.entities if e.level >= mine and cheb(agent.pos, e.pos) <= 3
                   and (not e.is_npc or e.npc_type != 0)]
        if threats:
            return ctx.away(i, nearest(agent.pos, threats).pos)
        goal = survival_goal(ctx, i, threshold=50)
        if goal is not None:
            return ctx.toward(i, goal[0], stop=goal[1])
        lo, hi = obs.fog
        r, c = agent.pos
        margin = min(r - lo, hi - r, c - lo, hi - c)
        if margin > self.edge_margin:
            edge = _nearest_edge_point(agent.pos, lo + self.edge_margin - 1, hi - self.edge_margin + 1)
            return ctx.toward(i, edge)
        return Move.STAY


def _nearest_edge_point(pos, lo: int, hi: int):
    r, c = pos
    options = [(lo, c), (hi, c), (r, lo), (r, hi)]
    return min(options, key=lambda p: (abs(p[0] - r) + abs(p[1] - c), p))
