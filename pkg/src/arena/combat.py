"""Attack resolution, style dominance, NPC behaviour and loot."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .config import SimConfig
from .entities import (
    AMMO_FOR,
    KINDS_BY_CATEGORY,
    WEAPON_FOR,
    AgentState,
    AttackStyle,
    Category,
    ItemKind,
    NpcState,
    Slot,
)
from .worldgen import NpcType

# attacker style -> style it beats
BEATS = {
    AttackStyle.MELEE: AttackStyle.RANGE,
    AttackStyle.RANGE: AttackStyle.MAGE,
    AttackStyle.MAGE: AttackStyle.MELEE,
}
COUNTER = {v: k for k, v in BEATS.items()}

LOOT_CATEGORIES = (
    Category.WEAPON, Category.ARMOR, Category.CONSUMABLE, Category.TOOL, Category.AMMUNITION,
)


def dominance_multiplier(attacker_style, defender_main, factor: float = 1.5) -> float:
    return factor if BEATS[AttackStyle(attacker_style)] == defender_main else 1.0


def counter_style(defender_main) -> AttackStyle:
    """The style that dominates ``defender_main``."""
    return COUNTER[AttackStyle(defender_main)]


def attack_power(attacker: AgentState, style: AttackStyle, cfg: SimConfig) -> tuple[int, ItemKind | None]:
    """Raw power of an agent attack, plus the ammo kind it would consume."""
    eq = attacker.equipment
    power = cfg.base_damage + cfg.skill_damage * attacker.levels[style]
    weapon = eq[Slot.WEAPON]
    if weapon is not None and weapon.kind == WEAPON_FOR[style]:
        power += cfg.weapon_damage * weapon.level
    ammo = eq[Slot.AMMO]
    if ammo is not None and ammo.kind == AMMO_FOR[style]:
        power += cfg.ammo_damage * ammo.level
        return power, ammo.kind
    return power, None


def defense_of(defender, cfg: SimConfig) -> int:
    if isinstance(defender, NpcState):
        return cfg.npc_defense_per_level * defender.level
    return cfg.armor_defense * defender.armor_levels()


def defender_main_style(defender) -> AttackStyle:
    if isinstance(defender, NpcState):
        return defender.style
    return defender.main_style()


def resolve_damage(power: float, multiplier: float, defense: int, floor: int = 1) -> int:
    # round-half-even, matching Python's round()
    return max(floor, round(multiplier * power - defense))


def npc_power(npc: NpcState, cfg: SimConfig) -> int:
    return cfg.npc_damage_base + cfg.npc_damage_per_level * npc.level


def attack(attacker, defender, style, cfg: SimConfig) -> dict:
    """Apply one attack in place and return the ``Attack`` event.

    ``attacker`` may be an agent or an NPC. Style-matched ammunition is consumed.
    """
    style = AttackStyle(style)
    ammo_uid = None
    if isinstance(attacker, NpcState):
        power = npc_power(attacker, cfg)
        src = attacker.npc_id
    else:
        power, ammo_kind = attack_power(attacker, style, cfg)
        src = attacker.agent_id
        if ammo_kind is not None:
            ammo = attacker.equipment[Slot.AMMO]
            ammo_uid = ammo.uid
            ammo.quantity -= 1
            if ammo.quantity == 0:
                attacker.equipment[Slot.AMMO] = None
        skill = style.skill
        attacker.xp[skill] += 1
        attacker.levels[skill] = min(cfg.max_level, 1 + attacker.xp[skill] // cfg.xp_per_level)
    mult = dominance_multiplier(style, defender_main_style(defender), cfg.dominance)
    damage = resolve_damage(power, mult, defense_of(defender, cfg), cfg.min_damage)
    if defender.hp > 0:
        # later hits in the same tick on a downed target do not steal the final blow
        defender.last_hitter = src
    defender.hp = max(0, defender.hp - damage)
    if isinstance(defender, AgentState) and defender.hp == 0 and defender.killed_by is None:
        defender.killed_by = src
    tgt = defender.npc_id if isinstance(defender, NpcState) else defender.agent_id
    event = {"e": "Attack", "a": src, "t": tgt, "style": int(style), "dmg": damage}
    if ammo_uid is not None:
        event["ammo"] = ammo_uid
    return event


@dataclass(frozen=True)
class NpcAction:
    move: tuple[int, int] | None = None
    target: int | None = None
    style: AttackStyle | None = None


def _step_toward(pos, goal):
    dr, dc = goal[0] - pos[0], goal[1] - pos[1]
    if abs(dr) >= abs(dc) and dr != 0:
        return (1 if dr > 0 else -1, 0)
    if dc != 0:
        return (0, 1 if dc > 0 else -1)
    return None


def npc_act(npc: NpcState, agents_in_view, last_hitter: AgentState | None) -> NpcAction:
    """Decide an NPC's action.

    ``agents_in_view`` holds ``(distance, agent_id, agent)`` for living agents
    inside the NPC's window; ``last_hitter`` is its last attacker if that agent
    is alive and in view.
    """
    if npc.npc_type is NpcType.PASSIVE:
        if not agents_in_view:
            return NpcAction()
        _, _, near = min(agents_in_view, key=lambda x: (x[0], x[1]))
        away = (2 * npc.pos[0] - near.pos[0], 2 * npc.pos[1] - near.pos[1])
        return NpcAction(move=_step_toward(npc.pos, away))
    if npc.npc_type is NpcType.NEUTRAL:
        if last_hitter is None:
            return NpcAction()
        return NpcAction(target=last_hitter.agent_id, style=counter_style(last_hitter.main_style()))
    if not agents_in_view:
        return NpcAction()
    dist, _, near = min(agents_in_view, key=lambda x: (x[0], x[1]))
    move = _step_toward(npc.pos, near.pos) if dist > 1 else None
    return NpcAction(move=move, target=near.agent_id, style=counter_style(near.main_style()))


def npc_loot(npc_level: int, rng: random.Random) -> tuple[ItemKind, int, int]:
    """Draw ``(item kind, item level, gold)`` for a defeated NPC."""
    category = LOOT_CATEGORIES[rng.randrange(len(LOOT_CATEGORIES))]
    kinds = KINDS_BY_CATEGORY[category]
    kind = kinds[rng.randrange(len(kinds))]
    return kind, npc_level, npc_level


def record_defeat(defender, killer_id: int | None, team_of) -> dict | None:
    """Defeat credit for a player agent's final blow; None when nobody earns one.

    ``team_of`` maps an agent id to its team (NPC ids are absent).
    """
    if not isinstance(defender, AgentState) or killer_id is None:
        return None
    team = team_of(killer_id)
    if team is None:
        return None
    return {"e": "Defeat", "team": team, "hitter": killer_id, "victim": defender.agent_id}
