"""Domain types shared by the engine: skills, styles, items, agents and NPCs."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from .worldgen import NpcType, TerrainKind


class SkillKind(IntEnum):
    MELEE = 0
    RANGE = 1
    MAGE = 2
    FISHING = 3
    HERBALISM = 4
    PROSPECTING = 5
    CARVING = 6
    ALCHEMY = 7


COMBAT_SKILLS = (SkillKind.MELEE, SkillKind.RANGE, SkillKind.MAGE)
PROFESSION_SKILLS = (
    SkillKind.FISHING, SkillKind.HERBALISM, SkillKind.PROSPECTING, SkillKind.CARVING, SkillKind.ALCHEMY,
)


class AttackStyle(IntEnum):
    MELEE = 0
    RANGE = 1
    MAGE = 2

    @property
    def skill(self) -> SkillKind:
        return SkillKind(int(self))


class Category(IntEnum):
    AMMUNITION = 0
    WEAPON = 1
    ARMOR = 2
    CONSUMABLE = 3
    TOOL = 4


class ItemKind(IntEnum):
    SHAVING = 0
    SCRAP = 1
    SHARD = 2
    SWORD = 3
    BOW = 4
    WAND = 5
    HAT = 6
    TOP = 7
    BOTTOM = 8
    RATION = 9
    POULTICE = 10
    ROD = 11
    GLOVES = 12
    PICKAXE = 13
    CHISEL = 14
    ARCANE_FOCUS = 15


I = ItemKind

CATEGORY: dict[ItemKind, Category] = {
    I.SHAVING: Category.AMMUNITION, I.SCRAP: Category.AMMUNITION, I.SHARD: Category.AMMUNITION,
    I.SWORD: Category.WEAPON, I.BOW: Category.WEAPON, I.WAND: Category.WEAPON,
    I.HAT: Category.ARMOR, I.TOP: Category.ARMOR, I.BOTTOM: Category.ARMOR,
    I.RATION: Category.CONSUMABLE, I.POULTICE: Category.CONSUMABLE,
    I.ROD: Category.TOOL, I.GLOVES: Category.TOOL, I.PICKAXE: Category.TOOL,
    I.CHISEL: Category.TOOL, I.ARCANE_FOCUS: Category.TOOL,
}
KINDS_BY_CATEGORY: dict[Category, tuple[ItemKind, ...]] = {
    c: tuple(k for k in ItemKind if CATEGORY[k] is c) for c in Category
}
STYLE_OF: dict[ItemKind, AttackStyle] = {
    I.SWORD: AttackStyle.MELEE, I.SHAVING: AttackStyle.MELEE,
    I.BOW: AttackStyle.RANGE, I.SCRAP: AttackStyle.RANGE,
    I.WAND: AttackStyle.MAGE, I.SHARD: AttackStyle.MAGE,
}
WEAPON_FOR = {AttackStyle.MELEE: I.SWORD, AttackStyle.RANGE: I.BOW, AttackStyle.MAGE: I.WAND}
AMMO_FOR = {AttackStyle.MELEE: I.SHAVING, AttackStyle.RANGE: I.SCRAP, AttackStyle.MAGE: I.SHARD}
TOOL_SKILL: dict[ItemKind, SkillKind] = {
    I.ROD: SkillKind.FISHING,
    I.GLOVES: SkillKind.HERBALISM,
    I.PICKAXE: SkillKind.PROSPECTING,
    I.CHISEL: SkillKind.CARVING,
    I.ARCANE_FOCUS: SkillKind.ALCHEMY,
}
TOOL_FOR_SKILL = {v: k for k, v in TOOL_SKILL.items()}

# resource tile -> (product, governing skill); Forest and Water restore directly
RESOURCE_PRODUCT: dict[TerrainKind, tuple[ItemKind, SkillKind]] = {
    TerrainKind.ORE: (I.SHAVING, SkillKind.PROSPECTING),
    TerrainKind.TREE: (I.SCRAP, SkillKind.CARVING),
    TerrainKind.CRYSTAL: (I.SHARD, SkillKind.ALCHEMY),
    TerrainKind.HERB: (I.RATION, SkillKind.HERBALISM),
    TerrainKind.FISH: (I.POULTICE, SkillKind.FISHING),
}
RESOURCE_FOR_SKILL = {skill: tile for tile, (_, skill) in RESOURCE_PRODUCT.items()}

STACKABLE = frozenset(KINDS_BY_CATEGORY[Category.AMMUNITION] + KINDS_BY_CATEGORY[Category.CONSUMABLE])


class Slot(IntEnum):
    WEAPON = 0
    HAT = 1
    TOP = 2
    BOTTOM = 3
    AMMO = 4
    TOOL = 5


ARMOR_SLOTS = (Slot.HAT, Slot.TOP, Slot.BOTTOM)


def slot_for(kind: ItemKind) -> Slot | None:
    cat = CATEGORY[kind]
    if cat is Category.WEAPON:
        return Slot.WEAPON
    if cat is Category.AMMUNITION:
        return Slot.AMMO
    if cat is Category.TOOL:
        return Slot.TOOL
    if cat is Category.ARMOR:
        return {I.HAT: Slot.HAT, I.TOP: Slot.TOP, I.BOTTOM: Slot.BOTTOM}[kind]
    return None


@dataclass(slots=True)
class ItemStack:
    uid: int
    kind: ItemKind
    level: int
    quantity: int = 1

    def __post_init__(self):
        if not 1 <= self.level <= 10:
            raise ValueError(f"item level {self.level} outside [1, 10]")
        if self.quantity < 1 or (self.quantity > 1 and self.kind not in STACKABLE):
            raise ValueError(f"invalid quantity {self.quantity} for {self.kind.name}")

    def as_list(self) -> list[int]:
        return [self.uid, int(self.kind), self.level, self.quantity]


def level_for_xp(xp: int, xp_per_level: int = 10, max_level: int = 10) -> int:
    return min(max_level, 1 + xp // xp_per_level)


@dataclass(slots=True)
class AgentState:
    agent_id: int
    team_id: int
    pos: tuple[int, int]
    hp: int = 100
    food_half: int = 200
    water_half: int = 200
    xp: list[int] = field(default_factory=lambda: [0] * 8)
    levels: list[int] = field(default_factory=lambda: [1] * 8)
    inventory: list[ItemStack] = field(default_factory=list)
    equipment: list = field(default_factory=lambda: [None] * 6)
    gold: int = 0
    alive: bool = True
    death_tick: int | None = None
    frozen_level_snapshot: float | None = None
    last_hitter: int | None = None
    killed_by: int | None = None

    @property
    def food(self) -> float:
        return self.food_half / 2

    @property
    def water(self) -> float:
        return self.water_half / 2

    def level(self, skill) -> int:
        return self.levels[int(skill)]

    def level_sum(self) -> int:
        return sum(self.levels)

    def mean_level(self) -> float:
        return sum(self.levels) / len(self.levels)

    def main_style(self) -> AttackStyle:
        return main_style(self.levels)

    def combat_level(self) -> float:
        return (self.levels[0] + self.levels[1] + self.levels[2]) / 3

    def equipped(self, slot: Slot) -> ItemStack | None:
        return self.equipment[slot]

    def equipment_score(self) -> int:
        return sum(it.level for it in self.equipment if it is not None)

    def armor_levels(self) -> int:
        eq = self.equipment
        return sum(eq[s].level for s in ARMOR_SLOTS if eq[s] is not None)


def main_style(levels) -> AttackStyle:
    """Highest combat skill; ties resolve Melee > Range > Mage."""
    best = AttackStyle.MELEE
    for style in (AttackStyle.RANGE, AttackStyle.MAGE):
        if levels[style] > levels[best]:
            best = style
    return best


NPC_ID_BASE = 128


@dataclass(slots=True)
class NpcState:
    npc_id: int
    pos: tuple[int, int]
    npc_type: NpcType
    level: int
    hp: int
    style: AttackStyle
    last_hitter: int | None = None
    alive: bool = True


class ActionError(ValueError):
    """An illegal sub-action; the engine masks it and logs ``reason``."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


# reasons caused by other agents acting earlier in the same tick; a policy
# cannot avoid these from its observation alone
CONTENTION_REASONS = frozenset({"Occupied", "ListingGone"})
