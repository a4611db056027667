"""Inventory, item use/equip, and the global market."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable

from .entities import (
    CATEGORY,
    STACKABLE,
    STYLE_OF,
    TOOL_SKILL,
    ActionError,
    AgentState,
    Category,
    ItemKind,
    ItemStack,
    slot_for,
)


def find_stack(agent: AgentState, kind: ItemKind, level: int) -> ItemStack | None:
    if kind not in STACKABLE:
        return None
    for item in agent.inventory:
        if item.kind == kind and item.level == level:
            return item
    return None


def has_room(agent: AgentState, kind: ItemKind, level: int, capacity: int = 12) -> bool:
    return len(agent.inventory) < capacity or find_stack(agent, kind, level) is not None


def add_item(agent: AgentState, kind: ItemKind, level: int, quantity: int,
             new_uid: Callable[[], int], capacity: int = 12) -> ItemStack:
    """Put items into ``agent``'s inventory, merging into a matching stack."""
    stack = find_stack(agent, kind, level)
    if stack is not None:
        stack.quantity += quantity
        return stack
    if len(agent.inventory) >= capacity:
        raise ActionError("InventoryFull", f"agent {agent.agent_id}")
    stack = ItemStack(new_uid(), kind, level, quantity)
    agent.inventory.append(stack)
    return stack


def required_level(agent: AgentState, kind: ItemKind) -> int:
    """Skill level that gates equipping ``kind`` (0 = ungated)."""
    cat = CATEGORY[kind]
    if cat in (Category.WEAPON, Category.AMMUNITION):
        return agent.levels[STYLE_OF[kind]]
    if cat is Category.ARMOR:
        return max(agent.levels[0], agent.levels[1], agent.levels[2])
    if cat is Category.TOOL:
        return agent.levels[TOOL_SKILL[kind]]
    return 0


def can_use(agent: AgentState, item: ItemStack) -> bool:
    if CATEGORY[item.kind] is Category.CONSUMABLE:
        return True
    return item.level <= required_level(agent, item.kind)


def use_item(agent: AgentState, index: int, restore: int = 10, capacity: int = 12) -> dict:
    """Equip or consume the item at ``index``; returns a ``Use`` event."""
    if not 0 <= index < len(agent.inventory):
        raise ActionError("EmptySlot", f"index {index}")
    item = agent.inventory[index]
    kind = item.kind
    event = {"e": "Use", "a": agent.agent_id, "uid": item.uid, "kind": int(kind), "level": item.level}
    if CATEGORY[kind] is Category.CONSUMABLE:
        amount = restore * item.level
        if kind is ItemKind.RATION:
            agent.food_half = min(200, agent.food_half + 2 * amount)
            agent.water_half = min(200, agent.water_half + 2 * amount)
        else:
            agent.hp = min(100, agent.hp + amount)
        item.quantity -= 1
        if item.quantity == 0:
            del agent.inventory[index]
        event["effect"] = "consume"
        return event
    if item.level > required_level(agent, kind):
        raise ActionError("LevelGate", f"{kind.name} level {item.level}")
    slot = slot_for(kind)
    previous = agent.equipment[slot]
    del agent.inventory[index]
    if previous is not None:
        if len(agent.inventory) >= capacity:
            agent.inventory.insert(index, item)
            raise ActionError("InventoryFull", "no room to unequip")
        agent.inventory.insert(index, previous)
    agent.equipment[slot] = item
    event["effect"] = "equip"
    event["unequipped"] = previous.uid if previous is not None else None
    return event


@dataclass(slots=True)
class Listing:
    listing_id: int
    seller: int
    item: ItemStack
    price: int


@dataclass
class Market:
    """Global store. ``order`` is kept sorted by (price, listing_id)."""

    listings: dict[int, Listing] = field(default_factory=dict)
    order: list[tuple[int, int]] = field(default_factory=list)
    next_id: int = 0

    def add(self, seller: int, item: ItemStack, price: int) -> Listing:
        listing = Listing(self.next_id, seller, item, price)
        self.next_id += 1
        self.listings[listing.listing_id] = listing
        bisect.insort(self.order, (price, listing.listing_id))
        return listing

    def remove(self, listing_id: int) -> Listing:
        listing = self.listings.pop(listing_id)
        key = (listing.price, listing_id)
        i = bisect.bisect_left(self.order, key)
        del self.order[i]
        return listing

    def window(self, size: int = 170) -> list[Listing]:
        return [self.listings[lid] for _, lid in self.order[:size]]

    def escrow_gold(self) -> int:
        # gold never sits in the market; listings hold items only
        return 0

    def by_seller(self, seller: int) -> list[Listing]:
        return [l for l in self.listings.values() if l.seller == seller]

    def __len__(self) -> int:
        return len(self.listings)


def list_item(agent: AgentState, index: int, price: int, market: Market,
              new_uid: Callable[[], int]) -> tuple[Listing, dict]:
    """Move one unit from inventory ``index`` into a new listing."""
    if not isinstance(price, int) or price < 1:
        raise ActionError("InvalidPrice", f"price {price!r}")
    if not 0 <= index < len(agent.inventory):
        raise ActionError("EmptySlot", f"index {index}")
    src = agent.inventory[index]
    src.quantity -= 1
    if src.quantity == 0:
        del agent.inventory[index]
    unit = ItemStack(new_uid(), src.kind, src.level, 1)
    listing = market.add(agent.agent_id, unit, price)
    event = {
        "e": "List", "seller": agent.agent_id, "lid": listing.listing_id, "src": src.uid,
        "uid": unit.uid, "kind": int(unit.kind), "level": unit.level, "price": price,
    }
    return listing, event


@dataclass(frozen=True)
class BuyOrder:
    buyer: int
    window_index: int


def resolve_purchases(market: Market, orders, agents, window_ids, new_uid: Callable[[], int],
                      capacity: int = 12) -> list[dict]:
    """Settle buy orders in ascending buyer id against this tick's window snapshot.

    ``agents`` maps agent id to AgentState; ``window_ids`` lists the listing ids
    shown in the observation the orders were issued from.
    """
    events = []
    for order in sorted(orders, key=lambda o: o.buyer):
        buyer = agents[order.buyer]
        reason = None
        listing = None
        if not 0 <= order.window_index < len(window_ids):
            reason = "BadWindowIndex"
        else:
            listing = market.listings.get(window_ids[order.window_index])
            if listing is None:
                reason = "ListingGone"
            elif listing.seller == buyer.agent_id:
                reason = "OwnListing"
            elif buyer.gold < listing.price:
                reason = "InsufficientGold"
            elif not has_room(buyer, listing.item.kind, listing.item.level, capacity):
                reason = "InventoryFull"
        if reason is not None:
            events.append({"e": "Masked", "a": buyer.agent_id, "action": "buy", "reason": reason})
            continue
        market.remove(listing.listing_id)
        seller = agents[listing.seller]
        buyer.gold -= listing.price
        seller.gold += listing.price
        item = listing.item
        into = add_item(buyer, item.kind, item.level, 1, lambda: item.uid, capacity)
        events.append({
            "e": "Buy", "buyer": buyer.agent_id, "seller": seller.agent_id, "lid": listing.listing_id,
            "uid": item.uid, "into": into.uid, "kind": int(item.kind), "level": item.level,
            "price": listing.price,
        })
    return events


def delist_seller(market: Market, seller: int) -> list[dict]:
    """Destroy every listing of a dead seller."""
    events = []
    for listing in sorted(market.by_seller(seller), key=lambda l: l.listing_id):
        market.remove(listing.listing_id)
        events.append({
            "e": "Delist", "seller": seller, "lid": listing.listing_id, "uid": listing.item.uid,
            "kind": int(listing.item.kind), "level": listing.item.level,
        })
    return events
