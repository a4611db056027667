"""Simulation constants and the flat key/value config file loader.

Every tunable rule constant lives on :class:`SimConfig`. A config file is a flat
mapping (YAML or JSON) whose keys are SimConfig field names, MapGenConfig
fields (``size``, ``npc_count``, ``map_seed``) or ``<terrain>_ratio`` entries,
e.g. ``forest_ratio: 0.0``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

import yaml

from .worldgen import DEFAULT_RATIOS, MapGenConfig, parse_kind


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 1280
    # fog
    fog_start: int = 240
    fog_interval: int = 16
    fog_damage: int = 1
    # metabolism, in half-points per tick for decay
    food_decay_half: int = 1
    water_decay_half: int = 1
    starve_damage: int = 1
    thirst_damage: int = 1
    regen: int = 1
    regen_threshold: int = 50
    # resources and progression
    respawn_ticks: int = 50
    xp_per_level: int = 10
    max_level: int = 10
    inventory_size: int = 12
    consumable_restore: int = 10
    # combat
    base_damage: int = 10
    skill_damage: int = 2
    weapon_damage: int = 3
    ammo_damage: int = 1
    armor_defense: int = 2
    min_damage: int = 1
    dominance: float = 1.5
    vision_radius: int = 7
    # NPCs
    npc_hp_base: int = 20
    npc_hp_per_level: int = 8
    npc_damage_base: int = 2
    npc_damage_per_level: int = 2
    npc_defense_per_level: int = 1
    # market / comms
    market_window: int = 170
    comm_tokens: int = 128

    def to_dict(self) -> dict:
        return asdict(self)


_SIM_KEYS = {f.name: f.type for f in fields(SimConfig)}


def _coerce(value, current):
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def config_from_mapping(data: dict) -> tuple[SimConfig, MapGenConfig]:
    """Split a flat mapping into simulation and map-generation configs."""
    defaults = SimConfig()
    sim_kw = {}
    map_kw: dict = {}
    ratios = {k: v for k, v in DEFAULT_RATIOS.items()}
    for key, value in (data or {}).items():
        if key in _SIM_KEYS:
            sim_kw[key] = _coerce(value, getattr(defaults, key))
        elif key in ("size", "npc_count"):
            map_kw[key] = int(value)
        elif key == "map_seed":
            map_kw["seed"] = int(value)
        elif key.endswith("_ratio"):
            ratios[parse_kind(key[: -len("_ratio")])] = float(value)
        else:
            raise KeyError(f"unknown config key {key!r}")
    cfg = MapGenConfig(terrain_ratios=ratios, **map_kw)
    cfg.validate()
    return SimConfig(**sim_kw), cfg


def load_config(path) -> tuple[SimConfig, MapGenConfig]:
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a flat mapping")
    return config_from_mapping(data)


def load_overrides(path) -> tuple[dict, dict]:
    """``(map_cfg, sim_cfg)`` dicts for match specs; the map seed is kept only if set."""
    if path is None:
        return {}, {}
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a flat mapping")
    sim, mcfg = config_from_mapping(data)
    map_cfg = mcfg.to_dict()
    if "map_seed" not in data:
        del map_cfg["seed"]
    return map_cfg, sim.to_dict()
