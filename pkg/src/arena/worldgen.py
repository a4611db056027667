"""Procedural map generation, terrain semantics, spawns and NPC placement."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

MAP_FORMAT_VERSION = 1


class TerrainKind(IntEnum):
    LAVA = 0
    WATER = 1
    GRASS = 2
    SCRUB = 3
    FOREST = 4
    STONE = 5
    SLAG = 6
    ORE = 7
    STUMP = 8
    TREE = 9
    FRAGMENT = 10
    CRYSTAL = 11
    WEEDS = 12
    HERB = 13
    OCEAN = 14
    FISH = 15


T = TerrainKind

IMPASSABLE = frozenset({T.LAVA, T.WATER, T.STONE, T.OCEAN, T.FISH})

# harvested kind -> kind left behind
DEGRADES_TO: dict[TerrainKind, TerrainKind] = {
    T.FOREST: T.SCRUB,
    T.ORE: T.SLAG,
    T.TREE: T.STUMP,
    T.CRYSTAL: T.FRAGMENT,
    T.HERB: T.WEEDS,
    T.FISH: T.OCEAN,
    T.WATER: T.WATER,
}
RESPAWNS_TO: dict[TerrainKind, TerrainKind] = {
    v: k for k, v in DEGRADES_TO.items() if k is not v
}
HARVESTABLE = frozenset(DEGRADES_TO)
DEGRADED = frozenset(RESPAWNS_TO)

# lookup tables indexed by kind value
PASSABLE_LUT = np.array([k not in IMPASSABLE for k in TerrainKind], dtype=bool)
HARVESTABLE_LUT = np.array([k in HARVESTABLE for k in TerrainKind], dtype=bool)

DEFAULT_RATIOS: dict[TerrainKind, float] = {
    T.FOREST: 0.12,
    T.WATER: 0.06,
    T.STONE: 0.05,
    T.ORE: 0.03,
    T.TREE: 0.03,
    T.CRYSTAL: 0.03,
    T.HERB: 0.03,
    T.FISH: 0.04,
    T.LAVA: 0.01,
    T.GRASS: 0.55,
}

# kinds placed by the generator, in placement order; grass fills the rest
GENERATED_KINDS = (
    T.WATER, T.STONE, T.LAVA, T.FOREST, T.ORE, T.TREE, T.CRYSTAL, T.HERB, T.FISH,
)
SPAWN_BAND = 2
CENTER_SPAWN_FREE_RADIUS = 16
N_TEAMS = 16
TEAM_SIZE = 8
MIN_CLUSTER_GAP = 8


class InvalidConfig(ValueError):
    pass


class NotHarvestable(ValueError):
    pass


class InsufficientSpawnTiles(RuntimeError):
    pass


def parse_kind(name) -> TerrainKind:
    if isinstance(name, TerrainKind):
        return name
    if isinstance(name, int):
        return TerrainKind(name)
    return TerrainKind[str(name).upper()]


@dataclass
class MapGenConfig:
    size: int = 128
    terrain_ratios: dict = field(default_factory=lambda: dict(DEFAULT_RATIOS))
    npc_count: int = 128
    seed: int = 0

    def __post_init__(self):
        self.terrain_ratios = {parse_kind(k): float(v) for k, v in self.terrain_ratios.items()}

    def validate(self) -> None:
        if self.size < 32 or self.size % 2:
            raise InvalidConfig(f"map size must be even and >= 32, got {self.size}")
        if self.npc_count < 0:
            raise InvalidConfig("npc_count must be >= 0")
        total = 0.0
        for kind, ratio in self.terrain_ratios.items():
            if ratio < 0:
                raise InvalidConfig(f"negative ratio for {kind.name}")
            if kind is not T.GRASS:
                total += ratio
        if total > 1.0 + 1e-9:
            raise InvalidConfig(f"non-grass ratios sum to {total:.3f} > 1")

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "npc_count": self.npc_count,
            "seed": self.seed,
            "terrain_ratios": {k.name.lower(): v for k, v in sorted(self.terrain_ratios.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> MapGenConfig:
        return cls(
            size=int(d.get("size", 128)),
            terrain_ratios=d.get("terrain_ratios", DEFAULT_RATIOS),
            npc_count=int(d.get("npc_count", 128)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class GameMap:
    """Square terrain grid.

    ``kinds`` holds TerrainKind values; ``respawn`` holds remaining ticks until a
    degraded tile regrows (0 = no timer).
    """

    size: int
    kinds: np.ndarray
    respawn: np.ndarray
    seed: int = 0

    @property
    def passable(self) -> np.ndarray:
        return PASSABLE_LUT[self.kinds]

    def kind_at(self, pos) -> TerrainKind:
        return TerrainKind(int(self.kinds[pos[0], pos[1]]))

    def in_bounds(self, pos) -> bool:
        return 0 <= pos[0] < self.size and 0 <= pos[1] < self.size

    def copy(self) -> GameMap:
        return GameMap(self.size, self.kinds.copy(), self.respawn.copy(), self.seed)

    def histogram(self) -> dict[TerrainKind, int]:
        counts = np.bincount(self.kinds.ravel(), minlength=len(TerrainKind))
        return {k: int(counts[k]) for k in TerrainKind}

    def to_json(self) -> str:
        return json.dumps(
            {"version": MAP_FORMAT_VERSION, "size": self.size, "seed": self.seed,
             "tiles": rle_encode(self.kinds.ravel())},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> GameMap:
        d = json.loads(text)
        if d.get("version") != MAP_FORMAT_VERSION:
            raise ValueError(f"unsupported map version {d.get('version')}")
        size = int(d["size"])
        kinds = rle_decode(d["tiles"]).reshape(size, size)
        return cls(size, kinds, np.zeros((size, size), dtype=np.int32), int(d["seed"]))


def rle_encode(flat: np.ndarray) -> list[list[int]]:
    """Run-length encode to ``[[kind, run], ...]``."""
    flat = np.asarray(flat)
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], edges))
    runs = np.diff(np.concatenate((starts, [flat.size])))
    return [[int(flat[s]), int(n)] for s, n in zip(starts, runs)]


def rle_decode(runs) -> np.ndarray:
    if not runs:
        return np.zeros(0, dtype=np.uint8)
    kinds, counts = zip(*runs)
    return np.repeat(np.array(kinds, dtype=np.uint8), counts)


def _value_noise(rng: np.random.Generator, size: int, cell: int) -> np.ndarray:
    """Bilinear-interpolated lattice noise in [0, 1)."""
    n = size // cell + 2
    lattice = rng.random((n, n))
    coords = np.arange(size) / cell
    i0 = coords.astype(int)
    f = coords - i0
    f = f * f * (3 - 2 * f)
    a = lattice[np.ix_(i0, i0)]
    b = lattice[np.ix_(i0, i0 + 1)]
    c = lattice[np.ix_(i0 + 1, i0)]
    d = lattice[np.ix_(i0 + 1, i0 + 1)]
    fx = f[None, :]
    fy = f[:, None]
    top = a * (1 - fx) + b * fx
    bot = c * (1 - fx) + d * fx
    return top * (1 - fy) + bot * fy


def border_distance(size: int) -> np.ndarray:
    idx = np.arange(size)
    edge = np.minimum(idx, size - 1 - idx)
    return np.minimum(edge[:, None], edge[None, :])


def generate_map(cfg: MapGenConfig) -> GameMap:
    cfg.validate()
    size = cfg.size
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x6D6170]))
    kinds = np.full((size, size), T.GRASS, dtype=np.uint8)
    bdist = border_distance(size)
    interior = bdist >= 1
    n_interior = int(interior.sum())
    free = interior.copy()
    # spawn band stays walkable
    band = (bdist >= 1) & (bdist <= SPAWN_BAND)

    for kind in GENERATED_KINDS:
        ratio = cfg.terrain_ratios.get(kind, 0.0)
        noise = _value_noise(rng, size, 8) + 0.35 * rng.random((size, size))
        if ratio <= 0:
            continue
        target = max(1, int(round(ratio * n_interior)))
        eligible = free.copy()
        if kind in IMPASSABLE:
            eligible &= ~band
        if kind is T.FISH:
            water = kinds == T.WATER
            adj = np.zeros_like(water)
            adj[1:, :] |= water[:-1, :]
            adj[:-1, :] |= water[1:, :]
            adj[:, 1:] |= water[:, :-1]
            adj[:, :-1] |= water[:, 1:]
            near = eligible & adj
            if near.any():
                eligible = near
        cand = np.flatnonzero(eligible.ravel())
        if cand.size == 0:
            continue
        order = np.argsort(-noise.ravel()[cand], kind="stable")
        chosen = cand[order[:target]]
        kinds.ravel()[chosen] = kind
        free.ravel()[chosen] = False

    kinds[bdist == 0] = T.LAVA
    return GameMap(size, kinds, np.zeros((size, size), dtype=np.int32), cfg.seed)


def tile_transition(kind) -> TerrainKind:
    kind = parse_kind(kind)
    try:
        return DEGRADES_TO[kind]
    except KeyError:
        raise NotHarvestable(f"{kind.name} is not harvestable") from None


def chebyshev(a, b) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _ring_point(size: int, t: float) -> tuple[int, int]:
    """Point at path distance ``t`` clockwise along ring 1 starting at (1, 1)."""
    side = size - 3
    t = t % (4 * side)
    lo, hi = 1, size - 2
    if t < side:
        return lo, lo + int(round(t))
    t -= side
    if t < side:
        return lo + int(round(t)), hi
    t -= side
    if t < side:
        return hi, hi - int(round(t))
    t -= side
    return hi - int(round(t)), lo


@dataclass
class SpawnPlan:
    team_slots: list[list[tuple[int, int]]]

    def all_positions(self) -> list[tuple[int, int]]:
        return [p for team in self.team_slots for p in team]


def spawn_clusters(game_map: GameMap) -> list[list[tuple[int, int]]]:
    """The 16 fixed spawn clusters of a map, before team assignment."""
    size = game_map.size
    spacing = 4 * (size - 3) / N_TEAMS
    radius = int((spacing - MIN_CLUSTER_GAP) // 2)
    if radius < 1:
        raise InsufficientSpawnTiles(f"map of size {size} is too small for {N_TEAMS} spawn clusters")
    bdist = border_distance(size)
    band = (bdist >= 1) & (bdist <= SPAWN_BAND) & game_map.passable
    if int(band.sum()) < N_TEAMS * TEAM_SIZE:
        raise InsufficientSpawnTiles("fewer than 128 passable border tiles")
    band_r, band_c = np.nonzero(band)
    clusters = []
    for k in range(N_TEAMS):
        ar, ac = _ring_point(size, k * spacing)
        d = np.maximum(np.abs(band_r - ar), np.abs(band_c - ac))
        ok = d <= radius
        idx = np.flatnonzero(ok)
        if idx.size < TEAM_SIZE:
            raise InsufficientSpawnTiles(f"cluster {k} has only {idx.size} spawnable tiles")
        order = np.lexsort((band_c[idx], band_r[idx], d[idx]))
        pick = idx[order[:TEAM_SIZE]]
        clusters.append([(int(band_r[i]), int(band_c[i])) for i in pick])
    for i in range(N_TEAMS):
        for j in range(i + 1, N_TEAMS):
            gap = min(chebyshev(a, b) for a in clusters[i] for b in clusters[j])
            if gap < MIN_CLUSTER_GAP:
                raise InsufficientSpawnTiles(f"clusters {i} and {j} only {gap} tiles apart")
    return clusters


def spawn_positions(seed: int, game_map: GameMap) -> SpawnPlan:
    clusters = spawn_clusters(game_map)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x737061776E]))
    perm = rng.permutation(N_TEAMS)
    return SpawnPlan([list(clusters[int(perm[t])]) for t in range(N_TEAMS)])


class NpcType(IntEnum):
    PASSIVE = 0
    NEUTRAL = 1
    HOSTILE = 2


def map_center(size: int) -> tuple[int, int]:
    return size // 2, size // 2


def npc_level(pos, size: int) -> int:
    c = size // 2
    d = chebyshev(pos, (c, c))
    level = 1 + (9 * (c - d)) // c
    return max(1, min(10, level))


@dataclass(frozen=True)
class NpcSpawn:
    pos: tuple[int, int]
    npc_type: NpcType
    level: int
    style: int


def npc_placement(seed: int, game_map: GameMap, count: int) -> list[NpcSpawn]:
    """Place NPCs at Chebyshev rings sampled uniformly from edge to centre."""
    size = game_map.size
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6E7063]))
    c = size // 2
    bdist = border_distance(size)
    ok = game_map.passable & (bdist > SPAWN_BAND)
    rows, cols = np.nonzero(ok)
    ring = np.maximum(np.abs(rows - c), np.abs(cols - c))
    count = min(max(count, 0), rows.size)
    taken = np.zeros(rows.size, dtype=bool)
    max_ring = int(ring.max()) if rows.size else 0
    types = np.arange(count) % 3
    rng.shuffle(types)
    out = []
    for i in range(count):
        want = int(rng.integers(0, max_ring + 1))
        gap = np.abs(ring - want).astype(float)
        gap[taken] = np.inf
        best = np.flatnonzero(gap == gap.min())
        j = int(best[rng.integers(best.size)])
        taken[j] = True
        pos = (int(rows[j]), int(cols[j]))
        out.append(NpcSpawn(pos, NpcType(int(types[i])), npc_level(pos, size), int(rng.integers(3))))
    return out
