from __future__ import annotations

import numpy as np
import pytest

from arena.sim import reset
from arena.worldgen import GameMap, MapGenConfig, TerrainKind


def grass_map(size: int = 64) -> GameMap:
    kinds = np.full((size, size), TerrainKind.GRASS, dtype=np.uint8)
    kinds[0, :] = kinds[-1, :] = kinds[:, 0] = kinds[:, -1] = TerrainKind.LAVA
    return GameMap(size, kinds, np.zeros((size, size), dtype=np.int32), 0)


def place(state, agent_id: int, pos) -> None:
    """Teleport an agent, keeping the occupancy index consistent."""
    a = state.agents[agent_id]
    del state.occupancy[a.pos]
    assert pos not in state.occupancy, f"{pos} is occupied"
    a.pos = tuple(pos)
    state.occupancy[a.pos] = agent_id


def park_all(state, origin=(40, 10)) -> None:
    """Move every agent into a tight block far from the tiles a test cares about."""
    r0, c0 = origin
    for a in state.agents:
        del state.occupancy[a.pos]
    for k, a in enumerate(state.agents):
        a.pos = (r0 + k // 16, c0 + k % 16 * 2)
        state.occupancy[a.pos] = a.agent_id


@pytest.fixture
def blank_state():
    """A 64x64 all-grass world with no NPCs."""
    gm = grass_map(64)
    state, _ = reset(11, MapGenConfig(size=64, npc_count=0, seed=11), game_map=gm)
    return state


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
