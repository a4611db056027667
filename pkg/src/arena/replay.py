"""Replay files: one JSON header line, one line per tick, one footer line.

Every line is canonical JSON (sorted keys, no spaces), so equal matches give
equal bytes. The footer carries the final-state hash, the match score, and a
64-bit BLAKE2b checksum over everything before it. Paths ending in ``.gz`` are
gzip-compressed with a zero timestamp.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .scoring import MatchScore, score_events

FORMAT_VERSION = 1


class ReplayError(ValueError):
    pass


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


@dataclass
class Replay:
    header: dict
    ticks: list = field(default_factory=list)  # [(tick, [event, ...]), ...]
    footer: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.header["horizon"]

    @property
    def policies(self) -> list[str]:
        return self.header["policies"]

    def events(self):
        for tick, events in self.ticks:
            for ev in events:
                yield tick, ev

    def score(self) -> MatchScore:
        return MatchScore.from_dict(self.footer["score"])

    def recompute_score(self) -> MatchScore:
        return score_events(self.events(), self.horizon)

    def __eq__(self, other):
        if not isinstance(other, Replay):
            return NotImplemented
        return to_bytes(self) == to_bytes(other)


def _checksum(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def to_bytes(replay: Replay) -> bytes:
    header = dict(replay.header)
    header["format_version"] = FORMAT_VERSION
    buf = io.BytesIO()
    buf.write(canonical(header) + b"\n")
    last = None
    for tick, events in replay.ticks:
        if last is not None and tick <= last:
            raise ReplayError(f"tick {tick} after {last}")
        last = tick
        buf.write(canonical({"t": tick, "events": events}) + b"\n")
    footer = {k: v for k, v in replay.footer.items() if k != "checksum"}
    body = buf.getvalue() + canonical(footer)
    footer["checksum"] = _checksum(body)
    buf.write(canonical(footer) + b"\n")
    return buf.getvalue()


def from_bytes(data: bytes) -> Replay:
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    if len(lines) < 2:
        raise ReplayError("replay is truncated")
    try:
        header = json.loads(lines[0])
        footer = json.loads(lines[-1])
    except ValueError as err:
        raise ReplayError(f"unreadable replay: {err}") from err
    if not isinstance(footer, dict) or "checksum" not in footer:
        raise ReplayError("checksum footer missing (truncated replay?)")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ReplayError(f"unsupported replay format_version {version!r}")
    stored = footer.pop("checksum")
    body = b"".join(line + b"\n" for line in lines[:-1]) + canonical(footer)
    if _checksum(body) != stored:
        raise ReplayError("checksum mismatch")
    ticks = []
    last = None
    for line in lines[1:-1]:
        rec = json.loads(line)
        tick = rec["t"]
        if last is not None and tick <= last:
            raise ReplayError(f"tick {tick} after {last}")
        last = tick
        ticks.append((tick, rec["events"]))
    return Replay(header, ticks, footer)


def write_replay(path, replay: Replay) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = to_bytes(replay)
    if path.suffix == ".gz":
        data = gzip.compress(data, mtime=0)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return path


def read_replay(path) -> Replay:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix == ".gz":
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as err:
            raise ReplayError(f"{path}: {err}") from err
    return from_bytes(data)


def replay_from_state(state, policies, score: MatchScore, extra: dict | None = None) -> Replay:
    """Build a replay from a finished :class:`~arena.sim.WorldState`."""
    header = {
        "format_version": FORMAT_VERSION,
        "seed": state.seed,
        "map_cfg": state.map_cfg.to_dict(),
        "sim_cfg": state.cfg.to_dict(),
        "policies": list(policies),
        "horizon": state.cfg.horizon,
    }
    if extra:
        header.update(extra)
    # events are plain JSON values already; round-trip makes tuples into lists
    ticks = [(tick, json.loads(canonical(events))) for tick, events in state.log]
    footer = {"state_hash": state.state_hash(), "score": score.to_dict(), "final_tick": state.tick}
    return Replay(header, ticks, footer)


def replay_paths(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(p for p in directory.rglob("*") if p.is_file() and (p.name.endswith(".jsonl") or p.name.endswith(".jsonl.gz")))
