"""Match execution, PvE evaluation, PvP scheduling and rated campaigns."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .config import SimConfig
from .policies import STAGE1, STAGE2, PolicyLoadError, resolve_policy
from .rating import DEFAULT_PARAMS, Rating, TrueSkillParams, leaderboard_score, rate_match, top1_ratio
from .replay import Replay, canonical, read_replay, replay_from_state, write_replay
from .scoring import MatchScore, match_score
from .sim import reset, step
from .worldgen import N_TEAMS, MapGenConfig

log = logging.getLogger(__name__)

STAGE_BUILTINS = {
    1: ("mixture",) * 8 + ("combat",) * 7,
    2: ("reckless",) * 5 + ("ruthless",) * 5 + ("coward",) * 5,
}
assert set(STAGE_BUILTINS[1]) == set(STAGE1) and set(STAGE_BUILTINS[2]) == set(STAGE2)


class Cadence(str, Enum):
    DAILY = "daily"
    WEEKLY = "weekly"


class StoreCorrupt(RuntimeError):
    pass


# --- single matches ---------------------------------------------------------------------

def _sim_overrides(sim_cfg: dict | None) -> SimConfig:
    return SimConfig(**(sim_cfg or {}))


def build_configs(seed: int, map_cfg: dict | None = None, sim_cfg: dict | None = None):
    """Map and simulation configs for a match; the map seed defaults to the match seed."""
    map_cfg = dict(map_cfg or {})
    map_cfg.setdefault("seed", seed)
    mcfg = MapGenConfig.from_dict(map_cfg)
    mcfg.validate()
    return mcfg, _sim_overrides(sim_cfg)


def policy_seed(seed: int, team: int, tick: int) -> int:
    return (seed * 1_000_003 + team * 10_007 + tick) & 0x7FFFFFFF


def play(seed: int, team_policies, map_cfg: dict | None = None, sim_cfg: dict | None = None,
         policies=None):
    """Run a match to the end; returns the final WorldState.

    ``team_policies`` holds one policy identifier per team. Pre-built policy
    objects may be passed in ``policies`` instead of resolving identifiers.
    """
    if len(team_policies) != N_TEAMS:
        raise ValueError(f"need {N_TEAMS} team policies, got {len(team_policies)}")
    mcfg, scfg = build_configs(seed, map_cfg, sim_cfg)
    own = policies is None
    if own:
        policies = []
        try:
            for ident in team_policies:
                policies.append(resolve_policy(ident))
        except Exception:
            for p in policies:
                p.close()
            raise
    try:
        state, obs = reset(seed, mcfg, scfg)
        scratch = [{} for _ in range(N_TEAMS)]
        while not state.done:
            tick = state.tick
            actions = [
                policies[t].act(obs[t], policy_seed(seed, t, tick), scratch[t]) for t in range(N_TEAMS)
            ]
            state, obs, _ = step(state, actions)
    finally:
        if own:
            for p in policies:
                p.close()
    return state


def simulate_to_replay(seed: int, team_policies, map_cfg=None, sim_cfg=None, extra=None):
    state = play(seed, team_policies, map_cfg, sim_cfg)
    score = match_score(state)
    return state, score, replay_from_state(state, team_policies, score, extra)


def resimulate(replay: Replay) -> tuple[str, MatchScore]:
    """Re-run the match a replay describes; returns (final-state hash, score)."""
    h = replay.header
    state = play(h["seed"], h["policies"], h["map_cfg"], h["sim_cfg"])
    return state.state_hash(), match_score(state)


@dataclass(frozen=True)
class MatchSpec:
    match_id: str
    seed: int
    slots: tuple[str, ...]
    slot_permutation_seed: int
    map_cfg: dict = field(default_factory=dict)
    sim_cfg: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if len(self.slots) != N_TEAMS:
            raise ValueError(f"a match needs exactly {N_TEAMS} slots")

    def team_slots(self) -> list[int]:
        """``team_slots()[team]`` is the slot index playing as ``team``."""
        order = list(range(N_TEAMS))
        random.Random(self.slot_permutation_seed).shuffle(order)
        return order

    def team_policies(self) -> list[str]:
        return [self.slots[s] for s in self.team_slots()]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slots"] = list(self.slots)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> MatchSpec:
        return cls(d["match_id"], d["seed"], tuple(d["slots"]), d["slot_permutation_seed"],
                   d.get("map_cfg", {}), d.get("sim_cfg", {}))


@dataclass
class MatchRecord:
    match_id: str
    spec: dict
    score: dict | None
    replay: str | None
    state_hash: str | None
    duration: float
    team_slots: list[int]
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def match_score(self) -> MatchScore:
        return MatchScore.from_dict(self.score)

    def slot_ranks(self) -> list[int]:
        """Rank of each slot (not team) in this match."""
        ranks = [0] * N_TEAMS
        for team, slot in enumerate(self.team_slots):
            ranks[slot] = self.score["teams"][team]["rank"]
        return ranks

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> MatchRecord:
        return cls(**d)


def run_match(spec: MatchSpec, replay_dir=None, compress: bool = True) -> MatchRecord:
    t0 = time.perf_counter()
    team_slots = spec.team_slots()
    try:
        state, score, rep = simulate_to_replay(
            spec.seed, spec.team_policies(), spec.map_cfg, spec.sim_cfg,
            extra={"match_id": spec.match_id, "spec": spec.to_dict()},
        )
    except (PolicyLoadError, OSError) as err:
        log.warning("match %s aborted: %s", spec.match_id, err)
        return MatchRecord(spec.match_id, spec.to_dict(), None, None, None,
                           time.perf_counter() - t0, team_slots, error=f"{type(err).__name__}: {err}")
    path = None
    if replay_dir is not None:
        suffix = ".jsonl.gz" if compress else ".jsonl"
        path = str(write_replay(Path(replay_dir) / f"{spec.match_id}{suffix}", rep))
    return MatchRecord(spec.match_id, spec.to_dict(), score.to_dict(), path, state.state_hash(),
                       time.perf_counter() - t0, team_slots)


def verify_record(record: MatchRecord) -> bool:
    """The stored score equals the one recomputed from the replay's events."""
    rep = read_replay(record.replay)
    return rep.recompute_score().to_dict() == record.score and rep.footer["state_hash"] == record.state_hash


def _run_all(specs, replay_dir, parallelism: int, ordered: bool = True):
    """Yield MatchRecords; in schedule order when ``ordered``."""
    if parallelism <= 1:
        for spec in specs:
            yield run_match(spec, replay_dir)
        return
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(run_match, spec, replay_dir) for spec in specs]
        if ordered:
            for fut in futures:
                yield fut.result()
        else:
            for fut in as_completed(futures):
                yield fut.result()


# --- PvE --------------------------------------------------------------------------------

@dataclass
class PveReport:
    candidate: str
    stage: int
    records: list[MatchRecord]
    ranks: list[int]
    top1_ratio: float
    eligible: bool


def stage_gate(ratio: float, threshold: float = 0.4) -> bool:
    return ratio >= threshold


def pve_schedule(candidate: str, stage: int, rounds: int = 10, seed: int = 0,
                 map_cfg=None, sim_cfg=None) -> list[MatchSpec]:
    if stage not in STAGE_BUILTINS:
        raise ValueError(f"unknown stage {stage}")
    rng = random.Random(f"pve:{stage}:{seed}")
    slots = (candidate,) + STAGE_BUILTINS[stage]
    return [
        MatchSpec(f"pve{stage}-{seed}-{k:03d}", rng.getrandbits(31), slots, rng.getrandbits(31),
                  dict(map_cfg or {}), dict(sim_cfg or {}))
        for k in range(rounds)
    ]


def pve_eval(candidate: str, stage: int = 1, rounds: int = 10, seed: int = 0, replay_dir=None,
             parallelism: int = 1, gate: float = 0.4, map_cfg=None, sim_cfg=None) -> PveReport:
    """Play ``rounds`` matches of the candidate (slot 0) against 15 built-in teams."""
    specs = pve_schedule(candidate, stage, rounds, seed, map_cfg, sim_cfg)
    records = list(_run_all(specs, replay_dir, parallelism))
    errors = [r for r in records if not r.ok]
    if errors:
        raise RuntimeError(f"PvE match {errors[0].match_id} failed: {errors[0].error}")
    ranks = [r.slot_ranks()[0] for r in records]
    ratio = top1_ratio(ranks)
    return PveReport(candidate, stage, records, ranks, ratio, stage_gate(ratio, gate))


# --- PvP --------------------------------------------------------------------------------

def pvp_schedule(pool, n_matches: int, seed: int = 0, map_cfg=None, sim_cfg=None,
                 prefix: str = "pvp") -> list[MatchSpec]:
    """Matches until every submission has appeared in at least ``n_matches`` of them.

    Each match has a focal submission (the one with fewest appearances so far)
    and 15 opponents drawn from the rest of the pool, without replacement when
    the pool allows it.
    """
    pool = list(pool)
    if len(pool) < 2:
        raise ValueError("a PvP pool needs at least two submissions")
    if len(set(pool)) != len(pool):
        raise ValueError("duplicate submission ids in pool")
    rng = random.Random(f"{prefix}:{seed}:{len(pool)}")
    seen = dict.fromkeys(pool, 0)
    specs = []
    k = 0
    while min(seen.values()) < n_matches:
        focal = min(pool, key=lambda s: seen[s])
        others = [s for s in pool if s != focal]
        if len(others) >= N_TEAMS - 1:
            opponents = rng.sample(others, N_TEAMS - 1)
        else:
            opponents = rng.choices(others, k=N_TEAMS - 1)
        slots = (focal, *opponents)
        for s in set(slots):
            seen[s] += 1
        specs.append(MatchSpec(f"{prefix}-{seed}-{k:06d}", rng.getrandbits(31), slots, rng.getrandbits(31),
                               dict(map_cfg or {}), dict(sim_cfg or {})))
        k += 1
    return specs


def rate_record(ratings: dict[str, Rating], record: MatchRecord, submission_of,
                params: TrueSkillParams = DEFAULT_PARAMS) -> dict[str, Rating]:
    """Posterior ratings for the submissions in one finished match.

    A submission filling several slots is updated from its lowest-index slot.
    """
    subs = [submission_of(ident) for ident in record.spec["slots"]]
    priors = [ratings.get(s, Rating(params.mu0, params.sigma0)) for s in subs]
    post = rate_match(priors, record.slot_ranks(), params)
    out: dict[str, Rating] = {}
    for s, r in zip(subs, post):
        out.setdefault(s, r)
    return out


@dataclass
class CampaignConfig:
    store: Path
    pve_rounds: int = 10
    stage_gate: float = 0.4
    daily_matches: int = 100
    weekly_matches: int = 1000
    parallelism: int = 1
    deterministic: bool = True
    seed: int = 0
    map_cfg: dict = field(default_factory=dict)
    sim_cfg: dict = field(default_factory=dict)
    params: TrueSkillParams = DEFAULT_PARAMS

    def __post_init__(self):
        self.store = Path(self.store)
        if min(self.pve_rounds, self.daily_matches, self.weekly_matches, self.parallelism) <= 0:
            raise ValueError("campaign counts must be positive")

    def matches_for(self, cadence: Cadence) -> int:
        return self.daily_matches if Cadence(cadence) is Cadence.DAILY else self.weekly_matches


def _line_sum(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


class ResultStore:
    """Append-only MatchRecord log plus a checksummed rating snapshot.

    ``records.jsonl`` holds one ``{"record": ..., "sum": ...}`` line per match.
    A torn final line (crash during append) is dropped on open; any other
    damaged line makes the store refuse to load. ``ratings.json`` lists the
    match ids already rated, which makes re-applying a match a no-op.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.records_path = self.root / "records.jsonl"
        self.ratings_path = self.root / "ratings.json"
        self.replay_dir = self.root / "replays"
        self.records: dict[str, MatchRecord] = {}
        self.ratings: dict[str, Rating] = {}
        self.matches_played: dict[str, int] = {}
        self.updated_at: dict[str, str] = {}
        self.applied: list[str] = []
        self._applied_set: set[str] = set()
        self._load()

    # records
    def _load(self) -> None:
        if self.records_path.exists():
            data = self.records_path.read_bytes()
            lines = data.split(b"\n")
            tail = lines.pop()  # b"" when the file ends cleanly
            good = 0
            for i, line in enumerate(lines):
                rec = self._parse_line(line, i)
                self.records[rec.match_id] = rec
                good += len(line) + 1
            if tail:
                try:
                    rec = self._parse_line(tail, len(lines))
                except StoreCorrupt:
                    log.warning("dropping torn final record in %s", self.records_path)
                    with self.records_path.open("r+b") as fh:
                        fh.truncate(good)
                else:
                    self.records[rec.match_id] = rec
                    with self.records_path.open("ab") as fh:
                        fh.write(b"\n")
        if self.ratings_path.exists():
            try:
                blob = json.loads(self.ratings_path.read_bytes())
                body = blob["body"]
                ok = _line_sum(canonical(body)) == blob["sum"]
            except (ValueError, KeyError, TypeError) as err:
                raise StoreCorrupt(f"{self.ratings_path}: {err}") from err
            if not ok:
                raise StoreCorrupt(f"{self.ratings_path}: checksum mismatch")
            for row in body["ratings"]:
                sid = row["submission_id"]
                self.ratings[sid] = Rating(row["mu"], row["sigma"])
                self.matches_played[sid] = row["matches_played"]
                self.updated_at[sid] = row["updated_at"]
            self.applied = list(body["applied"])
            self._applied_set = set(self.applied)
            missing = self._applied_set - set(self.records)
            if missing:
                raise StoreCorrupt(f"rated matches missing from the record log: {sorted(missing)[:3]}")

    def _parse_line(self, line: bytes, lineno: int) -> MatchRecord:
        try:
            obj = json.loads(line)
            payload = canonical(obj["record"])
            if _line_sum(payload) != obj["sum"]:
                raise ValueError("checksum mismatch")
            return MatchRecord.from_dict(obj["record"])
        except (ValueError, KeyError, TypeError) as err:
            raise StoreCorrupt(f"{self.records_path}:{lineno + 1}: {err}") from err

    def append(self, record: MatchRecord) -> None:
        if record.match_id in self.records:
            return
        body = record.to_dict()
        line = canonical({"record": body, "sum": _line_sum(canonical(body))})
        with self.records_path.open("ab") as fh:
            fh.write(line + b"\n")
            fh.flush()
        self.records[record.match_id] = record

    # ratings
    def is_applied(self, match_id: str) -> bool:
        return match_id in self._applied_set

    def apply(self, record: MatchRecord, submission_of, params: TrueSkillParams) -> bool:
        """Rate one recorded match exactly once; returns whether ratings changed."""
        if self.is_applied(record.match_id):
            return False
        changed = False
        if record.ok:
            now = datetime.now(timezone.utc).isoformat(timespec="seconds")
            for sid, r in rate_record(self.ratings, record, submission_of, params).items():
                self.ratings[sid] = r
                self.matches_played[sid] = self.matches_played.get(sid, 0) + 1
                self.updated_at[sid] = now
            changed = True
        self.applied.append(record.match_id)
        self._applied_set.add(record.match_id)
        self._save_ratings()
        return changed

    def rating_rows(self) -> list[dict]:
        return [
            {"submission_id": sid, "mu": r.mu, "sigma": r.sigma,
             "matches_played": self.matches_played.get(sid, 0), "updated_at": self.updated_at.get(sid, "")}
            for sid, r in sorted(self.ratings.items())
        ]

    def _save_ratings(self) -> None:
        body = {"ratings": self.rating_rows(), "applied": self.applied}
        blob = {"body": body, "sum": _line_sum(canonical(body))}
        tmp = self.ratings_path.with_name(self.ratings_path.name + ".tmp")
        tmp.write_bytes(canonical(blob))
        tmp.replace(self.ratings_path)

    def leaderboard(self, params: TrueSkillParams = DEFAULT_PARAMS, pool=None) -> list[dict]:
        subs = set(self.ratings) | set(pool or ())
        rows = []
        for sid in subs:
            r = self.ratings.get(sid, Rating(params.mu0, params.sigma0))
            rows.append({"submission": sid, "mu": r.mu, "sigma": r.sigma,
                         "conservative": leaderboard_score(r), "matches": self.matches_played.get(sid, 0)})
        rows.sort(key=lambda row: (-row["conservative"], row["submission"]))
        return rows

    def write_leaderboard(self, rows, path=None) -> Path:
        path = Path(path or self.root / "leaderboard.csv")
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["submission", "mu", "sigma", "conservative", "matches"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return path


def load_pool(directory) -> dict[str, str]:
    """Submission id (file stem) -> policy identifier for every file in ``directory``."""
    directory = Path(directory)
    pool = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and not p.name.startswith("."):
            pool[p.stem] = str(p)
    if not pool:
        raise ValueError(f"no submissions in {directory}")
    return pool


def run_campaign(cfg: CampaignConfig, cadence: Cadence | str, pool, stop_after: int | None = None) -> list[dict]:
    """Play and rate a cadence's schedule; resumable from the store.

    ``pool`` is a list of policy identifiers or a mapping of submission id to
    identifier. ``stop_after`` ends the run after that many newly played matches
    (used to exercise resume). Returns the leaderboard rows.
    """
    cadence = Cadence(cadence)
    if isinstance(pool, dict):
        sub_to_ident = dict(pool)
    else:
        sub_to_ident = {ident: ident for ident in pool}
    ident_to_sub = {v: k for k, v in sub_to_ident.items()}
    store = ResultStore(cfg.store)
    specs = pvp_schedule(list(sub_to_ident.values()), cfg.matches_for(cadence), cfg.seed,
                         cfg.map_cfg, cfg.sim_cfg, prefix=cadence.value)
    submission_of = ident_to_sub.__getitem__

    # matches already recorded but not yet rated (crash between the two writes)
    pending = [s for s in specs if s.match_id not in store.records]
    if cfg.deterministic:
        # rate strictly in schedule order: a recorded match waits for its predecessors
        played = 0
        todo = iter(_run_all(pending, store.replay_dir, cfg.parallelism, ordered=True))
        for spec in specs:
            if spec.match_id not in store.records:
                if stop_after is not None and played >= stop_after:
                    break
                store.append(next(todo))
                played += 1
            store.apply(store.records[spec.match_id], submission_of, cfg.params)
        todo.close()
    else:
        for spec in specs:
            if spec.match_id in store.records:
                store.apply(store.records[spec.match_id], submission_of, cfg.params)
        for played, rec in enumerate(_run_all(pending, store.replay_dir, cfg.parallelism, ordered=False)):
            if stop_after is not None and played >= stop_after:
                break
            store.append(rec)
            store.apply(rec, submission_of, cfg.params)
    rows = store.leaderboard(cfg.params, sub_to_ident)
    store.write_leaderboard(rows)
    return rows


def appearances(records, submission_of=lambda s: s) -> dict[str, int]:
    out: dict[str, int] = {}
    for rec in records:
        for sid in {submission_of(i) for i in rec.spec["slots"]}:
            out[sid] = out.get(sid, 0) + 1
    return out
