"""Per-match team scores: defeat credits plus a rank-indexed survival award."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .worldgen import N_TEAMS, TEAM_SIZE

DEFEAT_POINTS = Fraction(1, 2)
SURVIVAL_VECTOR = (10, 6, 5, 4, 3, 2, 1, 1) + (0,) * 8
N_SKILLS = 8


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class TeamOutcome:
    team_id: int
    defeat_credits: int
    death_tick: int  # tick of the last member's death, horizon + 1 if anyone survived
    survivors_at_end: int
    avg_level_at_death: float

    def sort_key(self):
        return (-self.death_tick, -self.survivors_at_end, -self.avg_level_at_death)


@dataclass(frozen=True)
class TeamScore:
    defeat_score: float
    survival_score: float
    total: float
    rank: int

    def to_dict(self) -> dict:
        return {"defeat": self.defeat_score, "survival": self.survival_score, "total": self.total, "rank": self.rank}


@dataclass(frozen=True)
class MatchScore:
    teams: tuple[TeamScore, ...]

    @property
    def totals(self) -> list[float]:
        return [t.total for t in self.teams]

    @property
    def ranks(self) -> list[int]:
        return [t.rank for t in self.teams]

    def to_dict(self) -> dict:
        return {"teams": [t.to_dict() for t in self.teams]}

    @classmethod
    def from_dict(cls, d: dict) -> MatchScore:
        return cls(tuple(
            TeamScore(t["defeat"], t["survival"], t["total"], t["rank"]) for t in d["teams"]
        ))


def defeat_score(credits: int) -> float:
    if credits < 0:
        raise ScoringError("negative defeat credits")
    return float(DEFEAT_POINTS * credits)


def survival_fractions(outcomes) -> list[Fraction]:
    """Exact survival points per team, in input order."""
    outcomes = list(outcomes)
    if len(outcomes) != len(SURVIVAL_VECTOR):
        raise ScoringError(f"expected {len(SURVIVAL_VECTOR)} team outcomes, got {len(outcomes)}")
    order = sorted(range(len(outcomes)), key=lambda i: outcomes[i].sort_key())
    points: list[Fraction] = [Fraction(0)] * len(outcomes)
    start = 0
    while start < len(order):
        end = start + 1
        key = outcomes[order[start]].sort_key()
        while end < len(order) and outcomes[order[end]].sort_key() == key:
            end += 1
        share = Fraction(sum(SURVIVAL_VECTOR[start:end]), end - start)
        for i in order[start:end]:
            points[i] = share
        start = end
    return points


def survival_scores(outcomes) -> list[float]:
    return [float(p) for p in survival_fractions(outcomes)]


def competition_ranks(values) -> list[int]:
    """Rank by value descending; equal values share the better rank (1, 1, 3, ...)."""
    values = list(values)
    return [1 + sum(1 for w in values if w > v) for v in values]


def score_outcomes(outcomes) -> MatchScore:
    outcomes = list(outcomes)
    surv = survival_fractions(outcomes)
    totals = [DEFEAT_POINTS * o.defeat_credits + s for o, s in zip(outcomes, surv)]
    ranks = competition_ranks(totals)
    return MatchScore(tuple(
        TeamScore(defeat_score(o.defeat_credits), float(s), float(t), r)
        for o, s, t, r in zip(outcomes, surv, totals, ranks)
    ))


def outcomes_from_events(events, horizon: int, n_teams: int = N_TEAMS, team_size: int = TEAM_SIZE) -> list[TeamOutcome]:
    """Team outcomes from a finished match's ``(tick, event)`` stream."""
    credits = [0] * n_teams
    last_death = [-1] * n_teams
    level_total = [0] * n_teams
    survivors = [0] * n_teams
    finished = False
    for tick, ev in events:
        kind = ev["e"]
        if kind == "Defeat":
            credits[ev["team"]] += 1
        elif kind == "Death":
            team = ev["team"]
            last_death[team] = max(last_death[team], tick)
            level_total[team] += ev["levels"]
        elif kind == "MatchEnd":
            finished = True
            for _aid, team, levels, _eq in ev["survivors"]:
                survivors[team] += 1
                level_total[team] += levels
    if not finished:
        raise ScoringError("event stream has no MatchEnd")
    per_team = team_size * N_SKILLS
    return [
        TeamOutcome(
            team_id=t,
            defeat_credits=credits[t],
            death_tick=horizon + 1 if survivors[t] else last_death[t],
            survivors_at_end=survivors[t],
            # divisor is a power of two, so the float is exact
            avg_level_at_death=level_total[t] / per_team,
        )
        for t in range(n_teams)
    ]


def score_events(events, horizon: int) -> MatchScore:
    return score_outcomes(outcomes_from_events(events, horizon))


def match_score(state) -> MatchScore:
    if not state.done:
        raise ScoringError("match is not finished")
    return score_events(state.events(), state.cfg.horizon)
