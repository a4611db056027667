from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from arena.rating import (
    DEFAULT_PARAMS,
    Rating,
    RatingError,
    TrueSkillParams,
    leaderboard_score,
    ranks_from_totals,
    rate_match,
    top1_ratio,
)

P = DEFAULT_PARAMS


def _truncated_moments(m, c, lo, hi):
    """Mean and variance of N(m, c^2) restricted to [lo, hi], by quadrature."""
    pdf = lambda x: stats.norm.pdf(x, m, c)
    lo_, hi_ = max(lo, m - 40 * c), min(hi, m + 40 * c)
    z = integrate.quad(pdf, lo_, hi_, epsabs=1e-13, epsrel=1e-12)[0]
    e1 = integrate.quad(lambda x: x * pdf(x), lo_, hi_, epsabs=1e-13, epsrel=1e-12)[0] / z
    e2 = integrate.quad(lambda x: (x - e1) ** 2 * pdf(x), lo_, hi_, epsabs=1e-13, epsrel=1e-12)[0] / z
    return e1, e2


def _oracle_two(a: Rating, b: Rating, outcome: str, params=P):
    """Exact Gaussian-projected posterior for a two-player game.

    Skill and the performance difference are jointly Gaussian; conditioning on
    the observed interval of the difference only changes its first two moments.
    """
    va = a.sigma ** 2 + params.tau ** 2
    vb = b.sigma ** 2 + params.tau ** 2
    m = a.mu - b.mu
    c2 = va + vb + 2 * params.beta ** 2
    eps = params.draw_margin
    lo, hi = {"win": (eps, math.inf), "draw": (-eps, eps)}[outcome]
    ed, vd = _truncated_moments(m, math.sqrt(c2), lo, hi)
    out = []
    for mu, v, sign in ((a.mu, va, 1), (b.mu, vb, -1)):
        k = sign * v / c2  # regression of skill on the difference
        out.append(Rating(mu + k * (ed - m), math.sqrt(v - k * k * c2 + k * k * vd)))
    return out


CASES = [
    (Rating(25, 25 / 3), Rating(25, 25 / 3)),
    (Rating(30, 4), Rating(22, 6)),
    (Rating(18, 2), Rating(35, 7)),
    (Rating(25, 1), Rating(25, 8)),
]


@pytest.mark.parametrize("a,b", CASES)
def test_two_player_win_matches_quadrature(a, b):
    got = rate_match([a, b], [1, 2])
    want = _oracle_two(a, b, "win")
    for g, w in zip(got, want):
        assert abs(g.mu - w.mu) < 1e-3 and abs(g.sigma - w.sigma) < 1e-3


@pytest.mark.parametrize("a,b", CASES)
def test_two_player_draw_matches_quadrature(a, b):
    got = rate_match([a, b], [1, 1])
    want = _oracle_two(a, b, "draw")
    for g, w in zip(got, want):
        assert abs(g.mu - w.mu) < 1e-3 and abs(g.sigma - w.sigma) < 1e-3


@settings(max_examples=40, deadline=None)
@given(mu_a=st.floats(0, 50), mu_b=st.floats(0, 50), s_a=st.floats(0.5, 9), s_b=st.floats(0.5, 9))
def test_two_player_fuzz_against_quadrature(mu_a, mu_b, s_a, s_b):
    a, b = Rating(mu_a, s_a), Rating(mu_b, s_b)
    for ranks, outcome in (([1, 2], "win"), ([1, 1], "draw")):
        got = rate_match([a, b], ranks)
        want = _oracle_two(a, b, outcome)
        for g, w in zip(got, want):
            assert abs(g.mu - w.mu) < 1e-3 and abs(g.sigma - w.sigma) < 1e-3


def test_default_params():
    assert (P.mu0, P.sigma0, P.beta, P.tau, P.p_draw) == (25, 25 / 3, 25 / 6, 25 / 300, 0.1)
    assert P.draw_margin == pytest.approx(stats.norm.ppf(0.55) * math.sqrt(2) * P.beta)


def test_winner_gains_loser_drops():
    a, b = rate_match([Rating(25, 25 / 3)] * 2, [1, 2])
    assert a.mu > 25 > b.mu
    assert a.mu - 25 == pytest.approx(25 - b.mu)
    assert a.sigma == pytest.approx(b.sigma)


def test_all_tied_keeps_means():
    out = rate_match([Rating(25, 25 / 3)] * 16, [1] * 16)
    assert all(r.mu == pytest.approx(25, abs=1e-6) for r in out)
    sig = [r.sigma for r in out]
    # chain position breaks exact symmetry; the profile mirrors end to end
    assert sig == pytest.approx(sig[::-1], abs=1e-6)
    assert max(sig) - min(sig) < 0.1


ratings_st = st.lists(
    st.builds(Rating, st.floats(0, 50), st.floats(0.5, 9)), min_size=2, max_size=16,
)


@settings(max_examples=60, deadline=None)
@given(rs=ratings_st, data=st.data())
def test_sigma_never_exceeds_dynamics_bound(rs, data):
    ranks = data.draw(st.lists(st.integers(1, 4), min_size=len(rs), max_size=len(rs)))
    for r, new in zip(rs, rate_match(rs, ranks)):
        assert new.sigma <= math.sqrt(r.sigma ** 2 + P.tau ** 2) + 1e-9


@settings(max_examples=40, deadline=None)
@given(rs=ratings_st, data=st.data())
def test_update_follows_players_under_relabeling(rs, data):
    n = len(rs)
    ranks = data.draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    perm = data.draw(st.permutations(range(n)))
    base = rate_match(rs, ranks)
    got = rate_match([rs[i] for i in perm], [ranks[i] for i in perm])
    # indistinguishable players (same rating and rank) may swap chain positions
    def by_class(inputs, rks, outs):
        groups = {}
        for r, k, o in zip(inputs, rks, outs):
            groups.setdefault((r.mu, r.sigma, k), []).append((o.mu, o.sigma))
        return {key: sorted(v) for key, v in groups.items()}

    want = by_class(rs, ranks, base)
    have = by_class([rs[i] for i in perm], [ranks[i] for i in perm], got)
    assert want.keys() == have.keys()
    for key in want:
        assert np.allclose(want[key], have[key], atol=1e-9)


def test_better_rank_never_hurts_more():
    rs = [Rating(25, 25 / 3)] * 4
    out = rate_match(rs, [1, 2, 3, 4])
    mus = [r.mu for r in out]
    assert mus == sorted(mus, reverse=True)


def test_rejects_bad_input():
    with pytest.raises(RatingError):
        rate_match([Rating(25, 8)], [1])
    with pytest.raises(RatingError):
        rate_match([Rating(25, 8)] * 2, [1, float("nan")])
    with pytest.raises(RatingError):
        rate_match([Rating(25, 8)] * 2, [1, 1], TrueSkillParams(p_draw=0.0))
    with pytest.raises(ValueError):
        Rating(25, 0)


def test_leaderboard_and_top1():
    assert leaderboard_score(Rating(25, 25 / 3)) == pytest.approx(0.0)
    assert top1_ratio([1, 2, 1, 5, 1]) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        top1_ratio([])
    assert ranks_from_totals([3.0, 12.5, 3.0]) == [2, 1, 2]


def test_league_recovers_planted_strengths():
    rng = random.Random(2022)
    strengths = np.linspace(10, 40, 16)
    order = list(range(16))
    rng.shuffle(order)
    true = {p: strengths[k] for k, p in enumerate(order)}
    ratings = {p: Rating(P.mu0, P.sigma0) for p in range(16)}
    for _ in range(1000):
        perf = {p: true[p] + rng.gauss(0, P.beta) for p in range(16)}
        ranks = ranks_from_totals([perf[p] for p in range(16)])
        new = rate_match([ratings[p] for p in range(16)], ranks)
        ratings = dict(enumerate(new))
    tau = stats.kendalltau([true[p] for p in range(16)], [ratings[p].mu for p in range(16)]).statistic
    assert tau >= 0.9


def test_repeated_decisive_games_saturate():
    a, b = Rating(25, 25 / 3), Rating(25, 25 / 3)
    sigmas, gaps = [a.sigma], [0.0]
    for _ in range(60):
        a, b = rate_match([a, b], [1, 2])
        sigmas.append(a.sigma)
        gaps.append(a.mu - b.mu)
    assert all(x > y for x, y in zip(sigmas, sigmas[1:]))
    steps = [y - x for x, y in zip(gaps, gaps[1:])]
    assert all(s > 0 for s in steps)
    assert steps[-1] < 0.1 * steps[0]
