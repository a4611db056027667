"""Top-1 ratio and a multi-team TrueSkill update.

Each submission is a single player whose team performance is its own
performance. ``rate_match`` runs expectation propagation along the chain of
rank-adjacent difference factors, then maps the performance messages back to
the skills.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from scipy.special import erfcx

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class RatingError(ValueError):
    pass


@dataclass(frozen=True)
class TrueSkillParams:
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    tau: float = 25.0 / 300.0
    p_draw: float = 0.1
    tol: float = 1e-4
    max_sweeps: int = 20

    def __post_init__(self):
        if min(self.sigma0, self.beta, self.tau) <= 0:
            raise RatingError("sigma0, beta and tau must be positive")
        if not 0.0 <= self.p_draw < 1.0:
            raise RatingError("p_draw must lie in [0, 1)")

    @property
    def draw_margin(self) -> float:
        """Half-width of the draw region for a difference of two single players."""
        return NormalDist().inv_cdf((self.p_draw + 1.0) / 2.0) * _SQRT2 * self.beta


DEFAULT_PARAMS = TrueSkillParams()


@dataclass(frozen=True)
class Rating:
    mu: float = DEFAULT_PARAMS.mu0
    sigma: float = DEFAULT_PARAMS.sigma0

    def __post_init__(self):
        if not self.sigma > 0:
            raise RatingError("sigma must be positive")


def leaderboard_score(r: Rating) -> float:
    return r.mu - 3.0 * r.sigma


def top1_ratio(ranks) -> float:
    ranks = list(ranks)
    if not ranks:
        raise RatingError("no matches to summarize")
    return sum(1 for r in ranks if r == 1) / len(ranks)


# --- truncated Gaussian moment functions ----------------------------------------------

def v_win(t: float, eps: float) -> float:
    """Mean shift of N(t, 1) truncated to (eps, inf), i.e. phi(t-eps)/Phi(t-eps)."""
    return 2.0 / _SQRT2PI / float(erfcx(-(t - eps) / _SQRT2))


def w_win(t: float, eps: float) -> float:
    v = v_win(t, eps)
    return v * (v + t - eps)


def _draw_vw(t: float, eps: float) -> tuple[float, float]:
    """Mean shift and variance factor of N(t, 1) truncated to [-eps, eps]."""
    sign = 1.0
    if t < 0:
        t, sign = -t, -1.0
    a = (t - eps) / _SQRT2
    b = (t + eps) / _SQRT2
    r = math.exp(-2.0 * t * eps)  # exp(a^2 - b^2)
    denom = 0.5 * (float(erfcx(a)) - float(erfcx(b)) * r)
    v = (r - 1.0) / _SQRT2PI / denom
    w = ((eps - t) + (eps + t) * r) / _SQRT2PI / denom + v * v
    return sign * v, w


def v_draw(t: float, eps: float) -> float:
    return _draw_vw(t, eps)[0]


def w_draw(t: float, eps: float) -> float:
    return _draw_vw(t, eps)[1]


# --- Gaussians in natural parameters ------------------------------------------------------

@dataclass
class _G:
    pi: float = 0.0  # precision
    tau: float = 0.0  # precision-adjusted mean

    @classmethod
    def from_moments(cls, mu: float, var: float) -> _G:
        return cls(1.0 / var, mu / var)

    @property
    def mu(self) -> float:
        return self.tau / self.pi if self.pi else 0.0

    @property
    def var(self) -> float:
        return 1.0 / self.pi if self.pi else math.inf

    def __mul__(self, o: _G) -> _G:
        return _G(self.pi + o.pi, self.tau + o.tau)

    def __truediv__(self, o: _G) -> _G:
        return _G(self.pi - o.pi, self.tau - o.tau)


def _canonical_order(ratings, ranks) -> list[int]:
    # ties are chained in a rating-dependent order so that permuting inputs permutes outputs
    return sorted(range(len(ratings)), key=lambda i: (ranks[i], -ratings[i].mu, ratings[i].sigma, i))


def rate_match(ratings, ranks, params: TrueSkillParams = DEFAULT_PARAMS) -> list[Rating]:
    """Posterior ratings after one match; lower rank is better, equal ranks draw."""
    ratings = list(ratings)
    ranks = list(ranks)
    n = len(ratings)
    if n < 2 or len(ranks) != n:
        raise RatingError("need at least two ratings and one rank per rating")
    if any(not isinstance(r, (int, float)) or isinstance(r, bool) or r != r for r in ranks):
        raise RatingError(f"invalid rank vector {ranks}")
    order = _canonical_order(ratings, ranks)
    draws = [ranks[order[k]] == ranks[order[k + 1]] for k in range(n - 1)]
    eps = params.draw_margin
    if any(draws) and eps <= 0:
        raise RatingError("tied ranks need p_draw > 0")

    beta2 = params.beta ** 2
    skill_prior = [
        _G.from_moments(ratings[i].mu, ratings[i].sigma ** 2 + params.tau ** 2) for i in order
    ]
    perf_prior = [_G.from_moments(g.mu, g.var + beta2) for g in skill_prior]

    m = n - 1
    up = [_G() for _ in range(m)]  # sum factor k -> perf k
    down = [_G() for _ in range(m)]  # sum factor k -> perf k+1
    trunc = [_G() for _ in range(m)]  # truncation factor k -> difference k

    def perf_marginal(i: int) -> _G:
        g = perf_prior[i]
        if i < m:
            g = g * up[i]
        if i > 0:
            g = g * down[i - 1]
        return g

    def update(k: int) -> float:
        a = perf_marginal(k) / up[k]
        b = perf_marginal(k + 1) / down[k]
        cav = _G.from_moments(a.mu - b.mu, a.var + b.var)
        sqrt_pi = math.sqrt(cav.pi)
        t = cav.tau / sqrt_pi
        e = eps * sqrt_pi
        if draws[k]:
            v, w = _draw_vw(t, e)
        else:
            v, w = v_win(t, e), w_win(t, e)
        w = min(max(w, 1e-300), 1.0 - 1e-15)
        new = _G(cav.pi / (1.0 - w), (cav.tau + sqrt_pi * v) / (1.0 - w))
        msg = new / cav
        delta = max(abs(msg.pi - trunc[k].pi), abs(msg.tau - trunc[k].tau))
        trunc[k] = msg
        d_var = msg.var
        d_mu = msg.mu
        up[k] = _G.from_moments(d_mu + b.mu, d_var + b.var)
        down[k] = _G.from_moments(a.mu - d_mu, a.var + d_var)
        return delta

    for _sweep in range(params.max_sweeps):
        delta = 0.0
        for k in range(m):
            delta = max(delta, update(k))
        for k in range(m - 2, -1, -1):
            delta = max(delta, update(k))
        if delta < params.tol:
            break

    out: list[Rating | None] = [None] * n
    for pos, i in enumerate(order):
        msg = perf_marginal(pos) / perf_prior[pos]
        post = skill_prior[pos]
        if msg.pi > 0:
            post = post * _G.from_moments(msg.mu, msg.var + beta2)
        out[i] = Rating(post.mu, math.sqrt(post.var))
    return out


def ranks_from_totals(totals) -> list[int]:
    totals = list(totals)
    return [1 + sum(1 for w in totals if w > v) for v in totals]
