# Copyright (c) 2023 SML Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import logging
from collections import namedtuple

import numpy as np

from sml.errors import SingularTieSystem
from sml.model import (Event, MarkovState, LEAD, TIE_PUBLISHED,
                       TIE_ALL_HONEST, TRAIL)
from .chain import (enumerate_states, build_generator, solve_steady_state,
                    truncation_tail_mass, transition_outcomes)
from .fate import solve_fates, outcome_fates

__all__ = [
    'BranchWinProbabilities', 'ForkWinProbability', 'RevenueReport',
    'MetricsReport', 'compute_ph_boundary', 'solve_ph_tie', 'compute_pf',
    'compute_revenues', 'revenue_closed_form', 'report', 'honest_report',
    'TAIL_MASS_WARNING'
]

logger = logging.getLogger(__name__)

TAIL_MASS_WARNING = 1e-6
CLOSED_FORM_DRIFT = 1e-3


class BranchWinProbabilities(
        namedtuple('BranchWinProbabilities', [
            'ph_minus1', 'ph_tie_allhonest', 'ph_tie', 'ph_tie_weighted',
            'lead_stubborn', 'beta'
        ])):
    """
    Probabilities that the public branch ends up as the main chain.

    `ph_tie` maps N in {2, 3} to P_H(0', N). `beta` is the probability
    that the next event is honest.
    """
    __slots__ = ()

    def ph_lead(self, length):
        """
        P_H of a lead of `length` blocks held by a lead-stubborn pool.

        The pool answers every honest event with one block, so the honest
        side wins only after `length - 1` honest events in a row and then
        the final tie, weighted by the honest event that opens it. The trail
        flag enters through `ph_tie`, whose lost races end in a
        trail-stubborn chase won by the honest side with `ph_minus1`. A pool
        without `L` publishes everything at lead 2, so only a lead of one
        block can still be lost.
        """
        assert length >= 1, "lead length must be >= 1"
        if self.lead_stubborn:
            return self.beta**(length - 1) * self.ph_tie_weighted
        return self.ph_tie_weighted if length == 1 else 0.


ForkWinProbability = namedtuple('ForkWinProbability', ['pf', 'pf_exact'])

RevenueReport = namedtuple('RevenueReport',
                           ['e_m', 'e_h', 'rr_m', 'rr_h', 'tps'])


class MetricsReport(
        namedtuple('MetricsReport', [
            'params', 'flags', 'branch', 'fork', 'revenue', 'tail_mass',
            'n_states', 'residual', 'revenue_closed'
        ])):
    """
    `revenue` comes from the exact block-fate system, `revenue_closed`
    from the printed closed form over the same stationary distribution.
    """
    __slots__ = ()

    @property
    def rr_m(self):
        return self.revenue.rr_m

    @property
    def tps(self):
        return self.revenue.tps


def _event_probs(params):
    """Probabilities of a pool block, a single honest block and a fork."""
    return (params.event_prob(params.alpha),
            params.event_prob(params.p_beta1),
            params.event_prob(params.beta2))


def compute_ph_boundary(params):
    alpha, pb1, b2 = _event_probs(params)
    beta = pb1 + b2
    den = 1. - alpha * beta
    return {'ph_minus1': beta / den, 'ph_tie_allhonest': beta * beta / den}


def solve_ph_tie(params, flags):
    """
    Solve the published-tie race for N = 2, 3 together.

    The two equations reference each other through P_H(0', 2) and
    P_H(0', 3), so they are written as A x = b and solved at once.
    """
    bound = compute_ph_boundary(params)
    alpha, pb1, b2 = _event_probs(params)
    T, F, L = float(flags.T), float(flags.F), float(flags.L)
    lose = (1. - T) + bound['ph_minus1'] * T

    u = {n: pb1 * (1. - params.gamma[n]) for n in (2, 3)}
    v = {n: b2 * (params.g_H[n] + .5 * params.g_AH[n]) for n in (2, 3)}

    def ph_n(n):
        # coefficients of (x2, x3) in PH_N
        return np.array([u[n], v[n]])

    a = np.eye(2)
    b = np.zeros(2)
    for row, n in enumerate((2, 3)):
        b[row] = u[n] * lose + b2 * params.g_H[n] * lose
        coef = np.array([b2 * params.g_AH[n], 0.])
        coef += alpha * F * (ph_n(n) + alpha * u[n] * ph_n(2) +
                             v[n] * ph_n(3) * L)
        a[row] -= coef
    try:
        det = np.linalg.det(a)
        if abs(det) < 1e-12:
            raise np.linalg.LinAlgError("determinant {:.3e}".format(det))
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as e:
        raise SingularTieSystem("tie race system is degenerate for "
                                "alpha={}, theta={}: {}".format(
                                    params.alpha, params.theta, e))
    ph_tie = {2: float(x[0]), 3: float(x[1])}
    return BranchWinProbabilities(bound['ph_minus1'],
                                  bound['ph_tie_allhonest'], ph_tie,
                                  pb1 * ph_tie[2] + b2 * ph_tie[3],
                                  bool(flags.L), pb1 + b2)


def compute_pf(params, flags, ph, fates=None):
    """
    Probability that the block found by the pool at a published tie
    ends in the main chain.

    `pf` is the printed closed form including its lead-stubborn bracket.
    For `F` strategies it ends the pool's race after one withheld block and
    lies well below the simulated frequency, 0.42 against 0.73 for `F` at
    alpha 0.3 and theta 0.01. `pf_exact` maps N to the value read off the
    inclusion system when `fates` is given, and is the one the simulator
    reproduces.
    """
    alpha, pb1, b2 = _event_probs(params)
    beta = pb1 + b2
    x2, x3 = ph.ph_tie[2], ph.ph_tie[3]
    pf = pb1 * (1. - x2) + b2 * (1. - x3)
    if flags.L:
        bracket = 1. - beta * (pb1 * x2 + b2 * x3)
        for rate, n in ((pb1, 2), (b2, 3)):
            bracket += rate * (
                pb1 * params.gamma[n] * x2 + b2 *
                (.5 * params.g_AH[n] + params.g_A[n]) * x3)
        pf += alpha * bracket
    if not 0. <= pf <= 1.:
        logger.debug("closed-form P_F={:.6f} clipped to [0, 1]".format(pf))
        pf = min(max(pf, 0.), 1.)

    exact = None
    if fates is not None:
        if flags.F:
            exact = {n: fates.held_block(n) for n in (2, 3)}
        else:
            # published straight away, the tie resolves in its favour
            exact = {2: 1., 3: 1.}
    return ForkWinProbability(pf, exact)


def compute_revenues(pi, space, params, flags, ph=None, pf=None, fates=None):
    """
    Long-run rate at which each side's blocks enter the main chain.

    Every block creation event is weighted by the stationary probability
    of the state it happens in and by the probability the new block is
    eventually included.
    """
    params = params._replace(delta_max=space.delta_max)
    if fates is None:
        fates = solve_fates(params, flags, space)
    e_m = 0.
    e_h = 0.
    for i, state in enumerate(space.states):
        weight = float(pi[i])
        if weight == 0.:
            continue
        for outcome in transition_outcomes(params, flags, state):
            _, created = outcome_fates(state, outcome, space.delta_max)
            gain = weight * outcome.rate * fates.evaluate(outcome.target,
                                                          created)
            if outcome.event == Event.MP_BLOCK:
                e_m += gain
            else:
                e_h += gain

    if ph is not None and not flags.F:
        for n in (2, 3):
            exact = fates.ph_tie(n)
            if exact is not None and abs(exact - ph.ph_tie[n]) > 1e-9:
                logger.warning("tie race mismatch at N={}: {:.9f} vs "
                               "{:.9f}".format(n, exact, ph.ph_tie[n]))
    total = e_m + e_h
    return RevenueReport(e_m, e_h, e_m / total, e_h / total, total)


def revenue_closed_form(pi, space, params, flags, ph, pf):
    """
    Pool and honest revenue from the printed closed form.

    Each state family is credited with the success probabilities the
    closed form attaches to it. `pi(0^N, N)` is read as the all-honest tie
    family and `beta_{i-1}` as the probability of the honest event that
    opens the tie `(0', i)`. The share of an `AH` fork credited to the
    pool's tie block is clipped to [0, 1].

    Args:
        pi (np.ndarray): stationary distribution over `space`
        space (StateSpace): enumerated states
        params (ModelParams): model parameters
        flags (StrategyFlags): pool strategy
        ph (BranchWinProbabilities): closed-form branch-win values
        pf (ForkWinProbability): closed-form fork-win value

    Returns:
        RevenueReport
    """
    alpha, pb1, b2 = _event_probs(params)
    beta = pb1 + b2
    T, F, L = float(flags.T), float(flags.F), float(flags.L)
    ph_tie0, ph_m1, p_f = ph.ph_tie_weighted, ph.ph_minus1, pf.pf
    lose = (1. - T) + ph_m1 * T
    held = (1. - F) + p_f * F
    opener = {2: pb1, 3: b2}

    weights = {}
    for i, state in enumerate(space.states):
        weights[state] = weights.get(state, 0.) + float(pi[i])

    def family(kind):
        return [(s, w) for s, w in weights.items() if s.delta.kind == kind]

    def at(delta, n):
        return weights.get(MarkovState(delta, n), 0.)

    def lead_win(k):
        return (1. - L) + (1. - beta**k * ph_tie0) * L

    def ah_share(n):
        den = pb1 * (1. - params.gamma[n])
        if den <= 0.:
            return 0.
        return min(max(p_f / den, 0.), 1.)

    leads = [(s, w) for s, w in family(LEAD) if s.delta.k >= 1]
    ties = family(TIE_PUBLISHED)
    trails = family(TRAIL)
    honest_ties = family(TIE_ALL_HONEST)
    pi01, pi02 = at(0, 1), at(0, 2)

    e_m = pi01 * alpha * alpha * lead_win(2)
    for n in (2, 3):
        gm, gA, gAH, gH = (params.gamma[n], params.g_A[n],
                           params.g_AH[n], params.g_H[n])
        e_m += pi01 * alpha * opener[n] * (
            alpha * held + pb1 * (gm + (1. - gm) * (1. - ph_m1) * T) + b2 *
            (gA + gAH * ah_share(n) + gH * (1. - ph_m1) * T))
    e_m += (pi02 + sum(w for _, w in ties)) * alpha * held
    e_m += sum(w * alpha * lead_win(s.delta.k) for s, w in leads)
    e_m += sum(w for _, w in honest_ties) * alpha * T
    e_m += sum(w for _, w in trails) * T * alpha * alpha / (
        1. - alpha * beta)

    e_h = 0.
    for s, w in ties:
        n = s.n_leaves
        e_h += w * pb1 * (params.gamma[n] + (1. - params.gamma[n]) * lose)
        e_h += w * b2 * (params.g_A[n] + params.g_AH[n] +
                         params.g_H[n] * lose)
    lead1 = sum(w for s, w in leads if s.delta.k == 1)
    for n in (2, 3):
        gm, gAH, gH = params.gamma[n], params.g_AH[n], params.g_H[n]
        flow = lead1 * opener[n]
        e_h += flow * (alpha * F * (1. - p_f) + pb1 * (1. - gm) * lose)
        e_h += flow * b2 * gH * lose
        e_h += flow * b2 * gAH * ((1. - ah_share(n)) * F +
                                  ph.ph_tie[2] * (1. - F))
    e_h += (pi01 + pi02 + sum(w for _, w in trails)) * beta
    e_h += sum(w * beta * beta**s.delta.k * ph_tie0 * L for s, w in leads)
    e_h += sum(w for _, w in honest_ties) * beta * ph_m1 * T

    # back from per-event probabilities to rates
    e_m *= params.total_rate
    e_h *= params.total_rate
    total = e_m + e_h
    return RevenueReport(e_m, e_h, e_m / total, e_h / total, total)


def report(params, flags):
    """Run the analytic pipeline for one parameter point."""
    space = enumerate_states(flags, params.delta_max, params)
    q = build_generator(params, flags, space)
    dist = solve_steady_state(q)
    tail = truncation_tail_mass(dist, space)
    if tail > TAIL_MASS_WARNING:
        logger.warning("tail mass {:.3e} at delta_max={} (alpha={}), "
                       "raise delta_max".format(tail, params.delta_max,
                                                params.alpha))
    fates = solve_fates(params, flags, space)
    ph = solve_ph_tie(params, flags)
    pf = compute_pf(params, flags, ph, fates)
    revenue = compute_revenues(dist.pi, space, params, flags, ph, pf, fates)
    closed = revenue_closed_form(dist.pi, space, params, flags, ph, pf)
    drift = abs(closed.rr_m - revenue.rr_m)
    if drift > CLOSED_FORM_DRIFT:
        logger.debug("closed-form rr_m {:.6f} drifts {:.3e} from {:.6f} "
                     "(alpha={}, theta={})".format(closed.rr_m, drift,
                                                   revenue.rr_m, params.alpha,
                                                   params.theta))
    return MetricsReport(params, flags, ph, pf, revenue, tail, len(space),
                         dist.residual, closed)


def honest_report(params):
    """
    Every pool mines honestly. Each event raises the main chain by one
    block, so the pool keeps its event share and nothing else is lost.
    """
    # honest events sum to one unit of rate unless blocks are counted
    total = params.total_rate if params.rates == 'block' else 1.
    honest = total - params.alpha
    revenue = RevenueReport(params.alpha, honest, params.alpha / total,
                            honest / total, total)
    return MetricsReport(params, None, None, None, revenue, 0., 1, 0.,
                         revenue)
