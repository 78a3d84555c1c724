"""Convex hull prices for the deterministic unit commitment.

The Lagrangian dual of the energy balance is

    max_pi  sum_t pi_t qbar_t + sum_i L_i(pi),
    L_i(pi) = min over feasible schedules of cost_i - pi . p_i,

and ``L_i`` is evaluated exactly by enumerating each generator's on/off
sequences and solving one small dispatch LP per sequence.  The outer
maximization is Kelley's cutting-plane method on a boxed price space.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ResourceLimitError
from .lp import OPTIMAL, LpProblem, solve_lp
from .pricing import pay_as_bid_day_ahead
from .robust import solve_aro

MAX_SCHEDULES = 4096
PRICE_BOX = 1e5
MAX_ROUNDS = 2000


@dataclass
class Schedule:
    on: tuple
    startup: tuple
    shutdown: tuple
    fixed_cost: float


@dataclass
class ConvexHullResult:
    prices: np.ndarray          # (T,)
    dual_objective: float
    uc_objective: float
    gap: float
    uplift: np.ndarray          # lost-opportunity uplift per generator
    lagrangian: np.ndarray      # L_i at the prices (the payment minus price revenue)
    revenue: np.ndarray         # prices times UC dispatch, per generator
    generators: tuple

    @property
    def payments(self):
        """Price revenue plus the Lagrangian term, per generator."""
        return self.revenue + self.lagrangian


def feasible_schedules(g, periods):
    """On/off sequences respecting initial state and minimum up/down times."""
    out = []
    for on in itertools.product((0, 1), repeat=periods):
        prev = 1 if g.initial_on else 0
        su, sd = [], []
        for s in on:
            su.append(max(s - prev, 0))
            sd.append(max(prev - s, 0))
            prev = s
        ok = True
        for t in range(periods):
            if g.min_up > 1 and sum(su[max(0, t - g.min_up + 1):t + 1]) > on[t]:
                ok = False
            if g.min_down > 1 and sum(sd[max(0, t - g.min_down + 1):t + 1]) > 1 - on[t]:
                ok = False
        if not ok:
            continue
        fixed = sum((g.commit_cost + g.no_load_cost) * s for s in on)
        if g.needs_transitions:
            fixed += g.startup_cost * sum(su)
        out.append(Schedule(on, tuple(su), tuple(sd), float(fixed)))
    return out


def dispatch_polytope(g, sched):
    """Rows ``A p <= b`` and bounds of generator dispatch under a fixed schedule."""
    T = len(sched.on)
    lb = np.array([g.cap_min * s for s in sched.on], dtype=float)
    ub = np.array([g.cap_max * s for s in sched.on], dtype=float)
    A, b = [], []
    if g.ramp_rate is not None:
        sur = g.cap_max if g.startup_rate is None else g.startup_rate
        sdr = g.cap_max if g.shutdown_rate is None else g.shutdown_rate
        on0 = 1 if g.initial_on else 0
        for t in range(T):
            prev_on = sched.on[t - 1] if t else on0
            a = np.zeros(T)
            a[t] = 1.0
            if t:
                a[t - 1] = -1.0
                A.append(a)
                b.append(g.ramp_rate * prev_on + sur * sched.startup[t])
                a = np.zeros(T)
                a[t - 1], a[t] = 1.0, -1.0
                A.append(a)
                b.append(g.ramp_rate * sched.on[t] + sdr * sched.shutdown[t])
            else:
                A.append(a)
                b.append(g.initial_output + g.ramp_rate * on0 + sur * sched.startup[0])
                if g.initial_on:
                    A.append(-a)
                    b.append(g.ramp_rate * sched.on[0] + sdr * sched.shutdown[0] - g.initial_output)
    return np.array(A).reshape(len(A), T), np.array(b, dtype=float), lb, ub


class _GeneratorOracle:
    def __init__(self, g, periods):
        self.g = g
        self.schedules = feasible_schedules(g, periods)
        self.polytopes = [dispatch_polytope(g, s) for s in self.schedules]
        self.T = periods

    def evaluate(self, prices):
        """``(L_i(prices), schedule index, dispatch)``; ties go to the first schedule."""
        best = (np.inf, None, None)
        cost = self.g.energy_cost - np.asarray(prices, dtype=float)
        for k, (s, (A, b, lb, ub)) in enumerate(zip(self.schedules, self.polytopes)):
            res = solve_lp(LpProblem(cost, A, ["<="] * len(b), b, lb, ub))
            if res.status != OPTIMAL:
                continue
            val = s.fixed_cost + res.objective
            if val < best[0] - 1e-9:
                best = (val, k, res.x)
        return best


def _master(cuts, qbar, n_gen, extra=None):
    """Master LP over (pi, w): max qbar.pi + sum w subject to the cuts."""
    T = qbar.size
    rows, rhs = [], []
    for i, fixed, p, C in cuts:
        a = np.zeros(T + n_gen)
        a[:T] = p
        a[T + i] = 1.0
        rows.append(a)
        rhs.append(fixed + C * p.sum())
    senses = ["<="] * len(rows)
    if extra is not None:
        for a, sense, b in extra:
            rows.append(a)
            senses.append(sense)
            rhs.append(b)
    lb = np.concatenate([np.full(T, -PRICE_BOX), np.full(n_gen, -np.inf)])
    ub = np.concatenate([np.full(T, PRICE_BOX), np.full(n_gen, np.inf)])
    return rows, senses, rhs, lb, ub


def convex_hull_prices(inst, tol=1e-10):
    det = inst.deterministic()
    T, I = det.periods, det.n_gen
    oracles = [_GeneratorOracle(g, T) for g in det.generators]
    count = sum(len(o.schedules) for o in oracles)
    if count > MAX_SCHEDULES:
        raise ResourceLimitError(f"{count} commitment schedules exceed the enumeration limit {MAX_SCHEDULES}")
    qbar = np.array([det.total_load(t) for t in range(T)])
    obj = np.concatenate([qbar, np.ones(I)])

    def dual_value(pi):
        evals = [o.evaluate(pi) for o in oracles]
        return float(qbar @ pi + sum(e[0] for e in evals)), evals

    cuts = []

    def add_cuts(evals):
        added = 0
        for i, (val, k, p) in enumerate(evals):
            key = (i, k, tuple(np.round(p, 9)))
            if key not in seen:
                seen.add(key)
                cuts.append((i, oracles[i].schedules[k].fixed_cost, p, det.generators[i].energy_cost))
                added += 1
        return added

    seen = set()
    pi = np.zeros(T)
    best_val, evals = dual_value(pi)
    best_pi = pi
    add_cuts(evals)
    for _ in range(MAX_ROUNDS):
        rows, senses, rhs, lb, ub = _master(cuts, qbar, I)
        res = solve_lp(LpProblem(obj, np.array(rows), senses, rhs, lb, ub, maximize=True))
        pi = res.x[:T]
        val, evals = dual_value(pi)
        if val > best_val:
            best_val, best_pi = val, pi
        if res.objective - best_val <= tol * max(1.0, abs(best_val)):
            break
        if not add_cuts(evals):
            break
    else:
        raise ResourceLimitError(f"convex hull cutting planes did not converge in {MAX_ROUNDS} rounds")

    prices, dual_obj = _lex_min_prices(cuts, qbar, I, obj, best_val, dual_value, add_cuts, tol, best_pi)
    if np.any(np.abs(prices) >= PRICE_BOX * (1 - 1e-9)):
        raise ConsistencyError("convex hull prices hit the search box; the dual may be unbounded")

    sol, _ = solve_aro(det)
    uc = sol.objective
    _, evals = dual_value(prices)
    lag = np.array([e[0] for e in evals])
    p_star = sol.policy.u
    revenue = p_star @ prices
    cost = pay_as_bid_day_ahead(sol, det).totals()
    uplift = cost - revenue - lag
    gap = uc - dual_obj
    if gap < -1e-6 * max(1.0, abs(uc)):
        raise ConsistencyError(f"Lagrangian bound {dual_obj:.9g} exceeds the UC optimum {uc:.9g}")
    return ConvexHullResult(prices, dual_obj, uc, gap, uplift, lag, revenue, tuple(g.id for g in det.generators))


def _lex_min_prices(cuts, qbar, I, obj, z, dual_value, add_cuts, tol, start):
    """Lexicographically smallest price vector attaining the dual optimum ``z``."""
    T = qbar.size
    slack = tol * max(1.0, abs(z))
    for _ in range(MAX_ROUNDS):
        fixed = []
        pi = start
        for t in range(T):
            extra = [(obj, ">=", z - slack)] + fixed
            rows, senses, rhs, lb, ub = _master(cuts, qbar, I, extra)
            c = np.zeros(T + I)
            c[t] = 1.0
            res = solve_lp(LpProblem(c, np.array(rows), senses, rhs, lb, ub))
            pi = res.x[:T]
            a = np.zeros(T + I)
            a[t] = 1.0
            fixed.append((a, "<=", pi[t] + slack))
        val, evals = dual_value(pi)
        if val >= z - 2 * slack:
            return pi, val
        # The master over-estimates the dual here; sharpen it and retry.
        if not add_cuts(evals):
            return pi, val
    raise ResourceLimitError("lexicographic price selection did not settle")
