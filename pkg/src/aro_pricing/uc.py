"""Plain deterministic unit commitment, written directly in dispatch variables.

Kept separate from the robust builder on purpose: with zero budgets the
robust counterpart must land on exactly this optimum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .lp import OPTIMAL, LpProblem
from .mip import MipProblem, solve_milp


@dataclass
class UcSolution:
    objective: float
    on: np.ndarray             # (I, T)
    dispatch: np.ndarray       # (I, T)


def deterministic_uc(inst):
    I, T = inst.n_gen, inst.periods
    # Columns per generator and period: on, start, stop, output.
    def col(i, t, k):
        return ((i * T) + t) * 4 + k

    n = I * T * 4
    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.zeros(n)
    A, senses, b = [], [], []

    def row(pairs, sense, rhs):
        a = np.zeros(n)
        for j, v in pairs:
            a[j] += v
        A.append(a)
        senses.append(sense)
        b.append(rhs)

    for i, g in enumerate(inst.generators):
        on0 = 1.0 if g.initial_on else 0.0
        trans = g.needs_transitions
        for t in range(T):
            on, st, sp, p = (col(i, t, k) for k in range(4))
            c[on] = g.commit_cost + g.no_load_cost
            c[p] = g.energy_cost
            ub[on] = 1.0
            ub[p] = g.cap_max
            if trans:
                c[st] = g.startup_cost
                ub[st] = ub[sp] = 1.0
                prev = [(col(i, t - 1, 0), -1.0)] if t else []
                row([(on, 1.0), (st, -1.0), (sp, 1.0)] + prev, "==", on0 if t == 0 else 0.0)
                row([(st, 1.0), (on, -1.0)], "<=", 0.0)
                if t:
                    row([(st, 1.0), (col(i, t - 1, 0), 1.0)], "<=", 1.0)
                else:
                    row([(st, 1.0)], "<=", 1.0 - on0)
                if g.min_up > 1 and t >= 1:
                    row([(col(i, s, 1), 1.0) for s in range(max(0, t - g.min_up + 1), t + 1)] + [(on, -1.0)], "<=", 0.0)
                if g.min_down > 1 and t >= 1:
                    row([(col(i, s, 2), 1.0) for s in range(max(0, t - g.min_down + 1), t + 1)] + [(on, 1.0)], "<=", 1.0)
            row([(p, 1.0), (on, -g.cap_max)], "<=", 0.0)
            row([(p, -1.0), (on, g.cap_min)], "<=", 0.0)
            if g.ramp_rate is not None:
                sur = g.cap_max if g.startup_rate is None else g.startup_rate
                sdr = g.cap_max if g.shutdown_rate is None else g.shutdown_rate
                if t:
                    pp, pon = col(i, t - 1, 3), col(i, t - 1, 0)
                    row([(p, 1.0), (pp, -1.0), (pon, -g.ramp_rate), (st, -sur)], "<=", 0.0)
                    row([(pp, 1.0), (p, -1.0), (on, -g.ramp_rate), (sp, -sdr)], "<=", 0.0)
                else:
                    row([(p, 1.0), (st, -sur)], "<=", g.initial_output + g.ramp_rate * on0)
                    if g.initial_on:
                        row([(p, -1.0), (on, -g.ramp_rate), (sp, -sdr)], "<=", -g.initial_output)
    for t in range(T):
        row([(col(i, t, 3), 1.0) for i in range(I)], "==", inst.total_load(t))

    lp = LpProblem(c, np.array(A), senses, b, lb, ub)
    binaries = [col(i, t, 0) for i in range(I) for t in range(T)]
    res = solve_milp(MipProblem(lp, binaries))
    if res.status != OPTIMAL:
        raise InfeasibleError(f"deterministic unit commitment is {res.status}")
    x = res.x.reshape(I, T, 4)
    return UcSolution(float(res.objective), np.round(x[:, :, 0]), x[:, :, 3].copy())
