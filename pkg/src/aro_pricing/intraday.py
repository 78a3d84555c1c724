"""Intra-day settlement against realized load, and the self-scheduling audit."""

import csv
import dataclasses
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, UnsupportedNormError
from .lp import OPTIMAL, LpProblem, solve_lp
from .mip import MipProblem, solve_milp
from .norms import NormOrder
from .robust import _primal_lp

PROFIT_TOL = 1e-6


@dataclass
class IntradayResult:
    total_residual: float
    dispatch: np.ndarray       # incremental MW per generator
    cost: float
    bound: float
    price: float
    status: str = OPTIMAL


def intraday_dispatch(inst, sol, d, period=0):
    """Cheapest re-dispatch of committed residual capacity to cover residual load ``d``."""
    d = np.asarray(d, dtype=float).ravel()
    if d.size != inst.n_node:
        raise ValueError(f"expected {inst.n_node} nodal residuals, got {d.size}")
    if np.any(d < 0):
        raise ValueError("residual load must be nonnegative")
    C = np.array([g.energy_cost for g in inst.generators])
    cap = np.array([g.cap_max for g in inst.generators])
    headroom = np.maximum(cap * sol.x[:, period] - sol.policy.u[:, period], 0.0)
    total = float(d.sum())
    bound = float(C @ (sol.policy.V[:, :, period] @ d))
    lp = LpProblem(C, np.ones((1, C.size)), ["=="], [total], np.zeros(C.size), headroom)
    res = solve_lp(lp)
    if res.status != OPTIMAL:
        return IntradayResult(total, np.full(C.size, np.nan), float("nan"), bound, float("nan"), res.status)
    return IntradayResult(total, res.x, float(res.objective), bound, float(res.duals[0]))


def realization_sweep(inst, sol, grid=21, period=0, node=0):
    """Evaluate ``grid`` equally spaced residual totals in [0, gamma_q], all placed on one node."""
    if grid < 2:
        raise ValueError("grid needs at least two points")
    out = []
    for total in np.linspace(0.0, inst.uncertainty.gamma_q[period], grid):
        d = np.zeros(inst.n_node)
        d[node] = total
        out.append(intraday_dispatch(inst, sol, d, period))
    return out


def sweep_csv(results, precision=6):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["total_residual_mw", "lp_cost", "adaptive_bound", "marginal_price"])
    for r in results:
        w.writerow([f"{v:.{precision}f}" for v in (r.total_residual, r.cost, r.bound, r.price)])
    return buf.getvalue()


@dataclass
class ProfitReport:
    generator: str
    centralized: float
    decentralized: float
    schedule: np.ndarray       # self-scheduled on/off states per period

    @property
    def incentive(self):
        return self.decentralized - self.centralized > PROFIT_TOL


def _profit_coefficients(sol, cert, i, mu_shift=0.0):
    """Linear profit of generator ``i`` over model columns, plus its constant."""
    model = sol.model
    inst = model.inst
    g = inst.generators[i]
    coef = np.zeros(model.n)
    for j, v in enumerate(model.commit):
        if model.commit_owner[v] == i:
            coef[v] = cert.rho_all[j] - model.c[v]
    mu = cert.mu + mu_shift
    for t in range(inst.periods):
        coef[model.u[i, t]] = mu[t] - g.energy_cost
    for (gi, j, t), v in model.V.items():
        if gi == i:
            coef[v] = cert.theta[j, t] - g.energy_cost * cert.alpha[j, t]
    for (gi, k, t), v in model.Z.items():
        if gi == i:
            coef[v] = cert.theta_bar[k, t] - g.energy_cost * cert.alpha_bar[k, t]
    const = 0.0
    for k in model.owned_rows(i):
        const -= cert.pi[k] * model.rows[k].h
        for b, a in zip(model.rows[k].blocks, cert.blocks[k]):
            const += a @ b.m
    for e in model.owned_eqs(i):
        const += cert.eq[e] * model.eqs[e].e
    return coef, const


def decentralized_profit(inst, cert, sol, gen_id, mu_shift=0.0, check=True):
    """Best self-schedule of one generator facing the market prices, versus its market schedule.

    Revenue is priced at the certificate (energy ``mu``, adaptive ``theta``,
    commitment ``rho``); adaptive cost is evaluated at the worst case carried
    by the certificate.  ``mu_shift`` perturbs the energy price, for probing.
    """
    model = sol.model
    if model.order is NormOrder.TWO:
        raise UnsupportedNormError("self-scheduling audit needs the 1 or inf norm")
    i = inst.gen_index(gen_id)
    coef, const = _profit_coefficients(sol, cert, i, mu_shift)
    central = float(coef @ sol.y + const)

    own = dataclasses.replace(
        model,
        c=-coef,
        rows=[model.rows[k] for k in model.owned_rows(i)],
        eqs=[model.eqs[e] for e in model.owned_eqs(i)],
    )
    lp, _ = _primal_lp(own)
    # Columns of other generators and the cost epigraph carry no cost and no rows here.
    others = np.setdiff1d(np.arange(model.n), model.gen_columns(i))
    lp.lb[others] = 0.0
    lp.ub[others] = 0.0
    binaries = [model.on[i, t] for t in range(inst.periods)]
    res = solve_milp(MipProblem(lp, binaries))
    if res.status != OPTIMAL:
        raise ConsistencyError(f"self-scheduling problem of {gen_id} is {res.status}")
    best = float(-res.objective + const)
    report = ProfitReport(gen_id, central, best, np.round(res.x[binaries]))
    if check and mu_shift == 0.0:
        if abs(central) > PROFIT_TOL * max(1.0, abs(sol.objective)):
            raise ConsistencyError(f"{gen_id}: market schedule profit {central:.9g} is not zero")
        if report.incentive:
            raise ConsistencyError(f"{gen_id}: self-schedule earns {best:.9g} over market {central:.9g}")
    return report
