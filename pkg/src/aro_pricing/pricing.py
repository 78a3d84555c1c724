"""Day-ahead settlements: pay-as-bid, adaptive uniform, worst-case, deterministic marginal.

Row decompositions are generic over the robust rows a generator owns, so
ramping and start-up logic rows settle the same way as capacity rows.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError
from .norms import dual_order, norm
from .robust import solve_aro

THEOREM_TOL = 1e-6


@dataclass(frozen=True)
class PaymentRow:
    generator: str
    commitment: float
    energy: float
    uncertainty: float
    uplift: float

    @property
    def total(self):
        return self.commitment + self.energy + self.uncertainty + self.uplift


@dataclass
class PaymentTable:
    scheme: str
    rows: list = field(default_factory=list)
    # Energy price per period, for the schemes that set one.
    prices: object = None

    @property
    def grand_total(self):
        return float(sum(r.total for r in self.rows))

    def totals(self):
        return np.array([r.total for r in self.rows])

    def row(self, generator):
        for r in self.rows:
            if r.generator == generator:
                return r
        raise KeyError(generator)

    def to_csv(self, precision=6):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "generator", "commitment", "energy", "uncertainty", "uplift", "total"])
        for r in self.rows:
            w.writerow([self.scheme, r.generator] + [f"{v:.{precision}f}" for v in
                                                      (r.commitment, r.energy, r.uncertainty, r.uplift, r.total)])
        return buf.getvalue()


def _tol(scale):
    return THEOREM_TOL * max(1.0, abs(scale))


def _owned_commit(model, i):
    return [j for j, v in enumerate(model.commit) if model.commit_owner[v] == i]


def _commitment_cost(sol, i):
    model, y = sol.model, sol.y
    cols = model.commit[_owned_commit(model, i)]
    return float(model.c[cols] @ y[cols])


def _decompose(sol, cert, i):
    """Per-generator pieces of the dual settlement."""
    model, y = sol.model, sol.y
    star = dual_order(model.order)
    owned = _owned_commit(model, i)
    rho_x = float(cert.rho_all[owned] @ y[model.commit[owned]])
    const = 0.0            # -sum pi h + sum lam e over own rows
    unc = 0.0              # sum pi * radius * ||w||_*
    alpha_x = 0.0          # multipliers against the commitment part of each block
    alpha_m = 0.0          # multipliers against block constants
    xpart = np.zeros(model.n)
    xpart[model.commit] = y[model.commit]
    for k in model.owned_rows(i):
        r = model.rows[k]
        const -= cert.pi[k] * r.h
        for b, a in zip(r.blocks, cert.blocks[k]):
            unc += cert.pi[k] * b.radius * norm(b.value(y), star)
            alpha_x += a @ (b.M @ xpart)
            alpha_m += a @ b.m
    for e in model.owned_eqs(i):
        const += cert.eq[e] * model.eqs[e].e
    energy = float(cert.mu @ sol.policy.u[i])
    adaptive = float(np.sum(cert.theta * sol.policy.V[i]) + np.sum(cert.theta_bar * sol.policy.Z[i]))
    return {"rho_x": rho_x, "const": const, "unc": unc, "alpha_x": alpha_x, "alpha_m": alpha_m,
            "energy": energy, "adaptive": adaptive}


def pay_as_bid_day_ahead(sol, inst):
    """Each generator recovers its offered commitment and non-adaptive energy cost."""
    rows = []
    for i, g in enumerate(inst.generators):
        rows.append(PaymentRow(g.id, _commitment_cost(sol, i), float(g.energy_cost * sol.policy.u[i].sum()), 0.0, 0.0))
    return PaymentTable("payasbid", rows)


def adaptive_uniform_day_ahead(sol, cert, inst):
    """Uniform energy price plus commitment uplift plus priced protection."""
    rows = []
    for i, g in enumerate(inst.generators):
        p = _decompose(sol, cert, i)
        rows.append(PaymentRow(g.id, 0.0, p["energy"], p["unc"], p["rho_x"] - p["alpha_x"] + p["const"]))
    table = PaymentTable("uniform", rows, cert.mu.copy())
    bid = pay_as_bid_day_ahead(sol, inst)
    for a, b in zip(table.rows, bid.rows):
        if abs(a.total - b.total) > _tol(b.total):
            raise ConsistencyError(f"uniform payment {a.total:.9g} to {a.generator} differs from pay-as-bid {b.total:.9g}")
    return table


def _check_worst_case(sol, cert, inst):
    """The certificate's cost-row multipliers must attain the adaptive worst case."""
    C = np.array([g.energy_cost for g in inst.generators])
    unc = inst.uncertainty
    for t in range(inst.periods):
        for mat, mult, radius in ((sol.policy.V, cert.alpha, unc.gamma_q[t]), (sol.policy.Z, cert.alpha_bar, unc.delta_p[t])):
            c = C @ mat[:, :, t]
            best = radius * norm(c, dual_order(unc.norm_order))
            got = float(c @ mult[:, t])
            if norm(mult[:, t], unc.norm_order) > radius + 1e-6 or abs(got - best) > _tol(best):
                raise ConsistencyError(f"period {t}: certificate realization gives {got:.9g}, worst case is {best:.9g}")


def worst_case_settlement(sol, cert, inst):
    """Bid-based (f) and price-based (g) settlement once the worst case is realized."""
    _check_worst_case(sol, cert, inst)
    d, r = cert.alpha, cert.alpha_bar
    f_rows, g_rows = [], []
    for i, g in enumerate(inst.generators):
        adaptive_cost = g.energy_cost * float(np.sum(sol.policy.V[i] * d) + np.sum(sol.policy.Z[i] * r))
        f_rows.append(PaymentRow(g.id, _commitment_cost(sol, i), float(g.energy_cost * sol.policy.u[i].sum()),
                                 adaptive_cost, 0.0))
        p = _decompose(sol, cert, i)
        g_rows.append(PaymentRow(g.id, 0.0, p["energy"], p["adaptive"], p["rho_x"] + p["const"] + p["alpha_m"]))
    f, gt = PaymentTable("worstcase-bid", f_rows), PaymentTable("worstcase-price", g_rows)
    for a, b in zip(f.rows, gt.rows):
        if abs(a.total - b.total) > _tol(a.total):
            raise ConsistencyError(f"{a.generator}: bid settlement {a.total:.9g} differs from price settlement {b.total:.9g}")
    if abs(f.grand_total - sol.objective) > _tol(sol.objective):
        raise ConsistencyError(f"worst-case payments {f.grand_total:.9g} differ from the optimum {sol.objective:.9g}")
    return f, gt


def deterministic_marginal(inst):
    """Marginal energy price with make-whole uplift, from the deterministic two-phase solve."""
    det = inst.deterministic()
    sol, cert = solve_aro(det)
    rows = []
    for i, g in enumerate(det.generators):
        p = _decompose(sol, cert, i)
        rows.append(PaymentRow(g.id, 0.0, p["energy"], 0.0, p["rho_x"] - p["alpha_x"] + p["const"]))
    table = PaymentTable("marginal", rows, cert.mu.copy())
    bid = pay_as_bid_day_ahead(sol, det)
    for a, b in zip(table.rows, bid.rows):
        if abs(a.total - b.total) > _tol(b.total):
            raise ConsistencyError(f"marginal payment {a.total:.9g} to {a.generator} differs from its cost {b.total:.9g}")
    return table
