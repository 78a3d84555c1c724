"""Robust counterpart of unit commitment under linear decision rules.

Dispatch follows ``p_it(d, r) = u_it + V_it . d_t + Z_it . r_t`` with ``d_t``
in a norm ball of radius ``gamma_q[t]`` and ``r_t`` in one of radius
``delta_p[t]``.  Every robust constraint is stored in the generic shape

    a . y + sum_b radius_b * ||M_b y + m_b||_*  <=  h

where ``||.||_*`` is the dual norm of the uncertainty norm.  The same rows
feed the epigraph MILP, the explicit dual LP, the certificate mapping and the
per-generator profit problems, so the pieces cannot drift apart.

Blocks are oriented so their multipliers coincide with the named price
families: cost row (nu; alpha, alpha_bar), balance row (lam; theta,
theta_bar), capacity row (sigma; beta, beta_bar), minimum-output row (zeta;
gamma, gamma_bar).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConsistencyError, InfeasibleError, ResourceLimitError, UnsupportedNormError
from .lp import OPTIMAL, LpProblem, solve_lp
from .mip import MipProblem, solve_milp
from .model import RealizationVector
from .norms import NormOrder, dual_order, max_linear_over_ball, norm

DUALITY_TOL = 1e-6
LEX_SLACK = 1e-12


# -- generic model -----------------------------------------------------------

@dataclass
class Block:
    family: str
    period: int
    radius: float
    M: np.ndarray
    m: np.ndarray

    def value(self, y):
        return self.M @ y + self.m


@dataclass
class RobustRow:
    name: str
    kind: str
    owner: Optional[int]
    period: int
    a: np.ndarray
    h: float
    blocks: list


@dataclass
class EqRow:
    name: str
    kind: str
    owner: Optional[int]
    period: int
    a: np.ndarray
    e: float


@dataclass
class RobustModel:
    inst: object
    order: NormOrder
    names: list
    c: np.ndarray
    commit: np.ndarray          # indices of commitment-type columns (x >= 0, fixed in phase 2)
    binaries: np.ndarray
    on: np.ndarray              # (I, T) column indices
    su: dict
    sd: dict
    u: np.ndarray               # (I, T)
    V: dict                     # (i, j, t) -> column
    Z: dict                     # (i, k, t) -> column
    eta: int
    rows: list
    eqs: list
    commit_owner: dict

    @property
    def n(self):
        return self.c.size

    def owned_rows(self, i):
        return [k for k, r in enumerate(self.rows) if r.owner == i]

    def owned_eqs(self, i):
        return [e for e, r in enumerate(self.eqs) if r.owner == i]

    def gen_columns(self, i):
        cols = [self.on[i, t] for t in range(self.inst.periods)]
        cols += [v for (g, _), v in self.su.items() if g == i]
        cols += [v for (g, _), v in self.sd.items() if g == i]
        cols += list(self.u[i])
        cols += [v for (g, _, _), v in self.V.items() if g == i]
        cols += [v for (g, _, _), v in self.Z.items() if g == i]
        return sorted(cols)

    def commit_vector(self, on):
        """Full commitment-column values implied by on/off states ``on`` (I x T)."""
        inst = self.inst
        on = np.round(np.asarray(on, dtype=float).reshape(inst.n_gen, inst.periods))
        vals = {}
        for i, g in enumerate(inst.generators):
            prev = 1.0 if g.initial_on else 0.0
            for t in range(inst.periods):
                vals[self.on[i, t]] = on[i, t]
                if (i, t) in self.su:
                    vals[self.su[i, t]] = max(on[i, t] - prev, 0.0)
                    vals[self.sd[i, t]] = max(prev - on[i, t], 0.0)
                prev = on[i, t]
        return np.array([vals[j] for j in self.commit])


def build_model(inst):
    """Collect the robust rows of the LDR counterpart for ``inst``."""
    I, J, T = inst.n_gen, inst.n_node, inst.periods
    gam, dlt = inst.uncertainty.gamma_q, inst.uncertainty.delta_p
    names = []

    def col(name):
        names.append(name)
        return len(names) - 1

    on = np.array([[col(f"on[{g.id},{t}]") for t in range(T)] for g in inst.generators], dtype=int)
    su, sd = {}, {}
    for i, g in enumerate(inst.generators):
        if g.needs_transitions:
            for t in range(T):
                su[i, t] = col(f"su[{g.id},{t}]")
                sd[i, t] = col(f"sd[{g.id},{t}]")
    u = np.array([[col(f"u[{g.id},{t}]") for t in range(T)] for g in inst.generators], dtype=int)
    V, Z = {}, {}
    for t in range(T):
        if gam[t] > 0:
            for i, g in enumerate(inst.generators):
                for j, node in enumerate(inst.demand_nodes):
                    V[i, j, t] = col(f"V[{g.id},{node.id},{t}]")
        if dlt[t] > 0:
            for i, g in enumerate(inst.generators):
                for k, h in enumerate(inst.generators):
                    Z[i, k, t] = col(f"Z[{g.id},{h.id},{t}]")
    eta = col("eta")
    n = len(names)

    c = np.zeros(n)
    for i, g in enumerate(inst.generators):
        c[on[i]] = g.commit_cost + g.no_load_cost
        for t in range(T):
            if (i, t) in su:
                c[su[i, t]] = g.startup_cost
    c[eta] = 1.0

    def vec(pairs):
        a = np.zeros(n)
        for idx, coef in pairs:
            a[idx] += coef
        return a

    def mat(rows_of_pairs):
        return np.array([vec(p) for p in rows_of_pairs]).reshape(len(rows_of_pairs), n)

    def blk(family, t, radius, rows_of_pairs, m=None):
        M = mat(rows_of_pairs)
        return Block(family, t, float(radius), M, np.zeros(M.shape[0]) if m is None else np.asarray(m, float))

    def v_block(family, i, t, sign=1.0):
        return blk(family, t, gam[t], [[(V[i, j, t], sign)] for j in range(J)])

    def z_block(family, i, t, sign=1.0):
        return blk(family, t, dlt[t], [[(Z[i, k, t], sign)] for k in range(I)])

    def policy_blocks(prefix, i, t, sign):
        out = []
        if gam[t] > 0:
            out.append(v_block(f"{prefix}_v", i, t, sign))
        if dlt[t] > 0:
            out.append(z_block(f"{prefix}_z", i, t, sign))
        return out

    rows, eqs = [], []
    C = [g.energy_cost for g in inst.generators]

    cost_blocks = []
    for t in range(T):
        if gam[t] > 0:
            cost_blocks.append(blk("omega", t, gam[t], [[(V[i, j, t], C[i]) for i in range(I)] for j in range(J)]))
        if dlt[t] > 0:
            cost_blocks.append(blk("omega_bar", t, dlt[t], [[(Z[i, k, t], C[i]) for i in range(I)] for k in range(I)]))
    rows.append(RobustRow("cost", "cost", None, -1,
                          vec([(u[i, t], C[i]) for i in range(I) for t in range(T)] + [(eta, -1.0)]), 0.0, cost_blocks))

    for t in range(T):
        bl = []
        if gam[t] > 0:
            bl.append(blk("tau", t, gam[t], [[(V[i, j, t], -1.0) for i in range(I)] for j in range(J)], np.ones(J)))
        if dlt[t] > 0:
            bl.append(blk("tau_bar", t, dlt[t], [[(Z[i, k, t], -1.0) for i in range(I)] for k in range(I)]))
        if bl:
            rows.append(RobustRow(f"balance[{t}]", "balance", None, t, np.zeros(n), 0.0, bl))
        eqs.append(EqRow(f"energy[{t}]", "energy", None, t, vec([(u[i, t], 1.0) for i in range(I)]), inst.total_load(t)))

    for i, g in enumerate(inst.generators):
        for t in range(T):
            bl = []
            if gam[t] > 0:
                bl.append(v_block("psi", i, t))
            if dlt[t] > 0:
                bl.append(blk("psi_bar", t, dlt[t],
                              [[(Z[i, k, t], -1.0)] + ([(on[i, t], 1.0)] if k == i else []) for k in range(I)]))
            rows.append(RobustRow(f"cap[{g.id},{t}]", "cap", i, t,
                                  vec([(u[i, t], 1.0), (on[i, t], -g.cap_max)]), 0.0, bl))
            bl = []
            if gam[t] > 0:
                bl.append(v_block("phi", i, t))
            if dlt[t] > 0:
                bl.append(z_block("phi_bar", i, t))
            rows.append(RobustRow(f"min[{g.id},{t}]", "min", i, t,
                                  vec([(u[i, t], -1.0), (on[i, t], g.cap_min)]), 0.0, bl))

        if not g.needs_transitions:
            continue
        on0 = 1.0 if g.initial_on else 0.0
        for t in range(T):
            prev = [(on[i, t - 1], -1.0)] if t else []
            eqs.append(EqRow(f"logic[{g.id},{t}]", "logic", i, t,
                             vec([(on[i, t], 1.0), (su[i, t], -1.0), (sd[i, t], 1.0)] + prev), on0 if t == 0 else 0.0))
            rows.append(RobustRow(f"su_on[{g.id},{t}]", "logic", i, t, vec([(su[i, t], 1.0), (on[i, t], -1.0)]), 0.0, []))
            if t:
                rows.append(RobustRow(f"su_prev[{g.id},{t}]", "logic", i, t,
                                      vec([(su[i, t], 1.0), (on[i, t - 1], 1.0)]), 1.0, []))
            else:
                rows.append(RobustRow(f"su_prev[{g.id},{t}]", "logic", i, t, vec([(su[i, t], 1.0)]), 1.0 - on0, []))
            window = range(max(0, t - g.min_up + 1), t + 1)
            if len(window) >= 2:
                rows.append(RobustRow(f"min_up[{g.id},{t}]", "logic", i, t,
                                      vec([(su[i, s], 1.0) for s in window] + [(on[i, t], -1.0)]), 0.0, []))
            window = range(max(0, t - g.min_down + 1), t + 1)
            if len(window) >= 2:
                rows.append(RobustRow(f"min_down[{g.id},{t}]", "logic", i, t,
                                      vec([(sd[i, s], 1.0) for s in window] + [(on[i, t], 1.0)]), 1.0, []))

        if g.ramp_rate is None:
            continue
        ru = rd = g.ramp_rate
        sur = g.cap_max if g.startup_rate is None else g.startup_rate
        sdr = g.cap_max if g.shutdown_rate is None else g.shutdown_rate
        p0 = g.initial_output
        for t in range(T):
            if t:
                a = vec([(u[i, t], 1.0), (u[i, t - 1], -1.0), (on[i, t - 1], -ru), (su[i, t], -sur)])
                bl = policy_blocks("ramp_up", i, t, 1.0) + policy_blocks("ramp_up_prev", i, t - 1, -1.0)
                rows.append(RobustRow(f"ramp_up[{g.id},{t}]", "ramp", i, t, a, 0.0, bl))
                a = vec([(u[i, t - 1], 1.0), (u[i, t], -1.0), (on[i, t], -rd), (sd[i, t], -sdr)])
                bl = policy_blocks("ramp_down_prev", i, t - 1, 1.0) + policy_blocks("ramp_down", i, t, -1.0)
                rows.append(RobustRow(f"ramp_down[{g.id},{t}]", "ramp", i, t, a, 0.0, bl))
            else:
                a = vec([(u[i, 0], 1.0), (su[i, 0], -sur)])
                rows.append(RobustRow(f"ramp_up[{g.id},0]", "ramp", i, 0, a, p0 + ru * on0,
                                      policy_blocks("ramp_up", i, 0, 1.0)))
                if g.initial_on:
                    a = vec([(u[i, 0], -1.0), (on[i, 0], -rd), (sd[i, 0], -sdr)])
                    rows.append(RobustRow(f"ramp_down[{g.id},0]", "ramp", i, 0, a, -p0,
                                          policy_blocks("ramp_down", i, 0, -1.0)))

    commit = list(on.ravel()) + [su[k] for k in sorted(su)] + [sd[k] for k in sorted(sd)]
    owner = {}
    for i in range(I):
        for t in range(T):
            owner[on[i, t]] = i
            if (i, t) in su:
                owner[su[i, t]] = owner[sd[i, t]] = i
    for r in rows:
        r.blocks = [b for b in r.blocks if b.radius > 0]
    return RobustModel(inst, inst.uncertainty.norm_order, names, c, np.array(commit, dtype=int),
                       on.ravel().copy(), on, su, sd, u, V, Z, eta, rows, eqs, owner)


# -- primal epigraph LP/MILP -----------------------------------------------------

@dataclass
class _PrimalLayout:
    n_model: int
    n_total: int
    row_index: list            # robust row k -> LP row
    eq_index: list             # eq row e -> LP row


def _primal_lp(model, commit_values=None):
    """Epigraph linearization for the 1 and inf norms (dual norms inf and 1)."""
    if model.order is NormOrder.TWO:
        raise UnsupportedNormError("the 2-norm counterpart is conic; use ellipsoidal_outer_solve")
    star = dual_order(model.order)
    n = model.n
    extra_cols = 0
    epi_rows = []              # (coef dict over model vars, epi col, const, sense) built later
    cache = {}

    def epigraph(block):
        """Return {epi_col: weight} whose weighted sum equals ||M y + m||_*."""
        nonlocal extra_cols
        key = (block.M.tobytes(), block.m.tobytes())
        if key in cache:
            return cache[key]
        live = [j for j in range(block.M.shape[0]) if np.any(block.M[j]) or block.m[j] != 0]
        if star is NormOrder.INF:
            tcol = n + extra_cols
            extra_cols += 1
            for j in live:
                epi_rows.append((block.M[j], tcol, block.m[j]))
            terms = {tcol: 1.0}
        else:
            terms = {}
            for j in live:
                scol = n + extra_cols
                extra_cols += 1
                epi_rows.append((block.M[j], scol, block.m[j]))
                terms[scol] = 1.0
        cache[key] = terms
        return terms

    row_terms = []
    for r in model.rows:
        terms = {}
        for b in r.blocks:
            for colj, w in epigraph(b).items():
                terms[colj] = terms.get(colj, 0.0) + b.radius * w
        row_terms.append(terms)

    N = n + extra_cols
    A, senses, rhs, row_index, eq_index = [], [], [], [], []
    for r, terms in zip(model.rows, row_terms):
        a = np.zeros(N)
        a[:n] = r.a
        for colj, w in terms.items():
            a[colj] += w
        row_index.append(len(A))
        A.append(a)
        senses.append("<=")
        rhs.append(r.h)
    for e in model.eqs:
        a = np.zeros(N)
        a[:n] = e.a
        eq_index.append(len(A))
        A.append(a)
        senses.append("==")
        rhs.append(e.e)
    for Mj, ecol, mj in epi_rows:
        for sgn in (1.0, -1.0):
            a = np.zeros(N)
            a[:n] = sgn * Mj
            a[ecol] = -1.0
            A.append(a)
            senses.append("<=")
            rhs.append(-sgn * mj)

    c = np.zeros(N)
    c[:n] = model.c
    lb = np.full(N, -np.inf)
    ub = np.full(N, np.inf)
    lb[n:] = 0.0
    lb[model.commit] = 0.0
    ub[model.commit] = 1.0
    if commit_values is not None:
        lb[model.commit] = ub[model.commit] = commit_values
    names = list(model.names) + [f"epi[{k}]" for k in range(extra_cols)]
    lp = LpProblem(c, np.array(A).reshape(len(A), N), senses, rhs, lb, ub, col_names=names)
    return lp, _PrimalLayout(n, N, row_index, eq_index)


def build_robust_primal(inst):
    """MILP whose optimum is the LDR robust unit-commitment cost."""
    model = build_model(inst)
    lp, _ = _primal_lp(model)
    return MipProblem(lp, model.binaries)


# -- explicit dual LP ------------------------------------------------------------

@dataclass
class _DualLayout:
    pi: list
    lam: list
    rho: list                  # parallel to model.commit
    alpha: list                # per row: list of per-block (plus_cols, minus_cols or None)


def _dual_lp(model, commit_values):
    if model.order is NormOrder.TWO:
        raise UnsupportedNormError("the 2-norm dual is conic; use ellipsoidal_outer_solve")
    n = model.n
    cols_obj, col_names = [], []
    stat_cols = []             # sparse column entries into stationarity rows: list of (row, coef) per column
    norm_rows = []             # list of (dict col->coef)

    def add(name, obj, entries, lo=0.0, hi=np.inf):
        cols_obj.append((obj, lo, hi))
        col_names.append(name)
        stat_cols.append(entries)
        return len(col_names) - 1

    layout = _DualLayout([], [], [], [])
    for k, r in enumerate(model.rows):
        entries = [(v, r.a[v]) for v in np.flatnonzero(r.a)]
        layout.pi.append(add(f"pi[{r.name}]", -r.h, entries))
    for e in model.eqs:
        entries = [(v, -e.a[v]) for v in np.flatnonzero(e.a)]
        layout.lam.append(add(f"lam[{e.name}]", e.e, entries, -np.inf))
    for j, v in enumerate(model.commit):
        layout.rho.append(add(f"rho[{model.names[v]}]", commit_values[j], [(v, -1.0)], -np.inf))
    for k, r in enumerate(model.rows):
        per_row = []
        for bi, b in enumerate(r.blocks):
            dim = b.M.shape[0]
            if model.order is NormOrder.INF:
                plus = []
                for j in range(dim):
                    entries = [(v, b.M[j, v]) for v in np.flatnonzero(b.M[j])]
                    cidx = add(f"alpha[{r.name},{b.family},{j}]", b.m[j], entries, -np.inf)
                    plus.append(cidx)
                    norm_rows.append({cidx: 1.0, layout.pi[k]: -b.radius})
                    norm_rows.append({cidx: -1.0, layout.pi[k]: -b.radius})
                per_row.append((plus, None))
            else:
                plus, minus = [], []
                for j in range(dim):
                    entries = [(v, b.M[j, v]) for v in np.flatnonzero(b.M[j])]
                    plus.append(add(f"alpha+[{r.name},{b.family},{j}]", b.m[j], entries))
                    minus.append(add(f"alpha-[{r.name},{b.family},{j}]", -b.m[j], [(v, -w) for v, w in entries]))
                row = {cidx: 1.0 for cidx in plus + minus}
                row[layout.pi[k]] = -b.radius
                norm_rows.append(row)
                per_row.append((plus, minus))
        layout.alpha.append(per_row)

    N = len(col_names)
    is_commit = np.zeros(n, dtype=bool)
    is_commit[model.commit] = True
    A = np.zeros((n + len(norm_rows), N))
    for cidx, entries in enumerate(stat_cols):
        for v, w in entries:
            A[v, cidx] += w
    for r, row in enumerate(norm_rows):
        for cidx, w in row.items():
            A[n + r, cidx] += w
    senses = [">=" if is_commit[v] else "==" for v in range(n)] + ["<="] * len(norm_rows)
    b = np.concatenate([-model.c, np.zeros(len(norm_rows))])
    obj = np.array([o for o, _, _ in cols_obj])
    lb = np.array([lo for _, lo, _ in cols_obj])
    ub = np.array([hi for _, _, hi in cols_obj])
    row_names = [f"stat[{nm}]" for nm in model.names] + [f"normcap[{r}]" for r in range(len(norm_rows))]
    lp = LpProblem(obj, A, senses, b, lb, ub, maximize=True, col_names=col_names, row_names=row_names)
    return lp, layout


def _commit_values_from(model, x):
    x = np.asarray(x, dtype=float)
    inst = model.inst
    if x.size == inst.n_gen * inst.periods:
        return model.commit_vector(x)
    if x.size == model.commit.size:
        return x
    raise ValueError(f"expected {inst.n_gen}x{inst.periods} commitments, got {x.size} values")


def build_robust_dual(inst, x_star):
    """Dual LP of the counterpart with commitments fixed at ``x_star`` (gens x periods)."""
    model = build_model(inst)
    lp, _ = _dual_lp(model, _commit_values_from(model, x_star))
    return lp


# -- solutions and certificates --------------------------------------------------

@dataclass
class LdrPolicy:
    u: np.ndarray              # (I, T)
    V: np.ndarray              # (I, J, T)
    Z: np.ndarray              # (I, I, T)

    def dispatch(self, d, r):
        """Dispatch (I, T) for load residual ``d`` (J, T) and capacity residual ``r`` (I, T)."""
        return self.u + np.einsum("ijt,jt->it", self.V, d) + np.einsum("ikt,kt->it", self.Z, r)


@dataclass
class AroSolution:
    x: np.ndarray              # on/off (I, T)
    startup: np.ndarray        # (I, T)
    shutdown: np.ndarray       # (I, T)
    policy: LdrPolicy
    eta: float
    objective: float
    model: RobustModel = field(repr=False)
    y: np.ndarray = field(repr=False)
    approximate: bool = False

    @property
    def commitment_cost(self):
        return float(self.objective - self.eta)


@dataclass
class DualCertificate:
    nu: float
    mu: np.ndarray             # (T,)
    lam: np.ndarray            # (T,)
    rho: np.ndarray            # (I, T) on-variable fixing duals
    sigma: np.ndarray          # (I, T)
    zeta: np.ndarray           # (I, T)
    alpha: np.ndarray          # (J, T)
    alpha_bar: np.ndarray      # (I, T)
    theta: np.ndarray          # (J, T)
    theta_bar: np.ndarray      # (I, T)
    beta: np.ndarray           # (I, J, T)
    beta_bar: np.ndarray       # (I, I, T)
    gamma: np.ndarray          # (I, J, T)
    gamma_bar: np.ndarray      # (I, I, T)
    objective: float
    pi: np.ndarray = field(repr=False)            # per robust row
    eq: np.ndarray = field(repr=False)            # per equality row
    rho_all: np.ndarray = field(repr=False)       # per commitment column
    blocks: list = field(repr=False)              # per robust row, per block: multiplier vector
    approximate: bool = False


@dataclass
class RobustConstraintBundle:
    omega: np.ndarray          # (J, T)
    omega_bar: np.ndarray      # (I, T)
    tau: np.ndarray            # (J, T)
    tau_bar: np.ndarray        # (I, T)
    psi: np.ndarray            # (I, J, T)
    psi_bar: np.ndarray        # (I, I, T)
    phi: np.ndarray
    phi_bar: np.ndarray

    @classmethod
    def from_solution(cls, sol, inst):
        C = np.array([g.energy_cost for g in inst.generators])
        V, Z, x = sol.policy.V, sol.policy.Z, sol.x
        eye = np.eye(inst.n_gen)
        return cls(
            omega=np.einsum("i,ijt->jt", C, V),
            omega_bar=np.einsum("i,ikt->kt", C, Z),
            tau=1.0 - V.sum(axis=0),
            tau_bar=-Z.sum(axis=0),
            psi=V.copy(),
            psi_bar=eye[:, :, None] * x[:, None, :] - Z,
            phi=V.copy(),
            phi_bar=Z.copy(),
        )


_FAMILY_TARGET = {
    "omega": "alpha", "omega_bar": "alpha_bar", "tau": "theta", "tau_bar": "theta_bar",
    "psi": "beta", "psi_bar": "beta_bar", "phi": "gamma", "phi_bar": "gamma_bar",
}


def _assemble_solution(model, y, approximate=False):
    inst = model.inst
    I, J, T = inst.n_gen, inst.n_node, inst.periods
    x = np.round(y[model.on])
    su = np.zeros((I, T))
    sd = np.zeros((I, T))
    for (i, t), v in model.su.items():
        su[i, t] = y[v]
        sd[i, t] = y[model.sd[i, t]]
    V = np.zeros((I, J, T))
    Z = np.zeros((I, I, T))
    for (i, j, t), v in model.V.items():
        V[i, j, t] = y[v]
    for (i, k, t), v in model.Z.items():
        Z[i, k, t] = y[v]
    policy = LdrPolicy(y[model.u].copy(), V, Z)
    return AroSolution(x, su, sd, policy, float(y[model.eta]), float(model.c @ y), model, y.copy(), approximate)


def _assemble_certificate(model, pi, eq, rho_all, blocks, objective, approximate=False):
    inst = model.inst
    I, J, T = inst.n_gen, inst.n_node, inst.periods
    fam = {
        "alpha": np.zeros((J, T)), "alpha_bar": np.zeros((I, T)),
        "theta": np.zeros((J, T)), "theta_bar": np.zeros((I, T)),
        "beta": np.zeros((I, J, T)), "beta_bar": np.zeros((I, I, T)),
        "gamma": np.zeros((I, J, T)), "gamma_bar": np.zeros((I, I, T)),
    }
    lam = np.zeros(T)
    sigma = np.zeros((I, T))
    zeta = np.zeros((I, T))
    nu = 0.0
    for k, r in enumerate(model.rows):
        if r.kind == "cost":
            nu = pi[k]
        elif r.kind == "balance":
            lam[r.period] = pi[k]
        elif r.kind == "cap":
            sigma[r.owner, r.period] = pi[k]
        elif r.kind == "min":
            zeta[r.owner, r.period] = pi[k]
        for b, a in zip(r.blocks, blocks[k]):
            target = _FAMILY_TARGET.get(b.family)
            if target is None:
                continue
            if r.owner is None:
                fam[target][:, b.period] = a
            else:
                fam[target][r.owner, :, b.period] = a
    mu = np.zeros(T)
    for e, row in enumerate(model.eqs):
        if row.kind == "energy":
            mu[row.period] = eq[e]
    rho = np.zeros((I, T))
    pos = {v: j for j, v in enumerate(model.commit)}
    for i in range(I):
        for t in range(T):
            rho[i, t] = rho_all[pos[model.on[i, t]]]
    return DualCertificate(nu, mu, lam, rho, sigma, zeta, objective=objective, pi=np.asarray(pi), eq=np.asarray(eq),
                           rho_all=np.asarray(rho_all), blocks=blocks, approximate=approximate, **fam)


def _read_dual(layout, v):
    pi = v[layout.pi]
    eq = v[layout.lam]
    rho = v[layout.rho]
    blocks = []
    for per_row in layout.alpha:
        out = []
        for plus, minus in per_row:
            a = v[plus] if minus is None else v[plus] - v[minus]
            out.append(np.asarray(a, dtype=float))
        blocks.append(out)
    return pi, eq, rho, blocks


def _lex_min_mu(lp, layout, model, sol):
    """Among optimal duals pick the lexicographically smallest energy-price vector.

    The optimal face is approximated by ``objective >= z* - slack``; the slack
    starts tiny and is widened only if rounding makes that face look empty.
    """
    mu_cols = [layout.lam[e] for e, row in enumerate(model.eqs) if row.kind == "energy"]
    z = sol.objective
    A = np.vstack([lp.A, lp.c])
    senses = lp.senses + (">=",)
    for slack in (LEX_SLACK, 1e3 * LEX_SLACK, 1e6 * LEX_SLACK):
        b = np.append(lp.b, z - slack * max(1.0, abs(z)))
        ub = lp.ub.copy()
        current, warm = sol, None
        for cidx in mu_cols:
            c = np.zeros(lp.c.size)
            c[cidx] = 1.0
            res = solve_lp(LpProblem(c, A, senses, b, lp.lb, ub), warm_start=warm)
            if res.status != OPTIMAL:
                break
            warm = res.basis
            val = res.x[cidx]
            ub[cidx] = val + slack * max(1.0, abs(val))
            current = res
        else:
            return current.x
    return sol.x


def _check_gap(primal, dual, what):
    gap = abs(primal - dual)
    if gap > DUALITY_TOL * max(1.0, abs(primal)):
        raise ConsistencyError(f"{what}: primal {primal:.9g} and dual {dual:.9g} differ by {gap:.3g}")


def solve_aro(inst):
    """Two-phase solve: MILP for commitments, then fixed-commitment primal and explicit dual."""
    model = build_model(inst)
    lp, layout = _primal_lp(model)
    milp = solve_milp(MipProblem(lp, model.binaries))
    if milp.status != OPTIMAL:
        raise InfeasibleError(f"robust unit commitment is {milp.status}")
    xc = model.commit_vector(milp.x[model.on].reshape(inst_shape(inst)))
    return _phase_two(model, xc)


def inst_shape(inst):
    return (inst.n_gen, inst.periods)


def _phase_two(model, xc):
    lp, _ = _primal_lp(model, xc)
    prim = solve_lp(lp)
    if prim.status != OPTIMAL:
        raise InfeasibleError(f"fixed-commitment counterpart is {prim.status}")
    dlp, dlayout = _dual_lp(model, xc)
    dual = solve_lp(dlp)
    if dual.status != OPTIMAL:
        raise ConsistencyError(f"dual of a solvable counterpart reported {dual.status}")
    _check_gap(prim.objective, dual.objective, "strong duality")
    v = _lex_min_mu(dlp, dlayout, model, dual)
    dual_obj = float(dlp.c @ v)
    _check_gap(prim.objective, dual_obj, "strong duality after price selection")
    sol = _assemble_solution(model, prim.x[:model.n])
    cert = _assemble_certificate(model, *_read_dual(dlayout, v), dual_obj)
    return sol, cert


def solve_fixed(inst, x_star):
    """Phase two only: counterpart and dual with commitments fixed at ``x_star``."""
    model = build_model(inst)
    return _phase_two(model, _commit_values_from(model, x_star))


# -- worst case ------------------------------------------------------------------

def worst_case_realization(sol, inst, cert=None):
    """Load and capacity residuals maximizing the adaptive dispatch cost, period by period.

    Without a certificate the maximizer comes from the closed form with the
    lowest-index tie rule.  With one, the cost-row multipliers are returned;
    they attain the same maximum and are the realization the settlement
    identities are stated for.
    """
    I, J, T = inst.n_gen, inst.n_node, inst.periods
    unc = inst.uncertainty
    d = np.zeros((J, T))
    r = np.zeros((I, T))
    if cert is not None:
        return RealizationVector(cert.alpha.copy(), cert.alpha_bar.copy())
    C = np.array([g.energy_cost for g in inst.generators])
    for t in range(T):
        _, d[:, t] = max_linear_over_ball(C @ sol.policy.V[:, :, t], unc.norm_order, unc.gamma_q[t])
        _, r[:, t] = max_linear_over_ball(C @ sol.policy.Z[:, :, t], unc.norm_order, unc.delta_p[t])
    return RealizationVector(d, r)


def adaptive_cost(sol, inst, realization):
    C = np.array([g.energy_cost for g in inst.generators])
    d, r = realization.load_residual, realization.capacity_residual
    return float(C @ (np.einsum("ijt,jt->i", sol.policy.V, d) + np.einsum("ikt,kt->i", sol.policy.Z, r)))


# -- audits ----------------------------------------------------------------------

def dual_residuals(model, cert):
    """Stationarity residuals ``c + A'pi + M'alpha - E'lam - rho`` of the dual point."""
    g = model.c.copy()
    for k, r in enumerate(model.rows):
        g += cert.pi[k] * r.a
        for b, a in zip(r.blocks, cert.blocks[k]):
            g += b.M.T @ a
    for e, row in enumerate(model.eqs):
        g -= cert.eq[e] * row.a
    g[model.commit] -= cert.rho_all
    return g


def audit(sol, cert, inst, tol=1e-6):
    """Structural laws of a solved instance as ``[(check, violation)]``."""
    model = sol.model
    order = model.order
    star = dual_order(order)
    y = sol.y
    checks = []
    scale = max(1.0, abs(sol.objective))
    checks.append(("strong duality", abs(sol.objective - cert.objective) / scale))
    checks.append(("nu = 1", abs(cert.nu - 1.0)))
    res = dual_residuals(model, cert)
    free = np.ones(model.n, dtype=bool)
    free[model.commit] = False
    checks.append(("dual stationarity", float(np.max(np.abs(res[free]), initial=0.0))))
    checks.append(("dual sign", float(max(0.0, -np.min(res[~free], initial=0.0)))))
    checks.append(("row multipliers >= 0", float(max(0.0, -np.min(cert.pi, initial=0.0)))))
    cap = 0.0
    ident = 0.0
    for k, r in enumerate(model.rows):
        for b, a in zip(r.blocks, cert.blocks[k]):
            cap = max(cap, norm(a, order) - b.radius * cert.pi[k])
            w = b.value(y)
            ident = max(ident, abs(a @ w - cert.pi[k] * b.radius * norm(w, star)))
    checks.append(("multiplier norm caps", max(0.0, cap)))
    checks.append(("optimality identities", ident))
    T = inst.periods
    checks.append(("energy balance", max(abs(sol.policy.u[:, t].sum() - inst.total_load(t)) for t in range(T))))
    col = 0.0
    for t in range(T):
        if inst.uncertainty.gamma_q[t] > 0:
            col = max(col, float(np.max(np.abs(sol.policy.V[:, :, t].sum(axis=0) - 1.0))))
        if inst.uncertainty.delta_p[t] > 0:
            col = max(col, float(np.max(np.abs(sol.policy.Z[:, :, t].sum(axis=0)))))
    checks.append(("column sums", col))
    bundle = RobustConstraintBundle.from_solution(sol, inst)
    C = np.array([g.energy_cost for g in inst.generators])
    b_err = max(
        float(np.max(np.abs(bundle.omega - np.einsum("i,ijt->jt", C, sol.policy.V)))),
        float(np.max(np.abs(bundle.tau + sol.policy.V.sum(axis=0) - 1.0))),
    )
    checks.append(("bundle identities", b_err))
    return [(name, float(v)) for name, v in checks]


def sample_feasibility(sol, inst, samples=1000, seed=0):
    """Worst violation of LDR dispatch bounds over points drawn from the uncertainty sets."""
    rng = np.random.default_rng(seed)
    unc = inst.uncertainty
    I, J, T = inst.n_gen, inst.n_node, inst.periods
    cap = np.array([g.cap_max for g in inst.generators])
    worst = 0.0
    for _ in range(samples):
        d = np.zeros((J, T))
        r = np.zeros((I, T))
        for t in range(T):
            d[:, t] = _sample_ball(rng, J, unc.norm_order, unc.gamma_q[t])
            r[:, t] = _sample_ball(rng, I, unc.norm_order, unc.delta_p[t])
        p = sol.policy.dispatch(d, r)
        upper = sol.x * (cap[:, None] + r)
        worst = max(worst, float(np.max(-p)), float(np.max(p - upper)))
        shortfall = inst.loads().sum(axis=0) + d.sum(axis=0) - p.sum(axis=0)
        worst = max(worst, float(np.max(shortfall)))
    return worst


def _sample_ball(rng, dim, order, radius):
    if radius == 0:
        return np.zeros(dim)
    order = NormOrder.parse(order)
    if order is NormOrder.INF:
        return rng.uniform(-radius, radius, dim)
    if order is NormOrder.TWO:
        g = rng.standard_normal(dim)
        return radius * rng.uniform() ** (1.0 / dim) * g / np.linalg.norm(g)
    # Uniform in the cross-polytope: exponential spacings with random signs.
    e = rng.exponential(size=dim + 1)
    return radius * rng.choice([-1.0, 1.0], dim) * e[:dim] / e.sum()


# -- 2-norm sets by outer approximation -------------------------------------------

MAX_ROUNDS = 200


class _CutModel:
    """Two polyhedral views of each block's ``||w_b||_2 <= t_b``.

    The outer view keeps supporting cuts ``g . w_b <= t_b`` and yields lower
    bounds with exactly dual-feasible multipliers.  The inner view writes
    ``w_b`` as ``t_b`` times a point of ``conv{+-e_j, cut directions}``, which
    sits inside the ball, so its solutions are truly feasible upper bounds.
    """

    def __init__(self, model):
        self.model = model
        n = model.n
        self.blocks = []       # (row k, block index, epi column)
        col = n
        for k, r in enumerate(model.rows):
            for bi, b in enumerate(r.blocks):
                self.blocks.append((k, bi, col))
                col += 1
        self.n_total = col
        self.cuts = []         # (block position, g)
        self.points = []       # per block, unit directions spanning the inner polytope
        for pos, (k, bi, _) in enumerate(self.blocks):
            b = model.rows[k].blocks[bi]
            dim = b.M.shape[0]
            pts = []
            for j in range(dim):
                for s in (1.0, -1.0):
                    g = np.zeros(dim)
                    g[j] = s
                    pts.append(g)
                    if np.any(b.M[j]) or b.m[j] != 0:
                        self.cuts.append((pos, g))
            self.points.append(pts)

    def _bounds(self, N, commit_values):
        model = self.model
        lb = np.full(N, -np.inf)
        ub = np.full(N, np.inf)
        lb[model.n:] = 0.0
        lb[model.commit] = 0.0
        ub[model.commit] = 1.0
        if commit_values is not None:
            lb[model.commit] = ub[model.commit] = commit_values
        return lb, ub

    def lp(self, commit_values=None, fix_rows=False):
        model = self.model
        n, N = model.n, self.n_total
        A, senses, rhs = [], [], []
        epi_of_row = {}
        for pos, (k, bi, col) in enumerate(self.blocks):
            epi_of_row.setdefault(k, []).append((col, model.rows[k].blocks[bi].radius))
        for k, r in enumerate(model.rows):
            a = np.zeros(N)
            a[:n] = r.a
            for col, radius in epi_of_row.get(k, []):
                a[col] += radius
            A.append(a)
            senses.append("<=")
            rhs.append(r.h)
        for e in model.eqs:
            a = np.zeros(N)
            a[:n] = e.a
            A.append(a)
            senses.append("==")
            rhs.append(e.e)
        for pos, g in self.cuts:
            k, bi, col = self.blocks[pos]
            b = model.rows[k].blocks[bi]
            a = np.zeros(N)
            a[:n] = g @ b.M
            a[col] = -1.0
            A.append(a)
            senses.append("<=")
            rhs.append(-g @ b.m)
        lb, ub = self._bounds(N, None if fix_rows else commit_values)
        if commit_values is not None and fix_rows:
            for j, v in enumerate(model.commit):
                a = np.zeros(N)
                a[v] = 1.0
                A.append(a)
                senses.append("==")
                rhs.append(commit_values[j])
        c = np.zeros(N)
        c[:n] = model.c
        return LpProblem(c, np.array(A).reshape(len(A), N), senses, rhs, lb, ub)

    def inner_lp(self, commit_values):
        model = self.model
        n = model.n
        offsets = []
        N = n
        for pts in self.points:
            offsets.append(N)
            N += len(pts)
        A, senses, rhs = [], [], []
        weight_cols = {}
        for pos, (k, bi, _) in enumerate(self.blocks):
            radius = model.rows[k].blocks[bi].radius
            cols = range(offsets[pos], offsets[pos] + len(self.points[pos]))
            weight_cols.setdefault(k, []).extend((c, radius) for c in cols)
        for k, r in enumerate(model.rows):
            a = np.zeros(N)
            a[:n] = r.a
            for col, radius in weight_cols.get(k, []):
                a[col] += radius
            A.append(a)
            senses.append("<=")
            rhs.append(r.h)
        for e in model.eqs:
            a = np.zeros(N)
            a[:n] = e.a
            A.append(a)
            senses.append("==")
            rhs.append(e.e)
        for pos, (k, bi, _) in enumerate(self.blocks):
            b = model.rows[k].blocks[bi]
            P = np.array(self.points[pos]).T
            for j in range(b.M.shape[0]):
                a = np.zeros(N)
                a[:n] = b.M[j]
                a[offsets[pos]:offsets[pos] + P.shape[1]] = -P[j]
                A.append(a)
                senses.append("==")
                rhs.append(-b.m[j])
        lb, ub = self._bounds(N, commit_values)
        c = np.zeros(N)
        c[:n] = model.c
        return LpProblem(c, np.array(A).reshape(len(A), N), senses, rhs, lb, ub)

    def refine(self, z):
        """Cut the blocks of every violated robust row at the incumbent; returns the number of cuts."""
        model = self.model
        y = z[:model.n]
        by_row = {}
        for pos, (k, bi, col) in enumerate(self.blocks):
            by_row.setdefault(k, []).append((pos, bi, col))
        added = 0
        for k, members in by_row.items():
            r = model.rows[k]
            values = [(pos, col, r.blocks[bi].value(y), r.blocks[bi].radius) for pos, bi, col in members]
            lhs = r.a @ y + sum(radius * np.linalg.norm(w) for _, _, w, radius in values)
            if lhs - r.h <= 1e-12 * max(1.0, abs(r.h)):
                continue
            for pos, col, w, _ in values:
                nw = float(np.linalg.norm(w))
                if nw > z[col] * (1 + 1e-12) + 1e-15:
                    self.cuts.append((pos, w / nw))
                    self.points[pos].append(w / nw)
                    added += 1
        return added


def _refine_commitment(cm, xc, tol, best):
    """Tighten both views at fixed commitments; returns the best ``(upper, y, xc)`` seen."""
    model = cm.model
    for _ in range(MAX_ROUNDS):
        outer = solve_lp(cm.lp(xc))
        if outer.status != OPTIMAL:
            # Cuts added since the master last ran have ruled these commitments out.
            return best
        inner = solve_lp(cm.inner_lp(xc))
        if inner.status == OPTIMAL and (best is None or inner.objective < best[0]):
            best = (float(inner.objective), inner.x[:model.n].copy(), xc)
        if best is not None and best[0] - outer.objective <= tol * max(1.0, abs(best[0])):
            return best
        if not cm.refine(outer.x):
            return best
    raise ResourceLimitError(f"cutting planes did not close the bound gap to {tol} in {MAX_ROUNDS} rounds")


def ellipsoidal_outer_solve(inst, tol=1e-7):
    """2-norm uncertainty sets, bracketed by outer cuts and inner hulls until the bounds meet.

    The returned policy is truly robust feasible; the certificate comes from
    the outer LP at the chosen commitments, so its objective is a lower bound
    within ``tol`` (relative) of the policy's cost.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    model = build_model(inst)
    model.order = NormOrder.TWO
    cm = _CutModel(model)
    best = None
    for _ in range(MAX_ROUNDS):
        milp = solve_milp(MipProblem(cm.lp(), model.binaries))
        if milp.status != OPTIMAL:
            raise InfeasibleError(f"robust unit commitment is {milp.status}")
        if best is not None and best[0] - milp.objective <= tol * max(1.0, abs(best[0])):
            break
        xc = model.commit_vector(milp.x[model.on].reshape(inst_shape(inst)))
        best = _refine_commitment(cm, xc, tol, best)
    else:
        raise ResourceLimitError(f"commitments did not settle in {MAX_ROUNDS} rounds")

    upper, y, xc = best
    lp = cm.lp(xc, fix_rows=True)
    res = solve_lp(lp)
    n_rows, n_eqs = len(model.rows), len(model.eqs)
    # Sensitivities of a minimization are <= 0 on <= rows; multipliers are their negatives.
    pi = -res.duals[:n_rows]
    eq = res.duals[n_rows:n_rows + n_eqs]
    kappa = -res.duals[n_rows + n_eqs:n_rows + n_eqs + len(cm.cuts)]
    rho = res.duals[n_rows + n_eqs + len(cm.cuts):]
    blocks = [[np.zeros(b.M.shape[0]) for b in r.blocks] for r in model.rows]
    for (pos, g), kap in zip(cm.cuts, kappa):
        k, bi, _ = cm.blocks[pos]
        blocks[k][bi] += kap * g
    dual_obj = float(-pi @ np.array([r.h for r in model.rows]) + eq @ np.array([e.e for e in model.eqs])
                     + rho @ xc + sum(a @ b.m for r, bl in zip(model.rows, blocks) for b, a in zip(r.blocks, bl)))
    _check_gap(res.objective, dual_obj, "outer-approximation duality")
    if upper - dual_obj > tol * max(1.0, abs(upper)) + 1e-9:
        raise ConsistencyError(f"inner bound {upper:.9g} and outer bound {dual_obj:.9g} did not meet")
    sol = _assemble_solution(model, y, approximate=True)
    cert = _assemble_certificate(model, pi, eq, rho, blocks, dual_obj, approximate=True)
    return sol, cert
