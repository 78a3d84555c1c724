"""Linear programming: revised simplex over bounded variables, with duals.

Every row ``a @ x (<=|==|>=) b`` gets a slack ``s`` so that ``a @ x + s = b``
with ``s`` in ``[0, inf)``, ``(-inf, 0]`` or ``[0, 0]``.  The solver keeps an
explicit dense basis inverse, refactorized periodically.  Phase 1 minimizes
the sum of bound violations of the basic variables starting from whatever
basis it is handed, so warm starts after bound changes (branch and bound)
need no artificial columns.

Dual values are reported as sensitivities: ``duals[i]`` is the rate of change
of the optimal objective with respect to ``b[i]``, for both min and max
problems.  Reduced costs are ``c - A.T @ duals``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConstructionError, ResourceLimitError, SolverStateError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-9
BLAND_AFTER = 1000
REFACTOR_EVERY = 100

_SENSES = {"<=": "<=", "<": "<=", "L": "<=", "==": "==", "=": "==", "E": "==", ">=": ">=", ">": ">=", "G": ">="}


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    maximize: bool = False
    col_names: Optional[list] = None
    row_names: Optional[list] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise ConstructionError(f"constraint matrix shape {A.shape} does not match {n} costs")
        self.A = A
        m = A.shape[0]
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.b.size != m:
            raise ConstructionError(f"{self.b.size} right-hand sides for {m} rows")
        try:
            self.senses = tuple(_SENSES[s] for s in self.senses)
        except KeyError as exc:
            raise ConstructionError(f"unknown row relation {exc.args[0]!r}") from None
        if len(self.senses) != m:
            raise ConstructionError(f"{len(self.senses)} relations for {m} rows")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel().copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel().copy()
        if self.lb.size != n or self.ub.size != n:
            raise ConstructionError("bound vectors do not match the number of columns")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(A))):
            raise ConstructionError("costs, coefficients and right-hand sides must be finite")
        if np.any(self.lb > self.ub):
            raise ConstructionError("a lower bound exceeds its upper bound")

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    iterations: int = 0
    # (basic columns, nonbasic-at-upper mask, basis inverse); reusable as a warm start.
    basis: Optional[tuple] = None
    # Farkas multipliers (infeasible) or a primal ray (unbounded).
    certificate: Optional[np.ndarray] = None

    @property
    def optimal(self):
        return self.status == OPTIMAL


class _StandardForm:
    """``A_full @ z = b`` with ``lo <= z <= hi``; the last ``m`` columns are slacks."""

    def __init__(self, p):
        m, n = p.A.shape
        self.m, self.n = m, n
        self.sign = -1.0 if p.maximize else 1.0
        self.A = np.hstack([p.A, np.eye(m)])
        self.b = p.b.copy()
        self.cost = np.concatenate([self.sign * p.c, np.zeros(m)])
        slo = np.array([0.0 if s != ">=" else -np.inf for s in p.senses])
        shi = np.array([np.inf if s == "<=" else 0.0 for s in p.senses])
        self.lo = np.concatenate([p.lb, slo])
        self.hi = np.concatenate([p.ub, shi])


def _nonbasic_values(lo, hi, at_upper):
    v = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    up = at_upper & np.isfinite(hi)
    v[up] = hi[up]
    return v


class _Simplex:
    def __init__(self, sf, lo, hi, warm=None, max_iter=None):
        self.sf = sf
        self.lo, self.hi = lo, hi
        m, N = sf.m, sf.A.shape[1]
        self.max_iter = max_iter if max_iter is not None else 100 * (m + sf.n)
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.degenerate_run = 0
        self.bland = False
        at_upper = np.zeros(N, dtype=bool)
        basis = Binv = None
        if warm is not None:
            basis, at_upper = np.array(warm[0], dtype=int), np.array(warm[1], dtype=bool)
            if len(warm) > 2:
                Binv = warm[2]
        if basis is None or not self._try_basis(basis, at_upper, Binv):
            self._try_basis(np.arange(sf.n, sf.n + m), np.zeros(N, dtype=bool))

    def _try_basis(self, basis, at_upper, Binv=None):
        sf = self.sf
        if Binv is not None and Binv.shape == (sf.m, sf.m):
            Binv = Binv.copy()
        elif sf.m:
            B = sf.A[:, basis]
            try:
                Binv = np.linalg.inv(B)
            except np.linalg.LinAlgError:
                return False
            if not np.all(np.isfinite(Binv)) or np.abs(Binv).max() > 1e10:
                return False
        else:
            Binv = np.zeros((0, 0))
        self.basis = np.array(basis, dtype=int)
        self.is_basic = np.zeros(sf.A.shape[1], dtype=bool)
        self.is_basic[self.basis] = True
        self.Binv = Binv
        self.x = _nonbasic_values(self.lo, self.hi, at_upper)
        self._recompute_basics()
        return True

    def _recompute_basics(self):
        sf = self.sf
        xn = np.where(self.is_basic, 0.0, self.x)
        self.x[self.basis] = self.Binv @ (sf.b - sf.A @ xn)

    def refactor(self):
        if self.sf.m:
            self.Binv = np.linalg.inv(self.sf.A[:, self.basis])
        self._recompute_basics()
        self.pivots_since_refactor = 0

    def polish(self):
        """Recompute basic values; refactorize only if the inverse has drifted.

        Drift is measured by the primal and dual residuals of the current basis,
        which costs two products instead of forming ``Binv @ B``.
        """
        sf = self.sf
        self._recompute_basics()
        if not sf.m:
            return
        B = sf.A[:, self.basis]
        primal = np.abs(sf.A @ self.x - sf.b).max() / (1.0 + np.abs(sf.b).max())
        cB = sf.cost[self.basis]
        dual = np.abs((cB @ self.Binv) @ B - cB).max() / (1.0 + np.abs(cB).max())
        if primal > 1e-10 or dual > 1e-10:
            self.refactor()

    def infeasibility(self):
        xb = self.x[self.basis]
        lo, hi = self.lo[self.basis], self.hi[self.basis]
        below = xb < lo - FEAS_TOL
        above = xb > hi + FEAS_TOL
        return below, above, float(np.sum(np.where(below, lo - xb, 0.0)) + np.sum(np.where(above, xb - hi, 0.0)))

    def _entering(self, d):
        x, lo, hi = self.x, self.lo, self.hi
        nb = ~self.is_basic & (hi > lo)
        can_up = nb & (x < hi - 1e-12) & (d < -OPT_TOL)
        can_down = nb & (x > lo + 1e-12) & (d > OPT_TOL)
        cand = np.flatnonzero(can_up | can_down)
        if cand.size == 0:
            return None, 0
        if self.bland:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(np.abs(d[cand]))])
        return q, (1 if can_up[q] else -1)

    def run(self, phase):
        """Iterate until optimal for the phase; returns a status string."""
        sf = self.sf
        while True:
            if phase == 1:
                below, above, total = self.infeasibility()
                if total == 0.0:
                    return "feasible"
                cB = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                box_lo = np.where(below, -np.inf, np.where(above, self.hi[self.basis], self.lo[self.basis]))
                box_hi = np.where(below, self.lo[self.basis], np.where(above, np.inf, self.hi[self.basis]))
                cost = np.zeros(sf.A.shape[1])
                cost[self.basis] = cB
            else:
                cB = sf.cost[self.basis]
                box_lo, box_hi = self.lo[self.basis], self.hi[self.basis]
                cost = sf.cost
            y = cB @ self.Binv
            d = cost - y @ sf.A
            q, direction = self._entering(d)
            if q is None:
                self.y = y
                return "infeasible" if phase == 1 else OPTIMAL
            if self.iterations >= self.max_iter:
                raise ResourceLimitError(f"simplex iteration limit {self.max_iter} reached")
            self.iterations += 1
            alpha = self.Binv @ sf.A[:, q]
            rate = -direction * alpha
            xb = self.x[self.basis]
            limits = np.full(rate.size, np.inf)
            pos = rate > PIVOT_TOL
            neg = rate < -PIVOT_TOL
            limits[pos] = (box_hi[pos] - xb[pos]) / rate[pos]
            limits[neg] = (box_lo[neg] - xb[neg]) / rate[neg]
            limits = np.maximum(limits, 0.0)
            own = self.hi[q] - self.lo[q]
            t_basic = limits.min() if limits.size else np.inf
            if own <= t_basic:
                if not np.isfinite(own):
                    self.ray_entering = (q, direction, rate)
                    return UNBOUNDED
                self.x[q] += direction * own
                self.x[self.basis] += rate * own
                self.degenerate_run = 0
                self.bland = False
                continue
            if not np.isfinite(t_basic):
                self.ray_entering = (q, direction, rate)
                return UNBOUNDED
            ties = np.flatnonzero(limits <= t_basic + 1e-12)
            if self.bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(rate[ties]))])
            t = t_basic
            self.x[q] += direction * t
            self.x[self.basis] += rate * t
            leaving = self.basis[r]
            self.x[leaving] = box_hi[r] if rate[r] > 0 else box_lo[r]
            self._pivot(r, q, alpha)
            if t <= 1e-12:
                self.degenerate_run += 1
                if self.degenerate_run > BLAND_AFTER:
                    self.bland = True
            else:
                self.degenerate_run = 0
                self.bland = False

    def _nonbasic_sides(self):
        nb = ~self.is_basic & (self.hi > self.lo)
        at_lo = nb & np.isfinite(self.lo) & (self.x <= self.lo + 1e-12)
        at_hi = nb & ~at_lo & np.isfinite(self.hi) & (self.x >= self.hi - 1e-12)
        free = nb & ~at_lo & ~at_hi
        return at_lo, at_hi, free

    def _reduced_costs(self):
        sf = self.sf
        return sf.cost - (sf.cost[self.basis] @ self.Binv) @ sf.A

    def dual_feasible(self):
        d = self._reduced_costs()
        at_lo, at_hi, free = self._nonbasic_sides()
        return (np.all(d[at_lo] >= -OPT_TOL) and np.all(d[at_hi] <= OPT_TOL)
                and np.all(np.abs(d[free]) <= OPT_TOL))

    def run_dual(self, limit):
        """Bounded dual simplex from a dual-feasible basis.

        Stops when the basis turns primal feasible, when a row admits no
        entering column (the primal is then infeasible) or after ``limit``
        pivots; the primal phases take over in every case.
        """
        sf = self.sf
        for _ in range(limit):
            xb = self.x[self.basis]
            lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]
            gap = np.maximum(lo_b - xb, xb - hi_b)
            r = int(np.argmax(gap)) if gap.size else 0
            if not gap.size or gap[r] <= FEAS_TOL:
                return "feasible"
            raise_row = xb[r] < lo_b[r]
            target = lo_b[r] if raise_row else hi_b[r]
            row = self.Binv[r] @ sf.A
            d = self._reduced_costs()
            at_lo, at_hi, free = self._nonbasic_sides()
            up, down = row < -PIVOT_TOL, row > PIVOT_TOL
            if raise_row:
                eligible = (at_lo & up) | (at_hi & down) | (free & (up | down))
            else:
                eligible = (at_lo & down) | (at_hi & up) | (free & (up | down))
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return "infeasible"
            ratios = np.abs(d[cand]) / np.abs(row[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12]
            q = int(ties[np.argmax(np.abs(row[ties]))])
            alpha = self.Binv @ sf.A[:, q]
            theta = (xb[r] - target) / alpha[r]
            leaving = self.basis[r]
            self.x[q] += theta
            self.x[self.basis] -= alpha * theta
            self.x[leaving] = target
            self.iterations += 1
            self._pivot(r, q, alpha)
        return "stalled"

    def _pivot(self, r, q, alpha):
        leaving = self.basis[r]
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_EVERY:
            self.refactor()


def _solve_standard(sf, lo, hi, warm=None, max_iter=None):
    s = _Simplex(sf, lo, hi, warm, max_iter)
    if warm is not None and s.dual_feasible():
        s.run_dual(10 * (sf.m + 1))
    for _ in range(50):
        status = s.run(1)
        if status == "infeasible":
            s.polish()
            if s.infeasibility()[2] == 0.0:
                continue
            return s, INFEASIBLE
        status = s.run(2)
        if status == UNBOUNDED:
            return s, UNBOUNDED
        s.polish()
        if s.infeasibility()[2] == 0.0:
            # Re-check optimality against the refactorized basis.
            cB = sf.cost[s.basis]
            y = cB @ s.Binv
            d = sf.cost - y @ sf.A
            if s._entering(d)[0] is None:
                s.y = y
                return s, OPTIMAL
    raise SolverStateError("simplex failed to stabilize after repeated refactorization")


def _package(p, sf, s, status):
    n = sf.n
    at_upper = ~s.is_basic & np.isfinite(s.hi) & (s.x >= s.hi - 1e-12) & (s.hi > s.lo)
    basis = (s.basis.copy(), at_upper, s.Binv.copy())
    if status == OPTIMAL:
        x = s.x[:n].copy()
        duals = sf.sign * s.y
        reduced = p.c - p.A.T @ duals
        return LpSolution(OPTIMAL, x, float(p.c @ x), duals, reduced, s.iterations, basis)
    if status == INFEASIBLE:
        return LpSolution(INFEASIBLE, iterations=s.iterations, basis=basis, certificate=s.y.copy())
    q, direction, rate = s.ray_entering
    ray = np.zeros(sf.A.shape[1])
    ray[q] = direction
    ray[s.basis] = rate
    return LpSolution(UNBOUNDED, iterations=s.iterations, basis=basis, certificate=ray[:n])


def solve_lp(p, warm_start=None, max_iter=None):
    """Solve ``p``; ``warm_start`` is the ``basis`` of an earlier solution of a same-shaped problem."""
    sf = _StandardForm(p)
    s, status = _solve_standard(sf, sf.lo, sf.hi, warm_start, max_iter)
    return _package(p, sf, s, status)


class LpWorkspace:
    """Repeated solves of one problem under varying column bounds (branch and bound)."""

    def __init__(self, p):
        self.problem = p
        self.sf = _StandardForm(p)

    def solve(self, lb, ub, warm_start=None, max_iter=None):
        sf = self.sf
        lo = np.concatenate([lb, sf.lo[sf.n:]])
        hi = np.concatenate([ub, sf.hi[sf.n:]])
        s, status = _solve_standard(sf, lo, hi, warm_start, max_iter)
        return _package(self.problem, sf, s, status)


@dataclass
class SlacknessReport:
    max_violation: float
    conditions: list = field(default_factory=list)
    tolerance: float = 1e-6

    @property
    def passed(self):
        return self.max_violation <= self.tolerance


def check_complementary_slackness(p, s, tol=1e-6):
    """Audit ``s`` against ``p``: row ``|dual * slack|`` and column ``|reduced cost * distance to bound|``.

    Reduced costs are recomputed from ``s.duals`` so a tampered dual vector is caught.
    """
    if s.status != OPTIMAL:
        raise SolverStateError(f"complementary slackness needs an optimal solution, got {s.status}")
    conditions = []
    slack = p.b - p.A @ s.x
    for i in range(p.A.shape[0]):
        v = abs(s.duals[i] * slack[i])
        conditions.append((f"row:{p.row_names[i] if p.row_names else i}", v))
    reduced = p.c - p.A.T @ s.duals
    for j in range(p.c.size):
        dists = [abs(s.x[j] - bnd) for bnd in (p.lb[j], p.ub[j]) if np.isfinite(bnd)]
        dist = min(dists) if dists else 1.0
        conditions.append((f"col:{p.col_names[j] if p.col_names else j}", abs(reduced[j]) * dist))
    worst = max((v for _, v in conditions), default=0.0)
    return SlacknessReport(worst, conditions, tol)
