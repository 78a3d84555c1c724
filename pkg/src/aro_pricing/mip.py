"""Branch and bound over binary variables, on top of the simplex in ``lp``.

Nodes are explored best-bound first (ties: creation order); the branching
variable is the most fractional binary (ties: lowest index).  Child LPs are
warm-started from the parent's optimal basis.
"""

import heapq
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConstructionError, ResourceLimitError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpWorkspace

INT_TOL = 1e-6
NODE_LIMIT = 10**6


@dataclass
class MipProblem:
    lp: object
    binaries: tuple

    def __post_init__(self):
        self.binaries = tuple(int(j) for j in self.binaries)
        n = self.lp.c.size
        for j in self.binaries:
            if not 0 <= j < n:
                raise ConstructionError(f"binary index {j} outside 0..{n - 1}")
        b = list(self.binaries)
        if np.any(self.lp.lb[b] < 0) or np.any(self.lp.ub[b] > 1):
            # Binaries must live in [0, 1]; tighten rather than reject.
            self.lp.lb[b] = np.maximum(self.lp.lb[b], 0.0)
            self.lp.ub[b] = np.minimum(self.lp.ub[b], 1.0)


@dataclass
class MipSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    nodes: int = 0
    best_bound: Optional[float] = None


def solve_milp(p, node_limit=NODE_LIMIT, rel_gap=1e-9):
    lp = p.lp
    sense = -1.0 if lp.maximize else 1.0
    ws = LpWorkspace(lp)
    binaries = np.array(p.binaries, dtype=int)
    counter = 0
    incumbent = None
    inc_obj = np.inf
    nodes = 0

    root = ws.solve(lp.lb, lp.ub)
    nodes += 1
    if root.status == INFEASIBLE:
        return MipSolution(INFEASIBLE, nodes=nodes)
    if root.status == UNBOUNDED:
        return MipSolution(UNBOUNDED, nodes=nodes)
    heap = [(sense * root.objective, counter, lp.lb.copy(), lp.ub.copy(), root)]
    best_bound = sense * root.objective

    while heap:
        bound, _, lb, ub, sol = heapq.heappop(heap)
        best_bound = bound
        if incumbent is not None and bound >= inc_obj - rel_gap * max(1.0, abs(inc_obj)):
            break
        vals = sol.x[binaries]
        frac = np.abs(vals - np.round(vals))
        if binaries.size == 0 or frac.max() <= INT_TOL:
            snapped_lb, snapped_ub = lb.copy(), ub.copy()
            rounded = np.round(vals)
            snapped_lb[binaries] = rounded
            snapped_ub[binaries] = rounded
            clean = ws.solve(snapped_lb, snapped_ub, sol.basis)
            nodes += 1
            if clean.status == OPTIMAL and sense * clean.objective < inc_obj:
                incumbent, inc_obj = clean, sense * clean.objective
            continue
        # Most fractional; np.argmax picks the lowest index among ties.
        k = int(np.argmax(np.round(0.5 - np.abs(frac - 0.5), 12)))
        j = binaries[k]
        for value in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = value
            if nodes >= node_limit:
                raise ResourceLimitError(f"branch and bound node limit {node_limit} reached")
            child = ws.solve(clb, cub, sol.basis)
            nodes += 1
            if child.status != OPTIMAL:
                continue
            cobj = sense * child.objective
            if incumbent is not None and cobj >= inc_obj - rel_gap * max(1.0, abs(inc_obj)):
                continue
            counter += 1
            heapq.heappush(heap, (cobj, counter, clb, cub, child))

    if incumbent is None:
        return MipSolution(INFEASIBLE, nodes=nodes)
    x = incumbent.x.copy()
    x[binaries] = np.round(x[binaries])
    return MipSolution(OPTIMAL, x, incumbent.objective, nodes, sense * min(best_bound, inc_obj))
