"""Reference solvers that share no code with the package.

Vertex enumeration needs a bounded feasible region (finite column bounds);
the mixed-integer version enumerates every binary assignment and reuses the
same active sets across assignments, since only right-hand sides change.
"""

import itertools

import numpy as np

FEAS = 1e-9


def _split(A, senses, b, lb, ub, cols):
    """Inequalities ``G x <= h`` and equalities ``E x = e`` over ``cols``, with rhs as affine maps of the rest."""
    A = np.asarray(A, dtype=float)
    G, gh, E, eh = [], [], [], []
    for a, s, rhs in zip(A, senses, b):
        if s == "<=":
            G.append((a, rhs, 1.0))
        elif s == ">=":
            G.append((a, rhs, -1.0))
        else:
            E.append((a, rhs, 1.0))
    n = A.shape[1]
    for j in cols:
        e = np.zeros(n)
        e[j] = 1.0
        G.append((e, ub[j], 1.0))
        G.append((e, lb[j], -1.0))
    return G, E


def _vertices(c_cont, G_cont, h, E_cont, e):
    """Best vertex value per scenario; ``h`` is (S, p), ``e`` is (S, q)."""
    S = h.shape[0]
    n = c_cont.size
    q = E_cont.shape[0]
    best = np.full(S, np.inf)
    if n == 0:
        ok = np.all(h >= -FEAS, axis=1) & np.all(np.abs(e) <= FEAS, axis=1)
        best[ok] = 0.0
        return best
    # Active sets use an independent subset of the equalities; all of them are still checked.
    basis_rows = []
    for i in range(q):
        if np.linalg.matrix_rank(E_cont[basis_rows + [i]]) > len(basis_rows):
            basis_rows.append(i)
    for combo in itertools.combinations(range(G_cont.shape[0]), n - len(basis_rows)):
        M = np.vstack([E_cont[basis_rows], G_cont[list(combo)]])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        Minv = np.linalg.inv(M)
        rhs = np.hstack([e[:, basis_rows], h[:, list(combo)]])
        X = rhs @ Minv.T
        scale = 1.0 + np.abs(h)
        ok = np.all(X @ G_cont.T <= h + FEAS * scale, axis=1)
        if q:
            ok &= np.all(np.abs(X @ E_cont.T - e) <= FEAS * (1.0 + np.abs(e)), axis=1)
        vals = X @ c_cont
        best = np.where(ok & (vals < best), vals, best)
    return best


def milp_by_enumeration(c, A, senses, b, lb, ub, binaries=()):
    """Minimum of ``c x`` over the mixed-binary set, or ``None`` when empty."""
    c = np.asarray(c, dtype=float)
    n = c.size
    binaries = list(binaries)
    cont = [j for j in range(n) if j not in binaries]
    G, E = _split(A, senses, b, lb, ub, cont)
    combos = list(itertools.product((0.0, 1.0), repeat=len(binaries)))
    assigns = np.array(combos, dtype=float).reshape(len(combos), len(binaries))
    # Binary bounds from the problem still apply.
    keep = np.all((assigns >= np.asarray(lb)[binaries] - FEAS) & (assigns <= np.asarray(ub)[binaries] + FEAS), axis=1)
    assigns = assigns[keep]
    if assigns.shape[0] == 0:
        return None
    G_full = np.array([s * a for a, _, s in G]).reshape(len(G), n)
    g_rhs = np.array([s * r for _, r, s in G])
    E_full = np.array([a for a, _, _ in E]).reshape(len(E), n)
    e_rhs = np.array([r for _, r, _ in E])
    h = g_rhs[None, :] - assigns @ G_full[:, binaries].T
    e = e_rhs[None, :] - assigns @ E_full[:, binaries].T
    rest = _vertices(c[cont], G_full[:, cont], h, E_full[:, cont], e)
    total = rest + assigns @ c[binaries]
    best = total.min()
    return None if not np.isfinite(best) else float(best)


def lp_by_vertices(c, A, senses, b, lb, ub):
    return milp_by_enumeration(c, A, senses, b, lb, ub, ())


def random_bounded_lp(rng, max_rows=5, max_cols=4):
    m, n = int(rng.integers(1, max_rows + 1)), int(rng.integers(1, max_cols + 1))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    b = rng.integers(-5, 15, m).astype(float)
    c = rng.integers(-6, 7, n).astype(float)
    senses = list(rng.choice(["<=", ">=", "=="], m, p=[0.6, 0.25, 0.15]))
    if senses.count("==") > n:
        senses = ["<=" if s == "==" else s for s in senses]
    lb = rng.integers(-4, 1, n).astype(float)
    ub = lb + rng.integers(1, 8, n)
    return c, A, senses, b, lb, ub


def random_mixed(rng, n_bin, n_cont=2, rows=4):
    n = n_bin + n_cont
    A = rng.integers(-4, 5, (rows, n)).astype(float)
    b = rng.integers(0, 12, rows).astype(float)
    c = rng.integers(-8, 8, n).astype(float)
    senses = list(rng.choice(["<=", ">="], rows, p=[0.75, 0.25]))
    lb = np.zeros(n)
    ub = np.concatenate([np.ones(n_bin), rng.integers(1, 9, n_cont).astype(float)])
    return c, A, senses, b, lb, ub, list(range(n_bin))
