"""Seeded random instances for property checks."""

import numpy as np

from .model import DemandNode, GeneratorSpec, UCInstance, UncertaintySpec
from .norms import NormOrder


def random_instance(seed, min_gen=3, max_gen=8, min_node=2, max_node=5, capacity_noise=True):
    """A single-period instance that is robustly feasible by construction.

    Budgets stay below what the expected load can absorb (the nonnegativity
    rows need ``sum(u) >= gamma`` under the 1-norm), and installed capacity
    comfortably exceeds the worst-case load.
    """
    rng = np.random.default_rng(seed)
    I = int(rng.integers(min_gen, max_gen + 1))
    J = int(rng.integers(min_node, max_node + 1))
    order = NormOrder.ONE if rng.random() < 0.6 else NormOrder.INF
    loads = np.round(rng.uniform(2.0, 15.0, J), 2)
    total = float(loads.sum())
    if order is NormOrder.ONE:
        gamma = round(float(rng.uniform(0.05, 0.5)) * total, 2)
        worst = gamma
    else:
        gamma = round(float(rng.uniform(0.05, 0.5)) * total / J, 2)
        worst = gamma * J
    delta = round(float(rng.uniform(0.1, 1.0)), 2) if capacity_noise and rng.random() < 0.5 else 0.0
    shares = rng.dirichlet(np.ones(I))
    caps = np.round(2.5 * (total + worst) * shares + 2.0 + delta * 4, 2)
    gens = []
    for i in range(I):
        cap_min = round(float(rng.uniform(0.0, 0.2)) * caps[i], 2) if rng.random() < 0.3 else 0.0
        gens.append(GeneratorSpec(
            id=f"G{i + 1}",
            commit_cost=round(float(rng.uniform(0.0, 60.0)), 2),
            energy_cost=round(float(rng.uniform(1.0, 6.0)), 2),
            cap_max=float(caps[i]),
            cap_min=cap_min,
        ))
    nodes = [DemandNode(f"N{j + 1}", (float(loads[j]),)) for j in range(J)]
    return UCInstance(tuple(gens), tuple(nodes), 1, UncertaintySpec(order, (gamma,), (delta,)), f"random-{seed}")
