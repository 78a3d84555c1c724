import numpy as np
import pytest

from aro_pricing.errors import InfeasibleError, UnsupportedNormError
from aro_pricing.lp import OPTIMAL, solve_lp
from aro_pricing.mip import MipProblem, solve_milp
from aro_pricing.model import builtin_instance, load_instance
from aro_pricing.norms import norm
from aro_pricing.robust import (RobustConstraintBundle, adaptive_cost, audit, build_robust_dual, build_robust_primal,
                                ellipsoidal_outer_solve, sample_feasibility, solve_aro, solve_fixed,
                                worst_case_realization)
from aro_pricing.uc import deterministic_uc


def single_unit(norm_name="L2", gamma=2.0):
    return load_instance({
        "name": "one", "periods": 1,
        "generators": [{"id": "A", "commit_cost": 0, "energy_cost": 1, "cap_max": 100}],
        "demand_nodes": [{"id": "N", "expected_load": [10]}],
        "uncertainty": {"norm": norm_name, "gamma_q": [gamma], "delta_p": [0]},
    })


def test_scarf_objective_and_price(scarf):
    _, sol, cert = scarf
    assert sol.objective == pytest.approx(378.0, abs=1e-6)
    assert cert.mu == pytest.approx([3.0], abs=1e-6)
    assert sol.policy.u.sum() == pytest.approx(40.0)


def test_scarf_deterministic(scarf_det):
    _, sol, cert = scarf_det
    assert sol.objective == pytest.approx(260.0, abs=1e-6)
    assert cert.mu == pytest.approx([2.0], abs=1e-6)


def test_dual_lp_matches_primal_at_fixed_commitment(scarf):
    inst, sol, _ = scarf
    dual = solve_lp(build_robust_dual(inst, sol.x))
    assert dual.status == OPTIMAL
    assert dual.objective == pytest.approx(378.0, abs=1e-6)
    again, cert = solve_fixed(inst, sol.x)
    assert again.objective == pytest.approx(378.0, abs=1e-6)
    assert cert.objective == pytest.approx(378.0, abs=1e-6)


def test_primal_milp_directly():
    inst = builtin_instance("scarf")
    p = build_robust_primal(inst)
    assert isinstance(p, MipProblem)
    assert solve_milp(p).objective == pytest.approx(378.0, abs=1e-6)


def test_chen_robust(chen):
    inst, sol, cert = chen
    assert sol.objective == pytest.approx(7860.0, abs=1e-6)
    assert cert.mu == pytest.approx([10.0, 10.0, 130.0], abs=1e-6)
    # Capacity residuals never carry energy cost at the optimum.
    r = worst_case_realization(sol, inst, cert).capacity_residual
    assert adaptive_cost(sol, inst, worst_case_realization(sol, inst)) >= 0
    C = np.array([g.energy_cost for g in inst.generators])
    assert C @ np.einsum("ikt,kt->i", sol.policy.Z, r) == pytest.approx(0.0, abs=1e-6)


def test_scarf_worst_case_closed_form(scarf):
    inst, sol, _ = scarf
    omega = RobustConstraintBundle.from_solution(sol, inst).omega[:, 0]
    assert omega == pytest.approx([2.475] * 5, abs=1e-9)
    w = worst_case_realization(sol, inst)
    assert w.load_residual[:, 0].tolist() == [20.0, 0.0, 0.0, 0.0, 0.0]
    assert w.in_sets(inst)
    wc = adaptive_cost(sol, inst, w)
    assert wc == pytest.approx(49.5, abs=1e-6)
    assert 328.5 + wc == pytest.approx(sol.objective, abs=1e-6)


def test_certificate_realization_attains_same_cost(theorem_suite):
    for inst, sol, cert in theorem_suite:
        closed = adaptive_cost(sol, inst, worst_case_realization(sol, inst))
        dual = adaptive_cost(sol, inst, worst_case_realization(sol, inst, cert))
        assert dual == pytest.approx(closed, abs=1e-6 * max(1, abs(closed)))


def test_no_capacity_budget_means_no_capacity_residual(scarf):
    inst, sol, cert = scarf
    assert not np.any(worst_case_realization(sol, inst).capacity_residual)
    assert not np.any(worst_case_realization(sol, inst, cert).capacity_residual)


def test_audit_laws_hold_everywhere(theorem_suite, chen):
    for inst, sol, cert in theorem_suite + [chen]:
        for name, violation in audit(sol, cert, inst):
            assert violation <= 1e-6, (inst.name, name, violation)


def test_certificate_structure(theorem_suite):
    for inst, sol, cert in theorem_suite:
        unc = inst.uncertainty
        C = np.array([g.energy_cost for g in inst.generators])
        assert cert.nu == pytest.approx(1.0)
        for arr in (cert.lam, cert.sigma, cert.zeta):
            assert np.all(arr >= -1e-9)
        for t in range(inst.periods):
            g, dp = unc.gamma_q[t], unc.delta_p[t]
            assert norm(cert.alpha[:, t], unc.norm_order) <= g * cert.nu + 1e-6
            assert norm(cert.alpha_bar[:, t], unc.norm_order) <= dp * cert.nu + 1e-6
            for i in range(inst.n_gen):
                assert norm(cert.beta[i, :, t], unc.norm_order) <= g * cert.sigma[i, t] + 1e-6
                assert norm(cert.gamma[i, :, t], unc.norm_order) <= g * cert.zeta[i, t] + 1e-6
            if inst.periods == 1 and not any(gen.needs_transitions for gen in inst.generators):
                # Stationarity in the nominal dispatch.
                on = sol.x[:, t] > 0.5
                lhs = C[on] * cert.nu
                rhs = cert.mu[t] - cert.sigma[on, t] + cert.zeta[on, t]
                assert lhs == pytest.approx(rhs, abs=1e-6)


def test_named_optimality_identities(scarf_cap):
    inst, sol, cert = scarf_cap
    b = RobustConstraintBundle.from_solution(sol, inst)
    order = inst.uncertainty.norm_order
    G, D = inst.uncertainty.gamma_q[0], inst.uncertainty.delta_p[0]
    from aro_pricing.norms import dual_order
    star = dual_order(order)
    t = 0
    assert cert.alpha[:, t] @ b.omega[:, t] == pytest.approx(cert.nu * G * norm(b.omega[:, t], star), abs=1e-6)
    assert cert.alpha_bar[:, t] @ b.omega_bar[:, t] == pytest.approx(
        cert.nu * D * norm(b.omega_bar[:, t], star), abs=1e-6)
    assert cert.theta[:, t] @ b.tau[:, t] == pytest.approx(cert.lam[t] * G * norm(b.tau[:, t], star), abs=1e-6)
    for i in range(inst.n_gen):
        assert cert.beta[i, :, t] @ b.psi[i, :, t] == pytest.approx(
            cert.sigma[i, t] * G * norm(b.psi[i, :, t], star), abs=1e-6)
        assert cert.gamma[i, :, t] @ b.phi[i, :, t] == pytest.approx(
            cert.zeta[i, t] * G * norm(b.phi[i, :, t], star), abs=1e-6)


def test_column_sums(theorem_suite):
    for inst, sol, _ in theorem_suite:
        for t in range(inst.periods):
            if inst.uncertainty.gamma_q[t] > 0:
                assert sol.policy.V[:, :, t].sum(axis=0) == pytest.approx(1.0, abs=1e-6)
            if inst.uncertainty.delta_p[t] > 0:
                assert sol.policy.Z[:, :, t].sum(axis=0) == pytest.approx(0.0, abs=1e-6)
            assert sol.policy.u[:, t].sum() == pytest.approx(inst.total_load(t), abs=1e-6)


def test_bundle_follows_policy(scarf_cap):
    inst, sol, _ = scarf_cap
    b = RobustConstraintBundle.from_solution(sol, inst)
    C = np.array([g.energy_cost for g in inst.generators])
    assert b.omega == pytest.approx(np.einsum("i,ijt->jt", C, sol.policy.V))
    assert b.tau == pytest.approx(1.0 - sol.policy.V.sum(axis=0))
    assert b.phi_bar == pytest.approx(sol.policy.Z)


def test_policy_survives_sampled_realizations(theorem_suite, chen):
    for inst, sol, _ in theorem_suite[:12] + [chen]:
        assert sample_feasibility(sol, inst, samples=300) <= 1e-6


def test_robust_cost_dominates_deterministic(theorem_suite, chen):
    for inst, sol, _ in theorem_suite + [chen]:
        assert sol.objective >= deterministic_uc(inst).objective - 1e-6


def test_zero_budgets_reduce_to_deterministic(random_suite):
    for inst, _, _ in random_suite[:15]:
        det = inst.deterministic()
        assert solve_aro(det)[0].objective == pytest.approx(deterministic_uc(det).objective, abs=1e-6)


def test_monotone_in_load_budget():
    base = builtin_instance("scarf")
    vals = [solve_aro(base.with_uncertainty(gamma_q=g))[0].objective for g in np.linspace(0, 20, 5)]
    assert vals[0] == pytest.approx(260.0)
    assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))


def test_monotone_in_capacity_budget():
    base = builtin_instance("scarf-capacity")
    top = max(base.uncertainty.delta_p)
    vals = [solve_aro(base.with_uncertainty(delta_p=d))[0].objective for d in np.linspace(0, top, 5)]
    assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))


def test_two_norm_single_unit():
    sol, cert = ellipsoidal_outer_solve(single_unit())
    assert sol.objective == pytest.approx(12.0, abs=1e-6)
    assert sol.approximate and cert.approximate


def test_two_norm_with_zero_budget_is_deterministic():
    sol, _ = ellipsoidal_outer_solve(builtin_instance("scarf").with_uncertainty(norm_order="L2", gamma_q=0.0))
    assert sol.objective == pytest.approx(260.0, abs=1e-6)


def test_two_norm_scarf_against_dense_sampling():
    inst = builtin_instance("scarf").with_uncertainty(norm_order="L2", gamma_q=15.0)
    sol, _ = ellipsoidal_outer_solve(inst)
    C = np.array([g.energy_cost for g in inst.generators])
    omega = C @ sol.policy.V[:, :, 0]
    nominal = sol.commitment_cost + C @ sol.policy.u[:, 0]
    # The reported value is the worst case of its own policy, up to the solve tolerance.
    assert sol.objective == pytest.approx(nominal + 15.0 * norm(omega, "L2"), rel=1e-6)
    rng = np.random.default_rng(0)
    g = rng.standard_normal((100_000, 5))
    d = 15.0 * g / np.linalg.norm(g, axis=1, keepdims=True)
    sampled = nominal + (d @ omega).max()
    assert sampled <= sol.objective + 1e-9
    assert sampled >= sol.objective - 0.5
    assert sample_feasibility(sol, inst, samples=2000) <= 1e-6


def test_two_norm_budget_beyond_fleet_is_infeasible():
    # Residual sums in the ball reach 20 * sqrt(5) in magnitude, more than the fleet can follow.
    with pytest.raises(InfeasibleError):
        ellipsoidal_outer_solve(builtin_instance("scarf").with_uncertainty(norm_order="L2"))


def test_two_norm_rejected_by_exact_builders():
    inst = builtin_instance("scarf").with_uncertainty(norm_order="L2")
    with pytest.raises(UnsupportedNormError):
        build_robust_primal(inst)
    with pytest.raises(UnsupportedNormError):
        build_robust_dual(inst, np.ones((8, 1)))


def test_bad_tolerance():
    with pytest.raises(ValueError):
        ellipsoidal_outer_solve(single_unit(), tol=0)
