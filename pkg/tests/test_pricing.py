import csv
import io

import numpy as np
import pytest

from aro_pricing.pricing import (PaymentRow, adaptive_uniform_day_ahead, deterministic_marginal,
                                 pay_as_bid_day_ahead, worst_case_settlement)


def multiset(values, places=6):
    return sorted(round(float(v), places) for v in values)


def test_scarf_marginal_payments():
    from aro_pricing.model import builtin_instance
    table = deterministic_marginal(builtin_instance("scarf"))
    assert table.prices == pytest.approx([2.0])
    assert multiset(table.totals()) == multiset([0, 0, 40, 44, 44, 44, 44, 44])


def test_scarf_pay_as_bid(scarf):
    inst, sol, _ = scarf
    table = pay_as_bid_day_ahead(sol, inst)
    assert multiset(table.totals()) == multiset([77, 96.5, 44, 37, 37, 37, 0, 0])
    assert table.grand_total == pytest.approx(328.5, abs=1e-6)


def test_scarf_uniform_rows(scarf):
    inst, sol, cert = scarf
    table = adaptive_uniform_day_ahead(sol, cert, inst)
    assert table.prices == pytest.approx([3.0])
    assert table.grand_total == pytest.approx(328.5, abs=1e-6)
    # Energy is sold at the uniform price.
    for row, u in zip(table.rows, sol.policy.u[:, 0]):
        assert row.energy == pytest.approx(3.0 * u, abs=1e-6)


def test_chen_deterministic_payments(chen_det):
    inst, sol, _ = chen_det
    assert multiset(pay_as_bid_day_ahead(sol, inst).totals()) == multiset([2500, 4840])
    table = deterministic_marginal(inst)
    assert table.prices == pytest.approx([10, 10, 90])
    assert table.row("G1").total == pytest.approx(2500, abs=1e-6)
    assert table.row("G2").total == pytest.approx(4840, abs=1e-6)


def test_chen_robust_payments(chen):
    inst, sol, cert = chen
    bid = pay_as_bid_day_ahead(sol, inst)
    assert bid.row("G1").total == pytest.approx(2425, abs=1e-6)
    assert bid.row("G2").total == pytest.approx(5215, abs=1e-6)
    assert bid.grand_total == pytest.approx(7640, abs=1e-6)
    uni = adaptive_uniform_day_ahead(sol, cert, inst)
    g1 = uni.row("G1")
    assert g1.uncertainty == pytest.approx(300, abs=1e-6)
    assert g1.uplift == pytest.approx(-12000, abs=1e-6)
    assert g1.uncertainty + g1.uplift == pytest.approx(-11700, abs=1e-6)


def test_worst_case_settlements_agree(theorem_suite, chen):
    for inst, sol, cert in theorem_suite + [chen]:
        f, g = worst_case_settlement(sol, cert, inst)
        assert f.totals() == pytest.approx(g.totals(), abs=1e-6 * max(1, sol.objective))
        assert f.grand_total == pytest.approx(sol.objective, abs=1e-6 * max(1, sol.objective))


def test_scarf_worst_case_total(scarf):
    inst, sol, cert = scarf
    f, _ = worst_case_settlement(sol, cert, inst)
    assert f.grand_total == pytest.approx(378.0, abs=1e-6)


def test_csv_layout(scarf):
    inst, sol, _ = scarf
    text = pay_as_bid_day_ahead(sol, inst).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["scheme", "generator", "commitment", "energy", "uncertainty", "uplift", "total"]
    assert len(rows) == 1 + inst.n_gen
    for r in rows[1:]:
        parts = [float(v) for v in r[2:6]]
        assert float(r[6]) == pytest.approx(sum(parts), abs=1e-5)


def test_row_total_is_sum_of_parts():
    r = PaymentRow("g", 1.5, 2.0, -0.25, 4.0)
    assert r.total == 7.25


def test_uniform_equals_pay_as_bid_per_generator(theorem_suite):
    for inst, sol, cert in theorem_suite:
        a = adaptive_uniform_day_ahead(sol, cert, inst).totals()
        b = pay_as_bid_day_ahead(sol, inst).totals()
        assert np.max(np.abs(a - b)) <= 1e-6 * max(1.0, np.abs(b).max())
