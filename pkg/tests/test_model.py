import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aro_pricing.errors import LookupFailure, SchemaError, ValidationError
from aro_pricing.model import (GeneratorSpec, RealizationVector, builtin_instance, builtin_names, dump_instance,
                               instance_to_dict, load_instance)
from aro_pricing.norms import NormOrder


def doc(**over):
    d = {
        "name": "tiny",
        "periods": 1,
        "generators": [{"id": "A", "commit_cost": 5, "energy_cost": 2, "cap_max": 10}],
        "demand_nodes": [{"id": "N", "expected_load": [4]}],
        "uncertainty": {"norm": "L1", "gamma_q": [1], "delta_p": [0]},
    }
    d.update(over)
    return d


def test_builtins():
    assert builtin_names() == ["chen-multiperiod", "scarf", "scarf-capacity"]
    s = builtin_instance("scarf")
    assert (s.n_gen, s.n_node, s.periods) == (8, 5, 1)
    assert s.total_load(0) == 40.0
    assert s.uncertainty.gamma_q == (20.0,)
    c = builtin_instance("chen-multiperiod")
    assert [c.total_load(t) for t in range(3)] == pytest.approx([95, 100, 130])
    with pytest.raises(LookupFailure):
        builtin_instance("nope")


def test_round_trip_builtins():
    for name in builtin_names():
        inst = builtin_instance(name)
        assert load_instance(dump_instance(inst)) == inst


def test_load_from_path(tmp_path):
    p = tmp_path / "i.json"
    p.write_text(json.dumps(doc()))
    from pathlib import Path
    assert load_instance(Path(p)).name == "tiny"


def test_scalar_budget_accepted():
    unc = {"norm": "Linf", "gamma_q": 2, "delta_p": 0}
    inst = load_instance(doc(uncertainty=unc))
    assert inst.uncertainty.norm_order is NormOrder.INF
    assert inst.uncertainty.gamma_q == (2.0,)


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d.pop("generators"), "generators"),
    (lambda d: d.update(periods="3"), "periods"),
    (lambda d: d.update(generators={}), "generators"),
    (lambda d: d["generators"][0].pop("cap_max"), "generators[0].cap_max"),
    (lambda d: d["generators"][0].update(energy_cost="cheap"), "generators[0].energy_cost"),
    (lambda d: d["generators"][0].update(colour="red"), "generators[0].colour"),
    (lambda d: d["generators"][0].update(min_up=1.5), "generators[0].min_up"),
    (lambda d: d["generators"][0].update(initial_on="yes"), "generators[0].initial_on"),
    (lambda d: d["demand_nodes"][0].pop("expected_load"), "demand_nodes[0].expected_load"),
    (lambda d: d["uncertainty"].pop("delta_p"), "uncertainty.delta_p"),
    (lambda d: d["uncertainty"].update(norm="L3"), "uncertainty.norm"),
])
def test_schema_errors_name_the_field(mutate, field):
    d = doc()
    mutate(d)
    with pytest.raises(SchemaError) as exc:
        load_instance(d)
    assert exc.value.field == field


def test_invalid_json_text():
    with pytest.raises(SchemaError):
        load_instance("{not json")


@pytest.mark.parametrize("mutate,rule", [
    (lambda d: d.update(periods=0), "periods"),
    (lambda d: d.update(generators=[]), "generators"),
    (lambda d: d["generators"].append(dict(d["generators"][0])), "generator-id"),
    (lambda d: d["generators"][0].update(energy_cost=-1), "energy_cost>=0"),
    (lambda d: d["generators"][0].update(cap_min=20), "0<=cap_min<=cap_max"),
    (lambda d: d["generators"][0].update(ramp_rate=-1), "rates>=0"),
    (lambda d: d["generators"][0].update(initial_output=3), "initial_output"),
    (lambda d: d["demand_nodes"][0].update(expected_load=[1, 2]), "period-dimension"),
    (lambda d: d["demand_nodes"][0].update(expected_load=[-1]), "expected_load>=0"),
    (lambda d: d["uncertainty"].update(gamma_q=[-1]), "gamma_q>=0"),
    (lambda d: d["uncertainty"].update(delta_p=[1, 1]), "period-dimension"),
])
def test_validation_rules(mutate, rule):
    d = doc()
    mutate(d)
    with pytest.raises(ValidationError) as exc:
        load_instance(d)
    assert exc.value.rule == rule


def test_with_uncertainty_broadcasts_and_checks_length():
    c = builtin_instance("chen-multiperiod")
    assert c.with_uncertainty(gamma_q=4.0).uncertainty.gamma_q == (4.0, 4.0, 4.0)
    assert c.deterministic().uncertainty.delta_p == (0.0, 0.0, 0.0)
    with pytest.raises(ValidationError):
        c.with_uncertainty(gamma_q=(1.0, 2.0))
    assert c.with_uncertainty(norm_order="L2").uncertainty.norm_order is NormOrder.TWO


def test_gen_index():
    s = builtin_instance("scarf")
    assert s.gen_index("T2-1") == 2
    with pytest.raises(LookupFailure):
        s.gen_index("X")


def test_transitions_flag():
    assert not GeneratorSpec("a", 1, 1, 1).needs_transitions
    assert GeneratorSpec("a", 1, 1, 1, startup_cost=5).needs_transitions
    assert GeneratorSpec("a", 1, 1, 1, min_up=2).needs_transitions


def test_realization_membership():
    s = builtin_instance("scarf")
    d = np.zeros((5, 1))
    d[0, 0] = 20.0
    assert RealizationVector(d, np.zeros((8, 1))).in_sets(s)
    d[1, 0] = 0.1
    assert not RealizationVector(d, np.zeros((8, 1))).in_sets(s)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=1, max_size=4),
       st.sampled_from(["L1", "L2", "Linf"]), st.floats(0, 10))
def test_round_trip_property(loads, order, gamma):
    d = doc(periods=len(loads))
    d["demand_nodes"][0]["expected_load"] = loads
    d["uncertainty"] = {"norm": order, "gamma_q": [gamma] * len(loads), "delta_p": [0.0] * len(loads)}
    inst = load_instance(d)
    again = load_instance(instance_to_dict(inst))
    assert again == inst
