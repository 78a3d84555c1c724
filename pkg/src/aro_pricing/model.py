"""Unit-commitment instances: generators, demand nodes, uncertainty budgets.

Instances are frozen dataclasses.  ``load_instance`` parses the JSON instance
document and ``dump_instance`` writes it back; both go through the same
validation so a round trip always yields an equal instance.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import LookupFailure, SchemaError, ValidationError
from .norms import NormOrder, norm


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    commit_cost: float
    energy_cost: float
    cap_max: float
    cap_min: float = 0.0
    no_load_cost: float = 0.0
    startup_cost: float = 0.0
    # None means the rate is unconstrained.
    ramp_rate: Optional[float] = None
    startup_rate: Optional[float] = None
    shutdown_rate: Optional[float] = None
    min_up: int = 0
    min_down: int = 0
    initial_on: bool = False
    initial_output: float = 0.0

    @property
    def needs_transitions(self):
        """Whether start-up/shut-down indicators are modelled for this unit."""
        return (
            self.startup_cost > 0
            or self.ramp_rate is not None
            or self.min_up > 1
            or self.min_down > 1
        )


@dataclass(frozen=True)
class DemandNode:
    id: str
    expected_load: tuple


@dataclass(frozen=True)
class UncertaintySpec:
    norm_order: NormOrder
    gamma_q: tuple
    delta_p: tuple


@dataclass(frozen=True)
class UCInstance:
    generators: tuple
    demand_nodes: tuple
    periods: int
    uncertainty: UncertaintySpec
    name: str = ""

    def __post_init__(self):
        validate_instance(self)

    @property
    def n_gen(self):
        return len(self.generators)

    @property
    def n_node(self):
        return len(self.demand_nodes)

    def total_load(self, t):
        return float(sum(node.expected_load[t] for node in self.demand_nodes))

    def loads(self):
        """Expected load as an array of shape (nodes, periods)."""
        return np.array([node.expected_load for node in self.demand_nodes], dtype=float)

    def gen_index(self, gen_id):
        for i, g in enumerate(self.generators):
            if g.id == gen_id:
                return i
        raise LookupFailure(f"no generator {gen_id!r}")

    def with_uncertainty(self, norm_order=None, gamma_q=None, delta_p=None):
        """Copy with some uncertainty fields replaced; scalars broadcast over periods."""
        unc = self.uncertainty
        new = UncertaintySpec(
            norm_order=NormOrder.parse(norm_order) if norm_order is not None else unc.norm_order,
            gamma_q=_per_period(gamma_q, self.periods, "gamma_q") if gamma_q is not None else unc.gamma_q,
            delta_p=_per_period(delta_p, self.periods, "delta_p") if delta_p is not None else unc.delta_p,
        )
        return dataclasses.replace(self, uncertainty=new)

    def deterministic(self):
        return self.with_uncertainty(gamma_q=0.0, delta_p=0.0)


@dataclass(frozen=True)
class RealizationVector:
    """Residual load ``d`` (nodes x periods) and residual capacity ``r`` (gens x periods)."""

    load_residual: np.ndarray
    capacity_residual: np.ndarray

    def in_sets(self, inst, tol=1e-9):
        unc = inst.uncertainty
        for t in range(inst.periods):
            if norm(self.load_residual[:, t], unc.norm_order) > unc.gamma_q[t] + tol:
                return False
            if norm(self.capacity_residual[:, t], unc.norm_order) > unc.delta_p[t] + tol:
                return False
        return True


def _per_period(value, periods, name):
    if np.isscalar(value):
        return (float(value),) * periods
    vals = tuple(float(v) for v in value)
    if len(vals) == 1 and periods > 1:
        return vals * periods
    if len(vals) != periods:
        raise ValidationError("period-dimension", f"{name} has {len(vals)} entries, expected {periods}")
    return vals


def validate_instance(inst):
    if inst.periods < 1:
        raise ValidationError("periods", "need at least one period")
    if not inst.generators:
        raise ValidationError("generators", "need at least one generator")
    if not inst.demand_nodes:
        raise ValidationError("demand_nodes", "need at least one demand node")
    ids = [g.id for g in inst.generators]
    if len(set(ids)) != len(ids):
        raise ValidationError("generator-id", "generator ids must be unique")
    for g in inst.generators:
        for name in ("commit_cost", "energy_cost", "no_load_cost", "startup_cost"):
            v = getattr(g, name)
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"{name}>=0", f"generator {g.id}: {name}={v}")
        if not (0 <= g.cap_min <= g.cap_max) or not math.isfinite(g.cap_max):
            raise ValidationError("0<=cap_min<=cap_max", f"generator {g.id}: cap_min={g.cap_min}, cap_max={g.cap_max}")
        for name in ("ramp_rate", "startup_rate", "shutdown_rate"):
            v = getattr(g, name)
            if v is not None and v < 0:
                raise ValidationError("rates>=0", f"generator {g.id}: {name}={v}")
        if g.min_up < 0 or g.min_down < 0:
            raise ValidationError("rates>=0", f"generator {g.id}: negative min up/down time")
        if not (0 <= g.initial_output <= g.cap_max):
            raise ValidationError("initial_output", f"generator {g.id}: initial_output outside [0, cap_max]")
        if g.initial_output > 0 and not g.initial_on:
            raise ValidationError("initial_output", f"generator {g.id}: output without initial_on")
    for node in inst.demand_nodes:
        if len(node.expected_load) != inst.periods:
            raise ValidationError("period-dimension", f"node {node.id}: {len(node.expected_load)} loads for {inst.periods} periods")
        if any(q < 0 or not math.isfinite(q) for q in node.expected_load):
            raise ValidationError("expected_load>=0", f"node {node.id}")
    unc = inst.uncertainty
    for name in ("gamma_q", "delta_p"):
        vals = getattr(unc, name)
        if len(vals) != inst.periods:
            raise ValidationError("period-dimension", f"{name} has {len(vals)} entries, expected {inst.periods}")
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise ValidationError(f"{name}>=0", f"{name}={vals}")


# -- documents -------------------------------------------------------------

_GEN_FIELDS = {f.name: f for f in dataclasses.fields(GeneratorSpec)}
_REQUIRED_GEN = ("id", "commit_cost", "energy_cost", "cap_max")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(where, f"expected a number, got {value!r}")
    return float(value)


def _parse_generator(rec, k):
    where = f"generators[{k}]"
    if not isinstance(rec, dict):
        raise SchemaError(where, "expected an object")
    unknown = set(rec) - set(_GEN_FIELDS)
    if unknown:
        raise SchemaError(f"{where}.{sorted(unknown)[0]}", "unknown field")
    for name in _REQUIRED_GEN:
        if name not in rec:
            raise SchemaError(f"{where}.{name}", "missing required field")
    kwargs = {"id": str(rec["id"])}
    for name, value in rec.items():
        if name == "id":
            continue
        w = f"{where}.{name}"
        if name in ("ramp_rate", "startup_rate", "shutdown_rate"):
            kwargs[name] = None if value is None else _number(value, w)
        elif name in ("min_up", "min_down"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(w, f"expected an integer, got {value!r}")
            kwargs[name] = value
        elif name == "initial_on":
            if not isinstance(value, bool):
                raise SchemaError(w, f"expected a boolean, got {value!r}")
            kwargs[name] = value
        else:
            kwargs[name] = _number(value, w)
    return GeneratorSpec(**kwargs)


def _parse_node(rec, k):
    where = f"demand_nodes[{k}]"
    if not isinstance(rec, dict):
        raise SchemaError(where, "expected an object")
    for name in ("id", "expected_load"):
        if name not in rec:
            raise SchemaError(f"{where}.{name}", "missing required field")
    load = rec["expected_load"]
    if not isinstance(load, list):
        load = [load]
    return DemandNode(str(rec["id"]), tuple(_number(q, f"{where}.expected_load") for q in load))


def instance_from_dict(doc):
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected an object")
    for key in ("generators", "demand_nodes", "periods", "uncertainty"):
        if key not in doc:
            raise SchemaError(key, "missing required key")
    if not isinstance(doc["generators"], list):
        raise SchemaError("generators", "expected an array")
    if not isinstance(doc["demand_nodes"], list):
        raise SchemaError("demand_nodes", "expected an array")
    periods = doc["periods"]
    if isinstance(periods, bool) or not isinstance(periods, int):
        raise SchemaError("periods", f"expected an integer, got {periods!r}")
    unc = doc["uncertainty"]
    if not isinstance(unc, dict):
        raise SchemaError("uncertainty", "expected an object")
    for key in ("norm", "gamma_q", "delta_p"):
        if key not in unc:
            raise SchemaError(f"uncertainty.{key}", "missing required key")
    try:
        order = NormOrder.parse(unc["norm"])
    except ValueError:
        raise SchemaError("uncertainty.norm", f"expected L1, L2 or Linf, got {unc['norm']!r}") from None
    budgets = {}
    for key in ("gamma_q", "delta_p"):
        raw = unc[key] if isinstance(unc[key], list) else [unc[key]]
        budgets[key] = tuple(_number(v, f"uncertainty.{key}") for v in raw)
    return UCInstance(
        generators=tuple(_parse_generator(rec, k) for k, rec in enumerate(doc["generators"])),
        demand_nodes=tuple(_parse_node(rec, k) for k, rec in enumerate(doc["demand_nodes"])),
        periods=periods,
        uncertainty=UncertaintySpec(order, budgets["gamma_q"], budgets["delta_p"]),
        name=str(doc.get("name", "")),
    )


def load_instance(document):
    """Parse an instance from JSON text, a path to a JSON file, or an already-decoded dict."""
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("<document>", f"invalid JSON: {exc}") from None
    return instance_from_dict(document)


def instance_to_dict(inst):
    gens = []
    for g in inst.generators:
        rec = {}
        for name, f in _GEN_FIELDS.items():
            value = getattr(g, name)
            if name in _REQUIRED_GEN or value != f.default:
                rec[name] = value
        gens.append(rec)
    return {
        "name": inst.name,
        "periods": inst.periods,
        "generators": gens,
        "demand_nodes": [{"id": n.id, "expected_load": list(n.expected_load)} for n in inst.demand_nodes],
        "uncertainty": {
            "norm": inst.uncertainty.norm_order.value,
            "gamma_q": list(inst.uncertainty.gamma_q),
            "delta_p": list(inst.uncertainty.delta_p),
        },
    }


def dump_instance(inst, indent=2):
    return json.dumps(instance_to_dict(inst), indent=indent)


# -- builtin instances -----------------------------------------------------

def _scarf(gamma_q, delta_p, name):
    gens = [GeneratorSpec(f"T1-{k}", 53.0, 3.0, 16.0) for k in (1, 2)]
    gens += [GeneratorSpec(f"T2-{k}", 30.0, 2.0, 7.0) for k in range(1, 7)]
    nodes = [DemandNode(f"C{j + 1}", (q,)) for j, q in enumerate([8.0, 8.0, 3.0, 5.0, 16.0])]
    return UCInstance(tuple(gens), tuple(nodes), 1, UncertaintySpec(NormOrder.ONE, (gamma_q,), (delta_p,)), name)


def _chen():
    g1 = GeneratorSpec("G1", commit_cost=0.0, energy_cost=10.0, cap_max=100.0, initial_on=True)
    g2 = GeneratorSpec(
        "G2", commit_cost=0.0, energy_cost=50.0, cap_max=35.0, cap_min=20.0,
        no_load_cost=30.0, startup_cost=1000.0, ramp_rate=5.0, startup_rate=22.5,
        shutdown_rate=35.0, min_up=1, min_down=1, initial_on=False,
    )
    totals = [95.0, 100.0, 130.0]
    nodes = [DemandNode(f"C{j + 1}", tuple(q / 3.0 for q in totals)) for j in range(3)]
    unc = UncertaintySpec(NormOrder.ONE, (10.0, 10.0, 2.0), (0.0, 7.5, 0.5))
    return UCInstance((g1, g2), tuple(nodes), 3, unc, "chen-multiperiod")


_BUILTINS = {
    "scarf": lambda: _scarf(20.0, 0.0, "scarf"),
    "scarf-capacity": lambda: _scarf(20.0, 0.5, "scarf-capacity"),
    "chen-multiperiod": _chen,
}


def builtin_names():
    return sorted(_BUILTINS)


def builtin_instance(name):
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise LookupFailure(f"unknown builtin instance {name!r}; choose from {builtin_names()}") from None
