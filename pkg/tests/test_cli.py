import json

import pytest

from aro_pricing.cli import RunConfig, main, parse_config, run
from aro_pricing.model import builtin_instance, dump_instance


def out(capsys, argv):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def scalars(text):
    vals = {}
    for line in text.splitlines():
        if ": " in line:
            k, v = line.split(": ", 1)
            vals[k.strip()] = v.strip()
    return vals


def test_solve_scarf(capsys):
    code, text, _ = out(capsys, ["solve", "--builtin", "scarf", "--gamma-q", "20"])
    assert code == 0
    s = scalars(text)
    assert float(s["objective"]) == pytest.approx(378.0)
    assert float(s["mu[0]"]) == pytest.approx(3.0)
    assert "[V]" in text


def test_price_uniform_total(capsys):
    code, text, _ = out(capsys, ["price", "--builtin", "scarf", "--gamma-q", "20", "--scheme", "uniform",
                                 "--format", "csv"])
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "scheme,generator,commitment,energy,uncertainty,uplift,total"
    body = [l.split(",") for l in lines[1:] if l.startswith("uniform,")]
    assert len(body) == 8
    assert sum(float(r[-1]) for r in body) == pytest.approx(328.5, abs=1e-5)


@pytest.mark.parametrize("scheme", ["payasbid", "marginal", "chull"])
def test_other_schemes_run(capsys, scheme):
    code, text, _ = out(capsys, ["price", "--builtin", "chen-multiperiod", "--scheme", scheme])
    assert code == 0
    assert text.strip()


def test_sweep_csv(capsys):
    code, text, _ = out(capsys, ["sweep", "--builtin", "scarf", "--format", "csv"])
    assert code == 0
    lines = text.strip().splitlines()
    assert "total_residual_mw,lp_cost,adaptive_bound,marginal_price" in lines
    assert "10.000000,20.000000,24.750000,2.000000" in lines
    assert "20.000000,49.500000,49.500000,3.000000" in lines


def test_verify_scarf_exits_zero(capsys):
    code, text, _ = out(capsys, ["verify", "--builtin", "scarf"])
    assert code == 0
    assert "FAIL" not in text


def test_verify_scarf_capacity(capsys):
    code, text, _ = out(capsys, ["verify", "--builtin", "scarf-capacity", "--gamma-q", "20", "--delta-p", "0.5"])
    assert code == 0
    assert "FAIL" not in text


def test_compare_chen(capsys):
    code, text, _ = out(capsys, ["compare", "--builtin", "chen-multiperiod"])
    assert code == 0
    for v in ("7340.000000", "7860.000000", "7640.000000"):
        assert v in text


def test_json_like_is_parseable(capsys):
    code, text, _ = out(capsys, ["solve", "--builtin", "scarf", "--format", "json-like"])
    assert code == 0
    doc = json.loads(text)
    assert isinstance(doc, dict)


def test_infeasible_exit_code(capsys):
    code, _, err = out(capsys, ["solve", "--builtin", "scarf", "--norm", "L2", "--gamma-q", "20"])
    assert code == 2
    assert "infeasible" in err


def test_input_errors(capsys, tmp_path):
    assert main(["solve", "--builtin", "scarf", "--file", "x.json"]) == 1
    assert main(["solve", "--builtin", "chen-multiperiod", "--gamma-q", "1,2"]) == 1
    assert main(["solve", "--file", str(tmp_path / "missing.json")]) == 1
    assert main(["price", "--builtin", "scarf", "--scheme", "nope"]) == 1
    capsys.readouterr()


def test_file_source_and_out(tmp_path, capsys):
    p = tmp_path / "scarf.json"
    p.write_text(dump_instance(builtin_instance("scarf")))
    target = tmp_path / "result.txt"
    assert main(["solve", "--file", str(p), "--out", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert float(scalars(target.read_text())["objective"]) == pytest.approx(378.0)


def test_byte_identical_runs():
    cfg = parse_config(["price", "--builtin", "scarf", "--scheme", "uniform", "--format", "csv", "--seed", "3"])
    a, b = run(cfg), run(cfg)
    assert a.code == b.code == 0
    assert a.text == b.text


def test_config_requires_one_source():
    with pytest.raises(ValueError):
        RunConfig("solve", None, None, None, None, None)
