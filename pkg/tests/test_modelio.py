import json

import numpy as np
import pytest

from gaussprog import modelio
from gaussprog.approx_bridge import GplpProblem
from gaussprog.gp_solver import GpProblem
from gaussprog.lp_solver import LpProblem
from gaussprog.modelio import ModelFileError, dump_model, parse_model, read_model_file

from conftest import SEC4_A, SEC4_R


def doc(**over):
    base = json.loads(modelio.builtin_path("independent_pair").read_text(encoding="utf-8"))
    base.update(over)
    return base


def parse(d):
    return parse_model(json.dumps(d), "test.json")


def test_sec4_fixture_loads_worked_data():
    mf = read_model_file("example_sec4")
    p = mf.problem
    assert isinstance(p, GpProblem)
    assert p.dimension == 4
    c1, c2 = p.model.independents
    assert (c1.m, c1.sigma, c1.lam) == (30, 10, 5000)
    assert (c2.m, c2.sigma, c2.lam) == (40, 13, 10000)
    (s,) = p.model.sets
    assert s.variable_indices == (2, 3)
    np.testing.assert_array_equal(s.mean, [900, 100])
    np.testing.assert_array_equal(s.sigmas, [300, 30])
    assert s.lam == 200000
    np.testing.assert_array_equal(p.constraint_matrix, SEC4_A)
    np.testing.assert_array_equal(p.resources, SEC4_R)
    assert mf.value_unit == "руб."
    assert [v[0] for v in mf.variables] == ["x1", "x2", "x3", "x4"]


def test_other_fixtures_load():
    assert isinstance(read_model_file("lp_small").problem, LpProblem)
    assert isinstance(read_model_file("independent_pair").problem, GpProblem)


def test_path_and_builtin_agree(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(modelio.builtin_path("example_sec4").read_text(encoding="utf-8"), encoding="utf-8")
    assert dump_model(read_model_file(path)) == dump_model(read_model_file("example_sec4"))


def test_missing_file():
    with pytest.raises(ModelFileError):
        read_model_file("/nonexistent/model.json")


@pytest.mark.parametrize("text", ["", "   \n"])
def test_empty_file_is_parse_error(text):
    with pytest.raises(ModelFileError, match="empty"):
        parse_model(text, "e.json")


def test_syntax_error_reports_location():
    with pytest.raises(ModelFileError) as exc:
        parse_model('{\n  "kind": "gaussian",\n  oops\n}', "bad.json")
    assert "line 3" in str(exc.value)
    assert "bad.json" in str(exc.value)


def test_negative_sigma_names_the_field():
    d = doc()
    d["components"][1]["sigma"] = -4
    with pytest.raises(ModelFileError) as exc:
        parse(d)
    assert exc.value.where == "components[1].sigma"
    assert "components[1].sigma" in str(exc.value)


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d["constraints"][0].update(rhs=-1), "constraints[0].rhs"),
        (lambda d: d["constraints"][1]["coefficients"].__setitem__(0, -2), "constraints[1].coefficients[0]"),
        (lambda d: d["constraints"][0]["coefficients"].pop(), "constraints[0].coefficients"),
        (lambda d: d["components"][0].update(variable="z"), "components[0].variable"),
        (lambda d: d["components"][0].pop("lambda"), "components[0].lambda"),
        (lambda d: d.update(kind="quadratic"), "kind"),
        (lambda d: d.update(format_version="2.0"), "format_version"),
        (lambda d: d["components"][0].update(m="fifteen"), "components[0].m"),
    ],
)
def test_field_addressed_errors(mutate, where):
    d = doc()
    mutate(d)
    with pytest.raises(ModelFileError) as exc:
        parse(d)
    assert exc.value.where == where


def test_uncovered_variable_rejected():
    d = doc()
    d["components"].pop()
    with pytest.raises(ModelFileError) as exc:
        parse(d)
    assert exc.value.where == "components"


def test_gplp_model():
    d = {
        "format_version": "1.0",
        "kind": "gplp",
        "variables": ["x"],
        "ramps": [{"variable": "x", "a": 2, "b": 4, "mass": 10}],
        "constraints": [{"coefficients": [1], "rhs": 3}],
    }
    mf = parse(d)
    assert isinstance(mf.problem, GplpProblem)
    d["ramps"][0]["b"] = 1
    with pytest.raises(ModelFileError) as exc:
        parse(d)
    assert exc.value.where == "ramps[0]"


@pytest.mark.parametrize("name", modelio.BUILTIN)
def test_dump_is_idempotent(name):
    once = dump_model(read_model_file(name))
    twice = dump_model(parse_model(once, "again"))
    assert once == twice


def test_dump_uses_integers_where_exact():
    text = dump_model(read_model_file("example_sec4"))
    assert '"rhs": 49500' in text
    assert "49500.0" not in text
