import math
import pathlib

import numpy as np
import pytest

import jacopt

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"


@pytest.fixture
def toy():
    return jacopt.Problem.from_file(str(DATA / "prob.txt"))


def test_parse_fields(toy):
    assert toy.name == "toyprob"
    assert (toy.n, toy.neF, toy.obj_row) == (4, 4, 1)
    assert toy.x0 == [1.0, 1.0, 1.0, 1.0]
    assert toy.variables == ["x1", "x2", "x3", "x4"]


def test_evaluate_and_jacobian(toy):
    x = [0.5, -0.25, 1.5, 2.0]
    s = x[0] + x[1] + x[2]
    expected = [3 * x[0] + s * s + 5 * x[3], 4 * x[1] + 2 * x[2],
                x[0] + x[1] ** 2 + x[2] ** 2, x[1] ** 4 + x[2] ** 4 + x[3]]
    assert np.allclose(toy.evaluate(x), expected, rtol=0, atol=1e-14)
    J = toy.jacobian(x)
    assert J.shape == (4, 4)
    h = 1e-6
    for j in range(4):
        xp, xm = list(x), list(x)
        xp[j] += h
        xm[j] -= h
        fd = (np.array(toy.evaluate(xp)) - np.array(toy.evaluate(xm))) / (2 * h)
        assert np.allclose(J[:, j], fd, atol=1e-6)


def test_structure(toy):
    st = toy.probe_structure()
    assert (st["nnz"], st["constant"], st["nonlinear"], st["zero"]) == (12, 5, 7, 4)
    assert st["linear_rows"] == [1]
    assert st["nonlinear_vars"] == [0, 1, 2]
    constants = {(i, j): v for i, j, kind, v in st["entries"] if kind == "CONSTANT"}
    assert constants == {(0, 3): 5.0, (1, 1): 4.0, (1, 2): 2.0, (2, 0): 1.0, (3, 3): 1.0}


def test_solve_reaches_known_optimum(toy):
    res = toy.solve()
    assert res["exit"] == "optimal"
    assert res["exit_code"] == 0
    assert math.isclose(res["objective"], 1.9, abs_tol=1e-8)
    assert res["violation"] <= 1e-6
    assert res["kkt"] <= 1e-6
    x = res["x"]
    assert x[0] == pytest.approx(0.0, abs=1e-8)
    assert x[3] == pytest.approx(0.02, abs=1e-8)


def test_monitor_protocol(toy):
    statuses = []

    def monitor(status, x):
        statuses.append(status)
        return -2 if len(statuses) == 3 else 0

    res = toy.solve(monitor=monitor)
    assert res["exit"] == "user abort"
    assert statuses.count(1) == 1 and statuses[0] == 1
    assert statuses[-1] == 2 and statuses.count(2) == 1
    assert res["evals"] == 3


def test_feasibility_and_check():
    feas = jacopt.Problem.from_file(str(DATA / "prob_feasibility.txt"))
    assert feas.obj_row == 0
    res = feas.solve()
    assert res["exit"] == "feasible"
    chk = feas.check()
    assert chk["passed_check"] and "exit" not in chk


def test_specs_and_options():
    opts = jacopt.parse_specs("Major iterations limit 1\n")
    assert opts.major_iter_limit == 1
    res = jacopt.solve_file(str(DATA / "prob.txt"), options=opts)
    assert res["exit"] == "iteration limit"
    res = jacopt.solve_file(str(DATA / "prob.txt"), specs=str(DATA / "prob.spc"))
    assert res["exit"] == "optimal"


def test_errors():
    with pytest.raises(jacopt.ParseError, match="line 3"):
        jacopt.Problem.from_text("variables x\nminimize 1\nF 1 = x +\n")
    with pytest.raises(jacopt.IoError):
        jacopt.Problem.from_file(str(DATA / "missing.txt"))
    with pytest.raises(ValueError):
        jacopt.Problem.from_text("variables x\nminimize 1\nF 1 = x\n").evaluate([1.0, 2.0])


def test_text_round_trip(toy):
    again = jacopt.Problem.from_text(toy.to_text())
    assert again.Flow == toy.Flow and again.Fupp == toy.Fupp
    assert again.evaluate([0.1, 0.2, 0.3, 0.4]) == toy.evaluate([0.1, 0.2, 0.3, 0.4])
