import itertools
import json
import math

import numpy as np
import pytest

from zeroloss.errors import BudgetExceeded, EmptyMinimaSet, IndexOutOfRange, ParseError, PreconditionError
from zeroloss.finitehyp import (
    FiniteProblem,
    bundled_problem,
    bundled_problem_names,
    dump_problem,
    exact_error,
    exact_report,
    global_minima,
    load_problem,
)

NAMES = bundled_problem_names()


def brute_force(problem, n, eps):
    """Average over every ordered n-tuple, with minima found by scanning rows."""
    p, y, H = problem.probs, problem.labels, problem.hypotheses
    errs = [sum(p[i] for i in range(len(p)) if H[h][i] != y[i]) for h in range(len(H))]
    tot_h = tot_bad = tot_ratio = 0.0
    for tup in itertools.product(range(len(p)), repeat=n):
        w = math.prod(p[i] for i in tup)
        fits = [h for h in range(len(H)) if all(H[h][i] == y[i] for i in tup)]
        bad = [h for h in fits if errs[h] >= eps]
        tot_h += w * len(fits)
        tot_bad += w * len(bad)
        tot_ratio += w * len(bad) / len(fits)
    return tot_h, tot_bad, tot_ratio


def demo():
    return FiniteProblem(
        np.array([0.5, 0.25, 0.25]),
        np.array([0, 1, 1]),
        np.array([[0, 1, 1], [1, 0, 0], [0, 0, 1], [0, 1, 0], [1, 1, 1], [0, 0, 0]]),
    )


def test_bundled_problems_present():
    assert len(NAMES) >= 5
    for name in NAMES:
        prob = bundled_problem(name)
        assert prob.m <= 6 and prob.hypotheses.shape[0] <= 64


def test_exact_error_examples():
    prob = demo()
    assert exact_error(prob, 0) == 0.0
    assert exact_error(prob, 1) == 1.0
    assert exact_error(prob, 3) == 0.25
    with pytest.raises(IndexOutOfRange):
        exact_error(prob, 6)


def test_global_minima():
    prob = demo()
    assert global_minima(prob, {0, 1, 2}) == {0}
    with pytest.raises(PreconditionError):
        global_minima(prob, set())
    with pytest.raises(IndexOutOfRange):
        global_minima(prob, {5})


def test_global_minima_brute_force_binary4():
    prob = bundled_problem("binary4")
    for r in range(1, prob.m + 1):
        for support in itertools.combinations(range(prob.m), r):
            expected = {
                h for h, row in enumerate(prob.hypotheses) if all(row[i] == prob.labels[i] for i in support)
            }
            assert global_minima(prob, support) == expected


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_matches_brute_force(name, n):
    prob = bundled_problem(name)
    eps = 0.3
    tot_h, tot_bad, tot_ratio = brute_force(prob, n, eps)
    for mode in ("support", "exhaustive"):
        rep = exact_report(prob, n, eps, mode)
        assert rep.mean_minima_count == pytest.approx(tot_h, abs=1e-12)
        assert rep.mean_bad_count == pytest.approx(tot_bad, abs=1e-12)
        assert rep.lhs_mean_ratio == pytest.approx(tot_ratio, abs=1e-12)


def test_modes_agree_demo():
    a = exact_report(demo(), 2, 0.3, "exhaustive").to_dict()
    b = exact_report(demo(), 2, 0.3, "support").to_dict()
    for k, v in a.items():
        if k != "mode":
            assert v == pytest.approx(b[k], abs=1e-12)
    assert a["mean_bad_count"] == pytest.approx(a["formula_bad_count"], abs=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_identities(name):
    prob = bundled_problem(name)
    top = 5 if name == "overparam6" else 6
    for n in range(1, top + 1):
        for eps in (0.1, 0.25, 0.5):
            rep = exact_report(prob, n, eps)
            assert abs(rep.mean_bad_count - rep.formula_bad_count) < 1e-10
            gap = rep.rhs_ratio_of_means - rep.lhs_mean_ratio
            assert abs(gap - rep.covariance_term / rep.mean_minima_count) < 1e-10


def test_eps_extremes():
    prob = demo()
    assert exact_report(prob, 3, 0.0).lhs_mean_ratio == pytest.approx(1.0)
    rep = exact_report(prob, 3, 1.01)
    assert rep.lhs_mean_ratio == 0 and rep.formula_bad_count == 0


@pytest.mark.parametrize("name", ["demo3", "binary4", "binary5", "ternary6"])
def test_ratio_non_increasing_in_n(name):
    prob = bundled_problem(name)
    assert prob.e_min == 0
    vals = [exact_report(prob, n, 0.2).lhs_mean_ratio for n in range(1, 7)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_empty_minima_set():
    prob = bundled_problem("overparam6")
    with pytest.raises(EmptyMinimaSet):
        exact_report(prob, 6, 0.2)
    rep = exact_report(prob, 6, 0.2, condition_nonempty=True)
    assert 0 < rep.conditioning_probability < 1


def test_budget():
    m = 21
    prob = FiniteProblem(np.full(m, 1 / m), np.zeros(m, int), np.zeros((1, m), int))
    with pytest.raises(BudgetExceeded):
        exact_report(prob, 2, 0.1, "support")
    with pytest.raises(BudgetExceeded):
        exact_report(prob, 6, 0.1, "exhaustive")


@pytest.mark.parametrize(
    "probs", [[0.5, 0.5, 0.0], [0.5, 0.6], [0.5, 0.5 + 1e-9]]
)
def test_probability_validation(probs):
    k = len(probs)
    with pytest.raises(PreconditionError):
        FiniteProblem(np.array(probs), np.zeros(k, int), np.zeros((1, k), int))


def test_load_dump_round_trip(tmp_path):
    prob = bundled_problem("ternary6")
    path = tmp_path / "p.json"
    path.write_text(json.dumps(dump_problem(prob)))
    back = load_problem(str(path))
    np.testing.assert_array_equal(back.probs, prob.probs)
    np.testing.assert_array_equal(back.hypotheses, prob.hypotheses)


def test_malformed_json():
    with pytest.raises(ParseError):
        load_problem('{"inputs": [')
    with pytest.raises(ParseError):
        load_problem('{"inputs": []}')
