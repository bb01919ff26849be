"""MILP layer tests: hand oracles, cross-backend agreement, LP round trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cies_dispatch.milp import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    BranchBoundBackend,
    HighsBackend,
    InfeasibleError,
    MilpModel,
    diagnose_infeasibility,
    import_lp,
    solve,
)


def tiny_lp():
    m = MilpModel("tiny")
    x = m.add_var("x", lb=0.0)
    m.add_constr("floor", {x: 1.0}, ">=", 3.0)
    m.set_objective({x: 1.0})
    return m


def knapsack():
    # max 6a + 5b + 4c s.t. 5a + 4b + 3c <= 8  ->  hand optimum: b + c (9, wt 7).
    m = MilpModel("knapsack")
    a = m.add_binary("a")
    b = m.add_binary("b")
    c = m.add_binary("c")
    m.add_constr("weight", {a: 5.0, b: 4.0, c: 3.0}, "<=", 8.0)
    m.set_objective({a: -6.0, b: -5.0, c: -4.0})
    return m


def test_trivial_lp_optimum():
    sol = solve(tiny_lp())
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0, abs=1e-9)
    assert sol["x"] == pytest.approx(3.0, abs=1e-9)


def test_knapsack_hand_enumeration():
    # Oracle: enumerate all 8 assignments.
    best = min(
        -6 * a - 5 * b - 4 * c
        for a in (0, 1)
        for b in (0, 1)
        for c in (0, 1)
        if 5 * a + 4 * b + 3 * c <= 8
    )
    for backend in (HighsBackend(), BranchBoundBackend()):
        sol = solve(knapsack(), backend=backend)
        assert sol.objective == pytest.approx(best, abs=1e-9)


def test_infeasible_raises():
    m = MilpModel("broken")
    x = m.add_var("x", lb=0.0, ub=1.0)
    m.add_constr("too_high", {x: 1.0}, ">=", 2.0)
    m.set_objective({x: 1.0})
    with pytest.raises(InfeasibleError):
        solve(m)
    with pytest.raises(InfeasibleError):
        solve(m, backend=BranchBoundBackend())


def test_diagnose_reports_offending_row():
    m = MilpModel("broken")
    x = m.add_var("x", lb=0.0, ub=1.0)
    m.add_constr("fine", {x: 1.0}, "<=", 5.0)
    m.add_constr("too_high", {x: 1.0}, ">=", 2.0)
    m.set_objective({x: 1.0})
    assert diagnose_infeasibility(m) == ["too_high"]


def test_objective_constant_carried():
    m = tiny_lp()
    m.set_objective({0: 1.0}, constant=7.5)
    assert solve(m).objective == pytest.approx(10.5, abs=1e-9)


def test_row_scaling_preserves_solution():
    m = MilpModel("scaled")
    x = m.add_var("x", lb=0.0)
    m.add_constr("big", {x: 4e8}, ">=", 1.2e9)
    m.set_objective({x: 1.0})
    assert solve(m)["x"] == pytest.approx(3.0, abs=1e-7)


def test_integer_kind():
    m = MilpModel("int")
    n = m.add_var("n", lb=0.0, ub=9.0, kind=INTEGER)
    m.add_constr("cover", {n: 2.5}, ">=", 7.0)
    m.set_objective({n: 1.0})
    assert solve(m)["n"] == pytest.approx(3.0, abs=1e-9)


def test_solution_feasibility_audit():
    m = knapsack()
    sol = solve(m)
    x = np.array([sol[v] for v in m.var_names])
    assert m.max_violation(x) <= 1e-6


def test_duplicate_name_rejected():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(ValueError):
        m.add_var("x")


# ---------------------------------------------------------------- LP text


def test_export_two_var_text():
    m = MilpModel("two")
    x = m.add_var("x", lb=0.0, ub=4.0)
    y = m.add_binary("y")
    m.add_constr("link", {x: 1.0, y: -2.0}, "<=", 1.0)
    m.set_objective({x: 3.0, y: -1.0})
    text = m.export_lp()
    assert "Minimize" in text and "Subject To" in text and "End" in text
    assert "link: 1 x - 2 y <= 1" in text
    assert "Binaries" in text and " y" in text


def test_export_deterministic():
    a, b = knapsack().export_lp(), knapsack().export_lp()
    assert a == b


def _random_model(rng):
    m = MilpModel("rand")
    n_vars = rng.integers(2, 6)
    kinds = [CONTINUOUS, BINARY, INTEGER]
    for i in range(n_vars):
        kind = kinds[rng.integers(0, 3)]
        ub = float(rng.integers(1, 10))
        m.add_var(f"v{i}", 0.0, 1.0 if kind == BINARY else ub, kind)
    for r in range(rng.integers(1, 5)):
        cols = rng.choice(n_vars, size=rng.integers(1, n_vars + 1), replace=False)
        coefs = {int(i): float(rng.integers(-5, 6)) or 1.0 for i in cols}
        sense = ["<=", ">=", "="][rng.integers(0, 3)]
        m.add_constr(f"r{r}", coefs, sense, float(rng.integers(-4, 12)))
    m.set_objective(
        {i: float(rng.integers(-5, 6)) for i in range(n_vars)},
        constant=float(rng.integers(0, 4)),
    )
    return m


def test_lp_round_trip_reproduces_model():
    rng = np.random.default_rng(7)
    for _ in range(3):
        m = _random_model(rng)
        back = import_lp(m.export_lp())
        assert back.var_names == [n for n in m.var_names]
        assert back.var_kind == m.var_kind
        assert back.var_lb == pytest.approx(m.var_lb)
        assert back.var_ub == m.var_ub
        assert back.obj_const == pytest.approx(m.obj_const)
        assert len(back.rows) == len(m.rows)
        for (na, ra, sa, ba), (nb, rb, sb, bb) in zip(m.rows, back.rows):
            assert sa == sb and ba == pytest.approx(bb)
            assert ra == pytest.approx(rb)
        # And the round-tripped model solves to the same value when feasible.
        try:
            v1 = solve(m).objective
        except InfeasibleError:
            with pytest.raises(InfeasibleError):
                solve(back)
            continue
        assert solve(back).objective == pytest.approx(v1, abs=1e-7)


# ---------------------------------------------------------------- backends


@given(st.integers(min_value=0, max_value=2**20))
@settings(max_examples=25, deadline=None)
def test_backends_agree_on_random_models(seed):
    rng = np.random.default_rng(seed)
    m = _random_model(rng)
    try:
        a = solve(m, backend=HighsBackend())
    except InfeasibleError:
        with pytest.raises(InfeasibleError):
            solve(m, backend=BranchBoundBackend())
        return
    b = solve(m, backend=BranchBoundBackend())
    assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_branch_bound_refuses_large_models():
    m = MilpModel("big")
    for i in range(26):
        m.add_binary(f"b{i}")
    m.set_objective({0: 1.0})
    with pytest.raises(ValueError):
        solve(m, backend=BranchBoundBackend())
