import itertools
import math
import random
import sys

import pytest
from hypothesis import given, settings, strategies as st

from cellforge.accel import GapPolicy
from cellforge.model.ir import ConstraintModel, ModelError, model_from_text, model_to_text
from cellforge.solver import SolveRequest, Status, solve, verify
from cellforge.solver.external import ExternalSolverError, format_reply, parse_reply


def run(m, **kw):
    return solve(SolveRequest(m, **kw))


def test_empty_model_is_optimal_zero():
    res = run(ConstraintModel())
    assert res.status == Status.OPTIMAL and res.objective_bound == 0
    assert verify([], ConstraintModel()).ok


def test_single_integer_minimum():
    m = ConstraintModel()
    x = m.new_int("x", 0, 10)
    m.add_linear([(1, x)], lo=3)
    m.minimize([(1, x)])
    res = run(m)
    assert res.status == Status.OPTIMAL and res.assignment == [3] and res.objective_bound == 3


def test_contradiction_is_unsat():
    m = ConstraintModel()
    b = m.new_bool("b")
    m.add_clause([b])
    m.add_clause([~b])
    res = run(m)
    assert res.status == Status.UNSAT and res.assignment is None


def test_verify_flags_single_flip():
    m = ConstraintModel()
    a, b = m.new_bool("a"), m.new_bool("b")
    m.add_clause([a, b])
    m.add_implies([a], b)
    m.minimize([(1, a), (1, b)])
    res = run(m)
    assert verify(res.assignment, m).ok
    bad = list(res.assignment)
    bad[b] = 1 - bad[b]
    rep = verify(bad, m)
    assert not rep.ok and rep.violations


def test_verify_rejects_partial_assignment():
    m = ConstraintModel()
    m.new_bool("a")
    with pytest.raises(ValueError):
        verify([], m)


def test_malformed_model_names_constraint():
    m = ConstraintModel()
    x = m.new_int("x", 0, 3)
    m.add_linear([(1, x)], hi=2)
    m.add_clause([x])
    with pytest.raises(ModelError) as exc:
        run(m)
    assert "non-boolean" in str(exc.value) and exc.value.constraint_id == 1


def test_undeclared_variable_rejected():
    m = ConstraintModel()
    m.add_clause([5])
    with pytest.raises(ModelError, match="undeclared"):
        m.check_wellformed()


def random_model(rng: random.Random, nb: int, ni: int) -> ConstraintModel:
    m = ConstraintModel()
    bools = [m.new_bool(f"b{i}") for i in range(nb)]
    ints = [m.new_int(f"x{i}", rng.randint(-2, 0), rng.randint(1, 3)) for i in range(ni)]
    lit = lambda: rng.choice(bools) if rng.random() < 0.5 else ~rng.choice(bools)
    for _ in range(rng.randint(1, 5)):
        kind = rng.choice(["clause", "atmost", "implies", "linear"])
        if kind == "clause":
            m.add_clause([lit() for _ in range(rng.randint(1, 3))])
        elif kind == "atmost":
            m.add_atmost([lit() for _ in range(3)], rng.randint(0, 2))
        elif kind == "implies":
            m.add_implies([lit()], [lit()])
        else:
            vs = rng.sample(bools + ints, k=min(3, nb + ni))
            m.add_linear([(rng.randint(-3, 3), v) for v in vs], lo=rng.randint(-4, 1), hi=rng.randint(1, 6))
    m.minimize([(rng.randint(-5, 5), v) for v in bools + ints], offset=rng.randint(0, 9))
    return m


def brute_force(m: ConstraintModel):
    best = math.inf
    for vals in itertools.product(*[range(lo, hi + 1) for lo, hi in zip(m.lo, m.hi)]):
        if verify(list(vals), m).ok:
            best = min(best, m.objective_value(vals))
    return best


@pytest.mark.parametrize("seed", range(40))
def test_matches_exhaustive_search(seed):
    rng = random.Random(seed)
    m = random_model(rng, rng.randint(1, 5), rng.randint(0, 2))
    expect = brute_force(m)
    res = run(m)
    if expect == math.inf:
        assert res.status == Status.UNSAT
    else:
        assert res.status == Status.OPTIMAL and res.objective_bound == expect


@pytest.mark.parametrize("seed", range(6))
def test_workers_agree_on_optimum(seed):
    m = random_model(random.Random(100 + seed), 5, 2)
    a, b = run(m), run(m, workers=3, seed=seed)
    assert a.status == b.status
    if a.status == Status.OPTIMAL:
        assert a.objective_bound == b.objective_bound


def test_trace_is_monotone():
    m = random_model(random.Random(7), 6, 2)
    res = run(m, restart_base=4)
    obs = [e.objective_bound for e in res.trace]
    lbs = [e.lower_bound for e in res.trace]
    assert obs == sorted(obs, reverse=True)
    assert lbs == sorted(lbs)
    assert all(l <= o for o, l in zip(obs, lbs))


def test_gap_policy_validation():
    with pytest.raises(ValueError):
        GapPolicy(relative_gap=1.0)
    with pytest.raises(ValueError):
        GapPolicy(time_limit=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_text_ir_round_trip(seed):
    m = random_model(random.Random(seed), 4, 2)
    m.add_to_group("g", 0, 1)
    again = model_from_text(model_to_text(m))
    assert model_to_text(again) == model_to_text(m)
    assert again.num_vars == m.num_vars and again.objective_offset == m.objective_offset


def test_reply_round_trip():
    m = ConstraintModel()
    x = m.new_int("x", 0, 4)
    m.add_linear([(1, x)], lo=2)
    m.minimize([(2, x)])
    res = run(m)
    status, values, obj, lb = parse_reply(format_reply(res), m.num_vars)
    assert (status, values, obj, lb) == (Status.OPTIMAL, [2], 4, 4)


@pytest.mark.parametrize("text", ["objective 3\n", "status OPTIMAL\nvalues 1 2\n"])
def test_reply_errors(text):
    with pytest.raises(ExternalSolverError):
        parse_reply(text, 1)


def test_external_backend_via_subprocess():
    m = random_model(random.Random(3), 4, 1)
    cmd = f"{sys.executable} -m cellforge.solver.external 30"
    ext, ref = solve(SolveRequest(m), f"external:{cmd}"), run(m)
    assert ext.status == ref.status and ext.objective_bound == ref.objective_bound
    assert ext.backend == "external"


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve(SolveRequest(ConstraintModel()), "gurobi")
