"""Flow field, clause values, Jacobian, and decoding."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memsolve.dynamics import (
    DimensionMismatch,
    DynParams,
    DynamicsError,
    SolverState,
    box_bounds,
    clause_value,
    clause_values,
    compiled,
    decode,
    flow,
    flow_packed,
    init_state,
    jacobian_fd,
    pack,
    unpack,
)
from memsolve.encode import Clause, ClauseSystem, Literal


def _system(*clauses):
    nets = 1 + max(l.net for c in clauses for l in c)
    return ClauseSystem(num_nets=nets, clauses=list(clauses))


def _state(v, K, xs=0.5, xl=1.0):
    return SolverState(
        v=np.asarray(v, dtype=float),
        xs=np.full(K, float(xs)),
        xl=np.full(K, float(xl)),
    )


POS3 = Clause([Literal(0, 1), Literal(1, 1), Literal(2, 1)])


def test_params_validate():
    DynParams().validate()
    with pytest.raises(DynamicsError):
        DynParams(gamma=0.01, delta=0.05).validate()
    with pytest.raises(DynamicsError):
        DynParams(alpha=-1).validate()


def test_clause_value_satisfied():
    assert clause_value(POS3, np.array([1.0, 1.0, 1.0])) == 0.0


def test_clause_value_violated():
    assert clause_value(POS3, np.array([-1.0, -1.0, -1.0])) == 1.0


def test_clause_value_midpoint():
    c = Clause([Literal(0, 1), Literal(1, -1)])
    assert clause_value(c, np.array([0.0, 0.0])) == 0.5


def test_clause_values_vectorized_matches_scalar():
    sys_ = _system(POS3, Clause([Literal(1, -1)]))
    v = np.array([0.3, -0.7, 0.1])
    cc = compiled(sys_)
    expected = np.array([clause_value(c, v) for c in sys_.clauses])
    np.testing.assert_allclose(clause_values(cc, v), expected)


def test_flow_satisfied_fixed_point():
    sys_ = _system(POS3)
    f = flow(sys_, _state([1.0, 1.0, 1.0], 1), DynParams())
    np.testing.assert_array_equal(f.dv, np.zeros(3))


def test_flow_hand_example():
    # fully violated positive 3-clause; net 0 is the tie-broken minimizer
    sys_ = _system(POS3)
    f = flow(sys_, _state([-1.0, -1.0, -1.0], 1), DynParams(zeta=0.1))
    np.testing.assert_allclose(f.dv, [1.05, 0.5, 0.5])


def test_flow_long_memory_grows_on_violation():
    sys_ = _system(POS3)
    params = DynParams()
    f = flow(sys_, _state([-1.0, -1.0, -1.0], 1), params)
    np.testing.assert_allclose(f.dxl, [params.alpha * (1.0 - params.delta)])
    assert f.dxl[0] > 0


def test_flow_short_memory_signs():
    sys_ = _system(POS3)
    params = DynParams()
    # violated clause: C=1 > gamma, xs grows; satisfied: C=0 < gamma, xs shrinks
    f_bad = flow(sys_, _state([-1.0, -1.0, -1.0], 1), params)
    f_ok = flow(sys_, _state([1.0, 1.0, 1.0], 1), params)
    assert f_bad.dxs[0] > 0
    assert f_ok.dxs[0] < 0


def test_flow_unit_clause_empty_min_is_one():
    # a unit clause's gradient term uses min over the other literals = 1
    sys_ = _system(Clause([Literal(0, 1)]))
    st_ = _state([0.0], 1, xs=1.0, xl=2.0)
    f = flow(sys_, st_, DynParams(zeta=0.1))
    # G = 0.5*1*1, weighted by xl*xs = 2; R on the single (minimizing) literal:
    # (1+0.1*2)*(1-1)=0 rigidity weight
    np.testing.assert_allclose(f.dv, [2.0 * 0.5])


def test_flow_dimension_mismatch():
    sys_ = _system(POS3)
    with pytest.raises(DimensionMismatch):
        flow(sys_, _state([0.0, 0.0], 1), DynParams())


def test_empty_system_rejected():
    with pytest.raises(DynamicsError):
        compiled(ClauseSystem(num_nets=1, clauses=[]))


def test_init_state_shapes_and_ranges():
    sys_ = _system(POS3, Clause([Literal(0, -1)]))
    st_ = init_state(sys_, np.random.default_rng(0))
    assert st_.v.shape == (3,) and st_.xs.shape == (2,) and st_.xl.shape == (2,)
    assert np.all(np.abs(st_.v) <= 1)
    assert np.all(st_.xs == 0.5) and np.all(st_.xl == 1.0)


def test_clamp():
    st_ = SolverState(v=np.array([2.0, -3.0]), xs=np.array([1.5]), xl=np.array([0.2]))
    st_.clamp(l_cap=10.0)
    np.testing.assert_array_equal(st_.v, [1.0, -1.0])
    assert st_.xs[0] == 1.0 and st_.xl[0] == 1.0


def test_pack_unpack_round_trip():
    sys_ = _system(POS3)
    st_ = init_state(sys_, np.random.default_rng(1))
    x = pack(st_)
    st2 = unpack(x, 3, 1)
    np.testing.assert_array_equal(st2.v, st_.v)
    np.testing.assert_array_equal(st2.xs, st_.xs)
    np.testing.assert_array_equal(st2.xl, st_.xl)


def test_flow_packed_matches_flow():
    sys_ = _system(POS3, Clause([Literal(2, -1), Literal(1, 1)]))
    st_ = init_state(sys_, np.random.default_rng(2))
    f = flow(sys_, st_, DynParams())
    fp = flow_packed(sys_, pack(st_), DynParams())
    np.testing.assert_array_equal(fp, np.concatenate([f.dv, f.dxs, f.dxl]))


def test_jacobian_shape_and_flags():
    sys_ = _system(POS3)
    st_ = _state([0.2, -0.3, 0.4], 1, xs=0.5, xl=1.0)  # xl at lower bound
    J, flags = jacobian_fd(sys_, st_, DynParams(), return_flags=True)
    assert J.shape == (5, 5)
    assert 4 in flags  # xl coordinate sits on the box boundary


def test_jacobian_matches_analytic_on_smooth_patch():
    # single positive unit clause: dv0 = xl*xs*0.5 + (1+z*xl)(1-xs)*0.5*(1-v0)
    sys_ = _system(Clause([Literal(0, 1)]))
    params = DynParams()
    st_ = _state([0.1], 1, xs=0.4, xl=2.0)
    J = jacobian_fd(sys_, st_, params, h=1e-6)
    z = params.zeta
    v, xs, xl = 0.1, 0.4, 2.0
    # d dv0 / d v0
    assert J[0, 0] == pytest.approx(-(1 + z * xl) * (1 - xs) * 0.5, rel=1e-5)
    # d dv0 / d xs
    assert J[0, 1] == pytest.approx(xl * 0.5 - (1 + z * xl) * 0.5 * (1 - v), rel=1e-5)
    # d dv0 / d xl
    assert J[0, 2] == pytest.approx(xs * 0.5 + z * (1 - xs) * 0.5 * (1 - v), rel=1e-5)


def test_jacobian_requires_positive_h():
    sys_ = _system(POS3)
    with pytest.raises(DynamicsError):
        jacobian_fd(sys_, _state([0.0, 0.0, 0.0], 1), DynParams(), h=0.0)


def test_decode_basic():
    st_ = SolverState(v=np.array([0.9, -0.8]), xs=np.zeros(0), xl=np.zeros(0))
    assert decode(st_, 0.5) == {0: 1, 1: 0}


def test_decode_undecided():
    st_ = SolverState(v=np.array([0.2]), xs=np.zeros(0), xl=np.zeros(0))
    assert decode(st_, 0.5) == {}


def test_box_bounds():
    lo, hi = box_bounds(2, 3, 100.0)
    np.testing.assert_array_equal(lo, [-1, -1, 0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(hi, [1, 1, 1, 1, 1, 100, 100, 100])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.floats(0.01, 0.99), st.floats(1.0, 50.0))
def test_flow_finite_and_satisfied_clauses_inert(vs, xs, xl):
    sys_ = _system(POS3)
    f = flow(sys_, _state(vs, 1, xs=xs, xl=xl), DynParams())
    assert np.all(np.isfinite(f.dv))
    if max(vs) == 1.0:
        # a fully satisfied literal is only ever pushed further outward
        # (clamping holds it); it is never pulled back below +1
        assert f.dv[np.argmax(vs)] >= 0.0
