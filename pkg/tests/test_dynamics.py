import io

import numpy as np
import pytest

from cohtherm.bath import BathSpec, rate_table, time_grid
from cohtherm.dynamics import (
    Scenario,
    dephasing_weight,
    generator_terms,
    max_deviation,
    propagate,
    propagate_analytic,
    propagate_ode,
    propagate_ode_many,
)
from cohtherm.errors import ParameterError
from cohtherm.states import KINDS, MIXED_KINDS, StateKind, basis_table, make_state

from conftest import SHORT_GRID, scenario

ALL_KINDS = [StateKind(k, 0.4 if k in MIXED_KINDS else None) for k in KINDS]


def test_local_weights():
    assert dephasing_weight("local", 0, 0) == 0
    assert dephasing_weight("local", 0, 1) == 2
    assert dephasing_weight("local", 0, 3) == 4
    assert dephasing_weight("local", 0, 7) == 6
    assert {dephasing_weight("local", m, n) for m in range(8) for n in range(8)} == {0, 2, 4, 6}


def test_common_weights():
    M = basis_table().collective
    for m in range(8):
        for n in range(8):
            assert dephasing_weight("common", m, n) == (M[m] - M[n]) ** 2 // 2
    assert dephasing_weight("common", 0, 7) == 18
    assert dephasing_weight("common", 1, 2) == 0


def test_weight_errors():
    with pytest.raises(ParameterError):
        dephasing_weight("local", 0, 8)
    with pytest.raises(ParameterError):
        dephasing_weight("global", 0, 1)


@pytest.mark.parametrize("env", ["local", "common"])
@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label)
def test_populations_are_constant(kind, env):
    traj = propagate_analytic(scenario(kind, env, 0.5, SHORT_GRID))
    diag = np.diagonal(traj.states, axis1=1, axis2=2)
    np.testing.assert_allclose(diag, np.broadcast_to(np.diag(make_state(kind)), diag.shape), atol=1e-15)


@pytest.mark.parametrize("env,weight", [("local", 6), ("common", 18)])
def test_ghz_coherence_decay(env, weight):
    sc = scenario("ghz", env, 2.0, SHORT_GRID)
    G = rate_table(sc.baths[0], SHORT_GRID).Gamma
    traj = propagate_analytic(sc)
    np.testing.assert_allclose(np.abs(traj.states[:, 0, 7]), 0.5 * np.exp(-weight * G), rtol=1e-12)


def test_common_sector_is_decoherence_free():
    traj = propagate_analytic(scenario("w", "common", 10.0, SHORT_GRID))
    np.testing.assert_allclose(traj.states, np.broadcast_to(make_state("w"), traj.states.shape), atol=1e-14)


def test_zero_coupling_is_free_evolution():
    t = SHORT_GRID
    sc = Scenario.local(StateKind("ghz"), BathSpec(0.0, 0.01, 1.0), t)
    traj = propagate_analytic(sc)
    # M goes 3 -> -3, so the phase advances at omega0 * 3
    np.testing.assert_allclose(traj.states[:, 0, 7], 0.5 * np.exp(-3j * t), atol=1e-14)


@pytest.mark.parametrize("env", ["local", "common"])
def test_maximally_mixed_is_fixed_point(env):
    traj = propagate_analytic(scenario(StateKind("werner-ghz", 0.0), env, 10.0, SHORT_GRID))
    np.testing.assert_allclose(traj.states, np.broadcast_to(np.eye(8) / 8, traj.states.shape), atol=1e-15)


@pytest.mark.parametrize("env", ["local", "common"])
def test_ode_matches_analytic(env):
    scs = [scenario(k, env, kT, SHORT_GRID) for k in ALL_KINDS for kT in (0.1, 10.0)]
    for sc, ode in zip(scs, propagate_ode_many(scs)):
        assert max_deviation(propagate_analytic(sc), ode) <= 1e-6


def test_single_ode_run_and_dispatch():
    sc = scenario("star", "common", 0.5, SHORT_GRID)
    a = propagate(sc, "analytic")
    o = propagate(sc, "ode")
    assert o.solver == "ode" and a.solver == "analytic"
    assert o.scenario_hash == a.scenario_hash == sc.digest
    assert max_deviation(a, propagate_ode(sc, substeps=6)) <= 1e-6
    with pytest.raises(ParameterError):
        propagate(sc, "magic")


def test_generator_terms_are_diagonal():
    for env in ("local", "common"):
        A, B, w, channels = generator_terms(env)
        assert A.shape == B.shape and A.shape[1:] == (8, 8)
        off = ~np.eye(8, dtype=bool)
        assert np.all(A[:, off] == 0) and np.all(B[:, off] == 0)
        assert len(w) == len(channels) == A.shape[0]


def test_ode_batch_requires_shared_grid():
    a = scenario("ghz", "local", 0.5, SHORT_GRID)
    b = scenario("ghz", "local", 0.5, time_grid(10.0, 101))
    with pytest.raises(ParameterError):
        propagate_ode_many([a, b])


def test_table_grid_mismatch():
    sc = scenario("ghz", "local", 0.5, SHORT_GRID)
    wrong = rate_table(sc.baths[0], time_grid(10.0, 101))
    with pytest.raises(ParameterError):
        propagate_analytic(sc, tables=[wrong] * 3)


def test_local_coherence_ordered_in_temperature():
    mags = [np.abs(propagate_analytic(scenario("ghz", "local", kT, SHORT_GRID)).states[1:, 0, 7])
            for kT in (0.1, 0.2, 0.5, 2.0, 10.0)]
    for cold, hot in zip(mags, mags[1:]):
        assert np.all(hot < cold)


def test_scenario_validation_and_digest():
    with pytest.raises(ParameterError):
        Scenario(StateKind("ghz"), "local", (BathSpec(),), SHORT_GRID)
    with pytest.raises(ParameterError):
        Scenario(StateKind("ghz"), "nonlocal", (BathSpec(),), SHORT_GRID)
    a = scenario("ghz", "local", 0.5, SHORT_GRID)
    assert a.digest == scenario("ghz", "local", 0.5, SHORT_GRID).digest
    assert a.digest != a.with_kT(0.6).digest


def test_trajectory_csv():
    traj = propagate_analytic(scenario("w", "local", 0.5, time_grid(1.0, 3)))
    lines = traj.to_csv().splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["t", "re_00", "im_00"] and len(header) == 1 + 2 * 36
    assert len(lines) == 4
    row = [float(x) for x in lines[2].split(",")]
    idx = header.index("re_12")
    assert row[idx] == pytest.approx(traj.states[1, 1, 2].real, rel=1e-16, abs=0)
    buf = io.StringIO()
    traj.to_csv(buf)
    assert buf.getvalue() == traj.to_csv()
