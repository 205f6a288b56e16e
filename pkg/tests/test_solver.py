import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_spec import QuadratureConfig
from lattice_spec.errors import DomainError, NonConvergence
from lattice_spec.green import greens_I, greens_J
from lattice_spec.solver import (CRITICAL, DISCRETE, SUBCRITICAL, SUPERCRITICAL, THRESHOLD_EMBEDDED,
                                 classify_spectrum, coupling_for_energy, critical_coupling, eigenvalue,
                                 eigenvector_momentum, eigenvector_position, is_critical,
                                 point_mass_weight, regime)

WATSON_VC = 0.6594626704490009


def test_vc_vanishes_low_dim():
    assert critical_coupling(1).v_c == 0.0
    assert critical_coupling(2).v_c == 0.0


@pytest.mark.parametrize("d, vc", [(3, WATSON_VC), (4, 0.8067983267768911),
                                   (5, 0.8648213901806122), (6, 0.8952845043721709)])
def test_vc_values(d, vc):
    assert critical_coupling(d).v_c == pytest.approx(vc, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_d1_closed_form(v):
    sol = eigenvalue(1, v)
    assert sol.kind == DISCRETE
    assert sol.E == pytest.approx(math.sqrt(1 + v * v), rel=1e-12)
    assert sol.weight == pytest.approx(v / math.sqrt(1 + v * v), rel=1e-9)


def test_zero_coupling_has_no_eigenvalue():
    for d in range(1, 7):
        assert eigenvalue(d, 0.0) is None


def test_negative_coupling_rejected():
    with pytest.raises(DomainError):
        eigenvalue(3, -0.1)


def test_d2_frozen():
    assert eigenvalue(2, 0.8).E == pytest.approx(1.1303678306393654, rel=1e-12)


def test_d2_unresolvable_weak_coupling():
    # E - 1 is far below one ulp of 1
    with pytest.raises(NonConvergence):
        eigenvalue(2, 0.01)


@pytest.mark.parametrize("d", [3, 4])
def test_no_bound_state_up_to_vc(d):
    vc = critical_coupling(d).v_c
    assert eigenvalue(d, 0.5 * vc) is None
    assert eigenvalue(d, vc) is None


@pytest.mark.parametrize("d, w", [(5, 0.6910020384427334), (6, 0.8239665441798703)])
def test_threshold_eigenvalue(d, w):
    sol = eigenvalue(d, critical_coupling(d).v_c)
    assert sol.E == 1.0 and sol.kind == THRESHOLD_EMBEDDED
    assert sol.weight == pytest.approx(w, rel=1e-9)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_supercritical_root(d):
    v = 1.5 * critical_coupling(d).v_c
    sol = eigenvalue(d, v)
    assert sol.E > 1
    assert v * greens_I(d, sol.E).value == pytest.approx(1.0, abs=1e-12)


def test_just_above_vc_d3():
    vc = critical_coupling(3).v_c
    sol = eigenvalue(3, vc * (1 + 1e-6))
    assert 0 < sol.E - 1 < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 6), st.floats(1.01, 4.0))
def test_energy_coupling_round_trip(d, E):
    v = coupling_for_energy(d, E)
    assert eigenvalue(d, v).E == pytest.approx(E, rel=1e-10)


def test_coupling_for_energy_domain():
    with pytest.raises(DomainError):
        coupling_for_energy(2, 1.0)
    with pytest.raises(DomainError):
        coupling_for_energy(3, 0.9)


def test_weight_bounds_and_threshold_domain():
    for d in range(1, 7):
        w = point_mass_weight(d, 1.3)
        assert 0 < w <= 1
    with pytest.raises(DomainError):
        point_mass_weight(4, 1.0)


def test_weight_is_I2_over_J():
    E = 1.4
    assert point_mass_weight(3, E) == pytest.approx(greens_I(3, E).value ** 2 / greens_J(3, E).value)


def test_eigenvector_momentum():
    assert eigenvector_momentum(2, 1.5, (0.0, 0.0)) == pytest.approx(2.0)
    assert math.isinf(eigenvector_momentum(5, 1.0, (0.0,) * 5))
    with pytest.raises(DomainError):
        eigenvector_momentum(3, 1.0, (0.0,) * 3)
    with pytest.raises(DomainError):
        eigenvector_momentum(3, 1.5, (0.0, 0.0))


def test_eigenvector_position_d1():
    E = math.sqrt(2)
    psi = [eigenvector_position(1, E, n) for n in range(4)]
    for a, b in zip(psi, psi[1:]):
        assert b / a == pytest.approx(E - 1, rel=1e-10)


def test_tie_rule():
    cfg = QuadratureConfig(rel_tol=1e-8)
    assert is_critical(1.0 + 1e-9, 1.0, cfg)
    assert not is_critical(1.0 + 1e-6, 1.0, cfg)
    assert regime(3, 10.0) == SUPERCRITICAL
    assert regime(3, 0.1) == SUBCRITICAL
    assert regime(5, critical_coupling(5).v_c) == CRITICAL


def test_classify_spectrum_report():
    rep = classify_spectrum(5, critical_coupling(5).v_c)
    assert [p.E for p in rep.pp] == [1.0]
    assert rep.ac_interval == (-1.0, 1.0) and rep.sc_empty
    assert rep.to_dict()["pp"][0]["kind"] == THRESHOLD_EMBEDDED
    assert classify_spectrum(4, critical_coupling(4).v_c).pp == ()
