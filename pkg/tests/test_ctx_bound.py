import numpy as np
import pytest

from darwin_certify._lmi import ConvergenceError
from darwin_certify.channels import (BroadcastSpec, FiniteEnvSpec, MeasureAndPrepareChannel, apply_choi, choi,
                                     depolarizing_channel_choi, identity_channel_choi, ideal_broadcast_for,
                                     make_broadcast, reduce_to_bob, simulate_finite_env)
from darwin_certify.ctx_bound import bob_choi, contextuality_distance_bound, diamond_distance, effect_constant
from darwin_certify.qmath import (Povm, ValidationError, basis_povm, ket_to_dm, qubit_sic_povm, random_density,
                                  random_povm, random_pure, tensor, trace_norm)


def random_mp_choi(rng, d=2, k=3):
    return choi(MeasureAndPrepareChannel(random_povm(d, k, rng), tuple(random_density(d, rng) for _ in range(k))))


def test_effect_constant_examples():
    assert effect_constant([basis_povm(4)]) == pytest.approx(4.0)
    assert effect_constant([qubit_sic_povm()]) == pytest.approx(2.0)
    assert effect_constant([Povm([np.eye(3)])]) == pytest.approx(np.sqrt(3))
    assert effect_constant([Povm([np.eye(2)]), basis_povm(2)]) == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        effect_constant([])


def test_effect_constant_general_bound(rng):
    for _ in range(200):
        d, m = int(rng.integers(2, 5)), int(rng.integers(1, 6))
        assert effect_constant([random_povm(d, m, rng)]) <= d * m + 1e-12


def test_diamond_identity_vs_depolarizing():
    # frozen from a direct search over pure two-qubit inputs: 1.5
    res = diamond_distance(identity_channel_choi(2), depolarizing_channel_choi(2), 2)
    assert abs(res.value - 1.5) < 1e-8 and res.gap <= 1e-9
    assert res.lower <= 1.5 + 1e-12 <= res.upper + 2e-12


def test_diamond_self_is_zero(rng):
    j = random_mp_choi(rng)
    res = diamond_distance(j, j, 2)
    assert res.value <= 1e-12 and res.upper <= 1e-12


def test_diamond_continuity_in_noise():
    ref = choi(make_broadcast(BroadcastSpec(d_A=2, t=1, noise=0.3)))
    prev = None
    for b in [0.5, 0.4, 0.35, 0.31, 0.301, 0.3001]:
        j = choi(make_broadcast(BroadcastSpec(d_A=2, t=1, noise=b)))
        val = diamond_distance(ref, j, 2).value
        # upper estimate from the Choi difference
        assert val <= 2 * trace_norm(ref - j) + 1e-9
        if prev is not None:
            assert val < prev
        prev = val
    assert prev < 1e-3


def test_diamond_dominates_product_inputs(rng):
    for _ in range(10):
        j1, j2 = random_mp_choi(rng), random_mp_choi(rng)
        res = diamond_distance(j1, j2, 2)
        for _ in range(10):
            rho = random_pure(2, rng)
            assert trace_norm(apply_choi(j1, rho, 2) - apply_choi(j2, rho, 2)) <= res.upper + 1e-9


def test_diamond_triangle(rng):
    for _ in range(20):
        a, b, c = (random_mp_choi(rng) for _ in range(3))
        ab = diamond_distance(a, b, 2).value
        bc = diamond_distance(b, c, 2).value
        ac = diamond_distance(a, c, 2).value
        assert ac <= ab + bc + 2e-9


def test_diamond_rejects_mismatched_shapes():
    with pytest.raises(ValidationError):
        diamond_distance(np.eye(4) / 4, np.eye(6) / 6, 2)


def test_diamond_reports_bracket_on_nonconvergence(monkeypatch, rng):
    from darwin_certify import _lmi
    j1, j2 = random_mp_choi(rng), random_mp_choi(rng)
    exact = diamond_distance(j1, j2, 2).value
    solve = _lmi.solve
    monkeypatch.setattr(_lmi, "solve", lambda *a, **k: solve(*a, **{**k, "max_newton": 3}))
    with pytest.raises(ConvergenceError) as exc:
        diamond_distance(j1, j2, 2)
    res = exc.value.result
    assert res.lower <= exact + 1e-9 and exact - 1e-9 <= res.upper


def test_bound_is_trivial_for_equal_channels():
    ideal = make_broadcast(BroadcastSpec(d_A=2, t=1, noise=0.2))
    dev = contextuality_distance_bound(choi(ideal), ideal, [basis_povm(2)], [np.eye(2) / 2], 2)
    assert dev.C == pytest.approx(2.0)
    assert dev.diamond == 0 and dev.bound == 0 and dev.observed_l1 == 0 and dev.consistent


def finite_env_bob(n, angle, j=0, s_t=None):
    spec = FiniteEnvSpec(N=n, S_t=s_t or tuple(range(n)), coupling_angle=angle)
    dims = [2] * spec.t
    return bob_choi(simulate_finite_env(spec), 2, dims, j), reduce_to_bob(ideal_broadcast_for(spec), dims, j)


def test_full_coupling_bound_vanishes():
    jb, ideal = finite_env_bob(3, np.pi / 2, j=1)
    dev = contextuality_distance_bound(jb, ideal, [basis_povm(2), qubit_sic_povm()],
                                       [ket_to_dm([1, 1]), np.eye(2) / 2], 2)
    assert dev.bound <= 1e-9 and dev.observed_l1 <= 1e-9


def test_quarter_coupling_has_strict_slack(rng):
    jb, ideal = finite_env_bob(1, np.pi / 4)
    preps = [random_density(2, rng) for _ in range(10)] + [ket_to_dm([0, 1])]
    dev = contextuality_distance_bound(jb, ideal, [basis_povm(2), qubit_sic_povm()], preps, 2)
    assert dev.observed_l1 < dev.bound - 1e-3 and dev.consistent


def test_bound_checks_dimensions():
    jb, ideal = finite_env_bob(1, 0.3)
    with pytest.raises(ValidationError):
        contextuality_distance_bound(jb, ideal, [basis_povm(3)], [np.eye(2) / 2], 2)
    with pytest.raises(ValidationError):
        contextuality_distance_bound(np.eye(9) / 9, ideal, [basis_povm(2)], [np.eye(2) / 2], 2)


def test_bob_choi_matches_channel_reduction():
    ch = make_broadcast(BroadcastSpec(d_A=2, t=3, noise=0.2))
    for j in range(3):
        np.testing.assert_allclose(bob_choi(choi(ch), 2, [2, 2, 2], j), choi(reduce_to_bob(ch, [2, 2, 2], j)),
                                   atol=1e-14)


def test_chain_can_fail_when_input_is_larger():
    # constant qutrit -> qubit channels: diamond 2, C = 2, bound 4/3, observed 2
    one = Povm([np.eye(3)])
    c0 = MeasureAndPrepareChannel(one, (np.diag([1.0, 0.0]).astype(complex),))
    c1 = MeasureAndPrepareChannel(one, (np.diag([0.0, 1.0]).astype(complex),))
    dev = contextuality_distance_bound(choi(c0), c1, [basis_povm(2)], [np.eye(3) / 3], 3)
    assert dev.bound == pytest.approx(4 / 3) and dev.observed_l1 == pytest.approx(2.0)
    assert not dev.consistent
