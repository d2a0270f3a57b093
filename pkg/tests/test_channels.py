import numpy as np
import pytest

from darwin_certify.channels import (BroadcastSpec, FiniteEnvSpec, MeasureAndPrepareChannel, apply,
                                     apply_choi, choi, choi_reduce, finite_env_channel, ideal_broadcast_for,
                                     is_ssb_form, make_broadcast, reduce_to_bob, simulate_finite_env)
from darwin_certify.qmath import (ValidationError, basis_povm, ket_to_dm, partial_trace, random_density,
                                  random_povm, tensor)


def random_channel(rng, d_in=2, k=3, d_out=3):
    return MeasureAndPrepareChannel(random_povm(d_in, k, rng), tuple(random_density(d_out, rng) for _ in range(k)))


def test_channel_validates_lengths():
    with pytest.raises(ValidationError, match="outcomes"):
        MeasureAndPrepareChannel(basis_povm(2), (np.eye(2) / 2,))


def test_apply_is_affine(rng):
    for _ in range(20):
        ch = random_channel(rng)
        r1, r2 = random_density(2, rng), random_density(2, rng)
        a = rng.uniform()
        lhs = apply(ch, a * r1 + (1 - a) * r2)
        rhs = a * apply(ch, r1) + (1 - a) * apply(ch, r2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_reduce_to_bob_commutes_with_apply(rng):
    ch = make_broadcast(BroadcastSpec(d_A=2, t=3, noise=0.3))
    for _ in range(10):
        rho = random_density(2, rng)
        out = apply(ch, rho)
        for j in range(3):
            np.testing.assert_allclose(partial_trace(out, [2, 2, 2], [j]),
                                       apply(reduce_to_bob(ch, [2, 2, 2], j), rho), atol=1e-12)


def test_broadcast_examples():
    ch = make_broadcast(BroadcastSpec(d_A=2, t=2))
    np.testing.assert_allclose(ch.prepared[1], np.diag([0, 0, 0, 1]), atol=1e-15)
    ch = make_broadcast(BroadcastSpec(d_A=2, t=1, noise=1.0))
    for s in ch.prepared:
        np.testing.assert_allclose(s, np.eye(2) / 2)
    ch = make_broadcast(BroadcastSpec(d_A=2, t=1, bob_dims=(3,)))
    assert ch.d_out == 3
    with pytest.raises(ValidationError):
        BroadcastSpec(d_A=3, t=1, bob_dims=(2,))
    with pytest.raises(ValidationError):
        BroadcastSpec(d_A=2, t=1, noise=1.5)


def test_choi_examples():
    sigma = ket_to_dm([1, 1j]) * 0.3 + np.eye(2) * 0.35
    const = MeasureAndPrepareChannel(basis_povm(2), (sigma, sigma))
    np.testing.assert_allclose(choi(const), np.kron(np.eye(2) / 2, sigma), atol=1e-15)
    j = choi(make_broadcast(BroadcastSpec(d_A=2, t=1)))
    np.testing.assert_allclose(j, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)


def test_choi_properties_and_apply_consistency(rng):
    for _ in range(20):
        ch = random_channel(rng, d_in=3, k=4, d_out=2)
        j = choi(ch)
        assert abs(np.trace(j).real - 1) < 1e-12
        assert np.linalg.eigvalsh(j)[0] > -1e-10
        np.testing.assert_allclose(partial_trace(j, [3, 2], [0]), np.eye(3) / 3, atol=1e-10)
        rho = random_density(3, rng)
        np.testing.assert_allclose(apply_choi(j, rho, 3), apply(ch, rho), atol=1e-10)


def test_choi_reduce_matches_reduce_to_bob(rng):
    ch = make_broadcast(BroadcastSpec(d_A=2, t=2, noise=0.25))
    jb = choi_reduce(choi(ch), 2, [2, 2], [1])
    np.testing.assert_allclose(jb, choi(reduce_to_bob(ch, [2, 2], 1)), atol=1e-14)


@pytest.mark.parametrize("n,s_t", [(1, (0,)), (3, (0, 2)), (4, (0, 1, 2, 3)), (5, (1,))])
def test_finite_env_full_coupling_is_ideal_broadcast(n, s_t):
    spec = FiniteEnvSpec(N=n, S_t=s_t)
    np.testing.assert_allclose(simulate_finite_env(spec), choi(ideal_broadcast_for(spec)), atol=1e-10)


def test_finite_env_zero_coupling_is_constant():
    j = simulate_finite_env(FiniteEnvSpec(N=2, S_t=(1,), coupling_angle=0.0))
    np.testing.assert_allclose(j, np.kron(np.eye(2) / 2, np.diag([1, 0])), atol=1e-14)


def test_finite_env_intermediate_is_trace_preserving():
    for a in (0.3, np.pi / 8, 1.1):
        spec = FiniteEnvSpec(N=3, S_t=(0, 1), coupling_angle=a)
        j = simulate_finite_env(spec)
        np.testing.assert_allclose(partial_trace(j, [2, 4], [0]), np.eye(2) / 2, atol=1e-9)
        ch = finite_env_channel(spec)
        np.testing.assert_allclose(choi(ch), j, atol=1e-12)


def test_finite_env_limits():
    with pytest.raises(ValidationError, match="cap"):
        FiniteEnvSpec(N=11, S_t=(0,))
    with pytest.raises(ValidationError):
        FiniteEnvSpec(N=2, S_t=(2,))
    with pytest.raises(ValidationError):
        FiniteEnvSpec(N=2, S_t=(0,), d_A=3)


def test_ssb_form_examples():
    perfect = make_broadcast(BroadcastSpec(d_A=2, t=2, system_copy=True))
    assert is_ssb_form(np.eye(2), perfect, [2, 2, 2])
    noisy = make_broadcast(BroadcastSpec(d_A=2, t=2, noise=0.1, system_copy=True))
    rep = is_ssb_form(np.eye(2), noisy, [2, 2, 2])
    assert not rep and {v[0] for v in rep.violations} == {"support"}
    plus, minus = ket_to_dm([1, 1]), ket_to_dm([1, -1])
    wrong = MeasureAndPrepareChannel(basis_povm(2), (tensor(plus, np.diag([1, 0])), tensor(minus, np.diag([0, 1]))))
    rep = is_ssb_form(np.eye(2), wrong, [2, 2])
    assert not rep and any(v[0] == "system" for v in rep.violations)


def test_ssb_rejects_entangled_prepared_state():
    bell = ket_to_dm([1, 0, 0, 1])
    ch = MeasureAndPrepareChannel(basis_povm(2), (tensor(np.diag([1, 0]), bell), tensor(np.diag([0, 1]), bell)))
    rep = is_ssb_form(np.eye(2), ch, [2, 2, 2])
    assert not rep and any(v[0] == "product" for v in rep.violations)
