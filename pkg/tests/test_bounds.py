import math

import numpy as np
import pytest

from darwin_certify._lmi import ConvergenceError
from darwin_certify.bounds import (CutoffResult, Verdict, agreement_lower_bound, bph_deviation_bound,
                                   classical_objectivity_verdict, distinguishability_bound,
                                   ic_contextuality_bound, projective_bound)
from darwin_certify.channels import MeasureAndPrepareChannel, depolarize
from darwin_certify.discrimination import eta
from darwin_certify.qmath import (Povm, ValidationError, basis_povm, qubit_sic_povm, random_povm,
                                  random_unitary)
from darwin_certify.simplex_geometry import is_affinely_independent


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_projective_cutoff(d):
    res = distinguishability_bound(basis_povm(d))
    assert abs(res.p_hat - projective_bound(d)) < 1e-9
    assert res.gap <= 1e-9
    np.testing.assert_allclose(res.optimal_weights, np.ones(d) / d, atol=1e-6)


def test_unsharp_pointer():
    res = distinguishability_bound(Povm([np.diag([0.8, 0.2]), np.diag([0.2, 0.8])]))
    assert abs(res.maximin - 0.5) < 1e-9 and abs(res.p_hat - 0.75) < 1e-9


def test_sic_pointer():
    # four effects |psi><psi|/2 can all reach 1/4 only at I/2 (they average to I/4)
    res = distinguishability_bound(qubit_sic_povm())
    assert abs(res.maximin - 0.25) < 1e-9


def test_trivial_pointer():
    assert distinguishability_bound(Povm([np.eye(3)])).p_hat == 0.5


def test_random_pointer_certificate(rng):
    for _ in range(10):
        pointer = random_povm(int(rng.integers(2, 5)), int(rng.integers(2, 6)), rng)
        res = distinguishability_bound(pointer)
        assert 0 <= res.gap <= 1e-9
        pri = pointer.probabilities(res.witness_state)
        assert abs(pri.min() - res.maximin) < 1e-12
        lam = float(np.linalg.eigvalsh(sum(w * e for w, e in zip(res.optimal_weights, pointer)))[-1])
        assert abs(lam - res.dual_value) < 1e-12


def test_rank_deficient_effects():
    # effects with kernels: the maximizer still gives every label positive weight
    res = distinguishability_bound(Povm([np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 1.0, 1.0])]))
    assert abs(res.maximin - 0.5) < 1e-9 and not res.boundary


def test_cutoff_reports_nonconvergence(rng, monkeypatch):
    from darwin_certify import _lmi
    solve = _lmi.solve
    monkeypatch.setattr(_lmi, "solve", lambda *a, **k: solve(*a, **{**k, "max_newton": 5}))
    with pytest.raises(ConvergenceError) as exc:
        distinguishability_bound(random_povm(3, 4, rng))
    assert exc.value.result.gap > 0


def test_projective_bound_values():
    assert projective_bound(2) == 0.75
    assert projective_bound(3) == pytest.approx(5 / 6)
    assert projective_bound(1) == 0.5


def test_cutoff_above_half(rng):
    for _ in range(20):
        res = distinguishability_bound(random_povm(int(rng.integers(2, 4)), int(rng.integers(2, 5)), rng))
        assert 0.5 <= res.p_hat < 1 and 0 < res.maximin <= 1


def test_eta_above_cutoff_forces_affine_independence(rng):
    # contrapositive of the cut-off lemma, on scenarios that straddle the cut-off
    hits = 0
    for _ in range(100):
        d = int(rng.integers(2, 4))
        noise = rng.uniform(0, 1)
        u = random_unitary(d, rng)
        pointer = basis_povm(d, u)
        prepared = [depolarize(np.outer(u[:, k], u[:, k].conj()), noise) for k in range(d)]
        if rng.uniform() < 0.3:
            prepared[-1] = prepared[0]
        ch = MeasureAndPrepareChannel(pointer, tuple(prepared))
        if eta(ch).eta > distinguishability_bound(pointer).p_hat:
            hits += 1
            assert is_affinely_independent(ch.prepared)
    assert hits > 20


def test_projective_bound_rejects_zero():
    with pytest.raises(ValidationError):
        projective_bound(0)


def test_verdict():
    assert classical_objectivity_verdict(1.0, 0.75) is Verdict.EMERGED
    assert classical_objectivity_verdict(0.5, 0.75) is Verdict.NOT_CERTIFIED
    assert classical_objectivity_verdict(0.75 + 1e-7, 0.75) is Verdict.MARGINAL
    res = CutoffResult(0.75, 0.5, 0.5, np.ones(2) / 2, np.eye(2) / 2)
    assert classical_objectivity_verdict(0.9, res) is Verdict.EMERGED
    with pytest.raises(ValidationError):
        classical_objectivity_verdict(1.5, 0.75)


def test_agreement_lower_bound():
    assert agreement_lower_bound(3, 1.0) == 1.0
    assert agreement_lower_bound(1, 1 - 1e-8) == pytest.approx(1 - 6 * 1e-2)
    assert agreement_lower_bound(2, 0.5) < 0
    assert agreement_lower_bound(1, 0.9999) == pytest.approx(0.4)
    assert agreement_lower_bound(3, 0.9999) == pytest.approx(-0.8)
    with pytest.raises(ValidationError):
        agreement_lower_bound(0, 0.9)


def test_bph_bound():
    val = bph_deviation_bound(2, 1, 1000, 0.5)
    expect = (27 * math.log(2) * 64 * 1 * 1 / (1000 * 0.125)) ** (1 / 3)
    assert val == pytest.approx(expect, rel=1e-14)
    assert bph_deviation_bound(2, 1, 9580, 0.5) == pytest.approx(1.0, abs=1e-3)
    assert bph_deviation_bound(2, 1, 10 ** 6, 0.5) == pytest.approx(0.2126, abs=5e-4)
    assert bph_deviation_bound(2, 1, 4000, 0.5) / bph_deviation_bound(2, 1, 1000, 0.5) == pytest.approx(4 ** (-1 / 3))
    # decreases like N^(-1/3)
    assert bph_deviation_bound(2, 1, 8000, 0.5) == pytest.approx(val / 2, rel=1e-12)
    assert ic_contextuality_bound(2, 2, 1, 1000, 0.5) == pytest.approx(4 * val)
    for bad in [(2, 1, 10, 0.0), (2, 5, 3, 0.5), (1, 1, 3, 0.5)]:
        with pytest.raises(ValidationError):
            bph_deviation_bound(*bad)
