"""Noncontextual ontological model for a measure-and-prepare observer channel.

For ``Phi(rho) = sum_k Tr(E_k rho) sigma_k`` with affinely independent
``sigma_k`` the model is

    Lambda = {1..K},   mu_P(k) = Tr(E_k rho_P),   xi_M(b|k) = Tr(F_b sigma_k).

Noncontextuality is made structural: ``mu`` is looked up by the pointer
distribution of a preparation and ``xi`` by the effect matrix, never by the
procedure that produced them. Both lookups go through tolerant registries, so
operationally equivalent procedures land on the same table entry.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import MeasureAndPrepareChannel, apply
from .qmath import Povm, ValidationError, matrix_from_pairs, matrix_to_pairs, sig12
from .simplex_geometry import DEFAULT_RANK_TOL, is_affinely_independent

PREP_KEY_TOL = 1e-9
EFFECT_TOL = 1e-12


class AffinelyDependentError(ValidationError):
    """The encoding states are affinely dependent, so no model is certified."""


def prep_key(dist) -> tuple:
    """Quantized pointer distribution used as the preparation key."""
    return tuple(float(v) + 0.0 for v in np.round(np.asarray(dist, dtype=float) / PREP_KEY_TOL) * PREP_KEY_TOL)


def effect_digest(effect) -> str:
    e = np.round(np.asarray(effect, dtype=complex), 12)
    raw = np.ascontiguousarray(np.stack([e.real + 0.0, e.imag + 0.0]))
    return hashlib.sha256(raw.tobytes()).hexdigest()[:16]


@dataclass
class OntologicalModel:
    k_max: int
    pointer: Povm
    mu: dict                    # prep key -> distribution over Lambda
    xi: dict                    # effect digest -> response vector over Lambda
    effects: dict               # effect digest -> effect matrix
    measurements: list = field(default_factory=list)   # per measurement: digests of its outcomes

    # -- lookups ---------------------------------------------------------
    def key_for(self, preparation) -> tuple:
        """Preparation key from a key tuple or a density matrix; unknown keys raise KeyError."""
        if isinstance(preparation, tuple):
            dist = np.asarray(preparation, dtype=float)
        else:
            dist = self.pointer.probabilities(preparation)
        key = prep_key(dist)
        if key in self.mu:
            return key
        for k in self.mu:
            if np.max(np.abs(np.asarray(k) - dist)) <= PREP_KEY_TOL:
                return k
        raise KeyError(f"no preparation with pointer distribution {np.round(dist, 9).tolist()}")

    def digest_for(self, effect) -> str:
        effect = np.asarray(effect)
        dg = effect_digest(effect)
        if dg in self.xi:
            return dg
        for d, e in self.effects.items():
            if e.shape == effect.shape and np.max(np.abs(e - effect)) <= EFFECT_TOL:
                return d
        raise KeyError("effect not present in the model")

    def response(self, measurement, outcome: int) -> np.ndarray:
        if isinstance(measurement, (int, np.integer)):
            if not 0 <= measurement < len(self.measurements):
                raise KeyError(f"measurement index {measurement} out of range")
            digests = self.measurements[measurement]
            if not 0 <= outcome < len(digests):
                raise KeyError(f"outcome {outcome} out of range")
            return self.xi[digests[outcome]]
        if not 0 <= outcome < len(measurement):
            raise KeyError(f"outcome {outcome} out of range")
        return self.xi[self.digest_for(measurement[outcome])]

    def invariant_violations(self, tol: float = 1e-12) -> list[str]:
        out = []
        for key, m in self.mu.items():
            if np.any(m < -tol) or abs(m.sum() - 1.0) > tol:
                out.append(f"mu{key} is not a distribution")
        for d, r in self.xi.items():
            if np.any(r < -tol) or np.any(r > 1.0 + tol):
                out.append(f"xi[{d}] leaves [0, 1]")
        for i, digests in enumerate(self.measurements):
            total = sum(self.xi[d] for d in digests)
            if np.max(np.abs(total - 1.0)) > tol:
                out.append(f"responses of measurement {i} do not sum to 1")
        return out


def _register_effect(model: OntologicalModel, effect, response) -> str:
    try:
        return model.digest_for(effect)
    except KeyError:
        pass
    dg = effect_digest(effect)
    model.effects[dg] = np.array(effect, dtype=complex)
    model.xi[dg] = np.asarray(response, dtype=float)
    return dg


def _register_prep(model: OntologicalModel, dist) -> tuple:
    try:
        return model.key_for(tuple(float(v) for v in dist))
    except KeyError:
        pass
    key = prep_key(dist)
    model.mu[key] = np.asarray(dist, dtype=float)
    return key


def build_nc_model(bob_channel: MeasureAndPrepareChannel, preparations: Sequence,
                   measurements: Sequence[Povm], tol: float = DEFAULT_RANK_TOL) -> OntologicalModel:
    ch = bob_channel
    check = is_affinely_independent(ch.prepared, tol)
    if not check:
        raise AffinelyDependentError(
            f"encoding states are affinely dependent (rank {check.rank} for {ch.k_max} states); "
            "noncontextuality is not certified")
    model = OntologicalModel(k_max=ch.k_max, pointer=ch.pointer, mu={}, xi={}, effects={})
    for rho in preparations:
        _register_prep(model, ch.priors(rho))
    for m in measurements:
        if m.dim != ch.d_out:
            raise ValidationError(f"measurement acts on dimension {m.dim}, observer has {ch.d_out}")
        digests = []
        for f in m:
            resp = np.array([np.real(np.vdot(f, s)) for s in ch.prepared])
            digests.append(_register_effect(model, f, resp))
        model.measurements.append(digests)
    bad = model.invariant_violations()
    if bad:
        raise ValidationError("; ".join(bad))
    return model


def model_predict(model: OntologicalModel, preparation_key, measurement, outcome: int) -> float:
    """p(b|M,P) = sum_k mu_P(k) xi_M(b|k). ``measurement`` is an index or a Povm."""
    mu = model.mu[model.key_for(preparation_key)]
    return float(mu @ model.response(measurement, outcome))


@dataclass
class ReproductionReport:
    passed: bool
    max_residual: float
    failures: list = field(default_factory=list)    # (prep index, measurement index, outcome, residual)


def verify_reproduction(model: OntologicalModel, bob_channel: MeasureAndPrepareChannel,
                        preparations: Sequence, measurements: Sequence[Povm],
                        tol: float = 1e-10) -> ReproductionReport:
    worst = 0.0
    failures = []
    for i, rho in enumerate(preparations):
        out = apply(bob_channel, rho)
        for j, m in enumerate(measurements):
            for b, f in enumerate(m):
                res = abs(model_predict(model, rho, m, b) - np.real(np.vdot(f, out)))
                worst = max(worst, res)
                if res > tol:
                    failures.append((i, j, b, res))
    return ReproductionReport(not failures, worst, failures)


@dataclass
class ContextReport:
    passed: bool
    pairs_checked: int
    failures: list = field(default_factory=list)    # (i, j, mu difference)


def check_context_respect(model: OntologicalModel, preparations: Sequence,
                          tol: float = 1e-10) -> ContextReport:
    dists = [model.pointer.probabilities(r) for r in preparations]
    mus = [model.mu[model.key_for(r)] for r in preparations]
    checked = 0
    failures = []
    for i in range(len(dists)):
        for j in range(i + 1, len(dists)):
            if np.max(np.abs(dists[i] - dists[j])) <= tol:
                checked += 1
                diff = float(np.max(np.abs(mus[i] - mus[j])))
                if diff > tol:
                    failures.append((i, j, diff))
    return ContextReport(not failures, checked, failures)


@dataclass
class CrossObserverReport:
    consistent: bool
    max_mu_difference: float
    ontic_sizes: list


def compare_bob_models(models: Sequence[OntologicalModel]) -> CrossObserverReport:
    """Do all observers share Lambda and mu? (They should: both depend only on the pointer.)"""
    sizes = [m.k_max for m in models]
    worst = 0.0
    consistent = len(set(sizes)) <= 1
    if models:
        ref = models[0]
        for m in models[1:]:
            for key, mu in ref.mu.items():
                try:
                    other = m.mu[m.key_for(key)]
                except KeyError:
                    consistent = False
                    continue
                if other.shape != mu.shape:
                    consistent = False
                    continue
                worst = max(worst, float(np.max(np.abs(other - mu))))
    return CrossObserverReport(consistent and worst <= PREP_KEY_TOL, worst, sizes)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def model_to_dict(model: OntologicalModel) -> dict:
    return {
        "ontic_labels": list(range(1, model.k_max + 1)),
        "pointer": [matrix_to_pairs(e, digits12=True) for e in model.pointer],
        "mu": [{"key": [sig12(v) for v in key], "mu": [sig12(v) for v in mu]}
               for key, mu in sorted(model.mu.items())],
        "xi": [{"digest": d, "effect": matrix_to_pairs(model.effects[d], digits12=True),
                "response": [sig12(v) for v in model.xi[d]]} for d in sorted(model.xi)],
        "measurements": [list(ds) for ds in model.measurements],
    }


def model_from_dict(data: dict) -> OntologicalModel:
    try:
        pointer = Povm([matrix_from_pairs(e, f"pointer[{i}]") for i, e in enumerate(data["pointer"])])
        mu = {tuple(float(v) for v in row["key"]): np.array(row["mu"], dtype=float) for row in data["mu"]}
        xi = {row["digest"]: np.array(row["response"], dtype=float) for row in data["xi"]}
        effects = {row["digest"]: matrix_from_pairs(row["effect"], f"xi[{row['digest']}].effect")
                   for row in data["xi"]}
        measurements = [list(ds) for ds in data["measurements"]]
        k_max = len(data["ontic_labels"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from None
    for ds in measurements:
        for d in ds:
            if d not in xi:
                raise ValidationError(f"measurement refers to unknown effect digest {d}")
    return OntologicalModel(k_max, pointer, mu, xi, effects, measurements)


def export_model(model: OntologicalModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def import_model(path) -> OntologicalModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
