"""
Perfect decoherence: objectivity and a noncontextual model
==========================================================

A qubit is copied into three environment fragments in the computational
basis. Every observer can read the pointer perfectly (eta = 1), which beats
the cut-off P_hat = 1 - 1/(2d) = 0.75, so each observer's statistics admit a
noncontextual ontological model.
"""
import numpy as np

from darwin_certify import (BroadcastSpec, build_nc_model, classical_objectivity_verdict,
                            distinguishability_bound, eta, make_broadcast, reduce_to_bob, verify_reproduction)
from darwin_certify.qmath import ket_to_dm, qubit_sic_povm

channel = make_broadcast(BroadcastSpec(d_A=2, t=3))
print(f"channel: {channel.d_in} -> {channel.d_out}, {channel.k_max} pointer outcomes")

# worst-case guessing probability for each observer
bobs = [reduce_to_bob(channel, [2, 2, 2], j) for j in range(3)]
etas = [eta(b) for b in bobs]
for j, e in enumerate(etas):
    print(f"observer {j}: eta = {e.eta:.10f}  (certified gap {e.gap:.1e})")

cutoff = distinguishability_bound(channel.pointer)
print(f"cut-off P_hat = {cutoff.p_hat:.10f}, maximin = {cutoff.maximin:.6f}")

verdict = classical_objectivity_verdict(min(e.eta for e in etas), cutoff)
print("verdict:", verdict.value)

# the explicit model: mu from the pointer, xi from the encoding states
preparations = [ket_to_dm([1, 1]), ket_to_dm([1, 1j]), np.diag([0.9, 0.1])]
measurements = [etas[0].povm, qubit_sic_povm()]
model = build_nc_model(bobs[0], preparations, measurements)
for key, mu in model.mu.items():
    print(f"pointer distribution {key} -> mu = {np.round(mu, 6)}")
report = verify_reproduction(model, bobs[0], preparations, measurements)
print(f"model reproduces the statistics: {report.passed} (max residual {report.max_residual:.1e})")
