"""
Where objectivity stops being certified
=======================================

Mixing the environment's encoding with white noise lowers eta = 1 - noise/2
until it meets the cut-off 0.75. At full noise the encoding states coincide,
and a convex decomposition with a zero weight (a Caratheodory witness) shows
why no simplex-based model is available there.
"""
from importlib import resources

import numpy as np

from darwin_certify import caratheodory_witness, is_affinely_independent, load_scenario
from darwin_certify.pipeline import sweep
from darwin_certify.qmath import ket_to_dm

scenario = load_scenario(resources.files("darwin_certify") / "scenarios" / "noisy_broadcast_qubit_t1.json")
rows, crossing = sweep(scenario, "noise", 0.0, 1.0, 11)

print(f"{'noise':>6} {'eta':>8} {'P_hat':>8} {'agree':>8} {'bound':>9}  verdict")
for r in rows:
    print(f"{r['value']:6.2f} {r['eta']:8.5f} {r['p_hat']:8.5f} {r['agreement']:8.5f} "
          f"{r['agreement_bound']:9.4f}  {r['verdict']}")
print("eta crosses P_hat between noise", crossing)

# affinely dependent family: four pure states on one great circle of the Bloch sphere
family = [ket_to_dm(v) for v in ([1, 0], [0, 1], [1, 1], [1, -1])]
print("independent:", bool(is_affinely_independent(family)))
q = caratheodory_witness(family, np.eye(2) / 2)
print("maximally mixed state with a zero weight:", np.round(q, 12))
