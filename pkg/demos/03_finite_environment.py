"""
A finite environment and the diamond-norm bound
===============================================

Each of N environment qubits is coupled to the system by a controlled
rotation. At coupling pi/2 the fragments hold perfect copies; at smaller
couplings the observed channel deviates from the ideal broadcast, and the
contextuality distance is bounded by (C / d_A) times the diamond distance.
"""
import numpy as np

from darwin_certify.channels import FiniteEnvSpec, ideal_broadcast_for, reduce_to_bob, simulate_finite_env
from darwin_certify.ctx_bound import bob_choi, contextuality_distance_bound
from darwin_certify.qmath import basis_povm, qubit_sic_povm, random_density

rng = np.random.default_rng(7)
preparations = [random_density(2, rng) for _ in range(6)]
measurements = [basis_povm(2), qubit_sic_povm()]

print(f"{'angle':>7} {'diamond':>9} {'C':>4} {'bound':>9} {'observed':>9}")
for angle in np.linspace(0, np.pi / 2, 7):
    spec = FiniteEnvSpec(N=3, S_t=(0, 1), coupling_angle=angle)
    ideal = ideal_broadcast_for(spec)
    j = bob_choi(simulate_finite_env(spec), 2, [2, 2], 0)
    dev = contextuality_distance_bound(j, reduce_to_bob(ideal, [2, 2], 0), measurements, preparations, 2)
    print(f"{angle:7.4f} {dev.diamond:9.6f} {dev.C:4.1f} {dev.bound:9.6f} {dev.observed_l1:9.6f}")
