"""
Spectrum broadcast structure
============================

A joint state of the form sum_k p_k |k><k| (x) sigma_k (x) sigma_k with
orthogonal encodings is detected directly. Adding noise breaks the disjoint
supports, and the violation list says where.
"""
from importlib import resources

from darwin_certify import load_scenario
from darwin_certify.pipeline import ssb

root = resources.files("darwin_certify") / "scenarios"
for name in ("ssb_qubit", "ssb_noisy", "ssb_wrong_basis"):
    report = ssb(load_scenario(root / f"{name}.json"))
    print(f"{name}: spectrum broadcast form = {report['ssb']}")
    if report["ssb"]:
        cert = report["certification"]
        print(f"  P_hat = {cert['cutoff']['p_hat']}, verdict {cert['verdict']}, checks {report['checks']}")
    for v in report["violations"][:3]:
        print("  violation:", v)
