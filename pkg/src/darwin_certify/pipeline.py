"""End-to-end certification: channel -> per-observer eta -> cut-off -> verdict -> models.

Reports are plain dictionaries of JSON-ready values. Floats are rounded to 12
significant digits so identical inputs give byte-identical files.
"""
from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bounds import (Verdict, agreement_lower_bound, bph_deviation_bound, classical_objectivity_verdict,
                     distinguishability_bound, projective_bound)
from .channels import (FiniteEnvSpec, ideal_broadcast_for, is_ssb_form, reduce_to_bob,
                       simulate_finite_env)
from .ctx_bound import bob_choi, contextuality_distance_bound
from .discrimination import agreement_probability, eta
from .ontology import (build_nc_model, check_context_respect, compare_bob_models, export_model,
                       verify_reproduction)
from .qmath import sig12
from .scenario import Scenario, with_parameter
from .simplex_geometry import is_affinely_independent

THREADS_ENV = "DARWIN_CERTIFY_THREADS"


def _r(x):
    return sig12(x)


def state_digest(rho) -> str:
    r = np.round(np.asarray(rho, dtype=complex), 9)
    raw = np.ascontiguousarray(np.stack([r.real + 0.0, r.imag + 0.0]))
    return hashlib.sha256(raw.tobytes()).hexdigest()[:16]


def _measurements_for(scn: Scenario, j: int, optimal):
    return [optimal if m == "optimal" else m for m in scn.measurements[j]]


def certify(scn: Scenario, out_stem: str | None = None, tol: float | None = None,
            build_models: bool = True) -> dict:
    """Run the full pipeline; model files are written only when ``out_stem`` is given."""
    tol = scn.tolerances["solver"] if tol is None else tol
    cert_tol = scn.tolerances["certificate"]
    ch = scn.channel
    bobs = [reduce_to_bob(ch, scn.bob_dims, j) for j in range(scn.t)]
    etas = [eta(b, tol=tol) for b in bobs]
    cutoff = distinguishability_bound(ch.pointer, tol=tol)
    eta_min = min(e.eta for e in etas)
    eta_gap = max(e.gap for e in etas)
    band = (max(cert_tol, eta_gap), max(cert_tol, cutoff.gap))
    verdict = classical_objectivity_verdict(min(1.0, eta_min), cutoff, solver_tols=band)

    report = {
        "scenario": scn.name,
        "seed": scn.seed,
        "d_A": ch.d_in,
        "bob_dims": list(scn.bob_dims),
        "t": scn.t,
        "cutoff": {"p_hat": _r(cutoff.p_hat), "gap": _r(cutoff.gap / 2), "maximin": _r(cutoff.maximin),
                   "dual_weights": [_r(w) for w in cutoff.optimal_weights], "boundary": cutoff.boundary},
        "eta": {"value": _r(eta_min), "gap": _r(eta_gap)},
        "verdict": verdict.value,
        "bobs": [],
    }
    independent_all = True
    for j, (b, e) in enumerate(zip(bobs, etas)):
        ind = is_affinely_independent(b.prepared, scn.tolerances["rank"])
        independent_all &= ind.independent
        report["bobs"].append({
            "index": j,
            "eta": _r(e.eta), "eta_upper": _r(e.upper), "gap": _r(e.gap),
            "worst_state_digest": state_digest(e.worst_state),
            "affinely_independent": ind.independent, "rank": ind.rank, "rank_marginal": ind.marginal,
        })

    agree = agreement_probability(ch, scn.bob_dims, [e.povm for e in etas])
    report["agreement"] = {"probability": _r(agree),
                           "lower_bound": _r(agreement_lower_bound(scn.t, min(1.0, eta_min)))}

    models = []
    if build_models and independent_all:
        for j, (b, e) in enumerate(zip(bobs, etas)):
            meas = _measurements_for(scn, j, e.povm)
            model = build_nc_model(b, scn.preparations, meas, scn.tolerances["rank"])
            rep = verify_reproduction(model, b, scn.preparations, meas)
            ctx = check_context_respect(model, scn.preparations)
            entry = report["bobs"][j]
            entry["model"] = {"built": True, "max_residual": _r(rep.max_residual), "reproduces": rep.passed,
                              "context_respected": ctx.passed, "equivalent_pairs": ctx.pairs_checked}
            if out_stem is not None:
                path = f"{out_stem}.model.bob{j}.json"
                export_model(model, path)
                entry["model"]["path"] = os.path.basename(path)
            models.append(model)
        cross = compare_bob_models(models)
        report["models_consistent_across_bobs"] = cross.consistent
    else:
        for entry in report["bobs"]:
            entry["model"] = {"built": False}

    if isinstance(scn.dynamics, FiniteEnvSpec):
        report["finite_env"] = finite_env_block(scn, etas, tol)
    return report


def finite_env_block(scn: Scenario, etas, tol: float) -> dict:
    spec = scn.dynamics
    j_full = simulate_finite_env(spec)
    ideal = ideal_broadcast_for(spec)
    rows = []
    for j in range(spec.t):
        jb = bob_choi(j_full, 2, scn.bob_dims, j)
        ib = reduce_to_bob(ideal, scn.bob_dims, j)
        meas = _measurements_for(scn, j, etas[j].povm)
        dev = contextuality_distance_bound(jb, ib, meas, scn.preparations, 2, tol=max(tol, 1e-9))
        rows.append({"index": j, "diamond": _r(dev.diamond), "diamond_gap": _r(dev.diamond_gap),
                     "C": _r(dev.C), "l1_bound": _r(dev.bound), "observed_l1": _r(dev.observed_l1),
                     "chain_consistent": dev.consistent})
    delta = scn.tolerances["bph_delta"]
    return {"N": spec.N, "S_t": list(spec.S_t), "coupling_angle": [_r(a) for a in spec.coupling_angle],
            "bph_bound": _r(bph_deviation_bound(2, spec.t, spec.N, delta)), "bph_delta": delta,
            "bobs": rows}


def exit_status(verdict: str) -> int:
    return {Verdict.EMERGED.value: 0, Verdict.NOT_CERTIFIED.value: 1, Verdict.MARGINAL.value: 3}[verdict]


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ["index", "value", "eta", "eta_gap", "p_hat", "verdict", "agreement", "agreement_bound",
                 "independent", "diamond"]


def _sweep_point(scn: Scenario, param: str, index: int, value: float, tol) -> dict:
    point = with_parameter(scn, param, value)
    rep = certify(point, out_stem=None, tol=tol, build_models=False)
    diamond = ""
    if "finite_env" in rep:
        diamond = max(b["diamond"] for b in rep["finite_env"]["bobs"])
    return {"index": index, "value": value, "eta": rep["eta"]["value"], "eta_gap": rep["eta"]["gap"],
            "p_hat": rep["cutoff"]["p_hat"], "verdict": rep["verdict"],
            "agreement": rep["agreement"]["probability"], "agreement_bound": rep["agreement"]["lower_bound"],
            "independent": all(b["affinely_independent"] for b in rep["bobs"]), "diamond": diamond}


def thread_count() -> int | None:
    val = os.environ.get(THREADS_ENV)
    if val is None:
        return None
    try:
        n = int(val)
    except ValueError:
        return None
    return max(1, n)


def sweep(scn: Scenario, param: str, start: float, stop: float, steps: int, tol: float | None = None):
    """Rows ordered by grid index, plus the interval where eta crosses P_hat (or None)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    grid = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
    if param == "N":
        grid = np.round(grid)
    with_parameter(scn, param, grid[0])      # reject bad parameters before spawning work
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(lambda iv: _sweep_point(scn, param, iv[0], float(iv[1]), tol), enumerate(grid)))
    return rows, crossing(rows)


def crossing(rows) -> tuple | None:
    for a, b in zip(rows, rows[1:]):
        sa = a["eta"] - a["p_hat"]
        sb = b["eta"] - b["p_hat"]
        if (sa > 0) != (sb > 0):
            return (a["value"], b["value"])
    return None


def write_table(rows, path) -> None:
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return f"{v:.12g}"
        return str(v)

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in SWEEP_COLUMNS) + "\n")


# ---------------------------------------------------------------------------
# spectrum broadcasting
# ---------------------------------------------------------------------------

def ssb(scn: Scenario, out_stem: str | None = None, tol: float | None = None) -> dict:
    """Detect spectrum-broadcast form; on success run the corollary path for every factor."""
    rep = is_ssb_form(scn.pointer_basis, scn.channel, scn.bob_dims, tol=1e-8)
    out = {"scenario": scn.name, "ssb": rep.is_ssb, "violations": [list(map(_plain, v)) for v in rep.violations]}
    if not rep.is_ssb:
        return out
    full = certify(scn, out_stem=out_stem, tol=tol)
    d = scn.channel.d_in
    out["certification"] = full
    out["checks"] = {
        "eta_is_one": all(abs(b["eta"] - 1.0) <= 1e-9 for b in full["bobs"]),
        "p_hat_projective": abs(full["cutoff"]["p_hat"] - projective_bound(d)) <= 1e-6,
        "emerged": full["verdict"] == Verdict.EMERGED.value,
        "models_built": all(b["model"].get("built") for b in full["bobs"]),
    }
    return out


def _plain(v):
    if isinstance(v, (float, np.floating)):
        return _r(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def report_rows(report: dict) -> list[dict]:
    """Tabular (per observer) view of a certification report."""
    rows = []
    for b in report["bobs"]:
        rows.append({"bob": b["index"], "eta": b["eta"], "eta_gap": b["gap"],
                     "p_hat": report["cutoff"]["p_hat"], "p_hat_gap": report["cutoff"]["gap"],
                     "verdict": report["verdict"], "independent": b["affinely_independent"],
                     "rank_marginal": b["rank_marginal"],
                     "max_residual": b["model"].get("max_residual", "")})
    return rows


def stem_of(path) -> str:
    p = Path(path)
    return str(p.with_suffix("")) if p.suffix else str(p)
