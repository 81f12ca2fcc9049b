"""Experiment runners behind the command line.

Each ``run_*`` returns an :class:`Outcome`: the JSON-ready report, CSV side
files keyed by file name, and wall-clock timings.  Timings are kept out of
the report so that a fixed (config, seed) pair always produces the same
report bytes.
"""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .commutant import commutator_residual, commutant_basis, star_commutant_basis
from .config import ExperimentConfig
from .lattice import DISCRETE, match_minimal_to_residues, reducing_lattice, verify_reducing
from .operators import interior_slice, matrix_csv, self_commutator, shift_matrix, shift_power
from .report import SCHEMA_VERSION, check
from .spaces import LaurentSeries, classify_weights, make_weights


@dataclass
class Outcome:
    report: dict
    side_files: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.report["passed"])


@contextmanager
def _timed(timings: dict, key: str):
    t0 = time.perf_counter()
    yield
    timings[key] = time.perf_counter() - t0


def _weights(cfg: ExperimentConfig):
    return make_weights(cfg.space, cfg.window)


def _kernel_weights(cfg: ExperimentConfig):
    """Wide window for kernel and curvature work; custom data keeps its own window."""
    if cfg.space.name == "custom":
        return _weights(cfg)
    k = max(cfg.grid.kernel_window, max(abs(cfg.window[0]), abs(cfg.window[1])))
    return make_weights(cfg.space, (-k, k))


def _r_hint(cfg: ExperimentConfig, w) -> float:
    if cfg.space.r is not None:
        return cfg.space.r
    return geo.spectrum_estimate(w).inner_radius


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

def _classify_section(cfg, w, checks, side):
    cls = classify_weights(w, _r_hint(cfg, w), tol=1e-2)
    A = shift_matrix(w)
    comm = self_commutator(A).matrix
    inner = comm[interior_slice(A, 1), interior_slice(A, 1)]
    eig = np.linalg.eigvalsh(inner)
    spec = geo.spectrum_estimate(w)
    side["weights.csv"] = geo.weights_csv(w)
    checks.append(check("strict_implies_monotone", cls.strictly_increasing <= cls.monotone_increasing,
                        None, (not cls.strictly_increasing) or cls.monotone_increasing))
    return {
        "r_hint": _r_hint(cfg, w),
        "classification": cls.as_dict(),
        "self_commutator_interior": {"min_eigenvalue": float(eig.min()), "max_eigenvalue": float(eig.max()),
                                     "floor": 1e-12, "strictly_positive": bool(eig.min() > 1e-12)},
        "spectrum": {"inner_radius": spec.inner_radius, "outer_radius": spec.outer_radius},
        "weights_file": "weights.csv",
    }


def _lattice_section(cfg, w, checks, side, emit):
    tol = cfg.tolerances
    A = shift_power(w, cfg.n)
    plain = commutant_basis(A, tol.rank_tol)
    star = star_commutant_basis(A, tol.rank_tol)
    lat = reducing_lattice(A, tol.rank_tol, seed=cfg.seed, basis=star, verify_tol=tol.verify_tol)
    a = A.matrix
    worst_elem = max((max(commutator_residual(x, a), commutator_residual(x, a.T.conj())) for x in star.elements),
                     default=0.0)
    checks.append(check("star_commutant_residual", worst_elem, tol.verify_tol, worst_elem <= tol.verify_tol))
    checks.append(check("star_commutant_gap_ratio", star.gap_ratio, tol.gap_min, star.gap_ratio >= tol.gap_min))
    out = {
        "operator_window": [A.basis_lo, A.basis_hi],
        "commutant_dim": plain.dim,
        "commutant_gap_ratio": plain.gap_ratio,
        "star_commutant_dim": star.dim,
        "star_commutant_gap_ratio": {"value": star.gap_ratio, "min": tol.gap_min},
        "solver": star.method,
        "kind": lat.kind,
    }
    if emit:
        side["operator.csv"] = matrix_csv(A)
        out["operator_file"] = "operator.csv"
    if lat.kind == DISCRETE:
        members = []
        worst = 0.0
        for bits, p in lat.members:
            rep = verify_reducing(p, A, tol.verify_tol)
            worst = max(worst, rep.idempotent, rep.selfadjoint, rep.commutes, rep.commutes_adjoint)
            members.append({"bitmask": bits, **rep.as_dict()})
        out["member_count"] = len(lat.members)
        out["minimal_count"] = len(lat.minimal_projections)
        out["members"] = members
        checks.append(check("members_reducing", worst, tol.verify_tol, worst <= tol.verify_tol))
        if len(lat.minimal_projections) == cfg.n:
            matches = match_minimal_to_residues(lat, cfg.n, A)
            md = max(m.distance for m in matches)
            out["residue_matches"] = [{"projection": m.projection, "residue": m.residue, "distance": m.distance}
                                      for m in matches]
            checks.append(check("minimal_match_residues", md, tol.match_tol, md < tol.match_tol))
        if emit:
            for k, p in enumerate(lat.minimal_projections):
                side[f"minimal_{k}.csv"] = matrix_csv(np.where(np.abs(p) > 1e-14, p, 0), A.basis_lo)
            out["minimal_files"] = [f"minimal_{k}.csv" for k in range(len(lat.minimal_projections))]
    else:
        out["algebra_dims"] = lat.algebra_dims
    out["diagnostics"] = {k: v for k, v in lat.diagnostics.items() if k != "method"}
    return out


def _equivalence_section(cfg, w, checks, rng):
    tol = cfg.tolerances
    n = cfg.n
    rw = [geo.restriction_weights(w, n, i) for i in range(n)]
    table = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            k = geo.weights_align(rw[i], rw[j], tol.align_tol)
            table.append({"i": i, "j": j, "shift": k})
            if k is not None:
                # sound alignment: the two shifts coincide after relabelling
                v, u = rw[i], rw[j]
                m = np.arange(v.size)
                ok = (m + k >= 0) & (m + k < u.size)
                err = float(np.max(np.abs(v[m[ok]] - u[m[ok] + k])))
                checks.append(check(f"alignment_sound_{i}_{j}", err, tol.align_tol, err <= tol.align_tol))
    # positive control: random lists against shifted copies of themselves
    recovered = []
    for _ in range(20):
        v = rng.uniform(0.5, 2.0, 40)
        k = int(rng.integers(-5, 6))
        a = v[5:35]
        b = v[5 - k:35 - k]
        recovered.append({"shift": k, "found": geo.weights_align(a, b, tol.align_tol)})
    ctrl_ok = all(r["found"] == r["shift"] for r in recovered)
    checks.append(check("alignment_positive_control", sum(r["found"] == r["shift"] for r in recovered),
                        tol.align_tol, ctrl_ok, trials=len(recovered)))
    return {
        "restriction_weights": [list(map(float, x)) for x in rw],
        "pairs": table,
        "pairwise_inequivalent": all(t["shift"] is None for t in table),
        "positive_control": recovered,
        "align_tol": tol.align_tol,
    }


def _no_interior(wk):
    """Reason string when the estimated spectrum has no open annulus for kernels."""
    spec = geo.spectrum_estimate(wk)
    lo = 0.0 if spec.unilateral else spec.inner_radius
    if lo * (1 + 2 * geo.KERNEL_MARGIN) >= spec.outer_radius * (1 - 2 * geo.KERNEL_MARGIN):
        return (f"estimated spectrum {lo:.6g} <= |z| <= {spec.outer_radius:.6g} has no interior; "
                "point evaluations are unbounded and there is no kernel to study")
    return None


def _skipped(wk, reason):
    return {"kernel_window": [wk.window_lo, wk.window_hi], "skipped": True, "reason": reason}


def _kernel_section(cfg, checks, rng):
    tol = cfg.tolerances
    wk = _kernel_weights(cfg)
    reason = _no_interior(wk)
    if reason:
        return _skipped(wk, reason)
    spec = geo.spectrum_estimate(wk)
    lo_r = 0.0 if spec.unilateral else spec.inner_radius
    span = spec.outer_radius - lo_r
    a, b = lo_r + 0.1 * span, spec.outer_radius - 0.1 * span
    worst = 0.0
    for _ in range(20):
        f = LaurentSeries({m: complex(rng.normal(), rng.normal()) for m in range(-5, 6)
                           if wk.window_lo <= m <= wk.window_hi})
        for _ in range(10):
            z = rng.uniform(a, b) * np.exp(2j * np.pi * rng.uniform())
            kv = geo.kernel(wk, z)
            worst = max(worst, abs(kv.pair(f) - f(z)))
    checks.append(check("reproducing_property", worst, 1e-6, worst <= 1e-6))
    reports = []
    for lam in cfg.grid.points:
        rep = geo.kernel_nullspace_check(wk, cfg.n, lam, tol.kernel_tol)
        reports.append(rep.as_dict())
        checks.append(check(f"kernel_nullspace_{complex(lam)}", max(rep.residuals), tol.kernel_tol,
                            rep.status != "fail", status=rep.status))
    return {
        "kernel_window": [wk.window_lo, wk.window_hi],
        "spectrum": {"inner_radius": spec.inner_radius, "outer_radius": spec.outer_radius},
        "sample_annulus": [a, b],
        "reproducing_max_error": {"value": worst, "tol": 1e-6},
        "nullspace": reports,
    }


def _curvature_section(cfg, checks, side):
    g = cfg.grid
    wk = _kernel_weights(cfg)
    reason = _no_interior(wk)
    if reason:
        return _skipped(wk, reason)
    field_ = geo.curvature_field(wk, geo.GridSpec(g.radii, g.angles), g.h)
    side["curvature.csv"] = field_.to_csv()
    neg = float(field_.values.max())
    checks.append(check("curvature_negative", neg, 0.0, neg < 0))
    z0 = complex(field_.grid[0])
    ratio = geo.richardson_ratio(wk, z0, 4 * g.h)
    checks.append(check("richardson_ratio", ratio, 0.8, abs(ratio - 4) <= 0.8))
    cmp_ = geo.restriction_curvatures_distinct(wk, cfg.n, list(g.compare), g.compare_h)
    return {
        "kernel_window": [wk.window_lo, wk.window_hi],
        "h": g.h,
        "points": len(field_.grid),
        "max_value": neg,
        "min_value": float(field_.values.min()),
        "max_tail_ratio": field_.max_tail,
        "richardson": {"point": [z0.real, z0.imag], "h": 4 * g.h, "ratio": ratio, "target": 4, "tol": 0.8},
        "restriction_comparison": cmp_.as_dict(),
        "field_file": "curvature.csv",
    }


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

SECTIONS = ("classify", "lattice", "equivalence", "kernel", "curvature")


def run(cfg: ExperimentConfig, sections, *, command: str, emit_matrices: bool = False) -> Outcome:
    rng = np.random.default_rng(cfg.seed)
    w = _weights(cfg)
    checks: list = []
    side: dict = {}
    timings: dict = {}
    report = {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg.echo()}
    for name in sections:
        with _timed(timings, name):
            if name == "classify":
                report[name] = _classify_section(cfg, w, checks, side)
            elif name == "lattice":
                report[name] = _lattice_section(cfg, w, checks, side, emit_matrices)
            elif name == "equivalence":
                report[name] = _equivalence_section(cfg, w, checks, rng)
            elif name == "kernel":
                report[name] = _kernel_section(cfg, checks, rng)
            elif name == "curvature":
                report[name] = _curvature_section(cfg, checks, side)
            else:
                raise ValueError(f"unknown section {name!r}")
    report["verifications"] = checks
    report["passed"] = all(c["passed"] for c in checks)
    report["side_files"] = sorted(side)
    return Outcome(report, side, timings)


def run_lattice(cfg, **kw) -> Outcome:
    return run(cfg, ("lattice",), command="lattice", **kw)


def run_classify(cfg, **kw) -> Outcome:
    return run(cfg, ("classify",), command="classify", **kw)


def run_equivalence(cfg, **kw) -> Outcome:
    return run(cfg, ("equivalence",), command="equivalence", **kw)


def run_kernel(cfg, **kw) -> Outcome:
    return run(cfg, ("kernel",), command="kernel", **kw)


def run_curvature(cfg, **kw) -> Outcome:
    return run(cfg, ("curvature",), command="curvature", **kw)


def run_all(cfg, **kw) -> Outcome:
    return run(cfg, SECTIONS, command="all", **kw)


RUNNERS = {
    "lattice": run_lattice,
    "classify": run_classify,
    "equivalence": run_equivalence,
    "kernel": run_kernel,
    "curvature": run_curvature,
    "all": run_all,
}
