"""Command line: ``cspi <command> --config run.json --out results/``.

Each run writes CSV tables, a deterministic ``summary.json`` (config hash,
package versions, assertion outcomes) and a separate ``timings.json``.

Exit codes: 0 all assertions pass, 2 configuration error, 3 tolerance
failure, 4 numerical-quality failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .coherent import CanonicalFamily, coherent_vectors, overlap_closed_form
from .config import SCHEMAS, load_config, parse_operator, parse_symbol
from .constraints import (ConstraintSet, constrained_evolution, default_delta, invariance_defect,
                          physical_projector, projector_rank)
from .errors import AmbiguousCutoff, ConfigError, CSPIError, FitQualityError, ResolutionError, TruncationError
from .fock import build_operator_set
from .propagation.chain import kernel_values
from .propagation.extrapolate import nu_extrapolate
from .propagation.grid import PhaseGrid, grid_kernel
from .propagation.lattice import LatticeSpec
from .propagation.montecarlo import mc_kernel
from .transforms import LinearSymplectic, PointTransform, covariant_pair, point_transform_report

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_QUALITY = 0, 2, 3, 4


class Report:
    def __init__(self):
        self.tables = {}
        self.assertions = {}
        self.results = {}
        self.quality_failure = None

    def table(self, name, header, rows):
        self.tables[name] = (header, rows)

    def check(self, name, passed, **detail):
        self.assertions[name] = {"passed": bool(passed), **detail}


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".16e")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# commands


def cmd_overlap(cfg, report: Report):
    if cfg.points is not None:
        pts = np.array(cfg.points, float).reshape(-1, 4)
    else:
        axis = np.linspace(cfg.grid.lo, cfg.grid.hi, cfg.grid.n)
        pts = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), -1).reshape(-1, 4)
    header = ["p2", "q2", "p1", "q1", "re_closed", "im_closed", "re_fock", "im_fock", "abs_err", "truncated"]
    if pts.size == 0:
        report.table("overlap", header, [])
        report.check("max_abs_err", True, value=0.0, tolerance=cfg.tolerance)
        return
    ops = build_operator_set(cfg.dim)
    labels = np.concatenate([pts[:, :2], pts[:, 2:]])
    uniq, inverse = np.unique(labels, axis=0, return_inverse=True)
    V = coherent_vectors(CanonicalFamily(), uniq[:, 0], uniq[:, 1], ops, check=False)
    m = max(2, cfg.dim // 8)
    defect = np.sum(np.abs(V[:, -m:]) ** 2, axis=1) + np.abs(np.linalg.norm(V, axis=1) - 1)
    inverse = inverse.ravel()
    i2, i1 = inverse[: len(pts)], inverse[len(pts):]
    fock = np.einsum("ij,ij->i", V[i2].conj(), V[i1])
    closed = overlap_closed_form(pts[:, :2].T, pts[:, 2:].T)
    err = np.abs(fock - closed)
    truncated = (defect[i2] > 1e-6) | (defect[i1] > 1e-6)
    rows = [[*pt, c.real, c.imag, f.real, f.imag, e, t] for pt, c, f, e, t in zip(pts, closed, fock, err, truncated)]
    report.table("overlap", header, rows)
    ok = err[~truncated]
    worst = float(ok.max()) if ok.size else 0.0
    report.check("max_abs_err", worst <= cfg.tolerance, value=worst, tolerance=cfg.tolerance,
                 truncated_rows=int(truncated.sum()))


def cmd_nu_sweep(cfg, report: Report):
    pairs = cfg.endpoints
    finals = np.array([f for f, _ in pairs], float)
    initials = np.array([i for _, i in pairs], float)
    exact = overlap_closed_form(finals.T, initials.T)
    values = {nu: kernel_values(LatticeSpec(nu, cfg.T, cfg.N), finals, initials) for nu in cfg.nus}
    rows = []
    for j, (f, i) in enumerate(pairs):
        for nu in cfg.nus:
            v = values[nu][j]
            rows.append([j, *f, *i, nu, v.real, v.imag, abs(v - exact[j])])
    report.table("nu_sweep", ["pair", "p2", "q2", "p1", "q1", "nu", "re", "im", "abs_err_closed"], rows)
    fits, fit_rows = [], []
    for j in range(len(pairs)):
        fit = nu_extrapolate([(nu, values[nu][j]) for nu in cfg.nus], cfg.T)
        fits.append(fit)
        fit_rows.append([j, fit.limit.real, fit.limit.imag, abs(fit.limit - exact[j]), fit.gap, fit.residual])
    report.table("fit", ["pair", "re_limit", "im_limit", "abs_err_limit", "gap", "residual"], fit_rows)
    lim_err = max(abs(f.limit - e) for f, e in zip(fits, exact))
    gaps = [f.gap for f in fits]
    gap_dev = max(abs(g - cfg.gap_expected) / cfg.gap_expected for g in gaps)
    report.check("limit", lim_err <= cfg.limit_tolerance, value=lim_err, tolerance=cfg.limit_tolerance)
    report.check("gap", gap_dev <= cfg.gap_rtol, fitted=gaps, expected=cfg.gap_expected, rtol=cfg.gap_rtol)


def cmd_crosscheck(cfg, report: Report):
    lat = cfg.lattice
    spec = LatticeSpec(lat.nu, lat.T, lat.N)
    grid = PhaseGrid(cfg.grid_L, cfg.grid_spacing)
    rows, worst, warnings_seen = [], 0.0, 0
    passed = True
    for j, (f, i) in enumerate(cfg.cases):
        g = complex(kernel_values(spec, f, i))
        gr = grid_kernel(spec, (f, i), grid).value
        case_seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(j,)).generate_state(1, np.uint64)[0])
        mc = mc_kernel(spec, (f, i), samples=cfg.samples, seed=case_seed, chunk=cfg.chunk, threads=cfg.threads)
        warnings_seen += mc.warning is not None
        tol_mc = max(cfg.tolerance, 3 * mc.stderr)
        d_gg, d_gm, d_rm = abs(g - gr), abs(g - mc.value), abs(gr - mc.value)
        ok = d_gg <= cfg.tolerance and d_gm <= tol_mc and d_rm <= tol_mc
        passed &= ok
        worst = max(worst, d_gg)
        rows.append([j, *f, *i, g.real, g.imag, gr.real, gr.imag, mc.value.real, mc.value.imag, mc.stderr,
                     d_gg, d_gm, d_rm, tol_mc, ok])
    header = ["case", "p2", "q2", "p1", "q1", "re_gauss", "im_gauss", "re_grid", "im_grid", "re_mc", "im_mc",
              "mc_stderr", "dev_gauss_grid", "dev_gauss_mc", "dev_grid_mc", "mc_tolerance", "pass"]
    report.table("crosscheck", header, rows)
    report.check("backends_agree", passed, max_gauss_grid=worst, tolerance=cfg.tolerance,
                 mc_quality_warnings=warnings_seen)


def cmd_constrain(cfg, report: Report):
    ops = build_operator_set(cfg.dim)
    phis = tuple(parse_operator(e).to_matrix(ops) for e in cfg.constraints)
    metric = np.eye(len(phis)) if cfg.metric is None else np.array(cfg.metric, float)
    delta = cfg.delta if cfg.delta is not None else default_delta(phis, metric)
    try:
        cs = ConstraintSet(phis, metric, delta)
    except CSPIError as exc:
        raise ConfigError(str(exc)) from None
    H = parse_operator(cfg.hamiltonian).to_matrix(ops)
    E = physical_projector(cs)
    rank = projector_rank(E)
    idem = float(np.max(np.abs(E @ E - E)))
    herm = float(np.max(np.abs(E - E.conj().T)))
    inv = invariance_defect(H, E, cfg.T)
    U = constrained_evolution(H, E, cfg.T)
    pts = np.array([z for pair in cfg.endpoints for z in pair], float).reshape(-1, 2)
    V = coherent_vectors(CanonicalFamily(), pts[:, 0], pts[:, 1], ops)
    values = [V[2 * j].conj() @ U @ V[2 * j + 1] for j in range(len(cfg.endpoints))]
    rows = [[j, *f, *i, v.real, v.imag] for j, ((f, i), v) in enumerate(zip(cfg.endpoints, values))]
    header = ["pair", "p2", "q2", "p1", "q1", "re_value", "im_value"]
    report.results.update(rank=rank, delta=delta)
    report.check("idempotence", idem <= cfg.tolerance, value=idem, tolerance=cfg.tolerance)
    report.check("hermiticity", herm <= cfg.tolerance, value=herm, tolerance=cfg.tolerance)
    report.check("invariance", inv <= cfg.tolerance, value=inv, tolerance=cfg.tolerance)
    if rank == 1:
        w, vecs = np.linalg.eigh(E)
        v = vecs[:, -1]
        phase = np.exp(-1j * (v.conj() @ H @ v).real * cfg.T)
        ref = [phase * (V[2 * j].conj() @ v) * (v.conj() @ V[2 * j + 1]) for j in range(len(cfg.endpoints))]
        fact = max((abs(a - b) for a, b in zip(values, ref)), default=0.0)
        for row, r in zip(rows, ref):
            row += [r.real, r.imag]
        header += ["re_rank1", "im_rank1"]
        report.check("rank1_factorization", fact <= cfg.factorization_tolerance, value=fact,
                     tolerance=cfg.factorization_tolerance)
    report.table("constrain", header, rows)


def cmd_covariance(cfg, report: Report):
    lat = cfg.lattice
    spec = LatticeSpec(lat.nu, lat.T, lat.N)
    h = parse_symbol(cfg.hamiltonian) if cfg.hamiltonian else None
    if cfg.mode == "point":
        kappa = cfg.kappa
        t = PointTransform(lambda q: q + kappa * q**3, lambda q: 1 + 3 * kappa * q**2)
        rows = []
        for j, pair in enumerate(cfg.endpoints):
            for N in cfg.point_Ns:
                rep = point_transform_report(t, LatticeSpec(lat.nu, lat.T, N), pair, cfg.samples, cfg.seed)
                rows.append([j, *pair[0], *pair[1], N, rep["midpoint_mismatch"], rep["leftpoint_mismatch"]])
        report.table("covariance", ["pair", "p2", "q2", "p1", "q1", "N", "midpoint_mismatch",
                                    "leftpoint_mismatch"], rows)
        report.results["note"] = "no exactness asserted"
        return
    maps = ([(th, LinearSymplectic.rotation(th)) for th in cfg.thetas] if cfg.mode == "rotation"
            else [(cfg.lam, LinearSymplectic.scale(cfg.lam))])
    rows, worst = [], 0.0
    for param, t in maps:
        for j, pair in enumerate(cfg.endpoints):
            a, b = covariant_pair(t, spec, pair, h)
            worst = max(worst, abs(a - b))
            rows.append([param, j, *pair[0], *pair[1], a.real, a.imag, b.real, b.imag, abs(a - b)])
    report.table("covariance", ["parameter", "pair", "p2", "q2", "p1", "q1", "re_original", "im_original",
                                "re_mapped", "im_mapped", "residual"], rows)
    report.check("covariance", worst <= cfg.tolerance, value=worst, tolerance=cfg.tolerance)


COMMANDS = {
    "overlap": cmd_overlap,
    "nu-sweep": cmd_nu_sweep,
    "crosscheck": cmd_crosscheck,
    "constrain": cmd_constrain,
    "covariance": cmd_covariance,
}


# ---------------------------------------------------------------------------
# driver


def _write(out: Path, command, cfg, raw, report: Report, elapsed):
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in report.tables.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    summary = {
        "command": command,
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "config": cfg.model_dump(mode="json"),
        "versions": {"cspi": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "assertions": report.assertions,
        "passed": all(a["passed"] for a in report.assertions.values()) and report.quality_failure is None,
        "quality_failure": report.quality_failure,
        "results": report.results,
    }
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    (out / "timings.json").write_text(json.dumps({"elapsed_seconds": elapsed}, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cspi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCHEMAS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, raw = load_config(args.command, args.config)
        overrides = {k: v for k, v in (("seed", args.seed), ("threads", args.threads)) if v is not None}
        if overrides:
            cfg = SCHEMAS[args.command].model_validate({**cfg.model_dump(), **overrides})
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = Report()
    start = time.perf_counter()
    try:
        COMMANDS[args.command](cfg, report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitQualityError, AmbiguousCutoff, ResolutionError, TruncationError) as exc:
        report.quality_failure = f"{type(exc).__name__}: {exc}"
        print(f"numerical quality failure: {report.quality_failure}", file=sys.stderr)
    elapsed = time.perf_counter() - start
    _write(args.out, args.command, cfg, raw, report, elapsed)

    if report.quality_failure is not None:
        return EXIT_QUALITY
    failed = [k for k, a in report.assertions.items() if not a["passed"]]
    for k in failed:
        print(f"FAIL {k}: {json.dumps(_jsonable(report.assertions[k]))}", file=sys.stderr)
    return EXIT_TOLERANCE if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
