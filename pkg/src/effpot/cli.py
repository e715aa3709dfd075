"""``effpot`` command line entry point.

Usage: ``effpot <subcommand> --config <path> [--out <dir>] [--depth k]
[--tol x] [--max-iter n]``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
non-convergence (flagged partial results are still written), 3 a failed
verification.  Every failure also writes ``error.json`` to the output
directory.
"""

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config
from .effective import apply_G_plus, effective_family, solve_fixed_point
from .ergopt import (
    build_cost_table,
    pair_graph_cycle,
    subaction_family,
    transshipment_lp,
    verify_triple_equality,
)
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    EffpotError,
    NoConvergenceError,
    VerificationError,
)
from .potentials import XPotential, norm_report
from .sft import format_word
from .transfer import equilibrium, ks_entropy, pressure
from .zerotemp import additive_eigen, beta_sweep, extrapolate_c, accumulation_values

SUBCOMMANDS = (
    "validate",
    "pressure",
    "equilibrium",
    "effective",
    "sweep",
    "zerotemp",
    "subaction",
    "transship",
    "verify",
    "report",
)
SWEEP_COLUMNS = ("beta", "lambda_over_beta", "lip_phi_over_beta", "iterations", "converged")

EXIT_OK, EXIT_USAGE, EXIT_NOCONV, EXIT_VERIFY = 0, 1, 2, 3


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, XPotential):
        return obj.to_dict()
    return obj


def dumps(obj):
    # repr of a float is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2) + "\n"


class Run:
    """One CLI invocation: holds the config, output dir, timings and flags."""

    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = Path(out)
        self.timings = {}
        self.flags = {}
        self.files = []
        self._cache = {}

    @property
    def A(self):
        return self.cfg.A

    @property
    def solver(self):
        return self.cfg.solver

    def timed(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def write_json(self, name, obj):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(dumps(obj))
        self.files.append(name)

    # -- cached computations shared by report/verify/etc.

    def fixed_point(self):
        if "fp" not in self._cache:
            try:
                fp = self.timed(
                    "fixed_point",
                    solve_fixed_point,
                    self.A,
                    w0=self.cfg.w0,
                    tol=self.solver["tol"],
                    max_iter=self.solver["max_iter"],
                    accel=self.solver["accel"],
                    depth=self.solver["depth"],
                )
            except NoConvergenceError as exc:
                if exc.partial is None:
                    raise
                fp = exc.partial
            self.flags["fixed_point"] = fp.converged
            self._cache["fp"] = fp
        return self._cache["fp"]

    def sweep_rows(self):
        if "rows" not in self._cache:
            rows = self.timed(
                "sweep",
                beta_sweep,
                self.A,
                self.cfg.sweep["beta_grid"],
                self.solver["tol"],
                self.cfg.w0,
                self.solver["max_iter"],
                self.solver["depth"],
            )
            self.flags["sweep"] = all(r.converged for r in rows)
            self._cache["rows"] = rows
        return self._cache["rows"]

    def zerotemp(self):
        if "zt" not in self._cache:
            rows = self.sweep_rows()
            zt = self.timed(
                "additive_eigen",
                additive_eigen,
                self.A,
                w0=self.cfg.w0,
                tol=self.solver["tol"],
                max_iter=min(self.solver["max_iter"], 10**4),
                depth=self.solver["depth"],
            )
            try:
                zt.c_extrapolated = extrapolate_c(rows)
            except EffpotError:
                zt.c_extrapolated = None
            zt.rows = rows
            self.flags["additive_eigen"] = zt.converged
            self._cache["zt"] = zt
        return self._cache["zt"]

    def subactions(self):
        if "subs" not in self._cache:
            zt = self.zerotemp()
            self._cache["subs"] = self.timed(
                "subaction",
                subaction_family,
                self.A,
                zt.V,
                zt.c_maxplus,
                depth=self.solver["depth"],
                per_word_c=not zt.converged,
            )
        return self._cache["subs"]

    def manifest(self, command, status):
        cfg_text = json.dumps(self.cfg.to_dict(), sort_keys=True)
        return {
            "command": command,
            "status": status,
            "version": __version__,
            "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
            "tolerances": {
                "solver_tol": self.solver["tol"],
                "max_iter": self.solver["max_iter"],
                "pressure_tol": 1e-13,
                "subaction_tol": 1e-9,
                "simplex_pivot_tol": 1e-12,
                "triple_lp_cycle_tol": 1e-9,
                "triple_extrapolation_tol": 1e-3,
            },
            "converged": self.flags,
            "files": sorted(set(self.files)),
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
        }


# ---------------------------------------------------------------------------
# subcommands; each returns an exit code


def cmd_validate(run):
    spec, A = run.cfg.spec, run.A
    run.write_json(
        "validate.json",
        {
            "valid": True,
            "r": spec.r,
            "lambda": spec.lam,
            "y_depth": A.y_depth,
            "x_depth": A.x_depth,
            "masked": A.masked,
            "n_y_words": len(A.y_table),
            "n_x_words": len(A.x_table),
            "norms": vars(norm_report(A)),
            "config": run.cfg.to_dict(),
        },
    )
    return EXIT_OK


def _rows_as_potentials(A, depth):
    d = max(A.y_depth, A.x_depth, depth or 0)
    return d, [(format_word(w), A.row(i, d)) for i, w in enumerate(A.y_table.words)]


def cmd_pressure(run):
    spec = run.cfg.spec
    d, rows = _rows_as_potentials(run.A, run.solver["depth"])
    out = {"depth": d, "pressure_zero": pressure(spec, XPotential(spec, 1, np.zeros(len(spec.words(1))))).pressure}
    per = {}
    for w, psi in rows:
        res = run.timed("pressure", pressure, spec, psi)
        per[w] = {"pressure": res.pressure, "residual": res.residual, "iterations": res.iterations}
    out["rows"] = per
    run.write_json("pressure.json", out)
    return EXIT_OK


def _measure_dict(mu):
    words = [format_word(w) for w in mu.graph.nodes.words]
    return {
        "depth": mu.depth,
        "pi": dict(zip(words, mu.pi)),
        "transitions": [
            {"from": words[a], "to": words[b], "p": p} for (a, b), p in zip(mu.graph.edges, mu.p_edges)
        ],
        "entropy": ks_entropy(mu),
    }


def cmd_equilibrium(run):
    spec = run.cfg.spec
    _, rows = _rows_as_potentials(run.A, run.solver["depth"])
    out = {w: run.timed("equilibrium", lambda p: _measure_dict(equilibrium(spec, p)), psi) for w, psi in rows}
    run.write_json("equilibrium.json", {"rows": out})
    return EXIT_OK


def _fp_dict(fp):
    return {
        "phi_plus": fp.phi_plus,
        "lambda_plus": fp.lambda_plus,
        "residual": fp.residual,
        "iterations": fp.iterations,
        "converged": fp.converged,
        "contraction_trace": fp.contraction_trace,
    }


def cmd_effective(run):
    fp = run.fixed_point()
    out = _fp_dict(fp)
    if fp.converged:
        fam = run.timed("effective_family", effective_family, run.A, fp, run.solver["depth"])
        out["effective_family"] = {
            format_word(w): {"residual": r, **_measure_dict(mu)}
            for w, mu, r in zip(fam.y_words, fam.measures, fam.residuals)
        }
        Gphi = apply_G_plus(run.A, fp.phi_plus, run.solver["depth"])
        out["lip_G_phi"] = norm_report(Gphi).lip
    run.write_json("effective.json", out)
    return EXIT_OK if fp.converged else EXIT_NOCONV


def _sweep_records(rows):
    return [
        {
            "beta": r.beta,
            "lambda_over_beta": r.lambda_over_beta,
            "lip_phi_over_beta": r.lip_phi_over_beta,
            "iterations": r.iterations,
            "converged": r.converged,
        }
        for r in rows
    ]


def cmd_sweep(run):
    rows = run.sweep_rows()
    records = _sweep_records(rows)
    fmts = run.cfg.output["formats"]
    if "csv" in fmts:
        run.out.mkdir(parents=True, exist_ok=True)
        with open(run.out / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for rec in records:
                w.writerow([repr(float(rec["beta"])), repr(float(rec["lambda_over_beta"])),
                            repr(float(rec["lip_phi_over_beta"])), rec["iterations"],
                            str(rec["converged"]).lower()])
        run.files.append("sweep.csv")
    if "json" in fmts:
        run.write_json(
            "sweep.json",
            [dict(rec, phi_over_beta=r.phi_over_beta, residual=r.residual) for rec, r in zip(records, rows)],
        )
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NOCONV


def _zt_dict(run, zt):
    out = zt.to_dict()
    if zt.converged:
        out["accumulation_values"] = dict(
            zip(map(format_word, run.A.y_table.words), accumulation_values(run.A, zt.V, run.solver["depth"]))
        )
    return out


def cmd_zerotemp(run):
    zt = run.zerotemp()
    run.write_json("zerotemp.json", _zt_dict(run, zt))
    return EXIT_OK if zt.converged and run.flags.get("sweep", True) else EXIT_NOCONV


def _subaction_dict(run, subs):
    words = run.cfg.spec.words(subs[0].U.depth).words
    out = {}
    for w, sa in zip(run.A.y_table.words, subs):
        out[format_word(w)] = {
            "U": sa.U,
            "c": sa.c,
            "calibration_residual": sa.calibration_residual,
            "calibrated": sa.calibrated,
            "min_slack": sa.min_slack,
            "equality_set": [[format_word(words[a]), format_word(words[b])] for a, b in sa.equality_set],
            "cycle": [format_word(words[v]) for v in sa.cycle.cycle],
        }
    return out


def cmd_subaction(run):
    subs = run.subactions()
    run.write_json("subaction.json", {"mode": "full" if run.zerotemp().converged else "c-only",
                                      "subactions": _subaction_dict(run, subs)})
    return EXIT_OK if run.zerotemp().converged else EXIT_NOCONV


def cmd_transship(run):
    zt = run.zerotemp()
    costs = build_cost_table(run.A, zt.V, zt.c_maxplus, run.subactions())
    lp = run.timed("transshipment", transshipment_lp, costs)
    out = lp.to_dict()
    out["cycle_value"] = pair_graph_cycle(costs).value
    run.write_json("transship.json", out)
    return EXIT_OK if zt.converged else EXIT_NOCONV


def cmd_verify(run):
    zt = run.zerotemp()
    rep = run.timed(
        "verify", verify_triple_equality, run.A, zt, depth=run.solver["depth"], strict=False
    )
    run.write_json("verify.json", rep.to_dict())
    if not rep.passed:
        raise VerificationError("triple equality failed", report=rep)
    return EXIT_OK if zt.converged else EXIT_NOCONV


def cmd_report(run):
    codes = []
    for name in ("validate", "pressure", "equilibrium", "effective", "sweep", "zerotemp",
                 "subaction", "transship", "verify"):
        try:
            codes.append(COMMANDS[name](run))
        except VerificationError:
            codes.append(EXIT_VERIFY)
    bundle = {}
    for name in sorted(set(run.files)):
        if name.endswith(".json"):
            bundle[name[:-5]] = json.loads((run.out / name).read_text())
    run.write_json("report.json", bundle)
    return max(codes)


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="effpot", description="Effective potentials on subshifts of finite type.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output directory (default: output.dir from the config)")
    p.add_argument("--depth", type=int, help="working depth override")
    p.add_argument("--tol", type=float, help="solver tolerance override")
    p.add_argument("--max-iter", type=int, dest="max_iter", help="iteration cap override")
    return p


def _error_body(exc):
    body = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("path", "reason", "line", "column", "residual"):
        if hasattr(exc, attr):
            body[attr] = getattr(exc, attr)
    report = getattr(exc, "report", None)
    if report is not None:
        body["report"] = report.to_dict()
    return body


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    out = Path(args.out) if args.out else None
    try:
        overrides = {}
        if args.tol is not None:
            overrides["tol"] = args.tol
        if args.max_iter is not None:
            overrides["max_iter"] = args.max_iter
        if args.depth is not None:
            overrides["depth"] = args.depth
        data = json.loads(Path(args.config).read_text()) if overrides else Path(args.config)
        if overrides:
            data.setdefault("solver", {}).update(overrides)
        cfg = parse_config(data)
    except json.JSONDecodeError as exc:
        return _fail(out, ConfigParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno), EXIT_USAGE)
    except (ConfigParseError, ConfigValidationError, OSError) as exc:
        return _fail(out, exc, EXIT_USAGE)
    run = Run(cfg, out or Path(cfg.output["dir"]))
    try:
        code = COMMANDS[args.subcommand](run)
    except VerificationError as exc:
        code = _fail(run.out, exc, EXIT_VERIFY)
    except NoConvergenceError as exc:
        code = _fail(run.out, exc, EXIT_NOCONV)
    except EffpotError as exc:
        code = _fail(run.out, exc, EXIT_USAGE)
    if code == EXIT_NOCONV and not (run.out / "error.json").exists():
        _fail(run.out, NoConvergenceError(f"not converged: {run.flags}"), code)
    status = "ok" if code == EXIT_OK else "flagged"
    run.write_json("manifest.json", run.manifest(args.subcommand, status))
    return code


def _fail(out, exc, code):
    """Write ``error.json`` (or print it when no output directory is known)."""
    body = dumps(_error_body(exc))
    if out is None:
        sys.stderr.write(body)
        return code
    print(f"effpot: {exc}", file=sys.stderr)
    Path(out).mkdir(parents=True, exist_ok=True)
    (Path(out) / "error.json").write_text(body)
    return code


def entry():  # pragma: no cover - console script shim
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entry()
