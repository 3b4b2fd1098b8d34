"""Command-line front end.

Every subcommand writes its output file together with ``FILE.manifest.json``
recording the command, the full parameter set, the package version, digests
of input and output files and the wall time.  Tables are CSV with a header
row and 17 significant digits; structured results are JSON.

Exit codes: 0 on success, 1 on a domain or configuration error, 2 on a
solver failure, 64 on a usage error.
"""

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__

__all__ = ["dispatch", "main", "convergence_report", "read_csv_table"]

EXIT_OK, EXIT_DOMAIN, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(v):
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    """Write rows under a header with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(args, outputs, inputs, wall):
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": args.command,
        "parameters": params,
        "version": __version__,
        "inputs": {p: _digest(p) for p in inputs if p and os.path.isfile(p)},
        "outputs": {p: _digest(p) for p in outputs},
        "wall_time_seconds": wall,
    }
    write_json(f"{args.out}.manifest.json", manifest)


def read_csv_table(path):
    """Read a numeric CSV with a header into ``(header, array)``.

    Raises
    ------
    DomainError
        Naming the file and line of the first malformed row.
    """
    from .errors import DomainError

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise DomainError(f"{path}:1: missing header row")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DomainError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
                try:
                    rows.append([float(v) for v in row])
                except ValueError as exc:
                    raise DomainError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc
    return [h.strip() for h in header], np.array(rows, dtype=float).reshape(-1, len(header))


def _plot(args, x, series, xlabel, logy=True):
    """Save ``FILE.png`` next to the output when ``--plot`` is given."""
    if not getattr(args, "plot", False):
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        y = np.asarray(y, dtype=float)
        ax.plot(x, np.abs(y) if logy else y, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.legend()
    fig.tight_layout()
    path = f"{args.out}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text):
    try:
        n_r, n_a = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected NRxNA, got {text!r}") from exc
    return n_r, n_a


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_painleve(args):
    from . import painleve

    sol = painleve.solve_painleve(x_min=args.x_min, x_max=args.x_max, n_nodes=args.nodes, tol=args.tol)
    x = sol.grid
    res = painleve.ode_residual(sol, x)
    write_csv(args.out, ["x", "psi", "dpsi", "eta", "residual"], zip(x, sol.psi, sol.dpsi, sol.eta_values, res))
    return [args.out] + _plot(args, x, {"psi": sol.psi, "-dpsi": -sol.dpsi}, "x"), []


def _cmd_local_model(args):
    from . import localmodel
    from .hermlin import det2_field

    sol = localmodel.solve_local_model(t=args.t, lam=args.lam, rho_max=args.rho_max, n_nodes=args.nodes)
    rho = sol.grid
    m = localmodel.eval_M_lambda(sol, sol.u)
    det = det2_field(localmodel.eval_H_t_lambda(sol, rho.astype(complex))).real
    rows = zip(rho, sol.f1, sol.f2, sol.f3, m[:, 0, 0], m[:, 0, 1], m[:, 1, 1], det)
    write_csv(args.out, ["rho", "f1", "f2", "f3", "M11", "M12", "M22", "detH"], rows)
    return [args.out] + _plot(args, rho, {"M11": m[:, 0, 0], "M22": m[:, 1, 1]}, "rho"), []


def _cmd_clambda(args):
    from . import localmodel

    grid = np.linspace(args.lambda_min, args.lambda_max, args.steps)
    rows = localmodel.c_lambda_table(grid, jobs=args.jobs)
    write_csv(args.out, ["lambda", "c_lambda", "err"], [r[:3] for r in rows])
    return [args.out] + _plot(args, grid, {"c_lambda": [r[1] for r in rows]}, "lambda", logy=False), []


def _cmd_glue(args):
    from . import gluing

    spec = gluing.make_glued_spec(args.zero_type, args.t, R=args.R, lam=args.lam)
    forms = gluing.local_higgs_forms(spec.zero_type, singular=True)
    region = (args.R / 100.0, args.R)
    _, op = gluing.hitchin_residual_field(lambda z: gluing.H_app_field(spec, z), forms, args.t, region, args.grid)
    n_r = args.grid[0]
    rho = np.exp(np.linspace(math.log(region[0]), math.log(region[1]), n_r))
    h = gluing.H_app_field(spec, rho.astype(complex))
    res = np.max(np.abs(op), axis=(1, 2, 3))
    rows = zip(rho, h[:, 0, 0].real, h[:, 0, 1].real, h[:, 0, 1].imag, h[:, 1, 1].real, res)
    write_csv(args.out, ["rho", "H11", "H12_re", "H12_im", "H22", "max_residual"], rows)
    return [args.out] + _plot(args, rho, {"max_residual": res}, "rho"), []


def _cmd_residual_sweep(args):
    from . import gluing

    sweep = gluing.residual_sweep(args.zero_type, args.t_list, R=args.R, lam=args.lam, grid=args.grid, jobs=args.jobs)
    write_csv(args.out, ["t", "t_pow", "max_residual"], zip(sweep.t, sweep.t_pow, sweep.max_residual))
    fit_path = f"{args.out}.fit.json"
    write_json(
        fit_path,
        {
            "zero_type": sweep.zero_type.value,
            "abscissa": "t^(2/3)" if sweep.zero_type is gluing.ZeroType.R else "t",
            "fit_slope": sweep.slope,
            "fit_intercept": sweep.intercept,
            "fit_r2": sweep.r2,
        },
    )
    return [args.out, fit_path] + _plot(args, sweep.t_pow, {"max_residual": sweep.max_residual}, "t_pow"), []


def _cmd_weights(args):
    from . import weights

    surface = weights.SurfaceData(args.genus, args.deg_l)
    d_r = surface.n_zeros - args.dbeta - args.dgamma
    partition = weights.ZeroPartition(args.dbeta, args.dgamma, d_r)
    partition.check(surface)
    out = {
        "genus": args.genus,
        "deg_l": args.deg_l,
        "partition": [args.dbeta, args.dgamma, d_r],
        "stability": weights.check_stability(surface, partition).value,
        "barycenter": weights.barycenter(surface, partition).as_strings(),
        "vertices": [v.as_strings() for v in weights.polytope_vertices(surface, partition)],
    }
    inputs = []
    t_values = ([args.t] if args.t is not None else []) + list(args.t_list or [])
    if t_values:
        psi = _load_psi_for(args, partition, weights)
        if args.clambda_file:
            c_interp = weights.CInterpolant.from_csv(args.clambda_file)
            inputs.append(args.clambda_file)
        else:
            from . import localmodel

            grid = np.linspace(-0.2, 0.2, 9)
            c_interp = weights.CInterpolant.from_table(localmodel.c_lambda_table(grid, jobs=args.jobs))
        if args.psi_file:
            inputs.append(args.psi_file)
        center = np.array([float(v) for v in weights.barycenter(surface, partition)])
        rows = []
        for t in t_values:
            res = weights.solve_t_compatible(t, surface, partition, psi, c_interp)
            lam_t = np.asarray(res.weights.values, dtype=float)
            drift = float(np.max(np.abs(lam_t - center)))
            rows.append({"t": t, "lambda_t": lam_t.tolist(), "drift": drift, "drift_times_logt": drift * math.log(t),
                         "iterations": res.iterations, "method": res.method})
        out["lambda_t"] = rows[0]["lambda_t"]
        out["drift"] = rows[0]["drift"]
        out["t_compatible"] = rows
    write_json(args.out, out)
    outputs = [args.out]
    if args.t_list:
        path = f"{args.out}.drift.csv"
        write_csv(path, ["t", "drift", "drift_times_logt"], [(r["t"], r["drift"], r["drift_times_logt"]) for r in out["t_compatible"]])
        outputs.append(path)
    return outputs, inputs


def _load_psi_for(args, partition, weights):
    if args.psi_file:
        _, part, psi = weights.load_psi(args.psi_file)
        if part.d_r != partition.d_r:
            from .errors import ConfigurationError

            raise ConfigurationError("psi data was made for a different number of R-type zeros")
        return psi
    return weights.PsiAffine.zero(partition.d_r)


def _cmd_eigen(args):
    from . import spectral

    rows = spectral.eigen_table(args.t_list, A=args.A, delta=args.delta, n_radial=args.n_radial, oracle=not args.no_oracle)
    write_csv(args.out, ["t", "lambda1_secular", "lambda1_fd", "lambda1_times_logt"], rows)
    t = [r[0] for r in rows]
    return [args.out] + _plot(args, t, {"lambda1": [r[1] for r in rows]}, "t"), []


def _cmd_solve_disk(args):
    from . import disksolver

    zt = args.zero_type
    model = None
    if zt == "r":
        from . import localmodel

        model = localmodel.solve_local_model(t=1.0, lam=args.lam, n_nodes=disksolver.MODEL_NODES)
    seed = disksolver.seed_field(zt, args.t, args.seed_kind, args.R, args.lam, args.grid, model=model)
    oracle = disksolver.seed_field(zt, args.t, "exact", args.R, args.lam, args.grid, model=model)
    res = disksolver.solve_hitchin_disk(seed, args.t, max_iter=args.max_iter, tol=args.tol, scheme=args.scheme,
                                        accuracy=args.accuracy)
    out = {
        "zero_type": zt,
        "t": args.t,
        "grid": list(args.grid),
        "seed": args.seed_kind,
        "scheme": args.scheme,
        "iterations": res.iterations,
        "residual_history": res.residual_history,
        "gt_sup_norm": res.gt_sup_norm,
        "comparison_to_oracle": disksolver.oracle_difference(res.field, oracle),
        "hermitian_defects": res.hermitian_defects,
        "linear_residuals": res.linear_residuals,
    }
    if args.doubling:
        study = disksolver.doubling_study(zt, args.t, args.lam, args.R, args.grid, args.tol, scheme=args.scheme,
                                          accuracy=args.accuracy, model=model)
        out["discretization_error"] = study.discretization_error
    write_json(args.out, out)
    return [args.out], []


def convergence_report(inputs, min_r2=0.99, drift_ratio=2.0):
    """Fits and PASS/FAIL verdicts for residual, drift and eigenvalue tables.

    The series type is recognized from the header: ``t_pow, max_residual``
    (log residual against ``t_pow``), ``drift, drift_times_logt`` (bounded
    product against ``1/log t``) or ``lambda1_secular`` (oracle agreement and
    the product with ``log t``).
    """
    from .errors import DomainError
    from .fitting import linear_fit

    report = {"series": [], "pass": True}
    for path in inputs:
        header, data = read_csv_table(path)
        col = {name: data[:, i] for i, name in enumerate(header)}
        entry = {"file": path}
        if "max_residual" in col and "t_pow" in col:
            fit = linear_fit(col["t_pow"], np.log(col["max_residual"]))
            entry.update(kind="residual", slope=fit.slope, intercept=fit.intercept, r2=fit.r2,
                         passed=bool(fit.slope < 0 and fit.r2 >= min_r2))
        elif "drift" in col:
            drift = col["drift"]
            if np.all(drift == 0):
                entry.update(kind="drift", trivial=True, passed=True)
            else:
                prod = drift * np.log(col["t"])
                fit = linear_fit(1.0 / np.log(col["t"]), drift)
                ratio = float(prod.max() / prod.min()) if prod.min() > 0 else math.inf
                entry.update(kind="drift", slope=fit.slope, intercept=fit.intercept, r2=fit.r2,
                             product_ratio=ratio, passed=bool(ratio <= drift_ratio))
        elif "lambda1_secular" in col:
            sec, fd = col["lambda1_secular"], col["lambda1_fd"]
            rel = float(np.nanmax(np.abs(sec - fd) / sec))
            fit = linear_fit(np.log(col["t"]), 1.0 / sec)
            entry.update(kind="eigen", max_relative_difference=rel, slope=fit.slope, intercept=fit.intercept,
                         r2=fit.r2, min_lambda1_times_logt=float(np.min(col["lambda1_times_logt"])),
                         passed=bool(rel <= 0.01 and np.min(col["lambda1_times_logt"]) > 0))
        else:
            raise DomainError(f"{path}:1: unrecognized columns {header}")
        report["series"].append(entry)
        report["pass"] = report["pass"] and entry["passed"]
    return report


def _cmd_convergence_report(args):
    report = convergence_report(args.inputs, min_r2=args.min_r2)
    write_json(args.out, report)
    return [args.out], list(args.inputs)


# ---------------------------------------------------------------------------
# Parser


def build_parser():
    parser = _Parser(prog="su12hitchin", description="Large-t SU(1,2) Hitchin constructions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", required=True, help="output file")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized steps")
        p.add_argument("--plot", action="store_true", help="also save FILE.png (needs matplotlib)")
        p.set_defaults(func=func)
        return p

    p = add("painleve", _cmd_painleve, "Painlevé III transcendent on a grid")
    p.add_argument("--x-min", type=float, default=1e-3)
    p.add_argument("--x-max", type=float, default=25.0)
    p.add_argument("--nodes", type=int, default=2048)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("local-model", _cmd_local_model, "local model profiles")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--rho-max", type=float, default=None)
    p.add_argument("--nodes", type=int, default=2048)

    p = add("clambda", _cmd_clambda, "table of c_lambda")
    p.add_argument("--lambda-min", type=float, default=-0.2)
    p.add_argument("--lambda-max", type=float, default=0.2)
    p.add_argument("--steps", type=int, default=21)

    for name, func, help_ in (("glue", _cmd_glue, "glued approximate metric and its residual"),
                              ("residual-sweep", _cmd_residual_sweep, "glued residual over t with a fit")):
        p = add(name, func, help_)
        p.add_argument("--zero-type", choices=["r", "beta", "gamma"], required=True)
        p.add_argument("--R", type=float, default=1.0)
        p.add_argument("--lambda", dest="lam", type=float, default=0.0)
        p.add_argument("--grid", type=_grid, default=(256, 128))
        if name == "glue":
            p.add_argument("--t", type=float, required=True)
        else:
            p.add_argument("--t-list", type=_floats, required=True)

    p = add("weights", _cmd_weights, "stability, weight polytope and t-compatible weights")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--deg-l", type=int, required=True)
    p.add_argument("--dbeta", type=int, required=True)
    p.add_argument("--dgamma", type=int, required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--t-list", type=_floats, default=None, help="also write FILE.drift.csv")
    p.add_argument("--psi-file", default=None)
    p.add_argument("--clambda-file", default=None)

    p = add("eigen", _cmd_eigen, "first Neumann eigenvalue with a shrinking well")
    p.add_argument("--t-list", type=_floats, required=True)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--n-radial", type=int, default=1024)
    p.add_argument("--no-oracle", action="store_true")

    p = add("solve-disk", _cmd_solve_disk, "solve the Hitchin equation on a model disk")
    p.add_argument("--zero-type", choices=["r", "beta", "gamma"], required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--grid", type=_grid, default=(128, 128))
    p.add_argument("--scheme", choices=["newton", "picard"], default="newton")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--accuracy", type=int, choices=[2, 4, 6, 8], default=8)
    p.add_argument("--seed-kind", choices=["glued", "exact"], default="glued")
    p.add_argument("--doubling", action="store_true", help="also estimate the discretization error")

    p = add("convergence-report", _cmd_convergence_report, "fits and verdicts for sweep tables")
    p.add_argument("--inputs", type=lambda s: [v for v in s.split(",") if v], required=True)
    p.add_argument("--min-r2", type=float, default=0.99)
    return parser


def dispatch(argv):
    """Run one subcommand and return its exit code."""
    from .errors import DomainError, SolverError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        outputs, inputs = args.func(args)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    _write_manifest(args, outputs, inputs, time.perf_counter() - start)
    return EXIT_OK


def main(argv=None):
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))
