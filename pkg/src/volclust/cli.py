"""Command-line front end.

Subcommands: constants, price, iv-surface, pde-solve, pde-sweep,
calibrate, figure1, figure2, measure-dump.  Every CSV written has a
header row, '.' decimal separators and 17 significant digits, and reruns
with identical inputs are byte-identical.  Exit codes: 0 success, 2
configuration error, 3 numerical failure.  Independent PDE solves (the
eta curves of figure2, the epsilon members of pde-sweep) are dispatched
to parallel workers; VOLCLUST_THREADS caps the worker count.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics, bs, calibrate, measure, model, pde, poisson
from .errors import ConfigError, NumericalError, VolclustError

FIGURE2_ETAS = (-0.25, 0.0, 0.25)
FIGURE2_LM_SPAN = (-0.3, 0.3)
FIGURE2_POINTS = 61


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def _write_csv(out: str | None, header: list[str], rows) -> None:
    """Write rows (iterables of numbers) to ``out`` or stdout when '-'/None."""
    def _dump(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    if out in (None, "-"):
        _dump(sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            _dump(fh)


def _worker_count(n_tasks: int) -> int:
    cap = os.environ.get("VOLCLUST_THREADS")
    workers = os.cpu_count() or 1
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"VOLCLUST_THREADS must be an integer, got {cap!r}")
    return max(1, min(workers, n_tasks))


def _parallel_map(fn, tasks: list):
    workers = _worker_count(len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _load_spec(path: str) -> model.ModelSpec:
    spec = model.read_config(path)
    report = model.validate(spec)
    if not report.is_valid:
        raise ConfigError("invalid model config: " + "; ".join(report.violations))
    return spec


def _write_gnuplot(script_path: str, lines: list[str]) -> None:
    with open(script_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# --- subcommand implementations ----------------------------------------------

def _cmd_constants(args) -> None:
    spec = _load_spec(args.config)
    gc = poisson.group_constants_for(spec)
    _write_csv(args.out,
               ["sigma1_bar_sq", "avg_b2_over_s2", "A", "A_tilde", "B", "A_alt", "B_alt"],
               [[gc.sigma1_bar_sq, gc.avg_b2_over_s2, gc.a, gc.a_tilde, gc.b, gc.a_alt, gc.b_alt]])


def _cmd_price(args) -> None:
    spec = _load_spec(args.config)
    gc = poisson.group_constants_for(spec)
    taus = args.tau if args.tau else [spec.maturity]
    rows = []
    for tau in taus:
        for x in args.x:
            ap = asymptotics.asymptotic_price(gc, spec, tau, x)
            rows.append([tau, x, ap.P0, ap.P1, ap.corrected])
    _write_csv(args.out, ["tau", "x", "P0", "P1", "corrected"], rows)


def _smile_line(args) -> tuple[float, float]:
    """Slope/intercept either given directly or derived from a config."""
    if args.a is not None and args.d is not None:
        return args.a, args.d
    if args.config is None:
        raise ConfigError("need either --a and --d, or --config to derive them")
    spec = _load_spec(args.config)
    civ = asymptotics.corrected_iv(poisson.group_constants_for(spec), spec)
    return civ.a, civ.d


def _cmd_iv_surface(args) -> None:
    a, d = _smile_line(args)
    taus = args.tau or [0.25]
    xs = np.linspace(args.x_min, args.x_max, args.nx)
    rows = []
    for tau in taus:
        for x in xs:
            lmmr = -x / tau
            rows.append([tau, x, lmmr, a * lmmr + d])
    _write_csv(args.out, ["tau", "x", "lmmr", "iv"], rows)


def _cmd_figure1(args) -> None:
    taus = np.linspace(args.tau_min, args.tau_max, args.n_tau)
    lmmrs = np.linspace(args.lmmr_min, args.lmmr_max, args.n_lmmr)
    rows = [[tau, lmmr, args.a * lmmr + args.d] for tau in taus for lmmr in lmmrs]
    _write_csv(args.out, ["tau", "lmmr", "iv"], rows)
    if args.out not in (None, "-"):
        _write_gnuplot(os.path.splitext(args.out)[0] + ".gp", [
            "set datafile separator ','",
            "set xlabel 'LMMR'",
            "set ylabel 'time to maturity'",
            "set zlabel 'implied volatility'",
            "set dgrid3d {},{}".format(args.n_tau, args.n_lmmr),
            "set hidden3d",
            f"splot '{os.path.basename(args.out)}' every ::1 using 2:1:3 with lines notitle",
        ])


def _figure2_curve(task) -> list[float]:
    """One eta member of the skew plot: implied vols on the log-moneyness grid."""
    spec, lm_grid, grid_kwargs = task
    grid = pde.make_grid(spec, spec.maturity, **grid_kwargs)
    surface = pde.price_surface(spec, grid)
    jy = int(np.argmin(np.abs(grid.y - spec.m)))
    ivs = []
    for lm in lm_grid:
        x = -lm
        ix = int(np.argmin(np.abs(grid.x - x)))
        price = float(surface.P[ix, jy])
        ivs.append(bs.implied_vol(price, surface.tau, float(grid.x[ix]), spec.strike))
    return ivs


def _cmd_figure2(args) -> None:
    base = _load_spec(args.config) if args.config else model.arctangent_model()
    base = base.with_(epsilon=args.epsilon, maturity=args.tau)
    lm_grid = np.linspace(FIGURE2_LM_SPAN[0], FIGURE2_LM_SPAN[1], FIGURE2_POINTS)
    grid_kwargs = {"nx": args.nx}
    tasks = [(base.with_(eta=eta), lm_grid, grid_kwargs) for eta in FIGURE2_ETAS]
    curves = _parallel_map(_figure2_curve, tasks)
    rows = [[lm, *[curve[i] for curve in curves]] for i, lm in enumerate(lm_grid)]
    _write_csv(args.out, ["log_moneyness", "iv_eta_m025", "iv_eta_0", "iv_eta_p025"], rows)
    if args.out not in (None, "-"):
        name = os.path.basename(args.out)
        _write_gnuplot(os.path.splitext(args.out)[0] + ".gp", [
            "set datafile separator ','",
            "set xlabel 'log moneyness'",
            "set ylabel 'implied volatility'",
            "set key top left",
            f"plot '{name}' every ::1 using 1:2 with lines title 'eta = -0.25', \\",
            f"     '{name}' every ::1 using 1:3 with lines title 'eta = 0', \\",
            f"     '{name}' every ::1 using 1:4 with lines title 'eta = 0.25'",
        ])


def _cmd_measure_dump(args) -> None:
    spec = _load_spec(args.config)
    m = measure.build_invariant_measure(spec, tol=args.tol)
    _write_csv(args.out, ["y", "density"], zip(m.grid, m.density))


def _cmd_pde_solve(args) -> None:
    spec = _load_spec(args.config)
    tau = args.tau if args.tau is not None else spec.maturity
    grid = pde.make_grid(spec, tau, nx=args.nx, x_span=(args.xmin, args.xmax),
                         ny=args.ny, dt=args.dt)
    surface = pde.price_surface(spec, grid)
    rows = ([tau, x, y, surface.u[i, j], surface.u_tilde[j], surface.P[i, j]]
            for i, x in enumerate(grid.x) for j, y in enumerate(grid.y))
    _write_csv(args.out, ["tau", "x", "y", "u", "u_tilde", "P"], rows)


def _read_probes(path: str) -> list[tuple[float, float, float]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            probes = [(float(r["tau"]), float(r["x"]), float(r["y"])) for r in reader]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad probes file {path!r}: {exc}") from exc
    if not probes:
        raise ConfigError(f"probes file {path!r} has no rows")
    return probes


def _sweep_member(task):
    spec, probes = task
    return pde.accuracy_sweep(spec, [spec.epsilon], probes)[0]


def _cmd_pde_sweep(args) -> None:
    spec = _load_spec(args.config)
    try:
        eps_list = [float(tok) for tok in args.eps_list.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --eps-list: {exc}") from exc
    probes = _read_probes(args.probes)
    rows = _parallel_map(_sweep_member, [(spec.with_(epsilon=eps), probes) for eps in eps_list])
    _write_csv(args.out, ["eps", "max_abs_error", "normalized"],
               [[r.eps, r.max_abs_error, r.normalized] for r in rows])


def _cmd_calibrate(args) -> None:
    quotes = calibrate.read_quotes_csv(args.quotes)
    a, d, r_squared = calibrate.fit_affine(quotes)
    big_a, big_b = calibrate.recover_constants((a, d), args.sigma_bar, args.epsilon)
    header = ["a", "d", "r_squared", "A", "B"]
    row = [a, d, r_squared, big_a, big_b]
    if args.config:
        spec = _load_spec(args.config).with_(epsilon=args.epsilon)
        result = calibrate.calibrate_from_surface(quotes, spec, sigma_bar=args.sigma_bar)
        header += ["eta", "rho_residual"]
        row += [result.eta, result.rho_residual]
    _write_csv(args.out, header, [row])


# --- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volclust",
        description="Indifference put pricing under fast mean-reverting volatility",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="group constants for a model config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("price", help="corrected asymptotic price at (tau, x) points")
    p.add_argument("--config", required=True)
    p.add_argument("--tau", type=float, action="append", default=None)
    p.add_argument("--x", type=float, action="append", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("iv-surface", help="corrected smile on a (tau, x) grid")
    p.add_argument("--config", default=None)
    p.add_argument("--a", type=float, default=None, help="LMMR slope (overrides --config)")
    p.add_argument("--d", type=float, default=None, help="LMMR intercept (overrides --config)")
    p.add_argument("--tau", type=float, action="append", default=None)
    p.add_argument("--x-min", type=float, default=-0.5)
    p.add_argument("--x-max", type=float, default=0.5)
    p.add_argument("--nx", type=int, default=51)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_iv_surface)

    p = sub.add_parser("figure1", help="smile surface from a given (a, d) line")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--tau-min", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=1.0)
    p.add_argument("--n-tau", type=int, default=10)
    p.add_argument("--lmmr-min", type=float, default=-1.0)
    p.add_argument("--lmmr-max", type=float, default=1.0)
    p.add_argument("--n-lmmr", type=int, default=41)
    p.add_argument("--out", default="figure1.csv")
    p.set_defaults(func=_cmd_figure1)

    p = sub.add_parser("figure2", help="PDE-implied skew for three risk premia")
    p.add_argument("--config", default=None, help="model config (default arctangent demo)")
    p.add_argument("--tau", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=0.004)
    p.add_argument("--nx", type=int, default=pde.DEFAULT_NX)
    p.add_argument("--out", default="figure2.csv")
    p.set_defaults(func=_cmd_figure2)

    p = sub.add_parser("measure-dump", help="stationary density of the fast factor")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_measure_dump)

    p = sub.add_parser("pde-solve", help="solve the full pricing PDE")
    p.add_argument("--config", required=True)
    p.add_argument("--xmin", type=float, default=-3.0)
    p.add_argument("--xmax", type=float, default=3.0)
    p.add_argument("--nx", type=int, default=pde.DEFAULT_NX)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default="pde_solution.csv")
    p.set_defaults(func=_cmd_pde_solve)

    p = sub.add_parser("pde-sweep", help="asymptotic-accuracy sweep over epsilon")
    p.add_argument("--config", required=True)
    p.add_argument("--eps-list", required=True, help="comma-separated, e.g. 0.04,0.01,0.0025")
    p.add_argument("--probes", required=True, help="csv with columns tau,x,y")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pde_sweep)

    p = sub.add_parser("calibrate", help="fit the smile line and recover constants")
    p.add_argument("--quotes", required=True, help="csv with columns tau,x,iv[,weight]")
    p.add_argument("--sigma-bar", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--config", default=None, help="model config; enables eta recovery")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, VolclustError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
