"""Command-line front end.

Subcommands
-----------
theta-ell      Theta for one ellipsoidal parameter point.
eigen-ell      Ellipsoidal eigenpairs from seeds or a grid scan.
eigen-sph      Spheroidal eigenvalues (lowest `count`).
scan           Theta samples on a grid (ellipsoidal) or line (spheroidal).
eigenfunction  Sampled eigenfunction values to CSV.

Machine-readable output (``--json`` / ``--csv`` / ``--output``) is
deterministic: fixed key order, floats in shortest round-trip form (at most
17 significant digits), CSV with comma separator, LF endings, UTF-8.
Wall-clock timing appears in human-readable output only.

Exit codes: 0 success, 1 usage error, 2 computation did not converge
(k_max reached or a solver failure), 3 scan found no seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import ellipsoidal as ell
from . import spheroidal as sph
from .errors import ConncoefError, NoConvergence
from .rootfind import SolverOptions

__all__ = ["main", "RunRecord"]


@dataclass
class RunRecord:
    """Everything one invocation produced, for the human-readable report."""

    command: str
    params: dict
    results: list = field(default_factory=list)
    error_bounds: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def human_lines(self) -> list[str]:
        lines = [f"command: {self.command}"]
        lines += [f"  {k} = {v}" for k, v in self.params.items()]
        lines += [str(r) for r in self.results]
        if self.error_bounds:
            lines.append("error bounds: "
                         + ", ".join(_fmt(b) for b in self.error_bounds))
        if self.iterations:
            lines.append("iterations: "
                         + ", ".join(str(i) for i in self.iterations))
        lines.append(f"wall_time_s = {self.wall_time_s:.3f}")
        return lines


def _fmt(x) -> str:
    """Shortest round-trip decimal form of a float (<= 17 significant digits)."""
    return repr(float(x))


def _emit_json(obj) -> None:
    print(json.dumps(obj, separators=(", ", ": ")))


def _open_output(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors by default; the CLI
    # contract reserves 2 for non-converged computations, so remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# theta-ell
# --------------------------------------------------------------------------

def cmd_theta_ellipsoidal(args) -> int:
    t0 = time.perf_counter()
    problem = ell.EllipsoidalProblem(gamma=args.gamma, c=args.c,
                                     rho=args.rho, sigma=args.sigma)
    res = ell.theta(args.lam, args.mu, problem, n=args.n, tol=args.tol,
                    k_max=args.k_max)
    wall = time.perf_counter() - t0
    if args.json:
        _emit_json({
            "theta_re": res.theta.real,
            "theta_im": res.theta.imag,
            "k": res.k_final,
            "n": res.n,
            "error_bound": res.error_bound,
            "status": res.status,
        })
    else:
        rec = RunRecord(
            command="theta-ell",
            params={"lambda": args.lam, "mu": args.mu, "gamma": args.gamma,
                    "c": args.c, "rho": args.rho, "sigma": args.sigma,
                    "n": args.n, "tol": args.tol},
            results=[f"theta = {_fmt(res.theta.real)}  (k = {res.k_final})",
                     f"status = {res.status}"],
            error_bounds=[res.error_bound],
            iterations=[res.k_final],
            wall_time_s=wall)
        print("\n".join(rec.human_lines()))
    return 0 if res.status == "converged" else 2


# --------------------------------------------------------------------------
# eigen-ell
# --------------------------------------------------------------------------

#: default scan window for seed hunting when no seeds are given
_DEFAULT_WINDOW = ((-2.0, 6.0), (-8.0, 2.0), 17)


def _ell_problem_from_args(args) -> ell.EllipsoidalProblem:
    if args.abramov:
        if args.k2 is None or args.omega2 is None:
            raise ValueError("--abramov needs --k2 and --omega2")
        gamma = args.omega2 / 4.0
        c = 1.0 / args.k2
        if not 0 < args.k2 < 1:
            raise ValueError("--k2 must lie in (0, 1)")
    else:
        if args.gamma is None or args.c is None:
            raise ValueError("need --gamma and --c (or --abramov)")
        gamma, c = args.gamma, args.c
    return ell.EllipsoidalProblem(gamma=gamma, c=c, rho=args.rho,
                                  sigma=args.sigma, tau=args.tau)


def cmd_eigen_ellipsoidal(args) -> int:
    t0 = time.perf_counter()
    problem = _ell_problem_from_args(args)
    if args.seed:
        seeds = [(s[0], s[1]) for s in args.seed]
    else:
        (l_lo, l_hi), (m_lo, m_hi), res_n = _DEFAULT_WINDOW
        if args.lambda_range:
            l_lo, l_hi = args.lambda_range
        if args.mu_range:
            m_lo, m_hi = args.mu_range
        grid = ell.scan_grid(problem, (l_lo, l_hi), (m_lo, m_hi),
                             args.resolution or res_n, n=args.n,
                             k_max=args.k_max)
        seeds = grid.seeds
    if not seeds:
        print("no seeds found", file=sys.stderr)
        return 3

    opts = SolverOptions(tol_residual=args.tol)
    pairs: list[ell.EigenPair] = []
    for s in seeds:
        try:
            pair = ell.solve_pair(s[0], s[1], problem, opts=opts, n=args.n,
                                  k_max=args.k_max)
        except (NoConvergence, ConncoefError):
            continue
        if any(abs(pair.lam - q.lam) <= 1e-6 * (1 + abs(pair.lam))
               and abs(pair.mu - q.mu) <= 1e-6 * (1 + abs(pair.mu))
               for q in pairs):
            continue
        pairs.append(pair)
    if not pairs:
        print("no seeds found", file=sys.stderr)
        return 3
    pairs.sort(key=lambda p: (p.lam, p.mu))
    wall = time.perf_counter() - t0

    if args.json:
        out = []
        for p in pairs:
            rec = {"lambda": p.lam, "mu": p.mu,
                   "residual_theta": p.residual_theta,
                   "residual_theta_hat": p.residual_theta_hat,
                   "iterations": p.iterations}
            if args.abramov:
                rec["H"] = 4 * p.lam / problem.c
                rec["L"] = -4 * p.mu / problem.c
            out.append(rec)
        _emit_json(out)
    else:
        lines = []
        for p in pairs:
            line = (f"lambda = {_fmt(p.lam)}  mu = {_fmt(p.mu)}  "
                    f"residuals = ({p.residual_theta:.2e}, "
                    f"{p.residual_theta_hat:.2e})")
            if args.abramov:
                line += (f"  H = {_fmt(4 * p.lam / problem.c)}"
                         f"  L = {_fmt(-4 * p.mu / problem.c)}")
            lines.append(line)
        lines.append(f"wall_time_s = {wall:.3f}")
        print("\n".join(lines))
    return 0


# --------------------------------------------------------------------------
# eigen-sph
# --------------------------------------------------------------------------

def cmd_eigen_spheroidal(args) -> int:
    t0 = time.perf_counter()
    problem = sph.SpheroidalProblem(mu=args.mu, gamma2=args.gamma2)
    t_range = tuple(args.t_range) if args.t_range else None
    eigs = sph.eigenvalues(problem, args.count, t_scan_range=t_range,
                           n=args.n, tol=args.tol, k_max=args.k_max)
    wall = time.perf_counter() - t0
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["N", "lambda", "parity", "residual"])
        for e in eigs:
            w.writerow([e.index, _fmt(complex(e.lam).real), e.parity,
                        _fmt(e.residual)])
    elif args.json:
        _emit_json([{"index": e.index, "lambda": complex(e.lam).real,
                     "t": e.t_root, "parity": e.parity,
                     "residual": e.residual} for e in eigs])
    else:
        for e in eigs:
            print(f"N = {e.index}  lambda = {_fmt(complex(e.lam).real)}  "
                  f"parity = {e.parity:+d}  residual = {e.residual:.2e}")
        print(f"wall_time_s = {wall:.3f}")
    return 0


# --------------------------------------------------------------------------
# scan
# --------------------------------------------------------------------------

def cmd_scan(args) -> int:
    t0 = time.perf_counter()
    if args.problem == "ell":
        problem = _ell_problem_from_args(args)
        if not (args.lambda_range and args.mu_range):
            raise ValueError("ellipsoidal scan needs --lambda-range and "
                             "--mu-range")
        grid = ell.scan_grid(problem, args.lambda_range, args.mu_range,
                             args.resolution, n=args.n, tol=args.tol,
                             k_max=args.k_max)
        fh, close = _open_output(args.output)
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "mu", "theta", "theta_hat"])
            for i, lam in enumerate(grid.lambdas):
                for j, mu in enumerate(grid.mus):
                    w.writerow([_fmt(lam), _fmt(mu), _fmt(grid.theta[i, j]),
                                _fmt(grid.theta_hat[i, j])])
        finally:
            if close:
                fh.close()
        n_seeds = len(grid.seeds)
    else:
        if args.gamma2 is None:
            raise ValueError("spheroidal scan needs --gamma2")
        problem = sph.SpheroidalProblem(mu=args.mu, gamma2=args.gamma2)
        if not args.t_range:
            raise ValueError("spheroidal scan needs --t-range")
        ts = np.linspace(args.t_range[0], args.t_range[1], args.resolution)
        fh, close = _open_output(args.output)
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "theta"])
            for t in ts:
                r = sph.theta_t(float(t), problem, n=args.n, tol=args.tol)
                w.writerow([_fmt(t), _fmt(r.theta.real)])
        finally:
            if close:
                fh.close()
        n_seeds = None
    wall = time.perf_counter() - t0
    if args.output != "-":
        msg = f"wrote {args.output}"
        if n_seeds is not None:
            msg += f"  ({n_seeds} seed cells)"
        print(msg + f"  wall_time_s = {wall:.3f}")
    return 0


# --------------------------------------------------------------------------
# eigenfunction
# --------------------------------------------------------------------------

def cmd_eigenfunction(args) -> int:
    t0 = time.perf_counter()
    if args.problem == "ell":
        problem = _ell_problem_from_args(args)
        if args.abramov:
            if args.H is None or args.L is None:
                raise ValueError("--abramov eigenfunctions need --H and --L")
            lam0 = args.H * problem.c / 4.0
            mu0 = -args.L * problem.c / 4.0
        else:
            if args.lam is None or args.mu is None:
                raise ValueError("need --lambda and --mu (or --abramov with "
                                 "--H and --L)")
            lam0, mu0 = args.lam, args.mu
        # polish the pair first so the series pre-condition holds
        pair = ell.solve_pair(lam0, mu0, problem,
                              opts=SolverOptions(tol_residual=1e-8), n=args.n,
                              k_max=args.k_max)
        fn = ell.eigenfunction(pair, problem)
        if args.normalize != "none":
            fn = ell.normalize(fn, mode=args.normalize)
        zs = problem.c * np.arange(1, args.samples + 1) / (args.samples + 1)
        fh, close = _open_output(args.output)
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z", "w"])
            for z in zs:
                w.writerow([_fmt(z), _fmt(fn(float(z)))])
        finally:
            if close:
                fh.close()
        summary = (f"pair: lambda = {_fmt(pair.lam)}  mu = {_fmt(pair.mu)}  "
                   f"(residuals {pair.residual_theta:.2e}, "
                   f"{pair.residual_theta_hat:.2e})")
    else:
        if args.gamma2 is None:
            raise ValueError("spheroidal eigenfunctions need --gamma2")
        problem = sph.SpheroidalProblem(mu=args.mu, gamma2=args.gamma2)
        eigs = sph.eigenvalues(problem, args.index + 1, n=args.n,
                               k_max=args.k_max)
        eig = eigs[args.index]
        xs = -1.0 + 2.0 * np.arange(1, args.samples + 1) / (args.samples + 1)
        fn = sph.eigenfunction(eig, problem, xs)
        vals = np.asarray(fn.values, dtype=float)
        if args.normalize == "sup":
            vals = vals / np.max(np.abs(vals))
        elif args.normalize != "none":
            raise ValueError("spheroidal eigenfunctions support "
                             "--normalize none|sup")
        fh, close = _open_output(args.output)
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "w"])
            for x, v in zip(xs, vals):
                w.writerow([_fmt(x), _fmt(v)])
        finally:
            if close:
                fh.close()
        summary = (f"N = {eig.index}  lambda = {_fmt(complex(eig.lam).real)}  "
                   f"parity = {fn.parity:+d}  "
                   f"parity_deviation = {fn.parity_deviation:.2e}")
    wall = time.perf_counter() - t0
    if args.output != "-":
        print(summary)
        print(f"wrote {args.output}  wall_time_s = {wall:.3f}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, n_default: int = 5,
                tol_default: float = 1e-10) -> None:
    p.add_argument("--n", type=int, default=n_default,
                   help="acceleration order (default %(default)s)")
    p.add_argument("--tol", type=float, default=tol_default,
                   help="tolerance (default %(default)s)")
    p.add_argument("--k-max", type=int, default=10 ** 6, dest="k_max",
                   help="series step budget (default %(default)s)")


def _add_ell_problem(p: argparse.ArgumentParser, with_tau: bool) -> None:
    p.add_argument("--gamma", type=float, default=None,
                   help="coefficient gamma of the ellipsoidal equation")
    p.add_argument("--c", type=float, default=None,
                   help="third singular point c > 1")
    p.add_argument("--rho", type=int, default=0, choices=(0, 1))
    p.add_argument("--sigma", type=int, default=0, choices=(0, 1))
    if with_tau:
        p.add_argument("--tau", type=int, default=0, choices=(0, 1))
    p.add_argument("--abramov", action="store_true",
                   help="take --k2/--omega2 (wave-number form) instead of "
                        "--gamma/--c")
    p.add_argument("--k2", type=float, default=None)
    p.add_argument("--omega2", type=float, default=None)


def _build_parser() -> _Parser:
    parser = _Parser(prog="conncoef", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.set_defaults(func=None)
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("theta-ell",
                       help="connection coefficient for one (lambda, mu)")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--rho", type=int, default=0, choices=(0, 1))
    p.add_argument("--sigma", type=int, default=0, choices=(0, 1))
    _add_common(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_theta_ellipsoidal)

    p = sub.add_parser("eigen-ell", help="ellipsoidal eigenpairs")
    _add_ell_problem(p, with_tau=True)
    p.add_argument("--seed", nargs=2, type=float, action="append",
                   metavar=("LAMBDA", "MU"),
                   help="starting pair for the two-parameter solver "
                        "(repeatable); omit to scan for seeds")
    p.add_argument("--lambda-range", nargs=2, type=float, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--mu-range", nargs=2, type=float, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--resolution", type=int, default=None)
    # residuals of steep problems bottom out near |dTheta/dlam| * ulp(lam);
    # 1e-8 is reachable for all regression cases and still ~1e-12 in (lam, mu)
    _add_common(p, tol_default=1e-8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eigen_ellipsoidal)

    p = sub.add_parser("eigen-sph", help="spheroidal eigenvalues")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--gamma2", type=float, required=True,
                   help="gamma^2 (prolate > 0, oblate < 0)")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--t-range", nargs=2, type=float, default=None,
                   metavar=("LO", "HI"))
    _add_common(p, tol_default=1e-9)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eigen_spheroidal)

    p = sub.add_parser("scan", help="theta samples on a grid or line")
    p.add_argument("--problem", choices=("ell", "sph"), required=True)
    _add_ell_problem(p, with_tau=True)
    p.add_argument("--mu-order", dest="mu", type=float, default=0.0,
                   help="spheroidal order mu (spheroidal scans)")
    p.add_argument("--gamma2", type=float, default=None)
    p.add_argument("--lambda-range", nargs=2, type=float, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--mu-range", nargs=2, type=float, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--t-range", nargs=2, type=float, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--resolution", type=int, default=33)
    _add_common(p, tol_default=1e-8)
    p.add_argument("--output", required=True,
                   help="output CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("eigenfunction", help="sampled eigenfunction to CSV")
    p.add_argument("--problem", choices=("ell", "sph"), required=True)
    _add_ell_problem(p, with_tau=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=0.0,
                   help="ellipsoidal: seed mu; spheroidal: order mu")
    p.add_argument("--H", type=float, default=None)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--gamma2", type=float, default=None)
    p.add_argument("--index", type=int, default=0,
                   help="spheroidal eigenvalue index N")
    p.add_argument("--samples", type=int, default=401)
    p.add_argument("--normalize", choices=("none", "sup", "integral"),
                   default="none")
    _add_common(p)
    p.add_argument("--output", required=True,
                   help="output CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_eigenfunction)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConncoefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
