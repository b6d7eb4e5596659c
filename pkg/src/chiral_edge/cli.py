"""Command-line interface.

Every output file starts with a header holding the package version, the full
configuration and the master seed; CSV files carry it as a single ``#`` JSON
line.  Worker count is an execution detail and is kept out of the header, so
files are byte-identical for any ``--threads``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import EnsembleParams, eigenvalues, sample_dirac, tau_for_sigma
from .errors import NumericalError
from .fredholm import FredholmConfig, cdf_table, gumbel_cdf, table_to_csv
from .kernels_finite import (
    WeightParams,
    density_finite,
    edge_point,
    kernel_contour,
    log_kernel_finite,
    orthogonality_gram,
)
from .kernels_limit import (
    density_erfc,
    density_interp_large_sigma,
    interp_airy_matrix_contour,
    interp_airy_matrix_real,
    kernel_airy,
    kernel_bessel_interp,
    kernel_sine_interp,
)
from .specfun import erfc

OUTPUT_DIR_ENV = "CHIRAL_EDGE_OUTPUT_DIR"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (stop included within half a step), a comma list, or one number."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = map(float, parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("grid needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 0.5)) + 1
        return start + step * np.arange(count)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def _header(args, config: dict) -> dict:
    return {"version": __version__, "command": args.command, "config": config,
            "master_seed": config.get("seed")}


def _emit(args, text: str):
    if args.output is None:
        sys.stdout.write(text)
        return
    path = Path(args.output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _csv(header: dict, columns: list[str], rows) -> str:
    lines = ["# " + json.dumps(header, sort_keys=True), ",".join(columns)]
    lines += [",".join(repr(float(v)) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _json(header: dict, body: dict) -> str:
    return json.dumps({"header": header, **body}, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if hasattr(o, "as_dict"):
        return o.as_dict()
    raise TypeError(type(o).__name__)


def _table(args, header, columns, rows):
    if args.format == "json":
        return _json(header, {"columns": columns, "rows": [list(map(float, r)) for r in rows]})
    return _csv(header, columns, rows)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_sample(args) -> int:
    params = EnsembleParams(args.n, args.nu, args.tau)
    config = {**params.as_dict(), "seed": args.seed, "trial": args.trial}
    ev = eigenvalues(sample_dirac(params, args.seed, args.trial))
    header = _header(args, config)
    if args.format == "json":
        _emit(args, _json(header, {"eigenvalues": [[float(z.real), float(z.imag)] for z in ev.z]}))
    else:
        _emit(args, ev.to_csv(header))
    return EXIT_OK


def _kernel_log_values(args, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    kind = args.kind
    if kind in ("finite", "contour"):
        wp = WeightParams(args.n, args.nu, args.tau)
        scale = math.log((1.0 - wp.tau) / (2.0 * wp.n))
        p1, p2 = edge_point(z1, wp), edge_point(z2, wp)
        if kind == "finite":
            return scale + log_kernel_finite(p1, p2, wp)
        return np.array([scale + kernel_contour(a, b, wp).log for a, b in zip(p1, p2)])
    if kind in ("airy-interp", "airy-interp-hat"):
        hat = kind == "airy-interp-hat"
        if args.representation == "contour":
            return np.array([interp_airy_matrix_contour([a], [b], args.sigma, hat=hat)[0, 0]
                             for a, b in zip(z1, z2)])
        return np.array([interp_airy_matrix_real([a], [b], args.sigma, hat=hat)[0, 0]
                         for a, b in zip(z1, z2)])
    if kind == "airy":
        return np.log(kernel_airy(z1.real, z2.real).astype(complex))
    if kind == "sine":
        return np.log(np.asarray(kernel_sine_interp(z1, z2, args.sigma), dtype=complex))
    if kind == "bessel":
        return np.log(np.asarray(kernel_bessel_interp(z1, z2, args.sigma, args.nu), dtype=complex))
    raise ValueError(f"unknown kernel kind {kind!r}")


def cmd_kernel(args) -> int:
    xi, eta = args.xi, args.eta
    X, Y = np.meshgrid(xi, eta, indexing="ij")
    z1 = (X + 1j * Y).ravel()
    z2 = z1 if args.zeta2 is None else np.full_like(z1, complex(args.zeta2))
    with np.errstate(divide="ignore"):
        lk = _kernel_log_values(args, z1, z2)
    config = {"kind": args.kind, "n": args.n, "nu": args.nu, "tau": args.tau, "sigma": args.sigma,
              "representation": args.representation, "xi": xi.tolist(), "eta": eta.tolist(),
              "zeta2": None if args.zeta2 is None else [args.zeta2.real, args.zeta2.imag],
              "seed": None}
    rows = [(a.real, a.imag, l.real, math.remainder(l.imag, 2 * math.pi)) for a, l in zip(z1, lk)]
    _emit(args, _table(args, _header(args, config), ["xi", "eta", "log_abs_K", "phase"], rows))
    return EXIT_OK


def cmd_density(args) -> int:
    xi = args.xi
    config = {"n": args.n, "nu": args.nu, "tau": args.tau, "large_sigma": args.large_sigma,
              "xi": xi.tolist(), "eta": args.eta_value, "seed": None}
    if args.large_sigma is not None:
        vals = density_interp_large_sigma(xi + 1j * args.eta_value, args.large_sigma)
        ref = erfc(xi) / (4.0 * math.pi)
        rows = list(zip(xi, vals, ref))
        cols = ["xi", "sigma2_hatK", "erfc_over_4pi"]
    else:
        wp = WeightParams(args.n, args.nu, args.tau)
        vals = density_finite(xi + 1j * args.eta_value, wp)
        rows = list(zip(xi, vals, density_erfc(xi, args.tau)))
        cols = ["xi", "rho_n", "erfc_reference"]
    _emit(args, _table(args, _header(args, config), cols, rows))
    return EXIT_OK


def cmd_fredholm(args) -> int:
    cfg = FredholmConfig(args.m_xi, args.m_eta, args.L, args.H)
    rows = cdf_table(args.sigma, args.t, cfg, error_estimate=not args.no_error_estimate)
    config = {"sigma": args.sigma, "t": args.t.tolist(), "m_xi": cfg.m_xi, "m_eta": cfg.m_eta,
              "L": cfg.L, "H": cfg.H, "seed": None}
    header = _header(args, config)
    if args.format == "json":
        _emit(args, _json(header, {"rows": [r.__dict__ for r in rows]}))
    else:
        _emit(args, table_to_csv(rows, header))
    return EXIT_OK


def _suite_orthogonality(args) -> dict:
    worst, details = 0.0, []
    for nu in range(args.nu_max + 1):
        G, h, err = orthogonality_gram(args.jk_max, nu, args.a, args.b)
        res = np.abs(G - np.diag(h)) / np.maximum(h[:, None], h[None, :])
        worst = max(worst, float(res.max()))
        details.append({"nu": nu, "max_residual": float(res.max()), "max_error_estimate": float(err.max())})
    return {"max_residual": worst, "tolerance": 1e-6, "passed": worst <= 1e-6, "by_nu": details}


def _suite_contour(args) -> dict:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for tau in (0.3, 0.5, 0.7, 0.9):
        wp = WeightParams(args.n_contour, args.nu_max, tau)
        for _ in range(5):
            a, b = edge_point(rng.uniform(-2, 2, 2) + 1j * rng.uniform(-1, 1, 2), wp)
            x = kernel_contour(a, b, wp).to_complex()
            y = np.exp(log_kernel_finite(a, b, wp))
            worst = max(worst, abs(x - y) / abs(y))
    return {"max_relative_difference": worst, "tolerance": 1e-8, "passed": worst <= 1e-8}


def _suite_airy_forms(args) -> dict:
    g = np.linspace(-2.0, 2.0, 5)
    pts = (g[:, None] + 1j * g[None, :]).ravel()
    worst = 0.0
    for s in (0.25, 0.5, 1.0, 2.0):
        A = np.exp(interp_airy_matrix_real(pts, pts, s))
        B = np.exp(interp_airy_matrix_contour(pts, pts, s))
        worst = max(worst, float(np.max(np.abs(A - B) / np.abs(A))))
    return {"max_relative_difference": worst, "tolerance": 1e-6, "passed": worst <= 1e-6}


SUITES = {"orthogonality": _suite_orthogonality, "contour": _suite_contour, "airy-forms": _suite_airy_forms}


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    config = {"suite": args.suite, "nu_max": args.nu_max, "jk_max": args.jk_max, "a": args.a,
              "b": args.b, "n_contour": args.n_contour, "seed": args.seed}
    results = {name: SUITES[name](args) for name in names}
    ok = all(r["passed"] for r in results.values())
    _emit(args, _json(_header(args, config), {"suites": results, "passed": ok}))
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_mc(args) -> int:
    from scipy.interpolate import PchipInterpolator

    from .stats import (
        Experiment,
        collect_points,
        ecdf_summary,
        edge_density_histogram,
        mc_last_particle,
        poisson_count_test,
        report_json,
    )

    tau = args.tau if args.sigma is None else tau_for_sigma(args.n, args.sigma)
    regime = {"last-particle": args.regime, "poisson": "gumbel", "density": "strong"}[args.experiment]
    exp = Experiment.build(args.n, args.nu, tau, regime, args.trials, args.seed)
    config = {"experiment": args.experiment, **exp.as_dict(), "seed": args.seed}
    pts = collect_points(exp, workers=args.threads)
    header = _header(args, config)
    if args.experiment == "last-particle":
        samples = mc_last_particle(exp, points=pts)
        if args.format == "csv":
            _emit(args, _csv(header, ["trial", "max_xi"], [(str(i), v) for i, v in enumerate(samples)]))
            return EXIT_OK
        if regime == "gumbel":
            summary = ecdf_summary(samples, gumbel_cdf, "gumbel")
        else:
            grid = np.arange(-7.0, 5.0 + 1e-9, 0.25)
            vals = [r.F for r in cdf_table(exp.scaling.sigma_n, grid, error_estimate=False)]
            interp = PchipInterpolator(grid, vals, extrapolate=False)
            summary = ecdf_summary(samples, lambda x: np.clip(np.nan_to_num(
                interp(x), nan=0.0) + (np.asarray(x) > grid[-1]), 0.0, 1.0), "fredholm")
        stats = {"ecdf": summary.as_dict()}
    elif args.experiment == "poisson":
        boxes = [(0.0, 1.0, -1.0, 1.0), (10.0, math.inf, -math.inf, math.inf)]
        stats = {"boxes": [b.as_dict() for b in poisson_count_test(pts, boxes)]}
    else:
        h = edge_density_histogram(pts, tau, (args.window_lo, args.window_hi), args.bins)
        if args.format == "csv":
            _emit(args, h.to_csv(header))
            return EXIT_OK
        stats = {"edges": h.edges, "counts": h.counts, "density": h.density, "erfc_reference": h.reference}
    text = report_json(exp, stats)
    body = json.loads(text)
    _emit(args, _json(header, body))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chiral-edge", description="Edge statistics of the chiral non-Hermitian Dirac ensemble.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt="csv"):
        sp.add_argument("--output", "-o", help=f"output file (relative paths honour ${OUTPUT_DIR_ENV})")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)

    def ensemble(sp, n=100):
        sp.add_argument("--n", type=_pos_int, default=n)
        sp.add_argument("--nu", type=_nonneg_int, default=0)
        sp.add_argument("--tau", type=float, default=0.5)

    sp = sub.add_parser("sample", help="eigenvalues of one draw")
    ensemble(sp)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--trial", type=_nonneg_int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("kernel", help="kernel values on a grid, as (xi, eta, log|K|, phase)")
    sp.add_argument("--kind", choices=("finite", "contour", "airy-interp", "airy-interp-hat",
                                       "airy", "sine", "bessel"), default="airy-interp")
    ensemble(sp, n=20)
    sp.add_argument("--sigma", type=float, default=1.0, help="sigma, or sigma_hat for sine/bessel")
    sp.add_argument("--representation", choices=("real", "contour"), default="real")
    sp.add_argument("--xi", type=parse_grid, default=parse_grid("-2:2:1"))
    sp.add_argument("--eta", type=parse_grid, default=parse_grid("0"))
    sp.add_argument("--zeta2", type=complex, default=None, help="fixed second argument (default: diagonal)")
    common(sp)
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("density", help="edge density against the erfc profile")
    ensemble(sp, n=200)
    sp.add_argument("--xi", type=parse_grid, default=parse_grid("-3:1:0.25"))
    sp.add_argument("--eta-value", type=float, default=0.0)
    sp.add_argument("--large-sigma", type=float, default=None,
                    help="evaluate sigma^2 hatK(sigma zeta, sigma zeta) instead of the finite-n density")
    common(sp)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("fredholm", help="last-particle distribution F_sigma(t)")
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--t", type=parse_grid, required=True)
    sp.add_argument("--m-xi", type=int, default=48)
    sp.add_argument("--m-eta", type=int, default=24)
    sp.add_argument("--L", type=float, default=12.0)
    sp.add_argument("--H", type=float, default=None)
    sp.add_argument("--no-error-estimate", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_fredholm)

    sp = sub.add_parser("verify", help="numerical verification suites")
    sp.add_argument("--suite", choices=("orthogonality", "contour", "airy-forms", "all"), default="all")
    sp.add_argument("--nu-max", type=_nonneg_int, default=3)
    sp.add_argument("--jk-max", type=_nonneg_int, default=8)
    sp.add_argument("--a", type=float, default=2.0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--n-contour", type=_pos_int, default=20)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    common(sp, fmt="json")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("mc", help="Monte Carlo experiments")
    sp.add_argument("--experiment", choices=("last-particle", "poisson", "density"), default="last-particle")
    ensemble(sp, n=150)
    sp.add_argument("--sigma", type=float, default=None, help="set tau from sigma_n (overrides --tau)")
    sp.add_argument("--regime", choices=("interpolating", "gumbel"), default="interpolating")
    sp.add_argument("--trials", type=_pos_int, default=200)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--threads", type=_pos_int, default=os.cpu_count() or 1)
    sp.add_argument("--window-lo", type=float, default=-4.0)
    sp.add_argument("--window-hi", type=float, default=4.0)
    sp.add_argument("--bins", default="fd")
    common(sp, fmt="json")
    sp.set_defaults(func=cmd_mc)
    return p


_GRID_FLAGS = ("--t", "--xi", "--eta")


def _join_negative_values(argv: list[str]) -> list[str]:
    # "-3:1:0.5" is not a negative number to argparse, so bind it explicitly
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _GRID_FLAGS and nxt is not None and len(nxt) > 1 and nxt[0] == "-" \
                and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_join_negative_values(argv))
        if getattr(args, "bins", None) is not None and args.bins != "fd":
            args.bins = int(args.bins)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
