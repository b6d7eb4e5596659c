"""Monte Carlo experiments on the rescaled edge process.

Each trial draws from its own Philox stream keyed by (master_seed, trial), and
BLAS is pinned to one thread inside every trial, so results do not depend on
the worker count or on scheduling order.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erf
from threadpoolctl import threadpool_limits

from .ensemble import (
    EnsembleParams,
    ScalingParams,
    eigenvalues,
    rescale,
    sample_dirac,
    scaling_params,
)
from .errors import ConfigurationError, DomainError, NumericalError
from .kernels_limit import density_erfc

__all__ = [
    "Experiment",
    "EcdfSummary",
    "BoxReport",
    "HistogramReport",
    "trial_points",
    "collect_points",
    "mc_last_particle",
    "ks_statistic",
    "ecdf_summary",
    "poisson_intensity_integral",
    "poisson_count_test",
    "edge_density_histogram",
    "report_json",
]


@dataclass(frozen=True)
class Experiment:
    """A Monte Carlo run: ensemble, scaling, trial count and master seed.

    The scale constants are recomputed from ``params`` and checked; only the
    centering ``c_n`` may be moved (see ``ScalingParams.shifted``).
    """

    params: EnsembleParams
    scaling: ScalingParams
    trials: int
    master_seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be non-negative")
        ref = scaling_params(self.params.n, self.params.tau, self.scaling.regime)
        for name in ("a_n", "b_n", "sigma_n"):
            if not math.isclose(getattr(ref, name), getattr(self.scaling, name), rel_tol=1e-12):
                raise ConfigurationError(f"scaling.{name} is inconsistent with the ensemble parameters")

    @classmethod
    def build(cls, n: int, nu: int, tau: float, regime: str, trials: int, master_seed: int):
        return cls(EnsembleParams(n, nu, tau), scaling_params(n, tau, regime), trials, master_seed)

    def as_dict(self):
        return {"params": self.params.as_dict(), "scaling": self.scaling.as_dict(),
                "trials": self.trials, "master_seed": self.master_seed}


def trial_points(params: EnsembleParams, scaling: ScalingParams, seed: int, trial: int) -> np.ndarray:
    """Rescaled eigenvalues (x_hat, y_hat) of one trial, shape (n, 2)."""
    with threadpool_limits(limits=1):
        try:
            ev = eigenvalues(sample_dirac(params, seed, trial))
        except NumericalError as exc:
            exc.diagnostics.setdefault("trial", trial)
            raise
    return rescale(ev, scaling)


def _chunk_worker(args):
    params, scaling, seed, trials = args
    return [trial_points(params, scaling, seed, t) for t in trials]


def collect_points(exp: Experiment, workers: int = 1) -> list[np.ndarray]:
    """Per-trial rescaled points, ordered by trial index."""
    if workers < 1:
        raise ConfigurationError("workers must be at least 1")
    ids = list(range(exp.trials))
    if workers == 1 or exp.trials == 1:
        return _chunk_worker((exp.params, exp.scaling, exp.master_seed, ids))
    chunks = [ids[k::workers] for k in range(workers)]
    out: list[np.ndarray | None] = [None] * exp.trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk, res in zip(chunks, pool.map(_chunk_worker,
                                               [(exp.params, exp.scaling, exp.master_seed, c) for c in chunks])):
            for t, pts in zip(chunk, res):
                out[t] = pts
    return out


def mc_last_particle(exp: Experiment, workers: int = 1, points: list[np.ndarray] | None = None) -> np.ndarray:
    """Largest rescaled real part per trial."""
    pts = points if points is not None else collect_points(exp, workers)
    return np.array([p[:, 0].max() for p in pts])


def _eval_cdf(cdf, x: np.ndarray) -> np.ndarray:
    try:
        v = np.asarray(cdf(x), dtype=float)
        if v.shape == x.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(float(u))) for u in x])


def ks_statistic(samples, cdf) -> float:
    """sup_x |ECDF(x) - cdf(x)|, exact for continuous or right-continuous cdf.

    The supremum is attained at a sample point or just left of one, so the
    left limit is taken at the next float below each sample.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise DomainError("ks_statistic needs at least one sample")
    i = np.arange(1, n + 1)
    F = _eval_cdf(cdf, x)
    F_left = _eval_cdf(cdf, np.nextafter(x, -np.inf))
    d_plus = np.max(i / n - F)
    d_minus = np.max(F_left - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


@dataclass(frozen=True, eq=False)
class EcdfSummary:
    samples: np.ndarray
    ks_vs_reference: float
    reference: str

    def __post_init__(self):
        if not 0.0 <= self.ks_vs_reference <= 1.0:
            raise ValueError("KS distance must lie in [0, 1]")

    def as_dict(self):
        s = self.samples
        return {"reference": self.reference, "ks": self.ks_vs_reference, "count": int(len(s)),
                "mean": float(np.mean(s)), "std": float(np.std(s, ddof=1)) if len(s) > 1 else 0.0}


def ecdf_summary(samples, cdf, reference: str) -> EcdfSummary:
    s = np.sort(np.asarray(samples, dtype=float))
    return EcdfSummary(s, ks_statistic(s, cdf), reference)


# --------------------------------------------------------------------------
# Poisson limit
# --------------------------------------------------------------------------

def poisson_intensity_integral(box) -> float:
    """Integral of pi^(-1/2) exp(-xi - eta^2) over [x0, x1] x [y0, y1]."""
    x0, x1, y0, y1 = map(float, box)
    return (math.exp(-x0) - math.exp(-x1)) * 0.5 * (erf(y1) - erf(y0))


@dataclass(frozen=True)
class BoxReport:
    box: tuple
    expected: float
    mean: float
    variance: float
    mean_variance_ratio: float
    degenerate: bool

    def as_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def poisson_count_test(points_per_trial: list[np.ndarray], boxes) -> list[BoxReport]:
    """Per-trial box counts against the limiting Poisson intensity.

    A report is flagged degenerate when there are fewer than two trials or the
    counts have zero variance (the ratio is then NaN).
    """
    out = []
    for box in boxes:
        x0, x1, y0, y1 = map(float, box)
        counts = np.array([np.count_nonzero((p[:, 0] >= x0) & (p[:, 0] < x1)
                                            & (p[:, 1] >= y0) & (p[:, 1] < y1))
                           for p in points_per_trial], dtype=float)
        if len(counts) < 2:
            out.append(BoxReport((x0, x1, y0, y1), poisson_intensity_integral(box),
                                 float(counts.mean()) if len(counts) else float("nan"),
                                 float("nan"), float("nan"), True))
            continue
        mean, var = float(counts.mean()), float(counts.var(ddof=1))
        ratio = mean / var if var > 0 else float("nan")
        out.append(BoxReport((x0, x1, y0, y1), poisson_intensity_integral(box), mean, var,
                             ratio, var == 0))
    return out


# --------------------------------------------------------------------------
# density profile
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HistogramReport:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    reference: np.ndarray
    total_points: int
    eta_window: float
    trials: int

    def to_csv(self, header: dict | None = None) -> str:
        lines = []
        if header is not None:
            lines.append("# " + json.dumps(header, sort_keys=True))
        lines.append("xi_lo,xi_hi,count,density,erfc_reference")
        for a, b, c, d, r in zip(self.edges[:-1], self.edges[1:], self.counts, self.density, self.reference):
            lines.append(f"{a!r},{b!r},{int(c)},{d!r},{r!r}")
        return "\n".join(lines) + "\n"


def edge_density_histogram(points_per_trial: list[np.ndarray], tau: float, window=(-4.0, 4.0),
                           bins: int | str = "fd", eta_window: float = 2.0) -> HistogramReport:
    """Density of rescaled points per unit area, binned in xi over |eta| < eta_window.

    Points must be in the ``strong`` scaling.  ``bins="fd"`` uses the
    Freedman-Diaconis rule on the xi values inside the window.
    """
    lo, hi = map(float, window)
    pts = np.concatenate(points_per_trial) if points_per_trial else np.empty((0, 2))
    keep = (pts[:, 0] >= lo) & (pts[:, 0] <= hi) & (np.abs(pts[:, 1]) < eta_window)
    xi = pts[keep, 0]
    edges = np.histogram_bin_edges(xi, bins=bins, range=(lo, hi)) if len(xi) else np.linspace(lo, hi, 11)
    counts, edges = np.histogram(xi, bins=edges)
    area = np.diff(edges) * 2.0 * eta_window * len(points_per_trial)
    density = counts / area
    mids = 0.5 * (edges[:-1] + edges[1:])
    return HistogramReport(edges, counts, density, density_erfc(mids, tau), int(keep.sum()),
                           eta_window, len(points_per_trial))


def report_json(experiment: Experiment, statistics: dict, criteria: dict | None = None) -> str:
    """Experiment report: inputs, seeds, statistics and pass/fail per criterion."""
    body = {"experiment": experiment.as_dict(), "statistics": statistics,
            "criteria": criteria or {},
            "note": "Monte Carlo tolerances are engineering thresholds, not asymptotic rates."}
    return json.dumps(body, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "as_dict"):
        return o.as_dict()
    raise TypeError(type(o).__name__)
