"""Sampling the chiral Gaussian two-matrix Dirac model and edge scalings."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, NumericalError

__all__ = [
    "EnsembleParams",
    "DiracSample",
    "EigenvalueSample",
    "ScalingParams",
    "trial_generator",
    "sample_dirac",
    "eigenvalues",
    "dirac_matrix",
    "sigma_n",
    "tau_for_sigma",
    "scaling_params",
    "rescale",
]


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    nu: int = 0
    tau: float = 0.5

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if int(self.nu) != self.nu or self.nu < 0:
            raise DomainError(f"nu must be a non-negative integer, got {self.nu!r}")
        if not (0.0 <= float(self.tau) <= 1.0):
            raise DomainError(f"tau must lie in [0, 1], got {self.tau!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "tau", float(self.tau))

    def as_dict(self):
        return {"n": self.n, "nu": self.nu, "tau": self.tau}


def trial_generator(master_seed: int, trial: int = 0) -> np.random.Generator:
    """Independent Philox stream for ``(master_seed, trial)``.

    Streams depend only on the pair, so trials can be scheduled in any order or
    on any worker and still reproduce bit for bit.
    """
    if master_seed < 0 or trial < 0:
        raise DomainError("seed and trial index must be non-negative")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(eq=False)
class DiracSample:
    """The Gaussian pair (P, Q) of shape n x (n+nu) and the derived blocks."""

    P: np.ndarray
    Q: np.ndarray
    params: EnsembleParams
    seed: int = 0
    trial: int = 0

    @cached_property
    def phi(self) -> np.ndarray:
        t = self.params.tau
        return math.sqrt(1.0 + t) * self.P + math.sqrt(1.0 - t) * self.Q

    @cached_property
    def psi(self) -> np.ndarray:
        t = self.params.tau
        return math.sqrt(1.0 + t) * self.P.conj().T - math.sqrt(1.0 - t) * self.Q.conj().T


def sample_dirac(params: EnsembleParams, seed: int, trial: int = 0) -> DiracSample:
    """Draw P and Q with iid complex Gaussian entries.

    Real and imaginary parts are independent with variance 1/(4n) each, so
    ``E|P_ij|^2 = 1/(2n)``, the density ``exp(-2n Tr(PP^+ + QQ^+))``.
    """
    rng = trial_generator(seed, trial)
    n, m = params.n, params.n + params.nu
    g = rng.standard_normal((4, n, m))
    scale = 1.0 / math.sqrt(4.0 * n)
    P = (g[0] + 1j * g[1]) * scale
    Q = (g[2] + 1j * g[3]) * scale
    return DiracSample(P, Q, params, seed, trial)


def dirac_matrix(sample: DiracSample) -> np.ndarray:
    """Assemble the full (2n+nu) x (2n+nu) block matrix [[0, Phi], [Psi, 0]]."""
    n, m = sample.params.n, sample.params.n + sample.params.nu
    D = np.zeros((n + m, n + m), dtype=complex)
    D[:n, n:] = sample.phi
    D[n:, :n] = sample.psi
    return D


@dataclass(eq=False)
class EigenvalueSample:
    """The n eigenvalues z_k with Re z_k >= 0, sorted by descending real part."""

    z: np.ndarray
    params: EnsembleParams
    seed: int = 0
    trial: int = 0

    def __len__(self):
        return len(self.z)

    def to_json(self) -> str:
        return json.dumps({
            "params": self.params.as_dict(),
            "seed": self.seed,
            "trial": self.trial,
            "eigenvalues": [[float(v.real), float(v.imag)] for v in self.z],
        })

    @classmethod
    def from_json(cls, text: str) -> "EigenvalueSample":
        d = json.loads(text)
        z = np.array([complex(re, im) for re, im in d["eigenvalues"]])
        return cls(z, EnsembleParams(**d["params"]), d.get("seed", 0), d.get("trial", 0))

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im"])
        for v in self.z:
            w.writerow([repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, params: EnsembleParams | None = None, seed: int = 0) -> "EigenvalueSample":
        lines = text.splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            meta = json.loads(lines[0][1:])
            lines = lines[1:]
        rows = list(csv.reader(lines))
        z = np.array([complex(float(r[0]), float(r[1])) for r in rows[1:]])
        if params is None:
            params = EnsembleParams(**meta["params"]) if "params" in meta else EnsembleParams(len(z))
        return cls(z, params, meta.get("seed", seed), meta.get("trial", 0))


def _sorted_roots(w: np.ndarray) -> np.ndarray:
    z = np.sqrt(w.astype(complex))
    # principal root has Re >= 0; on the imaginary axis prefer Im >= 0
    on_axis = z.real == 0
    z[on_axis] = 1j * np.abs(z[on_axis].imag)
    order = np.lexsort((-z.imag, -z.real))
    return z[order]


def eigenvalues(sample: DiracSample) -> EigenvalueSample:
    """Eigenvalues of the Dirac matrix with non-negative real part.

    Computed as principal square roots of the spectrum of the n x n product
    Phi Psi; at tau = 1 that product is Phi Phi^+ and a Hermitian solver is used.
    """
    M = sample.phi @ sample.psi
    if not np.all(np.isfinite(M)):
        raise NumericalError("non-finite entries in Phi Psi", trial=sample.trial)
    try:
        if sample.params.tau == 1.0:
            w = np.clip(np.linalg.eigvalsh(M), 0.0, None)
        else:
            w = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigensolver did not converge", n=sample.params.n,
                             seed=sample.seed, trial=sample.trial, cause=str(exc)) from exc
    return EigenvalueSample(_sorted_roots(w), sample.params, sample.seed, sample.trial)


# --------------------------------------------------------------------------
# scalings
# --------------------------------------------------------------------------

REGIMES = ("interpolating", "gumbel", "strong")


@dataclass(frozen=True)
class ScalingParams:
    a_n: float
    b_n: float
    c_n: float
    sigma_n: float
    regime: str

    def shifted(self, dc: float) -> "ScalingParams":
        return ScalingParams(self.a_n, self.b_n, self.c_n + dc, self.sigma_n, self.regime)

    def as_dict(self):
        return {"a_n": self.a_n, "b_n": self.b_n, "c_n": self.c_n,
                "sigma_n": self.sigma_n, "regime": self.regime}


def sigma_n(n: int, tau: float) -> float:
    return (2.0 * n) ** (1.0 / 6.0) * math.sqrt(1.0 - tau)


def tau_for_sigma(n: int, sigma: float) -> float:
    """The tau giving edge parameter sigma at size n: 1 - sigma^2 (2n)^(-1/3)."""
    tau = 1.0 - sigma * sigma * (2.0 * n) ** (-1.0 / 3.0)
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"sigma={sigma} is too large for n={n}")
    return tau


def scaling_params(n: int, tau: float, regime: str | None = None) -> ScalingParams:
    """Centering and scale constants for the rescaled edge process.

    ``interpolating``: a_n = (2n)^(-2/3), b_n = sigma_n a_n, c_n = 1 + tau.
    ``gumbel``: the log-corrected constants for sigma_n -> infinity; requires
    sigma_n > 1 so that log(sigma_n) > 0.
    ``strong``: a_n = b_n = sqrt((1 - tau)/(2n)), c_n = 1 + tau, the scale on
    which the edge density has an erfc profile at fixed tau < 1.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if not 0.0 <= tau <= 1.0:
        raise DomainError("tau must lie in [0, 1]")
    regime = regime or "interpolating"
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}")
    s = sigma_n(n, tau)
    base = (2.0 * n) ** (-2.0 / 3.0)
    if regime == "interpolating":
        return ScalingParams(base, s * base, 1.0 + tau, s, regime)
    if regime == "strong":
        if tau == 1.0:
            raise DomainError("strong scaling needs tau < 1")
        h = math.sqrt((1.0 - tau) / (2.0 * n))
        return ScalingParams(h, h, 1.0 + tau, s, regime)

    if not s > 1.0:
        raise DomainError(
            f"gumbel scaling needs sigma_n > 1 (sigma_n -> infinity hypothesis), got sigma_n={s:.4g}")
    that = 0.5 * (1.0 + tau)
    ls = math.log(s)
    a = math.sqrt(that) * s / math.sqrt(6.0 * ls) * base
    b = that ** -0.25 * s ** 2.5 / (6.0 * ls) ** 0.25 * base
    c = (1.0 + tau) + a * (3.0 * ls - 1.25 * math.log(6.0 * ls) - math.log(2.0 * math.pi * that ** 0.75))
    return ScalingParams(a, b, c, s, regime)


def rescale(eigs: EigenvalueSample | np.ndarray, s: ScalingParams) -> np.ndarray:
    """Map eigenvalues to ``((x - c_n)/a_n, y/b_n)`` as an (n, 2) array."""
    if not s.b_n > 0:
        raise DomainError("b_n = 0 (tau = 1): the edge process is one-dimensional; "
                          "use the Hermitian-limit tools instead")
    z = eigs.z if isinstance(eigs, EigenvalueSample) else np.asarray(eigs, dtype=complex)
    return np.column_stack(((z.real - s.c_n) / s.a_n, z.imag / s.b_n))
