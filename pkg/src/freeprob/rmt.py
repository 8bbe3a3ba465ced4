"""Random-matrix Monte Carlo: Haar-conjugated diagonal matrices, their
spectra, and experiments comparing empirical spectral statistics with the
analytic free-probability predictions.

Randomness
----------
A master seed feeds ``numpy.random.SeedSequence``; trial ``i`` uses the
i-th spawned child driving a PCG64 generator.  Complex Gaussian entries are
produced by Box-Muller from that generator's uniforms,

    r = sqrt(-2 log(1 - u1)),   z = r * exp(2 pi i u2) / sqrt(2),

so the stream depends only on PCG64 and IEEE arithmetic.  Trials are run in
index order and aggregated by mean with jackknife standard errors.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytic import conv_G, as_handle, kernel_expectation, stieltjes_density
from .cumulants import FreeFamilySpec, FreeWord, free_add_convolve, m2c, mixed_moment
from .jsonfmt import dumps, fmt_float
from .measures import (
    AtomicMeasure,
    GridDensity,
    classical_convolve,
    kolmogorov_distance,
    moments_of,
)

HERMITIAN_TOL = 1e-12
# eigenvalues closer than this to a reference atom count as that atom
EIG_TOL = 1e-9
WORD_MAX = 8
POLY_DEG_MAX = 4
REFERENCE_POINTS = 4001


class Rng:
    """Seeded PCG64 stream with deterministic per-trial substreams."""

    def __init__(self, seed, _seq=None):
        if seed is None:
            raise ValueError("an explicit seed is required")
        self.seed = int(seed)
        self._seq = _seq if _seq is not None else np.random.SeedSequence(self.seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, n: int) -> list:
        return [Rng(self.seed, child) for child in self._seq.spawn(n)]

    def uniform(self, size=None):
        return self._gen.random(size)

    def complex_normal(self, shape):
        """Standard complex Gaussians, E|z|^2 = 1, by Box-Muller."""
        u1 = self.uniform(shape)
        u2 = self.uniform(shape)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        return r * np.exp(2j * np.pi * u2) / math.sqrt(2)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def haar_unitary(N: int, rng: Rng) -> np.ndarray:
    """Haar unitary: QR of a complex Ginibre matrix with R's diagonal made positive."""
    if N < 1:
        raise ValueError("N must be >= 1")
    Z = rng.complex_normal((N, N))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def multiplicities(weights, N: int) -> np.ndarray:
    """Largest-remainder rounding of N * weights.

    Atoms are assumed sorted by location; ties in the remainder go to the
    lower location.
    """
    w = np.asarray(weights, dtype=float)
    raw = N * w / w.sum()
    base = np.floor(raw).astype(int)
    left = N - int(base.sum())
    rem = raw - base
    # stable sort on -remainder keeps the lower index first among ties
    order = np.argsort(-np.round(rem, 12), kind="stable")
    base[order[:left]] += 1
    return base


def diagonal_of(spec: AtomicMeasure, N: int) -> np.ndarray:
    counts = multiplicities(spec.weights, N)
    return np.repeat(spec.locations, counts)


def conjugate_diag(spec: AtomicMeasure, N: int, rng: Rng) -> np.ndarray:
    """U D U* with D holding the atoms of ``spec`` at rounded multiplicities."""
    d = diagonal_of(spec, N)
    if len(spec) == 1:
        # a scalar matrix is invariant under conjugation
        return np.diag(d).astype(complex)
    U = haar_unitary(N, rng)
    A = (U * d) @ U.conj().T
    return (A + A.conj().T) / 2


def hermitian_eigs(A, vectors: bool = False):
    """Ascending eigenvalues (and orthonormal eigenvectors) of Hermitian A."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(A).max())) if A.size else 1.0
    if A.size and np.abs(A - A.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    if vectors:
        return np.linalg.eigh(A)
    return np.linalg.eigvalsh(A)


# -- reports ---------------------------------------------------------------

def jackknife(values, stat=np.mean):
    """(estimate, standard error) of ``stat`` by leave-one-out resampling."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    est = float(stat(x))
    if n < 2:
        return est, float("nan")
    loo = np.array([stat(np.delete(x, i)) for i in range(n)])
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return est, se


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    estimates: dict
    reference: dict
    distances: dict
    passed: bool
    per_trial: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "estimates": self.estimates,
            "reference": self.reference,
            "distances": self.distances,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        lines = ["trial,stat,value"]
        for i, row in enumerate(self.per_trial):
            for name, value in row.items():
                lines.append(f"{i},{name},{fmt_float(value)}")
        return "\n".join(lines) + "\n"

    def stat(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.per_trial])


def _summarize(per_trial, names):
    out = {}
    for name in names:
        est, se = jackknife([row[name] for row in per_trial])
        out[name] = {"mean": est, "se": se, "trials": len(per_trial)}
    return out


def _check_sizes(N, trials, lo=50):
    if N < lo:
        raise ValueError(f"N must be >= {lo}")
    if trials < 5:
        raise ValueError("trials must be >= 5")


def _params(N, trials, rng, **extra):
    return {"N": N, "trials": trials, "seed": rng.seed, "version": __version__, **extra}


def _esd_stats(eigs, K):
    row = {f"m{k}": float(np.mean(eigs**k)) for k in range(1, K + 1)}
    return row


def _ks_to(eigs, ref):
    return kolmogorov_distance(AtomicMeasure.empirical(eigs), ref, atol=EIG_TOL)


def free_reference(a: AtomicMeasure, b: AtomicMeasure, points=REFERENCE_POINTS) -> GridDensity:
    """Analytic density of a free-convolution b on a padded support grid."""
    ha, hb = as_handle(a), as_handle(b)
    lo = ha.support[0] + hb.support[0]
    hi = ha.support[1] + hb.support[1]
    pad = 0.05 * (hi - lo) + 0.1
    return stieltjes_density(lambda z: conv_G(ha, hb, z), (lo - pad, hi + pad, points))


def additive_experiment(a: AtomicMeasure, b: AtomicMeasure, N=500, trials=20, rng=None,
                        K=6, moment_tol=0.05, ks_tol=0.05, reference=None) -> ExperimentReport:
    """ESD of A' + B' with independent Haar conjugations versus a free-convolution b.

    ``reference`` may supply a precomputed reference distribution; by default
    the analytic density is recovered by Stieltjes inversion.
    """
    _check_sizes(N, trials)
    rng = rng or Rng(0)
    ref_m = free_add_convolve(moments_of(a, K), moments_of(b, K))
    ref = reference if reference is not None else free_reference(a, b)
    classical = classical_convolve(a, b)
    per_trial = []
    for sub in rng.spawn(trials):
        A = conjugate_diag(a, N, sub)
        B = conjugate_diag(b, N, sub)
        eigs = hermitian_eigs(A + B)
        row = _esd_stats(eigs, K)
        row["ks"] = _ks_to(eigs, ref)
        row["ks_classical"] = _ks_to(eigs, classical)
        per_trial.append(row)
    names = [f"m{k}" for k in range(1, K + 1)] + ["ks", "ks_classical"]
    est = _summarize(per_trial, names)
    moment_err = {f"m{k}": abs(est[f"m{k}"]["mean"] - float(ref_m[k])) for k in range(1, min(K, 4) + 1)}
    passed = max(moment_err.values()) <= moment_tol and est["ks"]["mean"] <= ks_tol
    return ExperimentReport(
        "additive",
        _params(N, trials, rng, K=K, moment_tol=moment_tol, ks_tol=ks_tol),
        est,
        {"moments": [float(v) for v in ref_m.m]},
        {"ks_free": est["ks"]["mean"], "ks_classical": est["ks_classical"]["mean"],
         "moment_errors": moment_err},
        bool(passed),
        per_trial,
    )


def diagonal_experiment(a: AtomicMeasure, b: AtomicMeasure, N=500, trials=20, rng=None,
                        K=6, ks_tol=0.05, contrast_min=0.2, reference=None) -> ExperimentReport:
    """ESD of A + B' with B' a randomly permuted diagonal: the classical convolution."""
    _check_sizes(N, trials)
    rng = rng or Rng(0)
    classical = classical_convolve(a, b)
    ref_m = moments_of(classical, K)
    free = reference if reference is not None else free_reference(a, b)
    da, db = diagonal_of(a, N), diagonal_of(b, N)
    per_trial = []
    for sub in rng.spawn(trials):
        M = np.diag(da + db[sub.permutation(N)]).astype(complex)
        eigs = hermitian_eigs(M)
        row = _esd_stats(eigs, K)
        row["ks"] = _ks_to(eigs, classical)
        row["ks_free"] = _ks_to(eigs, free)
        per_trial.append(row)
    names = [f"m{k}" for k in range(1, K + 1)] + ["ks", "ks_free"]
    est = _summarize(per_trial, names)
    passed = est["ks"]["mean"] <= ks_tol and est["ks_free"]["mean"] >= contrast_min
    return ExperimentReport(
        "diagonal",
        _params(N, trials, rng, K=K, ks_tol=ks_tol, contrast_min=contrast_min),
        est,
        {"moments": [float(v) for v in ref_m.m],
         "atoms": [[float(x), float(w)] for x, w in classical.atoms]},
        {"ks_classical": est["ks"]["mean"], "ks_free": est["ks_free"]["mean"]},
        bool(passed),
        per_trial,
    )


def _free_family(measures: dict, K: int):
    return FreeFamilySpec({lab: m2c(moments_of(m, K)) for lab, m in measures.items()})


def word_trace_experiment(word, a: AtomicMeasure, b: AtomicMeasure, N=300, trials=20, rng=None,
                          labels=("X", "Y"), n_se=3.0) -> ExperimentReport:
    """(1/N) tr of a monomial in A', B' versus the free mixed moment."""
    word = FreeWord.parse(word)
    if len(word) > WORD_MAX:
        raise ValueError(f"word length must be <= {WORD_MAX}")
    _check_sizes(N, trials, lo=1)
    rng = rng or Rng(0)
    measures = {labels[0]: a, labels[1]: b}
    unknown = set(word.letters) - set(measures)
    if unknown:
        raise ValueError(f"letters {sorted(unknown)} not in {labels}")
    ref = float(mixed_moment(_free_family(measures, len(word)), word))
    per_trial = []
    for sub in rng.spawn(trials):
        mats = {lab: conjugate_diag(m, N, sub) for lab, m in measures.items()}
        P = np.eye(N, dtype=complex)
        for lab in word.letters:
            P = P @ mats[lab]
        per_trial.append({"trace": float(np.trace(P).real) / N})
    est = _summarize(per_trial, ["trace"])
    err = abs(est["trace"]["mean"] - ref)
    band = max(n_se * est["trace"]["se"], 1e-9)
    return ExperimentReport(
        "word",
        _params(N, trials, rng, word=str(word), n_se=n_se),
        est,
        {"mixed_moment": ref},
        {"abs_error": err, "band": band},
        bool(err <= band),
        per_trial,
    )


def _poly_check(coeffs, name):
    coeffs = [float(c) for c in coeffs]
    if len(coeffs) - 1 > POLY_DEG_MAX:
        raise ValueError(f"deg {name} must be <= {POLY_DEG_MAX}")
    return coeffs


def cumulant_route(a: AtomicMeasure, b: AtomicMeasure, f, g) -> float:
    """phi(g(X+Y) f(X)) expanded into free mixed moments."""
    f, g = _poly_check(f, "f"), _poly_check(g, "g")
    fam = _free_family({"X": a, "Y": b}, 2 * POLY_DEG_MAX)
    total = 0.0
    for j, gj in enumerate(g):
        if gj == 0:
            continue
        for i, fi in enumerate(f):
            if fi == 0:
                continue
            if i + j == 0:
                total += gj * fi
                continue
            for head in itertools.product("XY", repeat=j):
                total += gj * fi * float(mixed_moment(fam, "".join(head) + "X" * i))
    return total


def kernel_experiment(a: AtomicMeasure, b: AtomicMeasure, f, g, N=300, trials=20, rng=None,
                      route_tol=2e-2, mc_tol=0.05, bistochastic_tol=1e-8, grid=None) -> ExperimentReport:
    """(1/N) tr(g(A'+B') f(A')) through the bistochastic overlap matrix.

    With A' = sum_k a_k xi_k xi_k* and A'+B' = sum_l s_l gamma_l gamma_l*,
    the trace equals (1/N) sum_{k,l} f(a_k) g(s_l) |<xi_k, gamma_l>|^2.
    It is compared with the kernel integral over k(x, du) and with the
    cumulant expansion of g(X+Y) f(X).
    """
    f, g = _poly_check(f, "f"), _poly_check(g, "g")
    _check_sizes(N, trials, lo=1)
    rng = rng or Rng(0)
    if grid is None:
        ha, hb = as_handle(a), as_handle(b)
        lo = ha.support[0] + hb.support[0]
        hi = ha.support[1] + hb.support[1]
        pad = 0.05 * (hi - lo) + 0.1
        grid = (lo - pad, hi + pad, REFERENCE_POINTS)
    kernel_value = float(kernel_expectation(a, b, f, g, grid))
    cumulant_value = cumulant_route(a, b, f, g)
    fp, gp = np.polynomial.Polynomial(f), np.polynomial.Polynomial(g)
    per_trial = []
    for sub in rng.spawn(trials):
        A = conjugate_diag(a, N, sub)
        B = conjugate_diag(b, N, sub)
        alpha, xi = hermitian_eigs(A, vectors=True)
        lam, gamma = hermitian_eigs(A + B, vectors=True)
        W = np.abs(xi.conj().T @ gamma) ** 2
        dev = max(np.abs(W.sum(0) - 1).max(), np.abs(W.sum(1) - 1).max())
        value = float(fp(alpha) @ W @ gp(lam)) / N
        per_trial.append({"trace": value, "bistochastic_dev": float(dev)})
    est = _summarize(per_trial, ["trace", "bistochastic_dev"])
    route_gap = abs(kernel_value - cumulant_value)
    mc_err = abs(est["trace"]["mean"] - cumulant_value)
    worst_dev = max(row["bistochastic_dev"] for row in per_trial)
    passed = route_gap <= route_tol and mc_err <= mc_tol and worst_dev <= bistochastic_tol
    return ExperimentReport(
        "kernel",
        _params(N, trials, rng, f=f, g=g, route_tol=route_tol, mc_tol=mc_tol),
        est,
        {"kernel_integral": kernel_value, "cumulant_expansion": cumulant_value},
        {"route_gap": route_gap, "mc_error": mc_err, "max_bistochastic_dev": worst_dev},
        bool(passed),
        per_trial,
    )
