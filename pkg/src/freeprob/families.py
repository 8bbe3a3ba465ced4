"""Closed-form parametric families and the multiplicative (circle) calculus.

Families on the real line are described by :class:`FamilySpec` with a name
and a parameter mapping.  Recognized names and parameters:

=====================  ==================================================
``semicircle``         ``sigma`` (variance)
``arcsine``            ``a``, ``b`` (support endpoints)
``bernoulli``          ``p``, ``x0``, ``x1``
``dirac``              ``a``
``cauchy``             ``loc``, ``scale``
``free_stable``        ``case`` (1, 2 or 3); ``alpha``, ``theta`` for cases
                       1 and 3; ``a_re``, ``a_im``, ``b`` for case 2
``freeLK``             ``alpha``, ``atoms`` = [[t, weight], ...]
``free_poisson``       ``lam``, ``t``; R(z) = lam (z + t) / (1 - t z)
``free_poisson_limit`` ``lam``, ``t``; cumulants lam * t^n, the limit of
                       the free binomial laws
``free_binomial``      ``n``, ``lam``, ``t``; n-fold free power of
                       (1 - lam/n) delta_0 + (lam/n) delta_t
=====================  ==================================================

The two free Poisson variants do not agree for t != 0: their second
cumulants are lam (1 + t^2) and lam t^2.  :func:`free_poisson_discrepancy`
reports both side by side.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .cumulants import CumulantSeq, c2m, m2c
from .measures import AtomicMeasure, CircleMomentSeq, MomentSeq
from .series import COMPLEX, TruncatedSeries, ser_mul, ser_reciprocal, ser_reversion

FAMILY_PARAMS = {
    "semicircle": ("sigma",),
    "arcsine": ("a", "b"),
    "bernoulli": ("p", "x0", "x1"),
    "dirac": ("a",),
    "cauchy": ("loc", "scale"),
    "free_stable": ("case",),
    "freeLK": ("alpha", "atoms"),
    "free_poisson": ("lam", "t"),
    "free_poisson_limit": ("lam", "t"),
    "free_binomial": ("n", "lam", "t"),
}
DEFAULTS = {
    "semicircle": {"sigma": 1.0},
    "arcsine": {"a": 0.0, "b": 2.0},
    "bernoulli": {"p": 0.5, "x0": 0.0, "x1": 1.0},
    "dirac": {"a": 0.0},
    "cauchy": {"loc": 0.0, "scale": 1.0},
    "freeLK": {"alpha": 0.0, "atoms": []},
}


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in FAMILY_PARAMS:
            raise FamilyError(f"unknown family {self.name!r}")
        params = dict(DEFAULTS.get(self.name, {}), **dict(self.params))
        missing = [k for k in FAMILY_PARAMS[self.name] if k not in params]
        if missing:
            raise FamilyError(f"{self.name} needs parameters {missing}")
        object.__setattr__(self, "params", params)
        _validate(self.name, params)

    def __getitem__(self, key):
        return self.params[key]

    def __hash__(self):
        return hash((self.name, repr(sorted(self.params.items()))))


def _validate(name, p):
    if name == "semicircle" and not p["sigma"] > 0:
        raise FamilyError("semicircle variance must be positive")
    if name == "arcsine" and not p["b"] > p["a"]:
        raise FamilyError("arcsine needs a < b")
    if name == "bernoulli" and not 0 <= p["p"] <= 1:
        raise FamilyError("bernoulli p must lie in [0, 1]")
    if name == "cauchy" and not p["scale"] > 0:
        raise FamilyError("cauchy scale must be positive")
    if name == "freeLK":
        for t, w in p["atoms"]:
            if w < 0:
                raise FamilyError("Levy measure weights must be nonnegative")
    if name in ("free_poisson", "free_poisson_limit") and not p["lam"] >= 0:
        raise FamilyError("free Poisson rate must be nonnegative")
    if name == "free_binomial":
        if int(p["n"]) != p["n"] or p["n"] < 1:
            raise FamilyError("free binomial n must be a positive integer")
        if not 0 <= p["lam"] <= p["n"]:
            raise FamilyError("free binomial needs 0 <= lam <= n")
    if name == "free_stable":
        case = p["case"]
        if case in (1, 3):
            alpha, theta = p.get("alpha"), p.get("theta")
            if alpha is None or theta is None:
                raise FamilyError("free_stable cases 1 and 3 need alpha and theta")
            if case == 1 and not (1 < alpha <= 2 and alpha - 2 <= theta <= 0):
                raise FamilyError("case 1 needs 1 < alpha <= 2 and alpha - 2 <= theta <= 0")
            if case == 3 and not (0 < alpha < 1 and 1 <= theta <= 1 + alpha):
                raise FamilyError("case 3 needs 0 < alpha < 1 and 1 <= theta <= 1 + alpha")
        elif case == 2:
            a_im = p.get("a_im", 0.0)
            if a_im < 0:
                raise FamilyError("case 2 needs Im a >= 0")
            if p.get("b") is None or p["b"] < -a_im / math.pi:
                raise FamilyError("case 2 needs b >= -Im(a)/pi")
        else:
            raise FamilyError(f"free_stable case must be 1, 2 or 3, got {case!r}")


def family(name, **params) -> FamilySpec:
    return FamilySpec(name, params)


def _bernoulli_K(z, p, x0, x1):
    # root of z (k - x0)(k - x1) = (1 - p)(k - x1) + p (k - x0) near 1/z
    s = x0 + x1
    disc = (z * s + 1) ** 2 - 4 * z * (z * x0 * x1 + (1 - p) * x1 + p * x0)
    return (z * s + 1 + np.sqrt(disc + 0j)) / (2 * z)


def family_R(spec: FamilySpec, z):
    """R-transform of a family at ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    p = spec.params
    name = spec.name
    if name == "semicircle":
        out = p["sigma"] * z
    elif name == "dirac":
        out = np.full_like(z, p["a"])
    elif name == "arcsine":
        c, r = (p["a"] + p["b"]) / 2, (p["b"] - p["a"]) / 2
        out = c + (np.sqrt(1 + (r * z) ** 2) - 1) / z
    elif name == "bernoulli":
        out = _bernoulli_K(z, p["p"], p["x0"], p["x1"]) - 1 / z
    elif name == "free_binomial":
        n = int(p["n"])
        out = n * (_bernoulli_K(z, p["lam"] / n, 0.0, p["t"]) - 1 / z)
    elif name == "cauchy":
        # lower half-plane domain: K(z) = 1/z + loc - i scale
        out = np.full_like(z, complex(p["loc"], -p["scale"]))
    elif name == "free_stable":
        case = p["case"]
        if case == 2:
            out = complex(p.get("a_re", 0.0), p.get("a_im", 0.0)) + p["b"] * np.log(z)
        else:
            out = cmath.exp(1j * math.pi * p["theta"]) * np.power(z, p["alpha"] - 1)
    elif name in ("freeLK", "free_poisson"):
        if name == "freeLK":
            alpha, atoms = p["alpha"], p["atoms"]
        else:
            alpha, atoms = 0.0, [[p["t"], p["lam"]]]
        out = np.full_like(z, alpha)
        for t, w in atoms:
            den = 1 - t * z
            if np.any(np.abs(den) == 0):
                raise FamilyError(f"z hits the pole 1/t of the atom at t={t}")
            out = out + w * (z + t) / den
    elif name == "free_poisson_limit":
        den = 1 - p["t"] * z
        if np.any(np.abs(den) == 0):
            raise FamilyError("z hits the pole 1/t")
        out = p["lam"] * p["t"] / den
    else:
        raise FamilyError(f"no R-transform for {name}")
    return out[()] if out.ndim == 0 else out


def family_density(spec: FamilySpec, x):
    x = np.asarray(x, dtype=float)
    p = spec.params
    if spec.name == "semicircle":
        s = p["sigma"]
        out = np.sqrt(np.clip(4 * s - x**2, 0, None)) / (2 * math.pi * s)
    elif spec.name == "arcsine":
        a, b = p["a"], p["b"]
        inside = (x > a) & (x < b)
        out = np.zeros_like(x)
        out[inside] = 1 / (math.pi * np.sqrt((x[inside] - a) * (b - x[inside])))
    elif spec.name == "cauchy":
        s = p["scale"]
        out = s / (math.pi * ((x - p["loc"]) ** 2 + s**2))
    else:
        raise FamilyError(f"no density formula for {spec.name}")
    return out[()] if out.ndim == 0 else out


def _exact_or_float(v):
    return Fraction(v) if isinstance(v, Rational) else v


def family_cumulants(spec: FamilySpec, K: int) -> CumulantSeq:
    """Free cumulants C_1..C_K: the power-series coefficients of R."""
    p = spec.params
    name = spec.name
    if name == "semicircle":
        C = [0, p["sigma"]] + [0] * (K - 2)
    elif name == "dirac":
        C = [p["a"]] + [0] * (K - 1)
    elif name == "arcsine":
        c, r = _exact_or_float((p["a"] + p["b"]) / 2), (p["b"] - p["a"]) / 2
        r = _exact_or_float(r)
        # (sqrt(1 + r^2 z^2) - 1)/z = sum_j binom(1/2, j) r^(2j) z^(2j-1)
        C = [0] * K
        C[0] = c
        coef = Fraction(1)
        for j in range(1, K // 2 + 1):
            coef = coef * (Fraction(1, 2) - (j - 1)) / j
            if 2 * j <= K:
                C[2 * j - 1] = coef * r ** (2 * j)
    elif name == "bernoulli":
        q, x0, x1 = (_exact_or_float(p[k]) for k in ("p", "x0", "x1"))
        m = tuple((1 - q) * x0**n + q * x1**n for n in range(1, K + 1))
        C = list(m2c(MomentSeq(m)).C)
    elif name == "free_binomial":
        n = int(p["n"])
        lam, t = _exact_or_float(p["lam"]), _exact_or_float(p["t"])
        q = lam / n
        m = tuple(q * t**k for k in range(1, K + 1))
        C = [n * c for c in m2c(MomentSeq(m)).C]
    elif name in ("freeLK", "free_poisson"):
        if name == "freeLK":
            alpha, atoms = p["alpha"], p["atoms"]
        else:
            alpha, atoms = 0, [[p["t"], p["lam"]]]
        # (z + t)/(1 - t z) = t + sum_{k>=1} (1 + t^2) t^(k-1) z^k
        C = [alpha + sum(w * t for t, w in atoms)]
        for k in range(2, K + 1):
            C.append(sum(w * (1 + t * t) * t ** (k - 2) for t, w in atoms))
    elif name == "free_poisson_limit":
        C = [p["lam"] * p["t"] ** k for k in range(1, K + 1)]
    elif name == "free_stable" and p["case"] == 1 and p["alpha"] == 2:
        C = [0, cmath.exp(1j * math.pi * p["theta"]).real] + [0] * (K - 2)
    else:
        raise FamilyError(f"{name} has no finite moments; use family_R")
    return CumulantSeq(tuple(C[:K]))


def family_moments(spec: FamilySpec, K: int) -> MomentSeq:
    """Moments from the R-series coefficients via the non-crossing sum."""
    return c2m(family_cumulants(spec, K))


def family_atomic(spec: FamilySpec) -> AtomicMeasure:
    if spec.name == "dirac":
        return AtomicMeasure.dirac(spec["a"])
    if spec.name == "bernoulli":
        return AtomicMeasure.bernoulli(spec["p"], spec["x0"], spec["x1"])
    raise FamilyError(f"{spec.name} is not atomic")


def free_poisson_discrepancy(lam: float, t: float, n: int = 10**4) -> dict:
    """Compare the second cumulant of the printed free Poisson R-transform
    with the one obtained from the n-fold free binomial law."""
    printed = family_cumulants(FamilySpec("free_poisson", {"lam": lam, "t": t}), 3)
    binom = family_cumulants(FamilySpec("free_binomial", {"n": n, "lam": lam, "t": t}), 3)
    limit = lam * t * t
    return {
        "lam": lam,
        "t": t,
        "n": n,
        "printed_R_C1": float(printed[1]),
        "printed_R_C2": float(printed[2]),
        "free_binomial_C1": float(binom[1]),
        "free_binomial_C2": float(binom[2]),
        "limit_C2": limit,
        "binomial_rel_err_vs_limit": abs(float(binom[2]) - limit) / abs(limit) if limit else 0.0,
        "C2_gap": float(printed[2]) - float(binom[2]),
        "consistent": abs(float(printed[2]) - float(binom[2])) <= 1e-3 * max(abs(limit), 1e-300),
    }


# -- circle measures and the Sigma-transform ------------------------------------

@dataclass(frozen=True)
class CircleFamilySpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name == "atom":
            if abs(abs(complex(self.params["omega"])) - 1) > 1e-12:
                raise FamilyError("circle atom must have modulus one")
        elif self.name == "multLK":
            for zeta, w in self.params.get("atoms", []):
                if abs(abs(complex(zeta)) - 1) > 1e-12 or w < 0:
                    raise FamilyError("multLK atoms must lie on T with weight >= 0")
        else:
            raise FamilyError(f"unknown circle family {self.name!r}")

    def moments(self, K):
        if self.name != "atom":
            raise FamilyError("moments only available for circle atoms")
        omega = complex(self.params["omega"])
        return CircleMomentSeq(tuple(omega**n for n in range(1, K + 1)))


def psi_series(m: CircleMomentSeq) -> TruncatedSeries:
    """psi(z) = sum_n m_n z^n, truncated at the moment order."""
    return TruncatedSeries([0] + list(m.m), COMPLEX)


def _chi(m: CircleMomentSeq) -> TruncatedSeries:
    psi = psi_series(m)
    return ser_mul(psi, ser_reciprocal(TruncatedSeries.one(m.K, COMPLEX) + psi))


def sigma_series(m: CircleMomentSeq) -> TruncatedSeries:
    """Sigma-transform coefficients to order K-1."""
    if m.m[0] == 0:
        raise FamilyError("Sigma-transform needs nonzero first moment")
    inv = ser_reversion(_chi(m))
    return TruncatedSeries(inv.coeffs[1:], COMPLEX)


def mult_convolve(a: CircleMomentSeq, b: CircleMomentSeq, K: int | None = None) -> CircleMomentSeq:
    """Moments of the free multiplicative convolution via Sigma_a * Sigma_b."""
    K = min(a.K, b.K) if K is None else K
    if K > min(a.K, b.K):
        raise ValueError("requested order exceeds available moments")
    a = CircleMomentSeq(a.m[:K])
    b = CircleMomentSeq(b.m[:K])
    sig = ser_mul(sigma_series(a), sigma_series(b))
    chi_inv = TruncatedSeries([0] + list(sig.coeffs), COMPLEX)
    chi = ser_reversion(chi_inv)
    one = TruncatedSeries.one(K, COMPLEX)
    psi = ser_mul(chi, ser_reciprocal(one - chi))
    vals = list(psi.coeffs[1:])
    # tiny round-off can push |m_n| a hair above one
    vals = [v / abs(v) if 1 < abs(v) < 1 + 1e-9 else v for v in vals]
    return CircleMomentSeq(tuple(vals))


def mult_LK_sigma(spec: CircleFamilySpec, z):
    """Sigma(z) = exp(i alpha + sum_atoms w (1 + zeta z)/(1 - zeta z)), |z| < 1."""
    if spec.name != "multLK":
        raise FamilyError("mult_LK_sigma needs a multLK spec")
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise ValueError("Sigma-transform evaluated only on the open unit disk")
    u = np.full_like(z, 1j * spec.params.get("alpha", 0.0))
    for zeta, w in spec.params.get("atoms", []):
        zeta = complex(zeta)
        den = 1 - zeta * z
        if np.any(np.abs(den) < 1e-14):
            raise ValueError("z sits on a singularity of the Levy measure")
        u = u + w * (1 + zeta * z) / den
    out = np.exp(u)
    return out[()] if out.ndim == 0 else out
