"""Concrete measure representations and classical reference operations.

Three representations are used throughout the package:

* :class:`AtomicMeasure` -- finitely many weighted atoms (empirical spectra).
* :class:`GridDensity` -- a density sampled on a uniform grid.
* :class:`MomentSeq` -- the truncated moment sequence m_1..m_K.

Classical cumulants follow the normalization
``log E[exp(itX)] = sum_n sigma_n (it)^n``, so ``kappa_n = n! * sigma_n``.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import NamedTuple

import numpy as np

from .series import TruncatedSeries, ser_exp_log, infer_kind

MERGE_TOL = 1e-9
WEIGHT_TOL = 1e-12
MAX_PRODUCT_ATOMS = 10**6


class AtomicMeasure:
    """Probability measure with finitely many atoms, sorted and merged."""

    def __init__(self, locations, weights, merge_tol=MERGE_TOL):
        x = np.asarray(locations, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        if x.shape != w.shape or x.size == 0:
            raise ValueError("need equally many (>0) locations and weights")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, x.size):
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        groups = np.concatenate([[0], np.cumsum(np.diff(x) > merge_tol)])
        wm = np.bincount(groups, weights=w)
        # weighted mean as an offset from the group's first atom, so a group
        # of identical locations keeps that location bit for bit
        first = x[np.concatenate([[0], np.flatnonzero(np.diff(groups)) + 1])]
        xm = first + np.bincount(groups, weights=w * (x - first[groups])) / wm
        self.locations = xm
        self.weights = wm

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def dirac(cls, a):
        return cls([a], [1.0])

    @classmethod
    def bernoulli(cls, p=0.5, x0=0.0, x1=1.0):
        if p <= 0:
            return cls.dirac(x0)
        if p >= 1:
            return cls.dirac(x1)
        return cls([x0, x1], [1 - p, p])

    @classmethod
    def empirical(cls, samples):
        samples = np.asarray(samples, dtype=float).ravel()
        return cls(samples, np.full(samples.size, 1.0 / samples.size))

    @property
    def atoms(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def support(self):
        return float(self.locations[0]), float(self.locations[-1])

    def __len__(self):
        return self.locations.size

    def __repr__(self):
        return f"AtomicMeasure({self.atoms!r})"

    def __eq__(self, other):
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return (np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    def cdf(self, x, left=False):
        side = "left" if left else "right"
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return cum[np.searchsorted(self.locations, x, side=side)]


class GridDensity:
    """Density values ``ps`` at ``x0 + k * step``.

    ``mass_tol`` bounds the trapezoid mass defect; ``None`` disables the
    check (used for densities whose quality is reported rather than enforced).
    """

    def __init__(self, x0, step, ps, mass_tol=0.01):
        ps = np.asarray(ps, dtype=float).ravel()
        if step <= 0:
            raise ValueError("grid step must be positive")
        if ps.size < 2:
            raise ValueError("a grid density needs at least two nodes")
        if np.any(ps < 0):
            raise ValueError("density values must be nonnegative")
        self.x0 = float(x0)
        self.step = float(step)
        self.ps = ps
        self.mass_tol = mass_tol
        if mass_tol is not None and abs(self.mass() - 1) > mass_tol:
            raise ValueError(f"trapezoid mass {self.mass():.6g} outside 1 +/- {mass_tol}")

    @classmethod
    def from_function(cls, f, a, b, n, mass_tol=0.01):
        xs = np.linspace(a, b, n)
        return cls(a, xs[1] - xs[0], np.asarray(f(xs), dtype=float), mass_tol=mass_tol)

    @property
    def xs(self):
        return self.x0 + self.step * np.arange(self.ps.size)

    @property
    def support(self):
        return self.x0, float(self.xs[-1])

    def mass(self) -> float:
        return float(np.trapezoid(self.ps, dx=self.step))

    def mass_between(self, a, b) -> float:
        xs = self.xs
        inside = (xs >= a) & (xs <= b)
        if inside.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.ps[inside], dx=self.step))

    def cumulative(self):
        c = np.concatenate([[0.0], np.cumsum((self.ps[1:] + self.ps[:-1]) * self.step / 2)])
        return c

    def cdf(self, x, left=False):
        """Normalized cumulative trapezoid mass, linear between nodes."""
        cum = self.cumulative()
        return np.interp(x, self.xs, cum / cum[-1], left=0.0, right=1.0)

    def __repr__(self):
        return f"GridDensity(x0={self.x0}, step={self.step}, n={self.ps.size})"


@dataclass(frozen=True)
class MomentSeq:
    """Moments m_1..m_K (m_0 = 1 implicit); entries may be Fractions."""

    m: tuple
    genuine: bool = False

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(self.m))
        if len(self.m) < 1:
            raise ValueError("a moment sequence needs K >= 1")

    @property
    def K(self) -> int:
        return len(self.m)

    def __getitem__(self, n):
        """Moment of order ``n`` (1-based; index 0 gives m_0 = 1)."""
        return 1 if n == 0 else self.m[n - 1]

    def with_zero(self) -> list:
        return [1] + list(self.m)

    def truncate(self, K):
        return MomentSeq(self.m[:K], self.genuine)


@dataclass(frozen=True)
class CircleMomentSeq:
    """Complex moments m_n = integral of xi^n over the unit circle."""

    m: tuple

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.m)
        if not vals:
            raise ValueError("a circle moment sequence needs K >= 1")
        if any(abs(v) > 1 + 1e-12 for v in vals):
            raise ValueError("circle moments must satisfy |m_n| <= 1")
        object.__setattr__(self, "m", vals)

    @property
    def K(self) -> int:
        return len(self.m)

    @classmethod
    def of_atoms(cls, angles, weights, K):
        xi = np.exp(1j * np.asarray(angles, dtype=float))
        w = np.asarray(weights, dtype=float)
        return cls(tuple(complex(np.sum(w * xi**n)) for n in range(1, K + 1)))


def moments_of(measure, K: int) -> MomentSeq:
    if K < 1:
        raise ValueError("moment order K must be >= 1")
    if isinstance(measure, MomentSeq):
        if measure.K < K:
            raise ValueError(f"only {measure.K} moments available")
        return measure.truncate(K)
    if isinstance(measure, AtomicMeasure):
        x, w = measure.locations, measure.weights
        return MomentSeq(tuple(float(np.sum(w * x**n)) for n in range(1, K + 1)), genuine=True)
    if isinstance(measure, GridDensity):
        xs, ps = measure.xs, measure.ps
        return MomentSeq(
            tuple(float(np.trapezoid(ps * xs**n, dx=measure.step)) for n in range(1, K + 1)),
            genuine=True,
        )
    raise TypeError(f"cannot take moments of {type(measure).__name__}")


class HankelCheck(NamedTuple):
    psd: bool
    min_eigenvalue: float


def hankel_psd(m: MomentSeq, slack: float = 1e-10) -> HankelCheck:
    """Positive semidefiniteness of the moment Hankel matrices.

    Tests [m_{i+j}] for 0 <= i, j <= K//2 and its shift [m_{i+j+2}] (the
    Hankel matrix of x^2 mu).  The slack is relative to the largest entry.
    """
    if m.K < 2:
        raise ValueError("Hankel test needs K >= 2")
    full = np.array([float(v) for v in m.with_zero()])
    r = m.K // 2
    mats = [full[np.add.outer(np.arange(r + 1), np.arange(r + 1))]]
    if r >= 1:
        mats.append(full[2 + np.add.outer(np.arange(r), np.arange(r))])
    lo = np.inf
    ok = True
    for h in mats:
        ev = float(np.linalg.eigvalsh(h)[0])
        lo = min(lo, ev)
        ok &= ev >= -slack * max(1.0, float(np.abs(h).max()))
    return HankelCheck(bool(ok), lo)


def classical_cumulants(m: MomentSeq) -> tuple:
    """sigma_1..sigma_K with log sum_n m_n u^n / n! = sum_n sigma_n u^n."""
    vals = m.with_zero()
    kind = infer_kind(vals)
    if kind == "exact":
        coeffs = [Fraction(v) / factorial(n) for n, v in enumerate(vals)]
    else:
        coeffs = [complex(v) / factorial(n) for n, v in enumerate(vals)]
    out = ser_exp_log(TruncatedSeries(coeffs, kind), "log").coeffs[1:]
    if kind == "exact":
        return tuple(out)
    return tuple(c.real for c in out)


def classical_convolve(a: AtomicMeasure, b: AtomicMeasure) -> AtomicMeasure:
    if len(a) * len(b) > MAX_PRODUCT_ATOMS:
        raise ValueError(f"{len(a)} x {len(b)} atoms exceeds {MAX_PRODUCT_ATOMS}")
    x = np.add.outer(a.locations, b.locations).ravel()
    w = np.multiply.outer(a.weights, b.weights).ravel()
    w = w / w.sum()
    return AtomicMeasure(x, w)


def _cdf_pair(a, b):
    pts = []
    for meas in (a, b):
        pts.append(meas.locations if isinstance(meas, AtomicMeasure) else meas.xs)
    pts = np.unique(np.concatenate(pts))
    return pts


def _snap(a: AtomicMeasure, b: AtomicMeasure, atol: float) -> AtomicMeasure:
    # move atoms of a onto atoms of b that lie within atol
    j = np.clip(np.searchsorted(b.locations, a.locations), 1, len(b) - 1) if len(b) > 1 else np.zeros(len(a), int)
    cand = np.stack([b.locations[j - 1 if len(b) > 1 else j], b.locations[j]])
    near = cand[np.argmin(np.abs(cand - a.locations), axis=0), np.arange(len(a))]
    x = np.where(np.abs(near - a.locations) <= atol, near, a.locations)
    return AtomicMeasure(x, a.weights, merge_tol=0.0)


def kolmogorov_distance(a, b, atol: float = 0.0) -> float:
    """sup |F_a - F_b| over the merged breakpoints (and their left limits).

    With ``atol > 0`` atoms of two atomic measures closer than ``atol`` are
    identified first, so eigenvalue round-off does not register as a jump.
    """
    for meas in (a, b):
        if not isinstance(meas, (AtomicMeasure, GridDensity)):
            raise TypeError(f"unsupported measure {type(meas).__name__}")
    if atol > 0 and isinstance(a, AtomicMeasure) and isinstance(b, AtomicMeasure):
        a = _snap(a, b, atol)
    pts = _cdf_pair(a, b)
    right = np.abs(a.cdf(pts) - b.cdf(pts))
    left = np.abs(a.cdf(pts, left=True) - b.cdf(pts, left=True))
    return float(max(right.max(), left.max()))


def affine_map(measure, s: float, t: float):
    """Push a measure forward under x -> s x + t."""
    if isinstance(measure, AtomicMeasure):
        if s == 0:
            return AtomicMeasure.dirac(t)
        return AtomicMeasure(s * measure.locations + t, measure.weights)
    if isinstance(measure, GridDensity):
        if s == 0:
            return AtomicMeasure.dirac(t)
        ps = measure.ps / abs(s)
        end = measure.xs[-1]
        x0 = s * measure.x0 + t if s > 0 else s * end + t
        if s < 0:
            ps = ps[::-1]
        return GridDensity(x0, abs(s) * measure.step, ps, mass_tol=measure.mass_tol)
    if isinstance(measure, MomentSeq):
        full = measure.with_zero()
        out = []
        for n in range(1, measure.K + 1):
            out.append(sum(comb(n, k) * s**k * t ** (n - k) * full[k] for k in range(n + 1)))
        return MomentSeq(tuple(out), measure.genuine)
    raise TypeError(f"cannot map {type(measure).__name__}")


# -- measure-spec documents ------------------------------------------------

def measure_to_doc(measure) -> dict:
    if isinstance(measure, AtomicMeasure):
        return {"type": "atomic", "atoms": [[x, w] for x, w in measure.atoms]}
    if isinstance(measure, GridDensity):
        return {"type": "grid", "x0": measure.x0, "step": measure.step, "ps": measure.ps.tolist()}
    if isinstance(measure, MomentSeq):
        return {"type": "moments", "m": [_num_out(v) for v in measure.m]}
    if isinstance(measure, CircleMomentSeq):
        return {"type": "circle_moments", "m": [[v.real, v.imag] for v in measure.m]}
    from .families import FamilySpec

    if isinstance(measure, FamilySpec):
        return {"type": "family", "name": measure.name, "params": dict(measure.params)}
    raise TypeError(f"no document form for {type(measure).__name__}")


def _num_out(v):
    # exact rationals travel as "p/q" strings so documents round-trip
    return str(v) if isinstance(v, Fraction) else v


def _num_in(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


def measure_from_doc(doc):
    if isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("type")
    if kind == "atomic":
        return AtomicMeasure.from_pairs(doc["atoms"])
    if kind == "grid":
        return GridDensity(doc["x0"], doc["step"], doc["ps"], mass_tol=doc.get("mass_tol", 0.01))
    if kind == "moments":
        return MomentSeq(tuple(_num_in(v) for v in doc["m"]))
    if kind == "circle_moments":
        return CircleMomentSeq(tuple(complex(*v) if isinstance(v, list) else v for v in doc["m"]))
    if kind == "circle_atomic":
        atoms = doc["atoms"]
        K = int(doc.get("K", 8))
        return CircleMomentSeq.of_atoms([a[0] for a in atoms], [a[1] for a in atoms], K)
    if kind == "family":
        from .families import FamilySpec

        return FamilySpec(doc["name"], doc.get("params", {}))
    raise ValueError(f"unknown measure document type {kind!r}")


def grid_to_csv(g: GridDensity) -> str:
    buf = io.StringIO()
    buf.write("x,p\n")
    for x, p in zip(g.xs, g.ps):
        buf.write(f"{format(float(x), '.17g')},{format(float(p), '.17g')}\n")
    return buf.getvalue()


def grid_from_csv(text: str, mass_tol=None) -> GridDensity:
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if rows[0].replace(" ", "") != "x,p":
        raise ValueError("grid CSV must start with the header 'x,p'")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    xs, ps = data[:, 0], data[:, 1]
    step = (xs[-1] - xs[0]) / (xs.size - 1)
    if not np.allclose(np.diff(xs), step, rtol=1e-9, atol=1e-12):
        raise ValueError("grid CSV nodes are not uniformly spaced")
    return GridDensity(xs[0], step, ps, mass_tol=mass_tol)
