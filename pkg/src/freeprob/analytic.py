"""Cauchy transforms, K/R-transforms, analytic free additive convolution,
Stieltjes inversion, the subordination function and its Markov kernel.

Free convolution is solved in subordination form.  For a query point zeta
in the upper half-plane we look for (w1, w2) with

    F_a(w1) = F_b(w2) = w1 + w2 - zeta,        F = 1/G,

so that g = 1/(w1 + w2 - zeta) satisfies K_a(g) + K_b(g) - 1/g = zeta with
K_a(g) = w1 and K_b(g) = w2.  w1 is the subordination function F(zeta).
The pair is found by damped Newton steps, continued from high above the
real axis (where w ~ zeta) down to the requested height, which keeps the
iterates on the branch with G ~ 1/zeta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .families import FamilyError, FamilySpec
from .measures import AtomicMeasure, GridDensity

IM_FLOOR = 1e-4
CONV_TOL = 1e-10
K_TOL = 1e-12
MAX_NEWTON = 80
START_HEIGHT = 10.0
POLISH_TOL = 1e-14


class ConvergenceError(RuntimeError):
    """Raised when a root search fails; ``diagnostic`` holds the record."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class DomainParams:
    """Truncated cone {|Re z| < alpha |Im z|, Im z < 0, |z| <= beta}."""

    alpha: float = 1.0
    beta: float = math.inf

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (z.imag < 0) & (np.abs(z.real) < -self.alpha * z.imag) & (np.abs(z) <= self.beta)


class MeasureHandle:
    """Uniform Cauchy-transform access to atomic, grid and family measures."""

    def __init__(self, kind: str, payload):
        self.kind = kind
        self.payload = payload
        if kind in ("atomic", "grid"):
            if kind == "atomic":
                x, w = payload.locations, payload.weights
            else:
                x = payload.xs
                w = payload.ps * payload.step
                w[0] /= 2
                w[-1] /= 2
                w = w / w.sum()
            self._x, self._w = np.asarray(x, float), np.asarray(w, float)
            lo, hi = float(self._x.min()), float(self._x.max())
            self.support = (lo, hi)
            self.mean = float(np.sum(self._w * self._x))
        elif kind == "family":
            self._init_family(payload)
        else:
            raise ValueError(f"unknown handle kind {kind!r}")

    def _init_family(self, spec: FamilySpec):
        p = spec.params
        if spec.name in ("dirac", "bernoulli"):
            from .families import family_atomic

            atoms = family_atomic(spec)
            self._x, self._w = atoms.locations, atoms.weights
            self.support = (float(self._x.min()), float(self._x.max()))
            self.mean = float(np.sum(self._w * self._x))
        elif spec.name == "semicircle":
            r = 2 * math.sqrt(p["sigma"])
            self.support = (-r, r)
            self.mean = 0.0
        elif spec.name == "arcsine":
            self.support = (p["a"], p["b"])
            self.mean = (p["a"] + p["b"]) / 2
        elif spec.name == "cauchy":
            self.support = None
            self.mean = None
        else:
            raise FamilyError(f"no Cauchy transform available for {spec.name}")

    @property
    def scale(self) -> float:
        """Rough size of the measure, used to place the continuation start."""
        if self.support is None:
            p = self.payload.params
            return abs(p["loc"]) + p["scale"]
        return max(abs(self.support[0]), abs(self.support[1]), 1e-300)

    def _upper(self, z):
        # G and G' on the closed upper half-plane branch
        if hasattr(self, "_x"):
            d = z[..., None] - self._x
            inv = self._w / d
            return inv.sum(-1), -(inv / d).sum(-1)
        spec = self.payload
        p = spec.params
        if spec.name == "semicircle":
            s2 = 2 * math.sqrt(p["sigma"])
            q = np.sqrt(z - s2) * np.sqrt(z + s2)
            return (z - q) / (2 * p["sigma"]), (1 - z / q) / (2 * p["sigma"])
        if spec.name == "arcsine":
            a, b = p["a"], p["b"]
            q = np.sqrt(z - a) * np.sqrt(z - b)
            dq = (2 * z - a - b) / (2 * q)
            return 1 / q, -dq / q**2
        if spec.name == "cauchy":
            g = 1 / (z - p["loc"] + 1j * p["scale"])
            return g, -(g**2)
        raise FamilyError(spec.name)

    def G_and_dG(self, z):
        z = np.asarray(z, dtype=complex)
        lower = z.imag < 0
        zz = np.where(lower, np.conj(z), z)
        g, dg = self._upper(zz)
        return np.where(lower, np.conj(g), g), np.where(lower, np.conj(dg), dg)

    def G(self, z):
        return self.G_and_dG(z)[0]


def as_handle(measure) -> MeasureHandle:
    if isinstance(measure, MeasureHandle):
        return measure
    if isinstance(measure, AtomicMeasure):
        return MeasureHandle("atomic", measure)
    if isinstance(measure, GridDensity):
        return MeasureHandle("grid", measure)
    if isinstance(measure, FamilySpec):
        return MeasureHandle("family", measure)
    raise TypeError(f"cannot build a Cauchy-transform handle from {type(measure).__name__}")


def _scalar(out):
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def cauchy_G(h, zeta):
    """G(zeta) = integral of 1/(zeta - t) dmu(t), for zeta off the real line."""
    h = as_handle(h)
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(zeta.imag == 0):
        raise ValueError("Cauchy transform is evaluated off the real axis only")
    return _scalar(h.G(zeta))


def k_eval(h, z, domain: DomainParams | None = None, tol=K_TOL, max_iter=MAX_NEWTON):
    """Right inverse of G: w in the upper half-plane with G(w) = z.

    ``z`` must lie in the cone described by ``domain``.  Newton iterations
    start at 1/z + mean and are damped to stay in the upper half-plane.
    """
    h = as_handle(h)
    domain = domain or DomainParams()
    z = np.asarray(z, dtype=complex)
    if not np.all(domain.contains(z)):
        raise ValueError(f"z outside the domain cone alpha={domain.alpha}, beta={domain.beta}")
    zf = z.ravel()
    shift = h.mean if h.mean is not None else h.payload.params["loc"]
    w = 1 / zf + shift
    g, dg = h.G_and_dG(w)
    res = np.abs(g - zf)
    it = 0
    while it < max_iter and np.any(res > tol * np.maximum(1, np.abs(zf))):
        it += 1
        step = -(g - zf) / dg
        lam = np.ones(zf.size)
        active = np.ones(zf.size, bool)
        new_w = w.copy()
        for _ in range(40):
            cand = w + lam * step
            cg, cdg = h.G_and_dG(cand)
            ok = (cand.imag > 0) & (np.abs(cg - zf) <= res)
            take = active & ok
            new_w[take] = cand[take]
            active &= ~ok
            if not active.any():
                break
            lam[active] /= 2
        w = new_w
        g, dg = h.G_and_dG(w)
        res = np.abs(g - zf)
    bad = res > tol * np.maximum(1, np.abs(zf))
    if np.any(bad) or np.any(w.imag <= 0):
        k = int(np.argmax(res))
        raise ConvergenceError(
            "K-transform Newton iteration did not converge",
            {"query": complex(zf[k]), "residual": float(res[k]), "iterations": it},
        )
    return _scalar(w.reshape(z.shape))


def r_eval(h, z, domain: DomainParams | None = None):
    """R(z) = K(z) - 1/z."""
    z = np.asarray(z, dtype=complex)
    return _scalar(k_eval(h, z, domain) - 1 / z)


# -- subordination solver ------------------------------------------------------

@dataclass
class _Solve:
    zeta: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    g: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray
    fallback: np.ndarray = field(default=None)


def _system(ha, hb, w1, w2, zeta):
    ga, dga = ha.G_and_dG(w1)
    gb, dgb = hb.G_and_dG(w2)
    fa, fb = 1 / ga, 1 / gb
    s = w1 + w2 - zeta
    e1, e2 = fa - s, fb - s
    return e1, e2, -dga / ga**2, -dgb / gb**2


def _newton(ha, hb, w1, w2, zeta, tol, max_iter, floor):
    w1, w2 = w1.copy(), w2.copy()
    floor = np.broadcast_to(floor, zeta.shape)
    e1, e2, da, db = _system(ha, hb, w1, w2, zeta)
    res = np.maximum(np.abs(e1), np.abs(e2))
    iters = np.zeros(zeta.size, int)
    idx = np.flatnonzero(res > tol)
    for _ in range(max_iter):
        if idx.size == 0:
            break
        # work only on the points that still need it
        z, f = zeta[idx], floor[idx]
        a, d = da[idx] - 1, db[idx] - 1
        det = a * d - 1
        det = np.where(det == 0, 1e-300, det)
        s1 = -(d * e1[idx] + e2[idx]) / det
        s2 = -(e1[idx] + a * e2[idx]) / det
        r0 = res[idx]
        lam = np.ones(idx.size)
        active = np.ones(idx.size, bool)
        n1, n2 = w1[idx], w2[idx]
        for _ in range(30):
            c1, c2 = w1[idx] + lam * s1, w2[idx] + lam * s2
            ce1, ce2, _, _ = _system(ha, hb, c1, c2, z)
            cres = np.maximum(np.abs(ce1), np.abs(ce2))
            ok = (c1.imag >= f) & (c2.imag >= f) & np.isfinite(cres) & (cres < r0)
            take = active & ok
            n1[take], n2[take] = c1[take], c2[take]
            active &= ~ok
            if not active.any():
                break
            lam[active] /= 2
        moved = ~active
        iters[idx] += 1
        w1[idx], w2[idx] = n1, n2
        ne1, ne2, nda, ndb = _system(ha, hb, n1, n2, z)
        e1[idx], e2[idx], da[idx], db[idx] = ne1, ne2, nda, ndb
        res[idx] = np.maximum(np.abs(ne1), np.abs(ne2))
        # stalled points (no acceptable step) are left for the fallback
        idx = idx[moved & (res[idx] > tol)]
    return w1, w2, res, iters


def _fixed_point(ha, hb, zeta, w1, n_iter=20000):
    # w1 <- zeta + h_b(zeta + h_a(w1)), h = F - id; converges on all of C+
    for k in range(n_iter):
        prev = w1
        w2 = zeta + 1 / ha.G(w1) - w1
        w1 = zeta + 1 / hb.G(w2) - w2
        if k % 25 == 0 and np.all(np.abs(w1 - prev) <= 1e-15 * np.maximum(1, np.abs(w1))):
            break
    w2 = zeta + 1 / ha.G(w1) - w1
    return w1, w2


def _subordinate(ha, hb, zeta, tol=CONV_TOL, max_iter=MAX_NEWTON) -> _Solve:
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex)).ravel()
    if np.any(zeta.imag <= 0):
        raise ValueError("subordination is solved in the upper half-plane")
    top = max(START_HEIGHT, 10 * (ha.scale + hb.scale))
    y_min = float(zeta.imag.min())
    steps = max(2, int(math.ceil(math.log(max(top / y_min, 1.0)) / math.log(1.6))) + 1)
    ma = ha.mean if ha.mean is not None else ha.payload.params["loc"]
    mb = hb.mean if hb.mean is not None else hb.payload.params["loc"]
    heights = np.maximum(top, zeta.imag)
    z = zeta.real + 1j * heights
    w1, w2 = z - mb, z - ma
    total = np.zeros(zeta.size, int)
    for k in range(1, steps + 1):
        frac = k / steps
        y = np.exp((1 - frac) * np.log(heights) + frac * np.log(zeta.imag))
        z = zeta.real + 1j * y
        # polish the last layer past the acceptance tolerance: near a
        # singularity of G the g-error is the F-residual times |g|^2
        loose = POLISH_TOL if k == steps else max(tol, 1e-9)
        w1, w2, res, it = _newton(ha, hb, w1, w2, z, loose, max_iter, floor=0.5 * y)
        total += it
    fallback = res > tol
    if fallback.any():
        idx = np.flatnonzero(fallback)
        f1, f2 = _fixed_point(ha, hb, zeta[idx], zeta[idx] - mb)
        f1, f2, fres, fit = _newton(ha, hb, f1, f2, zeta[idx], tol, max_iter, floor=0.5 * zeta[idx].imag)
        better = fres < res[idx]
        w1[idx[better]], w2[idx[better]] = f1[better], f2[better]
        res[idx[better]] = fres[better]
        total[idx] += fit
    g = 1 / (w1 + w2 - zeta)
    return _Solve(zeta, w1, w2, g, res, total, fallback)


def _solve_any(ha, hb, zeta, tol=CONV_TOL):
    zeta = np.asarray(zeta, dtype=complex)
    flat = zeta.ravel()
    lower = flat.imag < 0
    sol = _subordinate(ha, hb, np.where(lower, np.conj(flat), flat), tol)
    for name in ("w1", "w2", "g"):
        val = getattr(sol, name)
        setattr(sol, name, np.where(lower, np.conj(val), val))
    sol.zeta = flat
    return sol


def _check(sol, tol, what):
    bad = ~(sol.residual <= tol)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise ConvergenceError(
            f"{what} did not converge",
            {
                "query": [sol.zeta[k].real, sol.zeta[k].imag],
                "residual": float(sol.residual[k]),
                "iterations": int(sol.iterations[k]),
                "fallback_used": bool(sol.fallback[k]),
            },
        )


def conv_G(a, b, zeta, floor=IM_FLOOR, tol=CONV_TOL, return_info=False):
    """Cauchy transform of a free-convolution b at zeta (scalar or array).

    Raises ValueError below the height floor and ConvergenceError when the
    residual of K_a(g) + K_b(g) - 1/g = zeta stays above ``tol``.
    """
    ha, hb = as_handle(a), as_handle(b)
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta.imag) < floor):
        raise ValueError(f"|Im zeta| must be >= {floor}")
    sol = _solve_any(ha, hb, zeta, tol)
    _check(sol, tol, "free convolution solve")
    g = _scalar(sol.g.reshape(zeta.shape))
    if return_info:
        return g, sol
    return g


class SubordinationResult(NamedTuple):
    zeta: complex
    F: complex
    residual: float
    iterations: int
    branch_flags: dict


def subordination_F(a, b, zeta, floor=IM_FLOOR, tol=1e-9) -> SubordinationResult:
    """F with G_a(F(zeta)) = G_{a box+ b}(zeta) and Im F >= Im zeta."""
    ha, hb = as_handle(a), as_handle(b)
    zeta = complex(zeta)
    if zeta.imag < floor:
        raise ValueError(f"Im zeta must be >= {floor}")
    sol = _solve_any(ha, hb, np.array([zeta]), CONV_TOL)
    _check(sol, CONV_TOL, "subordination solve")
    F = complex(sol.w1[0])
    residual = float(abs(ha.G(np.array([F]))[0] - sol.g[0]))
    flags = {
        "im_ok": F.imag >= zeta.imag - tol,
        "fallback_used": bool(sol.fallback[0]),
        "ambiguous": False,
    }
    if sol.fallback[0]:
        # Newton continuation and the fixed point disagreed at first; make sure
        # the accepted root is the one the fixed point iteration selects
        f1, _ = _fixed_point(ha, hb, np.array([zeta]), np.array([zeta - (hb.mean or 0)]))
        flags["ambiguous"] = bool(abs(f1[0] - F) > 1e-6 * max(1, abs(F)))
    if residual > tol or not flags["im_ok"]:
        raise ConvergenceError("subordination constraints violated",
                               {"query": [zeta.real, zeta.imag], "residual": residual,
                                "F": [F.real, F.imag], **flags})
    return SubordinationResult(zeta, F, residual, int(sol.iterations[0]), flags)


def subordination_values(a, b, zeta):
    """Vectorized F(zeta) for an array of points in the upper half-plane."""
    ha, hb = as_handle(a), as_handle(b)
    zeta = np.asarray(zeta, dtype=complex)
    sol = _solve_any(ha, hb, zeta, CONV_TOL)
    _check(sol, CONV_TOL, "subordination solve")
    return _scalar(sol.w1.reshape(zeta.shape))


# -- Stieltjes inversion ---------------------------------------------------------

def _grid_nodes(grid):
    if isinstance(grid, tuple) and len(grid) == 3:
        lo, hi, n = grid
        xs = np.linspace(lo, hi, int(n))
    else:
        xs = np.asarray(grid, dtype=float)
    if xs.size < 2:
        raise ValueError("grid needs at least two nodes")
    step = (xs[-1] - xs[0]) / (xs.size - 1)
    if not np.allclose(np.diff(xs), step, rtol=1e-9, atol=1e-14):
        raise ValueError("grid must be uniformly spaced")
    return xs, step


def default_eps(step):
    h = 2 * step
    return (4 * h, 2 * h, h)


# weights of quadratic extrapolation to eps = 0 from eps = 4h, 2h, h
_RICHARDSON = np.array([1 / 3, -2.0, 8 / 3])


def stieltjes_density(Gprov, grid, eps=None) -> GridDensity:
    """Density -Im G(x + i eps)/pi, extrapolated to eps -> 0.

    ``Gprov`` maps an array of complex points to G values.  ``eps`` is a
    decreasing schedule of three heights in ratio 4:2:1 (default tied to the
    grid step); quadratic Richardson extrapolation removes the O(eps) and
    O(eps^2) smoothing bias.  Negative values are clipped to zero and the
    resulting mass defect is stored on the returned density.
    """
    xs, step = _grid_nodes(grid)
    eps = tuple(default_eps(step) if eps is None else eps)
    if len(eps) != 3 or not (eps[0] > eps[1] > eps[2]) or eps[2] < 1e-6:
        raise ValueError("eps schedule must be three decreasing heights >= 1e-6")
    if not np.allclose([eps[0] / eps[1], eps[1] / eps[2]], 2.0):
        raise ValueError("eps schedule must be in ratio 4:2:1")
    pts = np.concatenate([xs + 1j * e for e in eps])
    vals = np.asarray(Gprov(pts), dtype=complex).reshape(3, xs.size)
    layers = -vals.imag / math.pi
    ps = _RICHARDSON @ layers
    ps = np.clip(ps, 0, None)
    out = GridDensity(xs[0], step, ps, mass_tol=None)
    out.mass_defect = 1.0 - out.mass()
    out.eps = eps
    out.raw_layers = layers
    return out


def conv_density(a, b, grid, eps=None) -> GridDensity:
    """Density of a free-convolution b by inverting conv_G on a grid."""
    ha, hb = as_handle(a), as_handle(b)
    return stieltjes_density(lambda z: conv_G(ha, hb, z), grid, eps)


def _atom_check(ha, x):
    if ha.support is None:
        return
    if hasattr(ha, "_x") and ha.kind != "grid":
        if np.min(np.abs(ha._x - x)) > 1e-9:
            raise ValueError(f"x={x} is not an atom of the first measure")
    elif not ha.support[0] <= x <= ha.support[1]:
        raise ValueError(f"x={x} outside the support of the first measure")


def markov_kernel_density(a, b, x, grid, eps=None) -> GridDensity:
    """Density of k(x, du), whose Cauchy transform is 1/(F(zeta) - x)."""
    ha, hb = as_handle(a), as_handle(b)
    _atom_check(ha, x)

    def Gk(z):
        return 1 / (subordination_values(ha, hb, z) - x)

    return stieltjes_density(Gk, grid, eps)


def kernel_expectation(a, b, f, g, grid, eps=None) -> float:
    """Sum over atoms x of a of w_x f(x) * integral of g(u) k(x, du).

    ``f`` and ``g`` are polynomial coefficient lists (constant term first).
    The first measure must be atomic.
    """
    ha = as_handle(a)
    if not hasattr(ha, "_x") or ha.kind == "grid":
        raise ValueError("kernel expectation needs an atomic first measure")
    fp = np.polynomial.Polynomial(f)
    gp = np.polynomial.Polynomial(g)
    total = 0.0
    for x, w in zip(ha._x, ha._w):
        dens = markov_kernel_density(ha, b, float(x), grid, eps)
        inner = float(np.trapezoid(dens.ps * gp(dens.xs), dx=dens.step))
        inner /= dens.mass() if dens.mass() > 0 else 1.0
        total += w * fp(x) * inner
    return total
