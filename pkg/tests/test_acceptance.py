"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[ACC n] PASS|FAIL`` line; the lines are also
collected in RESULTS and repeated in the terminal summary.  Run with
``pytest tests/test_acceptance.py -s`` to see them inline.
"""
import math
import random
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from freeprob.analytic import cauchy_G, conv_G, conv_density, subordination_F
from freeprob.cumulants import CumulantSeq, c2m, compress, free_add_convolve, free_power, m2c
from freeprob.families import (
    CircleFamilySpec,
    family,
    family_cumulants,
    family_density,
    free_poisson_discrepancy,
    mult_convolve,
)
from freeprob.measures import AtomicMeasure, CircleMomentSeq, GridDensity, MomentSeq, affine_map, moments_of
from freeprob.rmt import Rng, additive_experiment, diagonal_experiment, kernel_experiment, word_trace_experiment

BERN = AtomicMeasure.bernoulli(0.5)
SEED = 42
RESULTS = []


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def record(n, title, ok, elapsed, limit, detail=""):
    ok = bool(ok) and elapsed <= limit
    line = f"[ACC {n:2d}] {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f}s, limit {limit:g}s)"
    if detail:
        line += f"  {detail}"
    RESULTS.append(line)
    print("\n" + line)
    assert ok, line


def arcsine_closed_form():
    return GridDensity.from_function(lambda x: family_density(family("arcsine"), x), 0, 2, 20001, mass_tol=0.02)


def test_acc01_cumulant_identities():
    import sympy

    with Timer() as t:
        m1, m2, m3 = sympy.symbols("m1 m2 m3")
        C = m2c(MomentSeq((m1, m2, m3)), "moebius").C
        sym_ok = (
            sympy.expand(C[0] - m1) == 0
            and sympy.expand(C[1] - (m2 - m1**2)) == 0
            and sympy.expand(C[2] - (m3 - 3 * m1 * m2 + 2 * m1**3)) == 0
        )
        k1, k2, k3 = sympy.symbols("C1 C2 C3")
        M = c2m(CumulantSeq((k1, k2, k3))).m
        sym_ok &= (
            sympy.expand(M[0] - k1) == 0
            and sympy.expand(M[1] - (k2 + k1**2)) == 0
            and sympy.expand(M[2] - (k3 + 3 * k1 * k2 + k1**3)) == 0
        )
        rnd = random.Random(SEED)
        exact_ok = True
        for _ in range(60):
            K = rnd.randint(3, 8)
            m = MomentSeq(tuple(Fr(rnd.randint(-20, 20), rnd.randint(1, 9)) for _ in range(K)))
            a, b, mob = (m2c(m, r) for r in ("a", "b", "moebius"))
            x1, x2, x3 = m.m[:3]
            exact_ok &= a == b == mob
            exact_ok &= a.C[:3] == (x1, x2 - x1**2, x3 - 3 * x1 * x2 + 2 * x1**3)
            exact_ok &= c2m(a) == m
            c = CumulantSeq(tuple(Fr(rnd.randint(-20, 20), rnd.randint(1, 9)) for _ in range(K)))
            y1, y2, y3 = c.C[:3]
            exact_ok &= c2m(c).m[:3] == (y1, y2 + y1**2, y3 + 3 * y1 * y2 + y1**3)
            exact_ok &= m2c(c2m(c), "moebius") == c
    record(1, "cumulant identities and inverses, routes a/b/moebius exact", sym_ok and exact_ok, t.elapsed, 1.0)


def test_acc02_arcsine_reproduction():
    from scipy.integrate import quad

    with Timer() as t:
        m = free_add_convolve(moments_of(BERN, 4), moments_of(BERN, 4))
        exact_ok = m.m == (1, Fr(3, 2), Fr(5, 2), Fr(35, 8))
        # integral of x^k / (pi sqrt(x (2 - x))) with the endpoint weight handled by quad
        quad_m = [quad(lambda x, k=k: x**k / math.pi, 0, 2, weight="alg", wvar=(-0.5, -0.5))[0] for k in range(1, 5)]
        moment_err = max(abs(float(a) - b) for a, b in zip(m.m, quad_m))
        # step 1e-3 keeps the widest smoothing height well inside [0.05, 1.95]
        dens = conv_density(BERN, BERN, (-0.5, 2.5, 3001))
        inside = (dens.xs >= 0.05) & (dens.xs <= 1.95)
        sup_err = float(np.max(np.abs(dens.ps[inside] - family_density(family("arcsine"), dens.xs[inside]))))
    ok = exact_ok and moment_err <= 1e-8 and sup_err <= 5e-3
    record(2, "Bernoulli pair moments vs quadrature, analytic density vs arcsine", ok, t.elapsed, 5.0,
           f"moment_err={moment_err:.1e} sup_err={sup_err:.1e}")


def test_acc03_additive_experiment():
    with Timer() as t:
        rep = additive_experiment(BERN, BERN, N=500, trials=20, rng=Rng(SEED), reference=arcsine_closed_form())
    ks = rep.distances["ks_free"]
    errs = rep.distances["moment_errors"]
    ok = ks <= 0.05 and max(errs.values()) <= 0.05 and len(errs) == 4
    record(3, "Haar-rotated sum of Bernoulli projections vs arcsine", ok, t.elapsed, 120.0,
           f"ks={ks:.4f} max_moment_err={max(errs.values()):.1e}")


def test_acc04_diagonal_experiment():
    with Timer() as t:
        rep = diagonal_experiment(BERN, BERN, N=500, trials=20, rng=Rng(SEED), reference=arcsine_closed_form())
    ks_c, ks_f = rep.distances["ks_classical"], rep.distances["ks_free"]
    ok = ks_c <= 0.05 and ks_f >= 0.2
    record(4, "permuted diagonals follow the classical law, free law rejected", ok, t.elapsed, 60.0,
           f"ks_classical={ks_c:.4f} ks_free={ks_f:.4f}")


def test_acc05_word_trace():
    with Timer() as t:
        rep = word_trace_experiment("XYXY", BERN, BERN, N=300, trials=20, rng=Rng(SEED), n_se=3)
    est = rep.estimates["trace"]
    err = abs(est["mean"] - 3 / 16)
    ok = rep.reference["mixed_moment"] == pytest.approx(3 / 16, abs=1e-15) and err <= 3 * est["se"]
    record(5, "tr(XYXY) within 3 jackknife SE of 3/16", ok, t.elapsed, 60.0,
           f"err={err:.1e} 3se={3 * est['se']:.1e}")


def test_acc06_free_clt():
    with Timer() as t:
        c = m2c(moments_of(AtomicMeasure([-0.5, 0.5], [0.5, 0.5]), 6))
        semi = (0, 1 / 4, 0, 2 / 16, 0, 5 / 64)
        worst = []
        for n in (10, 100, 1000):
            scaled = affine_map(c2m(free_power(c, n)), 1 / math.sqrt(n), 0)
            worst.append(max(abs(scaled[k] - semi[k - 1]) * n / 3 for k in range(1, 7)))
    record(6, "scaled free sums approach the semicircle within 3/n", max(worst) <= 1, t.elapsed, 1.0,
           f"max err/(3/n)={max(worst):.3f}")


def test_acc07_compression():
    with Timer() as t:
        c = m2c(moments_of(BERN, 8))
        feasible = {tt: compress(c, tt).feasible for tt in (1, 1.5, 2, 5)}
        half = compress(c, Fr(1, 2))
    ok = all(feasible.values()) and not half.feasible
    record(7, "Bernoulli compression PSD for t>=1, fails at t=1/2", ok, t.elapsed, 1.0,
           f"min_eig(t=1/2)={half.min_eigenvalue:.3g}")


def test_acc08_cauchy_stability():
    with Timer() as t:
        z = np.array([0.3 + 0.5j, -1.2 + 0.05j, 2.0 + 1.0j, 0.0 + 3.0j, -4.0 + 0.2j])
        unit = family("cauchy")
        got = conv_G(unit, unit, z)
        want = cauchy_G(family("cauchy", scale=2.0), z)
        err = float(np.max(np.abs(got - want)))
    record(8, "Cauchy free convolution doubles the scale", err <= 1e-8, t.elapsed, 1.0, f"err={err:.1e}")


def test_acc09_subordination_and_kernel():
    with Timer() as t:
        asym = AtomicMeasure([-1.0, 2.0], [0.5, 0.5])
        zetas = [complex(x, y) for x in np.linspace(-1.5, 3.5, 10) for y in (0.01, 0.5)]
        worst = 0.0
        for zeta in zetas:
            F = subordination_F(asym, BERN, zeta).F
            worst = max(worst, abs(cauchy_G(asym, F) - conv_G(asym, BERN, zeta)))
        rep = kernel_experiment(BERN, BERN, [0, 1], [0, 1], N=300, trials=20, rng=Rng(SEED))
    gap, mc = rep.distances["route_gap"], rep.distances["mc_error"]
    ok = worst <= 1e-9 and gap <= 2e-2 and mc <= 0.05
    record(9, "subordination residual, kernel vs cumulant route, Monte Carlo", ok, t.elapsed, 120.0,
           f"residual={worst:.1e} route_gap={gap:.1e} mc_err={mc:.1e}")


def test_acc10_multiplicative():
    with Timer() as t:
        rng = np.random.default_rng(SEED)
        worst1 = worst2 = 0.0
        for _ in range(50):
            n1, n2 = rng.integers(1, 4, size=2)
            a = CircleMomentSeq.of_atoms(rng.uniform(-1, 1, n1), rng.dirichlet(np.ones(n1)), 4)
            b = CircleMomentSeq.of_atoms(rng.uniform(-1, 1, n2), rng.dirichlet(np.ones(n2)), 4)
            out = mult_convolve(a, b)
            (a1, a2), (b1, b2) = a.m[:2], b.m[:2]
            worst1 = max(worst1, abs(out.m[0] - a1 * b1))
            worst2 = max(worst2, abs(out.m[1] - (a1**2 * b2 + a2 * b1**2 - a1**2 * b1**2)))
        w1, w2 = np.exp(0.4j), np.exp(2.1j)
        atoms = mult_convolve(CircleFamilySpec("atom", {"omega": w1}).moments(6),
                              CircleFamilySpec("atom", {"omega": w2}).moments(6))
        atom_err = float(np.max(np.abs(np.array(atoms.m) - (w1 * w2) ** np.arange(1, 7))))
    ok = worst1 <= 1e-15 and worst2 <= 1e-12 and atom_err <= 1e-13
    record(10, "multiplicative convolution: m1, four-letter m2, atoms", ok, t.elapsed, 1.0,
           f"m1_err={worst1:.1e} m2_err={worst2:.1e} atom_err={atom_err:.1e}")


def test_acc11_free_poisson_report():
    with Timer() as t:
        lam, tt = 2.0, 0.5
        rep = free_poisson_discrepancy(lam, tt, n=10**4)
        printed = family_cumulants(family("free_poisson", lam=lam, t=tt), 2)
    ok = (
        abs(rep["free_binomial_C2"] - lam * tt**2) <= 1e-3 * lam * tt**2
        and rep["printed_R_C2"] == pytest.approx(lam * (1 + tt**2), rel=1e-12)
        and float(printed[2]) == pytest.approx(lam * (1 + tt**2), rel=1e-12)
        and rep["consistent"] is False
        and {"C2_gap", "limit_C2", "binomial_rel_err_vs_limit"} <= set(rep)
    )
    record(11, "free Poisson: binomial limit C2 vs printed R coefficient", ok, t.elapsed, 1.0,
           f"binomial_C2={rep['free_binomial_C2']:.6f} printed_C2={rep['printed_R_C2']:.6f}")
