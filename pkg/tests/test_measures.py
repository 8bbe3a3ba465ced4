import json
from fractions import Fraction as Fr
from math import comb

import numpy as np
import pytest
from hypothesis import given
from scipy import integrate

from freeprob.jsonfmt import dumps
from freeprob.measures import (
    AtomicMeasure,
    CircleMomentSeq,
    GridDensity,
    MomentSeq,
    affine_map,
    classical_convolve,
    classical_cumulants,
    grid_from_csv,
    grid_to_csv,
    hankel_psd,
    kolmogorov_distance,
    measure_from_doc,
    measure_to_doc,
    moments_of,
)

from conftest import atomic_measures


def arcsine_grid(n=200001):
    x = np.linspace(0, 2, n)
    p = np.zeros_like(x)
    inner = (x > 0) & (x < 2)
    p[inner] = 1 / (np.pi * np.sqrt(x[inner] * (2 - x[inner])))
    return GridDensity(0.0, x[1] - x[0], p, mass_tol=None)


def test_atomic_construction_and_merge():
    m = AtomicMeasure([1.0, 0.0, 1.0 + 1e-12], [0.25, 0.5, 0.25])
    assert len(m) == 2
    assert m.atoms[1][1] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        AtomicMeasure([0, 1], [0.5, 0.6])
    with pytest.raises(ValueError):
        AtomicMeasure([0, 1], [1.0, 0.0])


def test_moments_examples():
    assert moments_of(AtomicMeasure.dirac(0), 4).m == (0, 0, 0, 0)
    assert moments_of(AtomicMeasure.bernoulli(0.5), 3).m == (0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        moments_of(AtomicMeasure.dirac(0), 0)


def test_arcsine_grid_moments_against_quadrature():
    # oracle: Gauss-Jacobi type quadrature of the 1/sqrt weight
    exact = [integrate.quad(lambda x, n=n: x**n / np.pi, 0, 2, weight="alg", wvar=(-0.5, -0.5))[0]
             for n in (1, 2, 3)]
    assert exact == pytest.approx([1, 1.5, 2.5], abs=1e-10)
    # the endpoint singularities make trapezoid converge like sqrt(step)
    assert moments_of(arcsine_grid(), 3).m == pytest.approx(exact, rel=5e-3)


def test_hankel_examples():
    assert hankel_psd(moments_of(AtomicMeasure.bernoulli(0.5), 6)).psd
    bad = hankel_psd(MomentSeq((0, -1)))
    assert not bad.psd and bad.min_eigenvalue < 0
    with pytest.raises(ValueError):
        hankel_psd(MomentSeq((1,)))


def test_semicircle_passes_shifted_hankel():
    # odd moments vanish; the shifted matrix is that of x^2 times the measure
    assert hankel_psd(MomentSeq((0, 1, 0, 2, 0, 5, 0, 14))).psd


@given(atomic_measures())
def test_hankel_accepts_every_atomic_measure(m):
    assert hankel_psd(moments_of(m, 8)).psd


def test_classical_cumulants_examples():
    assert classical_cumulants(MomentSeq((Fr(3), Fr(9), Fr(27)))) == (3, 0, 0)
    s = classical_cumulants(MomentSeq((Fr(1, 2), Fr(1, 2))))
    assert s == (Fr(1, 2), Fr(1, 8))


def test_classical_convolve_examples():
    b = AtomicMeasure.bernoulli(0.5)
    two = classical_convolve(b, b)
    assert two.locations.tolist() == [0, 1, 2]
    assert two.weights.tolist() == [0.25, 0.5, 0.25]
    assert classical_convolve(AtomicMeasure.dirac(2), AtomicMeasure.dirac(3)) == AtomicMeasure.dirac(5)
    m = AtomicMeasure([0.0, 1.5], [0.3, 0.7])
    assert classical_convolve(m, AtomicMeasure.dirac(0)) == m


@given(atomic_measures(), atomic_measures())
def test_classical_convolution_moments(a, b):
    K = 6
    ma, mb = moments_of(a, K).with_zero(), moments_of(b, K).with_zero()
    got = moments_of(classical_convolve(a, b), K)
    for n in range(1, K + 1):
        expect = sum(comb(n, k) * ma[k] * mb[n - k] for k in range(n + 1))
        assert got[n] == pytest.approx(expect, abs=1e-10 * max(1, abs(expect)))


@given(atomic_measures(), atomic_measures())
def test_classical_cumulants_additive(a, b):
    K = 6
    ca, cb = classical_cumulants(moments_of(a, K)), classical_cumulants(moments_of(b, K))
    cab = classical_cumulants(moments_of(classical_convolve(a, b), K))
    for x, y, z in zip(ca, cb, cab):
        assert z == pytest.approx(x + y, abs=1e-10 * max(1, abs(z)))


def test_kolmogorov_examples():
    a = AtomicMeasure.bernoulli(0.3, -1, 2)
    assert kolmogorov_distance(a, a) == 0
    assert kolmogorov_distance(AtomicMeasure.dirac(0), AtomicMeasure.dirac(1)) == 1
    assert kolmogorov_distance(AtomicMeasure.dirac(0), AtomicMeasure.bernoulli(0.5)) == 0.5


@given(atomic_measures(), atomic_measures(), atomic_measures())
def test_kolmogorov_is_a_metric(a, b, c):
    ab, ba = kolmogorov_distance(a, b), kolmogorov_distance(b, a)
    assert ab == ba
    assert ab <= kolmogorov_distance(a, c) + kolmogorov_distance(c, b) + 1e-15
    assert (ab == 0) == (a == b)


def test_kolmogorov_grid_vs_atomic():
    g = GridDensity.from_function(lambda x: np.ones_like(x), 0, 1, 1001)
    # uniform against a point mass at 1/2: sup gap is 1/2
    assert kolmogorov_distance(g, AtomicMeasure.dirac(0.5)) == pytest.approx(0.5, abs=1e-9)


def test_affine_map_examples():
    m = AtomicMeasure([0.0, 1.0, 3.0], [0.2, 0.3, 0.5])
    assert affine_map(m, 1, 0) == m
    assert affine_map(AtomicMeasure.dirac(1), 2, 3) == AtomicMeasure.dirac(5)
    g = GridDensity.from_function(lambda x: 2 * x, 0, 1, 101)
    flipped = affine_map(g, -1, 0)
    assert flipped.mass() == pytest.approx(g.mass())
    assert moments_of(flipped, 1)[1] == pytest.approx(-moments_of(g, 1)[1])


@given(atomic_measures())
def test_affine_moments(m):
    s, t = -1.5, 0.75
    before = moments_of(m, 3)
    after = moments_of(affine_map(m, s, t), 3)
    assert after[1] == pytest.approx(s * before[1] + t, abs=1e-12)
    assert affine_map(before, s, t).m == pytest.approx(after.m, abs=1e-10)


def test_grid_density_mass_check():
    with pytest.raises(ValueError):
        GridDensity(0, 0.1, [1.0] * 3)
    with pytest.raises(ValueError):
        GridDensity(0, 0.5, [1.0, -1.0, 1.0], mass_tol=None)


def test_circle_moments_bound():
    CircleMomentSeq((1, 1j, -1))
    with pytest.raises(ValueError):
        CircleMomentSeq((1.01,))


def roundtrip(obj):
    return measure_from_doc(json.loads(dumps(measure_to_doc(obj))))


def test_document_roundtrips():
    a = AtomicMeasure([0.1, 1 / 3], [0.25, 0.75])
    assert roundtrip(a) == a
    m = MomentSeq((Fr(1, 2), Fr(1, 3), 2))
    assert roundtrip(m) == m
    g = GridDensity.from_function(lambda x: np.exp(-x * x) / np.sqrt(np.pi), -8, 8, 801)
    back = roundtrip(g)
    assert back.x0 == g.x0 and back.step == g.step and np.array_equal(back.ps, g.ps)
    c = CircleMomentSeq.of_atoms([0.3, 2.0], [0.4, 0.6], 4)
    assert roundtrip(c) == c
    with pytest.raises(ValueError):
        measure_from_doc({"type": "nope"})


def test_circle_atomic_document():
    doc = {"type": "circle_atomic", "atoms": [[0.5, 1.0]], "K": 3}
    c = measure_from_doc(doc)
    assert c.m[0] == pytest.approx(np.exp(0.5j))


def test_grid_csv_roundtrip():
    g = GridDensity.from_function(lambda x: 0.5 * np.ones_like(x), 0, 2, 11)
    text = "# comment line\n" + grid_to_csv(g)
    back = grid_from_csv(text)
    assert np.array_equal(back.ps, g.ps) and back.x0 == g.x0
    with pytest.raises(ValueError):
        grid_from_csv("a,b\n1,2\n")


def test_merge_keeps_identical_locations_exact():
    m = AtomicMeasure.empirical([-1.5] * 30 + [1.5] * 30)
    assert m.locations.tolist() == [-1.5, 1.5]


def test_kolmogorov_tolerance():
    a = AtomicMeasure([0.0, 1.0 + 1e-12], [0.5, 0.5])
    b = AtomicMeasure.bernoulli(0.5)
    assert kolmogorov_distance(a, b) == 0.5
    assert kolmogorov_distance(a, b, atol=1e-9) == 0
    assert kolmogorov_distance(AtomicMeasure.dirac(0.0), AtomicMeasure.dirac(1e-12), atol=1e-9) == 0
