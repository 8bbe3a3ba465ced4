import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from freeprob.estimators import FreeConvolutionDensity, SpectralCumulants
from freeprob.families import family, family_density
from freeprob.measures import AtomicMeasure


def test_spectral_cumulants_rows():
    X = np.array([[0.0, 1.0], [-1.0, 1.0], [2.0, 2.0]])
    out = SpectralCumulants(order=4).fit_transform(X)
    assert out.shape == (3, 4)
    assert np.allclose(out[0], [0.5, 0.25, 0.0, -1 / 16])
    assert np.allclose(out[1], [0.0, 1.0, 0.0, -1.0])
    assert np.allclose(out[2], [2.0, 0.0, 0.0, 0.0])


def test_spectral_cumulants_routes_agree():
    X = np.random.default_rng(0).normal(size=(4, 30))
    ref = SpectralCumulants(order=6).fit_transform(X)
    for route in ("b", "moebius"):
        assert np.allclose(SpectralCumulants(order=6, route=route).fit_transform(X), ref, atol=1e-10)


def test_spectral_cumulants_sklearn_contract():
    est = SpectralCumulants(order=3, route="b")
    assert clone(est).get_params() == {"order": 3, "route": "b"}
    assert list(est.get_feature_names_out()) == ["C1", "C2", "C3"]
    with pytest.raises(NotFittedError):
        est.transform([[1.0, 2.0]])
    est.fit([[1.0, 2.0]])
    with pytest.raises(ValueError):
        est.transform([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        SpectralCumulants(route="x").fit([[1.0]])
    with pytest.raises(ValueError):
        SpectralCumulants(order=0).fit([[1.0]])
    pipe = make_pipeline(SpectralCumulants(order=2), StandardScaler())
    assert pipe.fit_transform(np.eye(3)).shape == (3, 2)


def test_free_convolution_density():
    est = FreeConvolutionDensity(rhs=AtomicMeasure.bernoulli(0.5), grid=(-0.5, 2.5, 601))
    est.fit(np.array([0.0, 1.0, 0.0, 1.0]))
    assert est.lhs_ == AtomicMeasure.bernoulli(0.5)
    x = np.linspace(0.1, 1.9, 7)
    assert np.allclose(est.predict(x), family_density(family("arcsine"), x), atol=5e-3)
    assert est.predict([-5.0, 5.0]).tolist() == [0.0, 0.0]
    assert clone(est).get_params()["grid"] == (-0.5, 2.5, 601)


def test_free_convolution_density_errors():
    with pytest.raises(ValueError):
        FreeConvolutionDensity().fit([0.0, 1.0])
    with pytest.raises(NotFittedError):
        FreeConvolutionDensity(rhs=AtomicMeasure.dirac(0)).predict([0.0])
