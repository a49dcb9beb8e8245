import importlib

import numpy as np
import pytest

from statebag import _core_py, kernels


def _backends():
    impls = [("python", _core_py)]
    try:
        _core = importlib.import_module("statebag._core")
        impls.append(("cython", _core))
    except ImportError:
        pass
    return impls


BACKENDS = _backends()


@pytest.fixture(params=BACKENDS, ids=[name for name, _ in BACKENDS])
def impl(request):
    return request.param[1]


def c2d(a):
    return np.ascontiguousarray(a, dtype=np.float64)


class TestPairwiseSqdist:
    def test_matches_definition(self, impl, rng):
        x = c2d(rng.normal(size=(17, 5)))
        c = c2d(rng.normal(size=(4, 5)))
        got = impl.pairwise_sqdist(x, c)
        expected = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch(self, impl, rng):
        with pytest.raises(ValueError):
            impl.pairwise_sqdist(c2d(rng.normal(size=(3, 4))), c2d(rng.normal(size=(2, 5))))


class TestAssignNearest:
    def test_matches_argmin(self, impl, rng):
        x = c2d(rng.normal(size=(200, 7)))
        c = c2d(rng.normal(size=(9, 7)))
        labels, mind = impl.assign_nearest(x, c)
        d2 = impl.pairwise_sqdist(x, c)
        assert np.array_equal(labels, d2.argmin(axis=1))
        np.testing.assert_allclose(mind, d2.min(axis=1), rtol=1e-12)

    def test_exact_tie_takes_lowest_index(self, impl):
        c = c2d([[5.0, 0.0], [1.0, 0.0], [5.0, 0.0], [-1.0, 0.0]])
        labels, mind = impl.assign_nearest(c2d([[0.0, 0.0]]), c)
        assert labels[0] == 1
        assert mind[0] == 1.0

    def test_empty_centroids_rejected(self, impl):
        with pytest.raises(ValueError):
            impl.assign_nearest(c2d(np.zeros((2, 2))), c2d(np.zeros((0, 2))))


class TestRbfGram:
    def test_matches_exp_of_distances(self, impl, rng):
        x = c2d(rng.normal(size=(12, 3)))
        y = c2d(rng.normal(size=(8, 3)))
        got = impl.rbf_gram(x, y, 0.25)
        expected = np.exp(-0.25 * ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2))
        np.testing.assert_allclose(got, expected, rtol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled core not built")
class TestBackendAgreement:
    def test_assignments_agree(self, rng):
        py = BACKENDS[0][1]
        cy = BACKENDS[1][1]
        x = c2d(rng.normal(size=(500, 49)))
        c = c2d(rng.normal(size=(12, 49)))
        lp, mp = py.assign_nearest(x, c)
        lc, mc = cy.assign_nearest(x, c)
        assert np.array_equal(lp, lc)
        np.testing.assert_allclose(mp, mc, rtol=1e-10)

    def test_grams_agree(self, rng):
        py = BACKENDS[0][1]
        cy = BACKENDS[1][1]
        x = c2d(rng.normal(size=(60, 49)))
        np.testing.assert_allclose(py.rbf_gram(x, x, 0.01), cy.rbf_gram(x, x, 0.01),
                                   rtol=1e-12, atol=1e-14)


class TestDispatcher:
    def test_backend_name_exposed(self):
        assert kernels.BACKEND in ("python", "cython")

    def test_accepts_non_contiguous_input(self, rng):
        x = rng.normal(size=(20, 10))[:, ::2]
        c = rng.normal(size=(3, 5))
        labels, _ = kernels.assign_nearest(x, c)
        assert labels.shape == (20,)

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            kernels.pairwise_sqdist(np.zeros(3), np.zeros((2, 3)))
