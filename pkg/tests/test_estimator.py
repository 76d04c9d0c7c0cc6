import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from prigsl.estimator import PRIGSLClassifier, RoleEncoder
from prigsl.exceptions import DimensionMismatch
from prigsl.graph import cycle_graph, random_graph, sbm_generate
from prigsl.roles import RoleConfig, role_encode


@pytest.fixture(scope="module")
def data():
    g = sbm_generate([25, 25], 0.3, 0.02, feature_dim=6, seed=0, signal=2.0)
    y = np.where(g.labels == 0, "a", "b").astype(object)
    y[::5] = -1
    return g.features, y, np.asarray(g.adjacency)


FAST = dict(epochs=10, patience=10, hidden=8)


class TestClassifier:
    def test_params_round_trip_and_clone(self):
        est = PRIGSLClassifier(alpha=0.3, scales=(0.1, 0.4))
        params = est.get_params()
        assert params["alpha"] == 0.3 and params["method"] == "pri-gsl"
        twin = clone(est)
        assert twin.get_params() == params
        twin.set_params(alpha=0.7)
        assert est.alpha == 0.3

    def test_fit_predict(self, data):
        x, y, adj = data
        est = PRIGSLClassifier(**FAST).fit(x, y, adj)
        assert set(est.classes_) == {"a", "b"}
        pred = est.predict()
        assert pred.shape == (50,) and set(pred) <= {"a", "b"}
        assert np.allclose(est.predict_proba().sum(axis=1), 1.0)
        assert len(est.history_) == 10 and 1 <= est.best_epoch_ <= 10
        assert np.allclose(est.fused_adjacency_, est.fused_adjacency_.T)
        assert 0.0 <= est.score(x, y) <= 1.0
        # unlabelled nodes belong to no split
        unl = y == -1
        g = est.graph_
        assert not np.any((g.train_mask | g.val_mask | g.test_mask)[unl])

    def test_deterministic(self, data):
        x, y, adj = data
        a = PRIGSLClassifier(**FAST, random_state=4).fit(x, y, adj)
        b = PRIGSLClassifier(**FAST, random_state=4).fit(x, y, adj)
        assert np.array_equal(a.predict_proba(), b.predict_proba())

    def test_explicit_masks(self, data):
        x, y, adj = data
        train = np.zeros(50, bool)
        val = np.zeros(50, bool)
        train[[1, 2, 26, 27]] = True
        val[[3, 4, 28, 29]] = True
        est = PRIGSLClassifier(method="gcn-baseline", **FAST).fit(x, y, adj, train, val)
        assert np.array_equal(est.graph_.train_mask, train)
        with pytest.raises(ValueError):
            PRIGSLClassifier(**FAST).fit(x, y, adj, train_mask=train)
        with pytest.raises(ValueError):
            PRIGSLClassifier(**FAST).fit(x, y, adj, np.r_[True, np.zeros(49, bool)], val)

    def test_new_graph_prediction(self, data):
        x, y, adj = data
        est = PRIGSLClassifier(**FAST).fit(x, y, adj)
        other = sbm_generate([10, 10], 0.4, 0.05, feature_dim=6, seed=5, signal=2.0)
        proba = est.predict_proba(other.features, other.adjacency)
        assert proba.shape == (20, 2) and np.allclose(proba.sum(axis=1), 1.0)
        with pytest.raises(DimensionMismatch):
            est.predict(other.features[:, :3], other.adjacency)
        with pytest.raises(ValueError):
            est.predict(other.features)

    def test_input_validation(self, data):
        x, y, adj = data
        with pytest.raises(DimensionMismatch):
            PRIGSLClassifier(**FAST).fit(x, y, adj[:10, :10])
        with pytest.raises(DimensionMismatch):
            PRIGSLClassifier(**FAST).fit(x, y[:10], adj)
        with pytest.raises(NotFittedError):
            PRIGSLClassifier().predict()


class TestRoleEncoder:
    def test_fit_transform_matches_function(self):
        g = random_graph(12, 0.4, seed=2, weighted=True)
        enc = RoleEncoder(scales=(0.3, 0.8))
        out = enc.fit_transform(np.asarray(g.adjacency))
        expected = role_encode(g, RoleConfig(scales=(0.3, 0.8))).matrix
        assert np.allclose(out, expected)
        names = enc.get_feature_names_out()
        assert len(names) == out.shape[1] == 16 and names[0] == "s0_t0_re"

    def test_adaptive_scales_fixed_at_fit(self):
        enc = RoleEncoder(n_scales=1).fit(np.asarray(cycle_graph(6).adjacency))
        assert len(enc.scales_) == 1
        out = enc.transform(np.asarray(random_graph(9, 0.5, seed=1).adjacency))
        assert out.shape == (9, 8)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            RoleEncoder().transform(np.eye(2))
