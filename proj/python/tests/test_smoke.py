import numpy as np
import pytest

import evgraph


def path3():
    s = np.zeros((3, 3))
    s[0, 1] = s[1, 0] = s[1, 2] = s[2, 1] = 1.0
    return evgraph.Graph(s)


def test_graph_roundtrip():
    g = path3()
    assert g.num_nodes == 3
    assert g.num_edges == 4
    assert not g.directed
    back = evgraph.Graph.from_edge_list(g.to_edge_list())
    assert np.array_equal(back.shift(), g.shift())


def test_polynomial_transfer_function():
    g = path3()
    f = evgraph.Filter.polynomial([1.0, 1.0])
    r = f.spectral_response(g)
    assert r["diagonal"]
    assert np.allclose(r["response"], 1.0 + r["eigenvalues"], atol=1e-12)
    x = np.array([[1.0], [2.0], [3.0]])
    assert np.allclose(f.forward(g, x), x + g.shift() @ x)


def test_ev_from_poly_matches_polynomial():
    g = evgraph.normalize_by_spectral_radius(evgraph.build_sbm(12, 3, 0.8, 0.2, 4))
    taps = [0.0, 0.7, -0.3]
    x = np.random.default_rng(0).standard_normal((12, 2))
    ev = evgraph.Filter.ev_from_poly(taps, g)
    assert ev.family == "edge-variant"
    assert np.allclose(ev.forward(g, x), evgraph.Filter.polynomial(taps).forward(g, x), atol=1e-12)


@pytest.mark.parametrize(
    "family", ["polynomial", "spectral", "node-variant", "edge-variant", "hybrid-ev", "spectral-ev"]
)
def test_random_filters_match_dense_operator(family, tmp_path):
    g = evgraph.normalize_by_spectral_radius(evgraph.build_sbm(10, 2, 0.8, 0.3, 2))
    f = evgraph.Filter.random(family, g, order=2, num_knots=3, privileged_size=3, seed=5)
    x = np.random.default_rng(1).standard_normal((10, 1))
    assert np.allclose(f.forward(g, x), f.dense(g) @ x, atol=1e-12)
    f.save(tmp_path / "f.json")
    assert evgraph.Filter.load(tmp_path / "f.json").to_json() == f.to_json()
    assert f.num_parameters > 0


def test_eigendecompose_orthonormal():
    g = evgraph.normalize_by_spectral_radius(evgraph.build_sbm(10, 2, 0.8, 0.3, 3))
    lam, u = evgraph.eigendecompose(g)
    assert np.allclose(u.T @ u, np.eye(10), atol=1e-12)
    assert np.allclose(u @ np.diag(lam) @ u.T, g.shift(), atol=1e-12)
    assert abs(lam.max() - 1.0) < 1e-12


def test_gradient_check():
    for r in evgraph.gradient_check(seed=3):
        assert r["probes"] == 20
        assert r["max_relative_error"] < 1e-5


def test_wan_helpers():
    assert evgraph.tokenize("The cat, the DOG's") == ["the", "cat", "the", "dog", "s"]
    wan = evgraph.build_wan(evgraph.tokenize("the cat the"), ["the"], window=2, decay=0.5, normalize=False)
    assert wan.shift()[0, 0] == 0.5
    x = evgraph.frequency_signal(evgraph.tokenize("the of the"), ["the", "of"])
    assert x.ravel().tolist() == [2.0, 1.0]
    assert "the" in evgraph.default_function_words()


def test_label_of_node_and_config_errors():
    assert evgraph.label_of_node(23, 50, 5) == 3
    with pytest.raises(evgraph.ConfigError, match="unknown key 'colour'"):
        evgraph.run_source_localization("colour = red\n")


def test_small_source_localization():
    out = evgraph.run_source_localization(
        "num_nodes = 20\nnum_communities = 4\nnum_train = 40\nnum_test = 20\n"
        "num_graph_realizations = 1\nepochs = 1\nfeatures = 2\narchitectures = ev, polynomial\nworkers = 1\n"
    )
    assert set(out["results"]) == {"ev", "polynomial"}
    assert out["runs_csv"].startswith("run_id,graph_seed,data_seed,architecture,test_accuracy\n")
