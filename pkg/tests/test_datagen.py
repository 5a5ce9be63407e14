import numpy as np
import pytest

from comfair.datagen import SbmConfig, generate_sbm
from comfair.errors import ConfigError
from comfair.graph import save_bundle
from comfair.homophily import homophily_profile


def test_extreme_probabilities_two_cliques():
    cfg = SbmConfig(block_sizes=[3, 3], p_in=1.0, p_out=0.0, label_homophily=0.5)
    g = generate_sbm(cfg, seed=0)
    assert g.num_edges == 6
    # two disjoint K3 components
    for u in range(3):
        assert set(g.neighbors(u)) == {0, 1, 2} - {u}
    for u in range(3, 6):
        assert set(g.neighbors(u)) == {3, 4, 5} - {u}


def test_edge_count_matches_binomial_oracle():
    # p_in = p_out = p; the expected edge count is p * n(n-1)/2 regardless of
    # the label-homophily target because the per-pair split preserves mass
    p, n = 0.2, 30
    cfg = SbmConfig(block_sizes=[15, 15], p_in=p, p_out=p, label_homophily=0.5)
    n_seeds = 100
    counts = [generate_sbm(cfg, seed=s).num_edges for s in range(n_seeds)]
    pairs = n * (n - 1) // 2
    mean, expected = np.mean(counts), p * pairs
    sigma_of_mean = np.sqrt(pairs * p * (1 - p) / n_seeds)
    assert abs(mean - expected) <= 3 * sigma_of_mean


def test_label_homophily_separates_blocks():
    cfg = SbmConfig(block_sizes=[100, 100], p_in=0.1, p_out=0.005,
                    label_homophily=[0.9, 0.3])
    diffs = []
    for seed in range(5):
        g = generate_sbm(cfg, seed=seed)
        ratio = homophily_profile(g).ratio
        diffs.append(np.nanmean(ratio[:100]) - np.nanmean(ratio[100:]))
    assert min(diffs) >= 0.3


def test_full_alignment_is_exact():
    cfg = SbmConfig(block_sizes=[10, 10, 10], p_in=0.3, p_out=0.05, sens_alignment=1.0)
    g = generate_sbm(cfg, seed=2)
    majority = np.repeat([0, 1, 0], 10)
    assert np.array_equal(g.sensitive, majority)


def test_partial_alignment_rate():
    cfg = SbmConfig(block_sizes=[500, 500], p_in=0.01, p_out=0.0, sens_alignment=0.9)
    g = generate_sbm(cfg, seed=3)
    majority = np.repeat([0, 1], 500)
    agree = (g.sensitive == majority).mean()
    assert 0.85 < agree < 0.95


def test_same_seed_byte_identical_bundle(tmp_path):
    cfg = SbmConfig(block_sizes=[20, 20], p_in=0.2, p_out=0.05,
                    label_homophily=[0.8, 0.4], sens_alignment=0.8)
    save_bundle(generate_sbm(cfg, seed=11), tmp_path / "a")
    save_bundle(generate_sbm(cfg, seed=11), tmp_path / "b")
    for name in ("edges.tsv", "features.csv", "labels.txt", "sensitive.txt", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seed_differs(tmp_path):
    cfg = SbmConfig(block_sizes=[20, 20], p_in=0.2, p_out=0.05)
    a = generate_sbm(cfg, seed=1)
    b = generate_sbm(cfg, seed=2)
    assert not (np.array_equal(a.indices, b.indices) and np.array_equal(a.labels, b.labels))


def test_output_passes_graph_invariants():
    # Graph.from_edges validates; also check feature/label shapes explicitly
    cfg = SbmConfig(block_sizes=[8, 12], p_in=0.4, p_out=0.1, feature_dim=5)
    g = generate_sbm(cfg, seed=4)
    assert g.num_nodes == 20
    assert g.features.shape == (20, 5)
    assert np.isin(g.labels, [0, 1]).all()


def test_feature_signal_separates_class_means():
    cfg = SbmConfig(block_sizes=[200, 200], p_in=0.05, p_out=0.01,
                    feature_dim=4, feature_signal=3.0)
    g = generate_sbm(cfg, seed=5)
    gap = g.features[g.labels == 1, 0].mean() - g.features[g.labels == 0, 0].mean()
    assert gap == pytest.approx(3.0, abs=0.5)


@pytest.mark.parametrize("bad", [
    {"block_sizes": [1, 5], "p_in": 0.5, "p_out": 0.1},
    {"block_sizes": [5, 5], "p_in": 1.5, "p_out": 0.1},
    {"block_sizes": [5, 5], "p_in": 0.5, "p_out": 0.1, "sens_alignment": 0.2},
    {"block_sizes": [5, 5], "p_in": 0.5, "p_out": 0.1, "label_homophily": [0.5]},
    {"block_sizes": [5, 5], "p_in": 0.5, "p_out": 0.1, "feature_signal": -1.0},
])
def test_config_invalid(bad):
    with pytest.raises(ConfigError):
        SbmConfig(**bad)
