import numpy as np
import pytest

from degfairgt.evaluate import modularity
from degfairgt.synth import SbmSpec, synth_sbm


def test_spec_validation():
    with pytest.raises(ValueError, match="block sizes"):
        SbmSpec(blocks=(), p_in=0.5, p_out=0.1)
    with pytest.raises(ValueError, match="block sizes"):
        SbmSpec(blocks=(10, 0), p_in=0.5, p_out=0.1)
    with pytest.raises(ValueError, match="p_in"):
        SbmSpec(blocks=(10,), p_in=1.5, p_out=0.1)
    with pytest.raises(ValueError, match="p_in >= p_out"):
        SbmSpec(blocks=(10, 10), p_in=0.1, p_out=0.5)
    with pytest.raises(ValueError, match="degree_skew"):
        SbmSpec(blocks=(10, 10), p_in=0.5, p_out=0.1, degree_skew=-1.0)
    with pytest.raises(ValueError, match="noise"):
        SbmSpec(blocks=(10, 10), p_in=0.5, p_out=0.1, noise=-0.1)
    # equal probabilities are allowed: a structureless control graph
    SbmSpec(blocks=(10, 10), p_in=0.2, p_out=0.2)


def test_blocks_coerced_to_int_tuple():
    spec = SbmSpec(blocks=[10.0, 20.0], p_in=0.5, p_out=0.1)
    assert spec.blocks == (10, 20)


def test_labels_and_shapes():
    g = synth_sbm(SbmSpec(blocks=(8, 12, 5), p_in=0.6, p_out=0.05, seed=1))
    assert g.n == 25
    assert np.array_equal(np.bincount(g.labels), [8, 12, 5])
    assert g.features.shape == (25, 3)
    # labels are contiguous blocks in id order
    assert (np.diff(g.labels) >= 0).all()


def test_deterministic_per_seed():
    spec = SbmSpec(blocks=(15, 15), p_in=0.5, p_out=0.05, seed=3)
    a, b = synth_sbm(spec), synth_sbm(spec)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.features, b.features)
    c = synth_sbm(SbmSpec(blocks=(15, 15), p_in=0.5, p_out=0.05, seed=4))
    assert not np.array_equal(a.edges, c.edges) or not np.array_equal(
        a.features, c.features)


def test_strong_communities_high_modularity():
    vals = []
    for seed in range(5):
        g = synth_sbm(SbmSpec(blocks=(30, 30), p_in=0.5, p_out=0.02, seed=seed))
        vals.append(modularity(g, g.labels))
    # two nearly disconnected dense blocks: planted Q close to 50
    assert np.mean(vals) > 40.0


def test_flat_probabilities_near_zero_modularity():
    # p_in = p_out is an Erdos-Renyi graph; the planted partition carries
    # no signal, so its modularity concentrates near 0.
    vals = []
    for seed in range(10):
        g = synth_sbm(SbmSpec(blocks=(30, 30), p_in=0.15, p_out=0.15,
                              seed=seed))
        vals.append(modularity(g, g.labels))
    assert abs(np.mean(vals)) < 3.0


def test_degree_skew_produces_long_tail():
    flat = synth_sbm(SbmSpec(blocks=(60, 60), p_in=0.3, p_out=0.02, seed=7))
    skew = synth_sbm(SbmSpec(blocks=(60, 60), p_in=0.3, p_out=0.02,
                             degree_skew=1.5, seed=7))
    # bottom-20% mean degree falls well below half the top-20% mean
    def tails(g):
        d = np.sort(g.degrees)
        k = g.n // 5
        return d[:k].mean(), d[-k:].mean()

    lo_f, hi_f = tails(flat)
    lo_s, hi_s = tails(skew)
    assert lo_s < 0.5 * hi_s
    # and the skewed graph is more extreme than the flat one
    assert lo_s / hi_s < lo_f / hi_f
    # expected degrees scale with rank^-gamma, so the max grows
    assert skew.degrees.max() > flat.degrees.max() * 0.8


def test_noise_zero_gives_exact_one_hot_features():
    g = synth_sbm(SbmSpec(blocks=(5, 5), p_in=0.9, p_out=0.1, noise=0.0,
                          seed=2))
    eye = np.eye(2)
    assert np.array_equal(g.features, eye[g.labels])


def test_empty_graph_raises():
    with pytest.raises(ValueError, match="empty graph"):
        synth_sbm(SbmSpec(blocks=(3, 3), p_in=0.0, p_out=0.0, seed=0))


def test_feature_noise_centered_on_block_centroid():
    g = synth_sbm(SbmSpec(blocks=(200, 200), p_in=0.05, p_out=0.01,
                          noise=0.5, seed=5))
    eye = np.eye(2)
    for c in (0, 1):
        resid = g.features[g.labels == c] - eye[c]
        assert abs(resid.mean()) < 0.05
        assert abs(resid.std() - 0.5) < 0.05
