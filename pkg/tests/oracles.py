"""Independent brute-force reference implementations used to freeze expected
values. Everything here favors obviousness over speed: explicit loops,
Python sets, and networkx shortest paths."""

from __future__ import annotations

import networkx as nx
import numpy as np

from degfairgt.tensor import Tensor, backward


def to_nx(g) -> nx.Graph:
    gx = nx.Graph()
    gx.add_nodes_from(range(g.n))
    gx.add_edges_from(map(tuple, g.edges))
    return gx


def hop_sets(g, k: int) -> list[list[set]]:
    """hop_sets(g, k)[v][l-1] = set of nodes at distance 1..l from v."""
    gx = to_nx(g)
    out = []
    for v in range(g.n):
        dist = nx.single_source_shortest_path_length(gx, v, cutoff=k)
        out.append([{u for u, d in dist.items() if 1 <= d <= l}
                    for l in range(1, k + 1)])
    return out


def context_pairs_brute(g, assignment, k: int) -> set[tuple[int, int]]:
    """All ordered pairs (i, j), i != j, same cluster and within k hops."""
    sets = hop_sets(g, k)
    pairs = set()
    for i in range(g.n):
        for j in sets[i][k - 1]:
            if assignment[i] == assignment[j]:
                pairs.add((i, j))
    return pairs


def degree_weights_brute(g, pairs: set[tuple[int, int]]) -> np.ndarray:
    deg = np.asarray(g.degrees, dtype=np.float64)
    d = np.zeros((g.n, g.n))
    for i, j in pairs:
        d[i, j] = 1.0 / np.sqrt(deg[i] * deg[j])
    return d


def jaccard(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def proximity_brute(g, k: int, i: int, j: int) -> np.ndarray:
    sets = hop_sets(g, k)
    return np.array([jaccard(sets[i][l], sets[j][l]) for l in range(k)])


def transition_targets_brute(g, p_steps: int) -> list[np.ndarray]:
    a = g.adjacency_dense()
    t = np.zeros_like(a)
    for i in range(g.n):
        s = a[i].sum()
        if s > 0:
            t[i] = a[i] / s
    powers = [np.linalg.matrix_power(t, p) for p in range(1, p_steps + 1)]
    targets = []
    for p in range(1, p_steps + 1):
        t_bar = sum(powers[:p]) / p
        targets.append(np.log(1.0 + g.n * t_bar) / np.log(1.0 + g.n))
    return targets


def modularity_brute(g, comm) -> float:
    a = g.adjacency_dense()
    deg = a.sum(axis=1)
    two_m = deg.sum()
    q = 0.0
    for i in range(g.n):
        for j in range(g.n):
            if comm[i] == comm[j]:
                q += a[i, j] - deg[i] * deg[j] / two_m
    return q / two_m * 100.0


def conductance_brute(g, comm) -> float:
    a = g.adjacency_dense()
    deg = a.sum(axis=1)
    two_m = deg.sum()
    ratios = []
    for c in sorted(set(int(x) for x in comm)):
        members = [i for i in range(g.n) if comm[i] == c]
        vol = sum(deg[i] for i in members)
        if vol == 0 or two_m - vol == 0:
            continue
        cut = sum(a[i, j] for i in members for j in range(g.n) if comm[j] != c)
        ratios.append(cut / min(vol, two_m - vol))
    if not ratios:
        return 100.0
    return float(np.mean(ratios)) * 100.0


def delta_sp_brute(preds, g1, g2, num_classes) -> float:
    total = 0.0
    for c in range(num_classes):
        p1 = sum(1 for v in g1 if preds[v] == c) / len(g1)
        p2 = sum(1 for v in g2 if preds[v] == c) / len(g2)
        total += abs(p1 - p2)
    return total / num_classes * 100.0


def delta_eo_brute(preds, truth, g1, g2, num_classes) -> float:
    gaps = []
    for c in range(num_classes):
        m1 = [v for v in g1 if truth[v] == c]
        m2 = [v for v in g2 if truth[v] == c]
        if not m1 or not m2:
            continue
        r1 = sum(1 for v in m1 if preds[v] == c) / len(m1)
        r2 = sum(1 for v in m2 if preds[v] == c) / len(m2)
        gaps.append(abs(r1 - r2))
    return float(np.mean(gaps)) * 100.0


def attention_scores_brute(params, layer, head, h, src, dst, s_raw, d_vals,
                           dk, structural=True) -> np.ndarray:
    """Direct per-pair evaluation of the attention score formula."""
    pre, hp = f"layer{layer}.", f"layer{layer}.head{head}."
    wq, wk = params[hp + "Wq_n"], params[hp + "Wk_n"]
    scores = np.empty(len(src))
    for e in range(len(src)):
        i, j = src[e], dst[e]
        q = wq @ h[i]
        k = wk @ h[j]
        if structural:
            s_proj = params[pre + "fs.W"] @ s_raw[e] + params[pre + "fs.b"]
            q = q + params[hp + "Wq_s"] @ s_proj
            k = k + params[hp + "Wk_s"] @ s_proj
        score = float(q @ k) / np.sqrt(dk)
        if structural:
            fd = params[pre + "fd.w"] * d_vals[e] + params[pre + "fd.b"]
            score += float(params[hp + "phi"] @ fd)
        scores[e] = score
    return scores


def finite_difference(make_loss, tensor: Tensor, indices, h: float = 1e-6):
    """Central finite differences of a scalar-loss builder at given flat
    indices of one tensor's data."""
    grads = []
    flat = tensor.data.reshape(-1)
    for idx in indices:
        orig = flat[idx]
        flat[idx] = orig + h
        hi = float(make_loss().data)
        flat[idx] = orig - h
        lo = float(make_loss().data)
        flat[idx] = orig
        grads.append((hi - lo) / (2.0 * h))
    return np.array(grads)


def check_gradients(make_loss, tensors, rtol: float = 1e-4, h: float = 1e-6,
                    max_entries: int = 12, rng=None):
    """Compare reverse-mode gradients of a scalar loss against central
    differences on a sample of entries of each tensor; returns the worst
    relative error seen."""
    rng = rng or np.random.default_rng(0)
    for t in tensors:
        t.grad = None
    loss = make_loss()
    backward(loss)
    worst = 0.0
    for t in tensors:
        assert t.requires_grad
        grad = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        n = t.data.size
        idx = np.arange(n) if n <= max_entries else rng.choice(n, max_entries,
                                                               replace=False)
        fd = finite_difference(make_loss, t, idx, h=h)
        ad = grad.reshape(-1)[idx]
        err = np.abs(fd - ad) / np.maximum.reduce(
            [np.abs(fd), np.abs(ad), np.full_like(fd, 1e-6)])
        worst = max(worst, float(err.max()))
        assert err.max() < rtol, (
            f"gradient mismatch: fd={fd[err.argmax()]}, ad={ad[err.argmax()]}, "
            f"rel err {err.max():.2e}")
    return worst
