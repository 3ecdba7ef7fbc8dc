"""Evaluation of frozen embeddings: degree-fairness gaps, linear-probe
accuracy, and graph-clustering quality.

Fairness gaps compare prediction behavior between the lowest- and
highest-degree tails of the test set, where "degree" is the generalized
r-hop neighborhood size. All metrics are reported on a 0-100 scale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .clustering import kmeans
from .graph import Graph, bfs_distances
from .optim import Adam
from .rng import derive_seed, generator
from .tensor import Tensor

__all__ = [
    "FairnessGroups", "fairness_groups", "generalized_degree",
    "delta_sp", "delta_eo", "ProbeResult", "linear_probe",
    "modularity", "conductance", "clustering_quality",
    "EvalReport", "evaluate_embeddings",
]

log = logging.getLogger(__name__)


def generalized_degree(g: Graph, r: int) -> np.ndarray:
    """gd(v) = number of nodes other than v within r hops of v."""
    if r < 1:
        raise ValueError(f"hop radius must be >= 1, got {r}")
    if r == 1:
        return g.degrees.astype(np.int64)
    out = np.empty(g.n, dtype=np.int64)
    for v in range(g.n):
        dist = bfs_distances(g, v, cap=r)
        out[v] = int(np.count_nonzero((dist >= 1) & (dist <= r)))
    return out


@dataclass(frozen=True)
class FairnessGroups:
    """Bottom-q and top-q tails of the test nodes by generalized degree."""

    r: int
    q: float
    g1: np.ndarray  # low-degree test nodes
    g2: np.ndarray  # high-degree test nodes


def fairness_groups(g: Graph, test_nodes: np.ndarray, r: int, q: float) -> FairnessGroups:
    test_nodes = np.asarray(test_nodes, dtype=np.int64)
    size = int(np.floor(q * test_nodes.size))
    if size < 1:
        raise ValueError(
            f"tail fraction q={q} of {test_nodes.size} test nodes is empty")
    gd = generalized_degree(g, r)[test_nodes]
    # Ascending by (degree, node index); ties therefore resolve to the
    # smaller node id first.
    order = np.lexsort((test_nodes, gd))
    ranked = test_nodes[order]
    return FairnessGroups(r=r, q=q, g1=ranked[:size], g2=ranked[-size:])


def _class_fractions(preds: np.ndarray, members: np.ndarray, num_classes: int) -> np.ndarray:
    counts = np.bincount(preds[members], minlength=num_classes).astype(np.float64)
    return counts / members.size


def delta_sp(preds: np.ndarray, groups: FairnessGroups, num_classes: int) -> float:
    """Statistical-parity gap: mean absolute difference of the two groups'
    predicted-class distributions, times 100."""
    if groups.g1.size == 0 or groups.g2.size == 0:
        raise ValueError("fairness groups must be non-empty")
    p1 = _class_fractions(preds, groups.g1, num_classes)
    p2 = _class_fractions(preds, groups.g2, num_classes)
    return float(np.abs(p1 - p2).mean() * 100.0)


def delta_eo(preds: np.ndarray, truth: np.ndarray, groups: FairnessGroups,
             num_classes: int) -> float:
    """Equal-opportunity gap: mean absolute per-class recall difference over
    classes with ground-truth support in both groups, times 100."""
    if groups.g1.size == 0 or groups.g2.size == 0:
        raise ValueError("fairness groups must be non-empty")
    gaps, skipped = [], []
    for c in range(num_classes):
        m1 = groups.g1[truth[groups.g1] == c]
        m2 = groups.g2[truth[groups.g2] == c]
        if m1.size == 0 or m2.size == 0:
            skipped.append(c)
            continue
        r1 = float(np.mean(preds[m1] == c))
        r2 = float(np.mean(preds[m2] == c))
        gaps.append(abs(r1 - r2))
    if skipped:
        log.info("delta_eo: classes %s lack truth support in a group, skipped",
                 skipped)
    if not gaps:
        raise ValueError("no class has truth support in both fairness groups")
    return float(np.mean(gaps) * 100.0)


@dataclass
class ProbeResult:
    accuracy: float
    predictions: np.ndarray  # (n,) argmax class for every node
    test_nodes: np.ndarray
    split_seed: int
    redraws: int


def _split_indices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    perm = generator(seed, "split").permutation(n)
    n_train = int(0.6 * n)
    n_val = int(0.2 * n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def linear_probe(z: np.ndarray, labels: np.ndarray, seed: int, *,
                 epochs: int = 200, lr: float = 1e-2,
                 max_redraws: int = 25) -> ProbeResult:
    """Softmax regression on frozen embeddings over a seeded 60/20/20 split.

    Trained full-batch with Adam (no regularization), selected by
    validation accuracy, scored on the test split. If a class is missing
    from the training split the split is redrawn with the next seed and the
    event logged.
    """
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, d = z.shape
    num_classes = int(labels.max()) + 1

    redraws = 0
    split_seed = seed
    while True:
        train, val, test = _split_indices(n, split_seed)
        if np.unique(labels[train]).size == num_classes:
            break
        redraws += 1
        log.info("linear_probe: class missing from train split (seed %d), redrawing",
                 split_seed)
        if redraws > max_redraws:
            raise ValueError(
                f"could not draw a train split covering all {num_classes} classes")
        split_seed += 1

    w = Tensor(np.zeros((num_classes, d)), requires_grad=True)
    b = Tensor(np.zeros(num_classes), requires_grad=True)
    opt = Adam({"w": w, "b": b}, lr=lr, weight_decay=0.0)

    z_train = Tensor(z[train])
    y_train = labels[train]
    row_ids = np.arange(train.size)

    def predictions() -> np.ndarray:
        logits = z @ w.data.T + b.data
        return logits.argmax(axis=1).astype(np.int64)

    best_val, best_w, best_b = -1.0, w.data.copy(), b.data.copy()
    for _ in range(epochs):
        logits = z_train @ w.T + b
        probs = T.row_softmax(logits)
        picked = T.gather_pairs(probs, row_ids, y_train)
        loss = T.log(T.clip(picked, 1e-12, 1.0)).mean() * -1.0
        T.backward(loss)
        opt.step()
        val_acc = float(np.mean(predictions()[val] == labels[val]))
        if val_acc > best_val:
            best_val, best_w, best_b = val_acc, w.data.copy(), b.data.copy()

    w.data, b.data = best_w, best_b
    preds = predictions()
    acc = float(np.mean(preds[test] == labels[test]))
    return ProbeResult(accuracy=acc, predictions=preds, test_nodes=test,
                       split_seed=split_seed, redraws=redraws)


def modularity(g: Graph, communities: np.ndarray) -> float:
    """Newman modularity of a node partition, times 100."""
    m = g.num_edges
    if m == 0:
        raise ValueError("modularity undefined for a graph with no edges")
    communities = np.asarray(communities)
    deg = g.degrees.astype(np.float64)
    two_m = 2.0 * m
    q = 0.0
    for c in np.unique(communities):
        mask = communities == c
        internal = np.count_nonzero(mask[g.edges[:, 0]] & mask[g.edges[:, 1]])
        vol = deg[mask].sum()
        q += internal / m - (vol / two_m) ** 2
    return float(q * 100.0)


def conductance(g: Graph, communities: np.ndarray) -> float:
    """Mean cluster conductance, times 100.

    Each cluster contributes cut / min(vol, complement vol); zero-volume
    clusters are skipped. If no cluster has a defined ratio (one cluster
    holds all edge volume) the result is 100.
    """
    if g.num_edges == 0:
        raise ValueError("conductance undefined for a graph with no edges")
    communities = np.asarray(communities)
    deg = g.degrees.astype(np.float64)
    two_m = 2.0 * g.num_edges
    ratios = []
    for c in np.unique(communities):
        mask = communities == c
        vol = deg[mask].sum()
        vol_rest = two_m - vol
        if vol == 0.0 or vol_rest == 0.0:
            continue
        cut = np.count_nonzero(mask[g.edges[:, 0]] != mask[g.edges[:, 1]])
        ratios.append(cut / min(vol, vol_rest))
    if not ratios:
        return 100.0
    return float(np.mean(ratios) * 100.0)


def clustering_quality(z: np.ndarray, g: Graph, num_clusters: int,
                       seed: int) -> tuple[float, float]:
    """(conductance, modularity) of k-means clusters of the embeddings."""
    if num_clusters < 2:
        raise ValueError(f"need at least 2 clusters, got {num_clusters}")
    assign, _ = kmeans(np.asarray(z, dtype=np.float64), num_clusters, seed)
    return conductance(g, assign), modularity(g, assign)


@dataclass
class EvalReport:
    rows: list[tuple[str, float, float, int]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, name: str, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        self.rows.append((name, float(values.mean()), float(values.std()),
                          int(values.size)))

    def value(self, name: str) -> float:
        for row in self.rows:
            if row[0] == name:
                return row[1]
        raise KeyError(name)

    def to_csv(self, path) -> None:
        lines = [f"# {k}={self.metadata[k]}" for k in sorted(self.metadata)]
        lines.append("metric,mean,std,repeats")
        for name, mean, std, repeats in self.rows:
            lines.append(f"{name},{mean!r},{std!r},{repeats}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def evaluate_embeddings(z: np.ndarray, g: Graph, *, fairness=((1, 0.2),),
                        probe_repeats: int = 10, seed: int = 0,
                        num_clusters: int | None = None,
                        config_hash: str | None = None) -> EvalReport:
    """Full evaluation battery over frozen embeddings.

    Runs the linear probe ``probe_repeats`` times on fresh splits, computes
    the fairness gaps on each split's test tail groups for every requested
    (r, q) setting, and clusters the embeddings once per repeat for
    conductance/modularity. Aggregates are mean/std in seed order.
    """
    if g.labels is None:
        raise ValueError("evaluation requires node labels")
    labels = g.labels
    num_classes = int(labels.max()) + 1
    if num_clusters is None:
        num_clusters = max(2, np.unique(labels).size)

    accs = []
    gaps: dict[tuple[int, float], tuple[list, list]] = {
        (r, q): ([], []) for r, q in fairness}
    conds, mods = [], []
    seeds = []
    for i in range(probe_repeats):
        probe_seed = derive_seed(seed, "probe", i)
        seeds.append(probe_seed)
        probe = linear_probe(z, labels, probe_seed)
        accs.append(probe.accuracy)
        for (r, q), (sp_list, eo_list) in gaps.items():
            groups = fairness_groups(g, probe.test_nodes, r, q)
            sp_list.append(delta_sp(probe.predictions, groups, num_classes))
            eo_list.append(delta_eo(probe.predictions, labels, groups, num_classes))
        cond, mod = clustering_quality(z, g, num_clusters,
                                       derive_seed(seed, "cluster", i))
        conds.append(cond)
        mods.append(mod)

    report = EvalReport()
    report.metadata.update({
        "repeats": probe_repeats,
        "split": "60/20/20",
        "n": g.n,
        "seeds": ";".join(str(s) for s in seeds),
    })
    if config_hash is not None:
        report.metadata["config_hash"] = config_hash
    report.add("accuracy", accs)
    for (r, q), (sp_list, eo_list) in gaps.items():
        tag = f"r{r}_q{int(round(q * 100))}"
        report.add(f"delta_sp_{tag}", sp_list)
        report.add(f"delta_eo_{tag}", eo_list)
    report.add("conductance", conds)
    report.add("modularity", mods)
    return report
