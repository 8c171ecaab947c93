"""From-scratch binary classifiers and fairness interventions.

Every family trains with a fixed iteration budget and deterministic
tie-breaking, so identical (spec, data, weights) always reproduce identical
parameters and predictions regardless of run or thread schedule. Models score
in [0, 1] and predict by score >= threshold, ties counting as positive.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .dataset import EncodedMatrix
from .errors import ColumnMismatch, ConfigError, EmptyCell, SingleClassTrainSet

FAMILIES = ("logistic_regression", "decision_tree", "bagged_forest", "linear_svm")
INTERVENTION_KINDS = ("none", "group_threshold_postprocess", "reweigh")

# family -> {hyperparam: (default, low, high)}
HYPERPARAM_RANGES: dict[str, dict[str, tuple[float, float, float]]] = {
    "logistic_regression": {
        "learning_rate": (0.1, 1e-6, 10.0),
        "iterations": (500, 1, 100_000),
        "l2": (1e-4, 0.0, 10.0),
    },
    "decision_tree": {
        "max_depth": (5, 1, 64),
    },
    "bagged_forest": {
        "tree_count": (25, 1, 1000),
        "max_depth": (5, 1, 64),
    },
    "linear_svm": {
        "learning_rate": (0.1, 1e-6, 10.0),
        "iterations": (500, 1, 100_000),
        "l2": (1e-3, 0.0, 10.0),  # hinge margin weight
    },
}


@dataclass(frozen=True)
class Intervention:
    kind: str = "none"
    param: float | None = None  # target disparity (postprocess) or strength (reweigh)

    def __post_init__(self) -> None:
        if self.kind not in INTERVENTION_KINDS:
            raise ConfigError(f"unknown intervention {self.kind!r}")
        if self.kind == "none" and self.param is not None:
            raise ConfigError("intervention 'none' takes no parameter")
        if self.kind == "group_threshold_postprocess":
            if self.param is None or self.param < 0:
                raise ConfigError("postprocess target disparity must be >= 0")
        if self.kind == "reweigh":
            if self.param is None or not 0.0 <= self.param <= 1.0:
                raise ConfigError("reweigh strength must lie in [0, 1]")

    def canonical(self) -> str:
        if self.kind == "none":
            return "none"
        return f"{self.kind}({self.param:g})"


@dataclass(frozen=True)
class ModelSpec:
    family: str
    exclude_tags: frozenset[str] = frozenset()
    hyperparams: tuple[tuple[str, float], ...] = ()
    intervention: Intervention = Intervention()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}")
        ranges = HYPERPARAM_RANGES[self.family]
        for key, value in self.hyperparams:
            if key not in ranges:
                raise ConfigError(f"{self.family} has no hyperparameter {key!r}")
            _, lo, hi = ranges[key]
            if not lo <= value <= hi:
                raise ConfigError(f"{key}={value} outside legal range [{lo}, {hi}]")

    def hyper(self, key: str) -> float:
        for k, v in self.hyperparams:
            if k == key:
                return v
        return HYPERPARAM_RANGES[self.family][key][0]

    def canonical_id(self) -> str:
        hp = ",".join(f"{k}={self.hyper(k):g}" for k in sorted(HYPERPARAM_RANGES[self.family]))
        ex = ",".join(sorted(self.exclude_tags))
        return f"{self.family}|ex={ex}|hp={hp}|iv={self.intervention.canonical()}|seed={self.seed}"


def make_spec(
    family: str,
    exclude_tags: frozenset[str] | set[str] = frozenset(),
    hyperparams: dict[str, float] | None = None,
    intervention: Intervention = Intervention(),
    seed: int = 0,
) -> ModelSpec:
    items = tuple(sorted((hyperparams or {}).items()))
    return ModelSpec(family, frozenset(exclude_tags), items, intervention, seed)


@dataclass(frozen=True)
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    score: float = 0.0  # positive-weight fraction at this node

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    column_names: tuple[str, ...]
    params: dict = field(repr=False)
    threshold: float = 0.5
    group_thresholds: tuple[float, float] | None = None  # (privileged, protected)
    train_scores: np.ndarray | None = field(default=None, repr=False, compare=False)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _norm_weights(n: int, weights: np.ndarray | None) -> np.ndarray:
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if len(w) != n or np.any(w <= 0):
        raise ConfigError("weights must be strictly positive, one per row")
    return w / w.sum()


def _train_logistic(X: np.ndarray, y: np.ndarray, wn: np.ndarray, spec: ModelSpec) -> dict:
    lr = spec.hyper("learning_rate")
    iters = int(spec.hyper("iterations"))
    l2 = spec.hyper("l2")
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(iters):
        err = (_sigmoid(X @ w + b) - y) * wn
        w -= lr * (X.T @ err + 2.0 * l2 * w)
        b -= lr * float(err.sum())
    return {"weights": w, "bias": b}


def _train_svm(X: np.ndarray, y: np.ndarray, wn: np.ndarray, spec: ModelSpec) -> dict:
    lr = spec.hyper("learning_rate")
    iters = int(spec.hyper("iterations"))
    l2 = spec.hyper("l2")
    ypm = 2.0 * y - 1.0
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(iters):
        margin = ypm * (X @ w + b)
        active = (margin < 1.0) * wn * ypm
        w -= lr * (2.0 * l2 * w - X.T @ active)
        b -= lr * float(-active.sum())
    return {"weights": w, "bias": b}


def _best_split(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, idx: np.ndarray
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, weighted gini) for rows idx, or None.
    Scans features in ascending index order and thresholds in ascending value
    order, replacing only on strict improvement, which fixes tie-breaking."""
    best: tuple[int, float, float] | None = None
    w_idx = w[idx]
    wy_idx = w_idx * y[idx]
    total_w = w_idx.sum()
    total_wy = wy_idx.sum()
    for j in range(X.shape[1]):
        v = X[idx, j]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cw = np.cumsum(w_idx[order])
        cwy = np.cumsum(wy_idx[order])
        cut = np.flatnonzero(sv[:-1] < sv[1:])
        if cut.size == 0:
            continue
        wl = cw[cut]
        wyl = cwy[cut]
        wr = total_w - wl
        wyr = total_wy - wyl
        gini_l = wl - (wyl**2 + (wl - wyl) ** 2) / wl
        gini_r = wr - (wyr**2 + (wr - wyr) ** 2) / wr
        cost = (gini_l + gini_r) / total_w
        k = int(np.argmin(cost))
        if best is None or cost[k] < best[2]:
            best = (j, float((sv[cut[k]] + sv[cut[k] + 1]) / 2.0), float(cost[k]))
    return best


def _grow_tree(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, idx: np.ndarray, depth: int, nodes: list[TreeNode]
) -> int:
    w_idx = w[idx]
    total = w_idx.sum()
    score = float((w_idx * y[idx]).sum() / total) if total > 0 else 0.5
    parent_gini = 1.0 - score**2 - (1.0 - score) ** 2
    node_id = len(nodes)
    nodes.append(TreeNode(score=score))
    if depth == 0 or parent_gini == 0.0 or idx.size < 2:
        return node_id
    # split whenever the node is impure and any valid split exists, even at
    # zero Gini gain; deeper levels can still separate (e.g. XOR patterns)
    found = _best_split(X, y, w, idx)
    if found is None:
        return node_id
    j, thr, _ = found
    left_mask = X[idx, j] < thr
    left = _grow_tree(X, y, w, idx[left_mask], depth - 1, nodes)
    right = _grow_tree(X, y, w, idx[~left_mask], depth - 1, nodes)
    nodes[node_id] = TreeNode(feature=j, threshold=thr, left=left, right=right, score=score)
    return node_id


def _tree_scores(nodes: list[TreeNode], X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        node = nodes[0]
        while not node.is_leaf:
            node = nodes[node.left] if row[node.feature] < node.threshold else nodes[node.right]
        out[i] = node.score
    return out


def _train_tree(X: np.ndarray, y: np.ndarray, wn: np.ndarray, spec: ModelSpec) -> dict:
    nodes: list[TreeNode] = []
    _grow_tree(X, y, wn, np.arange(X.shape[0]), int(spec.hyper("max_depth")), nodes)
    return {"nodes": nodes}


def _train_forest(X: np.ndarray, y: np.ndarray, wn: np.ndarray, spec: ModelSpec) -> dict:
    rng = np.random.default_rng(spec.seed)
    depth = int(spec.hyper("max_depth"))
    trees = []
    n = X.shape[0]
    for _ in range(int(spec.hyper("tree_count"))):
        boot = rng.integers(0, n, size=n)
        nodes: list[TreeNode] = []
        wb = wn[boot]
        _grow_tree(X[boot], y[boot], wb / wb.sum(), np.arange(n), depth, nodes)
        trees.append(nodes)
    return {"trees": trees}


_TRAINERS = {
    "logistic_regression": _train_logistic,
    "decision_tree": _train_tree,
    "bagged_forest": _train_forest,
    "linear_svm": _train_svm,
}


def train(spec: ModelSpec, train_matrix: EncodedMatrix, weights: np.ndarray | None = None) -> TrainedModel:
    """Train one model; raises SingleClassTrainSet when only one label is
    present. Non-convergence is not an error: budgets are fixed."""
    y = train_matrix.y
    if len(np.unique(y)) < 2:
        raise SingleClassTrainSet("training rows contain a single label")
    wn = _norm_weights(train_matrix.n_rows, weights)
    params = _TRAINERS[spec.family](train_matrix.X, y.astype(float), wn, spec)
    model = TrainedModel(spec=spec, column_names=train_matrix.feature_names, params=params)
    scores = score(model, train_matrix)
    return dataclasses.replace(model, train_scores=scores)


def score(model: TrainedModel, matrix: EncodedMatrix) -> np.ndarray:
    """Per-row scores in [0, 1]: sigmoid of the linear margin for logistic
    and SVM models, leaf positive fraction for trees, positive-vote fraction
    for forests."""
    if matrix.feature_names != model.column_names:
        raise ColumnMismatch(
            f"matrix has {len(matrix.feature_names)} columns not matching the "
            f"{len(model.column_names)} the model was trained on"
        )
    fam = model.spec.family
    if fam in ("logistic_regression", "linear_svm"):
        return _sigmoid(matrix.X @ model.params["weights"] + model.params["bias"])
    if fam == "decision_tree":
        return _tree_scores(model.params["nodes"], matrix.X)
    votes = np.stack(
        [_tree_scores(nodes, matrix.X) >= 0.5 for nodes in model.params["trees"]]
    )
    return votes.mean(axis=0)


def predict(
    model: TrainedModel, matrix: EncodedMatrix, groups: np.ndarray | None = None
) -> np.ndarray:
    """0/1 predictions: score >= applicable threshold (ties positive), using
    per-group thresholds when the model carries them."""
    s = score(model, matrix)
    grp = matrix.groups if groups is None else np.asarray(groups)
    if model.group_thresholds is None:
        return (s >= model.threshold).astype(np.int64)
    t_priv, t_prot = model.group_thresholds
    thr = np.where(grp == 1, t_priv, t_prot)
    return (s >= thr).astype(np.int64)


def _rates_by_threshold(scores: np.ndarray, y: np.ndarray, cands: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each candidate threshold: selection rate and count of correct
    predictions within this score subset (ties predict positive)."""
    s_sorted = np.sort(scores)
    pos_sorted = np.sort(scores[y == 1])
    neg_sorted = np.sort(scores[y == 0])
    n = len(scores)
    ge = n - np.searchsorted(s_sorted, cands, side="left")
    pos_ge = len(pos_sorted) - np.searchsorted(pos_sorted, cands, side="left")
    neg_lt = np.searchsorted(neg_sorted, cands, side="left")
    return ge / n, pos_ge + neg_lt


def postprocess_group_thresholds(
    model: TrainedModel, train_matrix: EncodedMatrix, target_disparity: float = 0.0
) -> TrainedModel:
    """Pick per-group thresholds from the observed train scores.

    Minimizes |train disparity - target_disparity|; ties broken by higher
    train accuracy, then by higher privileged, then higher protected
    threshold. Scores are untouched; only thresholds change.
    """
    if target_disparity < 0:
        raise ConfigError("target disparity must be >= 0")
    scores = score(model, train_matrix)
    y, grp = train_matrix.y, train_matrix.groups
    cands = np.unique(scores)

    rate_p, correct_p = _rates_by_threshold(scores[grp == 1], y[grp == 1], cands)
    rate_u, correct_u = _rates_by_threshold(scores[grp == 0], y[grp == 0], cands)

    disp = rate_p[:, None] - rate_u[None, :]
    objective = np.abs(disp - target_disparity)
    acc = correct_p[:, None] + correct_u[None, :]

    best = np.flatnonzero(objective == objective.min())
    best = best[acc.ravel()[best] == acc.ravel()[best].max()]
    # argmax over (t_priv, t_prot) lexicographically: candidate order is
    # ascending, so the last surviving flat index has the highest pair
    i, j = np.unravel_index(best[-1], objective.shape)
    return dataclasses.replace(
        model, group_thresholds=(float(cands[i]), float(cands[j]))
    )


def reweigh(train_matrix: EncodedMatrix, strength: float) -> np.ndarray:
    """Per-row weights interpolating between uniform (strength 0) and the
    independence-restoring weight n_g n_y / (n n_gy) per (group, label) cell."""
    if not 0.0 <= strength <= 1.0:
        raise ConfigError("reweigh strength must lie in [0, 1]")
    y, grp = train_matrix.y, train_matrix.groups
    n = len(y)
    base = np.empty(n)
    for g in (0, 1):
        for lab in (0, 1):
            cell = (grp == g) & (y == lab)
            n_cell = int(cell.sum())
            if n_cell == 0:
                raise EmptyCell(g, lab)
            n_g = int((grp == g).sum())
            n_y = int((y == lab).sum())
            base[cell] = (n_g * n_y) / (n * n_cell)
    return (1.0 - strength) + strength * base


def serialize_params(model: TrainedModel) -> dict:
    """Family-specific parameter layout for report provenance."""
    fam = model.spec.family
    if fam in ("logistic_regression", "linear_svm"):
        return {
            "weights": [float(v) for v in model.params["weights"]],
            "bias": float(model.params["bias"]),
        }

    def nodes_out(nodes: list[TreeNode]) -> list[dict]:
        return [
            {
                "feature": n.feature,
                "threshold": float(n.threshold),
                "left": n.left,
                "right": n.right,
                "score": float(n.score),
            }
            for n in nodes
        ]

    if fam == "decision_tree":
        return {"nodes": nodes_out(model.params["nodes"])}
    return {"trees": [nodes_out(t) for t in model.params["trees"]]}
