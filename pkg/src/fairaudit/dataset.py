"""Tabular credit data: schema, CSV loading, encoding, splitting, synthetic fixtures.

All types are immutable after construction and all operations are pure, so
datasets can be encoded and split concurrently without shared state.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSplit,
    EmptyTable,
    MissingColumn,
    NonBinaryTarget,
)

VALID_KINDS = ("numeric", "categorical")
VALID_TAGS = frozenset({"credit", "employment", "loan", "demographic"})
# "categorical" may appear in an exclusion set to drop every categorical
# feature (the numeric-only ablation); it is not a taggable feature tag.
CATEGORICAL_PSEUDO_TAG = "categorical"
MISSING_LEVEL = "__missing__"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class DatasetSchema:
    """Names the target, the protected attribute, and the feature columns.

    The protected attribute is binarized: rows whose cell equals
    ``privileged_value`` form the privileged group, all other values the
    protected group.
    """

    target_column: str
    positive_label: str
    protected_column: str
    privileged_value: str
    feature_columns: tuple[FeatureSpec, ...]

    def __post_init__(self) -> None:
        names = [f.name for f in self.feature_columns]
        if not names:
            raise ConfigError("schema needs at least one feature column")
        all_names = names + [self.target_column, self.protected_column]
        if len(set(all_names)) != len(all_names):
            raise ConfigError("schema column names must be unique")
        if self.target_column in names or self.protected_column in names:
            raise ConfigError("target and protected columns may not be features")
        for f in self.feature_columns:
            if f.kind not in VALID_KINDS:
                raise ConfigError(f"unknown feature kind {f.kind!r} for {f.name!r}")
            bad = set(f.tags) - VALID_TAGS
            if bad:
                raise ConfigError(f"unknown tags {sorted(bad)} on feature {f.name!r}")

    def to_dict(self) -> dict:
        return {
            "target_column": self.target_column,
            "positive_label": self.positive_label,
            "protected_column": self.protected_column,
            "privileged_value": self.privileged_value,
            "features": [
                {"name": f.name, "kind": f.kind, "tags": sorted(f.tags)}
                for f in self.feature_columns
            ],
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def schema_from_dict(raw: dict) -> DatasetSchema:
    try:
        features = tuple(
            FeatureSpec(f["name"], f["kind"], frozenset(f.get("tags", [])))
            for f in raw["features"]
        )
        return DatasetSchema(
            target_column=raw["target_column"],
            positive_label=raw["positive_label"],
            protected_column=raw["protected_column"],
            privileged_value=raw["privileged_value"],
            feature_columns=features,
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed schema config: {exc}") from exc


def load_schema(path: str) -> DatasetSchema:
    with open(path, encoding="utf-8") as fh:
        return schema_from_dict(json.load(fh))


@dataclass(frozen=True)
class DataTable:
    """Rectangular table of string cells with a header."""

    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    dropped_count: int = 0

    def __post_init__(self) -> None:
        width = len(self.columns)
        for r in self.rows:
            if len(r) != width:
                raise ConfigError("table is not rectangular")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[str]:
        idx = self.columns.index(name)
        return [r[idx] for r in self.rows]


def load_table(path: str, schema: DatasetSchema) -> DataTable:
    """Load a UTF-8, RFC-4180-style CSV with a header row.

    Rows lacking a target or protected value are dropped and counted in
    ``dropped_count``. Raises MissingColumn, NonBinaryTarget, or EmptyTable.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyTable(f"{path}: no header row") from None
        header = [h.strip() for h in header]
        raw_rows = [tuple(cell.strip() for cell in row) for row in reader if row]

    need = [schema.target_column, schema.protected_column] + [
        f.name for f in schema.feature_columns
    ]
    for name in need:
        if name not in header:
            raise MissingColumn(name)

    t_idx = header.index(schema.target_column)
    p_idx = header.index(schema.protected_column)
    kept, dropped = [], 0
    for row in raw_rows:
        if len(row) != len(header):
            dropped += 1
            continue
        if row[t_idx] == "" or row[p_idx] == "":
            dropped += 1
            continue
        kept.append(row)

    if not kept:
        raise EmptyTable(f"{path}: no usable rows")
    mapped = {cell == schema.positive_label for cell in (r[t_idx] for r in kept)}
    if len(mapped) != 2:
        raise NonBinaryTarget(
            f"target {schema.target_column!r} has one class after mapping "
            f"against positive label {schema.positive_label!r}"
        )
    return DataTable(tuple(header), tuple(kept), dropped)


@dataclass(frozen=True)
class NumericEncoding:
    mean: float
    std: float
    impute_mean: float
    constant: bool


@dataclass(frozen=True)
class CategoricalEncoding:
    levels: tuple[str, ...]


@dataclass(frozen=True)
class EncoderMap:
    """Per-feature encoding state: levels for categoricals, standardization
    stats for numerics, plus tags so encoded columns can be subset later."""

    features: dict[str, NumericEncoding | CategoricalEncoding]
    tags: dict[str, frozenset[str]]
    kinds: dict[str, str]


@dataclass(frozen=True)
class EncodedMatrix:
    feature_names: tuple[str, ...]  # one entry per encoded column
    column_sources: tuple[str, ...]  # source schema feature per encoded column
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray  # 1 = privileged, 0 = protected
    encoder: EncoderMap
    constant_columns: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = self.X.shape[0]
        if not (len(self.y) == len(self.groups) == n):
            raise ConfigError("matrix, labels, and groups must align")

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])


def _parse_numeric(cells: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Parse cells to floats; returns (values, present mask). Blank or
    unparseable cells count as missing."""
    vals = np.zeros(len(cells))
    present = np.zeros(len(cells), dtype=bool)
    for i, c in enumerate(cells):
        if c == "":
            continue
        try:
            vals[i] = float(c)
            present[i] = True
        except ValueError:
            continue
    return vals, present


def encode(
    table: DataTable,
    schema: DatasetSchema,
    feature_tags_excluded: frozenset[str] | set[str] = frozenset(),
    encoder: EncoderMap | None = None,
) -> EncodedMatrix:
    """Encode a table into a numeric matrix.

    Categorical features one-hot encode over lexicographically sorted observed
    levels; missing cells map to a dedicated level. Numeric features are
    standardized to mean 0 / stddev 1 with missing cells imputed by the mean;
    a constant column is emitted as all zeros and flagged rather than raised.

    When ``encoder`` is given (predict-time reuse), its levels and stats are
    applied instead of being re-fit; an unseen categorical level becomes an
    all-zero one-hot block.
    """
    excluded = frozenset(feature_tags_excluded)
    bad = excluded - VALID_TAGS - {CATEGORICAL_PSEUDO_TAG}
    if bad:
        raise ConfigError(f"unknown exclusion tags: {sorted(bad)}")

    y = np.array(
        [1 if c == schema.positive_label else 0 for c in table.column(schema.target_column)],
        dtype=np.int64,
    )
    groups = np.array(
        [1 if c == schema.privileged_value else 0 for c in table.column(schema.protected_column)],
        dtype=np.int64,
    )

    names: list[str] = []
    sources: list[str] = []
    blocks: list[np.ndarray] = []
    feat_enc: dict[str, NumericEncoding | CategoricalEncoding] = {}
    tags: dict[str, frozenset[str]] = {}
    kinds: dict[str, str] = {}
    constants: list[str] = []

    for feat in schema.feature_columns:
        if feat.tags & excluded:
            continue
        if feat.kind == "categorical" and CATEGORICAL_PSEUDO_TAG in excluded:
            continue
        tags[feat.name] = feat.tags
        kinds[feat.name] = feat.kind
        cells = table.column(feat.name)

        if feat.kind == "numeric":
            vals, present = _parse_numeric(cells)
            if encoder is not None:
                enc = encoder.features[feat.name]
                assert isinstance(enc, NumericEncoding)
            else:
                impute = float(vals[present].mean()) if present.any() else 0.0
                filled = np.where(present, vals, impute)
                mean = float(filled.mean())
                std = float(filled.std())
                enc = NumericEncoding(mean, std, impute, std == 0.0)
            filled = np.where(present, vals, enc.impute_mean)
            if enc.constant or enc.std == 0.0:
                col = np.zeros(len(filled))
                constants.append(feat.name)
            else:
                col = (filled - enc.mean) / enc.std
            names.append(feat.name)
            sources.append(feat.name)
            blocks.append(col.reshape(-1, 1))
            feat_enc[feat.name] = enc
        else:
            observed = [c if c != "" else MISSING_LEVEL for c in cells]
            if encoder is not None:
                enc = encoder.features[feat.name]
                assert isinstance(enc, CategoricalEncoding)
            else:
                enc = CategoricalEncoding(tuple(sorted(set(observed))))
            level_idx = {lvl: i for i, lvl in enumerate(enc.levels)}
            block = np.zeros((len(observed), len(enc.levels)))
            for r, lvl in enumerate(observed):
                j = level_idx.get(lvl)
                if j is not None:  # unseen level stays an all-zero block
                    block[r, j] = 1.0
            names.extend(f"{feat.name}={lvl}" for lvl in enc.levels)
            sources.extend(feat.name for _ in enc.levels)
            blocks.append(block)
            feat_enc[feat.name] = enc

    X = np.hstack(blocks) if blocks else np.zeros((table.n_rows, 0))
    return EncodedMatrix(
        feature_names=tuple(names),
        column_sources=tuple(sources),
        X=X,
        y=y,
        groups=groups,
        encoder=EncoderMap(feat_enc, tags, kinds),
        constant_columns=tuple(constants),
    )


def decode_categorical(matrix: EncodedMatrix, feature: str) -> list[str | None]:
    """Recover original categorical levels from one-hot columns (None when a
    row's block is all zeros, i.e. an unseen level)."""
    enc = matrix.encoder.features[feature]
    if not isinstance(enc, CategoricalEncoding):
        raise ConfigError(f"{feature!r} is not categorical")
    cols = [i for i, src in enumerate(matrix.column_sources) if src == feature]
    out: list[str | None] = []
    for row in matrix.X[:, cols]:
        hit = np.flatnonzero(row == 1.0)
        out.append(enc.levels[hit[0]] if hit.size else None)
    return out


def subset_by_tags(
    matrix: EncodedMatrix, feature_tags_excluded: frozenset[str] | set[str]
) -> EncodedMatrix:
    """Drop encoded columns whose source feature carries an excluded tag
    (or is categorical when the categorical pseudo-tag is excluded).
    Standardization stats are untouched, so post-split subsets keep their
    train-derived statistics."""
    excluded = frozenset(feature_tags_excluded)
    bad = excluded - VALID_TAGS - {CATEGORICAL_PSEUDO_TAG}
    if bad:
        raise ConfigError(f"unknown exclusion tags: {sorted(bad)}")
    keep_feat = {
        name
        for name in matrix.encoder.features
        if not (matrix.encoder.tags[name] & excluded)
        and not (matrix.encoder.kinds[name] == "categorical" and CATEGORICAL_PSEUDO_TAG in excluded)
    }
    keep_cols = [i for i, src in enumerate(matrix.column_sources) if src in keep_feat]
    return EncodedMatrix(
        feature_names=tuple(matrix.feature_names[i] for i in keep_cols),
        column_sources=tuple(matrix.column_sources[i] for i in keep_cols),
        X=matrix.X[:, keep_cols],
        y=matrix.y,
        groups=matrix.groups,
        encoder=EncoderMap(
            {k: v for k, v in matrix.encoder.features.items() if k in keep_feat},
            {k: v for k, v in matrix.encoder.tags.items() if k in keep_feat},
            {k: v for k, v in matrix.encoder.kinds.items() if k in keep_feat},
        ),
        constant_columns=tuple(c for c in matrix.constant_columns if c in keep_feat),
    )


@dataclass(frozen=True)
class SplitSpec:
    holdout_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self) -> None:
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigError("holdout_fraction must lie in (0, 1)")


def split(matrix: EncodedMatrix, spec: SplitSpec) -> tuple[EncodedMatrix, EncodedMatrix]:
    """Partition rows into (train, holdout), shuffled solely by the seed.

    Holdout size is round-half-up of fraction x n. Numeric columns are
    re-standardized with statistics computed from the training rows only;
    both sides share the resulting encoder. Raises DegenerateSplit when a
    side is empty or lacks a group or a label.
    """
    n = matrix.n_rows
    if n == 0:
        raise DegenerateSplit("empty matrix")
    n_hold = int(math.floor(spec.holdout_fraction * n + 0.5))
    if n_hold == 0 or n_hold == n:
        raise DegenerateSplit(f"holdout of {n_hold}/{n} rows leaves a side empty")

    perm = np.random.default_rng(spec.seed).permutation(n)
    hold_idx = np.sort(perm[:n_hold])
    train_idx = np.sort(perm[n_hold:])

    for name, idx in (("train", train_idx), ("holdout", hold_idx)):
        for what, vec in (("group", matrix.groups), ("label", matrix.y)):
            if len(np.unique(vec[idx])) < 2:
                raise DegenerateSplit(f"{name} side is missing a {what}")

    # Undo the whole-table standardization exactly, then re-standardize with
    # train-only stats so holdout metrics never leak holdout statistics.
    X = matrix.X.copy()
    new_feats = dict(matrix.encoder.features)
    constants = set(matrix.constant_columns)
    for j, src in enumerate(matrix.column_sources):
        enc = matrix.encoder.features[src]
        if not isinstance(enc, NumericEncoding):
            continue
        raw = X[:, j] * enc.std + enc.mean if not enc.constant else np.full(n, enc.mean)
        t_mean = float(raw[train_idx].mean())
        t_std = float(raw[train_idx].std())
        if t_std == 0.0:
            X[:, j] = 0.0
            constants.add(src)
        else:
            X[:, j] = (raw - t_mean) / t_std
        new_feats[src] = NumericEncoding(t_mean, t_std, t_mean, t_std == 0.0)

    encoder = EncoderMap(new_feats, matrix.encoder.tags, matrix.encoder.kinds)

    def take(idx: np.ndarray) -> EncodedMatrix:
        return EncodedMatrix(
            feature_names=matrix.feature_names,
            column_sources=matrix.column_sources,
            X=X[idx],
            y=matrix.y[idx],
            groups=matrix.groups[idx],
            encoder=encoder,
            constant_columns=tuple(sorted(constants)),
        )

    return take(train_idx), take(hold_idx)


SYNTH_HISTORY_EFFECT = {"excellent": 1.0, "good": 0.4, "fair": -0.3, "poor": -1.0}
_HISTORY_CUTS = (-0.8, 0.0, 0.8)  # latent score -> poor/fair/good/excellent


def _synth_draw(n: int, group_balance: float, signal_strength: float, bias_strength: float, seed: int):
    """Shared draw for synth_generate and synth_bayes_labels.

    The approval logit is a pure function of the features; bias_strength
    shifts several features by group (income, debt, employment, history),
    which gives the ground-truth logit a group-dependent offset that trained
    models can reproduce. With bias_strength 0 every feature, and hence the
    label distribution, is group-independent in expectation.
    """
    if n < 10:
        raise ConfigError("synthetic tables need at least 10 rows")
    rng = np.random.default_rng(seed)
    privileged = rng.random(n) < group_balance
    u = np.where(privileged, 0.5, -0.5)  # group direction
    b = bias_strength

    z_income = rng.normal(size=n) + 0.45 * b * u
    z_emp = rng.normal(size=n) + 0.20 * b * u
    z_debt = rng.normal(size=n) - 0.25 * b * u
    z_loan = rng.normal(size=n)
    z_age = rng.normal(size=n)
    h_latent = rng.normal(size=n) + 0.30 * b * u
    buckets = np.digitize(h_latent, _HISTORY_CUTS)
    level_by_bucket = np.array(["poor", "fair", "good", "excellent"])
    hist = level_by_bucket[buckets]
    hist_eff = np.array([SYNTH_HISTORY_EFFECT[h] for h in hist])

    core = 0.9 * z_income - 1.1 * z_debt + 0.5 * z_emp - 0.4 * z_loan + 0.15 * z_age + hist_eff
    logit = signal_strength * core / 1.5
    p = 1.0 / (1.0 + np.exp(-logit))
    label = rng.random(n) < p
    return {
        "privileged": privileged,
        "z_income": z_income,
        "z_emp": z_emp,
        "z_debt": z_debt,
        "z_loan": z_loan,
        "z_age": z_age,
        "hist": hist,
        "logit": logit,
        "label": label,
    }


def synth_schema() -> DatasetSchema:
    """Schema matching synth_generate output."""
    return DatasetSchema(
        target_column="approved",
        positive_label="yes",
        protected_column="sex",
        privileged_value="male",
        feature_columns=(
            FeatureSpec("income", "numeric", frozenset({"employment"})),
            FeatureSpec("years_employed", "numeric", frozenset({"employment"})),
            FeatureSpec("debt_ratio", "numeric", frozenset({"credit"})),
            FeatureSpec("credit_history", "categorical", frozenset({"credit"})),
            FeatureSpec("loan_amount", "numeric", frozenset({"loan"})),
            FeatureSpec("age", "numeric", frozenset({"demographic"})),
        ),
    )


def synth_generate(
    n: int,
    group_balance: float = 0.5,
    signal_strength: float = 1.5,
    bias_strength: float = 0.0,
    seed: int = 0,
) -> DataTable:
    """Generate a synthetic lending table with a logistic ground truth.

    Deterministic for a fixed seed (byte-identical cells). bias_strength
    controls a group-dependent offset of the approval logit, realized through
    proxy features, so both label and trained-model disparities scale with it;
    at 0 the label distribution is group-independent in expectation.
    """
    d = _synth_draw(n, group_balance, signal_strength, bias_strength, seed)
    income = 52000 + 14000 * d["z_income"]
    years = np.clip(6 + 4 * d["z_emp"], 0, None)
    debt = np.clip(0.35 + 0.15 * d["z_debt"], 0.01, 0.99)
    loan = np.clip(180000 + 60000 * d["z_loan"], 5000, None)
    age = np.clip(41 + 12 * d["z_age"], 18, 90)

    rows = tuple(
        (
            f"{income[i]:.2f}",
            f"{years[i]:.1f}",
            f"{debt[i]:.4f}",
            d["hist"][i],
            f"{loan[i]:.2f}",
            f"{age[i]:.1f}",
            "male" if d["privileged"][i] else "female",
            "yes" if d["label"][i] else "no",
        )
        for i in range(n)
    )
    return DataTable(
        (
            "income",
            "years_employed",
            "debt_ratio",
            "credit_history",
            "loan_amount",
            "age",
            "sex",
            "approved",
        ),
        rows,
    )


def synth_bayes_labels(
    n: int,
    group_balance: float = 0.5,
    signal_strength: float = 1.5,
    bias_strength: float = 0.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Bayes-optimal labels (p >= 0.5) and group indicators for the same draw
    synth_generate would produce; used by generation-time disparity checks."""
    d = _synth_draw(n, group_balance, signal_strength, bias_strength, seed)
    return (d["logit"] >= 0.0).astype(np.int64), d["privileged"].astype(np.int64)


def write_csv(table: DataTable, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        writer.writerows(table.rows)
