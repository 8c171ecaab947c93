"""Model-search protocol: train a configuration grid, retain the top slice of
each search, pool the survivors, and designate a baseline.

Retention keeps the ceil(retention x n) most accurate models of each search
on the shared holdout; the pooled union then drops anything below the global
accuracy floor (relative 10% drop by default). Merging is an order-insensitive
union keyed by canonical spec id, so pool content does not depend on the
schedule used to train specs.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .canonical import round_sig
from .dataset import EncodedMatrix, subset_by_tags
from .errors import (
    AuditError,
    ConfigError,
    EmptyPool,
    NoOffFrontierCandidate,
    UnknownId,
)
from .learners import (
    Intervention,
    ModelSpec,
    make_spec,
    postprocess_group_thresholds,
    predict,
    reweigh,
    serialize_params,
    train,
)
from .metrics import accuracy, accuracy_ci, disparity_stats, group_rates, pareto_frontier


@dataclass(frozen=True)
class ConfigSearch:
    """One search: a family and featureset with grids over hyperparameters
    and interventions. Cross-product semantics; spec seeds are seed_base plus
    the enumeration index, independent of execution order."""

    name: str
    family: str
    exclude_tags: frozenset[str] = frozenset()
    hyper_grid: tuple[tuple[str, tuple[float, ...]], ...] = ()
    interventions: tuple[Intervention, ...] = (Intervention(),)
    seed_base: int = 0

    def __post_init__(self) -> None:
        if not self.interventions:
            raise ConfigError(f"search {self.name!r}: intervention grid is empty")
        for key, values in self.hyper_grid:
            if not values:
                raise ConfigError(f"search {self.name!r}: empty grid for {key!r}")

    def specs(self) -> list[ModelSpec]:
        keys = [k for k, _ in self.hyper_grid]
        value_lists = [v for _, v in self.hyper_grid]
        out = []
        idx = 0
        for combo in itertools.product(*value_lists) if keys else [()]:
            hp = dict(zip(keys, combo))
            for iv in self.interventions:
                out.append(
                    make_spec(self.family, self.exclude_tags, hp, iv, self.seed_base + idx)
                )
                idx += 1
        return out


@dataclass(frozen=True)
class SearchPlan:
    searches: tuple[ConfigSearch, ...]
    retention: float = 0.05
    drop_tolerance: float = 0.10
    drop_mode: str = "relative"  # or "absolute"

    def __post_init__(self) -> None:
        if not 0.0 < self.retention <= 1.0:
            raise ConfigError("retention must lie in (0, 1]")
        if not 0.0 <= self.drop_tolerance < 1.0:
            raise ConfigError("drop tolerance must lie in [0, 1)")
        if self.drop_mode not in ("relative", "absolute"):
            raise ConfigError("drop_mode must be 'relative' or 'absolute'")


@dataclass(frozen=True)
class ModelRecord:
    """One candidate model with its holdout metrics; all floats are stored at
    6 significant digits so serialized pools re-evaluate identically."""

    id: str
    family: str
    exclude_tags: tuple[str, ...]
    hyperparams: dict[str, float]
    intervention_kind: str
    intervention_param: float | None
    seed: int
    accuracy: float
    privileged_rate: float
    protected_rate: float
    disparity: float
    air: float | None
    z: float
    p: float
    ci_low: float
    ci_high: float
    on_frontier: bool = False
    label: str | None = None
    prediction_bits: str = ""
    params: dict = field(default_factory=dict, repr=False)

    @property
    def intervened(self) -> bool:
        return self.intervention_kind != "none"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "family": self.family,
            "exclude_tags": list(self.exclude_tags),
            "hyperparams": dict(self.hyperparams),
            "intervention_kind": self.intervention_kind,
            "intervention_param": self.intervention_param,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "privileged_rate": self.privileged_rate,
            "protected_rate": self.protected_rate,
            "disparity": self.disparity,
            "air": self.air,
            "z": self.z,
            "p": self.p,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "on_frontier": self.on_frontier,
            "label": self.label,
            "prediction_bits": self.prediction_bits,
            "params": self.params,
        }


def record_from_dict(raw: dict) -> ModelRecord:
    return ModelRecord(
        id=raw["id"],
        family=raw["family"],
        exclude_tags=tuple(raw["exclude_tags"]),
        hyperparams=dict(raw["hyperparams"]),
        intervention_kind=raw["intervention_kind"],
        intervention_param=raw["intervention_param"],
        seed=raw["seed"],
        accuracy=raw["accuracy"],
        privileged_rate=raw["privileged_rate"],
        protected_rate=raw["protected_rate"],
        disparity=raw["disparity"],
        air=raw["air"],
        z=raw["z"],
        p=raw["p"],
        ci_low=raw["ci_low"],
        ci_high=raw["ci_high"],
        on_frontier=raw["on_frontier"],
        label=raw.get("label"),
        prediction_bits=raw.get("prediction_bits", ""),
        params=raw.get("params", {}),
    )


@dataclass(frozen=True)
class CandidatePool:
    fingerprint: dict
    records: tuple[ModelRecord, ...]
    provenance: tuple[dict, ...]
    accuracy_floor: float
    baseline_id: str | None = None
    holdout_labels: tuple[int, ...] = ()
    holdout_groups: tuple[int, ...] = ()

    def record(self, model_id: str) -> ModelRecord:
        for r in self.records:
            if r.id == model_id:
                return r
        raise UnknownId(model_id)

    @property
    def baseline(self) -> ModelRecord:
        if self.baseline_id is None:
            raise AuditError("pool has no designated baseline")
        return self.record(self.baseline_id)

    def to_dict(self) -> dict:
        return {
            "fingerprint": dict(self.fingerprint),
            "records": [r.to_dict() for r in self.records],
            "provenance": [dict(p) for p in self.provenance],
            "accuracy_floor": self.accuracy_floor,
            "baseline_id": self.baseline_id,
            "holdout_labels": list(self.holdout_labels),
            "holdout_groups": list(self.holdout_groups),
        }


def pool_from_dict(raw: dict) -> CandidatePool:
    return CandidatePool(
        fingerprint=dict(raw["fingerprint"]),
        records=tuple(record_from_dict(r) for r in raw["records"]),
        provenance=tuple(dict(p) for p in raw["provenance"]),
        accuracy_floor=raw["accuracy_floor"],
        baseline_id=raw.get("baseline_id"),
        holdout_labels=tuple(raw.get("holdout_labels", ())),
        holdout_groups=tuple(raw.get("holdout_groups", ())),
    )


def build_record(
    spec: ModelSpec,
    predictions: np.ndarray,
    holdout: EncodedMatrix,
    params: dict,
) -> ModelRecord:
    acc = accuracy(predictions, holdout.y)
    rates = group_rates(predictions, holdout.groups)
    stats = disparity_stats(rates)
    lo, hi = accuracy_ci(round_sig(acc), holdout.n_rows)
    return ModelRecord(
        id=spec.canonical_id(),
        family=spec.family,
        exclude_tags=tuple(sorted(spec.exclude_tags)),
        hyperparams={k: v for k, v in spec.hyperparams},
        intervention_kind=spec.intervention.kind,
        intervention_param=spec.intervention.param,
        seed=spec.seed,
        accuracy=round_sig(acc),
        privileged_rate=round_sig(rates.privileged_rate),
        protected_rate=round_sig(rates.protected_rate),
        disparity=round_sig(stats.disparity),
        air=None if stats.air is None else round_sig(stats.air),
        z=round_sig(stats.z),
        p=round_sig(stats.p),
        ci_low=round_sig(lo),
        ci_high=round_sig(hi),
        prediction_bits="".join("1" if v else "0" for v in predictions),
        params=params,
    )


def train_and_evaluate(
    spec: ModelSpec, train_matrix: EncodedMatrix, holdout_matrix: EncodedMatrix
) -> ModelRecord:
    """Train one spec (applying its intervention) and measure it on the
    shared holdout."""
    weights = None
    if spec.intervention.kind == "reweigh":
        weights = reweigh(train_matrix, spec.intervention.param)
    model = train(spec, train_matrix, weights)
    if spec.intervention.kind == "group_threshold_postprocess":
        model = postprocess_group_thresholds(model, train_matrix, spec.intervention.param)
    preds = predict(model, holdout_matrix)
    return build_record(spec, preds, holdout_matrix, serialize_params(model))


def _retention_order(r: ModelRecord) -> tuple:
    return (-r.accuracy, r.disparity, r.id)


def run_search(
    plan: SearchPlan,
    train_matrix: EncodedMatrix,
    holdout_matrix: EncodedMatrix,
    fingerprint: dict | None = None,
    map_fn: Callable[..., Iterable] = map,
) -> CandidatePool:
    """Execute every configured search and assemble the candidate pool.

    ``map_fn`` may be any map-equivalent (e.g. a process pool's); results are
    merged into an id-keyed union and sorted canonically, so the outcome is
    schedule-independent. Training failures are re-raised annotated with the
    failing spec id.
    """
    if not plan.searches:
        raise EmptyPool("plan has no searches")

    subset_cache: dict[frozenset[str], tuple[EncodedMatrix, EncodedMatrix]] = {}

    def matrices_for(tags: frozenset[str]) -> tuple[EncodedMatrix, EncodedMatrix]:
        if tags not in subset_cache:
            subset_cache[tags] = (
                subset_by_tags(train_matrix, tags),
                subset_by_tags(holdout_matrix, tags),
            )
        return subset_cache[tags]

    jobs: list[tuple[str, ModelSpec]] = []
    for search in plan.searches:
        for spec in search.specs():
            jobs.append((search.name, spec))
    if not jobs:
        raise EmptyPool("plan trains no models")

    def run_one(job: tuple[str, ModelSpec]) -> tuple[str, ModelRecord]:
        search_name, spec = job
        sub_train, sub_holdout = matrices_for(spec.exclude_tags)
        try:
            return search_name, train_and_evaluate(spec, sub_train, sub_holdout)
        except AuditError as exc:
            raise AuditError(f"training {spec.canonical_id()} failed: {exc}") from exc

    by_search: dict[str, list[ModelRecord]] = {s.name: [] for s in plan.searches}
    for search_name, record in map_fn(run_one, jobs):
        by_search[search_name].append(record)

    union: dict[str, ModelRecord] = {}
    provenance = []
    for search in plan.searches:
        trained = sorted(by_search[search.name], key=_retention_order)
        keep = math.ceil(plan.retention * len(trained))
        for record in trained[:keep]:
            union.setdefault(record.id, record)
        provenance.append({"search": search.name, "kept": keep, "total": len(trained)})

    max_acc = max(r.accuracy for r in union.values())
    if plan.drop_mode == "relative":
        floor = round_sig((1.0 - plan.drop_tolerance) * max_acc)
    else:
        floor = round_sig(max_acc - plan.drop_tolerance)
    survivors = [r for r in union.values() if r.accuracy >= floor]

    flags = pareto_frontier([(r.accuracy, r.disparity) for r in survivors])
    flagged = sorted(
        (dataclasses.replace(r, on_frontier=f) for r, f in zip(survivors, flags)),
        key=lambda r: r.id,
    )

    fp = dict(fingerprint or {})
    fp.setdefault("n_train", train_matrix.n_rows)
    fp.setdefault("n_holdout", holdout_matrix.n_rows)
    return CandidatePool(
        fingerprint=fp,
        records=tuple(flagged),
        provenance=tuple(provenance),
        accuracy_floor=floor,
        holdout_labels=tuple(int(v) for v in holdout_matrix.y),
        holdout_groups=tuple(int(v) for v in holdout_matrix.groups),
    )


@dataclass(frozen=True)
class BaselinePolicy:
    kind: str  # max_accuracy | specified_id | off_frontier_near
    model_id: str | None = None
    eps: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("max_accuracy", "specified_id", "off_frontier_near"):
            raise ConfigError(f"unknown baseline policy {self.kind!r}")
        if self.kind == "specified_id" and not self.model_id:
            raise ConfigError("specified_id policy needs a model id")
        if self.kind == "off_frontier_near" and (self.eps is None or self.eps < 0):
            raise ConfigError("off_frontier_near policy needs eps >= 0")

    def canonical(self) -> str:
        if self.kind == "max_accuracy":
            return "max-accuracy"
        if self.kind == "specified_id":
            return f"id:{self.model_id}"
        return f"off-frontier:{self.eps:g}"


def parse_baseline_policy(text: str) -> BaselinePolicy:
    if text == "max-accuracy":
        return BaselinePolicy("max_accuracy")
    if text.startswith("id:"):
        return BaselinePolicy("specified_id", model_id=text[3:])
    if text.startswith("off-frontier:"):
        try:
            return BaselinePolicy("off_frontier_near", eps=float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ConfigError(f"bad off-frontier epsilon in {text!r}") from exc
    raise ConfigError(
        f"bad baseline policy {text!r}; use max-accuracy, id:<id>, or off-frontier:<eps>"
    )


def _pessimistic_order(r: ModelRecord) -> tuple:
    # ties favor higher disparity so a doctrine-triggering baseline is never
    # accidentally avoided by tie-breaking
    return (-r.accuracy, -r.disparity, r.id)


def select_baseline(pool: CandidatePool, policy: BaselinePolicy) -> str:
    if not pool.records:
        raise EmptyPool("cannot pick a baseline from an empty pool")
    if policy.kind == "specified_id":
        return pool.record(policy.model_id).id
    if policy.kind == "max_accuracy":
        return min(pool.records, key=_pessimistic_order).id
    max_acc = max(r.accuracy for r in pool.records)
    candidates = [
        r for r in pool.records if not r.on_frontier and r.accuracy >= max_acc - policy.eps
    ]
    if not candidates:
        raise NoOffFrontierCandidate(policy.eps)
    return min(candidates, key=_pessimistic_order).id


def _intervention_from_dict(raw: dict) -> Intervention:
    kind = raw.get("kind", "none")
    if kind == "none":
        return Intervention()
    if kind == "reweigh":
        return Intervention("reweigh", raw["strength"])
    if kind == "group_threshold_postprocess":
        return Intervention("group_threshold_postprocess", raw["target_disparity"])
    raise ConfigError(f"unknown intervention kind {kind!r}")


def plan_from_dict(raw: dict) -> SearchPlan:
    """Parse the documented plan config: per-hyperparameter value lists with
    cross-product semantics, plus an intervention grid per search."""
    try:
        searches = []
        for i, s in enumerate(raw["searches"]):
            searches.append(
                ConfigSearch(
                    name=s.get("name", f"search-{i:03d}"),
                    family=s["family"],
                    exclude_tags=frozenset(s.get("exclude_tags", [])),
                    hyper_grid=tuple(
                        (k, tuple(v)) for k, v in sorted(s.get("hyperparams", {}).items())
                    ),
                    interventions=tuple(
                        _intervention_from_dict(iv)
                        for iv in s.get("interventions", [{"kind": "none"}])
                    ),
                    seed_base=s.get("seed_base", 0),
                )
            )
        return SearchPlan(
            searches=tuple(searches),
            retention=raw.get("retention", 0.05),
            drop_tolerance=raw.get("drop_tolerance", 0.10),
            drop_mode=raw.get("drop_mode", "relative"),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed plan config: {exc}") from exc


def load_plan(path: str) -> SearchPlan:
    with open(path, encoding="utf-8") as fh:
        return plan_from_dict(json.load(fh))
