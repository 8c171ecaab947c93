from __future__ import annotations

import numpy as np
import pytest

from fairaudit.canonical import round_sig
from fairaudit.dataset import (
    EncodedMatrix,
    EncoderMap,
    NumericEncoding,
    SplitSpec,
    encode,
    split,
    synth_generate,
    synth_schema,
)
from fairaudit.metrics import accuracy_ci
from fairaudit.search import ModelRecord


def make_matrix(X: np.ndarray, y: np.ndarray, groups: np.ndarray) -> EncodedMatrix:
    """Bare EncodedMatrix around raw arrays, for learner-level tests."""
    X = np.asarray(X, dtype=float)
    names = tuple(f"f{i}" for i in range(X.shape[1]))
    enc = EncoderMap(
        {n: NumericEncoding(0.0, 1.0, 0.0, False) for n in names},
        {n: frozenset() for n in names},
        {n: "numeric" for n in names},
    )
    return EncodedMatrix(
        feature_names=names,
        column_sources=names,
        X=X,
        y=np.asarray(y, dtype=np.int64),
        groups=np.asarray(groups, dtype=np.int64),
        encoder=enc,
    )


def make_record(
    model_id: str,
    acc: float,
    disparity: float,
    p: float = 0.001,
    n_holdout: int = 1000,
    intervention: str = "none",
    prediction_bits: str = "",
    air: float | None = "auto",
) -> ModelRecord:
    """Hand-built pool record with rates consistent with the disparity."""
    rate_p = 0.5 + disparity / 2
    rate_u = 0.5 - disparity / 2
    if air == "auto":
        air = None if rate_p == 0 else round_sig(rate_u / rate_p)
    lo, hi = accuracy_ci(round_sig(acc), n_holdout)
    return ModelRecord(
        id=model_id,
        family="logistic_regression",
        exclude_tags=(),
        hyperparams={},
        intervention_kind=intervention,
        intervention_param=None if intervention == "none" else 0.0,
        seed=0,
        accuracy=round_sig(acc),
        privileged_rate=round_sig(rate_p),
        protected_rate=round_sig(rate_u),
        disparity=round_sig(disparity),
        air=air,
        z=3.0,
        p=round_sig(p),
        ci_low=round_sig(lo),
        ci_high=round_sig(hi),
        prediction_bits=prediction_bits,
    )


def blob_matrix(n: int = 200, margin: float = 3.0, seed: int = 5) -> EncodedMatrix:
    """Two well-separated Gaussian blobs in 2 features; linearly separable by
    construction for a large enough margin."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack(
        [
            rng.normal(loc=(-margin, -margin), scale=1.0, size=(half, 2)),
            rng.normal(loc=(margin, margin), scale=1.0, size=(n - half, 2)),
        ]
    )
    y = np.array([0] * half + [1] * (n - half))
    groups = rng.integers(0, 2, size=n)
    return make_matrix(X, y, groups)


@pytest.fixture(scope="session")
def biased_split():
    """Encoded train/holdout of the biased synthetic fixture (n=2000)."""
    table = synth_generate(2000, 0.5, 1.5, 2.0, seed=7)
    matrix = encode(table, synth_schema())
    return split(matrix, SplitSpec(0.2, 42))


def build_small_report(timestamp: str = "2026-01-01T00:00:00+00:00"):
    """Small but complete audit report over a 600-row biased fixture."""
    import dataclasses

    from fairaudit.doctrine import (
        DiConfig,
        LdaRule,
        UdapConfig,
        acceptability_geometry,
        evaluate,
    )
    from fairaudit.learners import Intervention
    from fairaudit.report import AuditReport
    from fairaudit.search import (
        BaselinePolicy,
        ConfigSearch,
        SearchPlan,
        run_search,
        select_baseline,
    )

    schema = synth_schema()
    table = synth_generate(600, 0.5, 1.5, 2.0, seed=19)
    matrix = encode(table, schema)
    train_m, holdout_m = split(matrix, SplitSpec(0.2, 42))
    plan = SearchPlan(
        searches=(
            ConfigSearch(
                "logistic",
                "logistic_regression",
                hyper_grid=(("iterations", (60,)), ("learning_rate", (0.05, 0.1))),
                interventions=(
                    Intervention(),
                    Intervention("reweigh", 1.0),
                    Intervention("group_threshold_postprocess", 0.0),
                ),
                seed_base=0,
            ),
            ConfigSearch(
                "tree",
                "decision_tree",
                hyper_grid=(("max_depth", (2, 4)),),
                interventions=(Intervention(),),
                seed_base=50,
            ),
        ),
        retention=1.0,
    )
    pool = run_search(
        plan,
        train_m,
        holdout_m,
        {"schema_hash": schema.fingerprint(), "split_seed": 42, "holdout_fraction": 0.2},
    )
    pool = dataclasses.replace(
        pool, baseline_id=select_baseline(pool, BaselinePolicy("max_accuracy"))
    )
    di_configs = (
        DiConfig(lda_rule=LdaRule("absolute_tolerance", 0.01)),
        DiConfig(lda_rule=LdaRule("absolute_tolerance", 0.02)),
    )
    udap_configs = (UdapConfig(k=4.0), UdapConfig(k=1.0))
    di_v, udap_v, div = evaluate(pool, di_configs[0], udap_configs[0])
    geometry = acceptability_geometry(pool.baseline, di_configs, udap_configs)
    return AuditReport(
        dataset={
            "schema": schema.to_dict(),
            "fingerprint": schema.fingerprint(),
            "split": {"holdout_fraction": 0.2, "seed": 42},
            "n_rows": table.n_rows,
            "dropped_rows": 0,
            "baseline_policy": "max-accuracy",
        },
        pool=pool,
        di_configs=di_configs,
        udap_configs=udap_configs,
        di_verdict=di_v,
        udap_verdict=udap_v,
        divergence=div,
        geometry=tuple(geometry),
        tool_version="0.1.0",
        generated_at=timestamp,
    )


@pytest.fixture(scope="session")
def small_report():
    return build_small_report()
