"""Two formalized legal doctrines evaluated over a candidate pool.

Disparate impact (DI) runs trigger -> business-justification gate ->
less-discriminatory-alternative search: the trigger needs a statistically
significant disparity that is also practically significant (disparity
threshold and/or adverse impact ratio), and alternatives must reduce
disparity while staying inside an accuracy rule.

UDAP unfairness runs substantial-injury trigger -> avoidability gate ->
countervailing-benefits tradeoff: alternatives qualify when their disparity
reduction outweighs k times their accuracy loss (a line through the baseline
with slope 1/k in disparity/accuracy space).

All boundary comparisons are inclusive for triggers and for the tradeoff
score; disparities are signed (protected-group disadvantage) unless the
absolute-value flag is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .canonical import round_sig
from .errors import ConfigError
from .metrics import accuracy_ci
from .search import CandidatePool, ModelRecord

DI = "disparate_impact"
UDAP = "udap_unfairness"

LDA_RULE_KINDS = ("absolute_tolerance", "within_ci", "beats_previous")
COMBINATORS = ("difference_only", "air_only", "either")

NOT_TRIGGERED = "not_triggered"
JUSTIFIED_NO_ALTERNATIVE = "justified_no_alternative"
LIABLE_ALTERNATIVE_EXISTS = "liable_alternative_exists"
GATE_BLOCKS = "gate_blocks"


@dataclass(frozen=True)
class LdaRule:
    """Accuracy rule an alternative must meet to count as a true alternative:
    within delta of the baseline, within the baseline's confidence interval,
    or beating a previous system's accuracy."""

    kind: str = "absolute_tolerance"
    delta: float | None = 0.01
    previous_accuracy: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LDA_RULE_KINDS:
            raise ConfigError(f"unknown LDA rule {self.kind!r}")
        if self.kind == "absolute_tolerance" and (self.delta is None or self.delta < 0):
            raise ConfigError("absolute_tolerance rule needs delta >= 0")
        if self.kind == "beats_previous" and self.previous_accuracy is None:
            raise ConfigError("beats_previous rule needs previous_accuracy")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "delta": self.delta,
            "previous_accuracy": self.previous_accuracy,
        }


def lda_rule_from_dict(raw: dict) -> LdaRule:
    return LdaRule(
        kind=raw.get("kind", "absolute_tolerance"),
        delta=raw.get("delta", 0.01),
        previous_accuracy=raw.get("previous_accuracy"),
    )


@dataclass(frozen=True)
class DiConfig:
    tau_pf: float = 0.10  # practical-significance disparity threshold
    air_threshold: float = 0.90
    alpha: float = 0.05
    combinator: str = "either"
    business_justification: bool = True
    lda_rule: LdaRule = field(default_factory=LdaRule)
    margin: float = 0.0  # extra disparity reduction an alternative must show
    use_absolute_disparity: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau_pf <= 1.0:
            raise ConfigError("tau_pf must lie in [0, 1]")
        if not 0.0 < self.air_threshold <= 1.0:
            raise ConfigError("air_threshold must lie in (0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.combinator not in COMBINATORS:
            raise ConfigError(f"unknown trigger combinator {self.combinator!r}")
        if self.margin < 0:
            raise ConfigError("margin must be >= 0")

    def to_dict(self) -> dict:
        return {
            "tau_pf": self.tau_pf,
            "air_threshold": self.air_threshold,
            "alpha": self.alpha,
            "combinator": self.combinator,
            "business_justification": self.business_justification,
            "lda_rule": self.lda_rule.to_dict(),
            "margin": self.margin,
            "use_absolute_disparity": self.use_absolute_disparity,
        }


def di_config_from_dict(raw: dict) -> DiConfig:
    return DiConfig(
        tau_pf=raw.get("tau_pf", 0.10),
        air_threshold=raw.get("air_threshold", 0.90),
        alpha=raw.get("alpha", 0.05),
        combinator=raw.get("combinator", "either"),
        business_justification=raw.get("business_justification", True),
        lda_rule=lda_rule_from_dict(raw.get("lda_rule", {})),
        margin=raw.get("margin", 0.0),
        use_absolute_disparity=raw.get("use_absolute_disparity", False),
    )


@dataclass(frozen=True)
class UdapConfig:
    tau_inj: float = 0.15  # substantial-injury disparity threshold
    reasonably_avoidable: bool = False
    k: float = 4.0  # disparity points required per accuracy point lost
    tradeoff_kind: str = "linear"  # reserved for future non-linear rules
    use_absolute_disparity: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau_inj <= 1.0:
            raise ConfigError("tau_inj must lie in [0, 1]")
        if self.k <= 0:
            raise ConfigError("tradeoff slope k must be > 0")
        if self.tradeoff_kind != "linear":
            raise ConfigError("only the linear tradeoff rule is implemented")

    @property
    def c(self) -> float:
        """Chart slope convention: accuracy points per disparity point,
        c = 1/k; echoed in outputs so either convention can be read off."""
        return 1.0 / self.k

    def to_dict(self) -> dict:
        return {
            "tau_inj": self.tau_inj,
            "reasonably_avoidable": self.reasonably_avoidable,
            "k": self.k,
            "c": round_sig(self.c),
            "tradeoff_kind": self.tradeoff_kind,
            "use_absolute_disparity": self.use_absolute_disparity,
        }


def udap_config_from_dict(raw: dict) -> UdapConfig:
    return UdapConfig(
        tau_inj=raw.get("tau_inj", 0.15),
        reasonably_avoidable=raw.get("reasonably_avoidable", False),
        k=raw.get("k", 4.0),
        tradeoff_kind=raw.get("tradeoff_kind", "linear"),
        use_absolute_disparity=raw.get("use_absolute_disparity", False),
    )


@dataclass(frozen=True)
class TriggerResult:
    fired: bool
    reasons: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"fired": self.fired, "reasons": list(self.reasons)}


@dataclass(frozen=True)
class Verdict:
    doctrine: str
    triggered: bool
    trigger_reasons: tuple[str, ...]
    gate: dict
    acceptable_ids: tuple[str, ...]
    conclusion: str
    gate_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "doctrine": self.doctrine,
            "triggered": self.triggered,
            "trigger_reasons": list(self.trigger_reasons),
            "gate": dict(self.gate),
            "acceptable_ids": list(self.acceptable_ids),
            "conclusion": self.conclusion,
            "gate_reason": self.gate_reason,
        }


def verdict_from_dict(raw: dict) -> Verdict:
    return Verdict(
        doctrine=raw["doctrine"],
        triggered=raw["triggered"],
        trigger_reasons=tuple(raw["trigger_reasons"]),
        gate=dict(raw["gate"]),
        acceptable_ids=tuple(raw["acceptable_ids"]),
        conclusion=raw["conclusion"],
        gate_reason=raw.get("gate_reason"),
    )


@dataclass(frozen=True)
class DivergenceReport:
    di_only: tuple[str, ...]
    udap_only: tuple[str, ...]
    both: tuple[str, ...]
    neither: tuple[str, ...]
    scores: dict[str, dict]

    def to_dict(self) -> dict:
        return {
            "di_only": list(self.di_only),
            "udap_only": list(self.udap_only),
            "both": list(self.both),
            "neither": list(self.neither),
            "scores": {k: dict(v) for k, v in self.scores.items()},
        }


def divergence_from_dict(raw: dict) -> DivergenceReport:
    return DivergenceReport(
        di_only=tuple(raw["di_only"]),
        udap_only=tuple(raw["udap_only"]),
        both=tuple(raw["both"]),
        neither=tuple(raw["neither"]),
        scores={k: dict(v) for k, v in raw["scores"].items()},
    )


def _disp(record: ModelRecord, use_absolute: bool) -> float:
    return abs(record.disparity) if use_absolute else record.disparity


def di_trigger(baseline: ModelRecord, config: DiConfig) -> TriggerResult:
    """Prima facie showing: statistical significance (p <= alpha) AND
    practical significance per the configured combinator. Boundaries are
    inclusive for the disparity threshold and exclusive for AIR (an AIR of
    exactly the threshold does not fire)."""
    disp = _disp(baseline, config.use_absolute_disparity)
    stat_ok = baseline.p <= config.alpha
    diff_ok = disp >= config.tau_pf
    air_ok = baseline.air is not None and baseline.air < config.air_threshold

    if config.combinator == "difference_only":
        practical = diff_ok
    elif config.combinator == "air_only":
        practical = air_ok
    else:
        practical = diff_ok or air_ok

    reasons = [
        f"statistical significance: p={baseline.p:g} {'<=' if stat_ok else '>'} alpha={config.alpha:g}",
        f"disparity test: {disp:g} {'>=' if diff_ok else '<'} tau_pf={config.tau_pf:g}",
    ]
    if baseline.air is None:
        reasons.append("AIR test: AIR undefined (privileged rate is 0)")
    else:
        reasons.append(
            f"AIR test: {baseline.air:g} {'<' if air_ok else '>='} threshold={config.air_threshold:g}"
        )
    return TriggerResult(stat_ok and practical, tuple(reasons))


def udap_trigger(baseline: ModelRecord, config: UdapConfig) -> TriggerResult:
    """Substantial injury: the disparity magnitude alone, no statistical
    conjunct (injury is about harm size, not sampling noise)."""
    disp = _disp(baseline, config.use_absolute_disparity)
    fired = disp >= config.tau_inj
    return TriggerResult(
        fired,
        (f"substantial injury: disparity {disp:g} {'>=' if fired else '<'} tau_inj={config.tau_inj:g}",),
    )


def _di_accuracy_bound(pool: CandidatePool, baseline: ModelRecord, config: DiConfig) -> float:
    rule = config.lda_rule
    if rule.kind == "absolute_tolerance":
        return round_sig(baseline.accuracy - rule.delta)
    if rule.kind == "beats_previous":
        return round_sig(rule.previous_accuracy)
    if config.alpha == 0.05:
        return baseline.ci_low
    n = pool.fingerprint.get("n_holdout", len(pool.holdout_labels))
    lo, _ = accuracy_ci(baseline.accuracy, n, config.alpha)
    return round_sig(lo)


def di_alternatives(
    pool: CandidatePool, baseline: ModelRecord, config: DiConfig
) -> tuple[str, ...]:
    """Less discriminatory alternatives: models reducing the baseline
    disparity by more than the margin while meeting the accuracy rule."""
    bound = _di_accuracy_bound(pool, baseline, config)
    b_disp = _disp(baseline, config.use_absolute_disparity)
    out = []
    for m in pool.records:
        if m.id == baseline.id:
            continue
        if _disp(m, config.use_absolute_disparity) < b_disp - config.margin and m.accuracy >= bound:
            out.append(m.id)
    return tuple(out)


def udap_score(baseline: ModelRecord, m: ModelRecord, config: UdapConfig) -> float:
    """Countervailing-benefits score: disparity reduction minus k times the
    accuracy loss. Negative loss (a more accurate model) raises the score."""
    reduction = _disp(baseline, config.use_absolute_disparity) - _disp(
        m, config.use_absolute_disparity
    )
    loss = baseline.accuracy - m.accuracy
    return reduction - config.k * loss


def udap_alternatives(
    pool: CandidatePool, baseline: ModelRecord, config: UdapConfig
) -> tuple[tuple[str, ...], dict[str, float]]:
    """Acceptable models (score >= 0 with a genuine disparity reduction) plus
    the score of every non-baseline model."""
    b_disp = _disp(baseline, config.use_absolute_disparity)
    ids = []
    scores: dict[str, float] = {}
    for m in pool.records:
        if m.id == baseline.id:
            continue
        s = udap_score(baseline, m, config)
        scores[m.id] = round_sig(s)
        if s >= 0.0 and _disp(m, config.use_absolute_disparity) < b_disp:
            ids.append(m.id)
    return tuple(ids), scores


def evaluate(
    pool: CandidatePool, di_config: DiConfig, udap_config: UdapConfig
) -> tuple[Verdict, Verdict, DivergenceReport]:
    """Run both doctrines over the pool and compute where they diverge."""
    baseline = pool.baseline

    di_trig = di_trigger(baseline, di_config)
    di_gate = {"name": "business_justification", "satisfied": di_config.business_justification}
    if not di_trig.fired:
        di_verdict = Verdict(DI, False, di_trig.reasons, di_gate, (), NOT_TRIGGERED)
    elif not di_config.business_justification:
        di_verdict = Verdict(
            DI,
            True,
            di_trig.reasons,
            di_gate,
            (),
            GATE_BLOCKS,
            gate_reason="no business justification asserted; analysis stops at the "
            "justification stage without reaching alternatives",
        )
    else:
        ids = di_alternatives(pool, baseline, di_config)
        di_verdict = Verdict(
            DI,
            True,
            di_trig.reasons,
            di_gate,
            ids,
            LIABLE_ALTERNATIVE_EXISTS if ids else JUSTIFIED_NO_ALTERNATIVE,
        )

    udap_trig = udap_trigger(baseline, udap_config)
    udap_gate = {"name": "reasonably_avoidable", "avoidable": udap_config.reasonably_avoidable}
    if not udap_trig.fired:
        udap_verdict = Verdict(UDAP, False, udap_trig.reasons, udap_gate, (), NOT_TRIGGERED)
    elif udap_config.reasonably_avoidable:
        udap_verdict = Verdict(
            UDAP,
            True,
            udap_trig.reasons,
            udap_gate,
            (),
            GATE_BLOCKS,
            gate_reason="harm deemed reasonably avoidable by consumers",
        )
    else:
        ids, _ = udap_alternatives(pool, baseline, udap_config)
        udap_verdict = Verdict(
            UDAP,
            True,
            udap_trig.reasons,
            udap_gate,
            ids,
            LIABLE_ALTERNATIVE_EXISTS if ids else JUSTIFIED_NO_ALTERNATIVE,
        )

    divergence = _divergence(pool, baseline, di_verdict, udap_verdict, di_config, udap_config)
    return di_verdict, udap_verdict, divergence


def _divergence(
    pool: CandidatePool,
    baseline: ModelRecord,
    di_verdict: Verdict,
    udap_verdict: Verdict,
    di_config: DiConfig,
    udap_config: UdapConfig,
) -> DivergenceReport:
    di_set = set(di_verdict.acceptable_ids)
    udap_set = set(udap_verdict.acceptable_ids)
    di_bound = _di_accuracy_bound(pool, baseline, di_config)
    b_disp = _disp(baseline, udap_config.use_absolute_disparity)

    di_only, udap_only, both, neither = [], [], [], []
    scores: dict[str, dict] = {}
    for m in pool.records:
        if m.id == baseline.id:
            continue
        in_di, in_udap = m.id in di_set, m.id in udap_set
        bucket = (
            both if in_di and in_udap else di_only if in_di else udap_only if in_udap else neither
        )
        bucket.append(m.id)
        scores[m.id] = {
            "udap_score": round_sig(udap_score(baseline, m, udap_config)),
            "di_accuracy_slack": round_sig(m.accuracy - di_bound),
            "disparity_reduction": round_sig(b_disp - _disp(m, udap_config.use_absolute_disparity)),
        }
    return DivergenceReport(tuple(di_only), tuple(udap_only), tuple(both), tuple(neither), scores)


def acceptability_geometry(
    baseline: ModelRecord,
    di_configs: DiConfig | Sequence[DiConfig],
    udap_configs: UdapConfig | Sequence[UdapConfig],
) -> list[dict]:
    """Plot primitives for the doctrine cut-offs around a baseline.

    DI rules become horizontal accuracy floors; each UDAP slope k becomes a
    line through (baseline disparity, baseline accuracy) with slope 1/k in
    (disparity, accuracy) space; the two triggers become vertical disparity
    lines (taken from the first config of each doctrine).
    """
    if isinstance(di_configs, DiConfig):
        di_configs = [di_configs]
    if isinstance(udap_configs, UdapConfig):
        udap_configs = [udap_configs]
    if not di_configs or not udap_configs:
        raise ConfigError("geometry needs at least one config per doctrine")

    prims: list[dict] = []
    for cfg in di_configs:
        rule = cfg.lda_rule
        if rule.kind == "absolute_tolerance":
            prims.append(
                {
                    "kind": "di_accuracy_floor",
                    "accuracy": round_sig(baseline.accuracy - rule.delta),
                    "delta": rule.delta,
                }
            )
        elif rule.kind == "within_ci":
            prims.append(
                {"kind": "di_ci_floor", "accuracy": baseline.ci_low, "alpha": cfg.alpha}
            )
        else:
            prims.append(
                {
                    "kind": "di_previous_floor",
                    "accuracy": round_sig(rule.previous_accuracy),
                }
            )
    for cfg in udap_configs:
        prims.append(
            {
                "kind": "udap_tradeoff",
                "k": cfg.k,
                "c": round_sig(cfg.c),
                "anchor_disparity": baseline.disparity,
                "anchor_accuracy": baseline.accuracy,
            }
        )
    prims.append({"kind": "trigger_line", "doctrine": "di", "disparity": di_configs[0].tau_pf})
    prims.append(
        {"kind": "trigger_line", "doctrine": "udap", "disparity": udap_configs[0].tau_inj}
    )
    return prims
