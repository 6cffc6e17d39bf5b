"""
One-at-a-time (OAT) factor screening: design, elementary effects, ranking
"""

import logging
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Literal

from src.errors import BaselineFailed, DegenerateRange, ForeignFactor, NoEffects, NoFactorsSelected
from src.models import HtdDocument, RankEntry, Ranking, UncertainParameter

logger = logging.getLogger(__name__)

Rule = Literal["midpoint_to_high", "midpoint_to_low", "nominal_to_high"]
RunStatus = Literal["pending", "ok", "failed"]
RULES: tuple[Rule, ...] = ("midpoint_to_high", "midpoint_to_low", "nominal_to_high")


@dataclass(frozen=True)
class OatFactor:
    param_id: str
    baseline: float
    perturbed: float
    delta: float
    lo: float
    hi: float

    @property
    def direction(self) -> float:
        return 1.0 if self.perturbed > self.baseline else -1.0


@dataclass(frozen=True)
class Run:
    index: int
    assignment: Mapping[str, float]
    result: Mapping[str, float] | None = None
    status: RunStatus = "pending"
    diagnostics: str = ""

    def __post_init__(self):
        if (self.result is not None) != (self.status == "ok"):
            raise ValueError(f"run {self.index}: result must be present exactly when status is ok")


@dataclass(frozen=True)
class OatDesign:
    """Run 0 is the all-baseline run; run j perturbs factor j only"""

    factors: tuple[OatFactor, ...]
    runs: tuple[Run, ...]
    metrics: tuple[str, ...]

    def with_runs(self, runs: Iterable[Run]) -> "OatDesign":
        return replace(self, runs=tuple(sorted(runs, key=lambda run: run.index)))

    def failed_runs(self) -> list[Run]:
        return [run for run in self.runs if run.status == "failed"]


@dataclass(frozen=True)
class Effect:
    param_id: str
    metric: str
    value: float

    @property
    def magnitude(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class EffectSet:
    """Elementary effects plus the factors whose run failed"""

    effects: tuple[Effect, ...] = ()
    skipped: tuple[str, ...] = field(default=())

    def __iter__(self) -> Iterator[Effect]:
        return iter(self.effects)

    def __len__(self) -> int:
        return len(self.effects)

    def for_metric(self, metric: str) -> list[Effect]:
        return [effect for effect in self.effects if effect.metric == metric]


def _oat_factor(param: UncertainParameter, rule: Rule) -> OatFactor:
    lo, hi = param.range.lo, param.range.hi
    if not hi > lo:
        raise DegenerateRange(f"{param.id}: range [{lo}, {hi}] has no width")
    if rule == "nominal_to_high":
        baseline = param.nominal.value
        # already at the top of the range: step down instead
        perturbed = hi if baseline != hi else lo
    else:
        baseline = (lo + hi) / 2
        perturbed = hi if rule == "midpoint_to_high" else lo
    delta = abs(perturbed - baseline) / (hi - lo)
    return OatFactor(param.id, baseline, perturbed, delta, lo, hi)


def generate_oat_design(
    params: Sequence[UncertainParameter],
    metrics: Sequence[str],
    rule: Rule = "midpoint_to_high",
) -> OatDesign:
    """
    Build the k+1 runs of a one-sided OAT design

    Args:
        params: Candidate parameters; only screening_selected ones become factors
        metrics: Metric names every run must report
        rule: How baseline and perturbed values are chosen from each range

    Returns:
        OatDesign: Factors in parameter order, all runs pending

    Raises:
        NoFactorsSelected: If no parameter is selected for screening
        DegenerateRange: If a selected range has hi <= lo
    """
    if rule not in RULES:
        raise ValueError(f"unknown OAT rule: {rule}")
    selected = [param for param in params if param.screening_selected]
    if not selected:
        raise NoFactorsSelected("no parameter is marked screening_selected")
    factors = tuple(_oat_factor(param, rule) for param in selected)
    baseline = {f.param_id: f.baseline for f in factors}
    runs = [Run(0, dict(baseline))]
    for j, factor in enumerate(factors, start=1):
        runs.append(Run(j, {**baseline, factor.param_id: factor.perturbed}))
    return OatDesign(factors, tuple(runs), tuple(metrics))


def elementary_effects(design: OatDesign) -> EffectSet:
    """
    EE = (y_j - y_0) / (delta_j * direction_j) for every ok run and metric

    Raises:
        BaselineFailed: If run 0 did not complete
    """
    baseline = design.runs[0]
    if baseline.status != "ok":
        raise BaselineFailed(f"baseline run failed: {baseline.diagnostics or baseline.status}")
    effects = []
    skipped = []
    for factor, run in zip(design.factors, design.runs[1:]):
        if run.status != "ok":
            logger.warning("run %d (%s) skipped: %s", run.index, factor.param_id, run.diagnostics)
            skipped.append(factor.param_id)
            continue
        step = factor.delta * factor.direction
        for metric in design.metrics:
            value = (run.result[metric] - baseline.result[metric]) / step
            effects.append(Effect(factor.param_id, metric, value))
    return EffectSet(tuple(effects), tuple(skipped))


def rank_factors(effects: Iterable[Effect], metric: str) -> Ranking:
    """
    Order factors by |EE| descending with competition ranking for ties

    Raises:
        NoEffects: If there is no effect for the metric
    """
    relevant = [effect for effect in effects if effect.metric == metric]
    if not relevant:
        raise NoEffects(f"no elementary effects for metric {metric!r}")
    ordered = sorted(relevant, key=lambda e: (-e.magnitude, e.param_id))
    entries = []
    for position, effect in enumerate(ordered):
        if position and effect.magnitude == ordered[position - 1].magnitude:
            rank = entries[-1].rank
        else:
            rank = position + 1
        entries.append(RankEntry(param=effect.param_id, magnitude=effect.magnitude, rank=rank))
    return Ranking(metric=metric, entries=tuple(entries))


def writeback_ranking(doc: HtdDocument, poi_id: str, ranking: Ranking) -> HtdDocument:
    """
    Store a ranking on the PoI case; writing the same ranking twice is a no-op

    Raises:
        UnknownId: If the PoI does not exist
        ForeignFactor: If the ranking names factors not assigned to the PoI
    """
    poi = doc.poi(poi_id)
    foreign = [param_id for param_id in ranking.param_ids() if param_id not in poi.assigned_factors]
    if foreign:
        raise ForeignFactor(poi_id, foreign)
    return doc.replace_poi(poi.model_copy(update={"ranking": ranking}))
