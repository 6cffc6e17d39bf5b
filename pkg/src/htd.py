"""
Semantic validation and factor assignment for HTD documents
"""

from dataclasses import dataclass
from typing import Literal

from src.errors import UnboundIdentifier, Unsupported
from src.expressions import factor_identifier, format_expression, identifiers, parse_expression
from src.models import HtdDocument, UncertainParameter
from src.uncertainty import (
    DEFAULT_NORMAL_K,
    DISTRIBUTION_TYPES,
    EmpiricalDistribution,
    Interval,
    propagate_interval,
    propagate_monte_carlo,
    support_bounds,
)

Severity = Literal["error", "warning"]

FINDING_CODES = {
    "E_DUP_ID": "error",
    "E_DANGLING_COMPONENT": "error",
    "E_DANGLING_POI": "error",
    "E_BIDIR_FACTOR": "error",
    "E_RANGE_ORDER": "error",
    "E_FRAMING_REPR": "error",
    "E_DANGLING_PARAM": "error",
    "E_DANGLING_METRIC": "error",
    "E_INCOMPLETE_FINAL": "error",
    "W_UNASSIGNED_PARAM": "warning",
}


@dataclass(frozen=True)
class Finding:
    code: str
    severity: Severity
    path: str
    message: str

    def __str__(self):
        return f"{self.severity.upper():7} {self.code} {self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def summary(self) -> str:
        return f"{len(self.errors)} errors, {len(self.warnings)} warnings"


class _Collector:
    def __init__(self):
        self.findings: list[Finding] = []

    def add(self, code: str, path: str, message: str) -> None:
        self.findings.append(Finding(code, FINDING_CODES[code], path, message))


def _check_ids(doc: HtdDocument, out: _Collector) -> None:
    seen: dict[str, str] = {}
    located = [(poi.id, f"/poi_cases/{i}/id") for i, poi in enumerate(doc.poi_cases)]
    located += [(node.id, f"/sbd/nodes/{i}/id") for i, node in enumerate(doc.sbd.nodes)]
    located += [(p.id, f"/parameters/{i}/id") for i, p in enumerate(doc.parameters)]
    for ident, path in located:
        if ident in seen:
            out.add("E_DUP_ID", path, f"id {ident!r} already used at {seen[ident]}")
        else:
            seen[ident] = path
    for i, poi in enumerate(doc.poi_cases):
        names: set[str] = set()
        for j, metric in enumerate(poi.target_metrics):
            if metric.name in names:
                out.add(
                    "E_DUP_ID",
                    f"/poi_cases/{i}/target_metrics/{j}/name",
                    f"target metric {metric.name!r} repeated in {poi.id}",
                )
            names.add(metric.name)


def _check_parameter(
    doc: HtdDocument, i: int, param: UncertainParameter, out: _Collector
) -> None:
    base = f"/parameters/{i}"
    if param.component_ref not in doc.sbd.ids():
        out.add(
            "E_DANGLING_COMPONENT",
            f"{base}/component_ref",
            f"{param.id} refers to missing SBD node {param.component_ref!r}",
        )

    pois = {poi.id: poi for poi in doc.poi_cases}
    for j, poi_id in enumerate(param.poi_assignments):
        path = f"{base}/poi_assignments/{j}"
        if poi_id not in pois:
            out.add("E_DANGLING_POI", path, f"{param.id} is assigned to missing PoI {poi_id!r}")
        elif param.id not in pois[poi_id].assigned_factors:
            out.add(
                "E_BIDIR_FACTOR",
                path,
                f"{param.id} lists {poi_id} but {poi_id} does not list {param.id}",
            )
    if not param.poi_assignments:
        out.add("W_UNASSIGNED_PARAM", f"{base}/poi_assignments", f"{param.id} is not assigned to any PoI")

    lo, hi, nominal = param.range.lo, param.range.hi, param.nominal.value
    if lo > hi:
        out.add("E_RANGE_ORDER", f"{base}/range", f"range lower bound {lo} exceeds upper bound {hi}")
    elif not lo <= nominal <= hi:
        out.add("E_RANGE_ORDER", f"{base}/nominal", f"nominal {nominal} outside range [{lo}, {hi}]")
    if param.nominal.unit != param.range.unit:
        out.add(
            "E_RANGE_ORDER",
            f"{base}/nominal/unit",
            f"nominal unit {param.nominal.unit!r} differs from range unit {param.range.unit!r}",
        )

    if param.framing == "aleatory" and not isinstance(param.representation, DISTRIBUTION_TYPES):
        out.add(
            "E_FRAMING_REPR",
            f"{base}/representation",
            f"aleatory parameter {param.id} needs a distribution, not {param.representation.type}",
        )


def _check_pois(doc: HtdDocument, out: _Collector) -> None:
    params = {p.id: p for p in doc.parameters}
    poi_ids = {poi.id for poi in doc.poi_cases}
    for i, poi in enumerate(doc.poi_cases):
        for k, param_id in enumerate(poi.assigned_factors):
            path = f"/poi_cases/{i}/assigned_factors/{k}"
            if param_id not in params:
                out.add("E_BIDIR_FACTOR", path, f"{poi.id} lists unknown parameter {param_id!r}")
            elif poi.id not in params[param_id].poi_assignments:
                out.add(
                    "E_BIDIR_FACTOR",
                    path,
                    f"{poi.id} lists {param_id} but {param_id} is not assigned to {poi.id}",
                )
        if poi.ranking is not None:
            for k, entry in enumerate(poi.ranking.entries):
                if entry.param not in poi.assigned_factors:
                    out.add(
                        "E_BIDIR_FACTOR",
                        f"/poi_cases/{i}/ranking/entries/{k}/param",
                        f"ranking of {poi.id} mentions unassigned factor {entry.param!r}",
                    )
    refs = doc.test_case.poi_factor_analysis_ref or ()
    for j, poi_id in enumerate(refs):
        if poi_id not in poi_ids:
            out.add(
                "E_DANGLING_POI",
                f"/test_case/poi_factor_analysis_ref/{j}",
                f"test case refers to missing PoI {poi_id!r}",
            )


def _check_references(doc: HtdDocument, out: _Collector) -> None:
    params = {p.id: p for p in doc.parameters}
    spec = doc.test_spec
    for j, param_id in enumerate(spec.inputs):
        if param_id not in params:
            out.add("E_DANGLING_PARAM", f"/test_spec/inputs/{j}", f"unknown input parameter {param_id!r}")
    environment = {p.id for p in doc.parameters if "environmental_input" in p.taxonomy_tags}
    allowed = set(spec.inputs) | environment
    for j, param_id in enumerate(spec.uncertainty_source_refs):
        path = f"/test_spec/uncertainty_source_refs/{j}"
        if param_id not in params:
            out.add("E_DANGLING_PARAM", path, f"unknown uncertainty source {param_id!r}")
        elif param_id not in allowed:
            out.add(
                "E_DANGLING_PARAM",
                path,
                f"uncertainty source {param_id!r} is neither an input nor an environmental input",
            )
    outputs = set(spec.outputs)
    for j, entry in enumerate(doc.experiment_spec.measurement_uncertainty):
        if entry.metric not in outputs:
            out.add(
                "E_DANGLING_METRIC",
                f"/experiment_spec/measurement_uncertainty/{j}/metric",
                f"measured metric {entry.metric!r} is not a test specification output",
            )
    for i, entry in enumerate(doc.es_viewpoint.entries):
        for j, param_id in enumerate(entry.linked_parameters):
            if param_id not in params:
                out.add(
                    "E_DANGLING_PARAM",
                    f"/es_viewpoint/entries/{i}/linked_parameters/{j}",
                    f"ES aspect {entry.aspect!r} links unknown parameter {param_id!r}",
                )


def _check_final(doc: HtdDocument, out: _Collector) -> None:
    if doc.status != "final":
        return
    qs = doc.qualification_strategy
    for field in ("uncertainty_identification", "uncertainty_management_strategy"):
        if not getattr(qs, field).strip():
            out.add("E_INCOMPLETE_FINAL", f"/qualification_strategy/{field}", f"{field} is empty in a final document")
    for i, node in enumerate(doc.sbd.nodes):
        if not node.description.strip():
            out.add("E_INCOMPLETE_FINAL", f"/sbd/nodes/{i}/description", f"SBD node {node.id} has no description")


def validate_document(doc: HtdDocument) -> ValidationReport:
    """
    Check the cross-reference and consistency rules of a parsed document

    Args:
        doc: Structurally valid document

    Returns:
        ValidationReport: Findings sorted by (path, code); empty when consistent
    """
    out = _Collector()
    _check_ids(doc, out)
    for i, param in enumerate(doc.parameters):
        _check_parameter(doc, i, param, out)
    _check_pois(doc, out)
    _check_references(doc, out)
    _check_final(doc, out)
    return ValidationReport(tuple(sorted(out.findings, key=lambda f: (f.path, f.code, f.message))))


def assign_factor(doc: HtdDocument, param_id: str, poi_id: str) -> HtdDocument:
    """
    Link a parameter and a PoI on both sides (idempotent)

    Raises:
        UnknownId: If either id is missing
    """
    param = doc.parameter(param_id)
    poi = doc.poi(poi_id)
    if poi_id not in param.poi_assignments:
        param = param.model_copy(update={"poi_assignments": param.poi_assignments + (poi_id,)})
        doc = doc.replace_parameter(param)
    if param_id not in poi.assigned_factors:
        poi = poi.model_copy(update={"assigned_factors": poi.assigned_factors + (param_id,)})
        doc = doc.replace_poi(poi)
    return doc


def factors_for_poi(doc: HtdDocument, poi_id: str) -> list[UncertainParameter]:
    """Parameters assigned to the PoI, in document order"""
    doc.poi(poi_id)
    return [param for param in doc.parameters if poi_id in param.poi_assignments]


@dataclass(frozen=True)
class MetricPropagation:
    """A target metric propagated analytically and by sampling"""

    poi_id: str
    metric: str
    formula: str
    interval: Interval
    monte_carlo: EmpiricalDistribution


def propagate_target_metric(
    doc: HtdDocument,
    poi_id: str,
    metric: str,
    n: int = 10_000,
    seed: int = 0,
    k: float = DEFAULT_NORMAL_K,
) -> MetricPropagation:
    """
    Push the parameter representations through a target-metric formula

    Formula identifiers are parameter ids passed through factor_identifier.

    Raises:
        UnknownId: If the PoI or metric does not exist
        Unsupported: If the metric has no formula or a representation cannot be sampled
        UnboundIdentifier: If the formula uses an unknown identifier
    """
    target = doc.poi(poi_id).metric(metric)
    if target.formula is None:
        raise Unsupported(f"target metric {metric!r} of {poi_id} has no formula")
    expr = parse_expression(target.formula)
    reprs = {factor_identifier(param.id): param.representation for param in doc.parameters}
    used = {}
    for name in sorted(identifiers(expr)):
        if name not in reprs:
            raise UnboundIdentifier(name)
        used[name] = reprs[name]
    bounds = {name: support_bounds(repr_, k) for name, repr_ in used.items()}
    return MetricPropagation(
        poi_id=poi_id,
        metric=metric,
        formula=format_expression(expr),
        interval=propagate_interval(expr, bounds),
        monte_carlo=propagate_monte_carlo(expr, used, n, seed, k),
    )
