"""
Reading, writing and reporting HTD documents
"""

import logging
import re
from pathlib import Path

import yaml
from jinja2 import Environment, FileSystemLoader, StrictUndefined
from pydantic import ValidationError

from docs.es_aspects import get_es_aspects
from src.delay import DelayHistogram, DelaySummary, percent_text
from src.errors import DocumentSyntaxError, SchemaError
from src.models import (
    EsViewpoint,
    ExperimentSpec,
    HtdDocument,
    PoiCase,
    QualificationStrategy,
    Quantity,
    TargetMetric,
    TestCase,
    TestSpec,
    UncertainParameter,
    ValueRange,
)
from src.sbd import SbdNode, build_sbd, coverage_check, flatten, to_dot
from src.uncertainty import Interval, describe

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent / "templates"
REPORT_TEMPLATE = "report.md.j2"

_INT_TAG = "tag:yaml.org,2002:int"
_FLOAT_TAG = "tag:yaml.org,2002:float"

# YAML 1.2 core schema: null, bool, int, float; everything else is a string
_CORE_RESOLVERS = [
    ("tag:yaml.org,2002:null", r"^(?:~|null|Null|NULL|)$", ["~", "n", "N", ""]),
    ("tag:yaml.org,2002:bool", r"^(?:true|True|TRUE|false|False|FALSE)$", list("tTfF")),
    (_INT_TAG, r"^(?:[-+]?[0-9]+|0o[0-7]+|0x[0-9a-fA-F]+)$", list("-+0123456789")),
    (
        _FLOAT_TAG,
        r"^(?:[-+]?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?)(?:[eE][-+]?[0-9]+)?|[-+]?\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$",
        list("-+0123456789."),
    ),
]


def _syntax_error(message: str, mark) -> DocumentSyntaxError:
    if mark is None:
        return DocumentSyntaxError(message, 1, 1)
    return DocumentSyntaxError(message, mark.line + 1, mark.column + 1)


class _CoreSchemaLoader(yaml.SafeLoader):
    """Safe loader resolving plain scalars by the YAML 1.2 core schema, refusing duplicate keys"""

    yaml_implicit_resolvers = {}

    def construct_mapping(self, node, deep=False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=deep)
            try:
                duplicate = key in seen
            except TypeError:
                continue
            if duplicate:
                raise _syntax_error(f"duplicate key {key!r}", key_node.start_mark)
            seen.add(key)
        return super().construct_mapping(node, deep=deep)

    def construct_core_int(self, node):
        text = self.construct_scalar(node)
        if text.startswith("0o"):
            return int(text[2:], 8)
        if text.startswith("0x"):
            return int(text[2:], 16)
        return int(text)

    def construct_core_float(self, node):
        text = self.construct_scalar(node)
        lowered = text.lower()
        if lowered.endswith(".inf"):
            return float("-inf") if text.startswith("-") else float("inf")
        if lowered == ".nan":
            return float("nan")
        return float(text)


class _CoreSchemaDumper(yaml.SafeDumper):
    """Quotes every string that either YAML 1.1 or the 1.2 core schema would read as non-string"""


for _tag, _pattern, _first in _CORE_RESOLVERS:
    _CoreSchemaLoader.add_implicit_resolver(_tag, re.compile(_pattern), _first)
    _CoreSchemaDumper.add_implicit_resolver(_tag, re.compile(_pattern), _first)
_CoreSchemaLoader.add_constructor(_INT_TAG, _CoreSchemaLoader.construct_core_int)
_CoreSchemaLoader.add_constructor(_FLOAT_TAG, _CoreSchemaLoader.construct_core_float)


def _reject_extensions(text: str) -> None:
    for event in yaml.parse(text, Loader=_CoreSchemaLoader):
        if isinstance(event, yaml.AliasEvent):
            raise _syntax_error("aliases are not allowed", event.start_mark)
        if isinstance(event, yaml.NodeEvent) and event.anchor is not None:
            raise _syntax_error("anchors are not allowed", event.start_mark)
        if isinstance(event, (yaml.ScalarEvent, yaml.CollectionStartEvent)) and event.tag is not None:
            raise _syntax_error(f"explicit tag {event.tag} is not allowed", event.start_mark)


def _json_pointer(loc) -> str:
    return "/" + "/".join(str(part) for part in loc) if loc else "/"


def _schema_error(err: ValidationError) -> SchemaError:
    first = err.errors()[0]
    path = _json_pointer(first["loc"])
    kind = first["type"]
    if kind == "missing":
        return SchemaError(path, "required key", "nothing")
    if kind == "extra_forbidden":
        return SchemaError(path, "no such key", "unknown key")
    found = repr(first.get("input"))
    if len(found) > 60:
        found = found[:57] + "..."
    return SchemaError(path, first["msg"], found)


def parse_document(data: bytes | str) -> HtdDocument:
    """
    Parse document text into an HtdDocument (structure only)

    Args:
        data: YAML text or UTF-8 bytes

    Returns:
        HtdDocument: Structurally valid document; run validate_document for semantics

    Raises:
        DocumentSyntaxError: Malformed YAML, anchors, aliases or explicit tags
        SchemaError: Missing, unknown or mistyped keys, with their path
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as err:
            raise DocumentSyntaxError(f"not UTF-8 text: {err.reason}", 1, err.start + 1) from err
    else:
        text = data
    try:
        _reject_extensions(text)
        raw = yaml.load(text, Loader=_CoreSchemaLoader)
    except yaml.MarkedYAMLError as err:
        raise _syntax_error(err.problem or str(err), err.problem_mark) from err
    except yaml.YAMLError as err:
        raise DocumentSyntaxError(str(err), 1, 1) from err
    if not isinstance(raw, dict):
        raise SchemaError("/", "mapping", type(raw).__name__)
    try:
        return HtdDocument.model_validate(raw)
    except ValidationError as err:
        raise _schema_error(err) from err


def serialize_document(doc: HtdDocument) -> bytes:
    """Canonical YAML: model field order, lists in stored order, None fields omitted"""
    data = doc.model_dump(mode="json", exclude_none=True)
    text = yaml.dump(
        data,
        Dumper=_CoreSchemaDumper,
        sort_keys=False,
        allow_unicode=True,
        default_flow_style=False,
        width=4096,
    )
    return text.encode("utf-8")


def load_document(path: str | Path) -> HtdDocument:
    return parse_document(Path(path).read_bytes())


def save_document(doc: HtdDocument, path: str | Path) -> None:
    Path(path).write_bytes(serialize_document(doc))
    logger.info("wrote %s", path)


def skeleton_document(setup_type: str = "software_based") -> HtdDocument:
    """Minimal consistent document to start a new test description from"""
    root = SbdNode(
        id="SB-1",
        name="System under test",
        description="Top-level system configuration",
        kind="system",
    )
    param = UncertainParameter(
        id="PAR-1",
        name="Example parameter",
        component_ref="SB-1",
        framing="epistemic",
        representation=Interval(lo=0.0, hi=1.0),
        nominal=Quantity(value=0.5, unit="-"),
        range=ValueRange(lo=0.0, hi=1.0, unit="-"),
        taxonomy_tags=("model_parameter",),
        poi_assignments=("POI-1",),
        screening_selected=True,
    )
    poi = PoiCase(
        id="POI-1",
        objective="uncertainty_analysis",
        description="Describe the purpose of investigation",
        target_metrics=(TargetMetric(name="metric", unit="-", formula="PAR_1"),),
        assigned_factors=("PAR-1",),
    )
    return HtdDocument(
        id="HTD-NEW",
        title="New test description",
        status="draft",
        test_case=TestCase(narrative="Describe the test case", poi_factor_analysis_ref=("POI-1",)),
        qualification_strategy=QualificationStrategy(),
        test_spec=TestSpec(inputs=("PAR-1",), outputs=("metric",), uncertainty_source_refs=("PAR-1",)),
        experiment_spec=ExperimentSpec(
            setup_type=setup_type,
            setup_uncertainties=tuple(get_es_aspects(setup_type)),
        ),
        poi_cases=(poi,),
        sbd=build_sbd([root]),
        parameters=(param,),
        es_viewpoint=EsViewpoint(),
    )


# Report


def _cell(value) -> str:
    text = "" if value is None else str(value)
    return text.replace("|", "\\|").replace("\n", " ").strip()


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _quantity(value: float, unit: str) -> str:
    return f"{_fmt(value)} {unit}".strip()


def _parameter_rows(doc: HtdDocument) -> list[dict]:
    ranks: dict[str, list[str]] = {}
    for poi in doc.poi_cases:
        if poi.ranking is not None:
            for entry in poi.ranking.entries:
                ranks.setdefault(entry.param, []).append(f"{poi.id}: {entry.rank}")
    rows = []
    for param in doc.parameters:
        rows.append(
            {
                "id": param.id,
                "name": param.name,
                "component": param.component_ref,
                "framing": param.framing,
                "representation": describe(param.representation),
                "nominal": _quantity(param.nominal.value, param.nominal.unit),
                "range": f"[{_fmt(param.range.lo)}, {_fmt(param.range.hi)}] {param.range.unit}".strip(),
                "tags": ", ".join(param.taxonomy_tags),
                "pois": ", ".join(param.poi_assignments),
                "selected": "yes" if param.screening_selected else "no",
                "rank": "; ".join(ranks.get(param.id, [])) or "-",
            }
        )
    return rows


def _poi_views(doc: HtdDocument) -> list[dict]:
    names = {param.id: param.name for param in doc.parameters}
    views = []
    for poi in doc.poi_cases:
        ranking = None
        if poi.ranking is not None:
            ranking = {
                "metric": poi.ranking.metric,
                "rows": [
                    {
                        "rank": entry.rank,
                        "param": entry.param,
                        "name": names.get(entry.param, ""),
                        "magnitude": _fmt(entry.magnitude),
                    }
                    for entry in poi.ranking.entries
                ],
            }
        views.append(
            {
                "id": poi.id,
                "objective": poi.objective.replace("_", " "),
                "description": poi.description,
                "metrics": poi.target_metrics,
                "factors": [f"{pid} ({names.get(pid, '?')})" for pid in poi.assigned_factors],
                "ranking": ranking,
            }
        )
    return views


def _sbd_view(doc: HtdDocument) -> list[dict]:
    return [
        {
            "indent": "  " * doc.sbd.depth(node.id),
            "id": node.id,
            "name": node.name,
            "kind": node.kind,
            "description": node.description,
        }
        for node in flatten(doc.sbd)
    ]


def _delay_view(summary: DelaySummary, histogram: DelayHistogram | None) -> dict:
    lo, hi = summary.mode_bin.edges
    view = {
        "total": summary.total,
        "n_bins": summary.n_bins,
        "min": f"{summary.min:.4f}",
        "max": f"{summary.max:.4f}",
        "mean": f"{summary.mean:.4f}",
        "median": f"{summary.median:.4f}",
        "std": f"{summary.std:.4f}",
        "p05": f"{summary.p05:.4f}",
        "p95": f"{summary.p95:.4f}",
        "mode_index": summary.mode_bin.index,
        "mode_edges": f"[{lo:.4f} ms, {hi:.4f} ms]",
        "mode_percent": percent_text(summary.mode_bin.rel_prob),
        "first_percent": percent_text(summary.first_bin_prob),
        "last_percent": percent_text(summary.last_bin_prob),
        "bins": [],
    }
    if histogram is not None:
        for i, count in enumerate(histogram.counts):
            b_lo, b_hi = histogram.edges(i)
            view["bins"].append(
                {
                    "index": i,
                    "lo": f"{b_lo:.4f}",
                    "hi": f"{b_hi:.4f}",
                    "count": count,
                    "percent": percent_text(histogram.rel_prob_exact(i)),
                }
            )
    return view


def _environment() -> Environment:
    env = Environment(
        loader=FileSystemLoader(TEMPLATE_DIR),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        undefined=StrictUndefined,
        autoescape=False,
    )
    env.filters["cell"] = _cell
    env.globals["describe"] = describe
    return env


def render_report(
    doc: HtdDocument,
    delay: DelaySummary | None = None,
    histogram: DelayHistogram | None = None,
) -> str:
    """
    Render the consolidated uncertainty report as Markdown

    Args:
        doc: Valid document
        delay: Optional delay characterization summary
        histogram: Optional histogram for the relative-probability table

    Returns:
        str: Deterministic Markdown text
    """
    template = _environment().get_template(REPORT_TEMPLATE)
    return template.render(
        doc=doc,
        pois=_poi_views(doc),
        sbd_nodes=_sbd_view(doc),
        dot=to_dot(doc.sbd),
        uncovered=coverage_check(doc.sbd, doc.parameters),
        parameters=_parameter_rows(doc),
        es=doc.experiment_spec,
        es_entries=doc.es_viewpoint.entries,
        delay=_delay_view(delay, histogram) if delay is not None else None,
    )
