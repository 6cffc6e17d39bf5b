"""
Test document parsing, canonical serialization, scaffolding and reports
"""

import random

import pytest
import yaml

from conftest import FIXTURES
from docs.es_aspects import MIXED_ASPECTS
from src.delay import DelaySamples, bin_delays, summarize
from src.docio import parse_document, render_report, serialize_document, skeleton_document
from src.errors import DocumentSyntaxError, SchemaError
from src.htd import validate_document
from src.models import (
    EsEntry,
    EsViewpoint,
    ExperimentSpec,
    HtdDocument,
    InstrumentPrecision,
    MeasurementUncertainty,
    PoiCase,
    QualificationStrategy,
    Quantity,
    RankEntry,
    Ranking,
    TargetMetric,
    TestCase,
    TestSpec,
    UncertainParameter,
    ValueRange,
)
from src.sbd import SbdNode, build_sbd
from src.screening import writeback_ranking
from src.uncertainty import Empirical, ExternalTag, Interval, Normal, PBox, Point, Triangular, Uniform

ALPHABET = "abcxyzABC019 _-:#'\"{}[],&*!|>%@`?éü→μΩ"


def random_text(rng: random.Random, max_len: int = 12) -> str:
    return "".join(rng.choice(ALPHABET) for _ in range(rng.randint(0, max_len)))


def random_float(rng: random.Random) -> float:
    return rng.choice([0.0, 1.0, -2.5, 1e-7, 3.3e12, rng.uniform(-1e3, 1e3), rng.gauss(0, 1)])


def random_repr(rng: random.Random):
    lo = random_float(rng)
    hi = lo + abs(random_float(rng))
    kind = rng.randrange(8)
    if kind == 0:
        return Point(value=lo)
    if kind == 1:
        return Interval(lo=lo, hi=hi)
    if kind == 2:
        return Uniform(lo=lo, hi=hi)
    if kind == 3:
        return Normal(mean=lo, std=abs(random_float(rng)) + 0.1)
    if kind == 4:
        return Triangular(lo=lo, mode=(lo + hi) / 2, hi=hi)
    samples = tuple(random_float(rng) for _ in range(rng.randint(1, 6)))
    if kind == 5:
        return Empirical(samples=samples)
    if kind == 6:
        shift = abs(random_float(rng))
        return PBox(
            lower=Empirical(samples=samples),
            upper=Empirical(samples=tuple(s - shift for s in samples)),
        )
    return ExternalTag(name=random_text(rng) or "fuzzy")


def random_document(rng: random.Random) -> HtdDocument:
    """Structurally valid document with random content"""
    nodes = [SbdNode(id="N0", name=random_text(rng), description=random_text(rng), kind="system")]
    for i in range(1, rng.randint(1, 8)):
        nodes.append(
            SbdNode(
                id=f"N{i}",
                name=random_text(rng),
                description=random_text(rng),
                parent=rng.choice(nodes).id,
                kind=rng.choice(["subsystem", "component"]),
            )
        )
    params = []
    for i in range(rng.randint(0, 5)):
        lo = random_float(rng)
        unit = rng.choice(["", "ms", "p.u.", "%", "-", "yes"])
        params.append(
            UncertainParameter(
                id=f"PAR-{i}",
                name=random_text(rng),
                component_ref=rng.choice(nodes).id,
                framing=rng.choice(["aleatory", "epistemic"]),
                representation=random_repr(rng),
                nominal=Quantity(value=random_float(rng), unit=unit),
                range=ValueRange(lo=lo, hi=lo + abs(random_float(rng)), unit=unit),
                taxonomy_tags=tuple(rng.sample(["model_parameter", "communication", "configuration"], rng.randint(0, 2))),
                poi_assignments=("POI-1",) if rng.random() < 0.7 else (),
                screening_selected=rng.random() < 0.5,
            )
        )
    ranking = None
    if params and rng.random() < 0.5:
        ranking = Ranking(
            metric="m",
            entries=tuple(
                RankEntry(param=p.id, magnitude=abs(random_float(rng)), rank=j + 1) for j, p in enumerate(params)
            ),
        )
    poi = PoiCase(
        id="POI-1",
        objective=rng.choice(["uncertainty_analysis", "sensitivity_analysis", "scaling_analysis"]),
        description=random_text(rng, 40),
        target_metrics=(
            TargetMetric(name="m", unit=random_text(rng, 3), formula=rng.choice([None, "2 * a + b", "x / (y - 1)"])),
        ),
        assigned_factors=tuple(p.id for p in params),
        ranking=ranking,
    )
    return HtdDocument(
        id=f"HTD-{rng.randint(0, 999)}",
        title=random_text(rng, 30),
        status=rng.choice(["draft", "final"]),
        test_case=TestCase(
            narrative=random_text(rng, 60),
            variability_attributes=tuple(random_text(rng) for _ in range(rng.randint(0, 3))),
            poi_factor_analysis_ref=rng.choice([None, ("POI-1",)]),
        ),
        qualification_strategy=QualificationStrategy(uncertainty_identification=random_text(rng)),
        test_spec=TestSpec(inputs=tuple(p.id for p in params), outputs=("m",)),
        experiment_spec=ExperimentSpec(
            setup_type=rng.choice(["software_based", "hardware_based", "mixed"]),
            setup_uncertainties=tuple(random_text(rng) for _ in range(rng.randint(0, 2))),
            equipment_precision=(InstrumentPrecision(instrument="PMU", precision=Quantity(value=0.01, unit="deg")),),
            measurement_uncertainty=(MeasurementUncertainty(metric="m", representation=random_repr(rng)),),
        ),
        poi_cases=(poi,),
        sbd=build_sbd(nodes),
        parameters=tuple(params),
        es_viewpoint=EsViewpoint(
            entries=tuple(
                EsEntry(aspect=random_text(rng), category="parametric", linked_parameters=(p.id,)) for p in params[:2]
            )
        ),
    )


class TestRoundtrip:
    """Test suite for parse/serialize"""

    @pytest.mark.parametrize("name", ["gdrts.htd.yaml", "menb.htd.yaml"])
    def test_fixtures(self, name):
        """Test structural identity and the canonical fixpoint on the fixtures"""
        doc = parse_document((FIXTURES / name).read_bytes())
        text = serialize_document(doc)
        assert parse_document(text) == doc
        assert serialize_document(parse_document(text)) == text

    def test_random_documents(self):
        """Test roundtrip on 500 random structurally valid documents"""
        rng = random.Random(2024)
        for _ in range(500):
            doc = random_document(rng)
            text = serialize_document(doc)
            assert parse_document(text) == doc
            assert serialize_document(parse_document(text)) == text

    def test_key_order_follows_model(self, gdrts_doc):
        """Test that top-level keys come out in model field order"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        assert list(data) == list(HtdDocument.model_fields)

    @pytest.mark.parametrize("title", ["1e5", "0o17", ".5", "+12", "1:30", "2001-12-14", "1_000", "~", "no"])
    def test_number_like_strings(self, gdrts_doc, title):
        """Test that strings resembling scalars of another type survive the roundtrip"""
        doc = gdrts_doc.model_copy(update={"title": title})
        assert parse_document(serialize_document(doc)).title == title

    def test_none_fields_omitted(self, menb_doc):
        """Test that absent optional values are not written"""
        text = serialize_document(menb_doc).decode("utf-8")
        assert "null" not in text
        assert "ranking" not in text


class TestParseErrors:
    """Test suite for parse failures"""

    def test_malformed_yaml(self):
        """Test that broken YAML reports a line"""
        with pytest.raises(DocumentSyntaxError) as exc_info:
            parse_document("id: x\ntitle: [a, b\nstatus: draft\n")
        assert exc_info.value.line >= 2

    def test_anchor_rejected(self):
        """Test that anchors are refused"""
        with pytest.raises(DocumentSyntaxError) as exc_info:
            parse_document("id: &a x\ntitle: y\n")
        assert exc_info.value.line == 1
        assert "anchor" in str(exc_info.value)

    def test_alias_rejected(self):
        """Test that aliases are refused"""
        with pytest.raises(DocumentSyntaxError) as exc_info:
            parse_document("id: x\ntitle: *a\n")
        assert exc_info.value.line == 2

    def test_tag_rejected(self):
        """Test that explicit tags are refused"""
        with pytest.raises(DocumentSyntaxError):
            parse_document("id: !!str 5\n")

    def test_not_utf8(self):
        """Test that undecodable bytes are a syntax error"""
        with pytest.raises(DocumentSyntaxError):
            parse_document(b"id: \xff\xfe\n")

    def test_not_a_mapping(self):
        """Test that the top level must be a mapping"""
        with pytest.raises(SchemaError) as exc_info:
            parse_document("- 1\n- 2\n")
        assert exc_info.value.path == "/"

    def test_missing_poi_cases(self, gdrts_doc):
        """Test that a missing section reports its path"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        del data["poi_cases"]
        with pytest.raises(SchemaError) as exc_info:
            parse_document(yaml.safe_dump(data, sort_keys=False))
        assert exc_info.value.path == "/poi_cases"
        assert exc_info.value.expected == "required key"

    def test_unknown_key(self, gdrts_doc):
        """Test that an unknown key reports its path"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        data["parameters"][1]["colour"] = "red"
        with pytest.raises(SchemaError) as exc_info:
            parse_document(yaml.safe_dump(data, sort_keys=False))
        assert exc_info.value.path == "/parameters/1/colour"

    def test_wrong_type(self, gdrts_doc):
        """Test that a mistyped value reports its path"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        data["parameters"][0]["range"]["lo"] = "low"
        with pytest.raises(SchemaError) as exc_info:
            parse_document(yaml.safe_dump(data, sort_keys=False))
        assert exc_info.value.path == "/parameters/0/range/lo"
        assert exc_info.value.found == "'low'"

    def test_sbd_cycle_is_schema_error(self, gdrts_doc):
        """Test that tree errors surface as schema errors at the SBD"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        data["sbd"]["nodes"][0]["parent"] = "IF-1"
        with pytest.raises(SchemaError) as exc_info:
            parse_document(yaml.safe_dump(data, sort_keys=False))
        assert exc_info.value.path == "/sbd"

    def test_core_schema_booleans(self, gdrts_doc):
        """Test that yes/no/on/off stay strings"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        del data["title"]
        text = yaml.safe_dump(data, sort_keys=False) + "title: no\n"
        assert parse_document(text).title == "no"

    @pytest.mark.parametrize("title", ["1:30", "2001-12-14", "1_000", "0b101", "<<"])
    def test_core_schema_strings(self, gdrts_doc, title):
        """Test that sexagesimal, timestamp, underscore and merge forms stay strings"""
        data = yaml.safe_load(serialize_document(gdrts_doc))
        del data["title"]
        text = yaml.safe_dump(data, sort_keys=False) + f"title: {title}\n"
        assert parse_document(text).title == title

    def test_core_schema_numbers(self):
        """Test exponent floats without a dot"""
        text = (FIXTURES / "gdrts.htd.yaml").read_text(encoding="utf-8")
        doc = parse_document(text.replace("    value: 12.6\n", "    value: 126e-1\n", 1))
        assert doc.parameter("PAR-1").nominal.value == 12.6

    def test_duplicate_key(self):
        """Test that a repeated key is refused at its line"""
        text = (FIXTURES / "gdrts.htd.yaml").read_text(encoding="utf-8")
        with pytest.raises(DocumentSyntaxError) as exc_info:
            parse_document(text + "title: second title\n")
        assert exc_info.value.line == len(text.splitlines()) + 1
        assert "duplicate key 'title'" in str(exc_info.value)

    def test_nested_duplicate_key(self):
        """Test that duplicates inside nested mappings are refused too"""
        with pytest.raises(DocumentSyntaxError) as exc_info:
            parse_document("id: x\ntest_case:\n  narrative: a\n  narrative: b\n")
        assert exc_info.value.line == 4


class TestSkeleton:
    """Test suite for skeleton_document"""

    def test_skeleton_valid(self):
        """Test that the skeleton validates and roundtrips"""
        doc = skeleton_document("mixed")
        assert validate_document(doc).ok
        assert parse_document(serialize_document(doc)) == doc

    def test_proposed_aspects(self):
        """Test that ES aspects follow the setup type"""
        doc = skeleton_document("mixed")
        assert doc.experiment_spec.setup_type == "mixed"
        assert list(doc.experiment_spec.setup_uncertainties) == MIXED_ASPECTS


class TestRenderReport:
    """Test suite for render_report"""

    def test_sections(self, gdrts_doc):
        """Test that every section and parameter appears"""
        text = render_report(gdrts_doc)
        for heading in (
            "## Test description",
            "## PoI viewpoint",
            "## SC definition and diagram",
            "## SC parameter analysis",
            "## ES viewpoint",
        ):
            assert heading in text
        for param in gdrts_doc.parameters:
            assert f"| {param.id} |" in text
        assert "```dot\ndigraph SBD {" in text
        assert "Components without identified parameters: PNDC-AMP" in text
        assert "ranking: pending" in text
        assert "ERROR" not in text
        assert "## Delay characterization" not in text

    def test_ranking_table(self, gdrts_doc):
        """Test the ranking table after write-back"""
        ranking = Ranking(
            metric="phase_error",
            entries=(
                RankEntry(param="PAR-1", magnitude=2.04, rank=1),
                RankEntry(param="PAR-3", magnitude=0.03, rank=2),
            ),
        )
        text = render_report(writeback_ranking(gdrts_doc, "POI-1", ranking))
        assert "| Rank | Factor | Name | abs(EE) |" in text
        assert "| 1 | PAR-1 | communication latency | 2.04 |" in text
        assert "POI-1: 1" in text

    def test_delay_section(self, gdrts_doc, delay_values):
        """Test the delay characterization figures"""
        samples = DelaySamples.from_values(delay_values)
        hist = bin_delays(samples, 100)
        text = render_report(gdrts_doc, summarize(hist, samples), hist)
        assert "## Delay characterization" in text
        assert "Mode bin 41 " in text
        assert "ρ = 6.46 %" in text
        assert "First bin ρ = 0.001 %, last bin ρ = 0.003 %" in text
        assert "| 99 |" in text

    def test_deterministic(self, menb_doc):
        """Test byte-identical output for the same document"""
        assert render_report(menb_doc) == render_report(menb_doc)

    def test_pipe_escaped(self, gdrts_doc):
        """Test that table cells escape pipes"""
        param = gdrts_doc.parameter("PAR-2").model_copy(update={"name": "loss | rate"})
        assert "loss \\| rate" in render_report(gdrts_doc.replace_parameter(param))
