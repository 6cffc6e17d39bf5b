"""
Document model for the Holistic Test Description with uncertainty extensions
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.errors import ExpressionError, UnknownId
from src.expressions import parse_expression
from src.sbd import SystemBreakdown
from src.uncertainty import UncertaintyRepr

Status = Literal["draft", "final"]
Framing = Literal["aleatory", "epistemic"]
Objective = Literal["uncertainty_analysis", "sensitivity_analysis", "scaling_analysis"]
SetupType = Literal["software_based", "hardware_based", "mixed"]
EsCategory = Literal["representational", "parametric", "measurement", "process"]
TaxonomyTag = Literal[
    "model_parameter",
    "measurement_error",
    "environmental_input",
    "communication",
    "configuration",
    "numerical_artifact",
]


class _Model(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Quantity(_Model):
    """A value with an opaque unit string"""

    value: float
    unit: str = ""


class ValueRange(_Model):
    """Range of variation of a parameter (ordering is checked by validation)"""

    lo: float
    hi: float
    unit: str = ""


class TestCase(_Model):
    __test__ = False

    narrative: str = ""
    variability_attributes: tuple[str, ...] = ()
    quality_attributes: tuple[str, ...] = ()
    poi_factor_analysis_ref: tuple[str, ...] | None = None


class QualificationStrategy(_Model):
    narrative: str = ""
    uncertainty_identification: str = ""
    uncertainty_management_strategy: str = ""


class TestSpec(_Model):
    __test__ = False

    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    uncertainty_source_refs: tuple[str, ...] = ()


class InstrumentPrecision(_Model):
    instrument: str
    precision: Quantity


class MeasurementUncertainty(_Model):
    metric: str
    representation: UncertaintyRepr


class ExperimentSpec(_Model):
    setup_type: SetupType = "software_based"
    setup_uncertainties: tuple[str, ...] = ()
    equipment_precision: tuple[InstrumentPrecision, ...] = ()
    measurement_uncertainty: tuple[MeasurementUncertainty, ...] = ()
    uncertainty_management: str = ""


class TargetMetric(_Model):
    name: str = Field(min_length=1)
    unit: str = ""
    formula: str | None = None

    @field_validator("formula")
    @classmethod
    def _parses(cls, formula: str | None) -> str | None:
        if formula is not None:
            try:
                parse_expression(formula)
            except ExpressionError as err:
                raise ValueError(f"invalid formula: {err}") from err
        return formula


class RankEntry(_Model):
    param: str
    magnitude: float
    rank: int = Field(ge=1)


class Ranking(_Model):
    """Factors ordered by |elementary effect| on one metric"""

    metric: str
    entries: tuple[RankEntry, ...] = ()

    def param_ids(self) -> list[str]:
        return [entry.param for entry in self.entries]


class PoiCase(_Model):
    """Purpose of Investigation with its target metrics and assigned factors"""

    id: str = Field(min_length=1)
    objective: Objective
    description: str = ""
    target_metrics: tuple[TargetMetric, ...] = ()
    assigned_factors: tuple[str, ...] = ()
    ranking: Ranking | None = None

    def metric(self, name: str) -> TargetMetric:
        for metric in self.target_metrics:
            if metric.name == name:
                return metric
        raise UnknownId("target metric", name)


class UncertainParameter(_Model):
    """One row of the SC parameter analysis"""

    id: str = Field(min_length=1)
    name: str
    component_ref: str
    framing: Framing
    representation: UncertaintyRepr
    nominal: Quantity
    range: ValueRange
    taxonomy_tags: tuple[TaxonomyTag, ...] = ()
    poi_assignments: tuple[str, ...] = ()
    screening_selected: bool = False


class EsEntry(_Model):
    aspect: str
    category: EsCategory
    mitigation: str = ""
    linked_parameters: tuple[str, ...] = ()


class EsViewpoint(_Model):
    entries: tuple[EsEntry, ...] = ()


class HtdDocument(_Model):
    """The complete test description bundle replacing the multi-sheet workbook"""

    id: str
    title: str
    status: Status
    test_case: TestCase
    qualification_strategy: QualificationStrategy
    test_spec: TestSpec
    experiment_spec: ExperimentSpec
    poi_cases: tuple[PoiCase, ...]
    sbd: SystemBreakdown
    parameters: tuple[UncertainParameter, ...]
    es_viewpoint: EsViewpoint

    def poi(self, poi_id: str) -> PoiCase:
        for poi in self.poi_cases:
            if poi.id == poi_id:
                return poi
        raise UnknownId("PoI", poi_id)

    def parameter(self, param_id: str) -> UncertainParameter:
        for param in self.parameters:
            if param.id == param_id:
                return param
        raise UnknownId("parameter", param_id)

    def replace_poi(self, poi: PoiCase) -> "HtdDocument":
        cases = tuple(poi if case.id == poi.id else case for case in self.poi_cases)
        return self.model_copy(update={"poi_cases": cases})

    def replace_parameter(self, param: UncertainParameter) -> "HtdDocument":
        params = tuple(param if p.id == param.id else p for p in self.parameters)
        return self.model_copy(update={"parameters": params})
