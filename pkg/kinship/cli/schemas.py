from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from kinship.config import JSON_SCHEMA_VERSION
from kinship.core.netbuilder import ConflictEntry, ConflictKind, ConflictReport
from kinship.core.rmatrix import IdMap


class EdgeTriple(BaseModel):
    """Схема для валидации строки CSV ``ego,alter,code``."""

    ego: str
    alter: str
    code: str

    model_config = ConfigDict(str_strip_whitespace=True, frozen=True)

    @field_validator("ego", "alter", "code")
    def validate_not_empty(cls, v, info):
        """Поля не могут быть пустыми."""
        if not v:
            raise ValueError(f"Field '{info.field_name}' must not be empty")
        return v

    @model_validator(mode="after")
    def validate_distinct_persons(self):
        """Персона не может состоять в родстве сама с собой."""
        if self.ego == self.alter:
            raise ValueError(f"ego and alter are the same person ({self.ego})")
        return self


class VersionedResponse(BaseModel):
    """Базовая схема JSON-вывода с версией схемы."""

    schema_version: int = Field(
        JSON_SCHEMA_VERSION, serialization_alias="schema", description="Версия схемы"
    )

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, by_alias=True)


class ConflictEntrySchema(BaseModel):
    """Замечание о качестве данных с внешними идентификаторами."""

    kind: ConflictKind = Field(..., description="Вид замечания")
    persons: List[str] = Field(..., description="Внешние id персон")
    codes: List[str] = Field(..., description="Коды, участвующие в замечании")
    detail: str = Field(..., description="Пояснение для эксперта")

    @classmethod
    def from_entry(cls, entry: ConflictEntry, id_map: IdMap) -> "ConflictEntrySchema":
        """Фабричный метод: переводит плотные индексы во внешние id."""
        return cls(
            kind=entry.kind,
            persons=[id_map.external(person) for person in entry.persons],
            codes=[str(code) for code in entry.codes],
            detail=entry.detail,
        )


class ConflictReportResponse(VersionedResponse):
    """Схема отчёта о противоречиях."""

    clean: bool = Field(..., description="True, если замечаний нет")
    counts: dict = Field(default_factory=dict, description="Число замечаний по видам")
    entries: List[ConflictEntrySchema] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: ConflictReport, id_map: IdMap) -> "ConflictReportResponse":
        return cls(
            clean=report.is_clean,
            counts=report.counts(),
            entries=[ConflictEntrySchema.from_entry(entry, id_map) for entry in report],
        )


class FamilySchema(BaseModel):
    label: int = Field(..., description="Номер семьи (по убыванию размера)")
    members: List[str] = Field(..., description="Внешние id участников")


class FamiliesResponse(VersionedResponse):
    """Схема ответа со списком семей."""

    count: int
    families: List[FamilySchema]


class PathResponse(VersionedResponse):
    """Схема ответа на запрос пути между двумя персонами."""

    source: str
    target: str
    metric: str
    path: str = Field(..., description="Путь в виде 1_F_2_DHB_3")
    persons: List[str]
    codes: List[str]
    reverse: List[bool] = Field(..., description="Дуги, пройденные против записи")
    alternatives: List[List[str]] = Field(
        ..., description="Прочие обратные коды для обращённых дуг"
    )
    steps: int
    glen: int
    slen: int
    cost: Optional[float] = Field(None, description="Стоимость по метрике")


class PathListResponse(VersionedResponse):
    """Схема ответа с перечнем всех простых путей."""

    source: str
    target: str
    max_edges: int
    count: int
    paths: List[str]


class PowerCellSchema(BaseModel):
    row: str
    col: str
    count: int
    paths: Optional[List[str]] = None


class PowerResponse(VersionedResponse):
    """Схема ответа с ненулевыми ячейками M^rho."""

    rho: int
    saturated: bool
    truncated: Optional[bool] = None
    cells: List[PowerCellSchema]


class NetworkPersonSchema(BaseModel):
    id: str
    level: int
    anchor: bool


class NetworkEdgeSchema(BaseModel):
    source: str
    target: str
    code: str
    conflicting: bool


class NetworkResponse(VersionedResponse):
    """Схема экспорта сети семьи."""

    persons: List[NetworkPersonSchema]
    edges: List[NetworkEdgeSchema]
    conflicts: List[ConflictEntrySchema]
