import logging
from pathlib import Path
from typing import List, Union

from kinship.cli.schemas import (
    ConflictEntrySchema,
    ConflictReportResponse,
    NetworkEdgeSchema,
    NetworkPersonSchema,
    NetworkResponse,
)
from kinship.core.netbuilder import ConflictReport, FamilyNetwork
from kinship.core.rmatrix import IdMap

logger = logging.getLogger(__name__)


def _quote(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def render_dot(network: FamilyNetwork, id_map: IdMap) -> str:
    """
    Сеть семьи в формате DOT.

    Каждое поколение - подграф с rank=same, уровни по возрастанию (раннее
    поколение выше). Противоречивые рёбра рисуются пунктиром.
    """
    lines: List[str] = ["digraph family_network {"]
    generations = network.generations()
    if generations:
        lines.append("  rankdir=TB;")
        lines.append("  node [shape=box];")
    for level, persons in generations.items():
        lines.append(f"  subgraph {_quote(f'generation_{level}')} {{")
        lines.append("    rank=same;")
        for person in persons:
            lines.append(f"    {_quote(id_map.external(person))};")
        lines.append("  }")
    for edge in network.edges:
        attributes = f"label={_quote(str(edge.code))}"
        if edge.conflicting:
            attributes += ", style=dashed, color=red"
        lines.append(
            f"  {_quote(id_map.external(edge.source))} -> "
            f"{_quote(id_map.external(edge.target))} [{attributes}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def network_response(network: FamilyNetwork, id_map: IdMap) -> NetworkResponse:
    anchors = set(network.anchors)
    return NetworkResponse(
        persons=[
            NetworkPersonSchema(
                id=id_map.external(person), level=level, anchor=person in anchors
            )
            for person, level in sorted(network.levels.items())
        ],
        edges=[
            NetworkEdgeSchema(
                source=id_map.external(edge.source),
                target=id_map.external(edge.target),
                code=str(edge.code),
                conflicting=edge.conflicting,
            )
            for edge in network.edges
        ],
        conflicts=[
            ConflictEntrySchema.from_entry(entry, id_map) for entry in network.conflicts
        ],
    )


def render_report_text(report: ConflictReport, id_map: IdMap) -> str:
    """Отчёт построчно: вид, персоны, коды, пояснение."""
    if report.is_clean:
        return "no conflicts\n"
    lines = []
    for entry in report:
        persons = ",".join(id_map.external(person) for person in entry.persons)
        codes = ",".join(str(code) for code in entry.codes)
        lines.append(f"{entry.kind.value}\t{persons}\t{codes}\t{entry.detail}")
    summary = ", ".join(f"{kind}: {count}" for kind, count in report.counts().items())
    lines.append(f"{len(report)} findings ({summary})")
    return "\n".join(lines) + "\n"


def render_report_json(report: ConflictReport, id_map: IdMap) -> str:
    return ConflictReportResponse.from_report(report, id_map).to_json() + "\n"


def write_text(path: Union[str, Path], content: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(content)
    logger.info(f"Wrote {len(content)} bytes to {path}")
