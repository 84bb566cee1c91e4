import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from kinship.core.exceptions import NotInvertibleError
from kinship.core.relation_algebra import (
    RelationCode,
    RelationRegistry,
    gender_conflicts,
    glen,
    invert,
)
from kinship.core.rmatrix import PathRecord, RelationshipMatrix

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, RelationCode]


class ConflictKind(str, Enum):
    """Виды замечаний о качестве данных."""

    GENERATION = "generation-conflict"
    CODE = "code-conflict"
    PARALLEL = "parallel-relationship"


@dataclass(frozen=True)
class ConflictEntry:
    """Одно замечание: пара персон, коды и пояснение для эксперта."""

    kind: ConflictKind
    persons: Tuple[int, ...]
    codes: Tuple[RelationCode, ...]
    detail: str


@dataclass(frozen=True)
class ConflictReport:
    """Отчёт о противоречиях; пуст тогда и только тогда, когда данные согласованы."""

    entries: Tuple[ConflictEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def is_clean(self) -> bool:
        return not self.entries

    def of_kind(self, kind: ConflictKind) -> Tuple[ConflictEntry, ...]:
        return tuple(entry for entry in self.entries if entry.kind is kind)

    def counts(self) -> Dict[str, int]:
        return dict(sorted(Counter(entry.kind.value for entry in self.entries).items()))

    def merged(self, other: "ConflictReport") -> "ConflictReport":
        return ConflictReport(self.entries + other.entries)


@dataclass(frozen=True)
class GenerationAssignment:
    """Уровни поколений: больше - позднее поколение; якоря стоят на уровне 0."""

    level: Dict[int, int]
    anchors: Tuple[int, ...]


@dataclass(frozen=True)
class NetworkEdge:
    source: int
    target: int
    code: RelationCode
    conflicting: bool = False


@dataclass(frozen=True)
class FamilyNetwork:
    """Персоны на уровнях поколений, помеченные рёбра и отчёт о противоречиях."""

    levels: Dict[int, int]
    anchors: Tuple[int, ...]
    edges: Tuple[NetworkEdge, ...]
    conflicts: ConflictReport = field(default_factory=ConflictReport)

    def generations(self) -> Dict[int, Tuple[int, ...]]:
        """Уровень -> персоны, уровни по возрастанию."""
        grouped: Dict[int, List[int]] = {}
        for person in sorted(self.levels):
            grouped.setdefault(self.levels[person], []).append(person)
        return {level: tuple(grouped[level]) for level in sorted(grouped)}


def _edges_of(paths: Iterable[PathRecord]) -> List[Edge]:
    edges: Set[Edge] = set()
    for path in paths:
        for i, code in enumerate(path.codes):
            edges.add((path.persons[i], path.persons[i + 1], code))
    return sorted(edges, key=lambda edge: (edge[0], edge[1], str(edge[2])))


def assign_generations(
    paths: Sequence[PathRecord], reg: RelationRegistry
) -> Tuple[GenerationAssignment, ConflictReport]:
    """
    Расставляет персон по поколениям так, чтобы level(y) = level(x) - glen(c).

    В каждой компоненте наименьшая персона ставится на уровень 0, ограничения
    распространяются обходом в ширину по отсортированным рёбрам. Ребро,
    противоречащее уже назначенному уровню, попадает в отчёт и не учитывается:
    выигрывает ограничение, обработанное первым.

    Промежуточные участники составных кодов не материализуются: ребро
    ограничивает только суммарный g-len между концами.
    """
    edges = _edges_of(paths)
    incident: Dict[int, List[int]] = {}
    for index, (source, target, _) in enumerate(edges):
        incident.setdefault(source, []).append(index)
        if target != source:
            incident.setdefault(target, []).append(index)

    level: Dict[int, int] = {}
    anchors: List[int] = []
    processed: Set[int] = set()
    entries: List[ConflictEntry] = []

    for start in sorted(incident):
        if start in level:
            continue
        level[start] = 0
        anchors.append(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for index in incident[u]:
                if index in processed:
                    continue
                processed.add(index)
                source, target, code = edges[index]
                delta = -glen(code, reg)
                if u == source:
                    other, implied = target, level[source] + delta
                else:
                    other, implied = source, level[target] - delta
                if other not in level:
                    level[other] = implied
                    queue.append(other)
                elif level[other] != implied:
                    entries.append(
                        ConflictEntry(
                            ConflictKind.GENERATION,
                            (source, target),
                            (code,),
                            f"edge {source}->{target} ({code}) implies level {implied} "
                            f"for {other}, already assigned {level[other]}",
                        )
                    )

    if entries:
        logger.warning(f"{len(entries)} generation conflicts among {len(edges)} edges")
    return GenerationAssignment(level, tuple(anchors)), ConflictReport(tuple(entries))


def parallel_findings(matrix: RelationshipMatrix, reg: RelationRegistry) -> ConflictReport:
    """
    Ячейки с несколькими кодами: code-conflict при расхождении g-len,
    иначе parallel-relationship (информационное замечание).
    """
    entries: List[ConflictEntry] = []
    for (row, col), codes in sorted(matrix.cells.items()):
        if len(codes) < 2:
            continue
        glens = {glen(code, reg) for code in codes}
        if len(glens) > 1:
            entries.append(
                ConflictEntry(
                    ConflictKind.CODE,
                    (row, col),
                    codes,
                    f"parallel codes disagree on g-len: {sorted(glens)}",
                )
            )
        else:
            entries.append(
                ConflictEntry(
                    ConflictKind.PARALLEL,
                    (row, col),
                    codes,
                    f"{len(codes)} parallel codes recorded",
                )
            )
    return ConflictReport(tuple(entries))


def _gender_findings(
    matrix: RelationshipMatrix, reg: RelationRegistry, cell: Tuple[int, int]
) -> List[ConflictEntry]:
    entries: List[ConflictEntry] = []
    for code in matrix.codes(*cell):
        try:
            steps = gender_conflicts(code, reg)
        except NotInvertibleError:
            continue
        if steps:
            entries.append(
                ConflictEntry(
                    ConflictKind.CODE,
                    cell,
                    (code,),
                    f"{code} at ({cell[0]},{cell[1]}) "
                    f"is gender-inconsistent at step {steps[0]}",
                )
            )
    return entries


def pair_findings(
    matrix: RelationshipMatrix,
    reg: RelationRegistry,
    pairs: Optional[Iterable[Tuple[int, int]]] = None,
) -> ConflictReport:
    """
    Сверяет симметричные пары ячеек.

    Для кодов a в (i,j) и b в (j,i) пара противоречива, если b не входит в
    invert(a). Коды пары, противоречивые по полу, отмечаются отдельно.
    Каждая неупорядоченная пара проверяется один раз, со стороны меньшего
    индекса строки. pairs ограничивает проверку заданными парами.
    """
    if pairs is None:
        pairs = [
            (row, col)
            for row, col in matrix.cells
            if row < col and (col, row) in matrix.cells
        ]
    entries: List[ConflictEntry] = []
    for row, col in sorted(pairs):
        entries.extend(_gender_findings(matrix, reg, (row, col)))
        entries.extend(_gender_findings(matrix, reg, (col, row)))
        for a in matrix.codes(row, col):
            try:
                inverses = invert(a, reg)
            except NotInvertibleError as e:
                entries.append(
                    ConflictEntry(ConflictKind.CODE, (row, col), (a,), str(e))
                )
                continue
            for b in matrix.codes(col, row):
                if b not in inverses:
                    entries.append(
                        ConflictEntry(
                            ConflictKind.CODE,
                            (row, col),
                            (a, b),
                            f"{b} at ({col},{row}) is not an inverse of {a} at ({row},{col})",
                        )
                    )
    return ConflictReport(tuple(entries))


def check_consistency(matrix: RelationshipMatrix, reg: RelationRegistry) -> ConflictReport:
    """Параллельные коды и противоречивые симметричные пары."""
    return parallel_findings(matrix, reg).merged(pair_findings(matrix, reg))


def build_network(matrix: RelationshipMatrix, reg: RelationRegistry) -> FamilyNetwork:
    """
    Строит сеть семьи по всем ячейкам матрицы.

    Персоны без рёбер становятся отдельными якорями на уровне 0.
    """
    records = [PathRecord((row, col), (code,)) for row, col, code in matrix.triples()]
    assignment, generation_report = assign_generations(records, reg)

    levels = dict(assignment.level)
    anchors = list(assignment.anchors)
    for person in range(1, matrix.n + 1):
        if person not in levels:
            levels[person] = 0
            anchors.append(person)

    conflicting = {
        (entry.persons[0], entry.persons[1], entry.codes[0])
        for entry in generation_report
    }
    edges = tuple(
        NetworkEdge(row, col, code, (row, col, code) in conflicting)
        for row, col, code in matrix.triples()
    )
    report = parallel_findings(matrix, reg).merged(generation_report)
    logger.info(
        f"Family network: {len(levels)} persons, {len(edges)} edges, "
        f"{len(report)} findings"
    )
    return FamilyNetwork(dict(sorted(levels.items())), tuple(sorted(anchors)), edges, report)
