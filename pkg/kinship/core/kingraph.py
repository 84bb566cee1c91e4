import heapq
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

from networkx.utils import UnionFind

from kinship import config
from kinship.core.exceptions import (
    BoundExceededError,
    NegativeWeightError,
    NotInvertibleError,
    PersonOutOfRangeError,
)
from kinship.core.relation_algebra import (
    RelationCode,
    RelationRegistry,
    canonical_inverse,
    glen,
    slen,
)
from kinship.core.rmatrix import PathRecord, RelationshipMatrix

logger = logging.getLogger(__name__)

Cost = Union[int, float]


class Direction(str, Enum):
    """Направление дуги относительно записи в матрице."""

    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True, order=True)
class Arc:
    """
    Дуга графа родства.

    code - код в направлении обхода (для обратной дуги уже обращён),
    recorded - код, как он записан в матрице.
    """

    neighbor: int
    code: RelationCode
    direction: Direction
    recorded: RelationCode
    alternatives: Tuple[RelationCode, ...]
    glen: int
    slen: int

    @property
    def key(self) -> Tuple[str, bool, str]:
        return str(self.code), self.direction is Direction.REVERSE, str(self.recorded)


class KinGraph:
    """Неориентированное представление матрицы отношений с обратными дугами."""

    def __init__(self, matrix: RelationshipMatrix, reg: RelationRegistry):
        self.n = matrix.n
        self.registry = reg
        adjacency: Dict[int, List[Arc]] = {}
        for row, col, code in matrix.triples():
            adjacency.setdefault(row, []).append(
                Arc(col, code, Direction.FORWARD, code, (), glen(code, reg), slen(code, reg))
            )
            try:
                inverse, rest = canonical_inverse(code, reg)
            except NotInvertibleError as e:
                logger.warning(f"No reverse arc for ({row},{col}) {code}: {e}")
                continue
            adjacency.setdefault(col, []).append(
                Arc(
                    row,
                    inverse,
                    Direction.REVERSE,
                    code,
                    rest,
                    glen(inverse, reg),
                    slen(inverse, reg),
                )
            )
        self.adjacency: Dict[int, Tuple[Arc, ...]] = {
            person: tuple(sorted(arcs, key=lambda arc: (arc.neighbor, arc.key)))
            for person, arcs in adjacency.items()
        }
        logger.debug(
            f"KinGraph built: {self.n} persons, "
            f"{sum(len(arcs) for arcs in self.adjacency.values())} arcs"
        )

    def arcs(self, person: int) -> Tuple[Arc, ...]:
        return self.adjacency.get(person, ())

    def check_person(self, person: int) -> None:
        if not 1 <= person <= self.n:
            raise PersonOutOfRangeError(person, self.n)


@dataclass(frozen=True)
class FamilyPartition:
    """Разбиение персон на семьи (компоненты связности)."""

    component_id: Dict[int, int]
    families: Tuple[Tuple[int, ...], ...]


class MetricKind(str, Enum):
    HOP = "hop"
    KINSTEPS = "kinsteps"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Metric:
    """Стоимость дуги: 1 (hop), число примитивов (kinsteps) или wg*|glen| + ws*slen."""

    kind: MetricKind = MetricKind.HOP
    wg: float = 1.0
    ws: float = 1.0

    def __post_init__(self):
        if self.kind is MetricKind.CUSTOM:
            if self.wg < 0:
                raise NegativeWeightError("wg", self.wg)
            if self.ws < 0:
                raise NegativeWeightError("ws", self.ws)

    def cost(self, arc: Arc) -> Cost:
        if self.kind is MetricKind.HOP:
            return 1
        if self.kind is MetricKind.KINSTEPS:
            return len(arc.code)
        return self.wg * abs(arc.glen) + self.ws * arc.slen


def families(matrix: RelationshipMatrix) -> FamilyPartition:
    """
    Семьи как компоненты связности неориентированного представления.

    Семьи отсортированы по убыванию размера, затем по наименьшему участнику;
    метка семьи - её номер в этом порядке, начиная с 1.
    """
    forest = UnionFind(range(1, matrix.n + 1))
    for row, col in matrix.cells:
        forest.union(row, col)
    groups = sorted(
        (tuple(sorted(members)) for members in forest.to_sets()),
        key=lambda members: (-len(members), members[0]),
    )
    component_id = {
        person: label for label, members in enumerate(groups, start=1) for person in members
    }
    logger.info(f"Found {len(groups)} families among {matrix.n} persons")
    return FamilyPartition(component_id, tuple(groups))


def _to_record(persons: Tuple[int, ...], arcs: Tuple[Arc, ...]) -> PathRecord:
    return PathRecord(
        persons,
        tuple(arc.code for arc in arcs),
        tuple(arc.direction is Direction.REVERSE for arc in arcs),
        tuple(arc.alternatives for arc in arcs),
    )


def _drop_cycles(
    persons: Tuple[int, ...], arcs: Tuple[Arc, ...]
) -> Tuple[Tuple[int, ...], Tuple[Arc, ...]]:
    """Вырезает циклы из найденного блуждания."""
    kept_persons: List[int] = []
    kept_arcs: List[Arc] = []
    for i, person in enumerate(persons):
        if person in kept_persons:
            cut = kept_persons.index(person)
            del kept_persons[cut + 1 :]
            del kept_arcs[cut:]
        else:
            kept_persons.append(person)
            if i:
                kept_arcs.append(arcs[i - 1])
    return tuple(kept_persons), tuple(kept_arcs)


def _search(
    g: KinGraph,
    x: int,
    y: int,
    cost: Callable[[Arc], Cost],
    max_steps: Optional[int] = None,
) -> Optional[Tuple[Cost, PathRecord]]:
    """
    Поиск с фиксацией меток по ключу (стоимость, персоны, коды).

    Первое извлечение y даёт минимальную стоимость, а среди равных -
    наименьшую последовательность промежуточных персон. С max_steps метки
    фиксируются по паре (персона, число рёбер), и ищется самый дешёвый путь
    не длиннее max_steps.
    """
    g.check_person(x)
    g.check_person(y)
    if x == y:
        raise ValueError("Source and target must differ")
    if max_steps is not None and max_steps < 1:
        raise ValueError(f"max_steps must be at least 1, got {max_steps}")

    heap: List[Tuple[Cost, Tuple[int, ...], Tuple, Tuple[Arc, ...]]] = [(0, (x,), (), ())]
    settled = set()
    while heap:
        total, persons, keys, arcs = heapq.heappop(heap)
        u = persons[-1]
        label = u if max_steps is None else (u, len(arcs))
        if label in settled:
            continue
        settled.add(label)
        if u == y:
            if max_steps is not None:
                persons, arcs = _drop_cycles(persons, arcs)
            return total, _to_record(persons, arcs)
        if max_steps is not None and len(arcs) == max_steps:
            continue
        for arc in g.arcs(u):
            if max_steps is None and arc.neighbor in settled:
                continue
            heapq.heappush(
                heap,
                (
                    total + cost(arc),
                    persons + (arc.neighbor,),
                    keys + (arc.key,),
                    arcs + (arc,),
                ),
            )
    return None


def shortest_relationship(g: KinGraph, x: int, y: int) -> Optional[PathRecord]:
    """Путь с наименьшим числом рёбер в неориентированном представлении."""
    found = _search(g, x, y, Metric().cost)
    return None if found is None else found[1]


def weighted_distance(
    g: KinGraph, x: int, y: int, metric: Metric, max_steps: Optional[int] = None
) -> Optional[Tuple[Cost, PathRecord]]:
    """Путь минимальной стоимости по выбранной метрике, не длиннее max_steps рёбер."""
    return _search(g, x, y, metric.cost, max_steps)


def net_glen(path: PathRecord, reg: RelationRegistry) -> int:
    """
    Сумма g-len по пути.

    Коды обратных дуг хранятся уже обращёнными, поэтому их вклад равен
    g-len записанного кода с противоположным знаком.
    """
    return sum(glen(code, reg) for code in path.codes)


def net_slen(path: PathRecord, reg: RelationRegistry) -> int:
    return sum(slen(code, reg) for code in path.codes)


def path_cost(path: PathRecord, reg: RelationRegistry, metric: Metric) -> Cost:
    """Стоимость уже найденного пути по метрике."""
    if metric.kind is MetricKind.HOP:
        return path.length
    if metric.kind is MetricKind.KINSTEPS:
        return sum(len(code) for code in path.codes)
    return sum(
        metric.wg * abs(glen(code, reg)) + metric.ws * slen(code, reg)
        for code in path.codes
    )


def enumerate_paths(
    g: KinGraph, x: int, y: int, max_edges: int
) -> List[PathRecord]:
    """
    Все простые пути из x в y длиной не более max_edges.

    Параллельные дуги дают разные пути. Порядок: персоны, затем коды.

    Raises:
        BoundExceededError: max_edges больше KINSHIP_MAX_ENUM_EDGES.
    """
    if max_edges > config.MAX_ENUM_EDGES:
        raise BoundExceededError(max_edges, config.MAX_ENUM_EDGES)
    if max_edges < 1:
        raise ValueError(f"max_edges must be at least 1, got {max_edges}")
    g.check_person(x)
    g.check_person(y)
    if x == y:
        raise ValueError("Source and target must differ")

    found: List[Tuple[Tuple[int, ...], Tuple, Tuple[Arc, ...]]] = []

    def walk(persons: Tuple[int, ...], arcs: Tuple[Arc, ...]) -> None:
        u = persons[-1]
        if u == y:
            found.append((persons, tuple(arc.key for arc in arcs), arcs))
            return
        if len(arcs) == max_edges:
            return
        for arc in g.arcs(u):
            if arc.neighbor not in persons:
                walk(persons + (arc.neighbor,), arcs + (arc,))

    walk((x,), ())
    found.sort(key=lambda item: (item[0], item[1]))
    logger.debug(f"Enumerated {len(found)} paths {x}->{y} within {max_edges} edges")
    return [_to_record(persons, arcs) for persons, _, arcs in found]
