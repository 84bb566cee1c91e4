import heapq
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Callable,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    TypeVar,
)

from kinship import config, metrics
from kinship.core.exceptions import (
    DimensionMismatchError,
    PersonOutOfRangeError,
    UnknownPersonError,
)
from kinship.core.relation_algebra import (
    RelationCode,
    RelationRegistry,
    canonical_inverse,
)

logger = logging.getLogger(__name__)

U64_MAX = 2**64 - 1

Cell = Tuple[int, int]
T = TypeVar("T")
R = TypeVar("R")


class IdMap:
    """Двунаправленное отображение внешний id <-> плотный индекс 1..n."""

    def __init__(self, ids: Iterable[str] = ()):
        self._ids: Tuple[str, ...] = tuple(ids)
        self._index: Dict[str, int] = {}
        for position, external_id in enumerate(self._ids, start=1):
            if external_id in self._index:
                raise ValueError(f"Duplicate person id {external_id!r}")
            self._index[external_id] = position

    @property
    def n(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> Tuple[str, ...]:
        return self._ids

    def index(self, external_id: str) -> int:
        try:
            return self._index[external_id]
        except KeyError:
            raise UnknownPersonError(external_id)

    def external(self, index: int) -> str:
        return self._ids[index - 1]

    def __contains__(self, external_id: str) -> bool:
        return external_id in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IdMap) and self._ids == other._ids

    def __repr__(self) -> str:
        return f"<IdMap(n={self.n})>"


def _check_person(person: int, n: int) -> None:
    if not 1 <= person <= n:
        raise PersonOutOfRangeError(person, n)


def _group_rows(cells: Mapping[Cell, T]) -> Dict[int, Tuple[Tuple[int, T], ...]]:
    rows: Dict[int, List[Tuple[int, T]]] = {}
    for (row, col), value in sorted(cells.items(), key=lambda item: item[0]):
        rows.setdefault(row, []).append((col, value))
    return {row: tuple(entries) for row, entries in rows.items()}


@dataclass(frozen=True)
class RelationshipMatrix:
    """
    Матрица отношений T: разреженная, направленная, многозначная.

    Ячейка (i, j) хранит коды, описывающие персону j относительно персоны i.
    Аннотации хранят альтернативные обратные коды для ячеек, добавленных
    симметризацией.
    """

    id_map: IdMap
    cells: Mapping[Cell, Tuple[RelationCode, ...]]
    annotations: Mapping[Cell, Tuple[RelationCode, ...]] = field(default_factory=dict)

    def __post_init__(self):
        n = self.id_map.n
        normalized: Dict[Cell, Tuple[RelationCode, ...]] = {}
        for (row, col), codes in self.cells.items():
            _check_person(row, n)
            _check_person(col, n)
            if row == col:
                raise ValueError(f"Self relationship at ({row},{col}) is not allowed")
            if not codes:
                raise ValueError(f"Cell ({row},{col}) must not be empty")
            normalized[(row, col)] = tuple(sorted(set(codes)))
        object.__setattr__(self, "cells", normalized)

    @property
    def n(self) -> int:
        return self.id_map.n

    def codes(self, row: int, col: int) -> Tuple[RelationCode, ...]:
        return self.cells.get((row, col), ())

    @cached_property
    def rows(self) -> Dict[int, Tuple[Tuple[int, Tuple[RelationCode, ...]], ...]]:
        return _group_rows(self.cells)

    @cached_property
    def predecessors(self) -> Dict[int, Tuple[int, ...]]:
        result: Dict[int, List[int]] = {}
        for row, col in sorted(self.cells):
            result.setdefault(col, []).append(row)
        return {col: tuple(rows) for col, rows in result.items()}

    def triples(self) -> List[Tuple[int, int, RelationCode]]:
        """Все (строка, столбец, код) в детерминированном порядке."""
        return [
            (row, col, code)
            for (row, col), codes in sorted(self.cells.items())
            for code in codes
        ]


@dataclass(frozen=True)
class CountMatrix:
    """Числовая матрица счётчиков блужданий (M, M^2, ..., M^rho)."""

    n: int
    counts: Mapping[Cell, int]
    saturated: bool = False

    def __post_init__(self):
        for (row, col), value in self.counts.items():
            _check_person(row, self.n)
            _check_person(col, self.n)
            if value <= 0:
                raise ValueError(f"Stored counts must be positive, got {value}")

    @classmethod
    def identity(cls, n: int) -> "CountMatrix":
        return cls(n, {(i, i): 1 for i in range(1, n + 1)})

    def get(self, row: int, col: int) -> int:
        return self.counts.get((row, col), 0)

    @cached_property
    def rows(self) -> Dict[int, Tuple[Tuple[int, int], ...]]:
        return _group_rows(self.counts)


@dataclass(frozen=True)
class PathRecord:
    """
    Записанный путь: персоны и коды вперемешку, например "1_F_2_DHB_3".

    Коды записаны в направлении пути. Для дуг, пройденных против направления
    записи в матрице, reverse=True, код уже обращён, а остальные обратные
    кандидаты лежат в alternatives.
    """

    persons: Tuple[int, ...]
    codes: Tuple[RelationCode, ...]
    reverse: Tuple[bool, ...] = ()
    alternatives: Tuple[Tuple[RelationCode, ...], ...] = ()

    def __post_init__(self):
        if not self.codes:
            raise ValueError("Path must contain at least one relation")
        if len(self.persons) != len(self.codes) + 1:
            raise ValueError(
                f"Path with {len(self.codes)} codes needs {len(self.codes) + 1} persons"
            )
        if not self.reverse:
            object.__setattr__(self, "reverse", (False,) * len(self.codes))
        if not self.alternatives:
            object.__setattr__(self, "alternatives", ((),) * len(self.codes))

    @property
    def source(self) -> int:
        return self.persons[0]

    @property
    def target(self) -> int:
        return self.persons[-1]

    @property
    def length(self) -> int:
        return len(self.codes)

    @property
    def sort_key(self) -> Tuple[Tuple[int, ...], Tuple[str, ...], Tuple[bool, ...]]:
        return self.persons, tuple(str(code) for code in self.codes), self.reverse

    def render(self, label: Optional[Callable[[int], str]] = None) -> str:
        label = label or str
        parts = [label(self.persons[0])]
        for code, person in zip(self.codes, self.persons[1:]):
            parts.append(str(code))
            parts.append(label(person))
        return "_".join(parts)

    def join(self, other: "PathRecord") -> "PathRecord":
        """Склеивает два пути в общей персоне."""
        if self.target != other.source:
            raise ValueError(
                f"Cannot join path ending at {self.target} with path starting at {other.source}"
            )
        return PathRecord(
            self.persons + other.persons[1:],
            self.codes + other.codes,
            self.reverse + other.reverse,
            self.alternatives + other.alternatives,
        )

    def reversed_path(self, reg: RelationRegistry) -> "PathRecord":
        """Тот же путь в обратную сторону с каноническими обратными кодами."""
        codes = []
        alternatives = []
        for code in reversed(self.codes):
            first, rest = canonical_inverse(code, reg)
            codes.append(first)
            alternatives.append(rest)
        return PathRecord(
            tuple(reversed(self.persons)),
            tuple(codes),
            tuple(not flag for flag in reversed(self.reverse)),
            tuple(alternatives),
        )

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class PathMatrix:
    """Матрица записанных путей; не более cap путей в ячейке."""

    n: int
    cells: Mapping[Cell, Tuple[PathRecord, ...]]
    truncated: bool = False

    @classmethod
    def from_relationships(cls, matrix: RelationshipMatrix) -> "PathMatrix":
        """Пути длины 1: по одной записи на каждый код ячейки."""
        cells = {
            (row, col): tuple(PathRecord((row, col), (code,)) for code in codes)
            for (row, col), codes in matrix.cells.items()
        }
        return cls(matrix.n, cells)

    def get(self, row: int, col: int) -> Tuple[PathRecord, ...]:
        return self.cells.get((row, col), ())

    @cached_property
    def rows(self) -> Dict[int, Tuple[Tuple[int, Tuple[PathRecord, ...]], ...]]:
        return _group_rows(self.cells)


# --- Параллельная обработка строк ---


def _map_rows(func: Callable[[T], R], rows: Sequence[T], threads: Optional[int]) -> List[R]:
    """Применяет func к строкам; порядок результатов совпадает с порядком строк."""
    threads = config.THREADS if threads is None else threads
    if threads <= 1 or len(rows) < 2:
        return [func(row) for row in rows]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, rows))


# --- Операции ---


def binarize(matrix: RelationshipMatrix) -> CountMatrix:
    return CountMatrix(matrix.n, {cell: 1 for cell in matrix.cells})


def mul_count(
    a: CountMatrix, b: CountMatrix, threads: Optional[int] = None
) -> CountMatrix:
    """
    Произведение счётных матриц: result(x,y) = sum_z a(x,z) * b(z,y).

    Значения выше 2^64-1 насыщаются, флаг saturated наследуется от операндов.

    Raises:
        DimensionMismatchError: Размеры операндов различаются.
    """
    if a.n != b.n:
        raise DimensionMismatchError(a.n, b.n)
    b_rows = b.rows

    def row_product(x: int) -> Tuple[int, Dict[int, int]]:
        acc: Dict[int, int] = {}
        for z, left in a.rows[x]:
            for y, right in b_rows.get(z, ()):
                acc[y] = acc.get(y, 0) + left * right
        return x, acc

    saturated = a.saturated or b.saturated
    counts: Dict[Cell, int] = {}
    for x, acc in _map_rows(row_product, sorted(a.rows), threads):
        for y in sorted(acc):
            value = acc[y]
            if value > U64_MAX:
                value = U64_MAX
                saturated = True
            counts[(x, y)] = value

    if saturated and not (a.saturated or b.saturated):
        logger.warning(f"Walk counts exceeded 64 bits in a {a.n}x{a.n} product")
    metrics.MATRIX_PRODUCTS.labels(semiring="count").inc()
    return CountMatrix(a.n, counts, saturated)


def pow_count(m: CountMatrix, rho: int, threads: Optional[int] = None) -> CountMatrix:
    """M^rho возведением в квадрат; rho >= 1."""
    if rho < 1:
        raise ValueError(f"Power must be at least 1, got {rho}")
    result: Optional[CountMatrix] = None
    base = m
    while rho:
        if rho & 1:
            result = base if result is None else mul_count(result, base, threads)
        rho >>= 1
        if rho:
            base = mul_count(base, base, threads)
    return result


def mul_paths(
    a: PathMatrix, b: PathMatrix, cap: Optional[int] = None, threads: Optional[int] = None
) -> PathMatrix:
    """
    Произведение матриц путей: в ячейке (x,y) все склейки путей x->z и z->y.

    Пути в ячейке отсортированы по последовательности персон, затем по кодам;
    если их больше cap, остаются первые cap и ставится флаг truncated.

    Raises:
        DimensionMismatchError: Размеры операндов различаются.
    """
    cap = config.PATH_CAP if cap is None else cap
    if cap < 1:
        raise ValueError(f"Path cap must be at least 1, got {cap}")
    if a.n != b.n:
        raise DimensionMismatchError(a.n, b.n)
    b_rows = b.rows

    def row_product(x: int) -> Tuple[int, Dict[int, Tuple[PathRecord, ...]], bool]:
        acc: Dict[int, List[PathRecord]] = {}
        for z, left_paths in a.rows[x]:
            for y, right_paths in b_rows.get(z, ()):
                bucket = acc.setdefault(y, [])
                for left in left_paths:
                    for right in right_paths:
                        bucket.append(left.join(right))
        row: Dict[int, Tuple[PathRecord, ...]] = {}
        dropped = False
        for y in sorted(acc):
            records = acc[y]
            if len(records) > cap:
                records = heapq.nsmallest(cap, records, key=lambda p: p.sort_key)
                dropped = True
            else:
                records.sort(key=lambda p: p.sort_key)
            row[y] = tuple(records)
        return x, row, dropped

    truncated = a.truncated or b.truncated
    cells: Dict[Cell, Tuple[PathRecord, ...]] = {}
    for x, row, dropped in _map_rows(row_product, sorted(a.rows), threads):
        truncated = truncated or dropped
        for y, records in row.items():
            cells[(x, y)] = records

    metrics.MATRIX_PRODUCTS.labels(semiring="path").inc()
    return PathMatrix(a.n, cells, truncated)


def pow_paths(
    p: PathMatrix, rho: int, cap: Optional[int] = None, threads: Optional[int] = None
) -> PathMatrix:
    """P^rho последовательным умножением справа на P."""
    if rho < 1:
        raise ValueError(f"Power must be at least 1, got {rho}")
    result = p
    for _ in range(rho - 1):
        result = mul_paths(result, p, cap, threads)
    return result


def _vec_mul(vector: Mapping[int, int], m: CountMatrix) -> Dict[int, int]:
    """Строка-вектор на матрицу в счётном полукольце с насыщением."""
    acc: Dict[int, int] = {}
    for z, left in vector.items():
        for y, right in m.rows.get(z, ()):
            acc[y] = min(acc.get(y, 0) + left * right, U64_MAX)
    return acc


def _least_walk(matrix: RelationshipMatrix, x: int, y: int, sigma: int) -> PathRecord:
    """Лексикографически наименьшее блуждание длины sigma из x в y."""
    # reaches[j] - персоны, из которых y достижим ровно за j шагов
    reaches: List[Set[int]] = [{y}]
    for _ in range(sigma - 1):
        previous = reaches[-1]
        layer: Set[int] = set()
        for v in previous:
            layer.update(matrix.predecessors.get(v, ()))
        reaches.append(layer)

    persons = [x]
    codes: List[RelationCode] = []
    current = x
    for step in range(sigma):
        remaining = sigma - step - 1
        for v, cell_codes in matrix.rows.get(current, ()):
            if v in reaches[remaining]:
                persons.append(v)
                codes.append(cell_codes[0])
                current = v
                break
        else:  # pragma: no cover - sigma пришла из прямого прохода
            raise RuntimeError(f"No walk of length {sigma} from {x} to {y}")
    return PathRecord(tuple(persons), tuple(codes))


def smallest_power_hit(
    matrix: RelationshipMatrix, x: int, y: int, max_rho: Optional[int] = None
) -> Optional[Tuple[int, PathRecord]]:
    """
    Наименьшая sigma с M^sigma(x,y) > 0 и лексикографически наименьший свидетель.

    Строка x матрицы M^sigma вычисляется умножением вектора на M, поэтому
    полные степени не строятся. По умолчанию max_rho = n-1: кратчайшее
    блуждание всегда простой путь.

    Returns:
        (sigma, свидетель) или None, если попадания нет в пределах max_rho.

    Raises:
        PersonOutOfRangeError: x или y вне 1..n.
    """
    n = matrix.n
    _check_person(x, n)
    _check_person(y, n)
    if x == y:
        raise ValueError("Source and target must differ")
    max_rho = n - 1 if max_rho is None else max_rho
    if max_rho < 1:
        raise ValueError(f"max_rho must be at least 1, got {max_rho}")

    m = binarize(matrix)
    frontier: Dict[int, int] = {x: 1}
    for sigma in range(1, max_rho + 1):
        frontier = _vec_mul(frontier, m)
        if frontier.get(y, 0) > 0:
            witness = _least_walk(matrix, x, y, sigma)
            logger.debug(f"Smallest power hit {x}->{y}: sigma={sigma}, witness {witness}")
            return sigma, witness
        if not frontier:
            break
    return None


def reachable(m: CountMatrix, x: int) -> Set[int]:
    """Персоны, достижимые из x хотя бы за один шаг."""
    _check_person(x, m.n)
    seen: Set[int] = set()
    queue = deque([x])
    while queue:
        u = queue.popleft()
        for v, _ in m.rows.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def are_relatives(m: CountMatrix, x: int, y: int) -> bool:
    """Родство как достижимость: существует rho с M^rho(x,y) > 0."""
    _check_person(x, m.n)
    _check_person(y, m.n)
    if x == y:
        raise ValueError("Source and target must differ")
    return y in reachable(m, x)
