import random

import pytest

from kinship import config
from kinship.core.exceptions import BoundExceededError, NegativeWeightError
from kinship.core.kingraph import (
    Direction,
    KinGraph,
    Metric,
    MetricKind,
    enumerate_paths,
    families,
    net_glen,
    net_slen,
    path_cost,
    shortest_relationship,
    weighted_distance,
)
from kinship.core.rmatrix import RelationshipMatrix, smallest_power_hit
from kinship.services.ingest import symmetrize
from tests.conftest import matrix_from_triples


class SimpleUnionFind:
    """Независимая реализация системы непересекающихся множеств."""

    def __init__(self, n: int):
        self.parent = list(range(n + 1))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def transpose(matrix: RelationshipMatrix) -> RelationshipMatrix:
    return RelationshipMatrix(
        matrix.id_map, {(col, row): codes for (row, col), codes in matrix.cells.items()}
    )


# --- Семьи ---
def test_families_of_grandfather_example(grandfather_matrix):
    """Три персоны примера образуют одну семью."""
    partition = families(grandfather_matrix)

    assert partition.families == ((1, 2, 3),)
    assert partition.component_id == {1: 1, 2: 1, 3: 1}


def test_families_order_and_isolated_persons():
    """Семьи упорядочены по размеру, затем по наименьшему участнику."""
    # Arrange: {1,5}, {2,3,4}, {6}
    matrix = matrix_from_triples(6, [(5, 1, "S"), (2, 3, "B"), (4, 3, "Z")])

    # Act
    partition = families(matrix)

    # Assert
    assert partition.families == ((2, 3, 4), (1, 5), (6,))
    assert partition.component_id[6] == 3


@pytest.mark.parametrize("seed", range(5))
def test_families_match_union_find_oracle(seed):
    """Разбиение совпадает с независимым union-find и не зависит от транспонирования."""
    # Arrange
    rng = random.Random(seed)
    n = 200
    triples = set()
    while len(triples) < 150:
        row, col = rng.sample(range(1, n + 1), 2)
        triples.add((row, col, "B"))
    matrix = matrix_from_triples(n, triples)
    oracle = SimpleUnionFind(n)
    for row, col, _ in triples:
        oracle.union(row, col)

    # Act
    partition = families(matrix)

    # Assert
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            same = partition.component_id[a] == partition.component_id[b]
            assert same == (oracle.find(a) == oracle.find(b))
    assert families(transpose(matrix)) == partition
    assert sorted(p for family in partition.families for p in family) == list(
        range(1, n + 1)
    )


# --- Граф ---
def test_kingraph_adds_reverse_arcs(grandfather_matrix, registry):
    """Каждая запись даёт прямую дугу и обратную с каноническим обратным кодом."""
    g = KinGraph(grandfather_matrix, registry)

    arcs_of_3 = g.arcs(3)

    assert len(arcs_of_3) == 1
    arc = arcs_of_3[0]
    assert arc.neighbor == 2
    assert arc.direction is Direction.REVERSE
    assert str(arc.code) == "BWF"
    assert [str(code) for code in arc.alternatives] == ["BWM"]
    assert str(arc.recorded) == "DHB"


def test_shortest_relationship_uses_reverse_arcs(grandfather_matrix, registry):
    """Путь 3 -> 1 проходит дуги против записи."""
    g = KinGraph(grandfather_matrix, registry)

    path = shortest_relationship(g, 3, 1)

    assert str(path) == "3_BWF_2_D_1"
    assert path.reverse == (True, True)
    assert net_glen(path, registry) == 0


def test_shortest_relationship_none_across_families(registry):
    matrix = matrix_from_triples(4, [(1, 2, "F"), (3, 4, "S")])
    g = KinGraph(matrix, registry)

    assert shortest_relationship(g, 1, 4) is None


@pytest.mark.parametrize("seed", range(15))
def test_shortest_relationship_matches_symmetric_power(random_matrix, registry, seed):
    """Кратчайший путь в графе совпадает с наименьшей степенью симметризованной матрицы."""
    # Arrange
    matrix = random_matrix(12, 0.08, seed=seed)
    symmetric, _ = symmetrize(matrix, registry)
    g = KinGraph(matrix, registry)

    for x in range(1, matrix.n + 1):
        for y in range(1, matrix.n + 1):
            if x == y:
                continue
            # Act
            path = shortest_relationship(g, x, y)
            hit = smallest_power_hit(symmetric, x, y)

            # Assert
            if hit is None:
                assert path is None
            else:
                assert path.length == hit[0]
                assert path.persons == hit[1].persons


# --- Метрики ---
def test_kinsteps_cost_of_grandfather_example(grandfather_matrix, registry):
    """Стоимость kinsteps пути 1 -> 3 равна числу примитивов: 1 + 3."""
    g = KinGraph(grandfather_matrix, registry)

    cost, path = weighted_distance(g, 1, 3, Metric(MetricKind.KINSTEPS))

    assert cost == 4
    assert str(path) == "1_F_2_DHB_3"
    assert net_glen(path, registry) == 0
    assert net_slen(path, registry) == 2


def test_negative_weight_rejected():
    with pytest.raises(NegativeWeightError):
        Metric(MetricKind.CUSTOM, wg=-1.0, ws=1.0)


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("weights", [(1.0, 1.0), (2.0, 0.5), (0.0, 1.0)])
def test_custom_metric_matches_enumeration(random_matrix, registry, seed, weights):
    """Минимальная стоимость равна минимуму по всем простым путям."""
    # Arrange
    matrix = random_matrix(7, 0.2, seed=seed)
    g = KinGraph(matrix, registry)
    metric = Metric(MetricKind.CUSTOM, *weights)

    for x in range(1, matrix.n + 1):
        for y in range(1, matrix.n + 1):
            if x == y:
                continue
            # Act
            found = weighted_distance(g, x, y, metric)
            candidates = enumerate_paths(g, x, y, matrix.n - 1)

            # Assert
            if not candidates:
                assert found is None
                continue
            best = min(path_cost(path, registry, metric) for path in candidates)
            cost, path = found
            assert cost == pytest.approx(best)
            assert path_cost(path, registry, metric) == pytest.approx(cost)


def test_weighted_distance_respects_step_bound(registry):
    """Дешёвая длинная цепочка проигрывает прямому ребру, если шагов не хватает."""
    # Arrange
    matrix = matrix_from_triples(
        4, [(1, 2, "B"), (2, 3, "B"), (3, 4, "B"), (1, 4, "BBBB")]
    )
    g = KinGraph(matrix, registry)
    metric = Metric(MetricKind.KINSTEPS)

    # Act
    unbounded = weighted_distance(g, 1, 4, metric)
    bounded = weighted_distance(g, 1, 4, metric, max_steps=2)

    # Assert
    assert unbounded[0] == 3
    assert str(unbounded[1]) == "1_B_2_B_3_B_4"
    assert bounded[0] == 4
    assert str(bounded[1]) == "1_BBBB_4"
    assert weighted_distance(g, 1, 4, metric, max_steps=3) == unbounded


def test_weighted_distance_bounded_path_is_simple(registry):
    """Блуждание через рёбра нулевой стоимости возвращается без циклов."""
    matrix = matrix_from_triples(3, [(1, 2, "F"), (1, 3, "B")])
    g = KinGraph(matrix, registry)

    cost, path = weighted_distance(g, 1, 3, Metric(MetricKind.CUSTOM, 0.0, 1.0), 3)

    assert cost == 1
    assert str(path) == "1_B_3"


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("max_steps", [1, 2, 3])
def test_bounded_metric_matches_enumeration(random_matrix, registry, seed, max_steps):
    """С ограничением шагов стоимость равна минимуму по простым путям той же длины."""
    # Arrange
    matrix = random_matrix(7, 0.2, seed=seed)
    g = KinGraph(matrix, registry)
    metric = Metric(MetricKind.CUSTOM, 1.0, 0.5)

    for x in range(1, matrix.n + 1):
        for y in range(1, matrix.n + 1):
            if x == y:
                continue
            # Act
            found = weighted_distance(g, x, y, metric, max_steps)
            candidates = enumerate_paths(g, x, y, max_steps)

            # Assert
            if not candidates:
                assert found is None
                continue
            best = min(path_cost(path, registry, metric) for path in candidates)
            cost, path = found
            assert cost == pytest.approx(best)
            assert path.length <= max_steps
            assert len(set(path.persons)) == len(path.persons)


# --- Перечисление путей ---
def test_enumerate_paths_in_clique(registry):
    """В 4-клике из 1 в 4 ровно пять простых путей."""
    # Arrange
    matrix = matrix_from_triples(
        4, [(i, j, "B") for i in range(1, 5) for j in range(i + 1, 5)]
    )
    g = KinGraph(matrix, registry)

    # Act
    paths = enumerate_paths(g, 1, 4, 4)

    # Assert
    assert [path.persons for path in paths] == [
        (1, 2, 3, 4),
        (1, 2, 4),
        (1, 3, 2, 4),
        (1, 3, 4),
        (1, 4),
    ]


def test_enumerate_paths_respects_bound(registry):
    matrix = matrix_from_triples(
        4, [(i, j, "B") for i in range(1, 5) for j in range(i + 1, 5)]
    )
    g = KinGraph(matrix, registry)

    assert [path.persons for path in enumerate_paths(g, 1, 4, 1)] == [(1, 4)]


def test_enumerate_paths_parallel_codes(registry):
    """Параллельные коды дают разные пути."""
    matrix = matrix_from_triples(2, [(1, 2, "F"), (1, 2, "M")])
    g = KinGraph(matrix, registry)

    paths = enumerate_paths(g, 1, 2, 2)

    assert [str(path) for path in paths] == ["1_F_2", "1_M_2"]


def test_enumerate_paths_bound_exceeded(grandfather_matrix, registry):
    g = KinGraph(grandfather_matrix, registry)

    with pytest.raises(BoundExceededError):
        enumerate_paths(g, 1, 3, config.MAX_ENUM_EDGES + 1)


# --- Суммарный g-len ---
def test_net_glen_of_path_and_its_reverse(grandfather_matrix, registry):
    """Путь, склеенный со своим обращением, имеет нулевой суммарный g-len."""
    g = KinGraph(grandfather_matrix, registry)
    forward = shortest_relationship(g, 1, 2)

    round_trip = forward.join(forward.reversed_path(registry))

    assert net_glen(forward, registry) == 1
    assert net_glen(round_trip, registry) == 0
    assert str(round_trip) == "1_F_2_D_1"
