import itertools
import random

import pytest

from kinship.core.netbuilder import (
    ConflictKind,
    ConflictReport,
    assign_generations,
    build_network,
    check_consistency,
)
from kinship.core.relation_algebra import glen, parse_code
from kinship.core.rmatrix import PathRecord
from kinship.services.ingest import load_edges
from tests.conftest import matrix_from_triples


def code_for_levels(source_level: int, target_level: int) -> str:
    """Код, согласованный с уровнями: level(target) = level(source) - glen."""
    delta = source_level - target_level
    if delta > 0:
        return "F" * delta
    if delta < 0:
        return "S" * -delta
    return "B"


def consistent_triples(n: int, extra: int, seed: int):
    """Случайное дерево поколений плюс дополнительные согласованные рёбра."""
    rng = random.Random(seed)
    level = {1: 0}
    pairs = {}
    for person in range(2, n + 1):
        parent = rng.randint(1, person - 1)
        level[person] = level[parent] + rng.choice([-1, 0, 1])
        pairs[(parent, person)] = code_for_levels(level[parent], level[person])
    while len(pairs) < n - 1 + extra:
        a, b = rng.sample(range(1, n + 1), 2)
        if (a, b) not in pairs and (b, a) not in pairs:
            pairs[(a, b)] = code_for_levels(level[a], level[b])
    return level, [(a, b, code) for (a, b), code in pairs.items()]


# --- Поколения ---
def test_levels_of_grandfather_example(grandfather_matrix, registry):
    """Отец на поколение раньше, внук на уровне деда."""
    network = build_network(grandfather_matrix, registry)

    assert network.levels == {1: 0, 2: -1, 3: 0}
    assert network.anchors == (1,)
    assert network.conflicts.is_clean
    assert network.generations() == {-1: (2,), 0: (1, 3)}


def test_planted_generation_conflict(registry):
    """Цикл с несогласованным g-len даёт ровно одно замечание."""
    # Arrange: 1 -F-> 2, 2 -F-> 3, 1 -S-> 3
    triples = [(1, 2, "F"), (2, 3, "F"), (1, 3, "S")]
    matrix = matrix_from_triples(3, triples)

    # Act
    network = build_network(matrix, registry)

    # Assert
    conflicts = network.conflicts.of_kind(ConflictKind.GENERATION)
    assert len(conflicts) == 1
    assert conflicts[0].persons == (2, 3)
    flagged = [edge for edge in network.edges if edge.conflicting]
    assert [(e.source, e.target, str(e.code)) for e in flagged] == [(2, 3, "F")]

    # Сеть без помеченного ребра согласована
    residual = matrix_from_triples(3, [t for t in triples if t != (2, 3, "F")])
    assert build_network(residual, registry).conflicts.is_clean


def test_isolated_persons_become_anchors(registry):
    matrix = matrix_from_triples(4, [(2, 3, "S")])

    network = build_network(matrix, registry)

    assert network.anchors == (1, 2, 4)
    assert network.levels == {1: 0, 2: 0, 3: 1, 4: 0}


@pytest.mark.parametrize("seed", range(20))
def test_consistent_networks_are_clean(registry, seed):
    """Согласованные по поколениям данные не дают замечаний и восстанавливают уровни."""
    # Arrange
    level, triples = consistent_triples(30, 15, seed)
    matrix = matrix_from_triples(30, triples)

    # Act
    network = build_network(matrix, registry)

    # Assert
    assert network.conflicts.is_clean
    assert network.anchors == (1,)
    assert network.levels == level


@pytest.mark.parametrize("seed", range(20))
def test_planted_conflict_on_tree_is_found_once(registry, seed):
    """Одно несогласованное ребро на дереве замыкает один цикл и даёт одно замечание."""
    # Arrange
    level, triples = consistent_triples(25, 0, seed)
    used = {(a, b) for a, b, _ in triples} | {(b, a) for a, b, _ in triples}
    rng = random.Random(seed + 1000)
    while True:
        a, b = rng.sample(range(1, 26), 2)
        if (a, b) not in used:
            break
    wrong = code_for_levels(level[a], level[b] + 1)
    planted = triples + [(a, b, wrong)]

    # Act
    network = build_network(matrix_from_triples(25, planted), registry)

    # Assert
    found = network.conflicts.of_kind(ConflictKind.GENERATION)
    assert len(found) == 1
    flagged = {(e.source, e.target, str(e.code)) for e in network.edges if e.conflicting}
    assert len(flagged) == 1
    residual = [t for t in planted if t not in flagged]
    assert build_network(matrix_from_triples(25, residual), registry).conflicts.is_clean


@pytest.mark.parametrize("seed", range(20))
def test_planted_conflicts_with_extra_cycles(registry, seed):
    """При нескольких циклах каждое замечание помечает ровно одно ребро, остаток согласован."""
    # Arrange
    level, triples = consistent_triples(25, 5, seed)
    used = {(a, b) for a, b, _ in triples} | {(b, a) for a, b, _ in triples}
    rng = random.Random(seed + 1000)
    while True:
        a, b = rng.sample(range(1, 26), 2)
        if (a, b) not in used:
            break
    wrong = code_for_levels(level[a], level[b] + 1)
    planted = triples + [(a, b, wrong)]

    # Act
    network = build_network(matrix_from_triples(25, planted), registry)

    # Assert
    found = network.conflicts.of_kind(ConflictKind.GENERATION)
    assert len(found) >= 1
    flagged = {(e.source, e.target, str(e.code)) for e in network.edges if e.conflicting}
    assert len(flagged) == len(found)
    residual = [t for t in planted if t not in flagged]
    assert build_network(matrix_from_triples(25, residual), registry).conflicts.is_clean


# --- Родословная из пяти персон ---
LINEAGE = [
    ("NAME1", "NAME2", "S"),
    ("NAME2", "NAME3", "S"),
    ("NAME3", "NAME4", "B"),
    ("NAME4", "NAME5", "S"),
    # противоречит остальным: по этому ребру NAME5 - отец NAME3
    ("NAME3", "NAME5", "F"),
]


def satisfiable(triples, registry, span: int = 4) -> bool:
    """Перебором ищет целые уровни в [-span, span], согласные со всеми рёбрами."""
    persons = sorted({p for a, b, _ in triples for p in (a, b)})
    steps = [(a, b, glen(parse_code(code, registry), registry)) for a, b, code in triples]
    for values in itertools.product(range(-span, span + 1), repeat=len(persons) - 1):
        level = dict(zip(persons, (0,) + values))
        if all(level[b] == level[a] - g for a, b, g in steps):
            return True
    return False


@pytest.fixture
def lineage_matrix(write_csv, registry):
    matrix, _ = load_edges(write_csv(LINEAGE, name="lineage.csv"), registry)
    return matrix


def test_lineage_with_contradictory_edge(lineage_matrix, registry):
    """Пять персон и одно противоречивое ребро дают ровно одно замечание."""
    # Act
    network = build_network(lineage_matrix, registry)

    # Assert
    label = lineage_matrix.id_map.external
    assert lineage_matrix.id_map.ids == ("NAME1", "NAME2", "NAME3", "NAME4", "NAME5")
    assert len(network.conflicts) == 1
    assert network.conflicts.entries[0].kind is ConflictKind.GENERATION
    flagged = [
        (label(e.source), label(e.target), str(e.code))
        for e in network.edges
        if e.conflicting
    ]
    assert len(flagged) == 1
    residual = [t for t in LINEAGE if t != flagged[0]]
    assert not satisfiable(LINEAGE, registry)
    assert satisfiable(residual, registry)


def test_lineage_without_contradiction_levels(write_csv, registry):
    """Без противоречивого ребра уровни совпадают с найденными перебором."""
    matrix, _ = load_edges(write_csv(LINEAGE[:-1]), registry)

    network = build_network(matrix, registry)

    label = matrix.id_map.external
    levels = {label(person): level for person, level in network.levels.items()}
    assert network.conflicts.is_clean
    assert levels == {"NAME1": 0, "NAME2": 1, "NAME3": 2, "NAME4": 2, "NAME5": 3}
    assert satisfiable(LINEAGE[:-1], registry)


def test_assign_generations_on_paths(registry, grandfather_matrix):
    """Уровни можно расставить по набору записанных путей."""
    path = PathRecord((1, 2, 3), tuple(code for _, _, code in grandfather_matrix.triples()))

    assignment, report = assign_generations([path], registry)

    assert assignment.level == {1: 0, 2: -1, 3: 0}
    assert report.is_clean


# --- Согласованность ---
def test_check_consistency_inverse_pair_is_clean(registry):
    """F в (1,2) и S в (2,1) согласованы."""
    matrix = matrix_from_triples(2, [(1, 2, "F"), (2, 1, "S")])

    assert check_consistency(matrix, registry).is_clean


def test_check_consistency_non_inverse_pair(registry):
    """F в обе стороны - противоречие."""
    matrix = matrix_from_triples(2, [(1, 2, "F"), (2, 1, "F")])

    report = check_consistency(matrix, registry)

    assert len(report) == 1
    entry = report.entries[0]
    assert entry.kind is ConflictKind.CODE
    assert entry.persons == (1, 2)


def test_check_consistency_parallel_codes(registry):
    """Параллельные коды: одинаковый g-len - информация, разный - противоречие."""
    matrix = matrix_from_triples(3, [(1, 2, "F"), (1, 2, "M"), (1, 3, "F"), (1, 3, "B")])

    report = check_consistency(matrix, registry)

    assert report.counts() == {"code-conflict": 1, "parallel-relationship": 1}
    assert report.of_kind(ConflictKind.PARALLEL)[0].persons == (1, 2)


def test_conflict_report_merge():
    assert ConflictReport().merged(ConflictReport()).is_clean
