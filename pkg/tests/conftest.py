import random
from pathlib import Path
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import pytest

from kinship.core.relation_algebra import RelationCode, RelationRegistry
from kinship.core.rmatrix import IdMap, RelationshipMatrix
from kinship.services.ingest import load_edges

Triple = Tuple[str, str, str]

# Дед по отцу: 1 -F-> 2, 2 -DHB-> 3
GRANDFATHER_TRIPLES: Tuple[Triple, ...] = (("1", "2", "F"), ("2", "3", "DHB"))

SINGLE_SYMBOLS = ("F", "M", "S", "D", "H", "W", "B", "Z")


def matrix_from_triples(
    n: int, triples: Iterable[Tuple[int, int, str]]
) -> RelationshipMatrix:
    """Матрица по тройкам (строка, столбец, код) с внешними id "1".."n"."""
    cells: Dict[Tuple[int, int], set] = {}
    for row, col, code in triples:
        cells.setdefault((row, col), set()).add(RelationCode(tuple(code)))
    id_map = IdMap(str(i) for i in range(1, n + 1))
    return RelationshipMatrix(id_map, {cell: tuple(c) for cell, c in cells.items()})


# --- Фикстуры Реестра и Файлов ---
@pytest.fixture(scope="session")
def registry() -> RelationRegistry:
    """Реестр встроенного алфавита."""
    return RelationRegistry.builtin()


@pytest.fixture
def write_csv(tmp_path: Path) -> Callable[..., Path]:
    """Фабрика CSV-файлов рёбер с заголовком ego,alter,code."""

    def _write(
        triples: Sequence[Triple], name: str = "edges.csv", header: Optional[str] = None
    ) -> Path:
        path = tmp_path / name
        lines = [header if header is not None else "ego,alter,code"]
        lines.extend(",".join(triple) for triple in triples)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


@pytest.fixture
def grandfather_csv(write_csv) -> Path:
    return write_csv(GRANDFATHER_TRIPLES)


@pytest.fixture
def grandfather_matrix(
    grandfather_csv: Path, registry: RelationRegistry
) -> RelationshipMatrix:
    """Матрица примера с дедом по отцу, загруженная через CSV."""
    matrix, _ = load_edges(grandfather_csv, registry)
    return matrix


# --- Фикстуры Случайных Графов ---
@pytest.fixture
def random_matrix() -> Callable[..., RelationshipMatrix]:
    """
    Фабрика случайных матриц с одним односимвольным кодом в ячейке.

    Каждая упорядоченная пара (i, j), i != j, заполняется с вероятностью density.
    """

    def _build(n: int, density: float, seed: int) -> RelationshipMatrix:
        rng = random.Random(seed)
        triples = [
            (row, col, rng.choice(SINGLE_SYMBOLS))
            for row in range(1, n + 1)
            for col in range(1, n + 1)
            if row != col and rng.random() < density
        ]
        return matrix_from_triples(n, triples)

    return _build
