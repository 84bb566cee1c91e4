import csv
import logging
from pathlib import Path
from typing import Dict, List, Set, Tuple, Union

from pydantic import ValidationError

from kinship import metrics
from kinship.cli.schemas import EdgeTriple
from kinship.core.exceptions import NotInvertibleError, ParseError, UnknownSymbolError
from kinship.core.netbuilder import (
    ConflictEntry,
    ConflictKind,
    ConflictReport,
    pair_findings,
    parallel_findings,
)
from kinship.core.relation_algebra import (
    RelationCode,
    RelationRegistry,
    canonical_inverse,
    parse_code,
)
from kinship.core.rmatrix import Cell, IdMap, RelationshipMatrix

logger = logging.getLogger(__name__)

HEADER = ["ego", "alter", "code"]


def load_edges(
    path: Union[str, Path], reg: RelationRegistry
) -> Tuple[RelationshipMatrix, ConflictReport]:
    """
    Загружает тройки родства из CSV с заголовком ``ego,alter,code``.

    Код описывает alter относительно ego, как ячейка T[ego, alter].
    Плотные индексы выдаются в порядке первого появления id в файле.
    Повторы одинаковых троек отбрасываются молча, различные коды одной пары
    сохраняются и попадают в отчёт.

    Raises:
        ParseError: Некорректная строка, неизвестный символ кода, ego = alter.
    """
    ids: Dict[str, int] = {}
    cells: Dict[Cell, Set[RelationCode]] = {}
    duplicates = 0

    with open(path, newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is not None and [h.strip().lower() for h in header] != HEADER:
            raise ParseError(1, f"Expected header 'ego,alter,code', got {','.join(header)!r}")

        for row in reader:
            line_no = reader.line_num
            if not row or all(not field.strip() for field in row):
                continue
            if len(row) != 3:
                raise ParseError(line_no, f"Expected 3 fields, got {len(row)}")
            try:
                triple = EdgeTriple(ego=row[0], alter=row[1], code=row[2])
            except ValidationError as e:
                raise ParseError(line_no, e.errors()[0]["msg"])
            try:
                code = parse_code(triple.code, reg)
            except UnknownSymbolError as e:
                raise ParseError(line_no, str(e))

            ego = ids.setdefault(triple.ego, len(ids) + 1)
            alter = ids.setdefault(triple.alter, len(ids) + 1)
            bucket = cells.setdefault((ego, alter), set())
            if code in bucket:
                duplicates += 1
                logger.debug(f"Line {line_no}: duplicate triple {row} skipped")
                continue
            bucket.add(code)

    id_map = IdMap(sorted(ids, key=ids.get))
    matrix = RelationshipMatrix(id_map, {cell: tuple(codes) for cell, codes in cells.items()})
    report = parallel_findings(matrix, reg)

    loaded = sum(len(codes) for codes in cells.values())
    metrics.EDGES_LOADED_COUNTER.inc(loaded)
    logger.info(
        f"Loaded {loaded} triples over {id_map.n} persons from {path} "
        f"({duplicates} duplicates dropped, {len(report)} findings)"
    )
    return matrix, report


def symmetrize(
    matrix: RelationshipMatrix, reg: RelationRegistry
) -> Tuple[RelationshipMatrix, ConflictReport]:
    """
    Достраивает матрицу до симметричной по заполненности.

    Для кода c в (i,j) без встречной ячейки (j,i) во входной матрице
    добавляется наименьший код из invert(c), остальные кандидаты сохраняются
    в аннотациях. Затем все симметричные пары результата сверяются как в
    check_consistency, поэтому повторный вызов даёт тот же отчёт.
    Необратимые коды оставляют ячейку несимметричной и попадают в отчёт.
    """
    cells: Dict[Cell, Set[RelationCode]] = {
        cell: set(codes) for cell, codes in matrix.cells.items()
    }
    annotations: Dict[Cell, Set[RelationCode]] = {
        cell: set(codes) for cell, codes in matrix.annotations.items()
    }
    stuck: List[Tuple[Cell, RelationCode, NotInvertibleError]] = []

    for (row, col), codes in sorted(matrix.cells.items()):
        if (col, row) in matrix.cells:
            continue
        for code in codes:
            try:
                inverse, rest = canonical_inverse(code, reg)
            except NotInvertibleError as e:
                stuck.append(((row, col), code, e))
                continue
            cells.setdefault((col, row), set()).add(inverse)
            if rest:
                annotations.setdefault((col, row), set()).update(rest)

    added = len(cells) - len(matrix.cells)
    result = RelationshipMatrix(
        matrix.id_map,
        {cell: tuple(codes) for cell, codes in cells.items()},
        {
            cell: tuple(sorted(codes - cells[cell]))
            for cell, codes in annotations.items()
            if codes - cells[cell]
        },
    )
    # Необратимый код в паре уже отмечен сверкой пар
    entries = [
        ConflictEntry(ConflictKind.CODE, cell, (code,), f"{e}; cell left asymmetric")
        for cell, code, e in stuck
        if (cell[1], cell[0]) not in cells
    ]
    report = ConflictReport(tuple(entries)).merged(pair_findings(result, reg))
    logger.info(f"Symmetrized matrix: {added} cells added, {len(report)} findings")
    return result, report


def export_edges(matrix: RelationshipMatrix, path: Union[str, Path]) -> int:
    """Записывает матрицу обратно в CSV; возвращает число строк."""
    rows = matrix.triples()
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(HEADER)
        for row, col, code in rows:
            writer.writerow(
                [matrix.id_map.external(row), matrix.id_map.external(col), str(code)]
            )
    logger.info(f"Exported {len(rows)} triples to {path}")
    return len(rows)
