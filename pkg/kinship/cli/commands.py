import argparse
import logging
import sys
from typing import List, Optional

from kinship import config, metrics
from kinship.cli.schemas import (
    FamiliesResponse,
    FamilySchema,
    PathListResponse,
    PathResponse,
    PowerCellSchema,
    PowerResponse,
)
from kinship.core.kingraph import (
    Metric,
    MetricKind,
    enumerate_paths,
    families,
    net_glen,
    net_slen,
    weighted_distance,
)
from kinship.core.netbuilder import ConflictReport, build_network
from kinship.core.rmatrix import (
    PathMatrix,
    PathRecord,
    are_relatives,
    binarize,
    pow_count,
    pow_paths,
    smallest_power_hit,
)
from kinship.services.export import (
    network_response,
    render_dot,
    render_report_json,
    render_report_text,
    write_text,
)
from kinship.services.ingest import export_edges
from kinship.services.workspace import Workspace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT_ERROR = 2
EXIT_CONFLICTS = 3


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT_ERROR


def _count_findings(report: ConflictReport) -> None:
    for kind, count in report.counts().items():
        metrics.CONFLICTS_COUNTER.labels(kind=kind).inc(count)


def _workspace(args: argparse.Namespace) -> Workspace:
    return Workspace.load(args.edges, args.registry)


def _annotate(ws: Workspace, path: PathRecord) -> PathRecord:
    """Помечает шаги, взятые из ячеек, которые добавила симметризация."""
    reverse = []
    alternatives = []
    for i, code in enumerate(path.codes):
        cell = (path.persons[i], path.persons[i + 1])
        inferred = code not in ws.matrix.codes(*cell)
        reverse.append(inferred)
        alternatives.append(ws.symmetric.annotations.get(cell, ()) if inferred else ())
    return PathRecord(path.persons, path.codes, tuple(reverse), tuple(alternatives))


# --- Команды ---


def cmd_families(args: argparse.Namespace) -> int:
    """Печатает семьи (компоненты связности симметризованной матрицы)."""
    ws = _workspace(args)
    partition = families(ws.symmetric)
    label = ws.id_map.external

    if args.json:
        response = FamiliesResponse(
            count=len(partition.families),
            families=[
                FamilySchema(label=number, members=[label(p) for p in members])
                for number, members in enumerate(partition.families, start=1)
            ],
        )
        print(response.to_json())
        return EXIT_OK

    count = len(partition.families)
    print(f"{count} {'family' if count == 1 else 'families'}")
    for number, members in enumerate(partition.families, start=1):
        print(
            f"family {number} ({len(members)}): "
            f"{', '.join(label(person) for person in members)}"
        )
    return EXIT_OK


def cmd_path(args: argparse.Namespace) -> int:
    """
    Печатает связь между двумя персонами в виде 1_F_2_DHB_3 со сводкой g-len/s-len.

    Метрика hop отвечает через наименьшую степень M^sigma симметризованной
    матрицы, остальные метрики - поиском минимальной стоимости по графу.
    """
    if args.source == args.target:
        return _usage_error("source and target must be different persons")
    ws = _workspace(args)
    x = ws.person(args.source)
    y = ws.person(args.target)
    metric = Metric(MetricKind(args.metric), args.wg, args.ws)

    if not are_relatives(ws.symmetric_binary, x, y):
        logger.info(f"{args.source} and {args.target} are in different families")
        print("NOT RELATED")
        return EXIT_NEGATIVE

    max_rho = args.max_rho or ws.matrix.n - 1
    cost = None
    if metric.kind is MetricKind.HOP:
        hit = smallest_power_hit(ws.symmetric, x, y, max_rho)
        path = None if hit is None else _annotate(ws, hit[1])
    else:
        found = weighted_distance(ws.graph, x, y, metric, args.max_rho)
        path = None
        if found is not None:
            cost, path = found
    if path is None:
        print(f"NOT FOUND WITHIN {max_rho} STEPS")
        return EXIT_NEGATIVE

    label = ws.id_map.external
    glen_total = net_glen(path, ws.registry)
    slen_total = net_slen(path, ws.registry)
    if args.json:
        response = PathResponse(
            source=args.source,
            target=args.target,
            metric=metric.kind.value,
            path=path.render(label),
            persons=[label(person) for person in path.persons],
            codes=[str(code) for code in path.codes],
            reverse=list(path.reverse),
            alternatives=[[str(c) for c in alts] for alts in path.alternatives],
            steps=path.length,
            glen=glen_total,
            slen=slen_total,
            cost=cost,
        )
        print(response.to_json())
        return EXIT_OK

    print(path.render(label))
    print(f"steps: {path.length}")
    print(f"g-len: {glen_total}")
    print(f"s-len: {slen_total}")
    if cost is not None:
        print(f"cost ({metric.kind.value}): {cost:g}")
    for i, alts in enumerate(path.alternatives, start=1):
        if alts:
            print(f"alternatives at step {i}: {', '.join(str(c) for c in alts)}")
    return EXIT_OK


def cmd_paths(args: argparse.Namespace) -> int:
    """Перечисляет все простые пути до заданной длины для ручной проверки."""
    if args.source == args.target:
        return _usage_error("source and target must be different persons")
    ws = _workspace(args)
    x = ws.person(args.source)
    y = ws.person(args.target)
    paths = enumerate_paths(ws.graph, x, y, args.max_edges)
    rendered = [path.render(ws.id_map.external) for path in paths]

    if args.json:
        response = PathListResponse(
            source=args.source,
            target=args.target,
            max_edges=args.max_edges,
            count=len(rendered),
            paths=rendered,
        )
        print(response.to_json())
    else:
        for line in rendered:
            print(line)
        print(f"{len(rendered)} paths")
    return EXIT_OK if rendered else EXIT_NEGATIVE


def cmd_power(args: argparse.Namespace) -> int:
    """Печатает ненулевые ячейки M^rho и, по запросу, записанные пути."""
    ws = _workspace(args)
    matrix = ws.symmetric if args.symmetric else ws.matrix
    counts = pow_count(binarize(matrix), args.rho, args.threads)
    paths: Optional[PathMatrix] = None
    if args.record_paths:
        paths = pow_paths(
            PathMatrix.from_relationships(matrix), args.rho, args.cap, args.threads
        )

    label = ws.id_map.external
    cells: List[PowerCellSchema] = []
    for (row, col), value in sorted(counts.counts.items()):
        recorded = None
        if paths is not None:
            recorded = [path.render(label) for path in paths.get(row, col)]
        cells.append(
            PowerCellSchema(row=label(row), col=label(col), count=value, paths=recorded)
        )

    if args.json:
        response = PowerResponse(
            rho=args.rho,
            saturated=counts.saturated,
            truncated=None if paths is None else paths.truncated,
            cells=cells,
        )
        print(response.to_json())
        return EXIT_OK

    for cell in cells:
        print(f"({cell.row},{cell.col}): {cell.count}")
        for rendered in cell.paths or ():
            print(f"  {rendered}")
    if counts.saturated:
        print("saturated: true")
    if paths is not None and paths.truncated:
        print("truncated: true")
    return EXIT_OK


def cmd_network(args: argparse.Namespace) -> int:
    """Строит сеть семьи по поколениям и экспортирует её в DOT и/или JSON."""
    ws = _workspace(args)
    network = build_network(ws.matrix, ws.registry)
    _count_findings(network.conflicts)

    if args.dot:
        write_text(args.dot, render_dot(network, ws.id_map))
    if args.json_out:
        write_text(args.json_out, network_response(network, ws.id_map).to_json() + "\n")

    label = ws.id_map.external
    for level, persons in network.generations().items():
        print(f"generation {level}: {', '.join(label(p) for p in persons)}")
    print(
        f"{len(network.levels)} persons, {len(network.edges)} edges, "
        f"{len(network.conflicts)} findings"
    )
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    """Отчёт о противоречиях: 0 - чисто, 3 - найдены замечания."""
    ws = _workspace(args)
    report = ws.consistency_report
    _count_findings(report)
    if args.json:
        print(render_report_json(report, ws.id_map), end="")
    else:
        print(render_report_text(report, ws.id_map), end="")
    return EXIT_OK if report.is_clean else EXIT_CONFLICTS


def cmd_symmetrize(args: argparse.Namespace) -> int:
    """Записывает симметризованную матрицу в CSV и печатает отчёт."""
    ws = _workspace(args)
    export_edges(ws.symmetric, args.out)
    report = ws.symmetry_report
    _count_findings(report)
    if args.json:
        print(render_report_json(report, ws.id_map), end="")
    else:
        print(render_report_text(report, ws.id_map), end="")
    return EXIT_OK if report.is_clean else EXIT_CONFLICTS


COMMANDS = {
    "families": cmd_families,
    "path": cmd_path,
    "paths": cmd_paths,
    "power": cmd_power,
    "network": cmd_network,
    "check": cmd_check,
    "symmetrize": cmd_symmetrize,
}


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def non_negative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("edges", help="CSV file with header ego,alter,code")
    common.add_argument(
        "--registry",
        metavar="FILE",
        default=None,
        help="registry file extending the relation alphabet",
    )
    common.add_argument(
        "--metrics-file",
        metavar="FILE",
        default=config.METRICS_FILE,
        help="write prometheus metrics to this textfile",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="kinship",
        description=f"{config.APP_NAME} v{config.APP_VERSION}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_json(subparser: argparse.ArgumentParser) -> argparse.ArgumentParser:
        subparser.add_argument("--json", action="store_true", help="print JSON to stdout")
        return subparser

    with_json(sub.add_parser("families", parents=[common], help="list families"))

    path = with_json(
        sub.add_parser("path", parents=[common], help="relationship between two persons")
    )
    path.add_argument("source", help="external id of the first person")
    path.add_argument("target", help="external id of the second person")
    path.add_argument(
        "--metric", choices=[kind.value for kind in MetricKind], default="hop"
    )
    path.add_argument("--wg", type=non_negative_float, default=1.0, help="custom g-len weight")
    path.add_argument("--ws", type=non_negative_float, default=1.0, help="custom s-len weight")
    path.add_argument("--max-rho", type=positive_int, default=None, help="step limit")

    paths = with_json(sub.add_parser("paths", parents=[common], help="list all simple paths"))
    paths.add_argument("source")
    paths.add_argument("target")
    paths.add_argument("--max-edges", type=positive_int, default=4)

    power = with_json(sub.add_parser("power", parents=[common], help="nonzero cells of M^rho"))
    power.add_argument("rho", type=positive_int)
    power.add_argument("--record-paths", action="store_true")
    power.add_argument("--cap", type=positive_int, default=config.PATH_CAP)
    power.add_argument("--threads", type=positive_int, default=config.THREADS)
    power.add_argument("--symmetric", action="store_true", help="use the symmetrized matrix")

    network = sub.add_parser("network", parents=[common], help="generation-leveled network")
    network.add_argument("--dot", metavar="FILE", default=None)
    network.add_argument("--json", dest="json_out", metavar="FILE", default=None)

    with_json(sub.add_parser("check", parents=[common], help="conflict report"))

    symmetrize = with_json(
        sub.add_parser("symmetrize", parents=[common], help="write symmetric CSV")
    )
    symmetrize.add_argument("--out", metavar="FILE", required=True)

    return parser
