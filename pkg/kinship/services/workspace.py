import logging
from functools import cached_property
from pathlib import Path
from typing import Optional, Tuple, Union

from kinship import config
from kinship.core.kingraph import KinGraph
from kinship.core.netbuilder import ConflictReport, pair_findings, parallel_findings
from kinship.core.relation_algebra import RelationRegistry
from kinship.core.rmatrix import CountMatrix, RelationshipMatrix, binarize
from kinship.services.ingest import load_edges, symmetrize

logger = logging.getLogger(__name__)


class Workspace:
    """
    Сервисный слой одного запуска: реестр, загруженная матрица и всё,
    что из неё выводится. Производные структуры строятся лениво и всегда
    соответствуют одной загрузке.
    """

    def __init__(
        self,
        matrix: RelationshipMatrix,
        registry: RelationRegistry,
        load_report: Optional[ConflictReport] = None,
    ):
        """
        Args:
            matrix: Загруженная (направленная) матрица отношений.
            registry: Активный реестр примитивов.
            load_report: Замечания, найденные при загрузке; без него
                параллельные коды ищутся заново.
        """
        self.matrix = matrix
        self.registry = registry
        if load_report is None:
            load_report = parallel_findings(matrix, registry)
        self.load_report = load_report

    @classmethod
    def load(
        cls,
        edges_path: Union[str, Path],
        registry_path: Optional[Union[str, Path]] = None,
    ) -> "Workspace":
        """Загружает реестр (встроенный или расширенный файлом) и файл рёбер."""
        registry_path = registry_path or config.REGISTRY_FILE
        if registry_path:
            registry = RelationRegistry.from_file(registry_path)
        else:
            registry = RelationRegistry.builtin()
        matrix, report = load_edges(edges_path, registry)
        return cls(matrix, registry, report)

    @property
    def id_map(self):
        return self.matrix.id_map

    def person(self, external_id: str) -> int:
        return self.id_map.index(external_id)

    @cached_property
    def _symmetrized(self) -> Tuple[RelationshipMatrix, ConflictReport]:
        return symmetrize(self.matrix, self.registry)

    @property
    def symmetric(self) -> RelationshipMatrix:
        return self._symmetrized[0]

    @property
    def symmetry_report(self) -> ConflictReport:
        return self._symmetrized[1]

    @cached_property
    def consistency_report(self) -> ConflictReport:
        """Параллельные коды из отчёта загрузки и сверка симметричных пар."""
        return self.load_report.merged(pair_findings(self.matrix, self.registry))

    @cached_property
    def graph(self) -> KinGraph:
        return KinGraph(self.matrix, self.registry)

    @cached_property
    def symmetric_binary(self) -> CountMatrix:
        return binarize(self.symmetric)
