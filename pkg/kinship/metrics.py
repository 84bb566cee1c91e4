import logging
from typing import Optional

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

logger = logging.getLogger(__name__)

# Отдельный реестр: пакетный запуск не держит эндпоинт /metrics,
# метрики сбрасываются в текстовый файл для node-exporter.
REGISTRY = CollectorRegistry()

EDGES_LOADED_COUNTER = Counter(
    "kinship_edges_loaded_total",
    "Total number of distinct relationship triples loaded",
    registry=REGISTRY,
)
CONFLICTS_COUNTER = Counter(
    "kinship_conflicts_total",
    "Total number of data-quality findings reported",
    ["kind"],
    registry=REGISTRY,
)
COMMAND_LATENCY = Histogram(
    "kinship_command_latency_seconds",
    "Command latency in seconds",
    ["command"],
    registry=REGISTRY,
)
MATRIX_PRODUCTS = Counter(
    "kinship_matrix_products_total",
    "Total number of matrix products computed",
    ["semiring"],
    registry=REGISTRY,
)


def write_metrics(path: Optional[str]) -> None:
    """Записывает метрики в файл, если путь задан."""
    if not path:
        return
    try:
        write_to_textfile(path, REGISTRY)
        logger.info(f"Metrics written to {path}")
    except OSError as e:
        logger.error(f"Failed to write metrics to {path}: {e}", exc_info=True)
