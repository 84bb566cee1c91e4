import logging
import sys
from typing import List, Optional

from kinship import metrics
from kinship.cli.commands import COMMANDS, EXIT_INPUT_ERROR, build_parser
from kinship.config import APP_NAME, APP_VERSION, DEBUG
from kinship.core.exceptions import KinshipError

# --- Настройка Логирования ---
# Логи идут в stderr, чтобы stdout оставался детерминированным.
logging.basicConfig(
    level=logging.DEBUG if DEBUG else logging.WARNING,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа командной строки; возвращает код завершения."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.verbose or DEBUG:
        logging.getLogger().setLevel(logging.DEBUG)
    logger.info(f"{APP_NAME} v{APP_VERSION}: running '{args.command}'")

    handler = COMMANDS[args.command]
    try:
        with metrics.COMMAND_LATENCY.labels(command=args.command).time():
            exit_code = handler(args)
    except FileNotFoundError as e:
        logger.error(f"Input file not found: {e.filename}")
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        exit_code = EXIT_INPUT_ERROR
    except KinshipError as e:
        # ParseError, RegistryError, UnknownPersonError и прочие ошибки данных
        logger.error(f"Command '{args.command}' failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        exit_code = EXIT_INPUT_ERROR
    except Exception as e:
        logger.error(f"Unhandled exception in '{args.command}': {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        exit_code = EXIT_INPUT_ERROR
    finally:
        metrics.write_metrics(args.metrics_file)

    logger.debug(f"Command '{args.command}' finished with exit code {exit_code}")
    return exit_code


# --- Точка Входа для Запуска ---
if __name__ == "__main__":
    sys.exit(main())
