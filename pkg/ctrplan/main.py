import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from ctrplan.commands import global_planning, gradients, planning, regions, simulate
from ctrplan.config import settings
from ctrplan.scenarios import list_scenarios
from ctrplan.utils.exceptions import CtrPlanError, ScenarioNotFoundError

logger = logging.getLogger(__name__)

EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


def log_level() -> int:
    """DEBUG forces debug output regardless of LOG_LEVEL."""
    return logging.DEBUG if settings.DEBUG else int(getattr(logging, settings.LOG_LEVEL))


def configure_logging() -> None:
    """Install the root handler once: JSON lines or the plain text format."""
    root = logging.getLogger()
    if root.handlers:
        root.setLevel(log_level())
        return
    if settings.LOG_FORMAT == "json":
        from pythonjsonlogger.json import JsonFormatter

        handler = logging.StreamHandler()
        handler.setFormatter(JsonFormatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
        root.addHandler(handler)
        root.setLevel(log_level())
    else:
        logging.basicConfig(
            level=log_level(),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Contact trust region planning and control for contact-rich manipulation.",
        epilog=f"Built-in scenarios: {', '.join(list_scenarios())}",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)

    # Subcommand groups
    simulate.register(subparsers)
    gradients.register(subparsers)
    regions.register(subparsers)
    planning.register(subparsers)
    global_planning.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE_ERROR
    args.argv = argv

    logger.info(f"Starting {settings.APP_NAME} v{settings.APP_VERSION}")
    logger.info(f"Environment: {settings.ENVIRONMENT}")
    logger.info(f"Debug mode: {settings.DEBUG}")
    logger.info(f"Command: {args.command}")
    try:
        return args.handler(args)
    except ScenarioNotFoundError as exc:
        logger.error(str(exc))
        return EXIT_USAGE_ERROR
    except ValidationError as exc:
        logger.error(f"Invalid parameters: {exc}")
        return EXIT_USAGE_ERROR
    except CtrPlanError as exc:
        logger.error(str(exc))
        return EXIT_DOMAIN_ERROR
    except Exception as exc:
        logger.error(f"Unhandled exception: {exc}", exc_info=True)
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
