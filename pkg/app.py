import logging
import sys

from src.apps.controllers.command_controller import CommandController
from src.apps.routes.command_route import build_parser
from src.infrastructures.config.logging_config import configure_logging

logger = logging.getLogger(__name__)


def main(argv=None):
    """
    Parses the command line and dispatches to the controller. Returns the exit code:
    0 success, 1 runtime error, 2 usage error (argparse exits with 2 on its own).
    """
    parser = build_parser(CommandController())
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging('DEBUG' if args.verbose else None)
    logger.debug(f"Running command '{args.command}'.")
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
