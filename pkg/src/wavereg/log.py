"""Logging setup for the command line."""

import logging

from rich.console import Console
from rich.logging import RichHandler

_HANDLER_NAME = "wavereg-rich"


def configure_logging(verbose: bool = False) -> None:
    """Route the package logger through a rich handler on stderr.

    Args:
        verbose: Log at INFO instead of WARNING.
    """
    logger = logging.getLogger("wavereg")
    logger.setLevel(logging.INFO if verbose else logging.WARNING)

    for handler in logger.handlers:
        if handler.get_name() == _HANDLER_NAME:
            return

    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
