import logging
from pathlib import Path

LOGGER_NAME = "radial_curvature"
WARNINGS_LOGGER = "py.warnings"

_FORMAT = logging.Formatter(
    "[%(asctime)s] %(levelname)-8s %(name)s | %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)


def _has_file_handler(logger: logging.Logger, path: Path) -> bool:
    return any(
        isinstance(h, logging.FileHandler) and Path(h.baseFilename) == path.resolve()
        for h in logger.handlers
    )


def setup_logger(name: str = LOGGER_NAME, level: str = "INFO", log_file: str | None = None) -> logging.Logger:
    """Solver logger; scipy/numpy warnings (curve_fit, overflow in far-field shots) share its handlers.

    Repeated calls update the level and add a log file that is not attached yet.
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    if not any(type(h) is logging.StreamHandler for h in logger.handlers):
        console = logging.StreamHandler()
        console.setFormatter(_FORMAT)
        logger.addHandler(console)

    if log_file and not _has_file_handler(logger, Path(log_file)):
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_file, encoding="utf-8")
        fh.setFormatter(_FORMAT)
        logger.addHandler(fh)

    logging.captureWarnings(True)
    warnings_logger = logging.getLogger(WARNINGS_LOGGER)
    for handler in logger.handlers:
        if handler not in warnings_logger.handlers:
            warnings_logger.addHandler(handler)

    return logger
