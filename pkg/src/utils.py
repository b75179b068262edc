import math
import logging
from datetime import datetime
from typing import Iterable, Mapping, Tuple

from config import Config

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def get_logger(name: str, file_stem: str) -> logging.Logger:
    """
    Get a named logger that also writes to today's log folder.

    The file handler is attached once per logger and only when
    Config.LOG_TO_FILE is set; otherwise records propagate to whatever
    handlers the caller configured (the CLI adds a console handler).

    Args:
        name: Logger name
        file_stem: Log file prefix, the date is appended

    Returns:
        logging.Logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.INFO)

    if Config.LOG_TO_FILE and not any(isinstance(h, logging.FileHandler) for h in logger.handlers):
        # Create a file handler
        log_file = Config.get_logs_path() / f'{file_stem}_{datetime.now().strftime("%Y%m%d")}.log'
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    return logger


def build_report(title: str, sections: Mapping[str, Mapping[str, object]]) -> str:
    """
    Build a plain-text report with underlined headings.

    Args:
        title: Report title
        sections: Ordered mapping of heading -> {label: value}

    Returns:
        str: The report body
    """
    body = f"{title}\n"
    body += "=" * len(title) + "\n\n"
    body += f"Date: {datetime.now().strftime('%Y-%m-%d')}\n"
    body += f"Time: {datetime.now().strftime('%H:%M:%S')}\n\n"

    for heading, rows in sections.items():
        body += f"{heading}\n"
        body += "-" * len(heading) + "\n"
        width = max((len(label) for label in rows), default=0)
        for label, value in rows.items():
            body += f"  {label.ljust(width)} : {format_value(value)}\n"
        body += "\n"

    return body.rstrip() + "\n"


def format_value(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6e}"
    return str(value)


def fsum_mean_std(values: Iterable[float]) -> Tuple[float, float]:
    """
    Mean and sample standard deviation with compensated summation.

    The result does not depend on the order of `values`, so aggregates are
    stable however the trials were scheduled. Empty input gives (nan, nan),
    a single value gives a standard deviation of 0.
    """
    data = [float(v) for v in values]
    n = len(data)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(data) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in data) / (n - 1)
    return mean, math.sqrt(var)


def fsum_mean(values: Iterable[float]) -> float:
    return fsum_mean_std(values)[0]


def rms(values: Iterable[float]) -> float:
    """Root mean square with compensated summation"""
    data = [float(v) for v in values]
    if not data:
        return math.nan
    return math.sqrt(math.fsum(v * v for v in data) / len(data))

