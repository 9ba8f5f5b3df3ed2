"""Utility functions for parsing extended reals and writing CSV tables."""

import csv
import io
import logging
import math
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Union

from .exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 9


def parse_extended_real(text: Union[str, float, int], name: str = "value") -> float:
    """
    Parse a real number, accepting the literals ``inf`` and ``-inf``.

    Args:
        text: The text (or number) to parse
        name: Parameter name used in error messages

    Returns:
        The parsed float

    Raises:
        InvalidParameterError: If the text is empty, NaN or not a number
    """
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        if text is None or not str(text).strip():
            error_msg = f"Cannot parse {name}: a value is required"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)
        raw = str(text).strip().lower()
        if raw in ("inf", "+inf", "infinity"):
            return math.inf
        if raw in ("-inf", "-infinity"):
            return -math.inf
        try:
            value = float(raw)
        except ValueError:
            error_msg = f"Cannot parse {name}: {text!r} is not a number"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)

    if math.isnan(value):
        error_msg = f"Cannot parse {name}: NaN is not allowed"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return value


def parse_real_list(text: str, name: str = "value") -> List[float]:
    """Parse a comma-separated list of extended reals."""
    items = [item for item in str(text).split(",") if item.strip()]
    if not items:
        error_msg = f"Cannot parse {name}: at least one value is required"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return [parse_extended_real(item, name) for item in items]


def parse_int_list(text: str, name: str = "value") -> List[int]:
    """Parse a comma-separated list of positive integers."""
    values = []
    for item in str(text).split(","):
        if not item.strip():
            continue
        try:
            value = int(item.strip())
        except ValueError:
            error_msg = f"Cannot parse {name}: {item.strip()!r} is not an integer"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)
        if value <= 0:
            error_msg = f"Cannot parse {name}: {value} must be positive"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)
        values.append(value)
    if not values:
        error_msg = f"Cannot parse {name}: at least one value is required"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return values


def format_number(value: Union[float, int, bool, str]) -> str:
    """
    Format a value for CSV output.

    Floats use 9 significant digits; infinities print as ``inf``/``-inf``.
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render a header and rows as CSV text with LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            error_msg = f"CSV row has {len(row)} fields, header has {len(header)}"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)
        writer.writerow([format_number(value) for value in row])
    return buffer.getvalue()


def write_csv(
    header: Sequence[str],
    rows: Iterable[Sequence],
    path: Optional[Union[str, Path]] = None,
    stream: Optional[TextIO] = None,
) -> None:
    """
    Write a CSV table to ``path`` (UTF-8) or to ``stream`` (stdout by default).

    Args:
        header: Column names
        rows: Row values, formatted with :func:`format_number`
        path: Output file; when omitted the table goes to ``stream``
        stream: Text stream used when ``path`` is None
    """
    text = render_csv(header, rows)
    if path is None:
        (stream or sys.stdout).write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {text.count(chr(10)) - 1} rows to {path}")
