"""Parsing of parameter grids given on the command line or in a config file."""

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


def _round(value: float) -> float:
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def _parse_number(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"Grid entry {token!r} is not a number.") from None


def _parse_range(token: str) -> list[float]:
    parts = token.split(":")
    if len(parts) != 3:
        raise ValueError(f"Range {token!r} must have the form start:stop:step.")
    start, stop, step = (_parse_number(p.strip()) for p in parts)
    if not step > 0:
        raise ValueError(f"Range {token!r} needs a positive step.")
    if stop < start:
        raise ValueError(f"Range {token!r} has stop < start.")
    # inclusive of stop up to floating-point slack
    count = math.floor((stop - start) / step + 1e-9) + 1
    return list(start + step * np.arange(count))


def parse_grid(text: str, integer: bool = False) -> tuple[float, ...] | tuple[int, ...]:
    """Parse a grid given as a comma-separated list and/or inclusive ranges.

    Each comma-separated entry is either a number or ``start:stop:step``,
    so ``"0.5:2:0.5,4"`` gives (0.5, 1.0, 1.5, 2.0, 4.0). Values keep the
    order in which they are written and are rounded to 12 significant
    digits.

    Args:
        text: The grid specification.
        integer: Require every value to be integral and return ints.

    Returns:
        The grid values.

    Raises:
        ValueError: If the text is empty or an entry cannot be parsed.
    """
    tokens = [t.strip() for t in str(text).split(",") if t.strip()]
    if not tokens:
        raise ValueError("Grid specification is empty.")
    values: list[float] = []
    for token in tokens:
        if ":" in token:
            values.extend(_parse_range(token))
        else:
            values.append(_parse_number(token))
    values = [_round(v) for v in values]
    if integer:
        if any(v != int(v) for v in values):
            raise ValueError(f"Grid {text!r} must contain integers only.")
        logger.debug("Parsed integer grid %r into %d values", text, len(values))
        return tuple(int(v) for v in values)
    logger.debug("Parsed grid %r into %d values", text, len(values))
    return tuple(values)
