import re

from .errors import ParameterError

_SIZE = re.compile(r"^\s*(\d+)\s*[xX×]\s*(\d+)\s*$")


def parse_size(text):
    """'64x48' -> (width, height)"""
    match = _SIZE.match(text or "")
    if not match:
        raise ParameterError(f"size must look like WIDTHxHEIGHT, got {text!r}")
    return int(match.group(1)), int(match.group(2))


def parse_int_list(text):
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ParameterError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values:
        raise ParameterError("the list is empty")
    return values
