"""Input checks shared by the estimator layer and the CLI."""

import math

import numpy as np

from .errors import ParseError, PreconditionError, ValidationError

def parse_complex(text):
    """Parse '3', '3+0i', '5-2j', '2i' into a complex number."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    t = str(text).strip().replace("i", "j").replace(" ", "")
    try:
        value = complex(t)
    except ValueError:
        raise ParseError(f"cannot parse complex number {text!r}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParseError(f"complex number {text!r} is not finite")
    return value


def check_complex_array(values, name="s"):
    """1-D complex array of finite points."""
    arr = np.atleast_1d(np.asarray(values, dtype=complex))
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def check_positive_array(values, name="t"):
    arr = np.atleast_1d(np.asarray(values, dtype=float)).ravel()
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise PreconditionError(f"{name} must be finite and positive")
    return arr


def check_tolerance(value, name="tolerance"):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive (got {value})")
    return value


def check_rectangle(corner0, corner1):
    z0, z1 = complex(corner0), complex(corner1)
    lo = complex(min(z0.real, z1.real), min(z0.imag, z1.imag))
    hi = complex(max(z0.real, z1.real), max(z0.imag, z1.imag))
    return lo, hi


def check_grid(grid):
    if int(grid) != grid or grid < 4:
        raise ValidationError(f"grid must be an integer >= 4 (got {grid})")
    return int(grid)


def check_distinct_paths(inputs, output):
    """Every input path must differ from the output path."""
    from pathlib import Path

    out = Path(output).resolve()
    for p in inputs:
        if Path(p).resolve() == out:
            raise ValidationError(f"input {p} is the same file as the output")
