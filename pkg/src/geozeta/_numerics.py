"""Small numerical and serialization helpers shared across modules."""

import json
import math

import numpy as np

# canonical float text: 17 significant digits round-trips every IEEE double
FLOAT_FORMAT = ".17g"


def fmt_float(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return format(x, FLOAT_FORMAT)


def csum(terms):
    """Compensated sum of a sequence of complex numbers, in the given order."""
    terms = np.asarray(terms, dtype=complex).ravel()
    if terms.size == 0:
        return 0j
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


def canonical_dumps(obj, indent=1, _level=0):
    """JSON text with sorted keys and 17-digit floats.

    The stdlib encoder always uses ``float.__repr__``, so floats are written here.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} cannot be serialized")
        text = fmt_float(obj)
        if not any(ch in text for ch in ".eE"):
            text += ".0"
        return text
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, np.floating):
        return canonical_dumps(float(obj), indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + canonical_dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def complex_to_json(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(value):
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    raise TypeError(f"not a complex number: {value!r}")


def gauss_legendre_panels(a, b, width, order=16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    if b <= a:
        return np.empty(0), np.empty(0)
    n_panels = max(1, int(math.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
