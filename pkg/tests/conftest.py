import math
from functools import lru_cache

import pytest

from geozeta.lie import get_datum
from geozeta.spectrum import spectrum_from_dict, synth_spectrum

H2_SEEDS = range(1, 11)


def cjson(values):
    return [{"re": complex(e).real, "im": complex(e).imag} for e in values]


def primitive(pid, length, n_eigs, chi1=1.0, holonomy=None, omega=(1.0,)):
    holonomy = holonomy or {"trivial": [1.0]}
    return {"id": pid, "length": length, "chi1": chi1, "omega_eigenvalues": cjson(omega),
            "holonomy": {tag: cjson(v) for tag, v in holonomy.items()},
            "n_eigenvalues": cjson(n_eigs)}


def make_spectrum(prims, classes=None, cutoff=None, datum="H2-model", **extra):
    doc = {"schema_version": "1", "datum_name": datum, "provenance": "test",
           "cutoff": cutoff if cutoff is not None else max([p["length"] for p in prims], default=1.0),
           "primitives": prims}
    if classes is not None:
        doc["classes"] = [{"primitive_id": pid, "mu": mu} for pid, mu in classes]
    doc.update(extra)
    return spectrum_from_dict(doc)


def single_primitive(cutoff=20.0):
    """One primitive of length 1 with n-eigenvalue e^-1 and all powers up to ``cutoff``."""
    k_max = int(cutoff)
    return make_spectrum([primitive("g", 1.0, [math.exp(-1)])],
                         [("g", k) for k in range(1, k_max + 1)], cutoff=cutoff)


@lru_cache(maxsize=None)
def h2_synthetic(seed, l_max=8.0):
    return synth_spectrum(get_datum("H2-model"), seed, l_max, 1.0)


@pytest.fixture
def h2():
    return get_datum("H2-model")


@pytest.fixture
def ch2():
    return get_datum("CH2-model")


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
