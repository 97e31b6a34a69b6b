import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from geozeta.errors import MissingEigenvalueDataError, ParseError, ValidationError
from geozeta.lie import get_datum
from geozeta.spectrum import (dumps_spectrum, estimate_growth, extend_powers, load_spectrum, spectrum_from_dict,
                              synth_spectrum, write_spectrum)

from conftest import make_spectrum, primitive, single_primitive


def _doc(**overrides):
    doc = {"schema_version": "1", "datum_name": "H2-model", "cutoff": 3.0, "provenance": "test",
           "primitives": [primitive("a", 1.0, [math.exp(-1)]), primitive("b", 1.5, [math.exp(-1.5)])]}
    doc.update(overrides)
    return doc


def test_two_class_file_round_trip(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(_doc()))
    spec = load_spectrum(path)
    assert len(spec.classes) == 2
    assert [c.length for c in spec.classes] == [1.0, 1.5]


def test_power_with_different_chi1_rejected():
    doc = _doc(classes=[{"primitive_id": "a", "mu": 1}, {"primitive_id": "a", "mu": 2, "chi1": 2.0}])
    with pytest.raises(ValidationError, match="X_gamma"):
        spectrum_from_dict(doc)


def test_inconsistent_det_rejected():
    prims = [dict(primitive("a", 1.0, [math.exp(-1)]), det_n=0.5)]
    with pytest.raises(ValidationError, match="det"):
        spectrum_from_dict(_doc(primitives=prims))


def test_eigenvalue_modulus_rejected():
    with pytest.raises(ValidationError):
        spectrum_from_dict(_doc(primitives=[primitive("a", 1.0, [1.2])]))


def test_nonconjugate_eigenvalues_rejected():
    with pytest.raises(ValidationError):
        spectrum_from_dict(_doc(primitives=[primitive("a", 1.0, [0.3j])]))


def test_unresolved_primitive_rejected():
    with pytest.raises(ValidationError):
        spectrum_from_dict(_doc(classes=[{"primitive_id": "zzz", "mu": 1}]))


def test_malformed_files(tmp_path):
    with pytest.raises(ParseError):
        load_spectrum(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_spectrum(bad)
    with pytest.raises(ParseError):
        spectrum_from_dict({"schema_version": "1"})


def test_extend_powers_lengths():
    spec = make_spectrum([primitive("g", 1.0, [math.exp(-1)])], cutoff=1.0)
    ext = extend_powers(spec, 3.5)
    assert [c.length for c in ext.classes] == [1.0, 2.0, 3.0]


def test_extend_powers_empty():
    spec = make_spectrum([], cutoff=2.0)
    assert extend_powers(spec, 5.0).classes == ()


def test_extend_powers_square_class():
    spec = extend_powers(make_spectrum([primitive("g", 1.0, [math.exp(-1)])], cutoff=1.0), 2.0)
    sq = [c for c in spec.classes if c.mu == 2][0]
    assert sq.n_eigenvalues[0] == pytest.approx(math.exp(-2), rel=1e-15)
    assert sq.det_n == pytest.approx(1 - math.exp(-2), rel=1e-15)
    assert sq.chi1 == 1.0


def test_extend_powers_idempotent():
    spec = single_primitive(5.0)
    once = extend_powers(spec, 7.0)
    assert extend_powers(once, 7.0) == once


def test_trace_only_primitive_cannot_be_powered():
    p = primitive("g", 1.0, [math.exp(-1)])
    del p["holonomy"]
    p["holonomy_traces"] = {"trivial": 1.0}
    spec = make_spectrum([p], cutoff=1.0)
    with pytest.raises(MissingEigenvalueDataError):
        extend_powers(spec, 3.0)


def test_power_traces_are_power_sums():
    p = primitive("g", 1.0, [math.exp(-1)], holonomy={"chi": [complex(0, 1), complex(0, -1)]},
                  omega=(0.5, 2.0))
    spec = extend_powers(make_spectrum([p], cutoff=1.0), 3.0)
    by_mu = {c.mu: c for c in spec.classes}
    assert by_mu[2].holonomy_traces["chi"] == pytest.approx(-2)
    assert by_mu[3].omega_trace == pytest.approx(0.125 + 8.0)


def test_synth_deterministic_and_round_trip(tmp_path):
    a = synth_spectrum(get_datum("H2-model"), 1, 8.0, 1.0)
    b = synth_spectrum(get_datum("H2-model"), 1, 8.0, 1.0)
    assert dumps_spectrum(a) == dumps_spectrum(b)
    path = tmp_path / "s.json"
    write_spectrum(a, path)
    c = load_spectrum(path)
    assert dumps_spectrum(c) == path.read_text(encoding="utf-8")
    assert c.classes == a.classes


def test_synth_below_floor_is_empty():
    assert synth_spectrum(get_datum("H2-model"), 1, 0.5, 1.0).classes == ()


@pytest.mark.parametrize("seed", range(1, 11))
def test_synth_counting_law(seed):
    g, l_max = 1.0, 8.0
    spec = synth_spectrum(get_datum("H2-model"), seed, l_max, g)
    n = len(spec.primitives)
    assert 0.5 <= n * g * l_max / math.exp(g * l_max) <= 2.0


def test_synth_ch2_eigenvalues():
    d = get_datum("CH2-model")
    spec = synth_spectrum(d, 2, 4.0, 1.0)
    c = spec.classes[0]
    mods = sorted(abs(e) for e in c.n_eigenvalues)
    assert mods == pytest.approx(sorted([math.exp(-c.length)] * 2 + [math.exp(-2 * c.length)]))


def test_sorted_by_length():
    spec = synth_spectrum(get_datum("H2-model"), 4, 8.0, 1.0)
    lengths = [c.length for c in spec.classes]
    assert lengths == sorted(lengths)


def test_growth_estimate_inverts_counting_law():
    spec = synth_spectrum(get_datum("H2-model"), 3, 8.0, 1.0)
    bare = spectrum_from_dict({k: v for k, v in json.loads(dumps_spectrum(spec)).items() if k != "growth"})
    assert bare.growth is None
    assert estimate_growth(bare) == pytest.approx(1.0, rel=0.1)
    assert estimate_growth(single_primitive(3.0)) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1.0, 6.0), min_size=0, max_size=6, unique=True),
       st.floats(0.05, 0.99))
def test_round_trip_property(lengths, decay):
    prims = [primitive(f"p{i}", x, [decay ** x]) for i, x in enumerate(sorted(lengths))]
    spec = make_spectrum(prims, cutoff=6.0)
    again = spectrum_from_dict(json.loads(dumps_spectrum(spec)))
    assert again.classes == spec.classes
    assert dumps_spectrum(again) == dumps_spectrum(spec)
