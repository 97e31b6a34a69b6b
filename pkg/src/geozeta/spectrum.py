"""Geodesic length spectra: data model, file I/O, validation and synthesis.

A spectrum file lists primitive classes with their eigenvalue data and the
power classes ``(primitive_id, mu)`` that are present.  Traces for a power
``gamma_0^k`` are power sums of the primitive's eigenvalues, which is why
primitives store eigenvalue lists rather than traces wherever possible.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import lambertw

from ._numerics import canonical_dumps, complex_from_json, complex_to_json
from .errors import MissingEigenvalueDataError, ParseError, ValidationError
from .lie import get_datum

SCHEMA_VERSION = "1"
LENGTH_RTOL = 1e-12
DET_RTOL = 1e-12
CONJ_TOL = 1e-12


@dataclass(frozen=True)
class Primitive:
    id: str
    length: float
    chi1: float
    n_eigenvalues: tuple
    omega_eigenvalues: tuple = None
    omega_trace: complex = None
    holonomy: dict = field(default_factory=dict)
    holonomy_traces: dict = field(default_factory=dict)
    monodromy: dict = field(default_factory=dict)
    det_n: complex = None

    def omega_power_trace(self, k):
        if self.omega_eigenvalues is not None:
            return complex(sum(w ** k for w in self.omega_eigenvalues))
        if k == 1 and self.omega_trace is not None:
            return complex(self.omega_trace)
        if self.omega_trace is None:
            return 1 + 0j
        raise MissingEigenvalueDataError(
            f"primitive {self.id!r} stores only tr omega; powers need omega_eigenvalues")

    def holonomy_power_traces(self, k):
        out = {tag: complex(sum(e ** k for e in eigs)) for tag, eigs in self.holonomy.items()}
        for tag, value in self.holonomy_traces.items():
            if tag in out:
                continue
            if k != 1:
                raise MissingEigenvalueDataError(
                    f"primitive {self.id!r} stores only the trace for tag {tag!r}; "
                    "powers need holonomy eigenvalues")
            out[tag] = complex(value)
        return out

    @property
    def has_eigenvalue_data(self):
        return ((self.omega_eigenvalues is not None or self.omega_trace is None)
                and set(self.holonomy_traces) <= set(self.holonomy))


@dataclass(frozen=True)
class GeodesicClass:
    primitive_id: str
    mu: int
    length: float
    chi1: float
    n_eigenvalues: tuple
    omega_trace: complex
    holonomy_traces: dict
    det_n: complex
    monodromy: dict = field(default_factory=dict)

    @property
    def primitive_length(self):
        return self.length / self.mu


@dataclass(frozen=True)
class LengthSpectrum:
    classes: tuple
    cutoff: float
    datum_name: str
    provenance: str = ""
    synthetic: bool = False
    growth: float = None
    primitives: dict = field(default_factory=dict)
    class_monodromy: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.classes)

    @property
    def growth_rate(self):
        """Declared exponential growth rate of the class count, or an estimate."""
        if self.growth is not None:
            return float(self.growth)
        return estimate_growth(self)

    @property
    def abscissa(self):
        return self.growth_rate

    @property
    def min_length(self):
        return self.classes[0].length if self.classes else math.inf


def estimate_growth(spectrum):
    """Invert N(L) = exp(gL)/(gL) at the cutoff; 0 for sparse (finite) primitive sets."""
    n = len(spectrum.primitives)
    if n < math.e or spectrum.cutoff <= 0:
        return 0.0
    x = -lambertw(-1.0 / n, k=-1).real
    return float(x / spectrum.cutoff)


def _power_class(prim, k, monodromy=None):
    eigs = tuple(e ** k for e in prim.n_eigenvalues)
    return GeodesicClass(
        primitive_id=prim.id,
        mu=k,
        length=k * prim.length,
        chi1=prim.chi1,
        n_eigenvalues=eigs,
        omega_trace=prim.omega_power_trace(k),
        holonomy_traces=prim.holonomy_power_traces(k),
        det_n=complex(np.prod([1 - e for e in eigs])) if eigs else 1 + 0j,
        monodromy=dict(prim.monodromy if monodromy is None else {**prim.monodromy, **monodromy}),
    )


def _sort_key(cls):
    return (cls.length, cls.primitive_id, cls.mu)


def build_spectrum(primitives, powers, cutoff, datum_name, provenance="", synthetic=False,
                   growth=None, class_monodromy=None):
    """Assemble and validate a spectrum from primitives and ``(id, mu)`` pairs."""
    prims = {p.id: p for p in primitives}
    if len(prims) != len(primitives):
        raise ValidationError("duplicate primitive ids")
    class_monodromy = dict(class_monodromy or {})
    seen = set()
    classes = []
    for pid, mu in powers:
        if pid not in prims:
            raise ValidationError(f"class ({pid!r}, mu={mu}): primitive_id does not resolve")
        if mu < 1:
            raise ValidationError(f"class ({pid!r}, mu={mu}): power index must be >= 1")
        if (pid, mu) in seen:
            raise ValidationError(f"class ({pid!r}, mu={mu}) listed twice")
        seen.add((pid, mu))
        classes.append(_power_class(prims[pid], mu, class_monodromy.get((pid, mu))))
    classes.sort(key=_sort_key)
    spectrum = LengthSpectrum(
        classes=tuple(classes), cutoff=float(cutoff), datum_name=datum_name,
        provenance=provenance, synthetic=bool(synthetic),
        growth=None if growth is None else float(growth),
        primitives=prims, class_monodromy=class_monodromy)
    validate_spectrum(spectrum)
    return spectrum


def _check_primitive(p):
    where = f"primitive {p.id!r}"
    if not (math.isfinite(p.length) and p.length > 0):
        raise ValidationError(f"{where}: length must be positive (got {p.length})")
    if not math.isfinite(p.chi1):
        raise ValidationError(f"{where}: chi1 must be finite")
    if not p.n_eigenvalues:
        raise ValidationError(f"{where}: n_eigenvalues must be non-empty")
    for e in p.n_eigenvalues:
        if not abs(e) < 1:
            raise ValidationError(
                f"{where}: n-eigenvalue {e} has modulus >= 1 (must contract on n)")
    # n is a real module: eigenvalues come in conjugate pairs
    remaining = list(p.n_eigenvalues)
    while remaining:
        e = remaining.pop(0)
        if abs(e.imag) <= CONJ_TOL:
            continue
        j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - e.conjugate()), default=None)
        if j is None or abs(remaining[j] - e.conjugate()) > CONJ_TOL:
            raise ValidationError(f"{where}: n_eigenvalues not closed under conjugation ({e})")
        remaining.pop(j)
    if p.det_n is not None:
        _check_det(where, p.det_n, p.n_eigenvalues)


def _check_det(where, det_n, eigs):
    prod = complex(np.prod([1 - e for e in eigs]))
    if abs(det_n - prod) > DET_RTOL * (1 + abs(det_n)):
        raise ValidationError(
            f"{where}: det_n={det_n} inconsistent with prod(1 - e_j)={prod} from n_eigenvalues")


def validate_spectrum(spectrum):
    """Check every spectrum invariant; raise ``ValidationError`` on the first violation."""
    if not (math.isfinite(spectrum.cutoff) and spectrum.cutoff > 0):
        raise ValidationError(f"cutoff must be positive (got {spectrum.cutoff})")
    if spectrum.growth is not None and not (math.isfinite(spectrum.growth) and spectrum.growth >= 0):
        raise ValidationError(f"growth must be finite and >= 0 (got {spectrum.growth})")
    for p in spectrum.primitives.values():
        _check_primitive(p)
    prev = None
    for cls in spectrum.classes:
        where = f"class ({cls.primitive_id!r}, mu={cls.mu})"
        prim = spectrum.primitives.get(cls.primitive_id)
        if prim is None:
            raise ValidationError(f"{where}: primitive_id does not resolve")
        if cls.mu < 1 or not cls.length > 0:
            raise ValidationError(f"{where}: need mu >= 1 and length > 0")
        if abs(cls.length / cls.mu - prim.length) > LENGTH_RTOL * prim.length:
            raise ValidationError(f"{where}: length/mu does not match primitive length {prim.length}")
        if cls.chi1 != prim.chi1:
            raise ValidationError(
                f"{where}: chi1={cls.chi1} differs from its primitive's chi1={prim.chi1} "
                "(X_gamma^n = X_gamma, so chi1 is constant across powers)")
        _check_det(where, cls.det_n, cls.n_eigenvalues)
        if prev is not None and _sort_key(cls) < _sort_key(prev):
            raise ValidationError(f"{where}: classes not sorted ascending by length")
        prev = cls
    return spectrum


# ---------------------------------------------------------------- file format

def _parse_eigs(values, where):
    try:
        return tuple(complex_from_json(v) for v in values)
    except TypeError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _primitive_from_json(d):
    try:
        pid = str(d["id"])
        length = float(d["length"])
        chi1 = float(d.get("chi1", 1.0))
        n_eigs = _parse_eigs(d["n_eigenvalues"], f"primitive {pid!r} n_eigenvalues")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed primitive entry {d!r}: {exc}") from None
    omega_eigs = d.get("omega_eigenvalues")
    omega_eigs = None if omega_eigs is None else _parse_eigs(omega_eigs, f"primitive {pid!r} omega")
    omega_trace = d.get("omega_trace")
    holonomy = {str(tag): _parse_eigs(v, f"primitive {pid!r} holonomy {tag!r}")
                for tag, v in (d.get("holonomy") or {}).items()}
    traces = {str(tag): complex_from_json(v) for tag, v in (d.get("holonomy_traces") or {}).items()}
    monodromy = {str(tag): complex_from_json(v) for tag, v in (d.get("monodromy") or {}).items()}
    det_n = d.get("det_n")
    return Primitive(
        id=pid, length=length, chi1=chi1, n_eigenvalues=n_eigs,
        omega_eigenvalues=omega_eigs,
        omega_trace=None if omega_trace is None else complex_from_json(omega_trace),
        holonomy=holonomy, holonomy_traces=traces, monodromy=monodromy,
        det_n=None if det_n is None else complex_from_json(det_n))


def spectrum_from_dict(doc):
    if not isinstance(doc, dict):
        raise ParseError("spectrum document must be a JSON object")
    try:
        version = str(doc["schema_version"])
        datum_name = str(doc["datum_name"])
        cutoff = float(doc["cutoff"])
        raw_prims = list(doc["primitives"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"spectrum document missing or malformed field: {exc}") from None
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})")
    prims = [_primitive_from_json(p) for p in raw_prims]
    by_id = {p.id: p for p in prims}
    raw_classes = doc.get("classes")
    if raw_classes is None:
        raw_classes = [{"primitive_id": p.id, "mu": 1} for p in prims]
    powers, monodromy = [], {}
    for c in raw_classes:
        try:
            pid, mu = str(c["primitive_id"]), int(c["mu"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed class entry {c!r}: {exc}") from None
        powers.append((pid, mu))
        where = f"class ({pid!r}, mu={mu})"
        prim = by_id.get(pid)
        if prim is None:
            raise ValidationError(f"{where}: primitive_id does not resolve")
        if "chi1" in c and float(c["chi1"]) != prim.chi1:
            raise ValidationError(
                f"{where}: chi1={c['chi1']} differs from its primitive's chi1={prim.chi1} "
                "(X_gamma^n = X_gamma, so chi1 is constant across powers)")
        if "length" in c and abs(float(c["length"]) / mu - prim.length) > LENGTH_RTOL * prim.length:
            raise ValidationError(f"{where}: length/mu does not match primitive length {prim.length}")
        if "det_n" in c:
            _check_det(where, complex_from_json(c["det_n"]), tuple(e ** mu for e in prim.n_eigenvalues))
        if mu > 1 and not prim.has_eigenvalue_data:
            raise MissingEigenvalueDataError(
                f"{where}: primitive stores traces only; power classes need eigenvalue lists")
        if "monodromy" in c:
            monodromy[(pid, mu)] = {str(t): complex_from_json(v) for t, v in c["monodromy"].items()}
    growth = doc.get("growth")
    return build_spectrum(
        prims, powers, cutoff, datum_name,
        provenance=str(doc.get("provenance", "")), synthetic=bool(doc.get("synthetic", False)),
        growth=None if growth is None else float(growth), class_monodromy=monodromy)


def load_spectrum(path):
    """Read, parse and validate a spectrum file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read spectrum file {str(path)!r}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return spectrum_from_dict(doc)


def _eigs_json(eigs):
    return [complex_to_json(e) for e in eigs]


def spectrum_to_dict(spectrum):
    prims = []
    for p in sorted(spectrum.primitives.values(), key=lambda p: (p.length, p.id)):
        d = {"id": p.id, "length": p.length, "chi1": p.chi1, "n_eigenvalues": _eigs_json(p.n_eigenvalues)}
        if p.omega_eigenvalues is not None:
            d["omega_eigenvalues"] = _eigs_json(p.omega_eigenvalues)
        if p.omega_trace is not None:
            d["omega_trace"] = complex_to_json(p.omega_trace)
        if p.holonomy:
            d["holonomy"] = {t: _eigs_json(v) for t, v in p.holonomy.items()}
        if p.holonomy_traces:
            d["holonomy_traces"] = {t: complex_to_json(v) for t, v in p.holonomy_traces.items()}
        if p.monodromy:
            d["monodromy"] = {t: complex_to_json(v) for t, v in p.monodromy.items()}
        if p.det_n is not None:
            d["det_n"] = complex_to_json(p.det_n)
        prims.append(d)
    classes = []
    for c in spectrum.classes:
        d = {"primitive_id": c.primitive_id, "mu": c.mu}
        extra = spectrum.class_monodromy.get((c.primitive_id, c.mu))
        if extra:
            d["monodromy"] = {t: complex_to_json(v) for t, v in extra.items()}
        classes.append(d)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "datum_name": spectrum.datum_name,
        "cutoff": spectrum.cutoff,
        "provenance": spectrum.provenance,
        "synthetic": spectrum.synthetic,
        "primitives": prims,
        "classes": classes,
    }
    if spectrum.growth is not None:
        doc["growth"] = spectrum.growth
    return doc


def dumps_spectrum(spectrum):
    return canonical_dumps(spectrum_to_dict(spectrum)) + "\n"


def write_spectrum(spectrum, path):
    Path(path).write_text(dumps_spectrum(spectrum), encoding="utf-8")


# ---------------------------------------------------------------- operations

def extend_powers(spectrum, l_max):
    """Add every power gamma_0^k with k * l(gamma_0) <= l_max that is missing."""
    present = {(c.primitive_id, c.mu) for c in spectrum.classes}
    powers = sorted(present)
    for p in spectrum.primitives.values():
        k_max = int(math.floor(l_max / p.length * (1 + LENGTH_RTOL)))
        for k in range(1, k_max + 1):
            if (p.id, k) in present:
                continue
            if k > 1 and not p.has_eigenvalue_data:
                raise MissingEigenvalueDataError(
                    f"primitive {p.id!r} stores traces only; cannot form power k={k}")
            powers.append((p.id, k))
    if len(powers) == len(present):
        return spectrum
    return build_spectrum(
        list(spectrum.primitives.values()), powers, spectrum.cutoff, spectrum.datum_name,
        provenance=spectrum.provenance, synthetic=spectrum.synthetic, growth=spectrum.growth,
        class_monodromy=spectrum.class_monodromy)


def complete_powers(spectrum):
    """The spectrum with all powers up to its own cutoff present."""
    return extend_powers(spectrum, spectrum.cutoff)


def _counting(x):
    return math.exp(x) / x


def _inverse_counting(y):
    # solve e^x / x = y on the branch x >= 1
    return float(-lambertw(-1.0 / y, k=-1).real)


def synth_spectrum(datum, seed, l_max, growth, min_length=1.0):
    """Deterministic synthetic spectrum with prime-geodesic-like counting.

    Primitive lengths are jittered quantiles of N(L) = exp(gL)/(gL): the k-th
    length is drawn uniformly in the k-th unit step of N above the floor.  All
    classes get chi1 = 1, trivial omega and holonomy, and n-eigenvalues
    exp(-root * l) from the datum's restricted roots.  Testing device only; the
    result is flagged ``synthetic``.
    """
    if not growth > 0:
        raise ValidationError(f"growth must be positive (got {growth})")
    if isinstance(datum, str):
        datum = get_datum(datum)
    rng = np.random.default_rng(seed)
    floor = max(float(min_length), 1.0 / growth)
    lengths = []
    if l_max >= floor:
        base = _counting(growth * floor)
        top = _counting(growth * l_max)
        k = 1
        while base + k - 1 < top:
            u = rng.random()
            length = _inverse_counting(base + k - 1 + u) / growth
            if length > l_max:
                break
            lengths.append(length)
            k += 1
    tags = sorted({e.trace_tag for e in datum.shift_table})
    rates = datum.root_exponents()
    prims = []
    width = max(4, len(str(len(lengths))))
    for idx, length in enumerate(lengths):
        eigs = tuple(complex(math.exp(-rate * length), 0.0) for rate, mult in rates for _ in range(mult))
        prims.append(Primitive(
            id=f"p{idx:0{width}d}", length=length, chi1=1.0, n_eigenvalues=eigs,
            omega_eigenvalues=(1 + 0j,), holonomy={t: (1 + 0j,) for t in tags}))
    provenance = (f"synthetic: synth_spectrum(datum={datum.name}, seed={seed}, "
                  f"l_max={l_max!r}, growth={growth!r})")
    spectrum = build_spectrum(prims, [(p.id, 1) for p in prims], l_max, datum.name,
                              provenance=provenance, synthetic=True, growth=growth)
    return extend_powers(spectrum, l_max)

