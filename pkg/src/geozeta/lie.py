"""Rank-one structure constants and closed-form Lie-theoretic formulas.

The catalog ships as ``catalog.json`` next to this module.  All norms in an
entry are pre-computed in one fixed normalization (see ``docs/catalog.md``);
nothing here derives them symbolically.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import DomainError, InvalidPatternError, NumericError, ValidationError

ROOT_MULTIPLES = {"half": 0.5, "full": 1.0, "threehalf": 1.5}

PATTERNS = {
    frozenset({"full"}): "c1",
    frozenset({"half", "full"}): "c2",
    frozenset({"half", "full", "threehalf"}): "c3",
}


@dataclass(frozen=True)
class ShiftEntry:
    c: int
    i: int
    s: float
    sign: int
    trace_tag: str

    def __post_init__(self):
        if self.c < 0:
            raise ValidationError(f"shift entry degree c={self.c} must be >= 0")
        if self.sign != (-1) ** self.c:
            raise ValidationError(
                f"shift entry (c={self.c}, i={self.i}) has sign {self.sign}, expected {(-1) ** self.c}")


@dataclass(frozen=True)
class GroupDatum:
    name: str
    fundamental_rank: int
    restricted_roots: tuple
    alpha_norm: float
    rho_p_norm: float
    b_rho: float
    b_scale: float
    dim_n: int
    dim_n_alpha: int
    dim_n_2alpha: int
    shift_table: tuple
    dim_p_m1: int = 0
    dim_p_m2_minus: int = 0
    group: str = ""
    notes: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, d):
        try:
            roots = tuple((str(label), int(mult)) for label, mult in d["restricted_roots"])
            shifts = tuple(
                ShiftEntry(int(e["c"]), int(e["i"]), float(e["s"]), int(e["sign"]), str(e["trace_tag"]))
                for e in d["shift_table"])
            return cls(
                name=str(d["name"]),
                fundamental_rank=int(d["fundamental_rank"]),
                restricted_roots=roots,
                alpha_norm=float(d["alpha_norm"]),
                rho_p_norm=float(d["rho_p_norm"]),
                b_rho=float(d["b_rho"]),
                b_scale=float(d["b_scale"]),
                dim_n=int(d["dim_n"]),
                dim_n_alpha=int(d["dim_n_alpha"]),
                dim_n_2alpha=int(d["dim_n_2alpha"]),
                shift_table=shifts,
                dim_p_m1=int(d.get("dim_p_m1", 0)),
                dim_p_m2_minus=int(d.get("dim_p_m2_minus", 0)),
                group=str(d.get("group", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed group datum: {exc}") from exc

    def to_dict(self):
        return {
            "name": self.name,
            "group": self.group,
            "fundamental_rank": self.fundamental_rank,
            "restricted_roots": [list(r) for r in self.restricted_roots],
            "alpha_norm": self.alpha_norm,
            "rho_p_norm": self.rho_p_norm,
            "b_rho": self.b_rho,
            "b_scale": self.b_scale,
            "dim_n": self.dim_n,
            "dim_n_alpha": self.dim_n_alpha,
            "dim_n_2alpha": self.dim_n_2alpha,
            "dim_p_m1": self.dim_p_m1,
            "dim_p_m2_minus": self.dim_p_m2_minus,
            "shift_table": [
                {"c": e.c, "i": e.i, "s": e.s, "sign": e.sign, "trace_tag": e.trace_tag}
                for e in self.shift_table],
        }

    def root_exponents(self):
        """(decay rate per unit length, multiplicity) for each positive restricted root."""
        return [(ROOT_MULTIPLES[label] * self.alpha_norm, mult)
                for label, mult in self.restricted_roots if mult > 0]

    @property
    def base_root_norm(self):
        """Norm of the smallest positive restricted root (the Ruelle shift unit)."""
        return min(rate for rate, _ in self.root_exponents())


def restricted_root_pattern(datum):
    """Classify the positive restricted roots as ``c1``, ``c2`` or ``c3``."""
    labels = [label for label, mult in datum.restricted_roots if mult > 0]
    unknown = [label for label in labels if label not in ROOT_MULTIPLES]
    if unknown:
        raise InvalidPatternError(f"{datum.name}: unknown restricted root label(s) {unknown}")
    if len(labels) != len(set(labels)):
        raise InvalidPatternError(f"{datum.name}: repeated restricted root labels {labels}")
    if labels.count("full") != 1:
        raise InvalidPatternError(
            f"{datum.name}: expected exactly one real root 'full', got {labels}")
    pattern = PATTERNS.get(frozenset(labels))
    if pattern is None:
        raise InvalidPatternError(f"{datum.name}: root set {sorted(labels)} is not one of c1, c2, c3")

    mult = dict((label, m) for label, m in datum.restricted_roots if m > 0)
    if datum.dim_n != sum(mult.values()):
        raise InvalidPatternError(
            f"{datum.name}: dim_n={datum.dim_n} but root multiplicities sum to {sum(mult.values())}")
    if datum.dim_n_alpha + datum.dim_n_2alpha != datum.dim_n:
        raise InvalidPatternError(f"{datum.name}: dim_n_alpha + dim_n_2alpha != dim_n")
    if pattern == "c1" and (datum.dim_n_alpha, datum.dim_n_2alpha) != (mult["full"], 0):
        raise InvalidPatternError(f"{datum.name}: c1 requires n_alpha = n_full and n_2alpha = 0")
    if pattern == "c2" and (datum.dim_n_alpha, datum.dim_n_2alpha) != (mult["half"], mult["full"]):
        raise InvalidPatternError(f"{datum.name}: c2 requires n_alpha = n_half and n_2alpha = n_full")
    return pattern


def rho_from_roots(datum):
    return 0.5 * sum(m * ROOT_MULTIPLES[label] * datum.alpha_norm
                     for label, m in datum.restricted_roots)


def validate_datum(datum, rtol=0.0):
    """Raise ``ValidationError`` unless every structural invariant holds.

    ``rtol=0`` means exact float equality, which the shipped catalog satisfies.
    """
    pattern = restricted_root_pattern(datum)
    for attr in ("alpha_norm", "rho_p_norm", "b_scale"):
        if not getattr(datum, attr) > 0:
            raise ValidationError(f"{datum.name}: {attr} must be positive")
    if datum.dim_n < 1:
        raise ValidationError(f"{datum.name}: dim_n must be >= 1")
    rho = rho_from_roots(datum)
    if abs(rho - datum.rho_p_norm) > rtol * abs(rho):
        raise ValidationError(
            f"{datum.name}: rho_p_norm={datum.rho_p_norm!r} disagrees with roots ({rho!r})")
    if not datum.shift_table:
        raise ValidationError(f"{datum.name}: empty shift table")
    keys = [(e.c, e.i) for e in datum.shift_table]
    if len(set(keys)) != len(keys):
        raise ValidationError(f"{datum.name}: duplicate (c, i) in shift table")
    for e in datum.shift_table:
        if not (math.isfinite(e.s) and e.s >= 0):
            raise ValidationError(f"{datum.name}: shift s={e.s} for (c={e.c}, i={e.i}) must be real and >= 0")
    return pattern


@lru_cache(maxsize=None)
def _catalog_document():
    text = resources.files("geozeta").joinpath("catalog.json").read_text(encoding="utf-8")
    return json.loads(text)


def catalog_version():
    return _catalog_document()["catalog_version"]


def load_catalog():
    """Return the shipped catalog as ``{name: GroupDatum}``."""
    return {d["name"]: GroupDatum.from_dict(d) for d in _catalog_document()["entries"]}


def get_datum(name):
    catalog = load_catalog()
    try:
        return catalog[name]
    except KeyError:
        raise ValidationError(f"unknown group datum {name!r}; known: {sorted(catalog)}") from None


def casimir_principal_series(datum, b_nu, b_lambda_xi):
    """Casimir eigenvalue B(nu) + B(lambda_xi) - B(rho) on a principal series."""
    return b_nu + b_lambda_xi - datum.b_rho


def _inner(datum, x, y):
    if len(x) != len(y):
        raise DomainError(f"weight vectors of different length {len(x)} and {len(y)}")
    return datum.b_scale * math.fsum(a * b for a, b in zip(x, y))


def formal_degree(datum, lam, positive_roots, rho):
    """Product over positive roots of (alpha, lam + rho) / (alpha, rho)."""
    shifted = [a + b for a, b in zip(lam, rho)]
    value = 1.0
    for alpha in positive_roots:
        den = _inner(datum, alpha, rho)
        if den == 0:
            raise NumericError(f"(alpha, rho) = 0 for alpha={list(alpha)}: invalid positive ordering")
        value *= _inner(datum, alpha, shifted) / den
    return value


def alternating_binomial(m, r, a):
    """sum_{q=a}^{m} q (-1)^q binom(r, q - a), by direct summation."""
    if r < 1 or a < 0 or a > m - r:
        raise DomainError(f"alternating_binomial needs r >= 1 and 0 <= a <= m - r (m={m}, r={r}, a={a})")
    return sum(q * (-1) ** q * math.comb(r, q - a) for q in range(a, m + 1))


def torsion_exponent(k):
    """Exponent k(-1)^(k+1) carried by the degree-k factor of a torsion product."""
    return k * (-1) ** (k + 1)
