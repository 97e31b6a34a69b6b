"""Truncated Selberg and Ruelle zeta functions over a length spectrum.

Conventions used throughout:

* a class gamma = gamma_0^mu contributes
  ``-chi1 * exp(-s l) / mu * tr omega(gamma) tr tau(b_gamma) / det(1 - gamma | n)``
  to ``log Z(s)``, where the stored n-eigenvalues of gamma all have modulus < 1;
* sums over classes run in ascending length order with compensated summation,
  so results do not depend on how terms were produced.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ._numerics import csum
from .errors import (DivergenceError, DomainError, MissingEigenvalueDataError, MissingTraceError,
                     PoleError, PrecisionError, ValidationError, ZeroShiftError)
from .lie import get_datum, restricted_root_pattern
from .spectrum import complete_powers, extend_powers

SPLIT_RTOL = 1e-6


@dataclass(frozen=True)
class ZetaEvaluation:
    s: complex
    log_value: complex
    truncation_bound: float
    abscissa: float

    @property
    def value(self):
        return cmath.exp(self.log_value)


@dataclass(frozen=True)
class OrderList:
    entries: tuple

    def __post_init__(self):
        points = [complex(p) for p, _ in self.entries]
        for i, p in enumerate(points):
            if p in points[:i]:
                raise ValidationError(f"order list point {p} listed twice")

    @classmethod
    def from_pairs(cls, pairs):
        return cls(tuple((complex(p), int(o)) for p, o in pairs))


def _trace_weights(classes, use_omega=True, trace_tag=None, monodromy=False):
    w = np.empty(len(classes), dtype=complex)
    for j, c in enumerate(classes):
        value = complex(c.chi1)
        if use_omega:
            value *= c.omega_trace
        if trace_tag is not None:
            try:
                value *= c.holonomy_traces[trace_tag]
            except KeyError:
                raise MissingTraceError(
                    f"class ({c.primitive_id!r}, mu={c.mu}) has no holonomy trace {trace_tag!r}") from None
            if monodromy:
                value *= c.monodromy.get(trace_tag, 1 + 0j)
        w[j] = value / c.det_n
    return w


def _power_horizon(spectrum, sigma):
    # powers of known primitives are summed until exp(-sigma l) < 1e-20
    extra = 46.0 / sigma if sigma > 0 else 200.0
    return spectrum.cutoff + min(extra, 200.0)


def _prepare(spectrum, sigma=None):
    """Power-complete the spectrum; with ``sigma`` also add powers past the cutoff.

    The truncated zeta function is the Euler product over the primitives on
    file, so all powers of those primitives belong to it; only primitives
    beyond the cutoff are left to the truncation bound.
    """
    spectrum = complete_powers(spectrum)
    classes = spectrum.classes
    if sigma is not None:
        classes = extend_powers(spectrum, _power_horizon(spectrum, sigma)).classes
    lengths = np.array([c.length for c in classes], dtype=float)
    mus = np.array([c.mu for c in classes], dtype=float)
    return spectrum, classes, lengths, mus


def evaluation_classes(spectrum, sigma):
    """Classes entering an evaluation at real part ``sigma`` (including powers past the cutoff)."""
    return _prepare(spectrum, sigma)[1]


def _check_region(spectrum, s):
    g = spectrum.abscissa
    if not complex(s).real > g:
        raise DivergenceError(
            f"Re(s)={complex(s).real} is not beyond the abscissa of convergence {g}")
    return g


def _tail_bound(spectrum, s, weights):
    """Bound on omitted classes: max|weight| * int_L^inf exp((g - Re s) l) dl."""
    g = spectrum.abscissa
    sigma = complex(s).real
    w_max = float(np.max(np.abs(weights))) if len(weights) else 1.0
    return w_max * math.exp((g - sigma) * spectrum.cutoff) / (sigma - g)


def _log_sum(weights, lengths, mus, s):
    return -csum(weights * np.exp(-complex(s) * lengths) / mus)


def log_selberg(spectrum, s, n_max=None, use_omega=True, trace_tag=None, monodromy=False,
                method="closed"):
    """Truncated ``log Z(s)`` for the Selberg zeta function of ``spectrum``.

    ``method="closed"`` resums the symmetric powers of n as ``1/det(1 - gamma|n)``
    and sums over all classes of the primitives on file.  ``method="euler"`` evaluates the
    Euler product itself, truncating symmetric powers at degree ``n_max``; it
    exists as an independent cross-check.
    """
    s = complex(s)
    spectrum, classes, lengths, mus = _prepare(spectrum, s.real)
    g = _check_region(spectrum, s)
    weights = _trace_weights(classes, use_omega, trace_tag, monodromy)
    bound = _tail_bound(spectrum, s, weights)
    if method == "closed":
        value = _log_sum(weights, lengths, mus, s)
    elif method == "euler":
        if monodromy:
            # a per-class monodromy factor is not a function of eigenvalue powers
            raise ValueError("the Euler-product route does not support monodromy weights")
        value = _log_selberg_euler(spectrum, s, 60 if n_max is None else n_max,
                                   use_omega, trace_tag, monodromy)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ZetaEvaluation(s=s, log_value=value, truncation_bound=bound, abscissa=g)


def log_selberg_derivative(spectrum, s, use_omega=True, trace_tag=None, monodromy=False):
    """``d/ds log Z(s)`` in closed form: sum of chi1 l(gamma_0) exp(-s l) w / det."""
    s = complex(s)
    spectrum, classes, lengths, mus = _prepare(spectrum, s.real)
    _check_region(spectrum, s)
    weights = _trace_weights(classes, use_omega, trace_tag, monodromy)
    return csum(weights * (lengths / mus) * np.exp(-s * lengths))


def _monomials(eigs, thresh, n_max):
    """Values of all monomials in ``eigs`` of degree <= n_max with modulus > thresh."""
    values = np.array([1 + 0j])
    degrees = np.array([0])
    for e in eigs:
        a = abs(e)
        new_v, new_d = [values], [degrees]
        cur_v, cur_d = values, degrees
        while True:
            cur_v = cur_v * e
            cur_d = cur_d + 1
            keep = (np.abs(cur_v) > thresh) & (cur_d <= n_max)
            if not keep.any() or a == 0:
                break
            cur_v, cur_d = cur_v[keep], cur_d[keep]
            new_v.append(cur_v)
            new_d.append(cur_d)
        values = np.concatenate(new_v)
        degrees = np.concatenate(new_d)
    return values


def _log_selberg_euler(spectrum, s, n_max, use_omega, trace_tag, monodromy):
    terms = []
    for p in sorted(spectrum.primitives.values(), key=lambda p: (p.length, p.id)):
        if use_omega:
            if p.omega_eigenvalues is None and p.omega_trace is not None:
                raise MissingEigenvalueDataError(f"primitive {p.id!r}: Euler route needs omega eigenvalues")
            omega = np.array(p.omega_eigenvalues or (1 + 0j,))
        else:
            omega = np.array([1 + 0j])
        if trace_tag is None:
            tau = np.array([1 + 0j])
        else:
            if trace_tag not in p.holonomy:
                if trace_tag in p.holonomy_traces:
                    raise MissingEigenvalueDataError(
                        f"primitive {p.id!r}: Euler route needs eigenvalues for tag {trace_tag!r}")
                raise MissingTraceError(f"primitive {p.id!r} has no holonomy data {trace_tag!r}")
            tau = np.array(p.holonomy[trace_tag])
        x = cmath.exp(-s * p.length)
        scale = abs(x) * float(np.max(np.abs(omega))) * float(np.max(np.abs(tau)))
        thresh = 1e-18 / max(scale, 1e-300)
        mono = _monomials(p.n_eigenvalues, thresh, n_max)
        z = x * (omega[:, None, None] * tau[None, :, None] * mono[None, None, :]).ravel()
        terms.append(p.chi1 * csum(np.log1p(-z)))
    return csum(terms)


# ------------------------------------------------------------------ Ruelle

def _split_n_eigenvalues(cls, base_rate):
    """Partition n-eigenvalues of a class into the alpha and 2*alpha root spaces."""
    small, large = [], []
    for e in cls.n_eigenvalues:
        rate = -math.log(abs(e)) / cls.length
        if abs(rate - base_rate) <= SPLIT_RTOL * base_rate:
            small.append(e)
        elif abs(rate - 2 * base_rate) <= SPLIT_RTOL * base_rate:
            large.append(e)
        else:
            raise ValidationError(
                f"class ({cls.primitive_id!r}, mu={cls.mu}): n-eigenvalue {e} matches neither "
                f"exp(-{base_rate} l) nor exp(-{2 * base_rate} l)")
    return small, large


def _elementary(eigs, k):
    if k == 0:
        return 1 + 0j
    if k > len(eigs):
        return 0j
    coeffs = np.poly(np.array(eigs, dtype=complex)) if eigs else np.array([1.0])
    return complex((-1) ** k * coeffs[k])


def _ruelle_datum(spectrum, datum):
    if datum is None:
        datum = get_datum(spectrum.datum_name)
    if restricted_root_pattern(datum) == "c3":
        raise DomainError("Ruelle factorization needs restricted roots within {alpha, 2 alpha}; got pattern c3")
    return datum


def log_ruelle(spectrum, s, datum=None, method="factorized", use_omega=True):
    """``log Z^R(s)``, either as the alternating product of shifted Selberg zetas
    (``method="factorized"``) or from its defining product (``method="direct"``)."""
    s = complex(s)
    spectrum, classes, lengths, mus = _prepare(spectrum, s.real)
    g = _check_region(spectrum, s)
    omega = np.array([c.omega_trace if use_omega else 1 + 0j for c in classes])
    chi = np.array([c.chi1 for c in classes], dtype=float)
    if method == "direct":
        w = chi * omega
        value = _log_sum(w, lengths, mus, s)
        return ZetaEvaluation(s=s, log_value=value, truncation_bound=_tail_bound(spectrum, s, w), abscissa=g)
    if method != "factorized":
        raise ValueError(f"unknown method {method!r}")

    datum = _ruelle_datum(spectrum, datum)
    base = datum.base_root_norm
    splits = [_split_n_eigenvalues(c, base) for c in classes]
    for c, (small, large) in zip(classes, splits):
        if (len(small), len(large)) != (datum.dim_n_alpha, datum.dim_n_2alpha):
            raise ValidationError(
                f"class ({c.primitive_id!r}, mu={c.mu}): root-space sizes {len(small)}, {len(large)} "
                f"do not match datum ({datum.dim_n_alpha}, {datum.dim_n_2alpha})")
    det = np.array([c.det_n for c in classes])
    values, bound = [], 0.0
    for q in range(datum.dim_n_alpha + 1):
        for p in range(datum.dim_n_2alpha + 1):
            shift = (q + 2 * p) * base
            # trace of b_gamma on wedge^q n_alpha (x) wedge^p n_2alpha; the a-part is the shift
            tau = np.array([_elementary(sm, q) * _elementary(lg, p) * math.exp(shift * c.length)
                            for c, (sm, lg) in zip(classes, splits)])
            w = chi * omega * tau / det
            values.append((-1) ** (p + q) * _log_sum(w, lengths, mus, s + shift))
            bound += _tail_bound(spectrum, s + shift, w)
    return ZetaEvaluation(s=s, log_value=csum(values), truncation_bound=bound, abscissa=g)


# ------------------------------------------------------- consistency checks

@dataclass(frozen=True)
class OppositeReport:
    samples: tuple
    discrepancies: tuple
    max_discrepancy: float
    bound: float

    @property
    def passed(self):
        return self.max_discrepancy <= self.bound


def _log_selberg_opposite(spectrum, s, trace_tag, w_twist):
    """log Z on the opposite parabolic: eigenvalues on the opposite nilradical
    are 1/conj(e) and the determinant is taken of 1 - gamma^{-1} there."""
    terms = []
    for c in evaluation_classes(spectrum, s.real):
        opp = [1 / e.conjugate() for e in c.n_eigenvalues]
        det = complex(np.prod([1 - 1 / e for e in opp]))
        tau = 1 + 0j
        if trace_tag is not None:
            tag = w_twist.get(trace_tag, trace_tag)
            try:
                tau = c.holonomy_traces[tag]
            except KeyError:
                raise MissingTraceError(
                    f"class ({c.primitive_id!r}, mu={c.mu}) has no holonomy trace {tag!r}") from None
        terms.append(-c.chi1 * cmath.exp(-s * c.length) / c.mu * c.omega_trace * tau / det)
    return csum(terms)


def opposite_parabolic_check(spectrum, s_samples, trace_tag=None, w_twist=None, floor=1e-10):
    """Compare ``log Z_{P,tau}`` with ``log Z_{Pbar,tau^w}`` at each sample point.

    ``w_twist`` maps a holonomy tag to the tag of its twist by the Weyl element;
    tags absent from the map are their own twist.  The reported bound is the
    combined truncation bound of both sides plus ``floor`` for rounding.
    """
    spectrum = complete_powers(spectrum)
    w_twist = dict(w_twist or {})
    diffs, bound = [], 0.0
    for s in s_samples:
        ev = log_selberg(spectrum, s, trace_tag=trace_tag)
        other = _log_selberg_opposite(spectrum, complex(s), trace_tag, w_twist)
        diffs.append(abs(ev.log_value - other))
        bound = max(bound, 2 * ev.truncation_bound + floor)
    return OppositeReport(samples=tuple(complex(s) for s in s_samples), discrepancies=tuple(diffs),
                          max_discrepancy=max(diffs, default=0.0), bound=bound)


def rectangle_contour(rectangle, grid):
    """Counterclockwise boundary points of an axis-aligned rectangle, closed."""
    z0, z1 = complex(rectangle[0]), complex(rectangle[1])
    x0, x1 = sorted((z0.real, z1.real))
    y0, y1 = sorted((z0.imag, z1.imag))
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    pts = []
    for a, b in zip(corners[:-1], corners[1:]):
        t = np.arange(grid) / grid
        pts.append(a + (b - a) * t)
    pts.append(np.array([corners[-1]]))
    return np.concatenate(pts)


def zero_free_region_check(spectrum, rectangle, grid, use_omega=True, trace_tag=None, max_step=math.pi / 2):
    """Winding number of Z = exp(log Z) around a rectangle, by phase tracking.

    Phase increments are principal arguments of Z(z_{k+1}) / Z(z_k); any
    increment larger than ``max_step`` raises ``PrecisionError`` since the grid
    cannot resolve the phase there.
    """
    z0, z1 = complex(rectangle[0]), complex(rectangle[1])
    if z0.real == z1.real or z0.imag == z1.imag:
        return 0
    if grid < 1:
        raise PrecisionError("grid must be >= 1 point per side")
    g = complete_powers(spectrum).abscissa
    if not min(z0.real, z1.real) > g:
        raise DivergenceError(f"rectangle reaches Re(s) <= abscissa {g}")
    spectrum, classes, lengths, mus = _prepare(spectrum, min(z0.real, z1.real))
    weights = _trace_weights(classes, use_omega, trace_tag)
    pts = rectangle_contour((z0, z1), grid)
    logs = np.array([_log_sum(weights, lengths, mus, z) for z in pts])
    z_vals = np.exp(logs)
    steps = np.angle(z_vals[1:] / z_vals[:-1])
    worst = float(np.max(np.abs(steps))) if len(steps) else 0.0
    if worst > max_step:
        raise PrecisionError(f"phase step {worst:.3f} rad exceeds {max_step:.3f}; refine the grid")
    return int(round(math.fsum(steps.tolist()) / (2 * math.pi)))


# ------------------------------------------------------------ assembly

def regularized_product(orders, s):
    """Finite product of (s - point)^order over an order list."""
    if not isinstance(orders, OrderList):
        orders = OrderList.from_pairs(orders)
    s = complex(s)
    value = 1 + 0j
    for point, order in orders.entries:
        if order == 0:
            continue
        if s == point:
            if order < 0:
                raise PoleError(f"pole of order {-order} at s={point}", order)
            return 0j
        value *= (s - point) ** order
    return value


def assemble_c_constant(datum, orders_by_shift):
    """Product over the shift table of (2 sqrt(s))^(sign * order).

    ``orders_by_shift`` maps a ``ShiftEntry`` or its ``(c, i)`` key to an order.
    """
    entries = {(e.c, e.i): e for e in datum.shift_table}
    logs = []
    for key, order in orders_by_shift.items():
        ci = (key.c, key.i) if hasattr(key, "c") else tuple(key)
        if ci not in entries:
            raise ValidationError(f"{datum.name}: no shift entry (c={ci[0]}, i={ci[1]})")
        entry = entries[ci]
        if order == 0:
            continue
        if entry.s == 0:
            raise ZeroShiftError(
                f"shift (c={entry.c}, i={entry.i}) has s=0 with order {order}: factor 2*sqrt(s) vanishes")
        logs.append(entry.sign * order * math.log(2 * math.sqrt(entry.s)))
    return math.exp(math.fsum(logs))
