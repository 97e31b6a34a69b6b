"""Heat theta series, spectral zeta functions, determinants and torsion.

The spectral side works through one Mellin-split engine: for a heat trace
theta(t) over positive eigenvalues,

    Gamma(s) zeta(s) = int_0^t0 t^(s-1) theta dt + int_t0^inf t^(s-1) theta dt,

with the first piece integrated term-wise from a small-t model
sum_p c_p t^p and the second by a composite Gauss-Legendre rule in u = log t.
Because the rule's nodes are fixed, theta is sampled once per operator and
every zeta(s) afterwards is a weighted sum.
"""

import ast
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import gammaincc, rgamma
from scipy.special import gamma as gamma_fn

from ._numerics import csum, gauss_legendre_panels
from .errors import (DivergenceError, IllConditionedFitError, InstabilityError, MissingTraceError,
                     NonpositiveAlphaError, NumericError, ParseError, PreconditionError,
                     QuadratureError, ValidationError)
from .lie import get_datum, torsion_exponent
from .spectrum import complete_powers

FIT_WINDOW = (1e-4, 1e-2)
FIT_SAMPLES = 64
FIT_RTOL = 1e-5
PANEL_WIDTH = 0.5
PANEL_ORDER = 16


# ------------------------------------------------------------------ data types

@dataclass(frozen=True)
class EigenvalueSpectrum:
    """Eigenvalues with multiplicities of a self-adjoint operator.

    ``heat_dimension`` d is the exponent in tr exp(-t D) ~ C t^(-d/2) as t -> 0.
    ``heat_dimension = 0`` marks a finite operator whose list is complete.
    """

    eigenvalues: tuple
    heat_dimension: float
    label: str = ""

    def __post_init__(self):
        prev = -math.inf
        for lam, mult in self.eigenvalues:
            if not (math.isfinite(lam) and lam >= 0):
                raise ValidationError(f"{self.label}: eigenvalue {lam} must be finite and >= 0")
            if lam < prev:
                raise ValidationError(f"{self.label}: eigenvalues must be nondecreasing ({lam} after {prev})")
            if int(mult) != mult or mult < 1:
                raise ValidationError(f"{self.label}: multiplicity {mult} must be a positive integer")
            prev = lam
        if not (math.isfinite(self.heat_dimension) and self.heat_dimension >= 0):
            raise ValidationError(f"{self.label}: heat_dimension must be >= 0")

    @classmethod
    def from_arrays(cls, values, mults=None, heat_dimension=0.0, label=""):
        values = [float(v) for v in values]
        mults = [1] * len(values) if mults is None else [int(m) for m in mults]
        return cls(tuple(zip(values, mults)), float(heat_dimension), label)

    @property
    def values(self):
        return np.array([lam for lam, _ in self.eigenvalues], dtype=float)

    @property
    def multiplicities(self):
        return np.array([m for _, m in self.eigenvalues], dtype=float)

    def union(self, other, label=None):
        merged = sorted(self.eigenvalues + other.eigenvalues)
        return EigenvalueSpectrum(tuple(merged), max(self.heat_dimension, other.heat_dimension),
                                  label or f"{self.label}+{other.label}")

    def scaled(self, c):
        return EigenvalueSpectrum(tuple((c * lam, m) for lam, m in self.eigenvalues),
                                  self.heat_dimension, f"{c}*{self.label}")

    def to_dict(self):
        return {"label": self.label, "heat_dimension": self.heat_dimension,
                "eigenvalues": [[lam, int(m)] for lam, m in self.eigenvalues]}


def load_eigenvalues(path):
    doc = _read_json(path)
    try:
        pairs = tuple((float(lam), int(m)) for lam, m in doc["eigenvalues"])
        return EigenvalueSpectrum(pairs, float(doc["heat_dimension"]), str(doc.get("label", "")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed eigenvalue file ({exc})") from None


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read {str(path)!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None


_EXPR_NAMES = {"r", "pi", "E", "exp", "log", "sqrt", "tanh", "sinh", "cosh", "sin", "cos", "Abs"}
_EXPR_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
               ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def density_from_expr(expr):
    """Vectorized callable for a closed-form density in the variable ``r``."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"density expression {expr!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ParseError(f"density expression {expr!r}: {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in _EXPR_NAMES:
            raise ParseError(f"density expression {expr!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ParseError(f"density expression {expr!r}: only numeric constants allowed")
    import sympy

    r = sympy.Symbol("r")
    fn = sympy.lambdify(r, sympy.sympify(expr, locals={"r": r}), "numpy")
    return lambda x: np.broadcast_to(np.asarray(fn(np.asarray(x, dtype=float)), dtype=float),
                                     np.shape(x)).copy()


@dataclass(frozen=True)
class PlancherelModel:
    """Identity-term data: density p(r) on [0, inf), spectral offset and volume.

    The Gamma-trace of the heat operator is volume * int exp(-t (r^2 + shift)) p(r) dr.
    ``bound`` = (A, k) declares p(r) <= A (1 + r)^k.
    """

    density: dict
    shift: float
    volume: float
    label: str = ""
    heat_dimension: float = None
    bound: tuple = (1.0, 1.0)

    def __post_init__(self):
        if not self.volume > 0:
            raise ValidationError(f"{self.label}: volume must be positive")
        kind = self.density.get("type")
        if kind not in ("table", "expr"):
            raise ValidationError(f"{self.label}: density type must be 'table' or 'expr'")

    @cached_property
    def _density_fn(self):
        if self.density["type"] == "expr":
            return density_from_expr(self.density["expr"])
        r = np.asarray(self.density["r"], dtype=float)
        p = np.asarray(self.density["p"], dtype=float)
        if r.ndim != 1 or r.shape != p.shape or len(r) < 4 or np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValidationError(f"{self.label}: density table needs >= 4 increasing nodes r >= 0")
        if np.any(p < 0):
            raise ValidationError(f"{self.label}: density table has negative values")
        spline = CubicSpline(r, p)
        r_lo, r_hi = r[0], r[-1]

        def fn(x):
            x = np.asarray(x, dtype=float)
            out = np.where((x >= r_lo) & (x <= r_hi), spline(np.clip(x, r_lo, r_hi)), 0.0)
            return out
        return fn

    @cached_property
    def _table_rule(self):
        """Nodes and weights * p of an 8-point Gauss rule on every knot interval."""
        r = np.asarray(self.density["r"], dtype=float)
        x, w = np.polynomial.legendre.leggauss(8)
        mid, half = (r[1:] + r[:-1]) / 2, (r[1:] - r[:-1]) / 2
        nodes = (mid[:, None] + half[:, None] * x).ravel()
        weights = (half[:, None] * w).ravel()
        return nodes, weights * self.p(nodes)

    @property
    def support_end(self):
        if self.density["type"] == "table":
            return float(self.density["r"][-1])
        return math.inf

    def p(self, r):
        return self._density_fn(r)

    def with_volume(self, volume):
        return PlancherelModel(self.density, self.shift, volume, self.label, self.heat_dimension, self.bound)

    def to_dict(self):
        d = {"label": self.label, "shift": self.shift, "volume": self.volume, "density": self.density,
             "bound": {"coefficient": self.bound[0], "degree": self.bound[1]}}
        if self.heat_dimension is not None:
            d["heat_dimension"] = self.heat_dimension
        return d


def plancherel_from_dict(doc):
    try:
        bound = doc.get("bound") or {}
        hd = doc.get("heat_dimension")
        return PlancherelModel(
            density=dict(doc["density"]), shift=float(doc.get("shift", 0.0)), volume=float(doc["volume"]),
            label=str(doc.get("label", "")), heat_dimension=None if hd is None else float(hd),
            bound=(float(bound.get("coefficient", 1.0)), float(bound.get("degree", 1.0))))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed Plancherel model ({exc})") from None


def load_plancherel(path):
    return plancherel_from_dict(_read_json(path))


# ------------------------------------------------------------------ geodesic side

def _class_heat_weights(classes, datum, entry, use_omega=True):
    """chi1 l(gamma_0) a^rho tr omega tr(b|sigma) L / det(1 - gamma|n), per class."""
    out = np.empty(len(classes), dtype=complex)
    for j, c in enumerate(classes):
        try:
            tr = c.holonomy_traces[entry.trace_tag]
        except KeyError:
            raise MissingTraceError(
                f"class ({c.primitive_id!r}, mu={c.mu}) has no holonomy trace {entry.trace_tag!r}") from None
        w = c.chi1 * c.primitive_length * math.exp(-datum.rho_p_norm * c.length) * tr
        w *= c.monodromy.get(entry.trace_tag, 1 + 0j)
        if use_omega:
            w *= c.omega_trace
        out[j] = w / c.det_n
    return out


def theta_geometric(spectrum, datum, t, use_omega=True):
    """Geodesic part of the heat theta series at time t."""
    if not t > 0:
        raise PreconditionError(f"t must be positive (got {t})")
    if isinstance(datum, str):
        datum = get_datum(datum)
    spectrum = complete_powers(spectrum)
    classes = spectrum.classes
    if not classes:
        return 0.0
    lengths = np.array([c.length for c in classes])
    gauss = np.exp(-lengths ** 2 / (4 * t)) / math.sqrt(4 * math.pi * t)
    terms = []
    for entry in datum.shift_table:
        w = _class_heat_weights(classes, datum, entry, use_omega)
        terms.append(entry.sign * math.exp(t * entry.s) * w * gauss)
    value = csum(np.concatenate(terms))
    return value.real if abs(value.imag) <= 1e-12 * (1 + abs(value.real)) else value


def subordination_kernel(length, mu):
    """Closed form of int_0^inf exp(-l^2/4t) / sqrt(4 pi t) exp(-t mu) dt."""
    return math.exp(-length * math.sqrt(mu)) / (2 * math.sqrt(mu))


def subordination_quadrature(length, mu, rtol=1e-12):
    """The same integral by adaptive quadrature in u = log(t / t_peak)."""
    if not mu > 0:
        raise PreconditionError(f"mu must be positive (got {mu})")
    t_peak = length / (2 * math.sqrt(mu)) if length > 0 else 1.0 / mu

    def f(u):
        t = t_peak * math.exp(u)
        return math.exp(-length ** 2 / (4 * t) - t * mu) / math.sqrt(4 * math.pi * t) * t

    value, err, info = _quad(f, -60.0, 60.0, rtol)
    return value


def _quad(f, a, b, rtol, points=None):
    rtol = max(rtol, 1e-13)
    out = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=500, points=points, full_output=1)
    value, err, info = out[0], out[1], out[2]
    if len(out) > 3 or not math.isfinite(value) or err > max(1e3 * rtol * abs(value), 1e-300):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge (estimate {value}, error {err})")
    return value, err, info


@dataclass(frozen=True)
class BridgeReport:
    mu: float
    zeta_point: float
    kernel_max_error: float
    heat_side: complex
    zeta_side: complex
    relative_error: float
    rows: tuple = field(default=(), repr=False)


def resolvent_bridge_check(spectrum, datum, lam, shift_entry, use_omega=True):
    """Compare the Laplace-transformed geodesic heat term with the Selberg side.

    For mu = lam - s each class term transforms as
    exp(-l sqrt(mu)) / (2 sqrt(mu)); summed, the heat side equals
    (d/ds log Z)(rho + sqrt(mu)) / (2 sqrt(mu)) for the twisted zeta function.
    """
    from .zeta import evaluation_classes, log_selberg_derivative

    if isinstance(datum, str):
        datum = get_datum(datum)
    mu = lam - shift_entry.s
    if not mu > 0:
        raise PreconditionError(f"lambda={lam} must exceed the shift s={shift_entry.s}")
    point = datum.rho_p_norm + math.sqrt(mu)
    spectrum = complete_powers(spectrum)
    if point <= spectrum.abscissa:
        raise DivergenceError(f"rho + sqrt(lambda - s) = {point} is not in the convergence region")
    classes = evaluation_classes(spectrum, point)
    if not classes:
        return BridgeReport(mu, point, 0.0, 0j, 0j, 0.0)
    weights = _class_heat_weights(classes, datum, shift_entry, use_omega)
    rows, kernel_err, heat_terms = [], 0.0, []
    for c, w in zip(classes, weights):
        quad = subordination_quadrature(c.length, mu)
        closed = subordination_kernel(c.length, mu)
        rel = abs(quad - closed) / abs(closed) if closed else abs(quad)
        kernel_err = max(kernel_err, rel)
        rows.append((c.primitive_id, c.mu, c.length, quad, closed, rel))
        heat_terms.append(w * quad)
    heat = csum(heat_terms)
    zeta = log_selberg_derivative(spectrum, point, use_omega=use_omega, trace_tag=shift_entry.trace_tag,
                                  monodromy=True) / (2 * math.sqrt(mu))
    rel = abs(heat - zeta) / abs(zeta) if zeta != 0 else abs(heat)
    return BridgeReport(mu, point, kernel_err, heat, zeta, rel, tuple(rows))


# ------------------------------------------------------------------ Mellin engine

class MellinZeta:
    """zeta(s) = (1/Gamma(s)) int_0^inf t^(s-1) theta(t) dt by the split at ``t_split``.

    ``theta`` must accept a numpy array of times.  With ``heat_dimension > 0``
    theta on (0, t_split] is replaced by a least-squares fit of
    t^(-d/2) (c0 + c1 t + c2 t^2) + b on ``fit_window``; the constant b
    absorbs the t^0 coefficient and excluded zero modes.  With
    ``heat_dimension == 0`` the model is the constant theta(0+) given by
    ``finite_total`` and the remainder is integrated numerically.
    """

    def __init__(self, theta, heat_dimension, finite_total=None, t_max=None, decay=None, power_tail=True,
                 fit_window=FIT_WINDOW, panel_width=PANEL_WIDTH, panel_order=PANEL_ORDER, residual=None):
        self.theta = theta
        self.d = float(heat_dimension)
        self.finite = self.d == 0
        if self.finite and finite_total is None:
            raise ValueError("finite operators need finite_total")
        self.fit_window = fit_window
        self.t_split = 1.0 if self.finite else fit_window[1]
        self._fit(finite_total)
        t_max = 1e6 if t_max is None else max(float(t_max), 2 * self.t_split)
        u0, u1 = math.log(self.t_split), math.log(t_max)
        self.u, self.w = gauss_legendre_panels(u0, u1, panel_width, panel_order)
        self.theta_u = np.asarray(theta(np.exp(self.u)), dtype=float)
        self.t_max = t_max
        self.tail = None
        if power_tail:
            self._tail(decay)
        if self.finite:
            lo = math.log(1e-18)
            self.u_r, self.w_r = gauss_legendre_panels(lo, u0, panel_width, panel_order)
            tr = np.exp(self.u_r)
            if residual is None:
                self.resid_r = np.asarray(theta(tr), dtype=float) - self._model(tr)
            else:
                self.resid_r = np.asarray(residual(tr), dtype=float)
            # below t_lo the residual is linear in t: c t, integrated analytically
            self.t_lo = math.exp(lo)
            self.resid_slope = float(np.asarray(residual(np.array([self.t_lo])) if residual is not None
                                                else theta(np.array([self.t_lo])) - finite_total)[0]) / self.t_lo
        self.error_estimate = self.fit_residual

    def _fit(self, finite_total):
        if self.finite:
            self.powers = np.array([0.0])
            self.coefs = np.array([float(finite_total)])
            self.fit_residual = 0.0
            return
        powers = [-self.d / 2 + j for j in range(3)]
        if not any(abs(p) < 1e-12 for p in powers):
            powers.append(0.0)
        self.powers = np.array(powers)
        t = np.geomspace(*self.fit_window, FIT_SAMPLES)
        y = np.asarray(self.theta(t), dtype=float)
        if np.any(~np.isfinite(y)) or np.any(y <= 0):
            raise InstabilityError("heat trace is not positive and finite on the small-t window")
        basis = t[:, None] ** self.powers[None, :] / y[:, None]
        scale = np.linalg.norm(basis, axis=0)
        coef, *_ = np.linalg.lstsq(basis / scale, np.ones_like(y), rcond=None)
        self.coefs = coef / scale
        resid = self._model(t) / y - 1
        self.fit_residual = float(np.sqrt(np.mean(resid ** 2)))
        if self.fit_residual > FIT_RTOL:
            raise InstabilityError(
                f"small-t expansion does not stabilize (relative residual {self.fit_residual:.2e}); "
                "the spectrum may be too short")

    def _model(self, t):
        t = np.asarray(t, dtype=float)
        return (t[..., None] ** self.powers * self.coefs).sum(axis=-1)

    def _tail(self, decay):
        """Power-law tail beyond t_max, from theta on its last decade."""
        th_end = float(self.theta(np.array([self.t_max]))[0])
        th_mid = float(self.theta(np.array([self.t_max / 10]))[0])
        if th_end <= 0 or th_end < 1e-30 * max(abs(self.theta_u).max(), 1e-300):
            return
        half_alpha = -math.log10(th_end / th_mid)
        if decay is not None:
            half_alpha = decay / 2
        self.tail = (th_end, half_alpha)

    def gamma_times_zeta(self, s):
        """Gamma(s) zeta(s) without the model part (used by ``__call__``)."""
        s = complex(s)
        num = csum(self.w * np.exp(s * self.u) * self.theta_u)
        if self.tail is not None:
            th_end, half_alpha = self.tail
            if not s.real < half_alpha:
                raise DivergenceError(f"large-t integral diverges for Re(s) >= {half_alpha}")
            num += th_end * self.t_max ** s / (half_alpha - s)
        if self.finite:
            num += csum(self.w_r * np.exp(s * self.u_r) * self.resid_r)
            num += self.resid_slope * self.t_lo ** (s + 1) / (s + 1)
        return num

    def __call__(self, s):
        s = complex(s)
        if self.finite and not s.real > -1:
            # the residual theta - theta(0+) is O(t), so its Mellin integral needs Re s > -1
            raise PreconditionError(f"finite-operator continuation needs Re(s) > -1 (got {s})")
        value = rgamma(s) * self.gamma_times_zeta(s)
        for p, c in zip(self.powers, self.coefs):
            if abs(p) < 1e-12:
                # c t0^s / (s Gamma(s)) = c t0^s / Gamma(s + 1), regular at s = 0
                value += c * self.t_split ** s * rgamma(s + 1)
            else:
                value += c * self.t_split ** (s + p) / (s + p) * rgamma(s)
        return complex(value)

    def at_zero(self):
        return float(sum(c for p, c in zip(self.powers, self.coefs) if abs(p) < 1e-12))

    def derivative_at_zero(self, h0=1e-2, tol=1e-9, h_min=1e-6):
        """Central differences with step halving until successive estimates agree."""
        h = h0
        prev = ((self(h) - self(-h)) / (2 * h)).real
        while True:
            h /= 2
            if h < h_min:
                raise InstabilityError(f"zeta'(0) did not stabilize to {tol} before h < {h_min}")
            cur = ((self(h) - self(-h)) / (2 * h)).real
            if abs(cur - prev) < tol:
                # the O(h^2) error of the last two estimates cancels in this combination
                return (4 * cur - prev) / 3
            prev = cur


def _spectrum_theta(spec, lambda_shift):
    lam = spec.values + lambda_shift
    keep = lam > 0
    lam, mult = lam[keep], spec.multiplicities[keep]

    def theta(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, lam)) @ mult

    def residual(t):
        # theta(t) - theta(0+) without cancellation, for finite operators
        t = np.asarray(t, dtype=float)
        return np.expm1(-np.multiply.outer(t, lam)) @ mult
    theta.residual = residual
    return theta, lam, mult


def spectral_mellin(spec, lambda_shift=0.0, panel_width=PANEL_WIDTH):
    """Build the Mellin-split evaluator for the positive part of ``spec + lambda_shift``."""
    theta, lam, mult = _spectrum_theta(spec, lambda_shift)
    if len(lam) == 0:
        raise PreconditionError(f"{spec.label}: no positive eigenvalues")
    if spec.heat_dimension > 0 and lam[-1] * FIT_WINDOW[0] < 40:
        raise InstabilityError(
            f"{spec.label}: largest eigenvalue {lam[-1]} too small to resolve t >= {FIT_WINDOW[0]}; "
            "the spectrum is too short to stabilize the small-t expansion")
    # exp(-lam t) tail: t^(Re s - 1) exp(-lam_0 t) is below 1e-20 past t_max for Re s <= 20
    t_max = (120 + math.log(mult.sum())) / lam[0]
    return MellinZeta(theta, spec.heat_dimension, finite_total=mult.sum(), t_max=t_max,
                      power_tail=False, panel_width=panel_width, residual=theta.residual)


def spectral_zeta_direct(spec, s, lambda_shift=0.0):
    lam = spec.values + lambda_shift
    keep = lam > 0
    return csum(spec.multiplicities[keep] * np.power(lam[keep].astype(complex), -complex(s)))


def spectral_zeta(spec, s, lambda_shift=0.0, method="auto"):
    """zeta(s) = sum over positive eigenvalues of (lambda + shift)^(-s).

    ``method="direct"`` sums the list (needs Re s > d/2 and only sees the listed
    eigenvalues).  ``method="mellin"`` uses the split heat-trace integral, which
    extends to s near 0 and accounts for the unlisted tail through the small-t
    expansion.  ``"auto"`` is direct for finite operators and Mellin otherwise.
    """
    if method == "auto":
        method = "direct" if spec.heat_dimension == 0 else "mellin"
    if method == "direct":
        if spec.heat_dimension > 0 and not complex(s).real > spec.heat_dimension / 2:
            raise DivergenceError(f"direct sum needs Re(s) > {spec.heat_dimension / 2}")
        return spectral_zeta_direct(spec, s, lambda_shift)
    if method == "mellin":
        return spectral_mellin(spec, lambda_shift)(s)
    raise ValueError(f"unknown method {method!r}")


def det_prime(spec, lambda_shift=0.0):
    """exp(-zeta'(0)) with zeta'(0) by central differences on the Mellin split."""
    return math.exp(-spectral_mellin(spec, lambda_shift).derivative_at_zero())


def log_det_prime(spec, lambda_shift=0.0):
    return -spectral_mellin(spec, lambda_shift).derivative_at_zero()


def _indexed(items):
    return sorted(items.items()) if isinstance(items, dict) else list(enumerate(items))


def torsion(specs):
    """prod_q det'(Delta_q)^(q (-1)^(q+1)); ``specs`` is a list or {q: spectrum}."""
    logs = [torsion_exponent(q) * log_det_prime(spec)
            for q, spec in _indexed(specs) if torsion_exponent(q) != 0]
    return math.exp(math.fsum(logs))


# ------------------------------------------------------------------ L2 side

def _check_bound(model, r_end):
    a_coef, k = model.bound
    probe = np.linspace(0.0, r_end, 65)
    if np.any(model.p(probe) > a_coef * (1 + probe) ** k * (1 + 1e-9) + 1e-300):
        raise QuadratureError(f"{model.label}: density exceeds its declared bound {a_coef}(1+r)^{k}")


def _l2_integral(model, t, rtol, residual=False):
    """int_0^inf k(t r^2) p(r) dr with k = exp(-x), or expm1(-x) when ``residual``."""
    kernel = (lambda x: np.expm1(-x)) if residual else (lambda x: np.exp(-x))
    if model.density["type"] == "table":
        r, wp = model._table_rule
        return float(math.fsum((wp * kernel(t * r * r)).tolist()))
    a_coef, k = model.bound
    r_cut = max(math.sqrt(46.0 / t), 1.0)
    value, _, _ = _quad(lambda r: float(kernel(t * r * r)) * float(model.p(r)), 0.0, r_cut, rtol)
    # tail beyond r_cut under p(r) <= A (2r)^k
    tail = a_coef * 2 ** k * 0.5 * t ** (-(k + 1) / 2) * gamma_fn((k + 1) / 2) * \
        gammaincc((k + 1) / 2, t * r_cut ** 2)
    if residual:
        # expm1 -> -1 past r_cut: the density mass beyond r_cut is not small
        raise PreconditionError(f"{model.label}: unbounded support has no finite trace at t = 0")
    if tail > 1e-9 * abs(value):
        raise QuadratureError(f"{model.label}: tail bound {tail:.3e} too large relative to {value:.3e}")
    return value


def l2_heat_trace(model, t, rtol=1e-12):
    """volume * int_0^inf exp(-t (r^2 + shift)) p(r) dr, with a tail bound check."""
    if not t > 0:
        raise PreconditionError(f"t must be positive (got {t})")
    _check_bound(model, min(max(math.sqrt(46.0 / t), 1.0), model.support_end))
    return model.volume * math.exp(-t * model.shift) * _l2_integral(model, t, rtol)


def _table_traces(model, ts, residual=False):
    """Vectorized tabulated-density integrals for many t at once."""
    r, wp = model._table_rule
    out = np.empty(len(ts))
    for i in range(0, len(ts), 64):
        x = np.multiply.outer(ts[i:i + 64], r * r)
        out[i:i + 64] = (np.expm1(-x) if residual else np.exp(-x)) @ wp
    return model.volume * out


def _model_theta(model, rtol):
    table = model.density["type"] == "table"

    def theta(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if table:
            _check_bound(model, model.support_end)
            return np.exp(-ts * model.shift) * _table_traces(model, ts)
        return np.array([l2_heat_trace(model, float(t), rtol) for t in ts])

    def residual(ts):
        # theta(t) - theta(0+) for bounded traces (shift 0, compact support)
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if table:
            return _table_traces(model, ts, residual=True)
        return np.array([model.volume * _l2_integral(model, float(t), rtol, residual=True) for t in ts])
    theta.residual = residual
    return theta


def infer_heat_dimension(model):
    t = np.array([1e-4, 1e-3])
    th = _model_theta(model, 1e-10)(t)
    return float(np.round(-2 * math.log10(th[1] / th[0]) * 2) / 2)


def novikov_shubin_slope(t, trace):
    t, trace = np.asarray(t, dtype=float), np.asarray(trace, dtype=float)
    coef = np.polyfit(np.log(t), np.log(trace), 1)
    resid = np.log(trace) - np.polyval(coef, np.log(t))
    return -2 * coef[0], float(np.sqrt(np.mean(resid ** 2)))


def novikov_shubin_estimate(samples, residual_threshold=0.05):
    """Point estimate of the large-time decay exponent alpha in trace ~ t^(-alpha/2)."""
    samples = sorted((float(t), float(v)) for t, v in samples)
    if len(samples) < 8:
        raise PreconditionError(f"need at least 8 samples (got {len(samples)})")
    t = np.array([s[0] for s in samples])
    v = np.array([s[1] for s in samples])
    if np.any(t < 1) or np.any(v <= 0):
        raise PreconditionError("samples need t >= 1 and strictly positive traces")
    if math.log10(t[-1] / t[0]) < 2:
        raise PreconditionError("sample times must span at least two decades")
    alpha, residual = novikov_shubin_slope(t, v)
    if residual > residual_threshold:
        raise IllConditionedFitError(
            f"log-log fit residual {residual:.3g} exceeds {residual_threshold}: not a power law "
            f"(alpha estimate {alpha:.4g})", alpha=alpha, residual=residual)
    if alpha < 0:
        raise IllConditionedFitError(f"negative decay exponent {alpha:.4g}", alpha=alpha, residual=residual)
    return float(alpha)


def l2_mellin(model, refine=1):
    """Mellin-split evaluator for the L2 zeta function of a Plancherel model.

    ``refine`` > 1 halves the panel width and tightens quadrature tolerances,
    serving as a precision-refinement check.
    """
    rtol = 1e-11 / refine ** 2
    theta = _model_theta(model, rtol)
    d = model.heat_dimension if model.heat_dimension is not None else infer_heat_dimension(model)
    t_probe = np.geomspace(1.0, 1e3, 12)
    alpha, _ = novikov_shubin_slope(t_probe, theta(t_probe))
    if not alpha > 0:
        raise NonpositiveAlphaError(
            f"{model.label}: large-time trace does not decay (alpha estimate {alpha:.4g})")
    t_max = 1e4 if model.shift <= 0 else min(1e4, 60.0 / model.shift)
    total = None
    if d == 0:
        # bounded trace: theta(0+) = volume * int p, the mass of the density
        if model.shift != 0:
            raise PreconditionError(f"{model.label}: heat_dimension 0 needs shift 0")
        if model.density["type"] != "table":
            raise PreconditionError(f"{model.label}: heat_dimension 0 needs a tabulated density")
        _, wp = model._table_rule
        total = model.volume * math.fsum(wp.tolist())
    return MellinZeta(theta, d, finite_total=total, t_max=t_max, panel_width=PANEL_WIDTH / refine,
                      residual=theta.residual if d == 0 else None)


def l2_log_det(model, refine=1):
    return -l2_mellin(model, refine).derivative_at_zero()


def l2_det(model, refine=1):
    return math.exp(l2_log_det(model, refine))


def l2_torsion(models, refine=1):
    """prod_p det2(Delta_p)^(p (-1)^(p+1)) over Plancherel models indexed by p."""
    logs = [torsion_exponent(q) * l2_log_det(m, refine)
            for q, m in _indexed(models) if torsion_exponent(q) != 0]
    return math.exp(math.fsum(logs))


def torsion_ratio_assembly(torsion_value, l2_torsion_value, dim_omega):
    """T / (T2)^dim(omega): the value of the normalized zeta function at zero."""
    if not (torsion_value > 0 and l2_torsion_value > 0 and dim_omega >= 1):
        raise PreconditionError("torsion values must be positive and dim_omega >= 1")
    return torsion_value / l2_torsion_value ** dim_omega


__all__ = [
    "EigenvalueSpectrum", "PlancherelModel", "MellinZeta", "BridgeReport",
    "load_eigenvalues", "load_plancherel", "plancherel_from_dict",
    "theta_geometric", "subordination_kernel", "subordination_quadrature", "resolvent_bridge_check",
    "spectral_zeta", "spectral_zeta_direct", "spectral_mellin", "det_prime", "log_det_prime", "torsion",
    "l2_heat_trace", "novikov_shubin_estimate", "l2_mellin", "l2_det", "l2_torsion",
    "torsion_ratio_assembly", "NumericError",
]
