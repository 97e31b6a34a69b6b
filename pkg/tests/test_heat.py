import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geozeta.errors import (IllConditionedFitError, InstabilityError, MissingTraceError, NonpositiveAlphaError,
                            ParseError, PreconditionError, QuadratureError, ValidationError)
from geozeta.heat import (EigenvalueSpectrum, PlancherelModel, det_prime, l2_det, l2_heat_trace, l2_mellin,
                          l2_torsion, load_eigenvalues, load_plancherel, novikov_shubin_estimate,
                          resolvent_bridge_check, spectral_mellin, spectral_zeta, subordination_kernel,
                          subordination_quadrature, theta_geometric, torsion, torsion_ratio_assembly)
from geozeta.lie import get_datum
from geozeta.zeta import log_selberg_derivative

from conftest import h2_synthetic, make_spectrum, primitive

DATA = __import__("pathlib").Path(__file__).resolve().parents[1] / "src" / "geozeta" / "data"
H2_DENSITY = {"type": "expr", "expr": "r*tanh(pi*r)/(2*pi)"}


@pytest.fixture(scope="module")
def circle():
    n = np.arange(1, 2001)
    return EigenvalueSpectrum.from_arrays(n ** 2.0, [2] * len(n), 1, "circle")


def h2_model(volume=4 * math.pi, shift=0.25):
    return PlancherelModel(H2_DENSITY, shift, volume, "h2", heat_dimension=2)


# ---------------------------------------------------------------- data types

def test_eigenvalue_validation():
    with pytest.raises(ValidationError):
        EigenvalueSpectrum(((2.0, 1), (1.0, 1)), 1.0)
    with pytest.raises(ValidationError):
        EigenvalueSpectrum(((1.0, 0),), 1.0)
    with pytest.raises(ValidationError):
        EigenvalueSpectrum(((-1.0, 1),), 1.0)


def test_shipped_files_load():
    assert len(load_eigenvalues(DATA / "circle_eigenvalues.json").eigenvalues) == 2000
    assert load_plancherel(DATA / "h2_plancherel.json").heat_dimension == 2


def test_density_expression_is_sandboxed():
    for bad in ("__import__('os')", "r.__class__", "open('x')", "[r]"):
        with pytest.raises(ParseError):
            PlancherelModel({"type": "expr", "expr": bad}, 0.0, 1.0).p(1.0)


# ---------------------------------------------------------------- theta

def _theta_oracle(classes, rho, t):
    # straightforward loop over classes for the trivial shift entry
    total = mpmath.mpf(0)
    for length, l0, eig in classes:
        w = l0 * mpmath.e ** (-rho * length) / (1 - eig)
        total += w * mpmath.e ** (-length ** 2 / (4 * t)) / mpmath.sqrt(4 * mpmath.pi * t)
    return float(total)


def test_theta_empty(h2):
    assert theta_geometric(make_spectrum([], cutoff=3.0), h2, 1.0) == 0.0


def test_theta_single_class(h2):
    spec = make_spectrum([primitive("g", 1.0, [math.exp(-1)])], cutoff=1.0)
    expected = math.exp(-0.5) / (1 - math.exp(-1)) * math.exp(-0.25) / math.sqrt(4 * math.pi)
    assert theta_geometric(spec, h2, 1.0) == pytest.approx(expected, rel=1e-15)


def test_theta_matches_loop(h2):
    spec = h2_synthetic(2, 6.0)
    classes = [(c.length, c.primitive_length, c.n_eigenvalues[0].real) for c in spec.classes]
    for t in (0.05, 0.3, 2.0):
        assert theta_geometric(spec, h2, t) == pytest.approx(_theta_oracle(classes, 0.5, t), rel=1e-13)


def test_theta_rapid_decay(h2):
    spec = h2_synthetic(1)
    c = abs(theta_geometric(spec, h2, 0.05)) / math.exp(-1 / (8 * 0.05))
    for t in np.geomspace(1e-3, 0.05, 40):
        assert abs(theta_geometric(spec, h2, t)) <= c * math.exp(-1 / (8 * t)) * (1 + 1e-12)


def test_theta_missing_trace():
    with pytest.raises(MissingTraceError):
        theta_geometric(h2_synthetic(1), get_datum("CH2-model"), 1.0)


def test_theta_nonpositive_t(h2):
    with pytest.raises(PreconditionError):
        theta_geometric(h2_synthetic(1), h2, 0.0)


# ---------------------------------------------------------------- subordination

@pytest.mark.parametrize("length", [0.5, 1, 2, 4])
@pytest.mark.parametrize("mu", [0.5, 1, 4, 25])
def test_subordination_grid(length, mu):
    assert abs(subordination_quadrature(length, mu) - subordination_kernel(length, mu)) <= 1e-8


def test_subordination_against_mpmath():
    with mpmath.workdps(30):
        f = lambda t: mpmath.e ** (-4 / (4 * t) - t) / mpmath.sqrt(4 * mpmath.pi * t)
        oracle = float(mpmath.quad(f, [0, 1, 2, mpmath.inf]))
    assert oracle == pytest.approx(math.exp(-2) / 2, rel=1e-14)
    assert subordination_quadrature(2.0, 1.0) == pytest.approx(oracle, abs=1e-8)


def test_subordination_stiff():
    q = subordination_quadrature(1.0, 100.0)
    assert q == pytest.approx(math.exp(-10) / 20, rel=1e-6)


def test_bridge_assembled(h2):
    spec = h2_synthetic(3)
    for lam in (2.0, 9.0, 100.0):
        rep = resolvent_bridge_check(spec, h2, lam, h2.shift_table[0])
        assert rep.kernel_max_error <= 1e-8
        assert rep.relative_error <= 1e-6
        direct = log_selberg_derivative(spec, 0.5 + math.sqrt(lam), trace_tag="trivial") / (2 * math.sqrt(lam))
        assert rep.zeta_side == pytest.approx(direct, rel=1e-14)


def test_bridge_shifted_entry():
    from geozeta.spectrum import synth_spectrum
    d = get_datum("CH2-model")
    spec = synth_spectrum(d, 1, 4.0, 1.0)
    rep = resolvent_bridge_check(spec, d, 7.0, d.shift_table[1])
    assert rep.mu == 4.0
    assert rep.relative_error <= 1e-6


def test_bridge_empty(h2):
    rep = resolvent_bridge_check(make_spectrum([], cutoff=2.0), h2, 4.0, h2.shift_table[0])
    assert rep.heat_side == 0 and rep.zeta_side == 0


def test_bridge_precondition(h2):
    with pytest.raises(PreconditionError):
        resolvent_bridge_check(h2_synthetic(1), get_datum("CH2-model"), 2.0, get_datum("CH2-model").shift_table[1])


# ---------------------------------------------------------------- spectral zeta and det'

def test_circle_zeta_at_one(circle):
    assert spectral_zeta(circle, 1.0).real == pytest.approx(2 * float(mpmath.zeta(2)), abs=1e-12)


def test_circle_zeta_at_zero(circle):
    assert spectral_mellin(circle).at_zero() == pytest.approx(-1.0, abs=1e-12)
    assert spectral_zeta(circle, 0.0).real == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("s", [1.5, 2.0, 3 + 1j, 10.0])
def test_two_route_zeta(circle, s):
    # the direct sum stops at the 2000th eigenvalue; bound what it misses by 2 int_N^inf x^(-2 Re s) dx
    missing = 2 * 2000 ** (1 - 2 * complex(s).real) / (2 * complex(s).real - 1)
    diff = abs(spectral_zeta(circle, s, method="mellin") - spectral_zeta(circle, s, method="direct"))
    assert diff <= 1e-9 + missing


def test_two_route_large_s(circle):
    assert abs(spectral_zeta(circle, 10, method="mellin") - spectral_zeta(circle, 10, method="direct")) <= 1e-10


def test_single_eigenvalue_one():
    spec = EigenvalueSpectrum.from_arrays([1.0])
    for s in (0.5, 2.0, -0.5 + 1j):
        assert spectral_zeta(spec, s) == pytest.approx(1.0)
        assert spectral_mellin(spec)(s) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(PreconditionError):
        spectral_mellin(spec)(-1.5)


def test_circle_det_prime(circle):
    assert det_prime(circle) == pytest.approx((2 * math.pi) ** 2, abs=1e-5)


def test_single_eigenvalue_det():
    assert det_prime(EigenvalueSpectrum.from_arrays([math.e])) == pytest.approx(math.e, rel=1e-10)


def test_scaling_law(circle):
    z0 = spectral_mellin(circle).at_zero()
    assert det_prime(circle.scaled(2.0)) == pytest.approx(2 ** z0 * det_prime(circle), rel=1e-8)


def test_short_spectrum_unstable():
    n = np.arange(1, 11)
    with pytest.raises(InstabilityError):
        det_prime(EigenvalueSpectrum.from_arrays(n ** 2.0, [2] * 10, 1))


def test_zero_modes_excluded():
    a = EigenvalueSpectrum.from_arrays([0.0, 0.0, 2.0, 5.0], [1, 1, 1, 1])
    assert det_prime(a) == pytest.approx(10.0, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.1, 50.0), min_size=1, max_size=5),
       st.lists(st.floats(0.1, 50.0), min_size=1, max_size=5))
def test_det_multiplicative(xs, ys):
    a = EigenvalueSpectrum.from_arrays(sorted(xs))
    b = EigenvalueSpectrum.from_arrays(sorted(ys))
    assert det_prime(a.union(b)) == pytest.approx(det_prime(a) * det_prime(b), rel=1e-8)
    assert det_prime(a) == pytest.approx(math.prod(xs), rel=1e-8)


# ---------------------------------------------------------------- torsion

def test_torsion_examples():
    a = EigenvalueSpectrum.from_arrays([2.0, 3.0])
    assert torsion([a, a]) == pytest.approx(det_prime(a), rel=1e-12)
    assert torsion([a, EigenvalueSpectrum.from_arrays([4.0])]) == pytest.approx(4.0, rel=1e-10)
    b, c = EigenvalueSpectrum.from_arrays([5.0]), EigenvalueSpectrum.from_arrays([1.5, 3.0])
    assert torsion({0: a, 1: b, 2: c}) == pytest.approx(5.0 / 4.5 ** 2, rel=1e-9)


def test_ratio_examples():
    assert torsion_ratio_assembly(8, 2, 3) == pytest.approx(1.0, rel=1e-15)
    assert torsion_ratio_assembly(5, 1, 7) == pytest.approx(5.0, rel=1e-15)
    with pytest.raises(PreconditionError):
        torsion_ratio_assembly(-1, 1, 1)


# ---------------------------------------------------------------- L2 side

def test_l2_trace_table_against_oracle():
    m = load_plancherel(DATA / "toy_plancherel.json")
    with mpmath.workdps(32):
        oracle = float(mpmath.quad(lambda r: r * mpmath.e ** (-r - r * r), [0, 1, 5, 40]))
    # cubic-spline interpolation of the tabulated density limits agreement
    assert l2_heat_trace(m, 1.0) == pytest.approx(oracle, rel=1e-9)


def test_l2_trace_linear_in_volume():
    m = h2_model()
    assert l2_heat_trace(m.with_volume(2 * m.volume), 0.7) == pytest.approx(2 * l2_heat_trace(m, 0.7), rel=1e-14)


def test_l2_small_t_exponent():
    m = h2_model()
    t = np.geomspace(1e-3, 1e-2, 8)
    slope = np.polyfit(np.log(t), np.log([l2_heat_trace(m, x) for x in t]), 1)[0]
    assert -2 * slope == pytest.approx(2.0, rel=0.05)


def test_l2_bound_violation():
    m = PlancherelModel({"type": "expr", "expr": "r**3"}, 0.0, 1.0, bound=(1.0, 1.0))
    with pytest.raises(QuadratureError):
        l2_heat_trace(m, 1.0)


def test_l2_refinement_self_consistency():
    m = h2_model()
    assert math.log(l2_det(m)) == pytest.approx(math.log(l2_det(m, refine=2)), abs=1e-6)


def test_l2_zeta_large_s_against_direct_integral():
    # for Re s large the split evaluator must reproduce (1/Gamma(s)) int t^(s-1) theta dt
    m = h2_model()
    with mpmath.workdps(20):
        th = lambda t: l2_heat_trace(m, float(t))
        oracle = float(mpmath.quad(lambda t: t ** 2 * th(t), [0, 1e-2, 1, 10, 100, 400]) / 2)
    assert l2_mellin(m)(3.0).real == pytest.approx(oracle, rel=1e-7)


def test_l2_torsion_trivial_and_volume():
    m = h2_model()
    assert l2_torsion([m]) == 1.0
    t1 = l2_torsion([m, m])
    t2 = l2_torsion([m, m.with_volume(2 * m.volume)])
    assert t2 == pytest.approx(t1 ** 2, rel=1e-8)


def test_l2_nonpositive_alpha():
    with pytest.raises(NonpositiveAlphaError):
        l2_det(h2_model(shift=-0.5))


def test_l2_bounded_trace_table():
    m = load_plancherel(DATA / "toy_plancherel.json")
    assert l2_det(m) == pytest.approx(l2_det(m, refine=2), rel=1e-8)


# ---------------------------------------------------------------- Novikov-Shubin

def test_ns_exact_power_law():
    t = np.geomspace(1, 1e3, 20)
    assert novikov_shubin_estimate(zip(t, t ** -1.5)) == pytest.approx(3.0, abs=1e-6)


def test_ns_exponential_flagged():
    est = []
    for top in (1e2, 3e2):
        t = np.geomspace(1, top, 20)
        with pytest.raises(IllConditionedFitError) as info:
            novikov_shubin_estimate(zip(t, np.exp(-t)))
        est.append(info.value.alpha)
    assert est[1] > est[0]


def test_ns_perturbed():
    t = np.geomspace(1, 1e4, 40)
    trace = 5 * t ** -0.5 * (1 + 0.01 * np.sin(np.log(t)))
    assert novikov_shubin_estimate(zip(t, trace)) == pytest.approx(1.0, abs=0.05)


def test_ns_preconditions():
    t = np.geomspace(1, 1e3, 5)
    with pytest.raises(PreconditionError):
        novikov_shubin_estimate(zip(t, t ** -1.0))
    t = np.geomspace(1, 50, 10)
    with pytest.raises(PreconditionError):
        novikov_shubin_estimate(zip(t, t ** -1.0))
