"""Estimator-style wrappers (fit / transform / predict, get_params).

The functional API in ``zeta`` and ``heat`` is the primary interface.  These
classes hold fitted state so that repeated evaluation over arrays of s or t
reads naturally and composes with scikit-learn tooling.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import heat, zeta
from .lie import get_datum
from .spectrum import complete_powers
from .validation import check_complex_array, check_positive_array


class SelbergZeta(BaseEstimator):
    """Truncated log Z(s) of a fitted length spectrum."""

    def __init__(self, use_omega=True, trace_tag=None, method="closed", n_max=None):
        self.use_omega = use_omega
        self.trace_tag = trace_tag
        self.method = method
        self.n_max = n_max

    def fit(self, spectrum, y=None):
        self.spectrum_ = complete_powers(spectrum)
        self.abscissa_ = self.spectrum_.abscissa
        return self

    def evaluate(self, S):
        check_is_fitted(self, "spectrum_")
        return [zeta.log_selberg(self.spectrum_, s, n_max=self.n_max, use_omega=self.use_omega,
                                 trace_tag=self.trace_tag, method=self.method)
                for s in check_complex_array(S)]

    def transform(self, S):
        """log Z at each point of S."""
        return np.array([e.log_value for e in self.evaluate(S)])

    def predict(self, S):
        return np.exp(self.transform(S))

    def truncation_bounds(self, S):
        return np.array([e.truncation_bound for e in self.evaluate(S)])


class RuelleZeta(BaseEstimator):
    """log of the Ruelle zeta function, by factorization or directly."""

    def __init__(self, datum=None, method="factorized", use_omega=True):
        self.datum = datum
        self.method = method
        self.use_omega = use_omega

    def fit(self, spectrum, y=None):
        self.spectrum_ = complete_powers(spectrum)
        self.datum_ = get_datum(self.datum or spectrum.datum_name)
        return self

    def transform(self, S):
        check_is_fitted(self, "spectrum_")
        return np.array([zeta.log_ruelle(self.spectrum_, s, self.datum_, self.method, self.use_omega).log_value
                         for s in check_complex_array(S)])

    def predict(self, S):
        return np.exp(self.transform(S))


class GeodesicTheta(BaseEstimator):
    """Geodesic side of the heat theta series as a function of t."""

    def __init__(self, datum=None, use_omega=True):
        self.datum = datum
        self.use_omega = use_omega

    def fit(self, spectrum, y=None):
        self.spectrum_ = complete_powers(spectrum)
        self.datum_ = get_datum(self.datum or spectrum.datum_name)
        return self

    def transform(self, t):
        check_is_fitted(self, "spectrum_")
        return np.array([heat.theta_geometric(self.spectrum_, self.datum_, x, self.use_omega)
                         for x in check_positive_array(t)])

    predict = transform


class SpectralZeta(BaseEstimator):
    """Spectral zeta function of an eigenvalue list, continued by the Mellin split."""

    def __init__(self, lambda_shift=0.0, method="auto"):
        self.lambda_shift = lambda_shift
        self.method = method

    def fit(self, spec, y=None):
        self.spec_ = spec
        self.mellin_ = heat.spectral_mellin(spec, self.lambda_shift)
        self.zeta_at_zero_ = self.mellin_.at_zero()
        self.log_det_prime_ = -self.mellin_.derivative_at_zero()
        self.det_prime_ = math.exp(self.log_det_prime_)
        return self

    def transform(self, S):
        check_is_fitted(self, "mellin_")
        S = check_complex_array(S)
        method = self.method
        if method == "auto":
            method = "direct" if self.spec_.heat_dimension == 0 else "mellin"
        if method == "mellin":
            return np.array([self.mellin_(s) for s in S])
        return np.array([heat.spectral_zeta(self.spec_, s, self.lambda_shift, method) for s in S])

    predict = transform


class NovikovShubinEstimator(BaseEstimator):
    """Fit trace(t) ~ C t^(-alpha/2) on large-time samples."""

    def __init__(self, residual_threshold=0.05):
        self.residual_threshold = residual_threshold

    def fit(self, t, trace):
        t = check_positive_array(t, "t")
        trace = np.asarray(trace, dtype=float).ravel()
        self.alpha_ = heat.novikov_shubin_estimate(zip(t, trace), self.residual_threshold)
        _, self.residual_ = heat.novikov_shubin_slope(t, trace)
        self.log_scale_ = float(np.mean(np.log(trace) + self.alpha_ / 2 * np.log(t)))
        return self

    def predict(self, t):
        check_is_fitted(self, "alpha_")
        t = check_positive_array(t, "t")
        return np.exp(self.log_scale_ - self.alpha_ / 2 * np.log(t))
