"""ARIMA(p, d, q) order selection, conditional-sum-of-squares fitting and
iterated forecasting.

Polynomials follow the backshift convention

    (1 - phi_1 B - ... - phi_p B^p) (1 - B)^d X_t = (1 - theta_1 B - ... - theta_q B^q) e_t

so a positive theta means the shock enters with a negative sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal, stats

from ._accel import HAS_NUMBA, jit
from .errors import (DegenerateError, FitError, InputError, OrderSelectionError)

ADF_CRITICAL_5PCT = -2.86154  # MacKinnon (2010) asymptotic, constant only
MAX_D = 2
MAX_PQ = 5


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        for name in ("p", "d", "q"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InputError(f"ARIMA order {name} must be a nonnegative integer")
        if self.d > MAX_D:
            raise InputError(f"differencing order d={self.d} exceeds the cap of {MAX_D}")

    def __str__(self):
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True, eq=False)
class ArimaModel:
    order: ArimaOrder
    phi: np.ndarray
    theta: np.ndarray
    intercept: float
    sigma2: float
    training_length: int
    history: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    include_intercept: bool = False
    css: float = float("nan")
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class ForecastReport:
    predictions: np.ndarray
    actual: np.ndarray | None = None
    r2: float | None = None
    rmse: float | None = None
    mae: float | None = None
    order: ArimaOrder | None = None
    residual_skew: float | None = None
    residual_kurtosis: float | None = None
    predicted_threshold: float | None = None


# --------------------------------------------------------------------------
# differencing


def difference(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    for _ in range(d):
        x = np.diff(x)
    return x


def undifference(dx, d: int, initial) -> np.ndarray:
    """Invert :func:`difference` given the first ``d`` values of the original
    series. Returns the full reconstructed series."""
    initial = np.asarray(initial, dtype=float)
    if initial.size != d:
        raise InputError(f"need {d} initial values, got {initial.size}")
    # heads[k] = first value of the k-times differenced series
    heads = []
    level = initial.copy()
    for _ in range(d):
        heads.append(level[0])
        level = np.diff(level)
    x = np.asarray(dx, dtype=float)
    for k in reversed(range(d)):
        x = np.concatenate([[heads[k]], heads[k] + np.cumsum(x)])
    return x


# --------------------------------------------------------------------------
# stationarity and correlation diagnostics


def adf_test(series) -> tuple[float, bool]:
    """Augmented Dickey-Fuller t statistic with a constant and
    floor((n-1)^(1/3)) lagged differences; stationary if below the 5% value."""
    y = np.asarray(series, dtype=float)
    n = y.size
    if n < 20:
        raise InputError("ADF test needs at least 20 observations")
    if np.ptp(y) == 0:
        raise DegenerateError("ADF regression is degenerate for a constant series")
    lags = int(math.floor((n - 1) ** (1.0 / 3.0)))
    dy = np.diff(y)
    rows = dy.size - lags
    target = dy[lags:]
    cols = [np.ones(rows), y[lags:-1]]
    for i in range(1, lags + 1):
        cols.append(dy[lags - i:-i])
    X = np.column_stack(cols)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateError("ADF regression design is rank deficient")
    beta, _, _, _ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    dof = rows - X.shape[1]
    s2 = resid @ resid / dof
    if s2 <= 0:
        raise DegenerateError("ADF regression fits exactly; statistic undefined")
    cov = s2 * np.linalg.inv(X.T @ X)
    stat = float(beta[1] / math.sqrt(cov[1, 1]))
    return stat, stat < ADF_CRITICAL_5PCT


def _autocov(x, max_lag):
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    c0 = xc @ xc / n
    if c0 <= 0:
        raise DegenerateError("series has zero variance")
    return np.array([xc[:n - k] @ xc[k:] / n for k in range(max_lag + 1)])


def _check_lag(x, max_lag):
    n = len(x)
    if max_lag < 0 or (max_lag > 0 and max_lag >= n / 2):
        raise InputError(f"max_lag must be below half the series length ({n})")


def acf(series, max_lag: int) -> np.ndarray:
    """Biased autocorrelations for lags 0..max_lag."""
    _check_lag(series, max_lag)
    c = _autocov(series, max_lag)
    return c / c[0]


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations for lags 0..max_lag (Durbin-Levinson)."""
    r = acf(series, max_lag)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        a = (r[k] - phi @ r[1:k][::-1]) / v
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        out[k] = a
        if v <= 0:
            break
    return out


def _cutoff_lag(vals, band, cap):
    """Last lag of the leading run of correlations outside the band."""
    k = 0
    while k + 1 < len(vals) and abs(vals[k + 1]) > band:
        k += 1
    return min(k, cap)


def select_order(series, max_lag: int = 20) -> ArimaOrder:
    """Pick d by ADF (smallest d in 0..2 that tests stationary), then p and
    q as the lag where the PACF / ACF first falls inside the 2/sqrt(n) band,
    minus one, capped at 5."""
    x = np.asarray(series, dtype=float)
    if x.size < 50:
        raise InputError("order selection needs at least 50 observations")
    for d in range(MAX_D + 1):
        w = difference(x, d)
        if np.ptp(w) == 0:
            if d == 0:
                raise OrderSelectionError("constant series carries no dynamics to model")
            return ArimaOrder(0, d, 0)
        try:
            _, stationary = adf_test(w)
        except DegenerateError:
            stationary = False
        if stationary:
            lag = min(max_lag, (w.size - 1) // 2)
            band = 2.0 / math.sqrt(w.size)
            p = _cutoff_lag(pacf(w, lag), band, MAX_PQ)
            q = _cutoff_lag(acf(w, lag), band, MAX_PQ)
            return ArimaOrder(p, d, q)
    raise OrderSelectionError(f"no differencing order up to {MAX_D} gives a stationary series")


# --------------------------------------------------------------------------
# conditional sum of squares


@jit
def _css_residuals_loop(w, phi, theta):
    n = w.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    eps = np.zeros(n)
    for t in range(p, n):
        v = w[t]
        for i in range(p):
            v -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                v += theta[j] * eps[t - 1 - j]
        eps[t] = v
    return eps


def _css_residuals_filter(w, phi, theta):
    p = phi.size
    eps = np.zeros(w.size)
    v = w[p:].copy()
    for i in range(p):
        v -= phi[i] * w[p - 1 - i:w.size - 1 - i]
    eps[p:] = signal.lfilter([1.0], np.concatenate([[1.0], -theta]), v)
    return eps


def css_residuals(w, phi, theta, intercept=0.0) -> np.ndarray:
    """Innovations with pre-sample shocks set to zero; the first p are zero."""
    w = np.ascontiguousarray(w, dtype=float) - intercept
    phi = np.ascontiguousarray(phi, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    if HAS_NUMBA:
        return _css_residuals_loop(w, phi, theta)
    return _css_residuals_filter(w, phi, theta)


def pacf_to_coeffs(u) -> np.ndarray:
    """Map unconstrained reals to coefficients of a polynomial 1 - sum c_k z^k
    with all roots outside the unit circle (via partial autocorrelations)."""
    r = np.tanh(np.asarray(u, dtype=float))
    c = np.zeros(0)
    for k in range(r.size):
        c = np.concatenate([c - r[k] * c[::-1], [r[k]]])
    return c


def coeffs_to_pacf(c) -> np.ndarray:
    """Inverse of :func:`pacf_to_coeffs`."""
    c = np.asarray(c, dtype=float).copy()
    u = np.zeros(c.size)
    for k in range(c.size - 1, -1, -1):
        r = c[k]
        if abs(r) >= 1:
            raise InputError("polynomial is not stationary/invertible")
        u[k] = np.arctanh(r)
        c = (c[:k] + r * c[:k][::-1]) / (1 - r * r)
    return u


def _unpack(params, p, q, include_intercept, mu0):
    phi = pacf_to_coeffs(params[:p])
    theta = pacf_to_coeffs(params[p:p + q])
    mu = params[p + q] if include_intercept else 0.0
    return phi, theta, mu


def fit(series, order, include_intercept: bool | None = None,
        maxiter: int | None = None) -> ArimaModel:
    """Estimate an ARIMA model by conditional sum of squares.

    Coefficients are searched in partial-autocorrelation space with
    Nelder-Mead starting from zero, which keeps the AR part stationary and
    the MA part invertible. A level term is estimated when
    ``include_intercept`` is true (default: only when d == 0); for d == 1 it
    acts as a drift.
    """
    if not isinstance(order, ArimaOrder):
        order = ArimaOrder(*order)
    p, d, q = order.p, order.d, order.q
    x = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputError("series contains non-finite values")
    if x.size < 10 * (p + q + 1) + d:
        raise InputError(f"series too short for ARIMA{order}: need {10 * (p + q + 1) + d}")
    if include_intercept is None:
        include_intercept = d == 0
    w = difference(x, d)
    scale = float(np.std(w)) or 1.0
    mu0 = float(w.mean()) if include_intercept else 0.0
    n_eff = w.size - p

    def objective(params):
        phi, theta, mu = _unpack(params, p, q, include_intercept, mu0)
        e = css_residuals(w, phi, theta, mu)[p:]
        return float(e @ e) / (n_eff * scale * scale)

    k = p + q + int(include_intercept)
    x0 = np.zeros(k)
    if include_intercept:
        x0[-1] = mu0
    iterations = 0
    if k:
        simplex = np.tile(x0, (k + 1, 1))
        for i in range(k):
            simplex[i + 1, i] += 0.1 * scale if (include_intercept and i == k - 1) else 0.1
        res = optimize.minimize(
            objective, x0, method="Nelder-Mead",
            options={"initial_simplex": simplex, "xatol": 1e-7, "fatol": 1e-12,
                     "maxiter": maxiter or 2000 * k, "maxfev": 4000 * k,
                     "adaptive": k > 2})
        if not res.success:
            raise FitError(f"CSS minimisation did not converge for ARIMA{order}: {res.message}",
                           best_params=res.x, best_objective=res.fun, iterations=res.nit)
        best = res.x
        iterations = int(res.nit)
    else:
        best = x0
    phi, theta, mu = _unpack(best, p, q, include_intercept, mu0)
    eps = css_residuals(w, phi, theta, mu)
    css = float(eps[p:] @ eps[p:])
    dof = max(w.size - p - q, 1)
    return ArimaModel(order, phi, theta, float(mu), css / dof, int(x.size), x.copy(), eps,
                      bool(include_intercept), css, iterations)


def forecast(model: ArimaModel, horizon: int) -> np.ndarray:
    """Iterated conditional-mean forecasts with future shocks set to zero."""
    if int(horizon) != horizon or horizon < 1:
        raise InputError("horizon must be a positive integer")
    p, d, q = model.order.p, model.order.d, model.order.q
    w = list(difference(model.history, d))
    eps = list(model.residuals) + [0.0] * horizon
    mu = model.intercept
    n = len(w)
    for h in range(horizon):
        t = n + h
        v = mu
        for i in range(p):
            v += model.phi[i] * (w[t - 1 - i] - mu)
        for j in range(q):
            v -= model.theta[j] * eps[t - 1 - j]
        w.append(v)
    fw = np.array(w[n:])
    # integrate back up one differencing level at a time
    for k in reversed(range(d)):
        last = difference(model.history, k)[-1]
        fw = last + np.cumsum(fw)
    return fw


def score(actual, predicted) -> tuple[float, float, float]:
    """(r2, rmse, mae) of predictions against actuals."""
    a = np.asarray(actual, dtype=float)
    f = np.asarray(predicted, dtype=float)
    if a.shape != f.shape or a.ndim != 1 or a.size < 2:
        raise InputError("actual and predicted must be equal-length 1-D arrays of length >= 2")
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0:
        raise DegenerateError("R^2 undefined: actual values have zero variance")
    err = a - f
    r2 = 1.0 - float(err @ err) / ss_tot
    rmse = math.sqrt(float(err @ err) / a.size)
    mae = float(np.mean(np.abs(err)))
    return r2, rmse, mae


def residual_shape(model: ArimaModel) -> tuple[float, float]:
    """Skewness and excess kurtosis of the fitted innovations."""
    e = model.residuals[model.order.p:]
    if e.size < 3 or np.ptp(e) == 0:
        return 0.0, 0.0
    return float(stats.skew(e)), float(stats.kurtosis(e))
