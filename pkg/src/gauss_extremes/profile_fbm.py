"""Minimizer of the generalized variance profile for the fBm double crossing.

For fractional Brownian motion with Hurst index H on [0, T] and levels
(a, -b) with 0 < b <= a, the generalized variance of the pair
(X(t1), -X(t2)) restricted to t2 = s * t1 is minimized at t1 = T, and the
profile in the normalized variable s = t2/t1 reads

    sigma^{-2}(T, sT) = (a^2 / T^{2H}) * D_alpha(s),    alpha = b/a,

    D_alpha(s) = (alpha^2 + 2 alpha f(s) + s^{2H}) / (s^{2H} - f(s)^2),
    f(s) = (s^{2H} + 1 - (1-s)^{2H}) / 2.

The optimal s is the unique root of an increasing function G built from
A(s) = f(s) s^{1-2H}; both endpoints have known signs so the root always
brackets.  The curvature outputs are

    kappa1 = 2 H a^2 D(s*) / T^{2H+1}        (slope in t1 at the corner),
    kappa2 = a^2 D''(s*) / T^{2H+2}          (curvature along the profile),

in physical units of the time variables.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ModelError, NumericalFailure, RootNotBracketed


def f_profile(s, H):
    """Normalized covariance f(s) = Cov(X(1), X(s)) for unit fBm."""
    s = np.asarray(s, dtype=float)
    return 0.5 * (s ** (2 * H) + 1.0 - np.abs(1.0 - s) ** (2 * H))


def d_profile(s, H, alpha):
    """Profile D_alpha(s) of the generalized variance along t2 = s t1."""
    s = np.asarray(s, dtype=float)
    f = f_profile(s, H)
    num = alpha ** 2 + 2.0 * alpha * f + s ** (2 * H)
    den = s ** (2 * H) - f ** 2
    return num / den

def a_profile(s, H):
    return f_profile(s, H) * s ** (1.0 - 2.0 * H)


def g_tilde(s, H, alpha):
    """Increasing function whose root gives the optimal section s*.

    g(0+) = -alpha < 0 and g(1-) = 1 + alpha > 0, so a root is always
    bracketed on (0, 1).
    """
    a_s = a_profile(s, H)
    a_m = a_profile(1.0 - s, H)
    return alpha * (a_s - a_m) - a_m + 1.0


@dataclass
class FbmMinimizer:
    s_star: float
    t_star: float
    D_value: float
    kappa1: float
    kappa2: float


def fbm_minimizer(H, ratio, a=1.0, T=1.0):
    """Locate the variance-minimizing section for the fBm double crossing.

    Parameters
    ----------
    H : Hurst index in (0, 1).
    ratio : alpha = b/a in (0, 1]; the convention a >= b > 0 is required
        (swap the levels and the time direction otherwise).
    a, T : upper level and horizon, used to express t_star, D_value and the
        curvatures in physical units.

    Returns FbmMinimizer with s_star = t2*/t1* in (0, 1), t_star = s_star*T,
    D_value = sigma^{-2} at the minimizer, and the curvatures kappa1, kappa2.
    """
    if not (0.0 < H < 1.0):
        raise DomainError("H must lie in (0, 1), got %r" % (H,))
    if ratio <= 0.0:
        raise DomainError("ratio b/a must be positive, got %r" % (ratio,))
    if ratio > 1.0:
        raise ModelError(
            "fbm_minimizer assumes a >= b (ratio <= 1); got ratio=%r" % (ratio,)
        )
    if a <= 0.0 or T <= 0.0:
        raise DomainError("a and T must be positive")

    lo, hi = 1e-12, 1.0 - 1e-12
    g_lo = g_tilde(lo, H, ratio)
    g_hi = g_tilde(hi, H, ratio)
    if not (g_lo < 0.0 < g_hi):
        raise RootNotBracketed(
            "G(%g)=%g, G(%g)=%g do not bracket a root" % (lo, g_lo, hi, g_hi)
        )
    s_star = brentq(g_tilde, lo, hi, args=(H, ratio), xtol=1e-14, rtol=1e-15)

    d_star = float(d_profile(s_star, H, ratio))
    scale = a ** 2 / T ** (2 * H)
    kappa1 = 2.0 * H * scale * d_star / T

    # Second derivative of D along the section, by a Richardson-extrapolated
    # central difference.  The profile is smooth at s* (s* is interior), so
    # h ~ 1e-4 is comfortably inside the quadratic regime.
    h = 1e-4
    d2 = _second_derivative(lambda s: d_profile(s, H, ratio), s_star, h)
    if not np.isfinite(d2) or d2 <= 0.0:
        raise NumericalFailure(
            "profile curvature D''(s*)=%r is not positive" % (d2,)
        )
    kappa2 = scale * d2 / T ** 2

    return FbmMinimizer(
        s_star=float(s_star),
        t_star=float(s_star * T),
        D_value=float(scale * d_star),
        kappa1=float(kappa1),
        kappa2=float(kappa2),
    )


def _second_derivative(fun, x, h):
    def central(step):
        return (fun(x + step) - 2.0 * fun(x) + fun(x - step)) / step ** 2

    c1 = central(h)
    c2 = central(h / 2.0)
    # Errors are O(h^2): one Richardson step cancels the leading term.
    return (4.0 * c2 - c1) / 3.0
