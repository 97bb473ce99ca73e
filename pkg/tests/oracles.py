"""Independent closed-form and quadrature oracles shared by the tests."""

import math
import warnings

import numpy as np
from scipy import integrate, optimize, special


def gaussian_family_weak_norm(t: float, alpha: float, q: float) -> float:
    """Weak-L^q quasinorm (g** form) of u(x,t) = t^(-1/alpha) exp(-(x t^(-1/4))^2) in 1-D.

    The rearrangement is u*(s) = t^(-1/alpha) exp(-s^2 / (4 sqrt t)), so
    u**(s) = t^(-1/alpha) sqrt(pi) t^(1/4) erf(s / (2 t^(1/4))) / s; the
    supremum of s^(1/q) u**(s) is found by scalar maximisation in log s.
    """
    c = t ** 0.25

    def neg(logs):
        s = math.exp(logs)
        return -(s ** (1.0 / q) * math.sqrt(math.pi) * c * special.erf(s / (2 * c)) / s)

    lo, hi = math.log(c) - 10, math.log(c) + 10
    res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12, "maxiter": 1000})
    return t ** (-1.0 / alpha) * -res.fun


def kernel_oracle(x: float, t: float) -> complex:
    """Whole-line value of G(t) exp(-x^2) for eps = 0, delta = 1.

    (1/2pi) int F(xi) exp(i x xi + i t xi^4) d xi with F(xi) = sqrt(pi) exp(-xi^2/4),
    integrated on the ray xi = exp(i pi/8) s where exp(i t xi^4) = exp(-t s^4).
    """
    w = np.exp(1j * math.pi / 8)

    def f(s):
        return w * math.sqrt(math.pi) * np.exp(-(w * s) ** 2 / 4 + 1j * x * w * s - t * s ** 4) / (2 * math.pi)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        re = integrate.quad(lambda s: f(s).real, -np.inf, np.inf, epsabs=1e-13, limit=200)[0]
        im = integrate.quad(lambda s: f(s).imag, -np.inf, np.inf, epsabs=1e-13, limit=200)[0]
    return re + 1j * im


def gaussian_linear_eps_error(L: float, n_points: int, t: float, eps: float) -> float:
    """H^2 distance between the eps and eps = 0 free flows of exp(-x^2) on [-L, L).

    Uses the continuous transform F(xi) = sqrt(pi) exp(-xi^2/4) on the
    lattice xi = pi m / L: (1/(2L)) sum <xi>^4 |exp(-i t eps xi^2) - 1|^2 |F|^2.
    """
    m = np.arange(-n_points // 2, n_points // 2)
    xi = math.pi * m / L
    F = math.sqrt(math.pi) * np.exp(-xi ** 2 / 4)
    w = (1 + xi ** 2) ** 2
    fac = np.abs(np.exp(-1j * t * eps * xi ** 2) - 1) ** 2
    return math.sqrt(np.sum(w * fac * F ** 2) / (2 * L))
