"""Closed-form building blocks of the confined kinetic Fokker-Planck model.

The model is the linear kinetic equation

    df/dt = -v . grad_x f + grad_x V . grad_v f + div_v(M grad_v(f / M))

on phase space (x, v) in R^d x R^d, with confining potential
V(x) = <x>^alpha / alpha (where <z> = sqrt(1 + |z|^2)) and a local velocity
equilibrium M that is either sub-exponential, M ~ exp(-<v>^beta / beta), or
fat-tailed polynomial, M ~ <v>^(-d-gamma).

This module evaluates every closed-form quantity attached to that equation:
the potential and its gradient, the normalised equilibria and their
logarithmic drifts, the mechanical energy E = |v|^2/2 + V(x), the candidate
Lyapunov functions H = E^ell + eps <x>^A <v>^(-B) (x.v), the dual (adjoint)
operator applied analytically to E^ell, to the cross term, to H and to
weights built from H, the concave comparison function used in the drift
inequality, the sub-geometric decay profiles, and the closed-form tail
asymptotic of the spatial density of exp(-delta E^(beta/2)).

Array convention: every function accepts points whose LAST axis is the space
dimension d, broadcasting over any leading axes.  Plain Python scalars are
accepted for d = 1.  Shape (N,) therefore means one point in d = N; pass
shape (N, 1) for N points on a line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

__all__ = [
    "ModelParams",
    "ExpWeight",
    "PolyWeight",
    "LyapunovSpec",
    "jbracket",
    "potential",
    "grad_potential",
    "equilibrium",
    "equilibrium_drift",
    "energy",
    "lyapunov_H",
    "grad_v_H",
    "lyapunov_weight",
    "apply_Lstar_exact",
    "phi",
    "theta_decay",
    "asymptotic_density",
    "asymptotic_prefactor",
]

#: admissible targets for :func:`apply_Lstar_exact`
LSTAR_TARGETS = ("energy_power", "cross_term", "full_h", "weight_m")

# quadrature tolerances for the equilibrium normalisation constant; the
# truncation radius is grown until the analytic tail bound drops below
# _TAIL_BOUND so the quoted accuracy is honest.
_QUAD_EPSABS = 1e-14
_QUAD_EPSREL = 1e-12
_TAIL_BOUND = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Confinement and equilibrium parameters.

    Parameters
    ----------
    alpha : float
        Potential exponent, must exceed 1.
    kind : str
        ``"exp"`` for the sub-exponential equilibrium, ``"poly"`` for the
        polynomial one.
    beta : float, optional
        Velocity-tail exponent for ``kind="exp"`` (beta > 0).
    gamma : float, optional
        Velocity-tail exponent for ``kind="poly"``.  Any gamma > 0 gives a
        normalisable equilibrium; the convergence theory (and the drift
        certifier) needs gamma > 1.
    dim : int
        Space dimension d (the finite-volume solver only supports d = 1,
        the formulas here are dimension-agnostic).
    """

    alpha: float
    kind: str
    beta: float | None = None
    gamma: float | None = None
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("exp", "poly"):
            raise ValueError(f"kind must be 'exp' or 'poly', got {self.kind!r}")
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if self.kind == "exp":
            if self.beta is None or not self.beta > 0.0:
                raise ValueError("exp equilibrium requires beta > 0")
        else:
            if self.gamma is None or not self.gamma > 0.0:
                raise ValueError("poly equilibrium requires gamma > 0")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")

    @cached_property
    def norm_const(self) -> float:
        """Normalisation constant of the unnormalised equilibrium over R^d.

        Computed by adaptive Gauss-Kronrod quadrature of the radial profile
        on [0, R] with R chosen so that a closed-form majorant of the tail
        integral is below 1e-12.
        """
        d = self.dim
        surface = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        if self.kind == "exp":
            b = self.beta

            def profile(r):
                return r ** (d - 1) * np.exp(-np.sqrt(1.0 + r * r) ** b / b)

            def tail(R):
                # integrand <= r^(d-1) exp(-r^beta/beta); substitute w = r^b/b
                return b ** (d / b - 1.0) * float(
                    special.gammaincc(d / b, R**b / b) * special.gamma(d / b)
                )

            radius = 10.0
            while tail(radius) >= _TAIL_BOUND and radius < 1e9:
                radius *= 2.0
            val, _ = integrate.quad(
                profile, 0.0, radius, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=400
            )
        else:
            # split at r = 1 and map the tail through u = 1/r, which turns
            # it into int_0^1 u^(gamma-1) (1+u^2)^(-(d+gamma)/2) du: exact,
            # no truncation needed even for slowly decaying tails.
            g = self.gamma
            core, _ = integrate.quad(
                lambda r: r ** (d - 1) * (1.0 + r * r) ** (-(d + g) / 2.0),
                0.0,
                1.0,
                epsabs=_QUAD_EPSABS,
                epsrel=_QUAD_EPSREL,
                limit=400,
            )
            tail_val, _ = integrate.quad(
                lambda u: u ** (g - 1.0) * (1.0 + u * u) ** (-(d + g) / 2.0),
                0.0,
                1.0,
                epsabs=_QUAD_EPSABS,
                epsrel=_QUAD_EPSREL,
                limit=400,
            )
            val = core + tail_val
        out = surface * val
        if not out > 0.0:
            raise ArithmeticError("equilibrium normalisation quadrature failed")
        return out


@dataclass(frozen=True)
class ExpWeight:
    """Weight mode m = exp(delta * H^(theta/2)) with theta in (0, 1]."""

    theta: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.theta <= 1.0):
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class PolyWeight:
    """Weight mode m = H^(k/ell) with k > 1."""

    k: float

    def __post_init__(self):
        if not self.k > 1.0:
            raise ValueError(f"k must exceed 1, got {self.k}")


@dataclass(frozen=True)
class LyapunovSpec:
    """Parameters of a candidate Lyapunov weight.

    H(x, v) = E^ell + eps * <x>^a_exp * <v>^(-b_exp) * (x . v), with the
    weight m built from H according to ``mode``.  ``eps = 0`` is the
    degenerate pure-energy weight.
    """

    ell: float
    eps: float
    a_exp: float
    b_exp: float
    mode: ExpWeight | PolyWeight

    def __post_init__(self):
        if not self.ell > 1.0:
            raise ValueError(f"ell must exceed 1, got {self.ell}")
        if self.eps < 0.0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if not (0.0 < self.b_exp < 1.0):
            raise ValueError(f"b_exp must lie in (0, 1), got {self.b_exp}")
        if isinstance(self.mode, PolyWeight) and self.mode.k > self.ell:
            raise ValueError(
                f"poly weight needs k <= ell, got k={self.mode.k}, ell={self.ell}"
            )

    def equivalence_ok(self, alpha: float) -> bool:
        """Whether H is comparable to E^ell for small eps.

        The sufficient condition is (A+1)_+ / alpha + (1-B)/2 <= ell with
        A = a_exp and B = b_exp.
        """
        return (
            max(self.a_exp + 1.0, 0.0) / alpha + (1.0 - self.b_exp) / 2.0
            <= self.ell + 1e-12
        )


def _check_spec(params: ModelParams, spec: LyapunovSpec) -> None:
    if spec.eps > 0.0 and not spec.equivalence_ok(params.alpha):
        raise ValueError(
            "Lyapunov spec violates the comparability condition "
            f"(A+1)_+/alpha + (1-B)/2 <= ell for alpha={params.alpha}: {spec}"
        )


def _vec(z, dim: int) -> np.ndarray:
    a = np.asarray(z, dtype=np.float64)
    if a.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar point given but dim={dim}")
        a = a.reshape(1)
    if a.shape[-1] != dim:
        raise ValueError(f"last axis must have length dim={dim}, got shape {a.shape}")
    return a


def jbracket(z):
    """Japanese bracket <z> = sqrt(1 + |z|^2), a smooth surrogate for |z|."""
    a = np.asarray(z, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1)
    return np.sqrt(1.0 + np.sum(a * a, axis=-1))


def potential(x, params: ModelParams):
    """Confining potential V(x) = <x>^alpha / alpha (minimum 1/alpha)."""
    x = _vec(x, params.dim)
    return jbracket(x) ** params.alpha / params.alpha


def grad_potential(x, params: ModelParams):
    """grad V(x) = <x>^(alpha-2) x."""
    x = _vec(x, params.dim)
    return jbracket(x)[..., None] ** (params.alpha - 2.0) * x


def equilibrium(v, params: ModelParams):
    """Normalised local velocity equilibrium M(v); integrates to 1 over R^d."""
    v = _vec(v, params.dim)
    jv = jbracket(v)
    if params.kind == "exp":
        raw = np.exp(-(jv**params.beta) / params.beta)
    else:
        raw = jv ** (-params.dim - params.gamma)
    return raw / params.norm_const


def equilibrium_drift(v, params: ModelParams):
    """Logarithmic drift grad_v M / M of the local equilibrium.

    Power-law in both cases: -<v>^(beta-2) v for the sub-exponential
    equilibrium and -(d+gamma) <v>^(-2) v for the polynomial one.
    """
    v = _vec(v, params.dim)
    jv = jbracket(v)[..., None]
    if params.kind == "exp":
        return -(jv ** (params.beta - 2.0)) * v
    return -(params.dim + params.gamma) * jv ** (-2.0) * v


def energy(x, v, params: ModelParams):
    """Mechanical energy E(x, v) = |v|^2 / 2 + V(x)."""
    v = _vec(v, params.dim)
    return 0.5 * np.sum(v * v, axis=-1) + potential(x, params)


def lyapunov_H(x, v, params: ModelParams, spec: LyapunovSpec):
    """Candidate Lyapunov function H = E^ell + eps <x>^A <v>^(-B) (x . v)."""
    _check_spec(params, spec)
    x = _vec(x, params.dim)
    v = _vec(v, params.dim)
    e = energy(x, v, params)
    cross = (
        jbracket(x) ** spec.a_exp
        * jbracket(v) ** (-spec.b_exp)
        * np.sum(x * v, axis=-1)
    )
    return e**spec.ell + spec.eps * cross


def grad_v_H(x, v, params: ModelParams, spec: LyapunovSpec):
    """Velocity gradient of H, exact.

    grad_v H = ell E^(ell-1) v
               + eps (<x>^A <v>^(-B) x - B <x>^A (x.v) <v>^(-B-2) v).
    """
    _check_spec(params, spec)
    x = _vec(x, params.dim)
    v = _vec(v, params.dim)
    e = energy(x, v, params)[..., None]
    jx = jbracket(x)[..., None]
    jv = jbracket(v)[..., None]
    xv = np.sum(x * v, axis=-1)[..., None]
    cross = jx**spec.a_exp * (
        jv ** (-spec.b_exp) * x - spec.b_exp * xv * jv ** (-spec.b_exp - 2.0) * v
    )
    return spec.ell * e ** (spec.ell - 1.0) * v + spec.eps * cross


def _dual_energy_power(x, v, params: ModelParams, ell: float):
    # L*(E^ell) = ell E^(ell-1) [ (ell-1)|v|^2/E + d + v . (grad_v M / M) ]
    e = energy(x, v, params)
    vsq = np.sum(v * v, axis=-1)
    vdrift = np.sum(v * equilibrium_drift(v, params), axis=-1)
    return ell * e ** (ell - 1.0) * ((ell - 1.0) * vsq / e + params.dim + vdrift)


def _dual_cross_term(x, v, params: ModelParams, a_exp: float, b_exp: float):
    # L* applied to <x>^A <v>^(-B) (x.v), gathered into one exact expression.
    d = params.dim
    A, B = a_exp, b_exp
    jx = jbracket(x)
    jv = jbracket(v)
    xv = np.sum(x * v, axis=-1)
    vsq = np.sum(v * v, axis=-1)
    xsq = np.sum(x * x, axis=-1)
    dr = equilibrium_drift(v, params)
    xdr = np.sum(x * dr, axis=-1)
    vdr = np.sum(v * dr, axis=-1)
    bracket = (
        vsq
        + A * xv * xv / (jx * jx)
        - jx ** (params.alpha - 2.0) * (xsq - B * xv * xv / (jv * jv))
        - B * xv * ((d + 2.0) / (jv * jv) - (B + 2.0) * vsq / jv**4)
        + (xdr - B * xv * vdr / (jv * jv))
    )
    return jx**A / jv**B * bracket


def _weight_derivatives(h, spec: LyapunovSpec):
    """(m, Phi'(H), Phi''(H)) for the weight m = Phi(H) of the given mode."""
    if isinstance(spec.mode, ExpWeight):
        th, de = spec.mode.theta, spec.mode.delta
        m = np.exp(de * h ** (th / 2.0))
        c = de * th / 2.0
        p1 = c * h ** (th / 2.0 - 1.0) * m
        p2 = c * h ** (th / 2.0 - 2.0) * m * ((th / 2.0 - 1.0) + c * h ** (th / 2.0))
    else:
        r = spec.mode.k / spec.ell
        m = h**r
        p1 = r * h ** (r - 1.0)
        p2 = r * (r - 1.0) * h ** (r - 2.0)
    return m, p1, p2


def lyapunov_weight(x, v, params: ModelParams, spec: LyapunovSpec):
    """Weight m(x, v) built from H: exp(delta H^(theta/2)) or H^(k/ell)."""
    h = lyapunov_H(x, v, params, spec)
    if isinstance(spec.mode, ExpWeight):
        return np.exp(spec.mode.delta * h ** (spec.mode.theta / 2.0))
    return h ** (spec.mode.k / spec.ell)


def apply_Lstar_exact(x, v, params: ModelParams, spec: LyapunovSpec, target: str):
    """Dual operator L* applied analytically to one of four targets.

    L* m = v . grad_x m - grad_x V . grad_v m + Lap_v m + (grad_v M / M) . grad_v m

    target:
      ``"energy_power"``  L*(E^ell)
      ``"cross_term"``    L*(<x>^A <v>^(-B) (x.v))  (eps not applied)
      ``"full_h"``        L*(H) = L*(E^ell) + eps L*(cross)
      ``"weight_m"``      L*(Phi(H)) = Phi'(H) L*(H) + Phi''(H) |grad_v H|^2
    """
    if target not in LSTAR_TARGETS:
        raise ValueError(f"unknown target {target!r}, expected one of {LSTAR_TARGETS}")
    _check_spec(params, spec)
    x = _vec(x, params.dim)
    v = _vec(v, params.dim)
    if target == "energy_power":
        return _dual_energy_power(x, v, params, spec.ell)
    if target == "cross_term":
        return _dual_cross_term(x, v, params, spec.a_exp, spec.b_exp)
    full = _dual_energy_power(x, v, params, spec.ell) + spec.eps * _dual_cross_term(
        x, v, params, spec.a_exp, spec.b_exp
    )
    if target == "full_h":
        return full
    h = lyapunov_H(x, v, params, spec)
    _, p1, p2 = _weight_derivatives(h, spec)
    g = grad_v_H(x, v, params, spec)
    return p1 * full + p2 * np.sum(g * g, axis=-1)


def phi(mval, spec: LyapunovSpec):
    """Concave comparison function of the drift inequality.

    Exp mode: phi(m) = m (ln m)^(-(1-theta)/theta), with phi(1) = 0 by
    convention (the literal formula degenerates as ln m -> 0); values below
    1 are rejected.  Poly mode: phi(m) = m^(1-1/k), accepted for any m > 0
    (its natural concave extension with phi(0) = 0).
    """
    m = np.asarray(mval, dtype=np.float64)
    if isinstance(spec.mode, ExpWeight):
        if np.any(m < 1.0):
            raise ValueError("exp-mode phi is only defined for weights >= 1")
        th = spec.mode.theta
        if th == 1.0:
            out = m.copy()
        else:
            with np.errstate(divide="ignore"):
                out = np.where(
                    m > 1.0, m * np.log(m) ** (-(1.0 - th) / th), 0.0
                )
    else:
        if np.any(m <= 0.0):
            raise ValueError("poly-mode phi is only defined for positive weights")
        out = m ** (1.0 - 1.0 / spec.mode.k)
    return out if out.ndim else float(out)


def theta_decay(t, spec: LyapunovSpec, lam: float = 1.0):
    """Sub-geometric decay profile matched to the weight mode.

    Exp mode: Theta(t) = exp(-lam t^theta); poly mode: Theta(t) = (1+t)^(-k).
    ``lam`` is a caller-supplied fit parameter, not derived from constants.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        raise ValueError("t must be nonnegative")
    if isinstance(spec.mode, ExpWeight):
        out = np.exp(-lam * t**spec.mode.theta)
    else:
        out = (1.0 + t) ** (-spec.mode.k)
    return out if out.ndim else float(out)


def asymptotic_prefactor(alpha: float, beta: float, delta: float) -> float:
    """Constant C = 2 sqrt(pi) alpha^(beta/4) / sqrt(beta delta alpha).

    Valid as a formula for any alpha > 0 (the linear-potential alpha = 1 is
    the exploratory edge of the confinement range).
    """
    if alpha <= 0.0 or beta <= 0.0 or delta <= 0.0:
        raise ValueError("need alpha > 0, beta > 0, delta > 0")
    return 2.0 * math.sqrt(math.pi) * alpha ** (beta / 4.0) / math.sqrt(
        beta * delta * alpha
    )


def asymptotic_density(x, alpha: float, beta: float, delta: float):
    """Leading-order large-|x| density of the profile exp(-delta E^(beta/2)).

    rho(x) ~ C |x|^((alpha/2)(1-beta/2)) exp(-delta (<x>^alpha/alpha)^(beta/2))
    for d = 1, obtained by a Laplace expansion of the velocity integral.
    The ratio to the true integral tends to 1 as |x| -> infinity, with a
    slowly decaying correction of order 1/(delta V(x)^(beta/2)).
    """
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa == 0.0):
        raise ValueError("the asymptotic needs |x| > 0")
    c = asymptotic_prefactor(alpha, beta, delta)
    vpot = np.sqrt(1.0 + xa * xa) ** alpha / alpha
    out = (
        c
        * np.abs(xa) ** ((alpha / 2.0) * (1.0 - beta / 2.0))
        * np.exp(-delta * vpot ** (beta / 2.0))
    )
    return out if out.ndim else float(out)
