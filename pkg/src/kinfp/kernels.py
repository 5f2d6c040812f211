"""Hot stencil kernels: numba-jitted loops with a pure-numpy fallback.

The finite-volume right-hand sides are evaluated millions of times per run,
so they are compiled with numba when available.  Setting the environment
variable ``KINFP_DISABLE_NUMBA=1`` (or any of "true"/"yes") before import
selects the vectorised numpy implementations instead; the two paths compute
identical arithmetic.  ``set_backend``/``active_backend`` switch at runtime
(used by the tests and by ``benchmarks/benchmark_kernels.py``).

Transport kernel: second-order central flux for the row-wise linear
advection with speed v_m, minmod-limited reconstruction, upwinded by the
sign of the (constant per row) speed.  Boundary closure is either specular
(ghost cells mirror the interior with the velocity index flipped, which
makes the paired wall fluxes cancel exactly) or periodic (test fixture).

Velocity kernel: drift-diffusion flux differences per column with
precomputed face coefficients; zero flux through the outermost faces.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAS_NUMBA",
    "active_backend",
    "set_backend",
    "transport_rhs_kernel",
    "velocity_rhs_kernel",
    "transport_rhs_numpy",
    "velocity_rhs_numpy",
]

BC_SPECULAR = 0
BC_PERIODIC = 1

_ENV_DISABLED = os.environ.get("KINFP_DISABLE_NUMBA", "").lower() in (
    "1",
    "true",
    "yes",
)

try:
    if _ENV_DISABLED:
        raise ImportError("numba disabled by KINFP_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator
        def deco(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return deco


def _minmod(a, b):
    if a * b <= 0.0:
        return 0.0
    return a if abs(a) < abs(b) else b


def _transport_rhs_loops(values, v_centers, dx, bc_code, out):
    Nx, Nv = values.shape
    ext = np.empty(Nx + 4)
    slope = np.empty(Nx + 2)
    for m in range(Nv):
        a = v_centers[m]
        mref = Nv - 1 - m
        if bc_code == BC_PERIODIC:
            ext[0] = values[Nx - 2, m]
            ext[1] = values[Nx - 1, m]
            ext[Nx + 2] = values[0, m]
            ext[Nx + 3] = values[1, m]
        else:
            ext[0] = values[1, mref]
            ext[1] = values[0, mref]
            ext[Nx + 2] = values[Nx - 1, mref]
            ext[Nx + 3] = values[Nx - 2, mref]
        for n in range(Nx):
            ext[n + 2] = values[n, m]
        for i in range(Nx + 2):
            slope[i] = _minmod(ext[i + 1] - ext[i], ext[i + 2] - ext[i + 1]) / dx
        # faces j+1/2 for j = -1..Nx-1; face f uses cells ext[f+1], ext[f+2]
        prev = 0.0
        for f in range(Nx + 1):
            if a >= 0.0:
                state = ext[f + 1] + 0.5 * dx * slope[f]
            else:
                state = ext[f + 2] - 0.5 * dx * slope[f + 1]
            flux = a * state
            if f > 0:
                out[f - 1, m] = -(flux - prev) / dx
            prev = flux
    return out


if HAS_NUMBA:
    _minmod = njit(cache=True, inline="always")(_minmod)
    _transport_rhs_numba = njit(cache=True)(_transport_rhs_loops)
else:
    _transport_rhs_numba = None


def transport_rhs_numpy(values, v_centers, dx, bc_code, out):
    Nx, Nv = values.shape
    ext = np.empty((Nx + 4, Nv))
    ext[2 : Nx + 2] = values
    if bc_code == BC_PERIODIC:
        ext[0] = values[Nx - 2]
        ext[1] = values[Nx - 1]
        ext[Nx + 2] = values[0]
        ext[Nx + 3] = values[1]
    else:
        ext[0] = values[1, ::-1]
        ext[1] = values[0, ::-1]
        ext[Nx + 2] = values[Nx - 1, ::-1]
        ext[Nx + 3] = values[Nx - 2, ::-1]
    d = ext[1:] - ext[:-1]
    a, b = d[:-1], d[1:]
    slope = np.where(a * b <= 0.0, 0.0, np.where(np.abs(a) < np.abs(b), a, b)) / dx
    left = ext[1 : Nx + 2] + 0.5 * dx * slope[: Nx + 1]
    right = ext[2 : Nx + 3] - 0.5 * dx * slope[1 : Nx + 2]
    flux = np.where(v_centers >= 0.0, v_centers * left, v_centers * right)
    np.subtract(flux[:-1], flux[1:], out=out)
    out /= dx
    return out


def _velocity_rhs_loops(values, cp, cm, dv, out):
    Nx, Nv = values.shape
    for n in range(Nx):
        prev = 0.0  # zero flux through the bottom face
        for m in range(Nv - 1):
            flux = cp[n, m] * values[n, m + 1] + cm[n, m] * values[n, m]
            out[n, m] = (flux - prev) / dv
            prev = flux
        out[n, Nv - 1] = (0.0 - prev) / dv  # zero flux through the top face
    return out


_velocity_rhs_numba = njit(cache=True)(_velocity_rhs_loops) if HAS_NUMBA else None


def velocity_rhs_numpy(values, cp, cm, dv, out):
    flux = cp * values[:, 1:] + cm * values[:, :-1]
    out[:, 0] = flux[:, 0] / dv
    np.subtract(flux[:, 1:], flux[:, :-1], out=out[:, 1:-1])
    out[:, 1:-1] /= dv
    out[:, -1] = -flux[:, -1] / dv
    return out


_BACKEND = "numba" if HAS_NUMBA else "numpy"


def active_backend() -> str:
    """Name of the kernel backend currently in use ("numba" or "numpy")."""
    return _BACKEND


def set_backend(name: str) -> None:
    """Select the kernel backend at runtime; "numba" needs numba importable."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    _BACKEND = name


def transport_rhs_kernel(values, v_centers, dx, bc_code, out=None):
    """Advection increment d f/dt = -v df/dx, conservative flux-difference form."""
    if out is None:
        out = np.empty_like(values)
    if _BACKEND == "numba":
        return _transport_rhs_numba(values, v_centers, dx, bc_code, out)
    return transport_rhs_numpy(values, v_centers, dx, bc_code, out)


def velocity_rhs_kernel(values, cp, cm, dv, out=None):
    """Drift-diffusion increment per column from precomputed face coefficients."""
    if out is None:
        out = np.empty_like(values)
    if _BACKEND == "numba":
        return _velocity_rhs_numba(values, cp, cm, dv, out)
    return velocity_rhs_numpy(values, cp, cm, dv, out)
