"""Radially symmetric glob model solved by Fourier spectral collocation in
r and stiff adaptive time integration, reporting center-value time series.

Fields are even in r, so they are represented in a cosine basis on a uniform
half-point grid over (0, pi); differentiation and the band-limited center
value follow from collocation in that basis. The pressure is eliminated
algebraically, leaving a stiff ODE system in (h, Gamma, c, f).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import N_SAMPLES, PdeNondim, blend, intensity, time_grid
from .ode_model import H_FLOOR, IntegrationError


class GridError(ValueError):
    """Invalid spectral grid size."""


@dataclass
class SpectralGrid:
    """Collocation nodes and derivative operators for even fields on (0, pi).

    nodes sit at r_j = (j - 1/2) pi / nr, j = 1..nr, so the even periodic
    extension to (-pi, pi] is a uniform 2*nr-point grid with no node at the
    axis. center_weights interpolate a field to r = 0 band-limitedly.
    """

    nr: int
    r: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    center_weights: np.ndarray


def build_grid(nr: int) -> SpectralGrid:
    """Construct collocation operators for nr even-symmetric modes."""
    if nr < 16 or nr % 2:
        raise GridError(f"nr must be even and >= 16, got {nr}")
    j = np.arange(1, nr + 1)
    r = (j - 0.5) * np.pi / nr
    k = np.arange(nr)
    c = np.cos(np.outer(r, k))
    eye = np.eye(nr)
    cinv = np.linalg.solve(c, eye)
    cinv += np.linalg.solve(c, eye - c @ cinv)  # one refinement pass
    d1 = (-np.sin(np.outer(r, k)) * k) @ cinv
    d2 = (-np.cos(np.outer(r, k)) * k**2) @ cinv
    # exact zero action on constants (k=0 mode)
    idx = np.arange(nr)
    for d in (d1, d2):
        for _ in range(2):
            d[idx, idx] -= d @ np.ones(nr)
    w0 = np.ones(nr) @ cinv
    w0 /= w0.sum()
    return SpectralGrid(nr=nr, r=r, d1=d1, d2=d2, center_weights=w0)


@dataclass
class PdeState:
    """Field vectors on the grid at one instant."""

    h: np.ndarray
    gamma: np.ndarray
    c: np.ndarray
    f: np.ndarray


@dataclass
class PdeSolution:
    """Center-value series (length n) plus optional full space-time fields."""

    t: np.ndarray
    h: np.ndarray
    c: np.ndarray
    f: np.ndarray
    intensity: np.ndarray
    params: PdeNondim
    ok: bool = True
    flag: str | None = None
    fields: dict | None = None  # keys h, gamma, c, f -> (n, nr) arrays
    grid: SpectralGrid | None = None


def pressure(h: np.ndarray, a: float, grid: SpectralGrid) -> np.ndarray:
    """Capillary plus van der Waals pressure -lap(h) - a*h^-3 on the grid."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0.0):
        raise ValueError("pressure undefined: h must be positive")
    rinv = 1.0 / grid.r
    if h.ndim > 1:
        rinv = rinv[:, None]
    return -(grid.d2 @ h + rinv * (grid.d1 @ h)) - a * h**-3


def velocities(h, gamma, p, m: float, grid: SpectralGrid, b: np.ndarray):
    """Surface and depth-averaged radial velocities (u_r, u_bar).

    b is the glob blending field: velocities vanish deep inside the glob
    where the lipid acts as a rigid lid, and reduce to free-surface
    lubrication values outside.
    """
    dp = grid.d1 @ p
    dg = grid.d1 @ gamma
    denom = b + (1.0 - b) * h
    if np.any(denom <= 0.0):
        raise ValueError("singular velocity: film thickness vanished under the glob")
    hb = h * b
    u_r = -(0.5 * h**2 * dp * b + m * dg * hb) / denom
    u_bar = -((h**2 / 3.0) * dp * (b + 0.25 * h * (1.0 - b)) + 0.5 * m * dg * hb) / denom
    return u_r, u_bar


def evap_profile(grid: SpectralGrid, ri: float, v: float) -> np.ndarray:
    """Evaporative flux: v under the glob, smoothly dropping to ~0 outside."""
    if v < 0.0:
        raise ValueError("v must be nonnegative")
    return (1.0 - blend(grid.r, ri)) * v


def pde_rhs(state: PdeState, t: float, p: PdeNondim, grid: SpectralGrid) -> PdeState:
    """Time derivatives of all fields at one instant (reference form)."""
    b = blend(grid.r, p.ri)
    j = evap_profile(grid, p.ri, p.v)
    dh, dgam, dc, df = _rhs_arrays(
        state.h, state.gamma, state.c, state.f, p, grid, b, j
    )
    return PdeState(h=dh, gamma=dgam, c=dc, f=df)


def _rhs_arrays(h, gamma, c, f, p: PdeNondim, grid: SpectralGrid, b, j):
    """Shared RHS kernel; accepts (nr,) vectors or (nr, k) column batches."""
    d1, d2 = grid.d1, grid.d2
    rinv = 1.0 / grid.r
    if h.ndim > 1:
        b = b[:, None]
        j = j[:, None]
        rinv = rinv[:, None]

    pr = -(d2 @ h + rinv * (d1 @ h)) - p.a * h**-3
    dp = d1 @ pr
    dg = d1 @ gamma
    denom = b + (1.0 - b) * h
    hb = h * b
    u_r = -(0.5 * h**2 * dp * b + p.m * dg * hb) / denom
    u_bar = -((h**2 / 3.0) * dp * (b + 0.25 * h * (1.0 - b)) + 0.5 * p.m * dg * hb) / denom

    def div(flux):
        # (1/r) d_r (r * flux) for an odd flux field
        return d1 @ flux + rinv * flux

    c_r = d1 @ c
    f_r = d1 @ f
    osm = p.pc * (c - 1.0)
    dh = -j + osm - div(h * u_bar)
    dgam = ((d2 @ gamma + rinv * dg) / p.pes - div(u_r * gamma)) * b
    dc = (div(h * c_r) / p.pec + j * c - osm * c) / h - u_bar * c_r
    df = (div(h * f_r) / p.pef + j * f - osm * f) / h - u_bar * f_r
    return dh, dgam, dc, df


def initial_state(p: PdeNondim, grid: SpectralGrid, gamma_uniform: bool = False) -> PdeState:
    """Uniform h = c = 1, f = f0; surfactant concentrated under the glob.

    The default Gamma(r, 0) = 1 - blend(r, ri) makes the glob a surfactant
    cap; gamma_uniform replaces it with Gamma = 1 (no Marangoni forcing).
    """
    ones = np.ones(grid.nr)
    gamma = ones.copy() if gamma_uniform else 1.0 - blend(grid.r, p.ri)
    return PdeState(h=ones.copy(), gamma=gamma, c=ones.copy(), f=np.full(grid.nr, p.f0))


def simulate_pde(
    p: PdeNondim,
    nr: int = 128,
    n: int = N_SAMPLES,
    rtol: float = 1e-6,
    atol: float = 1e-8,
    method: str = "BDF",
    gamma_uniform: bool = False,
    keep_fields: bool = False,
    grid: SpectralGrid | None = None,
) -> PdeSolution:
    """Integrate the glob model over t in [0, 1] and sample the center values.

    Uses an adaptive implicit (A-stable) method with a finite-difference
    Jacobian; the spatial operator is stiff (fourth order in h). If the film
    reaches the hard floor anywhere, the run stops early and is flagged; the
    series are padded with their last values for downstream screening.
    """
    if grid is None:
        grid = build_grid(nr)
    else:
        nr = grid.nr
    b = blend(grid.r, p.ri)
    j = evap_profile(grid, p.ri, p.v)
    state0 = initial_state(p, grid, gamma_uniform)
    y0 = np.concatenate([state0.h, state0.gamma, state0.c, state0.f])
    tgrid = time_grid(n)

    def rhs(t, y):
        fields = y.reshape(4, nr, -1)
        out = _rhs_arrays(*fields, p, grid, b, j)
        return np.concatenate(out).reshape(y.shape)

    def floor_event(t, y):
        return y[:nr].min() - H_FLOOR

    floor_event.terminal = True
    floor_event.direction = -1.0

    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        y0,
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=tgrid,
        events=floor_event,
        vectorized=True,
    )

    ok = sol.status == 0
    flag = None
    if sol.status == -1:
        ok = False
        flag = f"integration failure: {sol.message}"
    elif sol.status == 1:
        ok = False
        flag = "h reached hard floor"

    nt = sol.y.shape[1] if sol.y.size else 0
    if nt == 0:
        fields = np.repeat(y0[:, None], n, axis=1).reshape(4, nr, n)
    else:
        fields = sol.y.reshape(4, nr, nt)
        if nt < n:
            pad = np.repeat(fields[:, :, -1:], n - nt, axis=2)
            fields = np.concatenate([fields, pad], axis=2)

    w0 = grid.center_weights
    h0t = w0 @ fields[0]
    c0t = w0 @ fields[2]
    f0t = w0 @ fields[3]
    out = PdeSolution(
        t=tgrid,
        h=h0t,
        c=c0t,
        f=f0t,
        intensity=intensity(h0t, f0t, p.phi),
        params=p,
        ok=ok,
        flag=flag,
        grid=grid,
    )
    if keep_fields:
        out.fields = {
            "h": fields[0].T.copy(),
            "gamma": fields[1].T.copy(),
            "c": fields[2].T.copy(),
            "f": fields[3].T.copy(),
        }
    return out


def dump_fields(sol: PdeSolution, outdir) -> None:
    """Write the full space-time fields as little-endian float64 plus manifest."""
    import json
    import os

    if sol.fields is None:
        raise ValueError("solution was computed without keep_fields=True")
    os.makedirs(outdir, exist_ok=True)
    order = ("h", "gamma", "c", "f")
    stack = np.stack([sol.fields[k] for k in order], axis=-1)  # (n, nr, 4)
    with open(os.path.join(outdir, "fields.f64"), "wb") as fh:
        fh.write(np.ascontiguousarray(stack, dtype="<f8").tobytes())
    manifest = {
        "file": "fields.f64",
        "dtype": "<f8",
        "shape": list(stack.shape),
        "fields": list(order),
        "nodes": sol.grid.r.tolist() if sol.grid is not None else None,
        "t": [float(sol.t[0]), float(sol.t[-1])],
        "ok": sol.ok,
        "flag": sol.flag,
    }
    with open(os.path.join(outdir, "fields_manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
