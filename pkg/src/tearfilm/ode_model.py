"""Spatially uniform tear-film model: thickness and osmolarity at the glob
center driven by evaporation, osmosis, and a prescribed decaying shear."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import N_SAMPLES, OdeNondim, intensity, time_grid

# Below this thickness the model is meaningless and integration stops.
H_FLOOR = 1e-3


class IntegrationError(RuntimeError):
    """The time integrator failed to converge."""


@dataclass
class OdeSolution:
    """Thickness, osmolarity, fluorescein and intensity series on the output grid.

    ok is False when the thickness crossed the hard floor and the trajectory
    was cut short; the tail of each series then repeats the last computed
    state so the arrays keep their full length for downstream screening.
    """

    t: np.ndarray
    h: np.ndarray
    c: np.ndarray
    f: np.ndarray
    intensity: np.ndarray
    params: OdeNondim
    ok: bool = True
    flag: str | None = None


def shear(t, b1: float, b2: float):
    """Decaying shear g(t) = b1*exp(-b2*t) (nondimensional)."""
    return b1 * np.exp(-b2 * np.asarray(t, dtype=float))


def ode_rhs(state, t: float, p: OdeNondim):
    """Right-hand side (dh/dt, dc/dt) of the uniform model.

    dh/dt = pc*(c-1) - g(t)*h - je; the osmolarity equation is used in the
    expanded form dc/dt = c*(je - pc*(c-1))/h, in which the shear cancels.
    """
    h, c = state
    if h <= 0.0:
        raise IntegrationError(f"singular state: h = {h:g}")
    g = shear(t, p.b1, p.b2)
    osm = p.pc * (c - 1.0)
    dh = osm - g * h - p.je
    dc = c * (p.je - osm) / h
    return dh, dc


def simulate_ode(
    p: OdeNondim,
    n: int = N_SAMPLES,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> OdeSolution:
    """Integrate the uniform model over t in [0, 1] from h(0) = c(0) = 1.

    Uses an adaptive embedded Runge-Kutta 5(4) pair with dense output at the
    n uniform sample times. Stops early (flagged) if h reaches the hard floor.
    """
    tgrid = time_grid(n)

    def rhs(t, y):
        return ode_rhs(y, t, p)

    def floor_event(t, y):
        return y[0] - H_FLOOR

    floor_event.terminal = True
    floor_event.direction = -1.0

    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        np.array([1.0, 1.0]),
        method="RK45",
        rtol=rtol,
        atol=atol,
        t_eval=tgrid,
        events=floor_event,
    )
    if sol.status == -1:
        raise IntegrationError(f"ODE integration failed: {sol.message}")

    h = sol.y[0]
    c = sol.y[1]
    ok = sol.status == 0
    flag = None
    if not ok:
        flag = "h reached hard floor"
        pad = n - h.size
        if pad > 0:
            h = np.concatenate([h, np.full(pad, h[-1] if h.size else H_FLOOR)])
            c = np.concatenate([c, np.full(pad, c[-1] if c.size else 1.0)])
    f = p.f0 * c
    return OdeSolution(
        t=tgrid,
        h=h,
        c=c,
        f=f,
        intensity=intensity(h, f, p.phi),
        params=p,
        ok=ok,
        flag=flag,
    )
