"""Physical constants, parameter bundles, nondimensionalization, and the
fluorescence-intensity map shared by the ODE and PDE tear-film models."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace

import numpy as np

# Number of output samples on the uniform nondimensional time grid t in [0, 1].
N_SAMPLES = 601

# Fluorescein sodium, g/mol; converts % w/v to molarity.
FLUORESCEIN_MOLAR_MASS = 376.27

# Conversion factor: thinning rates are quoted in um/min, used in m/s.
UM_PER_MIN = 1e-6 / 60.0


class InvalidParameterError(ValueError):
    """A physical or model parameter is outside its valid domain."""


def time_grid(n: int = N_SAMPLES) -> np.ndarray:
    """Uniform sample times t_k = (k-1)/(n-1) on [0, 1]."""
    return np.linspace(0.0, 1.0, n)


@dataclass(frozen=True)
class PhysicalConstants:
    """Dimensional physical constants of the tear film (SI units).

    mu         viscosity, Pa*s
    sigma0     surface tension, N/m
    rho        density, kg/m^3
    hamaker    Hamaker constant for the van der Waals pressure term
    vw         molar volume of water, m^3/mol
    df         fluorescein diffusivity, m^2/s
    do         salt-ion diffusivity, m^2/s
    c0         isotonic osmolarity, Osm/m^3
    p0         corneal permeability, m/s
    eps_f      Napierian extinction coefficient, 1/(M*m)
    fcr_pct    critical fluorescein concentration, % w/v
    fcr_molar  critical fluorescein concentration, mol/m^3
    ds         surface diffusivity of the lipid surfactant, m^2/s
    """

    mu: float = 1.3e-3
    sigma0: float = 0.045
    rho: float = 1.0e3
    hamaker: float = 6.0 * math.pi * 3.5e-19
    vw: float = 1.8e-5
    df: float = 0.39e-9
    do: float = 1.6e-9
    c0: float = 300.0
    p0: float = 12.1e-6
    eps_f: float = 1.75e7
    fcr_pct: float = 0.2
    fcr_molar: float = 10.0 * 0.2 * 1000.0 / FLUORESCEIN_MOLAR_MASS
    ds: float = 3.0e-8

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0.0:
                raise InvalidParameterError(f"constant {f.name} must be positive")
        expected = 10.0 * self.fcr_pct * 1000.0 / FLUORESCEIN_MOLAR_MASS
        if abs(self.fcr_molar - expected) > 0.005 * expected:
            raise InvalidParameterError(
                f"fcr_molar={self.fcr_molar:g} inconsistent with fcr_pct={self.fcr_pct:g} "
                f"(expected ~{expected:g} mol/m^3)"
            )

    @classmethod
    def from_json(cls, source) -> "PhysicalConstants":
        """Build constants from a JSON file path, JSON string, or dict.

        All fields are optional and default to the standard values above.
        fcr_molar is rederived from fcr_pct unless given explicitly.
        """
        if isinstance(source, dict):
            data = dict(source)
        else:
            text = None
            try:
                with open(source) as fh:
                    text = fh.read()
            except (OSError, TypeError):
                text = source
            data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown constant(s): {sorted(unknown)}")
        if "fcr_pct" in data and "fcr_molar" not in data:
            data["fcr_molar"] = 10.0 * float(data["fcr_pct"]) * 1000.0 / FLUORESCEIN_MOLAR_MASS
        base = cls()
        return replace(base, **{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class OdeParams:
    """Dimensional parameters of the spatially uniform model.

    h0p  initial thickness, m
    f0p  initial fluorescein concentration, % w/v
    tsp  trial duration, s
    jep  thinning rate, m/s
    b1p  maximum shear, 1/s (negative = inward flow)
    b2p  shear decay rate, 1/s
    """

    h0p: float
    f0p: float
    tsp: float
    jep: float
    b1p: float
    b2p: float

    def __post_init__(self):
        if self.h0p <= 0.0 or self.tsp <= 0.0 or self.f0p <= 0.0:
            raise InvalidParameterError("h0p, f0p and tsp must be positive")
        if self.jep < 0.0 or self.b2p < 0.0:
            raise InvalidParameterError("jep and b2p must be nonnegative")


@dataclass(frozen=True)
class PdeParams:
    """Dimensional parameters of the radially symmetric glob model.

    h0p  initial thickness, m
    f0p  initial fluorescein concentration, % w/v
    tsp  trial duration, s
    vp   thinning rate under the glob, m/s
    rip  glob radius, m
    dsig0  surface-tension change across the glob edge, N/m
    """

    h0p: float
    f0p: float
    tsp: float
    vp: float
    rip: float
    dsig0: float

    def __post_init__(self):
        if min(self.h0p, self.f0p, self.tsp, self.rip) <= 0.0:
            raise InvalidParameterError("h0p, f0p, tsp and rip must be positive")
        if self.vp < 0.0:
            raise InvalidParameterError("vp must be nonnegative")
        if self.dsig0 <= 0.0:
            raise InvalidParameterError("dsig0 must be positive")


@dataclass(frozen=True)
class OdeNondim:
    """Nondimensional parameter bundle for the spatially uniform model."""

    pc: float    # osmotic influx coefficient
    je: float    # evaporation rate
    f0: float    # initial fluorescein concentration / critical concentration
    b1: float    # peak shear
    b2: float    # shear decay
    phi: float   # extinction parameter in the intensity map


@dataclass(frozen=True)
class PdeNondim:
    """Nondimensional parameter bundle for the glob model."""

    eps: float   # aspect ratio h0'/ell
    m: float     # Marangoni number
    a: float     # van der Waals (Hamaker) coefficient
    pc: float    # osmotic influx coefficient
    pef: float   # Peclet number, fluorescein diffusion
    pec: float   # Peclet number, salt diffusion
    pes: float   # Peclet number, surfactant surface diffusion
    phi: float   # extinction parameter
    f0: float    # initial fluorescein concentration
    v: float     # evaporative thinning rate under the glob
    ri: float    # glob radius
    ell: float   # horizontal length scale, m
    u: float     # velocity scale, m/s


def _phi(h0p: float, k: PhysicalConstants) -> float:
    # eps_f is per molar per meter; fcr_molar is mol/m^3 (1 M = 1000 mol/m^3)
    return k.eps_f * (k.fcr_molar * 1e-3) * h0p


def nondim_ode(p: OdeParams, k: PhysicalConstants = PhysicalConstants()) -> OdeNondim:
    """Nondimensionalize ODE-model parameters.

    Rates scale with the trial time and initial thickness: je = jep*tsp/h0p,
    b1 = b1p*tsp, b2 = b2p*tsp; the osmotic coefficient is pc =
    p0*vw*c0*tsp/h0p, and f0 is the concentration relative to critical.
    """
    if p.tsp <= 0.0 or p.h0p <= 0.0:
        raise InvalidParameterError("tsp and h0p must be positive")
    return OdeNondim(
        pc=k.p0 * k.vw * k.c0 * p.tsp / p.h0p,
        je=p.jep * p.tsp / p.h0p,
        f0=p.f0p / k.fcr_pct,
        b1=p.b1p * p.tsp,
        b2=p.b2p * p.tsp,
        phi=_phi(p.h0p, k),
    )


def nondim_pde(p: PdeParams, k: PhysicalConstants = PhysicalConstants()) -> PdeNondim:
    """Nondimensionalize glob-model parameters.

    The horizontal length scale is ell = (tsp*sigma0*h0p^3/mu)^(1/4) and the
    velocity scale u = ell/tsp; the remaining groups follow from balancing
    capillary, Marangoni, van der Waals, osmotic and diffusive terms.
    """
    if p.dsig0 <= 0.0:
        raise InvalidParameterError("dsig0 must be positive (m, a, pes undefined)")
    ell = (p.tsp * k.sigma0 * p.h0p**3 / k.mu) ** 0.25
    u = ell / p.tsp
    eps = p.h0p / ell
    return PdeNondim(
        eps=eps,
        m=eps * p.dsig0 * (p.tsp**3 / (k.sigma0 * k.mu**3 * p.h0p**3)) ** 0.25,
        a=k.hamaker / (eps * p.dsig0 * p.h0p * ell),
        pc=k.p0 * k.vw * k.c0 / (eps * u),
        pef=u * ell / k.df,
        pec=u * ell / k.do,
        pes=eps * p.dsig0 * ell / (k.mu * k.ds),
        phi=_phi(p.h0p, k),
        f0=p.f0p / k.fcr_pct,
        v=p.vp / (eps * u),
        ri=p.rip / ell,
        ell=ell,
        u=u,
    )


def intensity(h: np.ndarray, f: np.ndarray, phi: float) -> np.ndarray:
    """Fluorescence intensity of a film of thickness h and concentration f.

    I = I0*(1 - exp(-phi*f*h))/(1 + f^2), with I0 chosen so the first sample
    is exactly 1.
    """
    h = np.asarray(h, dtype=float)
    f = np.asarray(f, dtype=float)
    if h.shape != f.shape:
        raise InvalidParameterError("h and f must have the same length")
    denom0 = -np.expm1(-phi * f.flat[0] * h.flat[0])
    if denom0 == 0.0:
        raise InvalidParameterError("intensity normalization undefined: phi*f(0)*h(0) = 0")
    i0 = (1.0 + f.flat[0] ** 2) / denom0
    out = i0 * (-np.expm1(-phi * f * h)) / (1.0 + f**2)
    out.flat[0] = 1.0
    return out


def blend(r, ri: float):
    """Smooth step through the glob edge: ~0 under the glob, ~1 outside.

    Transition is centered at r = ri with fixed width 0.1.
    """
    return 0.5 + 0.5 * np.tanh((np.asarray(r, dtype=float) - ri) / 0.1)
