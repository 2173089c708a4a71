"""Macrospin nanomagnets: parameters, thermal tilt, switching delay and LLG stepping.

Logic is encoded along the easy axis: ``m_x = +1`` is logic 1, ``m_x = -1``
is logic 0.  The magnetisation obeys the Gilbert equation with a
uniaxial field along x, a thin-film easy-plane penalty along z, a thermal
field, and a Slonczewski-type torque from the absorbed (transverse) spin
current::

    (1 + a^2) dm/dt = -g mu0 m x H - a g mu0 m x (m x H) + t + a m x t
    t = (Is - (m . Is) m) / (q Ns)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


class InvalidParameterError(ValueError):
    pass


class InvalidInputError(ValueError):
    pass


class NoSwitchingError(ValueError):
    """Spin current at or below the critical value: the magnet never switches."""


@dataclass(frozen=True)
class PhysicalConstants:
    kB: float = 1.380649e-23
    q: float = 1.602176634e-19
    mu0: float = 1.25663706212e-6

    @classmethod
    def from_params(cls, params) -> "PhysicalConstants":
        return cls(kB=params["constants.kB"], q=params["constants.q"], mu0=params["constants.mu0"])


@dataclass(frozen=True)
class MagnetGeometry:
    Lx: float
    Ly: float
    Lz: float

    def __post_init__(self):
        if min(self.Lx, self.Ly, self.Lz) <= 0:
            raise InvalidParameterError("magnet dimensions must be positive")

    @property
    def volume(self) -> float:
        return self.Lx * self.Ly * self.Lz

    @property
    def footprint(self) -> float:
        return self.Lx * self.Ly


@dataclass(frozen=True)
class MagnetMaterial:
    alpha: float
    gamma: float
    Ms: float
    Ns: float
    Ku: float
    demag: bool = True

    def __post_init__(self):
        for name in ("alpha", "gamma", "Ms", "Ns", "Ku"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")


@dataclass(frozen=True)
class ThermalEnvironment:
    T: float
    kB: float
    Eb: float
    seed: int = 0

    def __post_init__(self):
        if self.T < 0:
            raise InvalidParameterError("temperature must be non-negative")


@dataclass(frozen=True)
class SwitchingModel:
    tau0: float
    theta0: float
    chi: float

    def __post_init__(self):
        if self.tau0 <= 0:
            raise InvalidParameterError("tau0 must be positive")
        if not 0 < self.theta0 < math.pi + 1e-15:
            raise InvalidParameterError("theta0 must lie in (0, pi]")


@dataclass
class MagnetizationState:
    m: np.ndarray

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.m)):
            raise InvalidInputError("magnetisation must be finite")
        if abs(np.linalg.norm(self.m) - 1.0) > 1e-9:
            raise InvalidInputError("magnetisation must be a unit vector")

    @classmethod
    def along(cls, bit: int) -> "MagnetizationState":
        return cls(np.array([1.0 if bit else -1.0, 0.0, 0.0]))

    @property
    def bit(self) -> int:
        return int(self.m[0] > 0)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def thermal_cone_angle(env: ThermalEnvironment) -> float:
    """RMS thermal tilt from the easy axis, ``sqrt(kB T / Eb)``."""
    if not env.Eb > 0:
        raise InvalidParameterError("barrier energy must be positive")
    if env.T < 0:
        raise InvalidParameterError("temperature must be non-negative")
    return math.sqrt(env.kB * env.T / env.Eb)


def analytic_switching_delay(model: SwitchingModel) -> float:
    """Small-angle switching delay ``tau0 * ln(pi / theta0) / (chi - 1)``."""
    if model.chi <= 1:
        raise NoSwitchingError(f"overdrive chi = {model.chi:g} <= 1: spin current below critical")
    return model.tau0 * math.log(math.pi / model.theta0) / (model.chi - 1.0)


def _aharoni_nz(a, b, c):
    # Demagnetising factor along c for a prism of half-sides a, b, c.
    r = math.sqrt(a * a + b * b + c * c)
    ab = math.sqrt(a * a + b * b)
    bc = math.sqrt(b * b + c * c)
    ac = math.sqrt(a * a + c * c)
    t = ((b * b - c * c) / (2 * b * c) * math.log((r - a) / (r + a))
         + (a * a - c * c) / (2 * a * c) * math.log((r - b) / (r + b))
         + b / (2 * c) * math.log((ab + a) / (ab - a))
         + a / (2 * c) * math.log((ab + b) / (ab - b))
         + c / (2 * a) * math.log((bc - b) / (bc + b))
         + c / (2 * b) * math.log((ac - a) / (ac + a))
         + 2 * math.atan(a * b / (c * r))
         + (a ** 3 + b ** 3 - 2 * c ** 3) / (3 * a * b * c)
         + (a * a + b * b - 2 * c * c) / (3 * a * b * c) * r
         + c / (a * b) * (ac + bc)
         - (ab ** 3 + bc ** 3 + ac ** 3) / (3 * a * b * c))
    return t / math.pi


def demag_factors(geometry: MagnetGeometry) -> tuple[float, float, float]:
    """Demagnetising factors (Nx, Ny, Nz) of a rectangular prism (Aharoni)."""
    a, b, c = geometry.Lx / 2, geometry.Ly / 2, geometry.Lz / 2
    nz = _aharoni_nz(a, b, c)
    nx = _aharoni_nz(b, c, a)
    ny = _aharoni_nz(c, a, b)
    return nx, ny, nz


def anisotropy_field(material: MagnetMaterial, constants: PhysicalConstants = PhysicalConstants()) -> float:
    """Uniaxial field ``2 Ku / (mu0 Ms)`` in A/m."""
    return 2.0 * material.Ku / (constants.mu0 * material.Ms)


def easy_plane_field(material: MagnetMaterial, geometry: MagnetGeometry) -> float:
    """Out-of-plane demagnetising penalty ``Ms (Nz - Ny)`` in A/m (0 if disabled)."""
    if not material.demag:
        return 0.0
    _, ny, nz = demag_factors(geometry)
    return material.Ms * (nz - ny)


def critical_spin_current(material: MagnetMaterial, geometry: MagnetGeometry,
                          constants: PhysicalConstants = PhysicalConstants()) -> float:
    """Transverse spin current (A) at which damping is just overcome."""
    hk = anisotropy_field(material, constants)
    hd = easy_plane_field(material, geometry)
    return material.alpha * constants.q * material.Ns * material.gamma * constants.mu0 * (hk + 0.5 * hd)


def thermal_field_sigma(material: MagnetMaterial, geometry: MagnetGeometry, T: float, dt: float,
                        constants: PhysicalConstants = PhysicalConstants()) -> float:
    """Per-component standard deviation (A/m) of the thermal field held over one step."""
    if T <= 0:
        return 0.0
    b = math.sqrt(2.0 * material.alpha * constants.kB * T
                  / (material.gamma * material.Ms * geometry.volume * dt))
    return b / constants.mu0


def out_of_plane_scale(material: MagnetMaterial, geometry: MagnetGeometry,
                       constants: PhysicalConstants = PhysicalConstants()) -> float:
    """``sqrt(Hk / (Hk + Hd))``: ratio of the z to y thermal tilt amplitudes.

    With the easy-plane term the transverse stiffness along z exceeds the one
    along y by ``(Hk + Hd) / Hk``, so an equal-energy tilt is that much
    smaller out of plane.  Equals 1 when demagnetisation is disabled.
    """
    hk = anisotropy_field(material, constants)
    return math.sqrt(hk / (hk + easy_plane_field(material, geometry)))


def tilted(bit_or_sign: int, theta: float, phi: float, squash: float = 1.0) -> np.ndarray:
    """Unit vector tilted by ``theta`` from +x (sign > 0) or -x, azimuth ``phi``.

    ``squash`` scales the out-of-plane (z) part of the tilt; ``theta`` is then
    the tilt in the energy metric rather than the geometric angle.
    """
    s = 1.0 if bit_or_sign > 0 else -1.0
    y = math.sin(theta) * math.cos(phi)
    z = math.sin(theta) * math.sin(phi) * squash
    return np.array([s * math.sqrt(max(0.0, 1.0 - y * y - z * z)), y, z])


def sample_initial_state(sign: int, theta0: float, rng: np.random.Generator,
                         squash: float = 1.0) -> np.ndarray:
    """Thermal tilt: polar angle ``|N(0, theta0^2)|`` truncated to (0, pi/2), uniform azimuth.

    See :func:`tilted` for ``squash``.
    """
    if theta0 <= 0:
        return tilted(sign, 0.0, 0.0)
    while True:
        th = abs(rng.normal(0.0, theta0))
        if 0 < th < math.pi / 2:
            break
    return tilted(sign, th, rng.uniform(0.0, 2 * math.pi), squash)


def sample_cone_angles(theta0: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` polar angles drawn like :func:`sample_initial_state`."""
    out = np.abs(rng.normal(0.0, theta0, size=n))
    bad = (out <= 0) | (out >= math.pi / 2)
    while bad.any():
        out[bad] = np.abs(rng.normal(0.0, theta0, size=int(bad.sum())))
        bad = (out <= 0) | (out >= math.pi / 2)
    return out


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------

def kernel_coefficients(material: MagnetMaterial, geometry: MagnetGeometry,
                        constants: PhysicalConstants = PhysicalConstants()):
    """Per-magnet scalars consumed by the LLG kernels: (hk, hd, alpha, gamma*mu0, 1/(q Ns))."""
    return (anisotropy_field(material, constants), easy_plane_field(material, geometry),
            material.alpha, material.gamma * constants.mu0, 1.0 / (constants.q * material.Ns))


def llg_step(state: MagnetizationState, material: MagnetMaterial, geometry: MagnetGeometry,
             env: ThermalEnvironment, injected_spin_current, dt: float,
             rng: np.random.Generator | None = None,
             constants: PhysicalConstants = PhysicalConstants()) -> MagnetizationState:
    """Advance one magnet by a single stochastic Heun step.

    Parameters
    ----------
    injected_spin_current : array_like, shape (3,)
        Spin current (A) absorbed by the magnet; only its part transverse to
        ``m`` exerts torque.
    rng : numpy.random.Generator, optional
        Source of the thermal field.  Defaults to a generator seeded from
        ``env.seed``.
    """
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    Is = np.asarray(injected_spin_current, dtype=float).reshape(3)
    if not np.all(np.isfinite(Is)):
        raise InvalidInputError("injected spin current must be finite")
    hk, hd, al, gm, iq = kernel_coefficients(material, geometry, constants)
    m = state.m.reshape(1, 3).copy()
    hth = np.zeros((1, 3))
    sig = thermal_field_sigma(material, geometry, env.T, dt, constants)
    if sig > 0:
        rng = rng if rng is not None else np.random.default_rng(env.seed)
        hth[0] = sig * rng.standard_normal(3)
    kernels.heun_step(m, hth, Is.reshape(1, 3), dt, np.array([hk]), np.array([hd]), np.array([al]),
                      np.array([gm]), np.array([iq]))
    return MagnetizationState(m[0])


def detect_switching_times(t: np.ndarray, mx: np.ndarray, threshold: float = 0.9) -> float | None:
    """First zero crossing away from the starting sign that reaches ``|mx| >= threshold``.

    A crossing only counts if the trace reaches the threshold with the new
    sign before crossing back.  The crossing time is linearly interpolated.
    """
    t = np.asarray(t, dtype=float)
    mx = np.asarray(mx, dtype=float)
    if mx.size < 2:
        return None
    sgn = np.sign(mx)
    # carry the previous sign through exact zeros
    for k in range(1, sgn.size):
        if sgn[k] == 0:
            sgn[k] = sgn[k - 1]
    cross = np.nonzero(sgn[1:] * sgn[:-1] < 0)[0] + 1
    for n, k in enumerate(cross):
        s = sgn[k]
        if s == sgn[0]:
            continue    # falling back to the starting side is not a switch
        stop = cross[n + 1] if n + 1 < cross.size else mx.size
        if np.any(s * mx[k:stop] >= threshold):
            a, b = mx[k - 1], mx[k]
            frac = a / (a - b) if a != b else 0.0
            return float(t[k - 1] + frac * (t[k] - t[k - 1]))
    return None


def detect_switching(trace, magnet_id: str, threshold: float = 0.9) -> float | None:
    """Switching time of ``magnet_id`` in a :class:`~spinpat.engine.SimulationTrace`."""
    mx = trace.component(magnet_id, 0)
    return detect_switching_times(trace.times, mx, threshold)
