"""Unit-sphere geometry for the two-level singlet model.

The hidden variable is a unit vector parametrized by ``(mu, tau)`` with
``mu`` in [0, 2pi) and ``tau`` in [0, pi).  The map to Cartesian form is the
single formula ``(sin mu cos tau, sin mu sin tau, cos mu)``; the surface
element in these coordinates is ``|sin mu| dmu dtau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
UNIT_TOL = 1e-12
# below this |a x b| the pair is treated as colinear
_COLINEAR = 1e-15


def _vec(v) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(3)


@dataclass(frozen=True)
class Direction:
    """A unit vector in R^3 (measurement setting or hidden-variable axis)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm2 = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(norm2 - 1.0) > UNIT_TOL:
            raise ValueError(f"Direction is not unit-norm (|v|^2 = {norm2!r})")

    @classmethod
    def from_vector(cls, v) -> "Direction":
        """Normalize an arbitrary nonzero 3-vector."""
        arr = _vec(v)
        n = np.linalg.norm(arr)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        arr = arr / n
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @classmethod
    def from_polar(cls, theta: float, phi: float) -> "Direction":
        """Standard polar angles: theta from +z, phi from +x toward +y."""
        st = math.sin(theta)
        return cls.from_vector((st * math.cos(phi), st * math.sin(phi), math.cos(theta)))

    @classmethod
    def in_xz_plane(cls, angle: float) -> "Direction":
        """Unit vector in the xz-plane at ``angle`` from +z, positive toward +x."""
        return cls.from_vector((math.sin(angle), 0.0, math.cos(angle)))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.array, dtype=dtype)

    def dot(self, other) -> float:
        return float(self.array @ _vec(other))

    def __neg__(self) -> "Direction":
        return Direction(-self.x, -self.y, -self.z)


X_AXIS = Direction(1.0, 0.0, 0.0)
Y_AXIS = Direction(0.0, 1.0, 0.0)
Z_AXIS = Direction(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class HiddenPoint:
    """Hidden variable lambda as ``(mu, tau)``.

    Construction normalizes into ``mu in [0, 2pi)``, ``tau in [0, pi)``.
    Removing an odd multiple of pi from ``tau`` also maps ``mu -> 2pi - mu``,
    so the represented vector is unchanged.
    """

    mu: float
    tau: float

    def __post_init__(self):
        mu, tau = float(self.mu), float(self.tau)
        k = math.floor(tau / math.pi)
        tau -= k * math.pi
        if tau < 0.0:
            # tau / pi can underflow to -0.0 for subnormal tau
            tau, k = tau + math.pi, k - 1
        if tau >= math.pi:
            tau, k = 0.0, k + 1
        if k % 2:
            mu = -mu
        mu = mu % TWO_PI
        if mu >= TWO_PI:
            mu = 0.0
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "tau", tau)

    @property
    def vector(self) -> Direction:
        return lambda_vector(self)


@dataclass(frozen=True)
class RotatedPair:
    """Settings ``(a_hat, b_hat)`` derived from ``(a, b)``; see :func:`rotated_pair`."""

    a_hat: Direction
    b_hat: Direction
    omega: float
    omega_hat: float


def angle_between(a, b) -> float:
    """Angle in [0, pi] between two unit vectors (clamped arccos)."""
    c = float(_vec(a) @ _vec(b))
    return math.acos(min(1.0, max(-1.0, c)))


def omega_hat(omega):
    """Setting-distortion rule ``pi sin^2(omega / 2)`` on [0, pi]."""
    w = np.asarray(omega, dtype=float)
    if np.any((w < 0.0) | (w > math.pi)) or np.any(np.isnan(w)):
        raise ValueError("omega must lie in [0, pi]")
    out = math.pi * np.sin(0.5 * w) ** 2
    return float(out) if out.ndim == 0 else out


def _toward(u: np.ndarray, v: np.ndarray, cos_uv: float, sin_uv: float) -> np.ndarray:
    # unit vector in span(u, v), orthogonal to u, on v's side
    w = v - cos_uv * u
    return w / sin_uv


def rotated_pair(a, b) -> RotatedPair:
    """Rotate ``a`` and ``b`` within their plane, symmetric about the bisector.

    The result subtends ``omega_hat(omega)``.  Each vector is turned by
    ``(omega - omega_hat) / 2`` toward its partner (away when negative), which
    stays well conditioned as ``omega -> pi``.  Colinear inputs: ``omega == 0``
    gives ``a_hat = b_hat = a``; ``omega == pi`` returns ``a, b`` unchanged.
    """
    av, bv = _vec(a), _vec(b)
    c = float(av @ bv)
    s = float(np.linalg.norm(np.cross(av, bv)))
    omega = math.atan2(s, c)
    w_hat = omega_hat(omega)
    da, db = Direction.from_vector(av), Direction.from_vector(bv)
    if s <= _COLINEAR:
        if c > 0.0:
            return RotatedPair(da, da, 0.0, 0.0)
        return RotatedPair(da, db, math.pi, math.pi)

    delta = 0.5 * (omega - w_hat)
    cd, sd = math.cos(delta), math.sin(delta)
    a_hat = cd * av + sd * _toward(av, bv, c, s)
    b_hat = cd * bv + sd * _toward(bv, av, c, s)
    return RotatedPair(
        Direction.from_vector(a_hat), Direction.from_vector(b_hat), omega, w_hat
    )


def lambda_array(mu, tau) -> np.ndarray:
    """Cartesian lambda for arrays of ``(mu, tau)``; shape ``(..., 3)``."""
    mu = np.asarray(mu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    smu = np.sin(mu)
    return np.stack(np.broadcast_arrays(smu * np.cos(tau), smu * np.sin(tau), np.cos(mu)), axis=-1)


def lambda_vector(p: HiddenPoint) -> Direction:
    sm = math.sin(p.mu)
    return Direction.from_vector((sm * math.cos(p.tau), sm * math.sin(p.tau), math.cos(p.mu)))


def to_polar(p: HiddenPoint) -> tuple[float, float]:
    """Standard ``(theta, phi)`` of the point, phi in [0, 2pi)."""
    if p.mu <= math.pi:
        return p.mu, p.tau
    return TWO_PI - p.mu, p.tau + math.pi


def from_polar(theta, phi):
    """Inverse of :func:`to_polar` on arrays.

    Points with ``y >= 0`` keep ``(mu, tau) = (theta, phi)``; points with
    ``y < 0`` get ``(2pi - theta, phi - pi)``.  Poles and the ``y = 0``
    meridian are resolved so that ``tau`` stays in [0, pi).
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    upper = phi < math.pi
    mu = np.where(upper, theta, TWO_PI - theta)
    tau = np.where(upper, phi, phi - math.pi)
    mu = np.mod(mu, TWO_PI)
    return mu, tau


def hidden_point_from_vector(v) -> HiddenPoint:
    v = _vec(v)
    # atan2 keeps full precision next to the poles, where acos does not
    theta = math.atan2(math.hypot(v[0], v[1]), v[2])
    phi = math.atan2(v[1], v[0])
    mu, tau = from_polar(theta, phi)
    return HiddenPoint(float(mu), float(tau))


# --- random streams and samplers -------------------------------------------

def stream(seed: int, *index: int) -> np.random.Generator:
    """Independent counter-based generator keyed by ``(seed, *index)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def sample_sphere(rng: np.random.Generator, size=None):
    """Uniform points on the sphere, returned in ``(mu, tau)`` coordinates.

    Draws normalized Gaussian vectors and converts through the polar map, so it
    does not share code with :func:`sample_mu_given_tau`.  ``size=None`` gives
    a :class:`HiddenPoint`; otherwise a pair of arrays.
    """
    n = 1 if size is None else int(size)
    g = rng.standard_normal((n, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    theta = np.arccos(np.clip(g[:, 2], -1.0, 1.0))
    phi = np.arctan2(g[:, 1], g[:, 0])
    mu, tau = from_polar(theta, phi)
    if size is None:
        return HiddenPoint(float(mu[0]), float(tau[0]))
    return mu, tau


def mu_inverse_cdf(u):
    """Inverse CDF of the density ``|sin mu| / 4`` on [0, 2pi).

    CDF(mu) = (1 - cos mu) / 4            for mu in [0, pi]
            = 1/2 + (1 + cos mu) / 4      for mu in [pi, 2pi)
    """
    u = np.asarray(u, dtype=float)
    lower = u < 0.5
    mu = np.where(
        lower,
        np.arccos(np.clip(1.0 - 4.0 * u, -1.0, 1.0)),
        TWO_PI - np.arccos(np.clip(4.0 * u - 3.0, -1.0, 1.0)),
    )
    return np.where(mu >= TWO_PI, 0.0, mu)


def sample_mu_given_tau(rng: np.random.Generator, size=None):
    """Draw ``mu`` from ``|sin mu| / 4``; independent of ``tau``."""
    mu = mu_inverse_cdf(rng.random(size))
    return float(mu) if size is None else mu
