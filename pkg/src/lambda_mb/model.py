"""Domain types for the three-level ladder system and its Lax matrices.

Everything lives in dimensionless units with hbar = c = 1: zeta = z/c and
tau = t - z/c are both "times", Rabi amplitudes are frequencies, and the
coupling nu0 absorbs the atomic density.  The carrier-frequency splitting
omega12 and the optical wavelength travel along as inert metadata only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import algebra
from .errors import NotLambdaStructured, NotNormalized, SpectralPole

#: signature matrix separating ground ({|1>, |2>}) from excited (|3>) sectors
D_MATRIX = np.diag([1.0, 1.0, -1.0]).astype(complex)

#: guard radius around the lambda = Delta pole of the zeta-evolution matrix
POLE_GUARD = 1e-9


@dataclass(frozen=True)
class LambdaParams:
    """Physical constants of one scenario.

    nu0     field-matter coupling, positive
    delta   one-photon detuning
    omega0  background Rabi amplitude, non-negative
    eta     background mixing angle in [0, pi/2]
    k       slow spatial phase wavenumber of the background
    """

    nu0: float
    delta: float = 0.0
    omega0: float = 1.0
    eta: float = 0.0
    k: float = 0.0
    omega12_hz: Optional[float] = None  # informational only
    lambda_nm: Optional[float] = None   # informational only

    def __post_init__(self):
        if not self.nu0 > 0:
            raise ValueError(f"nu0 must be positive, got {self.nu0}")
        if self.omega0 < 0:
            raise ValueError(f"omega0 must be non-negative, got {self.omega0}")
        if not 0.0 <= self.eta <= math.pi / 2:
            raise ValueError(f"eta must lie in [0, pi/2], got {self.eta}")


@dataclass(frozen=True)
class SpectralData:
    """Discrete eigenvalue lambda0 = i*eps0 and the derived branch root.

    root = sqrt(eps0^2 - omega0^2) on the positive real branch for
    eps0 > omega0, zero at the degenerate point, and +i*sqrt(omega0^2 -
    eps0^2) below it (oscillatory regime, exposed but experimental).
    """

    eps0: float
    root: complex

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")

    @property
    def lambda0(self) -> complex:
        return 1j * self.eps0

    @classmethod
    def from_eps0(cls, eps0: float, omega0: float) -> "SpectralData":
        diff = eps0**2 - omega0**2
        root = math.sqrt(diff) if diff >= 0 else 1j * math.sqrt(-diff)
        return cls(eps0=eps0, root=root)


class FieldPair(NamedTuple):
    """Complex Rabi amplitudes of the two optical channels at one point."""

    omega_a: complex
    omega_b: complex


class AtomState:
    """Atomic state, either a pure amplitude vector or a density matrix."""

    def __init__(self, *, pure=None, density=None):
        if (pure is None) == (density is None):
            raise ValueError("provide exactly one of pure= or density=")
        if pure is not None:
            v = np.asarray(pure, dtype=complex)
            if v.shape[-1] != 3:
                raise ValueError("pure state must have 3 components")
            norm = np.sqrt(np.abs(algebra.scalar_product(v, v)))
            if np.any(np.abs(norm - 1.0) > 1e-10):
                raise NotNormalized(f"pure state norm deviates by {np.max(np.abs(norm - 1.0)):.2e}")
            self.pure = v
            self.density = None
        else:
            m = np.asarray(density, dtype=complex)
            if m.shape[-2:] != (3, 3):
                raise ValueError("density matrix must be 3x3")
            herm = np.max(np.abs(m - algebra.adjoint(m)))
            if herm > 1e-12:
                raise ValueError(f"density matrix not Hermitian (dev {herm:.2e})")
            tr = np.trace(m, axis1=-2, axis2=-1)
            if np.max(np.abs(tr - 1.0)) > 1e-10:
                raise ValueError("density matrix trace must be 1")
            eig = np.linalg.eigvalsh(m)
            if np.min(eig) < -1e-8 or np.max(eig) > 1 + 1e-8:
                raise ValueError("density matrix eigenvalues outside [0, 1]")
            self.pure = None
            self.density = m

    @classmethod
    def from_pure(cls, v) -> "AtomState":
        return cls(pure=v)

    @classmethod
    def from_density(cls, m) -> "AtomState":
        return cls(density=m)

    @property
    def is_pure(self) -> bool:
        return self.pure is not None

    def density_matrix(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        return algebra.outer(self.pure, self.pure)

    def populations(self) -> np.ndarray:
        rho = self.density_matrix()
        return np.real(np.stack([rho[..., 0, 0], rho[..., 1, 1], rho[..., 2, 2]], axis=-1))


def interaction_hamiltonian(fields) -> np.ndarray:
    """Ladder coupling Hamiltonian for the two channels.

    Accepts a FieldPair or any (omega_a, omega_b) pair of broadcastable
    arrays; returns shape (..., 3, 3).  Hermitian by construction, zero
    diagonal, no direct 1-2 coupling.
    """
    oa, ob = fields
    oa = np.asarray(oa, dtype=complex)
    ob = np.asarray(ob, dtype=complex)
    shape = np.broadcast(oa, ob).shape
    h = np.zeros(shape + (3, 3), dtype=complex)
    h[..., 2, 0] = -0.5 * oa
    h[..., 2, 1] = -0.5 * ob
    h[..., 0, 2] = -0.5 * np.conj(oa)
    h[..., 1, 2] = -0.5 * np.conj(ob)
    return h


def extract_fields(h, tol: float = 1e-8) -> FieldPair:
    """Read the channel amplitudes back out of a ladder Hamiltonian.

    Raises NotLambdaStructured when the diagonal, the 1-2 block or the
    Hermiticity deviate beyond tol: downstream that signals a broken
    dressing step, not a recoverable condition.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(float(np.max(np.abs(h))), 1.0)
    herm = np.max(np.abs(h - algebra.adjoint(h)))
    structure = max(
        float(np.max(np.abs(h[..., 0, 0]))),
        float(np.max(np.abs(h[..., 1, 1]))),
        float(np.max(np.abs(h[..., 2, 2]))),
        float(np.max(np.abs(h[..., 0, 1]))),
        float(np.max(np.abs(h[..., 1, 0]))),
    )
    if herm > tol * scale or structure > tol * scale:
        raise NotLambdaStructured(
            f"hermiticity dev {herm:.2e}, structure dev {structure:.2e} (scale {scale:.2e})"
        )
    return FieldPair(-2.0 * h[..., 2, 0], -2.0 * h[..., 2, 1])


def lax_u(lam: complex, h) -> np.ndarray:
    """Tau-evolution matrix of the auxiliary linear system."""
    h = np.asarray(h, dtype=complex)
    return 0.5j * lam * D_MATRIX - 1j * h


def lax_v(lam: complex, rho, p: LambdaParams) -> np.ndarray:
    """Zeta-evolution matrix; has a simple pole at lam = Delta."""
    if abs(lam - p.delta) <= POLE_GUARD:
        raise SpectralPole(f"lambda = {lam} within guard of Delta = {p.delta}")
    rho = np.asarray(rho, dtype=complex)
    return 0.5j * p.nu0 / (lam - p.delta) * rho


def dark_state(eta: float) -> AtomState:
    """Ground-sublevel superposition decoupled from the background light."""
    if not 0.0 <= eta <= math.pi / 2:
        raise ValueError(f"eta must lie in [0, pi/2], got {eta}")
    return AtomState(pure=np.array([-math.sin(eta), math.cos(eta), 0.0], dtype=complex))


def density_from_pure(psi) -> np.ndarray:
    """Projector |psi><psi| with a renormalization tolerance of 1e-4."""
    if isinstance(psi, AtomState):
        if not psi.is_pure:
            raise ValueError("expected a pure state")
        v = psi.pure
    else:
        v = np.asarray(psi, dtype=complex)
    norm = np.sqrt(np.abs(algebra.scalar_product(v, v)))
    if np.any(np.abs(norm - 1.0) > 1e-4):
        raise NotNormalized(f"norm deviates by {np.max(np.abs(norm - 1.0)):.2e}")
    v = v / norm[..., None] if v.ndim > 1 else v / norm
    return algebra.outer(v, v)


def background_fields(p: LambdaParams, zeta) -> FieldPair:
    """Control background entering the finite-density boundary condition."""
    zeta = np.asarray(zeta, dtype=float)
    amp = p.omega0 * np.exp(1j * p.k * zeta)
    return FieldPair(math.cos(p.eta) * amp, math.sin(p.eta) * amp)
