"""Hamiltonians of one-dimensional non-Hermitian tight-binding chains.

Three models are supported, all nearest-neighbour:

* ``HATANO_NELSON``: ``psi[j+1] + gamma * psi[j-1] = E psi[j]``
* ``GAIN_LOSS``: the same hopping plus an on-site term ``i (-1)**j V0``
* ``SSH``: dimerized forward hopping ``T_n = 1 + (-1)**n delta`` on bond
  ``n`` (between sites ``n`` and ``n+1``) and backward hopping
  ``gamma * T_n`` on the same bond.

Sites are labelled ``j = 1..N``. The matrices are stored in banded form;
row ``j`` of ``H @ psi`` reads ``lower[j-1] psi[j-1] + diag[j] psi[j] +
upper[j] psi[j+1]``, i.e. ``upper`` holds the forward (leftward moving)
amplitudes and ``lower`` the backward ones.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ModelKind",
    "Boundary",
    "ModelSpec",
    "DisorderSpec",
    "Hamiltonian",
    "site_couplings",
    "build_hamiltonian",
    "apply_disorder",
    "disorder_rng",
]


class ModelKind(str, enum.Enum):
    HATANO_NELSON = "hatano"
    GAIN_LOSS = "gainloss"
    SSH = "ssh"


class Boundary(str, enum.Enum):
    OBC = "obc"
    PBC = "pbc"


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one lattice model.

    ``gamma`` is the non-Hermitian degree: 1 is the Hermitian chain and 0
    the fully asymmetric one. ``V0`` only matters for ``GAIN_LOSS`` and
    ``delta`` only for ``SSH``.
    """

    kind: ModelKind
    N: int
    gamma: float
    V0: float = 0.0
    delta: float = 0.0
    bc: Boundary = Boundary.OBC

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "bc", Boundary(self.bc))
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.V0 < 0:
            raise ValueError(f"V0 must be non-negative, got {self.V0}")
        if not -1.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (-1, 1), got {self.delta}")
        two_site_cell = self.kind is ModelKind.SSH or (
            self.kind is ModelKind.GAIN_LOSS and self.bc is Boundary.PBC
        )
        if two_site_cell and self.N % 2:
            raise ValueError(f"{self.kind.value} with {self.bc.value} needs an even N, got {self.N}")

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class DisorderSpec:
    """Weak random hopping disorder for the SSH chain.

    Forward amplitudes get an additive shift drawn from
    ``U[-forward_width, forward_width]``; each backward bond gets
    ``gamma_n = gamma * (1 + u_n)`` with ``u_n ~ U[-gamma_width, gamma_width]``.
    """

    forward_width: float = 0.0
    gamma_width: float = 0.0
    seed: int = 0
    realizations: int = 1

    def __post_init__(self):
        if self.forward_width < 0 or self.gamma_width < 0:
            raise ValueError("disorder widths must be non-negative")
        if self.seed < 0 or int(self.seed) != self.seed:
            raise ValueError("seed must be an unsigned integer")
        if self.realizations < 1:
            raise ValueError("realizations must be positive")


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Tridiagonal matrix with optional periodic corner entries.

    ``corner_upper`` is the top-right element ``H[0, n-1]`` and
    ``corner_lower`` the bottom-left ``H[n-1, 0]``; both are zero for OBC.
    """

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    corner_lower: complex = 0j
    corner_upper: complex = 0j
    spec: ModelSpec | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def is_periodic(self) -> bool:
        return self.corner_lower != 0 or self.corner_upper != 0

    def to_dense(self) -> np.ndarray:
        n = self.n
        H = np.diag(self.diag.astype(complex))
        idx = np.arange(n - 1)
        H[idx, idx + 1] += self.upper
        H[idx + 1, idx] += self.lower
        H[0, n - 1] += self.corner_upper
        H[n - 1, 0] += self.corner_lower
        return H

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        """``H @ psi`` in O(n); ``psi`` may carry extra trailing axes."""
        psi = np.asarray(psi)
        shape = (-1,) + (1,) * (psi.ndim - 1)
        out = self.diag.reshape(shape) * psi
        out[:-1] += self.upper.reshape(shape) * psi[1:]
        out[1:] += self.lower.reshape(shape) * psi[:-1]
        if self.corner_upper:
            out[0] += self.corner_upper * psi[-1]
        if self.corner_lower:
            out[-1] += self.corner_lower * psi[0]
        return out

    def __matmul__(self, psi):
        return self.matvec(psi)

    def same_as(self, other: "Hamiltonian") -> bool:
        return (
            np.array_equal(self.diag, other.diag)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and self.corner_lower == other.corner_lower
            and self.corner_upper == other.corner_upper
        )


def _forward_amplitude(spec: ModelSpec, bond: np.ndarray) -> np.ndarray:
    if spec.kind is ModelKind.SSH:
        return 1.0 + np.where(bond % 2 == 0, 1.0, -1.0) * spec.delta
    return np.ones(len(bond))


def site_couplings(spec: ModelSpec, num_sites: int):
    """Return ``(diag, upper, lower)`` for a chain of ``num_sites`` sites.

    Entry ``k`` of ``upper``/``lower`` belongs to bond ``k+1`` joining sites
    ``k+1`` and ``k+2``. The coefficients do not depend on ``spec.N``, which
    is what the forward recursion on long chains needs.
    """
    sites = np.arange(1, num_sites + 1)
    bonds = sites[:-1]
    if spec.kind is ModelKind.GAIN_LOSS:
        # diag[1] = -i V0; flipping the parity would conjugate the spectrum
        diag = 1j * np.where(sites % 2 == 0, 1.0, -1.0) * spec.V0
    else:
        diag = np.zeros(num_sites, dtype=complex)
    upper = _forward_amplitude(spec, bonds).astype(complex)
    lower = spec.gamma * upper
    return diag.astype(complex), upper, lower


def build_hamiltonian(spec: ModelSpec) -> Hamiltonian:
    """Banded Hamiltonian of ``spec`` with its boundary condition."""
    diag, upper, lower = site_couplings(spec, spec.N)
    corner_lower = corner_upper = 0j
    if spec.bc is Boundary.PBC:
        # wrap bond N joins site N to site 1
        t_wrap = complex(_forward_amplitude(spec, np.array([spec.N]))[0])
        corner_lower = t_wrap
        corner_upper = spec.gamma * t_wrap
        if spec.N == 2:
            # both bonds connect the same pair of sites
            return Hamiltonian(diag, lower + corner_lower, upper + corner_upper, spec=spec)
    return Hamiltonian(diag, lower, upper, corner_lower, corner_upper, spec=spec)


def disorder_rng(seed: int, realization: int) -> np.random.Generator:
    """Counter-based stream for one disorder realization.

    Philox4x64 keyed by ``(seed, realization)``; draws are identical on every
    platform and independent of the order in which realizations run.
    """
    key = (int(realization) << 64) | (int(seed) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(key=key))


def apply_disorder(spec: ModelSpec, d: DisorderSpec, realization: int) -> Hamiltonian:
    """Disordered OBC SSH Hamiltonian for one realization index."""
    if spec.kind is not ModelKind.SSH or spec.bc is not Boundary.OBC:
        raise ValueError("hopping disorder is defined for the open SSH chain only")
    if not 0 <= realization < d.realizations:
        raise IndexError(f"realization {realization} outside [0, {d.realizations})")
    clean = build_hamiltonian(spec)
    rng = disorder_rng(d.seed, realization)
    nb = spec.N - 1
    dt = rng.uniform(-d.forward_width, d.forward_width, nb)
    u = rng.uniform(-d.gamma_width, d.gamma_width, nb)
    upper = clean.upper + dt
    lower = clean.lower * (1.0 + u)
    return Hamiltonian(clean.diag.copy(), lower, upper, spec=spec)
