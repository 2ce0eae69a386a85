"""Closed-form spectra, continuum-band predicates and zero-mode profiles."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .lattice import ModelKind, ModelSpec, build_hamiltonian

__all__ = [
    "Membership",
    "Morphology",
    "BandPredicate",
    "ZeroModeProfile",
    "hatano_obc_eigs",
    "ellipse_form",
    "ellipse_membership",
    "gainloss_form",
    "gainloss_band_membership",
    "gainloss_band_morphology",
    "interval_membership",
    "ssh_zero_mode_ratio",
    "ssh_zero_mode",
    "ssh_zero_mode_domain",
    "gainloss_exceptional_data",
    "coalesced_eigenvectors",
    "EPS_BOUNDARY",
]

EPS_BOUNDARY = 1e-9


class Membership(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


class Morphology(enum.Enum):
    SINGLE_LOBE = "single_lobe"
    PINCHED = "pinched"
    TWO_LOBES = "two_lobes"


def _classify(form, eps_b):
    """Compare a band form against 1; works elementwise on arrays."""
    form = np.asarray(form, dtype=float)
    code = np.where(np.abs(form - 1.0) <= eps_b, 1, np.where(form < 1.0, 0, 2))
    return _as_membership(code)


_MEMBERS = np.array([Membership.INTERIOR, Membership.BOUNDARY, Membership.EXTERIOR], dtype=object)


def _as_membership(code):
    out = _MEMBERS[code]
    return out if np.ndim(code) else out


def hatano_obc_eigs(N: int, gamma: float) -> np.ndarray:
    """``2 sqrt(gamma) cos(n pi / (N+1))`` for ``n = 1..N``."""
    if N < 1 or not 0 <= gamma <= 1:
        raise ValueError("need N >= 1 and gamma in [0, 1]")
    n = np.arange(1, N + 1)
    return 2.0 * np.sqrt(gamma) * np.cos(n * np.pi / (N + 1))


def ellipse_form(E, gamma: float):
    E = np.asarray(E, dtype=complex)
    return E.real**2 / (1 + gamma) ** 2 + E.imag**2 / (1 - gamma) ** 2


def interval_membership(E, a: float, b: float, eps_b: float = EPS_BOUNDARY):
    """Membership in the real segment ``[a, b]`` seen as a degenerate band.

    Points on the open segment are interior, the endpoints are boundary and
    anything off the real axis is exterior.
    """
    E = np.asarray(E, dtype=complex)
    on_axis = np.abs(E.imag) <= eps_b
    near_end = (np.abs(E.real - a) <= eps_b) | (np.abs(E.real - b) <= eps_b)
    inside = on_axis & (E.real > a) & (E.real < b)
    return _as_membership(np.where(on_axis & near_end, 1, np.where(inside, 0, 2)))


def ellipse_membership(E, gamma: float, eps_b: float = EPS_BOUNDARY):
    """Classify ``E`` against the elliptic Hatano-Nelson continuum band.

    The ellipse has semi-axes ``1 + gamma`` (real) and ``1 - gamma``
    (imaginary); its rim is the PBC spectrum. At ``gamma = 1`` it collapses
    onto the segment ``[-2, 2]``.
    """
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if gamma == 1:
        return interval_membership(E, -2.0, 2.0, eps_b)
    return _classify(ellipse_form(E, gamma), eps_b)


def gainloss_form(E, V0: float):
    """``4 Re^2 Im^2 + (Re^2 - Im^2 + V0^2)^2``, which equals ``|E^2 + V0^2|^2``."""
    E = np.asarray(E, dtype=complex)
    x, y = E.real, E.imag
    return 4 * x**2 * y**2 + (x**2 - y**2 + V0**2) ** 2


def gainloss_band_membership(E, V0: float, eps_b: float = EPS_BOUNDARY):
    """Classify ``E`` against the quartic band of the ``gamma = 0`` gain/loss chain."""
    return _classify(gainloss_form(E, V0), eps_b)


def gainloss_band_morphology(V0: float, tol: float = EPS_BOUNDARY) -> Morphology:
    """Connectedness of the gain/loss band, read off from where ``E = 0`` sits.

    At ``E = 0`` the quartic form is ``V0**4``: inside means one lobe, on the
    rim means the figure-eight pinch, outside means two separate lobes.
    """
    if V0 < 0:
        raise ValueError("V0 must be non-negative")
    m = gainloss_band_membership(0.0, V0, tol)
    return {
        Membership.INTERIOR: Morphology.SINGLE_LOBE,
        Membership.BOUNDARY: Morphology.PINCHED,
        Membership.EXTERIOR: Morphology.TWO_LOBES,
    }[m]


@dataclass(frozen=True)
class BandPredicate:
    """A continuum-band test bound to its parameters.

    ``kind`` is one of ``"ellipse"``, ``"gainloss"`` or ``"interval"``.
    """

    kind: str
    params: tuple
    eps_b: float = EPS_BOUNDARY

    @classmethod
    def for_spec(cls, spec: ModelSpec, eps_b: float = EPS_BOUNDARY) -> "BandPredicate":
        if spec.kind is ModelKind.HATANO_NELSON:
            if spec.gamma == 1:
                return cls("interval", (-2.0, 2.0), eps_b)
            return cls("ellipse", (spec.gamma,), eps_b)
        if spec.kind is ModelKind.GAIN_LOSS and spec.gamma == 0:
            return cls("gainloss", (spec.V0,), eps_b)
        raise ValueError(f"no closed-form band for {spec.kind.value} at gamma={spec.gamma}")

    def __call__(self, E):
        if self.kind == "ellipse":
            return ellipse_membership(E, *self.params, eps_b=self.eps_b)
        if self.kind == "gainloss":
            return gainloss_band_membership(E, *self.params, eps_b=self.eps_b)
        if self.kind == "interval":
            return interval_membership(E, *self.params, eps_b=self.eps_b)
        raise ValueError(f"unknown band kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class ZeroModeProfile:
    ratio: float
    amplitudes: np.ndarray
    normalization: float


def ssh_zero_mode_ratio(gamma: float, delta: float) -> float:
    return -gamma * (1 - delta) / (1 + delta)


def ssh_zero_mode(N: int, gamma: float, delta: float) -> ZeroModeProfile:
    """Zero-energy solution of the SSH recursion on an open chain of ``N`` sites.

    Odd sites ``2n - 1`` carry ``r**(n-1)`` with ``r = -gamma (1-delta)/(1+delta)``,
    even sites are empty. The vector is normalized; ``normalization`` is the
    factor applied to the unnormalized geometric profile. Only the last even
    site violates ``H psi = 0``, by an amount of order ``|r|**(N/2 - 1)``.
    """
    if N < 2 or N % 2:
        raise ValueError("N must be even and >= 2")
    if not -1 < delta < 1 or not 0 <= gamma <= 1:
        raise ValueError("need |delta| < 1 and gamma in [0, 1]")
    r = ssh_zero_mode_ratio(gamma, delta)
    psi = np.zeros(N, dtype=complex)
    psi[0::2] = r ** np.arange(N // 2)
    A = 1.0 / np.linalg.norm(psi)
    return ZeroModeProfile(r, psi * A, A)


def ssh_zero_mode_domain(gamma: float) -> tuple[float, float]:
    """Range of ``delta`` where the zero mode decays away from the left edge."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    return -(1 - gamma) / (1 + gamma), 1.0


def gainloss_exceptional_data(V0: float) -> tuple[complex, complex]:
    """The two exceptional energies ``(-i V0, +i V0)`` of the ``gamma = 0`` gain/loss chain."""
    return -1j * V0, 1j * V0


def coalesced_eigenvectors(N: int, V0: float, tol: float = 1e-10) -> dict:
    """Eigenvectors at the two gain/loss exceptional points, by null space.

    Returns ``{E: basis}`` where ``basis`` has one column per independent
    eigenvector of ``H - E`` (one each when both points are of order N/2).
    """
    H = build_hamiltonian(ModelSpec(ModelKind.GAIN_LOSS, N, 0.0, V0=V0)).to_dense()
    out = {}
    for E in gainloss_exceptional_data(V0):
        _, s, vh = np.linalg.svd(H - E * np.eye(N))
        null = vh[s <= tol * max(1.0, s[0])].conj().T
        # fix the phase so the first nonzero entry is real positive
        for c in range(null.shape[1]):
            lead = null[np.argmax(np.abs(null[:, c]) > tol), c]
            null[:, c] *= abs(lead) / lead
        out[E] = null
    return out
