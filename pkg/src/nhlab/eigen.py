"""Eigenvalues of finite non-Hermitian chains.

Open chains with skin effect are exponentially non-normal: a direct QR on
the Hatano-Nelson matrix loses every digit once ``N`` reaches a few dozen.
The remedy is a diagonal similarity (imaginary gauge) that symmetrizes each
bond; the spectrum is untouched and the result is well conditioned.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .lattice import Boundary, Hamiltonian, ModelKind, ModelSpec, build_hamiltonian

__all__ = [
    "Method",
    "Spectrum",
    "GaugeTransform",
    "ConvergenceError",
    "GaugeUndefinedError",
    "hessenberg",
    "eigenvalues_qr",
    "gauge_transform",
    "obc_spectrum",
    "pbc_spectrum",
    "bloch_matrix",
    "match_spectra",
    "MAX_QR_DIM",
]

MAX_QR_DIM = 400
CONDITIONING_THRESHOLD = 1e12


class ConvergenceError(RuntimeError):
    """QR iteration hit its iteration cap."""


class GaugeUndefinedError(ValueError):
    """A bond product is zero, negative or complex, so no real gauge exists."""


class Method(str, enum.Enum):
    ANALYTIC = "analytic"
    QR = "qr"
    GAUGED_QR = "gauged_qr"
    BLOCH = "bloch"


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    method: Method
    max_residual: float | None = None
    conditioning_note: str | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def nearest(self, z: complex = 0.0) -> complex:
        return complex(self.eigenvalues[np.argmin(np.abs(self.eigenvalues - z))])


def _sorted(ev: np.ndarray) -> np.ndarray:
    ev = np.asarray(ev, dtype=complex)
    return ev[np.lexsort((ev.imag, ev.real))]


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """Diagonal similarity ``S``; ``S^-1 H S`` is complex symmetric."""

    scale: np.ndarray
    symmetrized_offdiag: np.ndarray

    def to_gauged(self, psi):
        """Map a vector of the original chain to the gauged one (``S^-1 psi``)."""
        return np.asarray(psi) / self.scale.reshape((-1,) + (1,) * (np.ndim(psi) - 1))

    def from_gauged(self, phi):
        return np.asarray(phi) * self.scale.reshape((-1,) + (1,) * (np.ndim(phi) - 1))

    @property
    def scale_ratio(self) -> float:
        return float(self.scale.max() / self.scale.min())


# --------------------------------------------------------------------------
# dense complex QR
# --------------------------------------------------------------------------

def hessenberg(A: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form of ``A`` by Householder reflections."""
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k]
        if not np.any(x[1:]):
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _givens(a: complex, b: complex):
    """``c`` real, ``s`` complex with ``[[c, s], [-conj(s), c]] @ [a, b] = [r, 0]``."""
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, 1 + 0j
    rho = np.hypot(abs(a), abs(b))
    c = abs(a) / rho
    s = (a / abs(a)) * np.conj(b) / rho
    return c, s


def _wilkinson_shift(a, b, c, d):
    """Eigenvalue of ``[[a, b], [c, d]]`` closest to ``d``."""
    tr = 0.5 * (a - d)
    disc = np.sqrt(tr * tr + b * c)
    mu1 = d - (b * c) / (tr + disc) if tr + disc != 0 else d
    mu2 = d - (b * c) / (tr - disc) if tr - disc != 0 else d
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _qr_sweep(H, lo, hi, mu):
    """One explicitly shifted QR step on the active block ``H[lo:hi+1, lo:hi+1]``."""
    idx = np.arange(lo, hi + 1)
    H[idx, idx] -= mu
    rots = []
    for k in range(lo, hi):
        c, s = _givens(H[k, k], H[k + 1, k])
        rk = H[k, k:hi + 1].copy()
        rk1 = H[k + 1, k:hi + 1].copy()
        H[k, k:hi + 1] = c * rk + s * rk1
        H[k + 1, k:hi + 1] = -np.conj(s) * rk + c * rk1
        H[k + 1, k] = 0.0
        rots.append((c, s))
    for k, (c, s) in zip(range(lo, hi), rots):
        top = min(k + 2, hi + 1)
        ck = H[lo:top, k].copy()
        ck1 = H[lo:top, k + 1].copy()
        H[lo:top, k] = c * ck + np.conj(s) * ck1
        H[lo:top, k + 1] = -s * ck + c * ck1
    H[idx, idx] += mu


def eigenvalues_qr(H, max_iter: int | None = None, verify: bool = False) -> Spectrum:
    """All eigenvalues of a dense complex matrix by shifted QR.

    The matrix is reduced to Hessenberg form and iterated with Wilkinson
    shifts on the trailing 2x2 block, deflating whenever a subdiagonal entry
    drops below machine precision relative to its neighbours or to the
    matrix norm. An exceptional shift is used every tenth stalled step.

    Parameters
    ----------
    H : Hamiltonian or array_like
        Square matrix, at most ``MAX_QR_DIM`` on a side.
    max_iter : int, optional
        Total iteration cap, default ``30 * n``.
    verify : bool
        Also compute ``max_residual`` as the largest ``min ||(H - E) psi||``
        over unit ``psi`` (smallest singular value of ``H - E``).

    Raises
    ------
    ConvergenceError
        If the cap is reached before every eigenvalue has deflated.
    """
    A = H.to_dense() if isinstance(H, Hamiltonian) else np.asarray(H, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n > MAX_QR_DIM:
        raise ValueError(f"dense QR is limited to n <= {MAX_QR_DIM}, got {n}")
    if max_iter is None:
        max_iter = 30 * n
    W = hessenberg(A)
    eps = np.finfo(float).eps
    norm = np.linalg.norm(W)
    floor = eps * norm if norm > 0 else 0.0

    hi = n - 1
    total = 0
    stall = 0
    while hi > 0:
        # find the start of the unreduced block ending at hi
        lo = hi
        while lo > 0:
            sub = abs(W[lo, lo - 1])
            if sub <= eps * (abs(W[lo, lo]) + abs(W[lo - 1, lo - 1])) or sub <= floor:
                W[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stall = 0
            continue
        if total >= max_iter:
            raise ConvergenceError(
                f"QR did not converge in {max_iter} iterations; {hi + 1} eigenvalues undeflated"
            )
        stall += 1
        if stall % 10 == 0:
            mu = W[hi, hi] + 0.75 * abs(W[hi, hi - 1]) * (1 + 1j)
        else:
            mu = _wilkinson_shift(W[hi - 1, hi - 1], W[hi - 1, hi], W[hi, hi - 1], W[hi, hi])
        _qr_sweep(W, lo, hi, mu)
        total += 1

    ev = _sorted(np.diag(W))
    residual = _residual(A, ev) if verify else None
    return Spectrum(ev, Method.QR, residual)


def _residual(A: np.ndarray, ev: np.ndarray) -> float:
    eye = np.eye(A.shape[0])
    return max(float(np.linalg.svd(A - e * eye, compute_uv=False)[-1]) for e in ev)


# --------------------------------------------------------------------------
# gauge transform
# --------------------------------------------------------------------------

def gauge_transform(H: Hamiltonian):
    """Symmetrize every bond of an open chain by a diagonal similarity.

    With ``s[j+1] / s[j] = sqrt(lower[j] / upper[j])`` the transformed
    off-diagonals are ``sqrt(upper[j] * lower[j])`` on both sides.

    Returns
    -------
    (GaugeTransform, Hamiltonian)

    Raises
    ------
    GaugeUndefinedError
        For periodic chains, or when a bond product is not real and positive.
        A zero product is the fully asymmetric limit where the chain
        collapses onto an exceptional point.
    """
    if H.is_periodic:
        raise GaugeUndefinedError("gauge transform needs open boundaries")
    prod = H.upper * H.lower
    if np.any(prod == 0):
        raise GaugeUndefinedError(
            "zero bond product: gauge undefined, spectrum degenerates to an exceptional point"
        )
    if np.any(H.upper.imag != 0) or np.any(H.lower.imag != 0) or np.any(prod.real <= 0):
        raise GaugeUndefinedError("bond products must be real and positive")
    log_ratio = 0.5 * (np.log(np.abs(H.lower.real)) - np.log(np.abs(H.upper.real)))
    log_scale = np.concatenate([[0.0], np.cumsum(log_ratio)])
    scale = np.exp(log_scale - log_scale.max())
    if np.any(scale == 0):
        raise GaugeUndefinedError("gauge scale factors underflow; chain too long for this gamma")
    off = np.sign(H.upper.real) * np.sqrt(prod.real)
    gauged = Hamiltonian(H.diag.copy(), off.astype(complex), off.astype(complex), spec=H.spec)
    return GaugeTransform(scale, off), gauged


# --------------------------------------------------------------------------
# model spectra
# --------------------------------------------------------------------------

def _conditioning_note(g: GaugeTransform) -> str | None:
    ratio = g.scale_ratio
    if ratio > CONDITIONING_THRESHOLD:
        return f"gauge scale ratio {ratio:.3e}: eigenvectors of the original chain are exponentially ill-conditioned"
    return None


def hamiltonian_spectrum(H: Hamiltonian, verify: bool = False) -> Spectrum:
    """Eigenvalues of an open chain, gauged when possible."""
    if H.is_periodic:
        return eigenvalues_qr(H, verify=verify)
    if not np.any(H.lower) or not np.any(H.upper):
        # triangular: the exceptional-point limit
        return Spectrum(_sorted(H.diag), Method.ANALYTIC, 0.0 if verify else None)
    try:
        g, G = gauge_transform(H)
    except GaugeUndefinedError as exc:
        spec = eigenvalues_qr(H, verify=verify)
        return Spectrum(spec.eigenvalues, Method.QR, spec.max_residual, f"ungauged QR: {exc}")
    note = _conditioning_note(g)
    if not np.any(G.diag.imag):
        ev = eigh_tridiagonal(G.diag.real, G.upper.real, eigvals_only=True)
        residual = _residual(G.to_dense(), ev) if verify else None
        return Spectrum(_sorted(ev), Method.GAUGED_QR, residual, note)
    spec = eigenvalues_qr(G, verify=verify)
    return Spectrum(spec.eigenvalues, Method.GAUGED_QR, spec.max_residual, note)


def obc_spectrum(spec: ModelSpec, verify: bool = False) -> Spectrum:
    """OBC spectrum of a model: gauged symmetric solve, analytic at ``gamma = 0``.

    ``verify`` adds residuals measured on the gauged matrix.
    """
    if spec.bc is not Boundary.OBC:
        raise ValueError("obc_spectrum needs bc=OBC")
    return hamiltonian_spectrum(build_hamiltonian(spec), verify=verify)


def bloch_matrix(spec: ModelSpec, k) -> np.ndarray:
    """Bloch Hamiltonian(s) of a two-site-cell model, shape ``(..., 2, 2)``.

    The cell holds an odd site ``a`` and the following even site ``b``.
    """
    k = np.asarray(k, dtype=float)
    eik = np.exp(1j * k)
    g = spec.gamma
    out = np.zeros(k.shape + (2, 2), dtype=complex)
    if spec.kind is ModelKind.GAIN_LOSS:
        out[..., 0, 0] = -1j * spec.V0
        out[..., 1, 1] = 1j * spec.V0
        out[..., 0, 1] = 1 + g / eik
        out[..., 1, 0] = eik + g
    elif spec.kind is ModelKind.SSH:
        d = spec.delta
        out[..., 0, 1] = (1 - d) + g * (1 + d) / eik
        out[..., 1, 0] = g * (1 - d) + (1 + d) * eik
    else:
        raise ValueError("the Hatano-Nelson chain has a one-site cell")
    return out


def _two_band(M: np.ndarray) -> np.ndarray:
    a, b, c, d = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    return np.stack([half_tr + disc, half_tr - disc])


def pbc_spectrum(spec: ModelSpec, num_k: int = 256) -> Spectrum:
    """PBC (Bloch) spectrum sampled on ``k = 2 pi m / num_k``.

    Single-band values come in k order. Two-band values are not band-tracked
    here; use :func:`nhlab.recursion.pbc_loop_polygon` for ordered loops.
    """
    if num_k < 8:
        raise ValueError("num_k must be at least 8")
    k = 2 * np.pi * np.arange(num_k) / num_k
    if spec.kind is ModelKind.HATANO_NELSON:
        ev = np.exp(1j * k) + spec.gamma * np.exp(-1j * k)
    else:
        ev = _two_band(bloch_matrix(spec, k)).ravel()
    return Spectrum(ev.astype(complex), Method.BLOCH)


def match_spectra(a, b) -> float:
    """Largest distance after greedily pairing each value of ``a`` with one of ``b``.

    Pairs are formed in order of increasing distance; ``inf`` if the
    multisets differ in size.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if len(a) != len(b):
        return float("inf")
    if len(a) == 0:
        return 0.0
    dist = np.abs(a[:, None] - b[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used_a = np.zeros(len(a), bool)
    used_b = np.zeros(len(b), bool)
    worst = 0.0
    matched = 0
    for flat in order:
        i, j = divmod(int(flat), len(b))
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        worst = max(worst, dist[i, j])
        matched += 1
        if matched == len(a):
            break
    return float(worst)
