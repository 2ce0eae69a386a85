"""Non-unitary time evolution ``i dpsi/dt = H psi`` and stationarity diagnostics.

Skin-effect Hamiltonians are far from normal, so propagation by
eigendecomposition is unreliable exactly where it matters. States are
instead integrated with an adaptive Dormand-Prince 5(4) pair. The state is
renormalized after every accepted step and its norm kept as ``log ||psi||``,
which lets amplifying spectra run for long times without overflow.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import ssh_zero_mode, ssh_zero_mode_domain
from .eigen import hamiltonian_spectrum
from .lattice import Boundary, DisorderSpec, Hamiltonian, ModelKind, ModelSpec, apply_disorder

__all__ = [
    "EvolutionResult",
    "RobustnessReport",
    "Verdict",
    "StepSizeUnderflow",
    "evolve",
    "stationarity_deviation",
    "fidelity",
    "lifetime",
    "disorder_robustness",
    "EPS_LIFE",
]

EPS_LIFE = 0.01

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class StepSizeUnderflow(RuntimeError):
    """Adaptive step shrank below resolvable size; ``t`` is where it happened."""

    def __init__(self, t: float, h: float):
        super().__init__(f"step size underflow (h={h:.3e}) at t={t:.6g}")
        self.t = t
        self.h = h


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Sampled trajectory of a normalized state plus its log-norm.

    ``states[i] * exp(lognorm[i])`` is the actual state at ``times[i]``.
    """

    times: np.ndarray
    deviation: np.ndarray
    lognorm: np.ndarray
    lifetime: float | None
    integrator_stats: dict
    states: np.ndarray | None = None

    def state(self, i: int = -1) -> np.ndarray:
        if self.states is None:
            raise ValueError("states were not stored")
        return self.states[i] * np.exp(self.lognorm[i])


def fidelity(psi_t, psi0) -> float:
    """``|<psi0, psi_t>| / (||psi0|| ||psi_t||)``."""
    a = np.linalg.norm(psi0)
    b = np.linalg.norm(psi_t)
    if a == 0 or b == 0:
        raise ValueError("fidelity of a zero vector")
    return float(min(1.0, abs(np.vdot(psi0, psi_t)) / (a * b)))


def stationarity_deviation(psi_t, psi0) -> float:
    """Projective distance ``sqrt(1 - F**2)`` between two states.

    Evaluated as the norm of the part of ``psi_t / ||psi_t||`` orthogonal to
    ``psi0``, which keeps full relative accuracy when the states are close.
    """
    psi_t = np.asarray(psi_t)
    psi0 = np.asarray(psi0)
    a = np.linalg.norm(psi0)
    b = np.linalg.norm(psi_t)
    if a == 0 or b == 0:
        raise ValueError("deviation of a zero vector")
    u = psi0 / a
    phi = psi_t / b
    return float(min(1.0, np.linalg.norm(phi - u * np.vdot(u, phi))))


def _matvec(H):
    if isinstance(H, Hamiltonian):
        return H.matvec, H.n
    A = np.asarray(H, dtype=complex)
    return (lambda v: A @ v), A.shape[0]


def _norm_estimate(H) -> float:
    if isinstance(H, Hamiltonian):
        return float(
            np.max(np.abs(H.diag))
            + np.max(np.abs(H.upper), initial=0.0)
            + np.max(np.abs(H.lower), initial=0.0)
            + abs(H.corner_lower)
            + abs(H.corner_upper)
        )
    return float(np.max(np.sum(np.abs(np.asarray(H)), axis=1)))


def evolve(
    H,
    psi0,
    t_final: float,
    tol: float = 1e-10,
    dt_out: float = 0.05,
    eps_life: float = EPS_LIFE,
    store_states: bool = True,
    fixed_step: float | None = None,
) -> EvolutionResult:
    """Integrate ``i dpsi/dt = H psi`` from ``psi0`` up to ``t_final``.

    Parameters
    ----------
    H : Hamiltonian or array_like
    psi0 : array_like
        Initial state, any nonzero norm.
    t_final : float
        Positive end time.
    tol : float
        Local error tolerance per step, relative to the state norm; must lie
        in ``[1e-12, 1e-4]``.
    dt_out : float
        Spacing of the output grid. Steps are shortened to land on it.
    eps_life : float
        Threshold used for the ``lifetime`` field.
    fixed_step : float, optional
        Disable adaptivity and use this step (convergence studies).

    Raises
    ------
    StepSizeUnderflow
        If the controller needs a step below ``16 eps max(1, t)``.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    f_H, n = _matvec(H)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (n,):
        raise ValueError(f"psi0 must have shape ({n},)")
    nrm0 = np.linalg.norm(psi0)
    if nrm0 == 0:
        raise ValueError("psi0 is the zero vector")

    def rhs(v):
        return -1j * f_H(v)

    n_out = max(1, int(round(t_final / dt_out)))
    times = np.linspace(0.0, t_final, n_out + 1)
    y = psi0 / nrm0
    logn = math.log(nrm0)
    states = np.empty((n_out + 1, n), dtype=complex) if store_states else None
    lognorm = np.empty(n_out + 1)
    deviation = np.empty(n_out + 1)
    if store_states:
        states[0] = y
    lognorm[0] = logn
    deviation[0] = 0.0

    t = 0.0
    if fixed_step is not None:
        h = fixed_step
    else:
        h = 0.5 * tol ** 0.2 / max(_norm_estimate(H), 1e-3)
    k1 = rhs(y)
    accepted = rejected = 0
    nfev = 1
    max_err = 0.0
    tiny = 16 * np.finfo(float).eps
    for i in range(1, n_out + 1):
        t_next = times[i]
        while t < t_next:
            last = t_next - t <= h * (1 + 1e-12)
            step = t_next - t if last else h
            if step < tiny * max(1.0, abs(t)):
                raise StepSizeUnderflow(t, step)
            k = [k1]
            for s in range(1, 7):
                ys = y + step * sum(a * kk for a, kk in zip(_A[s], k) if a != 0)
                k.append(rhs(ys))
            nfev += 6
            y_new = y + step * sum(b * kk for b, kk in zip(_B5, k) if b != 0)
            err_vec = step * sum(e * kk for e, kk in zip(_E, k))
            err = float(np.linalg.norm(err_vec)) / tol
            if fixed_step is not None or err <= 1.0:
                t = t_next if last else t + step
                nrm = float(np.linalg.norm(y_new))
                if nrm == 0 or not np.isfinite(nrm):
                    raise FloatingPointError(f"state norm became {nrm} at t={t}")
                logn += math.log(nrm)
                y = y_new / nrm
                k1 = k[6] / nrm
                accepted += 1
                max_err = max(max_err, err * tol)
                if fixed_step is None:
                    fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                    if not last or fac < 1:
                        h = step * fac
            else:
                rejected += 1
                h = step * max(0.2, 0.9 * err ** -0.2)
        if store_states:
            states[i] = y
        lognorm[i] = logn
        deviation[i] = stationarity_deviation(y, psi0)

    stats = {
        "accepted_steps": accepted,
        "rejected_steps": rejected,
        "rhs_evaluations": nfev,
        "max_local_error": max_err,
        "tol": tol,
    }
    result = EvolutionResult(times, deviation, lognorm, None, stats, states)
    return EvolutionResult(times, deviation, lognorm, lifetime(result, eps_life), stats, states)


def lifetime(result: EvolutionResult, eps_life: float = EPS_LIFE) -> float | None:
    """First time the stationarity deviation exceeds ``eps_life``, linearly interpolated."""
    if not 0 < eps_life < 1:
        raise ValueError("eps_life must lie in (0, 1)")
    above = np.nonzero(result.deviation > eps_life)[0]
    if len(above) == 0:
        return None
    i = above[0]
    t0, t1 = result.times[i - 1], result.times[i]
    d0, d1 = result.deviation[i - 1], result.deviation[i]
    return float(t0 + (eps_life - d0) / (d1 - d0) * (t1 - t0))


class Verdict(str, enum.Enum):
    ROBUST = "robust"
    FRAGILE = "fragile"


@dataclass(frozen=True, eq=False)
class RobustnessReport:
    realizations: int
    zero_energy_spread: float
    survival_overlap: np.ndarray
    nearest_eigenvalues: np.ndarray
    verdict: Verdict
    thresholds: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def survival_fraction(self) -> float:
        return float(np.mean(self.survival_overlap >= self.thresholds["overlap"]))

    def rows(self):
        """``(realization, nearest_eig_re, nearest_eig_im, overlap)`` per realization."""
        for r, (e, ov) in enumerate(zip(self.nearest_eigenvalues, self.survival_overlap)):
            yield (r, float(e.real), float(e.imag), float(ov))


def disorder_robustness(
    spec: ModelSpec,
    d: DisorderSpec,
    probe_time: float = 5.0,
    overlap_threshold: float = 0.9,
    survival_fraction: float = 0.95,
    spread_threshold: float = 1e-2,
    tol: float = 1e-10,
    max_workers: int | None = None,
) -> RobustnessReport:
    """Monte Carlo test of the SSH zero mode against weak hopping disorder.

    For every realization the disordered chain is diagonalized (gauged when
    the bond products stay positive) to find the eigenvalue nearest zero,
    and the clean zero-mode profile is evolved under it up to
    ``probe_time`` to measure its surviving overlap.

    The verdict is ``ROBUST`` when at least ``survival_fraction`` of the
    overlaps reach ``overlap_threshold`` and, for ``delta > 0`` where true
    zero eigenvalues exist, the nearest-to-zero spread stays below
    ``spread_threshold``.
    """
    if spec.kind is not ModelKind.SSH or spec.bc is not Boundary.OBC:
        raise ValueError("disorder_robustness needs the open SSH chain")
    lo, hi = ssh_zero_mode_domain(spec.gamma)
    if not lo < spec.delta < hi:
        raise ValueError(f"delta={spec.delta} outside the zero-mode domain ({lo:.6g}, {hi})")
    psi0 = ssh_zero_mode(spec.N, spec.gamma, spec.delta).amplitudes

    def one(r):
        H = apply_disorder(spec, d, r)
        sp = hamiltonian_spectrum(H)
        res = evolve(H, psi0, probe_time, tol=tol, dt_out=probe_time, store_states=True)
        return sp.nearest(0.0), fidelity(res.states[-1], psi0), sp.conditioning_note if sp.method.value == "qr" else None

    idx = range(d.realizations)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            out = list(pool.map(one, idx))
    else:
        out = [one(r) for r in idx]
    nearest = np.array([o[0] for o in out], dtype=complex)
    overlaps = np.array([o[1] for o in out])
    notes = tuple(sorted({o[2] for o in out if o[2]}))
    spread = float(np.max(np.abs(nearest)))
    ok = np.mean(overlaps >= overlap_threshold) >= survival_fraction
    if spec.delta > 0:
        ok = ok and spread < spread_threshold
    thresholds = {
        "overlap": overlap_threshold,
        "survival_fraction": survival_fraction,
        "spread": spread_threshold,
        "probe_time": probe_time,
    }
    return RobustnessReport(
        d.realizations, spread, overlaps, nearest,
        Verdict.ROBUST if ok else Verdict.FRAGILE, thresholds, notes,
    )
