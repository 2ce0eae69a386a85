"""Forward recursion at a trial energy, growth classification and PBC loops.

Lifting the right-hand boundary condition turns the eigenproblem into an
initial-value problem: start from ``psi_0 = 0, psi_1 = seed`` and march

    psi[j+1] = ((E - diag[j]) psi[j] - lower[j-1] psi[j-1]) / upper[j]

along the chain. Energies for which the amplitude decays are the continuum
band of the semi-infinite lattice; on a long but finite chain they give
quasi-stationary states whose right-edge residual is exponentially small.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .lattice import Boundary, ModelKind, ModelSpec, site_couplings
from .eigen import bloch_matrix

__all__ = [
    "RecursionTrace",
    "GrowthVerdict",
    "GrowthClass",
    "WindingVerdict",
    "LoopSet",
    "QuasiStationaryState",
    "BandScan",
    "DivergentEnergyError",
    "recurse",
    "growth_rates",
    "classify_growth",
    "quasi_stationary_state",
    "pbc_loop_polygon",
    "winding_membership",
    "band_scan",
    "RATE_TOL",
    "NEAR_BOUNDARY_GUARD",
    "DEFAULT_J",
]

RESCALE_EXP = 512
_BIG = 2.0**RESCALE_EXP
_SMALL = 2.0**-RESCALE_EXP
RATE_TOL = 1e-3
NEAR_BOUNDARY_GUARD = 1e-4
DEFAULT_J = 2000


class DivergentEnergyError(ValueError):
    """The requested energy lies outside the continuum band."""


@dataclass(frozen=True, eq=False)
class RecursionTrace:
    """Amplitudes ``psi_0 .. psi_J`` for one trial energy.

    Values are stored as ``psi[j] * 2**exponent[j]`` so that traces spanning
    thousands of orders of magnitude stay finite; ``log_abs`` is exact.
    """

    E: complex
    seed: complex
    psi: np.ndarray
    exponent: np.ndarray
    overflow_at: int | None

    @property
    def J(self) -> int:
        return len(self.psi) - 1

    @property
    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.psi)) + self.exponent * np.log(2.0)

    @property
    def amplitudes(self) -> np.ndarray:
        """Plain amplitudes; may over- or underflow for very long traces."""
        with np.errstate(over="ignore", under="ignore"):
            return self.psi * np.exp2(self.exponent.astype(float))

    @property
    def boundary(self) -> float:
        """``|psi_J|``, the amplitude on the would-be boundary site."""
        return float(np.exp(self.log_abs[-1]))

    @property
    def residual(self) -> float:
        """``|psi_J|`` relative to ``max_j |psi_j|`` over ``j < J``."""
        la = self.log_abs
        return float(np.exp(la[-1] - np.max(la[:-1])))


def recurse(spec: ModelSpec, E: complex, seed: complex = 1.0, J: int | None = None) -> RecursionTrace:
    """March the model recurrence from ``psi_0 = 0, psi_1 = seed`` up to ``psi_J``.

    ``J`` defaults to ``spec.N + 1``, the right boundary site of the open
    chain. When the pair ``(psi_j, psi_j+1)`` leaves ``[2**-512, 2**512]`` it
    is rescaled by ``2**512`` and the exponent bookkeeping absorbs the factor.
    """
    if seed == 0:
        raise ValueError("seed must be nonzero")
    if J is None:
        J = spec.N + 1
    if J < 1:
        raise ValueError("J must be >= 1")
    diag, upper, lower = site_couplings(spec, J + 1)
    E = complex(E)
    psi = np.zeros(J + 1, dtype=complex)
    expo = np.zeros(J + 1, dtype=np.int64)
    psi[1] = seed
    overflow_at = None
    e = 0
    prev, cur = 0j, complex(seed)
    for j in range(1, J):
        # diag/upper are indexed from site 1, lower from bond 1
        back = lower[j - 2] * prev if j >= 2 else 0j
        nxt = ((E - diag[j - 1]) * cur - back) / upper[j - 1]
        big = max(abs(cur), abs(nxt))
        if big > _BIG or (0 < big < _SMALL):
            shift = -RESCALE_EXP if big > _BIG else RESCALE_EXP
            cur, nxt = cur * 2.0**shift, nxt * 2.0**shift
            e -= shift
            if overflow_at is None:
                overflow_at = j + 1
        prev, cur = cur, nxt
        psi[j + 1] = nxt
        expo[j + 1] = e
    return RecursionTrace(E, complex(seed), psi, expo, overflow_at)


class GrowthVerdict(enum.Enum):
    BOUNDED = "bounded"
    DIVERGENT = "divergent"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class GrowthClass:
    verdict: GrowthVerdict
    decay_rate: float


def growth_rates(spec: ModelSpec, E, J: int = DEFAULT_J) -> np.ndarray:
    """Exponential growth rate per site of the recursion at each energy in ``E``.

    The rate is the least-squares slope of ``log ||(psi_j, psi_j+1)||`` over
    the trailing half of a ``J``-site march; using the pair rather than a
    single amplitude avoids the log singularities of oscillating solutions.
    A recursion that hits exactly zero gets rate ``-inf``.
    """
    E = np.asarray(E, dtype=complex)
    shape = E.shape
    E = E.ravel()
    if J < 16:
        raise ValueError("J too small for a rate fit")
    period = 2 if spec.kind in (ModelKind.SSH, ModelKind.GAIN_LOSS) else 1
    diag, upper, lower = site_couplings(spec, 2 * period + 1)
    prev = np.zeros_like(E)
    cur = np.ones_like(E)
    logscale = np.zeros(E.shape)
    start = J // 2
    n = 0
    sx = sy = sxx = sxy = 0.0
    for j in range(1, J):
        p = (j - 1) % period
        back = lower[(j - 2) % period] * prev if j >= 2 else 0.0
        nxt = ((E - diag[p]) * cur - back) / upper[p]
        prev, cur = cur, nxt
        if j % 8 == 0 or j >= start:
            norm = np.sqrt(np.abs(prev) ** 2 + np.abs(cur) ** 2)
            safe = np.where(norm > 0, norm, 1.0)
            prev = prev / safe
            cur = cur / safe
            with np.errstate(divide="ignore"):
                logscale = logscale + np.log(norm)
            if j >= start:
                x = float(j)
                sx += x
                sxx += x * x
                sy = sy + logscale
                sxy = sxy + x * logscale
                n += 1
    denom = n * sxx - sx * sx
    with np.errstate(invalid="ignore"):
        slope = (n * sxy - sx * sy) / denom
    slope = np.where(np.isneginf(logscale), -np.inf, slope)
    return slope.reshape(shape)


def _verdict(rate: float, rate_tol: float) -> GrowthVerdict:
    if rate < -rate_tol:
        return GrowthVerdict.BOUNDED
    if rate > rate_tol:
        return GrowthVerdict.DIVERGENT
    return GrowthVerdict.INDETERMINATE


def classify_growth(spec: ModelSpec, E: complex, J: int = DEFAULT_J, rate_tol: float = RATE_TOL) -> GrowthClass:
    """Bounded, divergent or indeterminate recursion at energy ``E``."""
    rate = float(growth_rates(spec, np.array([E]), J)[0])
    return GrowthClass(_verdict(rate, rate_tol), rate)


@dataclass(frozen=True, eq=False)
class QuasiStationaryState:
    E: complex
    vector: np.ndarray
    boundary_residual: float
    growth: GrowthClass


def quasi_stationary_state(spec: ModelSpec, E: complex, J: int = DEFAULT_J) -> QuasiStationaryState:
    """Normalized recursion solution on the ``N``-site open chain.

    ``boundary_residual`` is ``|psi_N+1| / ||psi||``: the size of the only
    equation of ``H psi = E psi`` that the state violates.

    Raises
    ------
    DivergentEnergyError
        When the recursion grows at ``E``; such a state piles up at the right
        edge instead of nearly satisfying it.
    """
    growth = classify_growth(spec, E, J)
    if growth.verdict is GrowthVerdict.DIVERGENT:
        raise DivergentEnergyError(
            f"E={E} is outside the continuum band (growth rate {growth.decay_rate:.3g} per site)"
        )
    trace = recurse(spec, E, 1.0, spec.N + 1)
    la = trace.log_abs
    ref = np.max(la[1:-1])
    with np.errstate(under="ignore"):
        vec = np.exp(la[1:-1] - ref) * np.exp(1j * np.angle(trace.psi[1:-1]))
        edge = np.exp(la[-1] - ref)
    norm = np.linalg.norm(vec)
    return QuasiStationaryState(complex(E), vec / norm, float(edge / norm), growth)


# --------------------------------------------------------------------------
# PBC loops and winding membership
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LoopSet:
    """Closed PBC loops, each an ordered vertex array (closing edge implicit).

    ``flagged`` marks band touchings along the k grid, where the band
    ordering used to build the loops is ambiguous.
    """

    loops: list
    flagged: bool = False

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate(self.loops)


def pbc_loop_polygon(spec: ModelSpec, num_k: int = 2048) -> LoopSet:
    """Ordered PBC spectrum loop(s) in the complex energy plane.

    Two-band models are band-tracked by continuity in ``k``; when the bands
    exchange over one period they form a single loop traced over
    ``k in [0, 4 pi)``, otherwise two separate loops.
    """
    if num_k < 64:
        raise ValueError("num_k must be at least 64")
    spec = spec.with_(bc=Boundary.PBC, N=max(spec.N + spec.N % 2, 2))
    k = 2 * np.pi * np.arange(num_k + 1) / num_k
    if spec.kind is ModelKind.HATANO_NELSON:
        E = np.exp(1j * k[:-1]) + spec.gamma * np.exp(-1j * k[:-1])
        return LoopSet([E])

    M = bloch_matrix(spec, k)
    a, b, c, d = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
    half = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    raw = np.stack([half + disc, half - disc], axis=1)
    bands = np.empty_like(raw)
    bands[0] = raw[0]
    scale = max(1.0, np.max(np.abs(raw)))
    flagged = False
    for m in range(1, num_k + 1):
        keep = np.abs(raw[m] - bands[m - 1]).sum()
        swap = np.abs(raw[m, ::-1] - bands[m - 1]).sum()
        bands[m] = raw[m] if keep <= swap else raw[m, ::-1]
        if abs(raw[m, 0] - raw[m, 1]) < 1e-8 * scale:
            flagged = True
    if abs(raw[0, 0] - raw[0, 1]) < 1e-8 * scale:
        flagged = True
    end = bands[num_k]
    start = bands[0]
    exchanged = abs(end[0] - start[1]) + abs(end[1] - start[0]) < abs(end[0] - start[0]) + abs(end[1] - start[1])
    if exchanged:
        loops = [np.concatenate([bands[:-1, 0], bands[:-1, 1]])]
    else:
        loops = [bands[:-1, 0].copy(), bands[:-1, 1].copy()]
    return LoopSet(loops, flagged)


class WindingVerdict(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    NEAR_BOUNDARY = "near_boundary"


_WINDING = np.array(list(WindingVerdict), dtype=object)


def _segment_distance(P, a, b):
    ab = b - a
    L2 = np.abs(ab) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(L2 > 0, ((P - a) * np.conj(ab)).real / L2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(P - (a + t * ab))


def _winding(P, a, b):
    """Winding number of the closed polygon with edges ``a -> b`` around each ``P``."""
    px, py = P.real, P.imag
    ax, ay, bx, by = a.real, a.imag, b.real, b.imag
    is_left = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
    up = (ay <= py) & (by > py) & (is_left > 0)
    down = (ay > py) & (by <= py) & (is_left < 0)
    return up.sum(axis=-1) - down.sum(axis=-1)


def winding_membership(loops, E, guard: float = NEAR_BOUNDARY_GUARD, chunk: int = 256):
    """Inside/outside test of energies against closed loops.

    A point closer than ``guard`` to any edge is ``NEAR_BOUNDARY``; otherwise
    it is ``INSIDE`` when the total winding number of all loops around it is
    nonzero. Loops with (numerically) zero area, such as the doubly traversed
    Hermitian segment, only ever produce ``NEAR_BOUNDARY`` or ``OUTSIDE``.

    ``loops`` may be a :class:`LoopSet`, one vertex array or a list of them.
    """
    if isinstance(loops, LoopSet):
        loops = loops.loops
    elif isinstance(loops, np.ndarray) and loops.ndim == 1:
        loops = [loops]
    E = np.asarray(E, dtype=complex)
    shape = E.shape
    pts = E.ravel()
    edges_a, edges_b, solid = [], [], []
    for v in loops:
        v = np.asarray(v, dtype=complex)
        if len(v) < 3:
            raise ValueError("a loop needs at least 3 vertices")
        w = np.roll(v, -1)
        area = 0.5 * np.sum(v.real * w.imag - w.real * v.imag)
        perim = np.sum(np.abs(w - v))
        edges_a.append(v)
        edges_b.append(w)
        solid.append(np.full(len(v), abs(area) > guard * perim))
    a = np.concatenate(edges_a)
    b = np.concatenate(edges_b)
    solid = np.concatenate(solid)
    out = np.empty(pts.shape, dtype=object)
    for s in range(0, len(pts), chunk):
        P = pts[s:s + chunk, None]
        near = (_segment_distance(P, a[None, :], b[None, :]) < guard).any(axis=1)
        wind = _winding(P, a[None, solid], b[None, solid]) if solid.any() else np.zeros(len(P), int)
        out[s:s + chunk] = _WINDING[np.where(near, 2, np.where(wind != 0, 0, 1))]
    return out.reshape(shape) if shape else out[0]


@dataclass(frozen=True, eq=False)
class BandScan:
    """Growth and winding verdicts on a rectangular grid of energies.

    Arrays have shape ``(ny, nx)``; row ``i`` is ``Im E = im[i]``.
    """

    spec: ModelSpec
    re: np.ndarray
    im: np.ndarray
    rate: np.ndarray
    growth: np.ndarray
    winding: np.ndarray
    loops: LoopSet

    @property
    def energies(self) -> np.ndarray:
        return self.re[None, :] + 1j * self.im[:, None]

    def agreement(self) -> float:
        """Fraction of points off the boundary ring where both verdicts coincide."""
        mask = self.winding != WindingVerdict.NEAR_BOUNDARY
        same = (self.growth == GrowthVerdict.BOUNDED) == (self.winding == WindingVerdict.INSIDE)
        same &= self.growth != GrowthVerdict.INDETERMINATE
        return float(same[mask].mean())

    def rows(self):
        """``(re_E, im_E, growth_verdict, winding_verdict, decay_rate)`` in grid order."""
        for i, y in enumerate(self.im):
            for k, x in enumerate(self.re):
                yield (float(x), float(y), self.growth[i, k].value, self.winding[i, k].value, float(self.rate[i, k]))


def band_scan(
    spec: ModelSpec,
    window: tuple[float, float, float, float],
    resolution: int | tuple[int, int] = 101,
    J: int = DEFAULT_J,
    num_k: int = 2048,
    rate_tol: float = RATE_TOL,
    guard: float = NEAR_BOUNDARY_GUARD,
) -> BandScan:
    """Classify every point of an energy grid by recursion growth and by PBC winding.

    Parameters
    ----------
    window : (re_min, re_max, im_min, im_max)
    resolution : int or (nx, ny)
        Grid points per axis, endpoints included.
    """
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    re_min, re_max, im_min, im_max = window
    re = np.linspace(re_min, re_max, nx)
    im = np.linspace(im_min, im_max, ny)
    E = re[None, :] + 1j * im[:, None]
    rate = growth_rates(spec, E, J)
    growth = np.empty(E.shape, dtype=object)
    growth[rate < -rate_tol] = GrowthVerdict.BOUNDED
    growth[rate > rate_tol] = GrowthVerdict.DIVERGENT
    growth[np.abs(rate) <= rate_tol] = GrowthVerdict.INDETERMINATE
    loops = pbc_loop_polygon(spec, num_k)
    winding = winding_membership(loops, E, guard)
    return BandScan(spec, re, im, rate, growth, winding, loops)
