"""End-to-end acceptance checks, one recorded PASS/FAIL line per criterion."""
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import ndimage
from scipy.linalg import expm

from nhlab import cli
from nhlab.analytic import (
    BandPredicate,
    Membership,
    Morphology,
    ellipse_form,
    gainloss_band_morphology,
    gainloss_form,
    hatano_obc_eigs,
    ssh_zero_mode,
    ssh_zero_mode_domain,
)
from nhlab.dynamics import Verdict, disorder_robustness, evolve
from nhlab.eigen import eigenvalues_qr, match_spectra, obc_spectrum, Method
from nhlab.lattice import DisorderSpec, ModelSpec, apply_disorder, build_hamiltonian
from nhlab.recursion import GrowthVerdict, WindingVerdict, band_scan, recurse


def _predicate_agreement(scan):
    """Growth verdict vs closed-form membership, off the boundary ring."""
    member = BandPredicate.for_spec(scan.spec)(scan.energies)
    mask = scan.winding != WindingVerdict.NEAR_BOUNDARY
    mask &= member != Membership.BOUNDARY
    same = (scan.growth == GrowthVerdict.BOUNDED) == (member == Membership.INTERIOR)
    same &= scan.growth != GrowthVerdict.INDETERMINATE
    return float(same[mask].mean())


def test_01_closed_form_obc_spectrum(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for N in (3, 10, 40, 60):
        for gamma in (0.04, 0.2, 0.5, 1.0):
            sp = obc_spectrum(ModelSpec("hatano", N, gamma))
            assert sp.method is Method.GAUGED_QR
            worst = max(worst, match_spectra(sp.eigenvalues, hatano_obc_eigs(N, gamma)))
    dt = time.perf_counter() - t0
    ok = criterion("1 closed-form OBC spectrum", worst < 1e-8 and dt < 5, f"max dev {worst:.2e}, {dt:.2f}s")
    assert ok


def test_02_hatano_band_map(criterion):
    t0 = time.perf_counter()
    scans = {
        0.0: band_scan(ModelSpec("hatano", 10, 0.0), (-1.5, 1.5, -1.5, 1.5), 101),
        0.6: band_scan(ModelSpec("hatano", 10, 0.6), (-2.0, 2.0, -1.0, 1.0), 101),
    }
    dt = time.perf_counter() - t0
    agree = {g: _predicate_agreement(s) for g, s in scans.items()}
    loop_err = max(
        np.max(np.abs(ellipse_form(s.loops.vertices, g) - 1.0)) for g, s in scans.items()
    )
    # disk of radius one and ellipse with semi-axes (1.6, 0.4)
    v0 = scans[0.0].loops.vertices
    v6 = scans[0.6].loops.vertices
    shape_ok = (
        np.allclose(np.abs(v0), 1.0, atol=1e-12)
        and np.max(v6.real) == pytest.approx(1.6, abs=1e-12)
        and np.max(v6.imag) == pytest.approx(0.4, abs=1e-5)
    )
    ok = min(agree.values()) >= 0.99 and loop_err <= 1e-12 and shape_ok and dt < 30
    criterion("2 band map vs ellipse", ok,
              f"agreement {agree[0.0]:.4f}/{agree[0.6]:.4f}, loop {loop_err:.1e}, {dt:.1f}s")
    assert ok


def test_03_boundary_residuals(criterion):
    spec = ModelSpec("hatano", 100, 0.0)
    a = recurse(spec, 0.5, seed=0.5).boundary
    b = recurse(spec, 0.8, seed=0.8).boundary
    ok = abs(a / 3.9e-31 - 1) <= 0.05 and abs(b / 1.6e-10 - 1) <= 0.05
    criterion("3 boundary residuals", ok, f"{a:.3e}, {b:.3e}")
    assert ok


def test_04_gainloss_band(criterion):
    agree, loop_err, comps = {}, 0.0, {}
    for V0 in (0.0, 0.5, 1.0, 1.5):
        scan = band_scan(ModelSpec("gainloss", 10, 0.0, V0=V0), (-2.0, 2.0, -2.0, 2.0), 101)
        agree[V0] = _predicate_agreement(scan)
        loop_err = max(loop_err, np.max(np.abs(gainloss_form(scan.loops.vertices, V0) - 1.0)))
        comps[V0] = ndimage.label(scan.growth == GrowthVerdict.BOUNDED)[1]
    morph = [gainloss_band_morphology(v) for v in (0.5, 1.0, 1.5)]
    ok = (
        min(agree.values()) >= 0.99
        and morph == [Morphology.SINGLE_LOBE, Morphology.PINCHED, Morphology.TWO_LOBES]
        and comps[0.5] == 1 and comps[1.5] == 2
        and loop_err <= 1e-10
    )
    criterion("4 gain/loss band", ok,
              f"min agreement {min(agree.values()):.4f}, lobes {comps[0.5]}/{comps[1.5]}, loop {loop_err:.1e}")
    assert ok


def test_05_exceptional_degeneracy(criterion):
    ev = eigenvalues_qr(build_hamiltonian(ModelSpec("gainloss", 6, 0.0, V0=0.5))).eigenvalues
    lower = np.sum(np.abs(ev + 0.5j) < 1e-6)
    upper = np.sum(np.abs(ev - 0.5j) < 1e-6)
    ok = lower == 3 and upper == 3
    criterion("5 exceptional degeneracy", ok, f"multiplicities {lower}/{upper}")
    assert ok


def _exact_zero_mode_check(N, gamma, delta):
    """Residual ratio and amplitude error of the zero mode, residual in exact arithmetic.

    The mode is rebuilt as exact rationals from the float couplings of the
    assembled chain, so ``||H psi|| / ||psi||`` is free of the rounding floor
    (about 1e-17 of the largest amplitude) that would swamp bounds like 1e-40.
    """
    H = build_hamiltonian(ModelSpec("ssh", N, gamma, delta=delta))
    up = [Fraction(float(v.real)) for v in H.upper]
    lo = [Fraction(float(v.real)) for v in H.lower]
    psi = [Fraction(0)] * N
    psi[0] = Fraction(1)
    for j in range(2, N, 2):
        # row j-1: upper[j-1] psi_j + lower[j-2] psi_{j-2} = 0
        psi[j] = -lo[j - 2] * psi[j - 2] / up[j - 1]
    Hpsi = [
        (up[j] * psi[j + 1] if j < N - 1 else 0) + (lo[j - 1] * psi[j - 1] if j > 0 else 0)
        for j in range(N)
    ]
    ratio2 = sum(v * v for v in Hpsi) / sum(v * v for v in psi)
    zm = ssh_zero_mode(N, gamma, delta)
    bound = 10 * Fraction(abs(zm.ratio)) ** (N // 2 - 1)
    a = zm.amplitudes / zm.amplitudes[0]
    exact = np.array([float(v) for v in psi])
    amp_err = np.max(np.abs(a - exact) / np.maximum(np.abs(exact), 1e-300) * (exact != 0))
    return float(ratio2 / (bound * bound)) ** 0.5, float(amp_err)


def test_06_zero_mode_bound(criterion):
    worst = worst_amp = 0.0
    for N in (20, 40):
        for gamma in (0.05, 0.2, 0.5, 0.8):
            lo, _ = ssh_zero_mode_domain(gamma)
            for delta in np.linspace(lo, 0.95, 12)[1:]:
                r, a = _exact_zero_mode_check(N, gamma, float(delta))
                worst, worst_amp = max(worst, r), max(worst_amp, a)
    edge = max(abs(abs(ssh_zero_mode(20, g, ssh_zero_mode_domain(g)[0]).ratio) - 1)
               for g in (0.05, 0.2, 0.5, 0.8))
    ok = worst <= 1.0 and worst_amp <= 1e-12 and edge <= 1e-12
    criterion("6 zero-mode residual bound", ok,
              f"max residual/bound {worst:.3f}, amplitude err {worst_amp:.1e}, edge |r|-1 {edge:.1e}")
    assert ok


def test_07_delta_sweep(criterion):
    t0 = time.perf_counter()
    deltas = cli._delta_grid(-0.99, 0.99, 0.01)
    rows = cli.sweep_delta(0.2, 40, deltas)
    dt = time.perf_counter() - t0
    count = {d: 0 for d in deltas}
    for d, _, re, im, _, _ in rows:
        if abs(complex(re, im)) < 1e-4:
            count[d] += 1
    bad_pos = [d for d in deltas if 0 < d < 1 and count[d] != 2]
    bad_neg = [d for d in deltas if d < 0 and count[d] != 0]
    lo, hi = cli.ssh_zero_mode_domain(0.2)
    window_ok = round(lo, 4) == -0.6667
    ok = not bad_pos and not bad_neg and window_ok and dt < 60
    detail = f"window ({lo:.4f}, 0), {dt:.1f}s"
    if bad_pos:
        detail += f", delta>0 without two |E|<1e-4: {bad_pos[0]:.2f}..{bad_pos[-1]:.2f} ({len(bad_pos)} values)"
    if bad_neg:
        detail += f", delta<0 with zero modes: {len(bad_neg)} values"
    criterion("7 delta sweep", ok, detail)
    assert ok


def test_08_lifetime(criterion):
    spec = ModelSpec("ssh", 40, 0.2, delta=-0.4)
    psi0 = ssh_zero_mode(40, 0.2, -0.4).amplitudes
    res = evolve(build_hamiltonian(spec), psi0, 60.0, tol=1e-10, dt_out=0.05, eps_life=0.01, store_states=False)
    ok = res.lifetime is not None and 10 <= res.lifetime <= 50
    criterion("8 lifetime", ok, f"tau = {res.lifetime}")
    assert ok


def test_09_robustness(criterion):
    t0 = time.perf_counter()
    d = DisorderSpec(0.05, 0.05, seed=7, realizations=100)
    topo = disorder_robustness(ModelSpec("ssh", 40, 0.2, delta=0.4), d)
    quasi = disorder_robustness(ModelSpec("ssh", 40, 0.2, delta=-0.4), d)
    dt = time.perf_counter() - t0
    frac = float(np.mean(quasi.survival_overlap >= 0.9))
    ok = topo.zero_energy_spread < 1e-2 and frac >= 0.95 and dt < 120
    ok = ok and topo.verdict is Verdict.ROBUST and quasi.verdict is Verdict.ROBUST
    criterion("9 disorder robustness", ok,
              f"spread {topo.zero_energy_spread:.1e}, survival {frac:.2f}, {dt:.1f}s")
    assert ok


def test_10_property_suites(criterion):
    failures = []
    # recursion against the two-root closed form
    gamma = 0.3
    for E in (0.2, 0.9 + 0.4j, -1.7j):
        tr = recurse(ModelSpec("hatano", 40, gamma), E, J=40)
        root = np.sqrt(E * E - 4 * gamma + 0j)
        dp, dm = (E + root) / 2, (E - root) / 2
        j = np.arange(41)
        closed = (dp**j - dm**j) / (dp - dm)
        if not np.allclose(tr.amplitudes, closed, rtol=1e-10, atol=1e-10 * np.abs(closed).max()):
            failures.append("recursion")
    # gauged and raw spectra agree
    for spec in (ModelSpec("ssh", 30, 0.4, delta=0.3), ModelSpec("gainloss", 20, 0.5, V0=0.3)):
        g = obc_spectrum(spec).eigenvalues
        q = eigenvalues_qr(build_hamiltonian(spec)).eigenvalues
        if match_spectra(g, q) > 1e-8:
            failures.append(f"gauge {spec.kind.value}")
    # fifth-order convergence
    H = build_hamiltonian(ModelSpec("hatano", 10, 0.5))
    psi0 = np.eye(10)[2].astype(complex)
    ref = expm(-2j * H.to_dense()) @ psi0
    err = [np.linalg.norm(evolve(H, psi0, 2.0, dt_out=2.0, fixed_step=h).state() - ref) for h in (0.1, 0.05)]
    if not 4.6 < np.log2(err[0] / err[1]) < 5.6:
        failures.append("order")
    # disorder streams reproducible
    spec = ModelSpec("ssh", 20, 0.2, delta=0.3)
    d = DisorderSpec(0.1, 0.1, seed=5, realizations=4)
    a = [apply_disorder(spec, d, r) for r in (3, 0, 2)]
    b = [apply_disorder(spec, d, r) for r in (0, 2, 3)]
    if not (a[0].same_as(b[2]) and a[1].same_as(b[0]) and not a[1].same_as(a[2])):
        failures.append("disorder determinism")
    ok = not failures
    criterion("10 property suites", ok, "all hold" if ok else ", ".join(failures))
    assert ok
