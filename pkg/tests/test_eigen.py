import numpy as np
import pytest
import scipy.linalg

from nhlab.analytic import ellipse_membership, hatano_obc_eigs, Membership
from nhlab.eigen import (
    ConvergenceError,
    GaugeUndefinedError,
    Method,
    eigenvalues_qr,
    gauge_transform,
    hessenberg,
    match_spectra,
    obc_spectrum,
    pbc_spectrum,
)
from nhlab.lattice import DisorderSpec, ModelSpec, apply_disorder, build_hamiltonian
from nhlab.recursion import WindingVerdict, pbc_loop_polygon, winding_membership


def chain_charpoly_roots(n, t=1.0):
    """Roots of det(E - H) for the uniform chain via the three-term determinant recurrence."""
    P = np.polynomial.Polynomial
    prev, cur = P([1.0]), P([0.0, 1.0])
    for _ in range(n - 1):
        prev, cur = cur, P([0.0, 1.0]) * cur - t * t * prev
    return cur.roots()


def test_qr_diagonal():
    sp = eigenvalues_qr(np.diag([-0.5j, 0.5j]))
    assert match_spectra(sp.eigenvalues, [-0.5j, 0.5j]) == 0
    assert sp.method is Method.QR


def test_qr_hatano_small():
    sp = eigenvalues_qr(build_hamiltonian(ModelSpec("hatano", 3, 0.25)))
    assert match_spectra(sp.eigenvalues, [-np.sqrt(0.5), 0, np.sqrt(0.5)]) < 1e-10


def test_qr_hermitian_chain():
    sp = eigenvalues_qr(build_hamiltonian(ModelSpec("hatano", 8, 1.0)), verify=True)
    assert np.max(np.abs(sp.eigenvalues.imag)) < 1e-10
    assert match_spectra(sp.eigenvalues, chain_charpoly_roots(8)) < 1e-10
    assert match_spectra(sp.eigenvalues, 2 * np.cos(np.arange(1, 9) * np.pi / 9)) < 1e-10
    assert sp.max_residual < 1e-12


@pytest.mark.parametrize("n,seed", [(2, 0), (7, 1), (25, 2), (60, 3)])
def test_qr_random_complex(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    sp = eigenvalues_qr(A, verify=True)
    assert match_spectra(sp.eigenvalues, scipy.linalg.eigvals(A)) < 1e-9
    assert sp.max_residual < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_qr_random_hermitian_is_real(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
    A = A + A.conj().T
    assert np.max(np.abs(eigenvalues_qr(A).eigenvalues.imag)) < 1e-10


def test_qr_is_deterministic():
    H = build_hamiltonian(ModelSpec("ssh", 12, 0.3, delta=-0.2))
    a, b = eigenvalues_qr(H).eigenvalues, eigenvalues_qr(H).eigenvalues
    np.testing.assert_array_equal(a, b)


def test_qr_iteration_cap():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    with pytest.raises(ConvergenceError):
        eigenvalues_qr(A, max_iter=1)


def test_hessenberg_similar():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    Hs = hessenberg(A)
    assert np.allclose(np.tril(Hs, -2), 0)
    assert match_spectra(scipy.linalg.eigvals(Hs), scipy.linalg.eigvals(A)) < 1e-10


def test_spectrum_sorted():
    ev = obc_spectrum(ModelSpec("gainloss", 10, 0.3, V0=0.4)).eigenvalues
    order = np.lexsort((ev.imag, ev.real))
    np.testing.assert_array_equal(order, np.arange(len(ev)))


def test_gauge_hatano():
    g, G = gauge_transform(build_hamiltonian(ModelSpec("hatano", 10, 0.25)))
    np.testing.assert_allclose(g.symmetrized_offdiag, 0.5)
    np.testing.assert_allclose(G.upper, G.lower)


def test_gauge_identity_at_gamma_one():
    H = build_hamiltonian(ModelSpec("hatano", 10, 1.0))
    g, G = gauge_transform(H)
    np.testing.assert_allclose(g.scale, 1.0)
    assert G.same_as(H)


def test_gauge_ssh():
    H = build_hamiltonian(ModelSpec("ssh", 12, 0.2, delta=0.5))
    g, G = gauge_transform(H)
    np.testing.assert_allclose(g.symmetrized_offdiag[:2], [np.sqrt(0.5 * 0.1), np.sqrt(1.5 * 0.3)])
    assert match_spectra(eigenvalues_qr(H).eigenvalues, eigenvalues_qr(G).eigenvalues) < 1e-8


def test_gauge_is_a_similarity():
    H = build_hamiltonian(ModelSpec("gainloss", 12, 0.35, V0=0.6))
    g, G = gauge_transform(H)
    S = np.diag(g.scale)
    np.testing.assert_allclose(np.linalg.solve(S, H.to_dense() @ S), G.to_dense(), atol=1e-12)
    v = np.random.default_rng(0).normal(size=12) + 0j
    np.testing.assert_allclose(g.from_gauged(g.to_gauged(v)), v, rtol=1e-14)


def test_gauge_errors():
    with pytest.raises(GaugeUndefinedError, match="exceptional"):
        gauge_transform(build_hamiltonian(ModelSpec("hatano", 6, 0.0)))
    with pytest.raises(GaugeUndefinedError):
        gauge_transform(build_hamiltonian(ModelSpec("hatano", 6, 0.5, bc="pbc")))


@pytest.mark.parametrize("spec", [
    ModelSpec("hatano", 12, 0.3),
    ModelSpec("hatano", 7, 0.9),
    ModelSpec("gainloss", 12, 0.5, V0=0.4),
    ModelSpec("ssh", 12, 0.4, delta=-0.3),
    ModelSpec("ssh", 10, 0.7, delta=0.6),
])
def test_gauged_matches_ungauged(spec):
    gauged = obc_spectrum(spec)
    assert gauged.method is Method.GAUGED_QR
    raw = eigenvalues_qr(build_hamiltonian(spec))
    assert match_spectra(gauged.eigenvalues, raw.eigenvalues) < 1e-8


@pytest.mark.parametrize("gamma", [0.1, 0.2, 0.5, 0.9, 1.0])
def test_obc_hatano_equals_closed_form(gamma):
    for N in range(2, 61):
        sp = obc_spectrum(ModelSpec("hatano", N, gamma))
        assert match_spectra(sp.eigenvalues, hatano_obc_eigs(N, gamma)) < 1e-8, N


def test_obc_hatano_n40():
    sp = obc_spectrum(ModelSpec("hatano", 40, 0.2))
    assert np.max(np.abs(sp.eigenvalues.imag)) == 0
    assert match_spectra(sp.eigenvalues, 2 * np.sqrt(0.2) * np.cos(np.arange(1, 41) * np.pi / 41)) < 1e-8
    assert sp.conditioning_note is not None


def test_obc_exceptional_gainloss():
    sp = obc_spectrum(ModelSpec("gainloss", 4, 0.0, V0=1.0))
    assert sp.method is Method.ANALYTIC
    assert match_spectra(sp.eigenvalues, [-1j, -1j, 1j, 1j]) < 1e-14


def test_obc_ssh_topological_pair():
    sp = obc_spectrum(ModelSpec("ssh", 40, 0.2, delta=0.5))
    assert np.sum(np.abs(sp.eigenvalues) < 1e-6) == 2


def test_obc_disordered_falls_back():
    # forward amplitudes this close to zero can change sign under disorder
    spec = ModelSpec("ssh", 20, 0.2, delta=0.98)
    d = DisorderSpec(0.05, 0.0, seed=1, realizations=50)
    from nhlab.eigen import hamiltonian_spectrum

    methods = {hamiltonian_spectrum(apply_disorder(spec, d, r)).method for r in range(50)}
    assert Method.QR in methods


def test_obc_verify_residual():
    sp = obc_spectrum(ModelSpec("ssh", 20, 0.3, delta=0.2), verify=True)
    assert sp.max_residual < 1e-12


def test_pbc_hatano_points():
    sp = pbc_spectrum(ModelSpec("hatano", 4, 0.6), num_k=8)
    assert sp.method is Method.BLOCH
    assert abs(sp.eigenvalues[0] - 1.6) < 1e-15
    assert abs(sp.eigenvalues[2] - 0.4j) < 1e-15


def test_pbc_hermitian_real():
    ev = pbc_spectrum(ModelSpec("hatano", 4, 1.0), 64).eigenvalues
    assert np.max(np.abs(ev.imag)) < 1e-15 and np.max(np.abs(ev.real)) <= 2


def test_pbc_gainloss_quartic():
    ev = pbc_spectrum(ModelSpec("gainloss", 4, 0.0, V0=0.5), 256).eigenvalues
    x, y = ev.real, ev.imag
    assert len(ev) == 512
    np.testing.assert_allclose(4 * x**2 * y**2 + (x**2 - y**2 + 0.25) ** 2, 1.0, atol=1e-10)


@pytest.mark.parametrize("kind,kw", [("gainloss", {"gamma": 0.3, "V0": 0.5}), ("ssh", {"gamma": 0.3, "delta": 0.4})])
def test_pbc_bloch_matches_finite_ring(kind, kw):
    spec = ModelSpec(kind, 16, bc="pbc", **kw)
    ring = scipy.linalg.eigvals(build_hamiltonian(spec).to_dense())
    assert match_spectra(pbc_spectrum(spec, 8).eigenvalues, ring) < 1e-10


@pytest.mark.parametrize("gamma", [0.05, 0.3, 0.6, 0.95])
@pytest.mark.parametrize("N", [5, 20, 41])
def test_obc_inside_pbc_loop(gamma, N):
    ev = obc_spectrum(ModelSpec("hatano", N, gamma)).eigenvalues
    loop = pbc_loop_polygon(ModelSpec("hatano", N, gamma), 1024)
    assert all(v is WindingVerdict.INSIDE for v in winding_membership(loop, ev))
    assert all(m is Membership.INTERIOR for m in ellipse_membership(ev, gamma))


def test_match_spectra_multiset():
    assert match_spectra([1, 1, 2], [1, 2, 2]) == 1.0
    assert match_spectra([1, 2], [1]) == np.inf
