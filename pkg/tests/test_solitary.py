import numpy as np
import pytest
from hypothesis import given, strategies as st

from bfdwaves.errors import ConvergenceError, DegenerateIterateError, SingularModeError
from bfdwaves.params import reduced_parameters
from bfdwaves.solitary import (ModeMatrices, ProfileSolveConfig, mode_matrix, mpe_accelerate,
                               nonlinear_image, petviashvili_step, profile_residual, sech2_guess,
                               solve_profile)
from bfdwaves.spectral import PeriodicGrid, SymbolSet, WaveState, l_at_zero
from bfdwaves.theory import c_gamma, r_gamma


def oracle_residual(zeta, u, sys, c_s, L):
    """Collocation residual rebuilt from the symbol formulas with numpy.fft.

    Returns the root-mean-square over both equations and all nodes.
    """
    N = zeta.size
    k = 2 * np.pi * np.fft.fftfreq(N, d=2 * L / N)
    g, mu = sys.gamma, sys.mu
    s = np.sqrt(sys.mu2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ct = np.where(k == 0, 0.0, 1.0 / np.tanh(s * np.abs(k)))
        kc = np.where(k == 0, 1.0 / s, np.abs(k) * ct)
        kkc2 = np.where(k == 0, 1.0 / sys.mu2, k * k * ct * ct)
    l = 1 / g - np.sqrt(mu) / g ** 2 * kc - mu / g * sys.a * k * k + mu / g ** 3 * kkc2

    def op(symbol, f):
        return np.fft.ifft(symbol * np.fft.fft(f)).real

    jb = 1 + mu * abs(sys.b) * k * k
    jd = 1 + mu * abs(sys.d) * k * k
    jc = 1 + mu * abs(sys.c) * k * k
    f = sys.epsilon / g
    r1 = -c_s * op(jb, zeta) + op(l, u) - f * zeta * u
    r2 = (1 - g) * op(jc, zeta) - c_s * op(jd, u) - 0.5 * f * u * u
    return np.sqrt(np.mean(r1 ** 2) + np.mean(r2 ** 2))


# -- mode matrices ----------------------------------------------------------------------

def test_mode_matrix_entries(hamiltonian, grid_small):
    s = SymbolSet.build(grid_small, hamiltonian)
    M = mode_matrix(5, s, hamiltonian, 0.3)
    assert M == pytest.approx(np.array([[-0.3 * s.jb[5], s.l[5]], [0.2 * s.jc[5], -0.3 * s.jd[5]]]))


def test_mode_matrix_zero_mode_zero_speed(hamiltonian, grid_small):
    s = SymbolSet.build(grid_small, hamiltonian)
    M = mode_matrix(0, s, hamiltonian, 0.0)
    assert np.linalg.det(M) == pytest.approx(-(1 - hamiltonian.gamma) * l_at_zero(hamiltonian))
    assert np.linalg.det(M) < 0


def test_det_against_speed_limit(hamiltonian, ref_grid):
    s = SymbolSet.build(ref_grid, hamiltonian)
    cg = c_gamma(hamiltonian).c_gamma
    for c_s in (0.05, 0.2, 0.4, 0.99 * cg):
        S = ModeMatrices(s, hamiltonian, c_s)
        want = s.jb ** 2 * (c_s ** 2 - r_gamma(np.abs(ref_grid.ktilde), hamiltonian))
        assert S.det == pytest.approx(want, rel=1e-12, abs=1e-14)
        assert np.all(S.det < 0)


def test_singular_mode_detected(hamiltonian):
    grid = PeriodicGrid(20.0, 64)
    s = SymbolSet.build(grid, hamiltonian)
    c_bad = float(np.sqrt(r_gamma(grid.ktilde[3], hamiltonian)))
    with pytest.raises(SingularModeError) as exc:
        ModeMatrices(s, hamiltonian, c_bad)
    assert abs(exc.value.k) == 3
    with pytest.raises(SingularModeError):
        mode_matrix(3, s, hamiltonian, c_bad)


# -- nonlinear image -------------------------------------------------------------------------

def test_nonlinear_image_zero(hamiltonian, grid_small):
    nz, nu = nonlinear_image(WaveState.zeros(grid_small), hamiltonian)
    assert not np.any(nz) and not np.any(nu)


def test_nonlinear_image_single_harmonic(hamiltonian, grid_small):
    g = grid_small
    c = np.cos(3 * np.pi * g.x / g.L)
    nz, nu = nonlinear_image(WaveState(c, c), hamiltonian)
    f = hamiltonian.epsilon / hamiltonian.gamma
    # cos^2 = (1 + cos 2t) / 2
    assert nz[0] == pytest.approx(0.5 * f)
    assert abs(nz[6]) == pytest.approx(0.25 * f) and abs(nz[-6]) == pytest.approx(0.25 * f)
    assert np.allclose(nu, 0.5 * nz, atol=1e-16)
    mask = np.ones(g.N, bool)
    mask[[0, 6, g.N - 6]] = False
    assert np.max(np.abs(nz[mask])) < 1e-15


@given(st.floats(-3, 3))
def test_nonlinear_image_homogeneous(s):
    sys = reduced_parameters(0.0)[1]
    rng = np.random.default_rng(1)
    st_ = WaveState(rng.normal(size=32), rng.normal(size=32))
    a = nonlinear_image(st_, sys)
    b = nonlinear_image(st_.scaled(s, s), sys)
    assert np.allclose(b[0], s * s * a[0], atol=1e-13) and np.allclose(b[1], s * s * a[1], atol=1e-13)


# -- iteration ---------------------------------------------------------------------------

def test_fixed_point(hamiltonian, wave_small, grid_small):
    s = SymbolSet.build(grid_small, hamiltonian)
    S = ModeMatrices(s, hamiltonian, wave_small.c_s)
    z = wave_small.state
    nxt, m, res = petviashvili_step(z, hamiltonian, S)
    assert res <= 1e-12
    # m - 1 = <S z - N(z), z> / <N(z), z>, bounded by Cauchy-Schwarz
    nz, nu = nonlinear_image(z, hamiltonian)
    den = abs(np.vdot(z.zeta_hat, nz) + np.vdot(z.u_hat, nu))
    norm = np.sqrt(np.sum(np.abs(z.zeta_hat) ** 2) + np.sum(np.abs(z.u_hat) ** 2))
    assert abs(m - 1.0) <= res * norm / den * (1 + 1e-12)
    # the profile is converged to 1e-12 only, so the step moves it by ~|m^2 - 1|
    assert np.max(np.abs(nxt.zeta - wave_small.zeta)) < 1e-10


def test_zero_guess_is_degenerate(hamiltonian, grid_small):
    cfg = ProfileSolveConfig(grid=grid_small, c_s=0.3)
    with pytest.raises(DegenerateIterateError):
        solve_profile(cfg, hamiltonian, initial=WaveState.zeros(grid_small))


def test_non_convergence_carries_history(hamiltonian, grid_small):
    cfg = ProfileSolveConfig(grid=grid_small, c_s=0.05, max_iterations=3, use_mpe=False)
    with pytest.raises(ConvergenceError) as exc:
        solve_profile(cfg, hamiltonian)
    assert len(exc.value.residual_history) == 4


def test_config_validation(grid_small):
    with pytest.raises(ValueError):
        ProfileSolveConfig(grid=grid_small, c_s=0.1, tolerance=0.0)
    with pytest.raises(ValueError):
        ProfileSolveConfig(grid=grid_small, c_s=0.1, mpe_width=1)


# -- minimal polynomial extrapolation ------------------------------------------------------

def test_mpe_stationary():
    v = np.arange(5.0)
    assert np.array_equal(mpe_accelerate([v, v, v, v]), v)


def test_mpe_needs_three():
    with pytest.raises(ValueError):
        mpe_accelerate([np.zeros(3), np.zeros(3)])


@given(st.floats(-0.95, 0.95).filter(lambda a: abs(a) > 0.05), st.integers(0, 1000))
def test_mpe_scalar_geometric(A, seed):
    rng = np.random.default_rng(seed)
    v_star, w = rng.normal(size=20), rng.normal(size=20)
    window = [v_star + A ** n * w for n in range(8)]
    assert np.max(np.abs(mpe_accelerate(window) - v_star)) < 1e-10 * (1 + np.max(np.abs(v_star)))


def test_mpe_diagonal_geometric(rng):
    # minimal polynomial of degree 4 fits inside a 6-wide cycle
    lam = np.repeat([0.9, -0.5, 0.3, 0.7], 5)
    v_star, w = rng.normal(size=20), rng.normal(size=20)
    window = [v_star + lam ** n * w for n in range(8)]
    assert np.max(np.abs(mpe_accelerate(window) - v_star)) < 1e-8


# -- full solves ---------------------------------------------------------------------------

def test_flagship_run(hamiltonian, ref_wave, ref_grid):
    w = ref_wave(0.05)
    assert w.iterations <= 60
    assert w.residual <= 1e-12
    assert oracle_residual(w.zeta, w.u, hamiltonian, 0.05, ref_grid.L) <= 1e-11
    plain = solve_profile(ProfileSolveConfig(grid=ref_grid, c_s=0.05, use_mpe=False), hamiltonian)
    assert w.iterations <= plain.iterations
    assert np.max(np.abs(plain.zeta - w.zeta)) < 1e-9


def test_oscillatory_tails(ref_wave, ref_grid):
    w = ref_wave(0.05)
    tail = (np.abs(ref_grid.x) > 15) & (np.abs(ref_grid.x) < 60)
    assert np.any(w.zeta[tail] < -1e-8) and np.any(w.zeta[tail] > 1e-8)


@pytest.mark.parametrize("c_s,amp", [(0.1, 0.982658), (0.2, 0.709789)])
def test_reference_amplitudes(ref_wave, c_s, amp):
    assert ref_wave(c_s).amplitude_zeta == pytest.approx(amp, abs=1e-6)


def test_amplitude_decreases_with_speed(ref_wave):
    amps = [ref_wave(c).amplitude_zeta for c in (0.05, 0.2, 0.3, 0.4, 0.42)]
    assert all(a > b for a, b in zip(amps, amps[1:]))
    assert all(a > 0 for a in amps)


def test_non_hamiltonian_converges(ref_grid):
    sys = reduced_parameters(2.0)[1]
    w = solve_profile(ProfileSolveConfig(grid=ref_grid, c_s=0.4), sys)
    assert w.residual <= 1e-12
    assert oracle_residual(w.zeta, w.u, sys, 0.4, ref_grid.L) <= 1e-11


def test_even_symmetry(ref_wave, ref_grid):
    w = ref_wave(0.2)
    mirror = ref_grid.mirror_index()  # x -> -x
    assert np.max(np.abs(w.zeta[mirror] - w.zeta)) < 1e-8
    assert np.max(np.abs(w.u[mirror] - w.u)) < 1e-8
    assert np.argmax(w.zeta) == ref_grid.N // 2


def test_translation_covariance(hamiltonian, ref_grid, ref_wave):
    base = ref_wave(0.2)
    cfg = ProfileSolveConfig(grid=ref_grid, c_s=0.2, guess_center=ref_grid.h)
    shifted = solve_profile(cfg, hamiltonian)
    assert np.max(np.abs(shifted.zeta - base.zeta)) < 1e-8
    assert np.max(np.abs(shifted.u - base.u)) < 1e-8


def test_left_mover_flips_velocity(hamiltonian, grid_small, wave_small):
    left = solve_profile(ProfileSolveConfig(grid=grid_small, c_s=-wave_small.c_s), hamiltonian)
    assert np.max(np.abs(left.zeta - wave_small.zeta)) < 1e-9
    assert np.max(np.abs(left.u + wave_small.u)) < 1e-9
    assert left.amplitude_u < 0


def test_profile_residual_matches_solver(hamiltonian, wave_small, grid_small):
    s = SymbolSet.build(grid_small, hamiltonian)
    r = profile_residual(wave_small.state, s, hamiltonian, wave_small.c_s)
    assert r <= 1e-12
    assert r == pytest.approx(oracle_residual(wave_small.zeta, wave_small.u, hamiltonian,
                                              wave_small.c_s, grid_small.L), abs=1e-14)


def test_sech2_guess_periodic(grid_small):
    g = sech2_guess(grid_small, 1.0, 0.3, center=grid_small.L - 1.0)
    assert g.max() == pytest.approx(1.0, abs=1e-2)
    assert g[0] > 0.5  # wraps across the boundary


def test_summary(wave_small):
    d = wave_small.summary()
    assert d["iterations"] == wave_small.iterations
    assert d["residual_history"][-1] == wave_small.residual
