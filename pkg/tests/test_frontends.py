import numpy as np
import pytest

from finstab import (NOT_NILPOTENT, ControllerSpec, FrontendSpec, HybridState,
                     ModelError, beam_model, build_frontend, check_H1, heat_field_on_grid,
                     heat_model, hybrid_decay_check, hybrid_norm, hybrid_split_check,
                     hybrid_v, quasi_contraction_type, rank_one_controller,
                     simulate_hybrid, transport_heat_model, transport_step,
                     validate_rank_one_data, wave_model)

PI2 = 9.869604401089358  # pi^2


def test_heat_modes_and_decomposition():
    bundle = heat_model(FrontendSpec(kind="Heat1D", n_modes=4))
    A = bundle.model.generator
    assert np.diag(A) == pytest.approx([-PI2, -39.47841760435743,
                                        -88.82643960980423, -157.91367041742973],
                                       rel=1e-15)
    B = bundle.model.control_op
    assert B[0, 0] == 0.0
    assert np.array_equal(B[1:, 1:], np.eye(3))
    assert bundle.w_axes == (0,)
    assert bundle.dec.gamma == 1.0
    assert bundle.dec.delta is NOT_NILPOTENT
    assert bundle.model.basis_labels[:2] == ("mode1", "mode2")
    assert check_H1(bundle.model, bundle.dec).passed


def test_heat_rejects_degenerate_sizes():
    with pytest.raises(ModelError):
        heat_model(FrontendSpec(kind="Heat1D", n_modes=1))
    with pytest.raises(ModelError):
        FrontendSpec(kind="Heat1D", n_modes=0)
    with pytest.raises(ModelError):
        FrontendSpec(kind="Lattice")


def test_wave_structure():
    bundle = wave_model(FrontendSpec(kind="Wave1D", n_modes=3, q=2))
    model = bundle.model
    assert model.dim == 6
    A = model.generator
    assert A[0, 3] == pytest.approx(np.pi, rel=1e-15)
    assert A[3, 0] == pytest.approx(-np.pi, rel=1e-15)
    assert A[2, 5] == pytest.approx(3.0 * np.pi, rel=1e-15)
    # damping on the first q velocities only
    assert np.array_equal(np.diag(model.control_op),
                          [0.0, 0.0, 0.0, 1.0, 1.0, 0.0])
    assert bundle.w_axes == (2, 5)
    assert bundle.dec.delta is NOT_NILPOTENT
    assert bundle.phi.kind == "WaveK" and bundle.phi.cap == 1e3
    assert bundle.phi.q == 2 and bundle.phi.half == 3
    assert abs(quasi_contraction_type(model)) < 1e-12  # skew generator
    assert model.basis_labels[2] == "pos3" and model.basis_labels[5] == "vel3"


def test_wave_fully_damped_is_nilpotent_free():
    bundle = wave_model(FrontendSpec(kind="Wave1D", n_modes=2, q=2))
    assert bundle.dec.dim_w == 0
    assert bundle.dec.delta == 0.0
    with pytest.raises(ModelError):
        wave_model(FrontendSpec(kind="Wave1D", n_modes=2, q=3))
    with pytest.raises(ModelError):
        wave_model(FrontendSpec(kind="Wave1D", n_modes=2, q=0))


def test_beam_structure_and_rank_one_data():
    bundle = beam_model(FrontendSpec(kind="Beam1D", n_modes=3, h_coeffs=(1.0,)))
    model = bundle.model
    assert model.dim == 6
    assert model.generator[0, 3] == pytest.approx(PI2, rel=1e-15)
    assert model.generator[1, 4] == pytest.approx(4.0 * PI2, rel=1e-15)
    assert np.array_equal(model.input_map[:, 0], [0, 0, 0, 1, 0, 0])
    # only the driven pair (pos1, vel1) is observable
    assert bundle.w_axes == (1, 2, 4, 5)
    assert bundle.dec.gamma == 1.0
    spec = rank_one_controller(bundle, mu=0.25)
    validate_rank_one_data(spec, model)
    assert np.array_equal(spec.zeta, model.input_map[:, 0])


def test_beam_profile_support_drives_gamma_and_w():
    bundle = beam_model(FrontendSpec(kind="Beam1D", n_modes=3, h_coeffs=(1.0, 2.0)))
    assert bundle.dec.gamma == pytest.approx(5.0, rel=1e-15)
    assert bundle.w_axes == (2, 5)
    full = beam_model(FrontendSpec(kind="Beam1D", n_modes=2, h_coeffs=(1.0, 1.0)))
    assert full.dec.dim_w == 0
    assert full.dec.delta == 0.0


def test_beam_rejects_bad_profiles():
    with pytest.raises(ModelError):
        beam_model(FrontendSpec(kind="Beam1D", n_modes=2, h_coeffs=(0.0, 0.0)))
    with pytest.raises(ModelError):
        beam_model(FrontendSpec(kind="Beam1D", n_modes=2, h_coeffs=(1.0, 1.0, 1.0)))


def test_build_frontend_dispatch():
    bundle = build_frontend(FrontendSpec(kind="Heat1D", n_modes=3))
    assert bundle.model.dim == 3
    hybrid = build_frontend(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                         grid_n=16, omega_h=0.25))
    assert hybrid.grid_n == 16


def test_transport_model_geometry():
    model = transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                              grid_n=64, omega_h=0.25))
    assert model.n_omega == 16
    assert model.dt_macro == pytest.approx(1.0 / 64.0, rel=1e-15)
    assert model.n_heat == 16
    assert model.delta == 1.0
    assert model.eigenvalues[0, 0] == 0.0
    assert model.eigenvalues[1, 2] == pytest.approx(-5.0 * PI2, rel=1e-14)


def test_transport_model_rejects_misaligned_patch():
    with pytest.raises(ModelError):
        transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                          grid_n=64, omega_h=0.3))
    with pytest.raises(ModelError):
        transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                          grid_n=0, omega_h=0.25))
    with pytest.raises(ModelError):
        transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                          grid_n=16, omega_h=1.5))


def test_transport_step_is_an_exact_shift():
    psi = np.zeros((8, 8))
    psi[3, 5] = 2.5
    out = transport_step(psi, 0.0, 1.0 / 8.0, 8, 0.25)
    assert out[4, 6] == 2.5
    assert np.sum(out != 0.0) == 1
    # mass on the outflow edge leaves the domain
    edge = np.zeros((8, 8))
    edge[7, 7] = 1.0
    assert np.all(transport_step(edge, 0.0, 1.0 / 8.0, 8, 0.25) == 0.0)


def test_transport_step_damps_only_inside_the_patch():
    psi = np.ones((4, 4))
    out = transport_step(psi, -1.0, 0.25, 4, 0.5)  # patch is 2 cells wide
    assert out[1, 1] == pytest.approx(0.7788007830714049, rel=1e-15)  # e^{-1/4}
    assert out[1, 2] == 1.0 and out[2, 1] == 1.0 and out[3, 3] == 1.0
    assert np.all(out[0, :] == 0.0) and np.all(out[:, 0] == 0.0)
    with pytest.raises(ModelError):
        transport_step(psi, 0.0, 0.3, 4, 0.5)


def test_transport_free_flow_exits_in_exactly_n_steps():
    G = 6
    psi = np.ones((G, G))
    for step in range(G):
        assert np.any(psi != 0.0)
        psi = transport_step(psi, 0.0, 1.0 / G, G, 0.5)
    assert np.all(psi == 0.0)


def test_hybrid_energy_and_norm():
    model = transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=2,
                                              grid_n=4, omega_h=0.5))
    c = np.array([[1.0, 0.0], [0.0, 2.0]])
    psi = np.zeros((4, 4))
    psi[1, 1] = 3.0   # inside the 2-cell patch
    psi[3, 3] = 4.0   # outside
    state = HybridState(c=c, psi=psi)
    # V counts heat energy plus the in-patch transport mass only
    assert hybrid_v(model, state) == pytest.approx(5.0 + 9.0 / 16.0, rel=1e-15)
    assert hybrid_norm(model, state) == pytest.approx(np.sqrt(5.0 + 25.0 / 16.0),
                                                      rel=1e-15)


def test_heat_field_reconstruction():
    c = np.zeros((3, 3))
    c[0, 0] = 1.0
    assert np.all(heat_field_on_grid(c, 16) == 1.0)
    # midpoint-sampled cosine basis is orthonormal, so Parseval holds exactly
    rng = np.random.default_rng(2)
    c = rng.standard_normal((6, 6))
    field = heat_field_on_grid(c, 64)
    assert np.sum(field ** 2) / 64 ** 2 == pytest.approx(np.sum(c ** 2), rel=1e-12)


def hybrid_setup(grid_n=32):
    model = transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                              grid_n=grid_n, omega_h=0.25))
    c = np.zeros((4, 4))
    c[0, 0] = 1.0
    c[1, 1] = 1.0
    psi = np.zeros((grid_n, grid_n))
    psi[grid_n // 2, grid_n // 2] = 1.0  # outside the patch
    return model, HybridState(c=c, psi=psi)


def test_hybrid_settles_and_transport_exits():
    model, y0 = hybrid_setup()
    spec = ControllerSpec(variant="BilinearPhi", mu=0.25)
    traj = simulate_hybrid(model, spec, y0, t_max=3.0)
    # V0 = 2: bound max(V0^mu / (2 mu), delta) = 2^{5/4}
    assert traj.settling_time is not None
    assert traj.settling_time <= 2.378414230005442 + model.dt_macro + 1e-9
    after = traj.times >= model.delta - 1e-12
    assert np.all(traj.psi_norms[after] == 0.0)
    assert hybrid_decay_check(model, traj, spec.mu, spec.dead_zone).passed
    assert hybrid_split_check(model, y0, traj)
    assert np.array_equal(traj.psi_initial, y0.psi)


def test_hybrid_zero_control_keeps_heat_alive():
    model, y0 = hybrid_setup()
    traj = simulate_hybrid(model, ControllerSpec(variant="ZeroControl"), y0, t_max=2.0)
    assert np.all(traj.controls == 0.0)
    assert traj.settling_time is None
    # the constant heat mode is untouched without control
    assert traj.lyapunov[-1] == pytest.approx(1.0, rel=1e-12)
    after = traj.times >= model.delta - 1e-12
    assert np.all(traj.psi_norms[after] == 0.0)
    assert hybrid_split_check(model, y0, traj)
