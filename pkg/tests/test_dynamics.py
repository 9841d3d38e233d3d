"""Integrators, the product-form map, and its direct-integration oracles."""

import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_density

from qmme.dynamics import (
    DynamicalMap,
    integrate_mme_direct,
    integrate_schrodinger_direct,
    rk4_path,
    sigma_superop,
)
from qmme.errors import Defective, NoConvergence, NotUnitary, OrderViolation
from qmme.fourier import FourierOperatorSeries
from qmme.linalg import devectorize, trace_norm, vectorize


class TestRk4:
    def test_exponential_decay(self):
        ts = np.linspace(0.0, 2.0, 21)
        path = rk4_path(lambda t, y: -y, np.array([1.0 + 0j]), ts, tol=1e-10, norm=np.linalg.norm)
        assert np.allclose(path[:, 0], np.exp(-ts), atol=1e-9)

    def test_cubic_exact(self):
        # the classical scheme integrates t-polynomials up to degree 3 exactly
        ts = np.linspace(0.0, 3.0, 7)
        path = rk4_path(lambda t, y: np.array([3.0 * t * t]), np.array([0.0 + 0j]), ts,
                        norm=np.linalg.norm)
        assert np.allclose(path[:, 0], ts**3, atol=1e-11)

    def test_rotation_norm_preserved(self):
        ts = np.linspace(0.0, 2.0 * math.pi, 40)
        path = rk4_path(lambda t, y: 1j * y, np.array([1.0 + 0j]), ts, tol=1e-10,
                        norm=np.linalg.norm)
        assert np.allclose(np.abs(path[:, 0]), 1.0, atol=1e-9)

    def test_no_convergence(self):
        with pytest.raises(NoConvergence):
            rk4_path(lambda t, y: -y, np.array([1.0 + 0j]), [0.0, 1.0], tol=1e-8,
                     norm=np.linalg.norm, max_refinements=0)
        with pytest.raises(NoConvergence):
            rk4_path(lambda t, y: -y, np.array([1.0 + 0j]), [0.0, 1.0], tol=1e-30,
                     norm=np.linalg.norm, max_refinements=3)

    def test_descending_times_rejected(self):
        with pytest.raises(OrderViolation):
            rk4_path(lambda t, y: -y, np.array([1.0 + 0j]), [0.0, 2.0, 1.0],
                     norm=np.linalg.norm)

    def test_single_node(self):
        path = rk4_path(lambda t, y: -y, np.array([1.0 + 0j]), [0.0], norm=np.linalg.norm)
        assert path.shape == (1, 1)
        assert path[0, 0] == 1.0 + 0j

    def test_repeated_node(self):
        ts = [0.0, 1.0, 1.0, 2.0]
        path = rk4_path(lambda t, y: -y, np.array([1.0 + 0j]), ts, tol=1e-10, norm=np.linalg.norm)
        assert path[1, 0] == path[2, 0]


class TestMapBasics:
    def test_identity_at_zero(self, q2):
        _, _, dmap = q2
        eye = np.eye(dmap.dim * dmap.dim)
        assert np.linalg.norm(dmap.at(0.0).matrix - eye, 2) < 1e-12

    def test_negative_time_rejected(self, q1):
        _, _, dmap = q1
        with pytest.raises(OrderViolation):
            dmap.at(-0.5)

    def test_propagator_order(self, q1):
        _, _, dmap = q1
        with pytest.raises(OrderViolation):
            dmap.propagator(1.0, 2.0)

    def test_propagator_identity_on_diagonal(self, q2):
        _, _, dmap = q2
        eye = np.eye(dmap.dim * dmap.dim)
        for t in (0.0, 1.7):
            assert np.linalg.norm(dmap.propagator(t, t).matrix - eye, 2) < 1e-11

    def test_propagator_from_origin_is_map(self, q2):
        _, _, dmap = q2
        t = 2.3
        assert np.linalg.norm(dmap.propagator(t, 0.0).matrix - dmap.at(t).matrix, 2) < 1e-11

    def test_composition_law(self, q2):
        _, _, dmap = q2
        a = dmap.propagator(3.1, 1.7).matrix @ dmap.propagator(1.7, 0.4).matrix
        b = dmap.propagator(3.1, 0.4).matrix
        assert np.linalg.norm(a - b, 2) < 1e-11

    def test_frame_conjugation_inverts(self, q3):
        _, _, dmap = q3
        eye = np.eye(9)
        for t in (0.0, 0.9, 4.2):
            prod = (dmap.sigma(t) @ dmap.sigma_inverse(t)).matrix
            assert np.linalg.norm(prod - eye, 2) < 1e-12

    def test_exponential_matches_scipy(self, q3):
        _, bundle, dmap = q3
        for t in (0.4, 2.6):
            direct = scipy.linalg.expm(t * bundle.x.matrix)
            assert np.linalg.norm(dmap.expm_x(t) - direct, 2) < 1e-10

    def test_frame_samples_unitary(self, q2):
        _, _, dmap = q2
        for t in (0.3, 1.1, 5.9):
            p = dmap.p_at(t)
            assert np.linalg.norm(p @ p.conj().T - np.eye(2), 2) < 1e-10

    def test_eigensystem_consistency(self, q3):
        _, bundle, dmap = q3
        w, v, vinv = dmap.eigensystem()
        assert np.linalg.norm(bundle.x.matrix @ v - v * w, 2) < 1e-10
        assert np.linalg.norm(v @ vinv - np.eye(9), 2) < 1e-10

    def test_defective_gate(self, q1):
        model, bundle, _ = q1
        shim = DynamicalMap(model, bundle, cond_threshold=1.0)
        with pytest.raises(Defective):
            shim.eigensystem()
        # the map itself still works through the dense exponential
        assert np.linalg.norm(shim.at(0.7).matrix - DynamicalMap(model, bundle).at(0.7).matrix, 2) < 1e-12

    def test_non_unitary_frame_rejected(self):
        series = FourierOperatorSeries.constant(0.9 * np.eye(2), r=1)
        with pytest.raises(NotUnitary):
            sigma_superop(series, np.array([1.0]), 0.0)


class TestTrajectories:
    def test_trace_and_hermiticity_preserved(self, q2, rng):
        _, _, dmap = q2
        rho0 = random_density(rng, 2)
        states = dmap.evolve(rho0, np.linspace(0.0, 12.0, 60))
        for rho in states:
            assert abs(np.trace(rho) - 1.0) < 1e-12
            assert np.linalg.norm(rho - rho.conj().T) < 1e-12

    def test_dephasing_closed_form(self, q1):
        # populations frozen; coherence decays at 2g and rotates at the
        # level splitting: rho01(t) = exp(-(0.5 + 0.6 i) t) rho01(0)
        _, _, dmap = q1
        rho0 = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
        ts = np.array([0.0, 0.5, 1.0, 3.0])
        states = dmap.evolve(rho0, ts)
        for t, rho in zip(ts, states):
            assert rho[0, 0] == pytest.approx(0.7, abs=1e-13)
            assert rho[1, 1] == pytest.approx(0.3, abs=1e-13)
            expect = (0.2 - 0.1j) * np.exp(-(0.5 + 0.6j) * t)
            assert abs(rho[0, 1] - expect) < 1e-12

    def test_evolve_matches_map_application(self, q2, rng):
        _, _, dmap = q2
        rho0 = random_density(rng, 2)
        ts = np.array([0.0, 0.8, 2.9, 7.3])
        states = dmap.evolve(rho0, ts)
        for t, rho in zip(ts, states):
            assert np.allclose(dmap.at(t).apply(rho0), rho, atol=1e-12)

    def test_negative_time_rejected(self, q1):
        _, _, dmap = q1
        with pytest.raises(OrderViolation):
            dmap.evolve(np.eye(2) / 2, [-1.0, 0.0])

    def test_direct_integration_matches_closed_form(self, q1):
        _, _, dmap = q1
        rho0 = np.array([[0.6, 0.25 + 0.05j], [0.25 - 0.05j, 0.4]])
        ts = np.linspace(0.0, 4.0, 17)
        direct = dmap.integrate_direct(rho0, ts, tol=1e-10)
        product = dmap.evolve(rho0, ts)
        for a, b in zip(direct, product):
            assert trace_norm(a - b) < 1e-8

    def test_module_entry_point(self, q1, rng):
        model, bundle, dmap = q1
        rho0 = random_density(rng, 2)
        ts, states = integrate_mme_direct(model, bundle, rho0, 2.0, samples=9)
        assert ts.shape == (9,) and states.shape == (9, 2, 2)
        assert trace_norm(states[-1] - dmap.evolve(rho0, ts)[-1]) < 1e-7


class TestLindbladian:
    def test_generates_trajectory_derivative(self, q2, rng):
        _, _, dmap = q2
        rho0 = random_density(rng, 2)
        t, eps = 1.3, 1e-4
        rho_t = dmap.evolve(rho0, [t])[0]
        plus = dmap.evolve(rho0, [t + eps])[0]
        minus = dmap.evolve(rho0, [t - eps])[0]
        numeric = (plus - minus) / (2.0 * eps)
        analytic = devectorize(dmap.lindbladian(t).matrix @ vectorize(rho_t))
        assert trace_norm(numeric - analytic) < 1e-6

    def test_trace_annihilated(self, q3):
        _, _, dmap = q3
        eye_vec = vectorize(np.eye(3))
        for t in (0.0, 1.9):
            residual = eye_vec.conj() @ dmap.lindbladian(t).matrix
            assert np.linalg.norm(residual) < 1e-11


class TestSchrodingerReduction:
    def test_product_form_solves_schrodinger(self, q2):
        # u(t) = p(t) exp(-i t h_bar) against direct integration of the
        # synthesized Hamiltonian
        model, _, dmap = q2
        ts = np.linspace(0.0, 10.0, 41)
        u_path = integrate_schrodinger_direct(model, ts, tol=1e-10)
        h_bar = model.h_bar
        worst = 0.0
        for t, u in zip(ts, u_path):
            closed = dmap.p_at(t) @ scipy.linalg.expm(-1j * t * h_bar)
            worst = max(worst, float(np.linalg.norm(u - closed, 2)))
        assert worst < 1e-7

    def test_unitarity_of_integrated_path(self, q2):
        model, _, _ = q2
        u = integrate_schrodinger_direct(model, np.linspace(0.0, 5.0, 11), tol=1e-10)[-1]
        assert np.linalg.norm(u @ u.conj().T - np.eye(2), 2) < 1e-8


class TestTruncationControl:
    def test_coarse_frame_within_tail_budget(self, q2):
        model, _, _ = q2
        fine = model.p_series
        coarse = fine.truncate(4)
        budget = coarse.tail_norm + fine.tail_norm + 1e-13
        omega = model.frequencies
        worst = 0.0
        for t in np.linspace(0.0, 30.0, 150):
            diff = np.linalg.norm(coarse.evaluate(omega, t) - fine.evaluate(omega, t), 2)
            worst = max(worst, float(diff))
        assert worst <= budget
        assert coarse.tail_norm > fine.tail_norm
