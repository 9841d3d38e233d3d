"""Bath spectra, Hamiltonian synthesis, and model validation."""

import math

import numpy as np
import pytest
import scipy.special

from conftest import random_hermitian

from qmme.errors import (
    DimensionMismatch,
    NotHermitian,
    NotHermitianZeta,
    NotPSD,
    NotUnitary,
    Overflow,
    TruncationLoss,
)
from qmme.fourier import FourierOperatorSeries
from qmme.model import (
    BathSpectrum,
    ReducedModel,
    bath_from_family,
    p_series_from_generator,
    p_series_from_profile_terms,
    principal_value_zeta,
    synthesize_hamiltonian,
    validate_model,
)
from qmme.presets import SIGMA_X, SIGMA_Z, preset


class TestFlatBath:
    def test_values(self):
        bath = BathSpectrum.flat(0.4, 2)
        for w in (-3.0, -0.5, 0.0, 0.5, 3.0):
            assert np.allclose(bath.h(w), 0.4 * np.eye(2), atol=0)
            assert np.allclose(bath.zeta(w), 0.0, atol=0)

    def test_negative_rate_rejected(self):
        with pytest.raises(NotPSD):
            BathSpectrum.flat(-0.1, 1)

    def test_family_metadata(self):
        bath = BathSpectrum.flat(0.4, 3)
        assert bath.family == "flat"
        assert bath.params == {"gamma": 0.4}
        assert bath.n_couplings == 3


class TestOhmicKmsBath:
    KAPPA, CUTOFF, BETA = 0.15, 5.0, 1.0

    def bath(self, n=1):
        return BathSpectrum.ohmic_kms(self.KAPPA, self.CUTOFF, self.BETA, n)

    def test_zero_frequency_value(self):
        # limit w -> 0 of w / (e^{bw} - 1) is 1/b
        expect = 2.0 * math.pi * self.KAPPA / self.BETA
        got = self.bath().h(0.0)[0, 0].real
        assert got == pytest.approx(expect, rel=0, abs=1e-15)
        # continuity: approach from both sides
        for w in (1e-8, -1e-8):
            assert self.bath().h(w)[0, 0].real == pytest.approx(expect, rel=1e-7)

    def test_detailed_balance(self):
        # rate asymmetry h(w) = e^{-beta w} h(-w) at machine precision
        bath = self.bath()
        for w in np.linspace(0.05, 8.0, 40):
            up = bath.h(w)[0, 0].real
            down = bath.h(-w)[0, 0].real
            assert up == pytest.approx(math.exp(-self.BETA * w) * down, rel=1e-13)

    def test_unit_ratio(self):
        bath = self.bath()
        ratio = bath.h(1.0)[0, 0].real / bath.h(-1.0)[0, 0].real
        assert ratio == pytest.approx(math.exp(-self.BETA), rel=1e-13)

    def test_positive_everywhere(self):
        bath = self.bath(2)
        for w in np.linspace(-10.0, 10.0, 81):
            eigs = np.linalg.eigvalsh(bath.h(w))
            assert eigs[0] > 0.0

    def test_zeta_is_zero(self):
        assert np.allclose(self.bath().zeta(2.3), 0.0, atol=0)

    def test_bad_parameters(self):
        for args in ((0.0, 5.0, 1.0), (0.1, -1.0, 1.0), (0.1, 5.0, 0.0)):
            with pytest.raises(DimensionMismatch):
                BathSpectrum.ohmic_kms(*args, 1)


class TestBathCallableGates:
    def test_non_hermitian_h(self):
        bad = np.array([[1.0, 1.0], [0.0, 1.0]])
        bath = BathSpectrum.from_callables(lambda w: bad, n_couplings=2)
        with pytest.raises(NotHermitian):
            bath.h(0.0)

    def test_indefinite_h(self):
        bath = BathSpectrum.from_callables(lambda w: np.diag([1.0, -0.5]), n_couplings=2)
        with pytest.raises(NotPSD):
            bath.h(1.0)

    def test_non_hermitian_zeta(self):
        bath = BathSpectrum.from_callables(
            lambda w: np.eye(2),
            zeta_fn=lambda w: np.array([[0.0, 1.0], [0.0, 0.0]]),
            n_couplings=2,
        )
        with pytest.raises(NotHermitianZeta):
            bath.zeta(0.0)

    def test_wrong_shape(self):
        bath = BathSpectrum.from_callables(lambda w: np.eye(3), n_couplings=2)
        with pytest.raises(DimensionMismatch):
            bath.h(0.0)

    def test_non_finite(self):
        bath = BathSpectrum.from_callables(lambda w: np.array([[np.inf]]), n_couplings=1)
        with pytest.raises(Overflow):
            bath.h(0.0)

    def test_default_zeta_vanishes(self):
        bath = BathSpectrum.from_callables(lambda w: np.eye(1))
        assert np.allclose(bath.zeta(0.7), 0.0, atol=0)


class TestBathFamilies:
    def test_round_trip(self):
        bath = bath_from_family("ohmic_kms", {"kappa": 0.2, "cutoff": 3.0, "beta": 0.5}, 2)
        direct = BathSpectrum.ohmic_kms(0.2, 3.0, 0.5, 2)
        for w in (-1.0, 0.0, 2.5):
            assert np.allclose(bath.h(w), direct.h(w), atol=0)

    def test_unknown_family(self):
        with pytest.raises(DimensionMismatch):
            bath_from_family("nope", {}, 1)


class TestPrincipalValue:
    def test_flat_profile_closed_form(self):
        # PV of gamma / (nu - w) over [-W, W] is gamma * log((W - w) / (W + w))
        gamma, window, w = 0.7, 2.0, 0.3
        expect = gamma * math.log((window - w) / (window + w)) / (2.0 * math.pi)
        got = principal_value_zeta(lambda nu: gamma, w, window)
        assert got == pytest.approx(expect, rel=1e-10)

    def test_odd_in_w_for_even_profile(self):
        got_p = principal_value_zeta(lambda nu: math.exp(-nu * nu), 0.8, 6.0)
        got_m = principal_value_zeta(lambda nu: math.exp(-nu * nu), -0.8, 6.0)
        assert got_p == pytest.approx(-got_m, rel=1e-9)

    def test_outside_window(self):
        with pytest.raises(DimensionMismatch):
            principal_value_zeta(lambda nu: 1.0, 3.0, 2.0)


class TestGeneratorSeries:
    def test_jacobi_anger_coefficients(self):
        # exp(-i a sin(theta) Z) is diagonal with entries exp(∓ i a sin theta),
        # whose Fourier coefficients are Bessel values J_n(∓a)
        a, trunc = 0.3, 8
        series = p_series_from_generator(
            [(lambda theta: a * math.sin(theta[0]), SIGMA_Z)], r=1, trunc=trunc
        )
        for n in range(-3, 4):
            expect = np.diag([scipy.special.jv(n, -a), scipy.special.jv(n, a)])
            got = series.coeffs[(n,)]
            assert np.allclose(got, expect, atol=1e-12)

    def test_identity_at_origin(self):
        series = p_series_from_generator(
            [(lambda theta: 0.4 * math.sin(theta[0]), SIGMA_X)], r=1, trunc=10
        )
        p0 = series.evaluate(np.array([1.7]), 0.0)
        assert np.allclose(p0, np.eye(2), atol=1e-13)

    def test_profile_must_vanish_at_origin(self):
        with pytest.raises(ValueError):
            p_series_from_generator(
                [(lambda theta: 1.0 + math.sin(theta[0]), SIGMA_Z)], r=1, trunc=4
            )

    def test_non_hermitian_generator(self):
        g = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NotHermitian):
            p_series_from_generator([(lambda theta: math.sin(theta[0]), g)], r=1, trunc=4)

    def test_empty_terms(self):
        with pytest.raises(DimensionMismatch):
            p_series_from_generator([], r=1, trunc=4)

    def test_profile_terms_equivalence(self):
        terms = [
            {"profile": "sin", "index": [1, 0], "amplitude": 0.3, "matrix": SIGMA_Z},
            {"profile": "cos_minus_one", "index": [0, 1], "amplitude": 0.2, "matrix": SIGMA_Z},
        ]
        via_dicts = p_series_from_profile_terms(terms, r=2, trunc=6)
        via_callables = p_series_from_generator(
            [
                (lambda th: 0.3 * math.sin(th[0]), SIGMA_Z),
                (lambda th: 0.2 * (math.cos(th[1]) - 1.0), SIGMA_Z),
            ],
            r=2,
            trunc=6,
        )
        assert sorted(via_dicts.coeffs) == sorted(via_callables.coeffs)
        for n, c in via_dicts.coeffs.items():
            assert np.allclose(c, via_callables.coeffs[n], atol=1e-14)

    def test_unknown_profile_kind(self):
        with pytest.raises(DimensionMismatch):
            p_series_from_profile_terms(
                [{"profile": "tan", "index": [1], "amplitude": 0.1, "matrix": SIGMA_Z}],
                r=1,
                trunc=4,
            )


class TestSynthesize:
    def test_constant_frame_returns_static_part(self):
        omega = np.array([1.0, math.sqrt(2.0)])
        p = FourierOperatorSeries.constant(np.eye(2), r=2)
        h_bar = 0.3 * SIGMA_Z
        series = synthesize_hamiltonian(p, omega, h_bar)
        for t in (0.0, 1.3, 7.7):
            assert np.allclose(series.evaluate(omega, t), h_bar, atol=1e-14)

    def test_commuting_closed_form(self):
        # frame exp(-i a sin(w t) Z) with static part b Z commutes throughout,
        # so the lab Hamiltonian is (a w cos(w t) + b) Z
        a, b, w1 = 0.3, 0.4, 1.3
        omega = np.array([w1])
        p = p_series_from_generator(
            [(lambda theta: a * math.sin(theta[0]), SIGMA_Z)], r=1, trunc=12
        )
        series = synthesize_hamiltonian(p, omega, b * SIGMA_Z)
        for t in np.linspace(0.0, 9.0, 25):
            expect = (a * w1 * math.cos(w1 * t) + b) * SIGMA_Z
            got = series.evaluate(omega, t)
            assert np.allclose(got, expect, atol=1e-10)

    def test_result_hermitian(self, rng):
        p = p_series_from_generator(
            [
                (lambda th: 0.25 * math.sin(th[0]), SIGMA_Z),
                (lambda th: 0.15 * math.sin(th[1]), SIGMA_X),
            ],
            r=2,
            trunc=10,
        )
        omega = np.array([math.sqrt(2.0), math.pi])
        series = synthesize_hamiltonian(p, omega, random_hermitian(rng, 2))
        for t in (0.0, 0.9, 4.4):
            h = series.evaluate(omega, t)
            assert np.linalg.norm(h - h.conj().T, 2) < 1e-9

    def test_non_unitary_frame_rejected(self):
        p = FourierOperatorSeries.constant(0.5 * np.eye(2), r=1)
        with pytest.raises(NotUnitary):
            synthesize_hamiltonian(p, np.array([1.0]), SIGMA_Z)

    def test_truncation_budget(self):
        # trunc=6 leaves ~1e-8 of spectral mass outside the box at amplitude
        # 0.5, so a tight truncation budget must trip after the (relaxed)
        # unitarity gate passes
        p = p_series_from_generator(
            [(lambda theta: 0.5 * math.sin(theta[0]), SIGMA_Z)], r=1, trunc=6
        )
        with pytest.raises(TruncationLoss):
            synthesize_hamiltonian(
                p, np.array([1.0]), SIGMA_Z, tol_unitary=1e-5, tol_truncation=1e-12
            )


class TestReducedModelConstruction:
    def good_kwargs(self):
        return dict(
            frequencies=np.array([1.0, math.sqrt(2.0)]),
            p_series=FourierOperatorSeries.constant(np.eye(2), r=2),
            h_bar=0.3 * SIGMA_Z,
            couplings=[SIGMA_Z],
            bath=BathSpectrum.flat(0.25, 1),
        )

    def test_good_model(self):
        m = ReducedModel(**self.good_kwargs())
        assert m.dim == 2
        assert m.n_frequencies == 2

    def test_rank_mismatch(self):
        kw = self.good_kwargs()
        kw["frequencies"] = np.array([1.0])
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_h_bar_shape(self):
        kw = self.good_kwargs()
        kw["h_bar"] = np.eye(3)
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_h_bar_finite(self):
        kw = self.good_kwargs()
        kw["h_bar"] = np.array([[np.nan, 0.0], [0.0, 0.0]])
        with pytest.raises(Overflow):
            ReducedModel(**kw)

    def test_couplings_required(self):
        kw = self.good_kwargs()
        kw["couplings"] = []
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_coupling_shape(self):
        kw = self.good_kwargs()
        kw["couplings"] = [np.eye(3)]
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_bath_type(self):
        kw = self.good_kwargs()
        kw["bath"] = "flat"
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_bath_count_mismatch(self):
        kw = self.good_kwargs()
        kw["bath"] = BathSpectrum.flat(0.25, 2)
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_p_series_type(self):
        kw = self.good_kwargs()
        kw["p_series"] = np.eye(2)
        with pytest.raises(DimensionMismatch):
            ReducedModel(**kw)

    def test_isclose(self):
        a = ReducedModel(**self.good_kwargs())
        b = ReducedModel(**self.good_kwargs())
        assert a.isclose(b)
        kw = self.good_kwargs()
        kw["h_bar"] = 0.3 * SIGMA_Z + 1e-10 * np.eye(2)
        c = ReducedModel(**kw)
        assert not a.isclose(c)
        assert a.isclose(c, atol=1e-9)
        assert not a.isclose("not a model")


class TestValidateModel:
    def test_reference_models_pass(self):
        for name in ("qubit_dephasing", "qubit_driven", "qutrit_thermal"):
            report = validate_model(preset(name))
            assert report.passed, name

    def test_dephasing_report_contents(self):
        report = validate_model(preset("qubit_dephasing"))
        assert report.independence_witness is None
        assert report.unitarity_residual < 1e-12
        assert report.p0_residual < 1e-12
        assert report.hbar_hermiticity < 1e-14
        assert report.congruence_witness is None
        # static part 0.3 Z gives level splitting 0.6
        assert np.allclose(np.sort(report.bohr_frequencies), [-0.6, 0.0, 0.6], atol=1e-12)

    def test_dependent_frequencies(self):
        m = preset("qubit_dephasing")
        bad = ReducedModel(
            frequencies=np.array([1.0, 2.0]),
            p_series=m.p_series,
            h_bar=m.h_bar,
            couplings=m.couplings,
            bath=m.bath,
        )
        report = validate_model(bad)
        assert not report.passed
        assert list(report.independence_witness) == [2, -1]
        d = report.to_dict()
        assert d["rational_independence"]["witness"] == [2, -1]

    def test_congruence_violation(self):
        report = validate_model(preset("qubit_congruence_violating"))
        assert not report.passed
        assert report.congruence_ok is False
        wa, wb, n = report.congruence_witness
        omega = preset("qubit_congruence_violating").frequencies
        # witness must satisfy the congruence it claims
        assert abs((wa - wb) - np.dot(n, omega)) < 1e-12
        d = report.to_dict()["congruence_freedom"]["witness"]
        assert d["lattice_vector"] == [int(v) for v in n]

    def test_non_hermitian_static_part(self):
        m = preset("qubit_dephasing")
        bad = ReducedModel(
            frequencies=m.frequencies,
            p_series=m.p_series,
            h_bar=np.array([[0.0, 1.0], [0.0, 0.0]]),
            couplings=m.couplings,
            bath=m.bath,
        )
        report = validate_model(bad)
        assert not report.passed
        assert not report.hermiticity_ok
        # spectral decomposition is skipped when the static part is invalid
        assert report.bohr_frequencies.size == 0
        assert report.to_dict()["hbar_hermiticity"]["passed"] is False

    def test_unitarity_violation(self):
        m = preset("qubit_dephasing")
        bad = ReducedModel(
            frequencies=m.frequencies,
            p_series=FourierOperatorSeries.constant(0.9 * np.eye(2), r=2),
            h_bar=m.h_bar,
            couplings=m.couplings,
            bath=m.bath,
        )
        report = validate_model(bad)
        assert not report.passed
        assert not report.unitarity_ok
        assert report.unitarity_residual > 0.1
