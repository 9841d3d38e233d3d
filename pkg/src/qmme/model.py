"""Model container, bath spectra, Hamiltonian synthesis, and validation.

A reduced model consists of a base frequency vector, a unitary Fourier series
``p`` with ``p(0) = I``, a constant Hermitian operator ``h_bar``, a list of
coupling operators, and a bath spectrum. The lab-frame Hamiltonian it encodes
is recovered by :func:`synthesize_hamiltonian`:

    H(t) = i p'(t) p(t)^dag + p(t) h_bar p(t)^dag.

Bath conventions: ``h(w)`` is the full Fourier transform (with kernel
``exp(-i w x)``) of the bath correlation matrix, evaluated at the shifted
frequency of a jump operator that *raises* the averaged energy by ``w``. For a
thermal bath this places the emission weight at negative arguments, so the
detailed-balance identity reads ``h(w) = exp(-beta w) h(-w)`` and the Gibbs
state of ``h_bar`` is stationary in the time-independent case.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from . import bohr as _bohr
from .errors import (
    DimensionMismatch,
    NotHermitian,
    NotHermitianZeta,
    NotPSD,
    NotUnitary,
    Overflow,
    TruncationLoss,
)
from .fourier import FourierOperatorSeries, check_rational_independence, frequency_vector, sample_times
from .linalg import hermiticity_defect, hermitize

__all__ = [
    "BathSpectrum",
    "register_bath_family",
    "bath_from_family",
    "principal_value_zeta",
    "ReducedModel",
    "synthesize_hamiltonian",
    "ValidationReport",
    "validate_model",
    "p_series_from_generator",
    "p_series_from_profile_terms",
]


# ---------------------------------------------------------------------------
# bath spectra
# ---------------------------------------------------------------------------

class BathSpectrum:
    """Matrix-valued bath spectral data over the coupling index.

    ``h(w)`` must return a Hermitian PSD (n_couplings x n_couplings) matrix
    for every real ``w`` (Bochner positivity of the correlation transform);
    ``zeta(w)`` must return a Hermitian matrix. Both are validated at every
    evaluation since user callbacks cannot be checked globally.
    """

    def __init__(self, h_fn, zeta_fn, n_couplings, family="custom", params=None):
        self._h_fn = h_fn
        self._zeta_fn = zeta_fn
        self.n_couplings = int(n_couplings)
        self.family = family
        self.params = dict(params or {})

    def h(self, w, tol_psd=1e-12):
        g = np.asarray(self._h_fn(float(w)), dtype=complex)
        m = self.n_couplings
        if g.shape != (m, m):
            raise DimensionMismatch(f"bath h({w}) has shape {g.shape}, expected {(m, m)}")
        if not np.all(np.isfinite(g)):
            raise Overflow(f"bath h({w}) contains non-finite entries")
        if hermiticity_defect(g) > 1e-9:
            raise NotHermitian(f"bath h({w}) is not Hermitian")
        g = hermitize(g)
        lo = float(np.linalg.eigvalsh(g)[0])
        if lo < -tol_psd * max(1.0, float(np.linalg.norm(g))):
            raise NotPSD(f"bath h({w}) has negative eigenvalue {lo:.3e}")
        return g

    def zeta(self, w, tol_herm=1e-9):
        z = np.asarray(self._zeta_fn(float(w)), dtype=complex)
        m = self.n_couplings
        if z.shape != (m, m):
            raise DimensionMismatch(f"bath zeta({w}) has shape {z.shape}, expected {(m, m)}")
        if not np.all(np.isfinite(z)):
            raise Overflow(f"bath zeta({w}) contains non-finite entries")
        if hermiticity_defect(z) > tol_herm:
            raise NotHermitianZeta(f"bath zeta({w}) is not Hermitian")
        return hermitize(z)

    # -- constructors --------------------------------------------------

    @classmethod
    def flat(cls, gamma, n_couplings):
        """Frequency-independent rate: h(w) = gamma * I, zeta = 0."""
        gamma = float(gamma)
        if gamma < 0:
            raise NotPSD(f"flat bath rate must be nonnegative, got {gamma}")
        eye = np.eye(n_couplings, dtype=complex)
        zero = np.zeros((n_couplings, n_couplings), dtype=complex)
        return cls(lambda w: gamma * eye, lambda w: zero, n_couplings,
                   family="flat", params={"gamma": gamma})

    @classmethod
    def ohmic_kms(cls, kappa, cutoff, beta, n_couplings):
        """Ohmic profile with exponential cutoff in thermal detailed balance.

        Scalar profile lifted diagonally over the coupling index:

            h(w) = 2 pi kappa w exp(-|w| / cutoff) / (exp(beta w) - 1),
            h(0) = 2 pi kappa / beta,

        which is positive for all w and satisfies h(w) = exp(-beta w) h(-w),
        so jumps that raise the averaged energy are exponentially suppressed
        against those that lower it.
        """
        kappa, cutoff, beta = float(kappa), float(cutoff), float(beta)
        if kappa <= 0 or cutoff <= 0 or beta <= 0:
            raise DimensionMismatch("ohmic_kms needs positive kappa, cutoff, beta")
        eye = np.eye(n_couplings, dtype=complex)
        zero = np.zeros((n_couplings, n_couplings), dtype=complex)

        def profile(w):
            scale = 2.0 * math.pi * kappa * math.exp(-abs(w) / cutoff)
            if w == 0.0:
                return scale / beta
            return scale * w / math.expm1(beta * w)

        return cls(lambda w: profile(w) * eye, lambda w: zero, n_couplings,
                   family="ohmic_kms", params={"kappa": kappa, "cutoff": cutoff, "beta": beta})

    @classmethod
    def from_callables(cls, h_fn, zeta_fn=None, n_couplings=1, family="custom", params=None):
        if zeta_fn is None:
            zero = np.zeros((n_couplings, n_couplings), dtype=complex)
            zeta_fn = lambda w: zero
        return cls(h_fn, zeta_fn, n_couplings, family=family, params=params)


_BATH_FAMILIES = {}


def register_bath_family(name, builder):
    """Register builder(params: dict, n_couplings: int) -> BathSpectrum under a name."""
    _BATH_FAMILIES[str(name)] = builder


def bath_from_family(name, params, n_couplings):
    if name not in _BATH_FAMILIES:
        raise DimensionMismatch(
            f"unknown bath family {name!r}; registered: {sorted(_BATH_FAMILIES)}"
        )
    return _BATH_FAMILIES[name](dict(params), n_couplings)


register_bath_family("flat", lambda p, m: BathSpectrum.flat(p["gamma"], m))
register_bath_family(
    "ohmic_kms",
    lambda p, m: BathSpectrum.ohmic_kms(p["kappa"], p["cutoff"], p["beta"], m),
)


def principal_value_zeta(h_scalar, w, window):
    """Optional utility: principal-value transform of a scalar rate profile.

    Computes (1 / 2 pi) PV int_{-window}^{window} h(nu) / (nu - w) d nu,
    the imaginary part of the one-sided transform when the full transform is
    ``h``. Restricted to |w| < window.
    """
    w = float(w)
    window = float(window)
    if not abs(w) < window:
        raise DimensionMismatch(f"need |w| < window, got w={w}, window={window}")
    val, _ = scipy.integrate.quad(h_scalar, -window, window, weight="cauchy", wvar=w, limit=400)
    return val / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# model container
# ---------------------------------------------------------------------------

@dataclass
class ReducedModel:
    """A quasiperiodic open-system model in reduced form."""

    frequencies: np.ndarray
    p_series: FourierOperatorSeries
    h_bar: np.ndarray
    couplings: list = field(default_factory=list)
    bath: BathSpectrum = None

    def __post_init__(self):
        self.frequencies = frequency_vector(self.frequencies)
        if not isinstance(self.p_series, FourierOperatorSeries):
            raise DimensionMismatch("p_series must be a FourierOperatorSeries")
        if self.p_series.r != self.frequencies.size:
            raise DimensionMismatch(
                f"p_series has r={self.p_series.r} but {self.frequencies.size} frequencies given"
            )
        self.h_bar = np.asarray(self.h_bar, dtype=complex)
        d = self.p_series.d
        if self.h_bar.shape != (d, d):
            raise DimensionMismatch(f"h_bar shape {self.h_bar.shape} != {(d, d)}")
        if not np.all(np.isfinite(self.h_bar)):
            raise Overflow("h_bar contains non-finite entries")
        self.couplings = [np.asarray(s, dtype=complex) for s in self.couplings]
        if not self.couplings:
            raise DimensionMismatch("at least one coupling operator is required")
        for i, s in enumerate(self.couplings):
            if s.shape != (d, d):
                raise DimensionMismatch(f"coupling {i} has shape {s.shape}, expected {(d, d)}")
            if not np.all(np.isfinite(s)):
                raise Overflow(f"coupling {i} contains non-finite entries")
        if not isinstance(self.bath, BathSpectrum):
            raise DimensionMismatch("bath must be a BathSpectrum")
        if self.bath.n_couplings != len(self.couplings):
            raise DimensionMismatch(
                f"bath covers {self.bath.n_couplings} couplings, model has {len(self.couplings)}"
            )

    @property
    def dim(self):
        return self.p_series.d

    @property
    def n_frequencies(self):
        return int(self.frequencies.size)

    def isclose(self, other, atol=1e-15):
        """Field-for-field comparison (coefficients within atol)."""
        if not isinstance(other, ReducedModel):
            return False
        if self.frequencies.shape != other.frequencies.shape:
            return False
        if not np.allclose(self.frequencies, other.frequencies, atol=atol, rtol=0):
            return False
        if sorted(self.p_series.coeffs) != sorted(other.p_series.coeffs):
            return False
        for n, a in self.p_series.coeffs.items():
            if not np.allclose(a, other.p_series.coeffs[n], atol=atol, rtol=0):
                return False
        if not np.allclose(self.h_bar, other.h_bar, atol=atol, rtol=0):
            return False
        if len(self.couplings) != len(other.couplings):
            return False
        for a, b in zip(self.couplings, other.couplings):
            if not np.allclose(a, b, atol=atol, rtol=0):
                return False
        return self.bath.family == other.bath.family and self.bath.params == other.bath.params


# ---------------------------------------------------------------------------
# Hamiltonian synthesis
# ---------------------------------------------------------------------------

def _unitarity_residual(p_series, omega, grid_count=64):
    ts = sample_times(omega, grid_count)
    vals = p_series.evaluate_many(omega, ts)
    eye = np.eye(p_series.d)
    return max(float(np.linalg.norm(u @ u.conj().T - eye, 2)) for u in vals)


def synthesize_hamiltonian(p_series, omega, h_bar, tol_unitary=1e-9, tol_truncation=None):
    """Fourier series of H(t) = i p'(t) p(t)^dag + p(t) h_bar p(t)^dag.

    Raises NotUnitary if ``p`` drifts from unitarity on the sample grid, and
    TruncationLoss if ``tol_truncation`` is given and the product tails
    exceed it. The returned series is Hermitian-valued up to the reported
    tail mass.
    """
    omega = frequency_vector(omega)
    h_bar = np.asarray(h_bar, dtype=complex)
    residual = _unitarity_residual(p_series, omega)
    if residual > tol_unitary:
        raise NotUnitary(f"p series unitarity residual {residual:.3e} > {tol_unitary:.1e}")
    pdag = p_series.adjoint()
    dp = p_series.derivative(omega)
    hbar_const = FourierOperatorSeries.constant(h_bar, p_series.r)
    h_series = (1j * dp).product(pdag) + p_series.product(hbar_const).product(pdag)
    if tol_truncation is not None and h_series.tail_norm > tol_truncation:
        raise TruncationLoss(
            f"synthesized Hamiltonian dropped {h_series.tail_norm:.3e} > {tol_truncation:.1e}"
        )
    return h_series


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    """Outcome of the model admissibility checks.

    ``independence_witness`` and ``congruence_witness`` are None on pass;
    otherwise they carry the violating integer vector (and frequency pair).
    """

    independence_witness: object
    unitarity_residual: float
    p0_residual: float
    hbar_hermiticity: float
    congruence_witness: object
    bohr_frequencies: np.ndarray
    tol_unitary: float
    tol_herm: float

    @property
    def independence_ok(self):
        return self.independence_witness is None

    @property
    def unitarity_ok(self):
        return self.unitarity_residual <= self.tol_unitary and self.p0_residual <= self.tol_unitary

    @property
    def hermiticity_ok(self):
        return self.hbar_hermiticity <= self.tol_herm

    @property
    def congruence_ok(self):
        return self.congruence_witness is None

    @property
    def passed(self):
        return (
            self.independence_ok
            and self.unitarity_ok
            and self.hermiticity_ok
            and self.congruence_ok
        )

    def to_dict(self):
        def _wit(w):
            if w is None:
                return None
            wa, wb, n = w
            return {
                "frequency_a": float(wa),
                "frequency_b": float(wb),
                "lattice_vector": [int(v) for v in n],
            }

        return {
            "passed": bool(self.passed),
            "rational_independence": {
                "passed": bool(self.independence_ok),
                "witness": None if self.independence_witness is None
                else [int(v) for v in self.independence_witness],
            },
            "unitarity": {
                "passed": bool(self.unitarity_ok),
                "residual": float(self.unitarity_residual),
                "p0_residual": float(self.p0_residual),
            },
            "hbar_hermiticity": {
                "passed": bool(self.hermiticity_ok),
                "relative_defect": float(self.hbar_hermiticity),
            },
            "congruence_freedom": {
                "passed": bool(self.congruence_ok),
                "witness": _wit(self.congruence_witness),
            },
            "bohr_frequencies": [float(w) for w in self.bohr_frequencies],
        }


def validate_model(model, box=12, tol_independence=1e-9, tol_congruence=1e-9,
                   tol_unitary=1e-9, tol_herm=1e-10, tol_cluster=1e-9, grid_count=64):
    """Check the model admissibility conditions and report every verdict.

    Checks: rational independence of the base frequencies within the integer
    box; unitarity of ``p`` on the sample grid and ``p(0) = I``; Hermiticity
    of ``h_bar``; congruence freedom of the Bohr frequency set (no two
    distinct Bohr frequencies differ by a nonzero integer combination of the
    base frequencies within tolerance).
    """
    witness = check_rational_independence(model.frequencies, box=box, tol=tol_independence)
    unit_res = _unitarity_residual(model.p_series, model.frequencies, grid_count)
    p0_res = float(
        np.linalg.norm(model.p_series.evaluate(model.frequencies, 0.0) - np.eye(model.dim), 2)
    )
    herm = hermiticity_defect(model.h_bar)
    if herm <= tol_herm:
        decomp = _bohr.decompose(hermitize(model.h_bar), tol_cluster=tol_cluster)
        bohr_freqs = decomp.bohr_frequencies
        congruence = _bohr.check_congruence_freedom(
            bohr_freqs, model.frequencies, box=box, tol=tol_congruence
        )
    else:
        bohr_freqs = np.zeros(0)
        congruence = None
    return ValidationReport(
        independence_witness=witness,
        unitarity_residual=unit_res,
        p0_residual=p0_res,
        hbar_hermiticity=herm,
        congruence_witness=congruence,
        bohr_frequencies=bohr_freqs,
        tol_unitary=tol_unitary,
        tol_herm=tol_herm,
    )


# ---------------------------------------------------------------------------
# building p from a periodic generator
# ---------------------------------------------------------------------------

def p_series_from_generator(terms, r, trunc, drop_eps=1e-15):
    """Build a unitary Fourier series from torus-periodic generator data.

    ``terms`` is a list of (profile, G) pairs: ``profile`` maps a torus angle
    vector theta (length r) to a real number with profile(0) = 0, and ``G``
    is Hermitian. The series approximates

        p_hat(theta) = exp(-i sum_j profile_j(theta) G_j)

    sampled on a uniform grid with twice the box resolution per axis and
    transformed by DFT. Coefficients below ``drop_eps`` are discarded into
    the tail along with the measured out-of-box mass.
    """
    if not terms:
        raise DimensionMismatch("at least one generator term is required")
    gens = []
    d = None
    for profile, g in terms:
        g = np.asarray(g, dtype=complex)
        if d is None:
            d = g.shape[0]
        if g.shape != (d, d):
            raise DimensionMismatch(f"generator term has shape {g.shape}, expected {(d, d)}")
        if hermiticity_defect(g) > 1e-12:
            raise NotHermitian("generator matrices must be Hermitian")
        gens.append((profile, hermitize(g)))

    m = 2 * (2 * trunc + 1)
    axis = 2.0 * math.pi * np.arange(m) / m
    grid_shape = (m,) * r
    samples = np.empty(grid_shape + (d, d), dtype=complex)
    for g_idx in np.ndindex(grid_shape):
        theta = np.array([axis[i] for i in g_idx])
        a = np.zeros((d, d), dtype=complex)
        for profile, g in gens:
            a = a + float(profile(theta)) * g
        w, v = np.linalg.eigh(a)
        samples[g_idx] = (v * np.exp(-1j * w)) @ v.conj().T

    origin = samples[(0,) * r]
    if np.linalg.norm(origin - np.eye(d)) > 1e-12:
        raise ValueError("generator profiles must vanish at theta = 0 so that p(0) = I")

    spectrum = np.fft.fftn(samples, axes=tuple(range(r))) / (m ** r)
    coeffs = {}
    out_of_box = 0.0
    for g_idx in np.ndindex(grid_shape):
        n = tuple(i if i <= m // 2 else i - m for i in g_idx)
        a = spectrum[g_idx]
        if max(abs(v) for v in n) <= trunc:
            coeffs[n] = a
        else:
            out_of_box += float(np.linalg.norm(a))
    series = FourierOperatorSeries(r, d, trunc, coeffs, tail_norm=out_of_box)
    return series.drop_below(drop_eps)


def _make_profile(kind, index, amplitude):
    index = np.asarray(index, dtype=float)
    amplitude = float(amplitude)
    if kind == "sin":
        return lambda theta: amplitude * math.sin(float(np.dot(index, theta)))
    if kind == "cos_minus_one":
        return lambda theta: amplitude * (math.cos(float(np.dot(index, theta))) - 1.0)
    raise DimensionMismatch(f"unknown profile kind {kind!r}; use 'sin' or 'cos_minus_one'")


def p_series_from_profile_terms(term_dicts, r, trunc, drop_eps=1e-15):
    """Build ``p`` from serializable profile terms.

    Each term is a dict with keys ``profile`` ('sin' or 'cos_minus_one'),
    ``index`` (length-r integer vector), ``amplitude`` (real), ``matrix``
    (Hermitian generator). All profiles vanish at theta = 0.
    """
    terms = []
    for td in term_dicts:
        fn = _make_profile(td["profile"], td["index"], td["amplitude"])
        terms.append((fn, np.asarray(td["matrix"], dtype=complex)))
    return p_series_from_generator(terms, r, trunc, drop_eps=drop_eps)
