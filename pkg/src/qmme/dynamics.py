"""Product-form dynamical maps and direct time-stepping cross-checks.

The evolution factorizes exactly as

    map(t) = sigma(t) o exp(t X),        sigma(t): rho -> p(t) rho p(t)^dag,

with X the constant generator. The equivalent time-local master equation uses

    L(t) = -i [H(t) + sigma_t(delta_h), . ] + sigma_t o dissipator o sigma_t^{-1},

and ``integrate_direct`` solves it with classical fixed-step RK4 under step
halving; it shares no exponentials with the product form, so agreement
between the two paths is a meaningful check of the whole construction.
"""

import math

import numpy as np

from .errors import Defective, NoConvergence, NotUnitary, OrderViolation
from .linalg import Superoperator, ad_superop, conjugation_superop, expm, trace_norm
from .model import synthesize_hamiltonian

__all__ = [
    "DynamicalMap",
    "sigma_superop",
    "dynamical_map",
    "propagator",
    "assemble_lindbladian",
    "integrate_mme_direct",
    "integrate_schrodinger_direct",
    "rk4_path",
]


# ---------------------------------------------------------------------------
# RK4 with step-halving convergence control
# ---------------------------------------------------------------------------

def _rk4_fixed(f, y0, ts, h_target):
    """March y' = f(t, y) through the nodes ``ts`` with uniform substeps of
    size at most ``h_target`` inside each interval; records y at every node."""
    out = [np.array(y0, dtype=complex)]
    y = out[0]
    for a, b in zip(ts[:-1], ts[1:]):
        span = float(b - a)
        if span < 0:
            raise OrderViolation("sample times must be ascending")
        if span == 0.0:
            out.append(y.copy())
            continue
        m = max(1, int(math.ceil(span / h_target)))
        h = span / m
        t = float(a)
        for _ in range(m):
            k1 = f(t, y)
            k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
            k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
            k4 = f(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        out.append(y)
    return np.stack(out)


def rk4_path(f, y0, ts, tol=1e-8, norm=None, h_initial=0.05, max_refinements=12):
    """RK4 trajectory over ``ts``, refined by step halving.

    The step is halved until the end state moves by less than ``tol`` in the
    given norm (trace norm by default) between successive refinements; the
    finer trajectory is returned. Raises NoConvergence when the refinement
    budget is exhausted.
    """
    ts = np.asarray(ts, dtype=float).reshape(-1)
    if ts.size < 2:
        return np.stack([np.array(y0, dtype=complex)] * ts.size)
    if norm is None:
        norm = trace_norm
    h = min(h_initial, max(float(ts[-1] - ts[0]), 1e-12) / 8.0)
    prev = _rk4_fixed(f, y0, ts, h)
    for _ in range(max_refinements):
        h *= 0.5
        cur = _rk4_fixed(f, y0, ts, h)
        if norm(cur[-1] - prev[-1]) < tol:
            return cur
        prev = cur
    raise NoConvergence(
        f"RK4 did not reach tol={tol:.1e} within {max_refinements} step halvings"
    )


# ---------------------------------------------------------------------------
# the dynamical map
# ---------------------------------------------------------------------------

class DynamicalMap:
    """Product-form propagation for one model and its generator bundle.

    Caches the eigendecomposition of X when it is numerically diagonalizable
    (eigenvector condition number below ``cond_threshold``); otherwise every
    exponential falls back to scaling-and-squaring.
    """

    def __init__(self, model, bundle, tol_unitary=1e-9, cond_threshold=1e6):
        self.model = model
        self.bundle = bundle
        self.dim = model.dim
        self.tol_unitary = float(tol_unitary)
        self._p_sampler = model.p_series.sampler(model.frequencies)
        self._x = bundle.x.matrix
        self._h_series = None
        self._h_sampler = None

        w, v = np.linalg.eig(self._x)
        cond = float(np.linalg.cond(v))
        self.eig_cond = cond
        if np.isfinite(cond) and cond < cond_threshold:
            self._eig = (w, v, np.linalg.inv(v))
        else:
            self._eig = None

    # -- pieces ---------------------------------------------------------

    def eigensystem(self):
        """Cached (eigenvalues, eigenvectors, inverse) of X; Defective if absent."""
        if self._eig is None:
            raise Defective(
                f"X eigenvector condition number {self.eig_cond:.3e} too large for "
                "eigen-expansion"
            )
        return self._eig

    def p_at(self, t):
        """Evaluate the unitary series at ``t`` (unitarity enforced)."""
        p = self._p_sampler(float(t))
        drift = float(np.linalg.norm(p @ p.conj().T - np.eye(self.dim), 2))
        if drift > self.tol_unitary:
            raise NotUnitary(f"p({t}) unitarity residual {drift:.3e} > {self.tol_unitary:.1e}")
        return p

    def sigma(self, t):
        """Conjugation superoperator rho -> p(t) rho p(t)^dag."""
        return Superoperator(conjugation_superop(self.p_at(t)))

    def sigma_inverse(self, t):
        return Superoperator(conjugation_superop(self.p_at(t).conj().T))

    def expm_x(self, t):
        """Matrix of exp(t X)."""
        if self._eig is not None:
            w, v, vinv = self._eig
            return (v * np.exp(w * float(t))) @ vinv
        return expm(float(t) * self._x)

    def at(self, t):
        """The dynamical map at time t >= 0 as a superoperator."""
        t = float(t)
        if t < 0:
            raise OrderViolation(f"map time must be nonnegative, got {t}")
        return Superoperator(conjugation_superop(self.p_at(t)) @ self.expm_x(t))

    def propagator(self, t, s):
        """Two-time propagator sigma_t exp((t - s) X) sigma_s^{-1}, s <= t."""
        t, s = float(t), float(s)
        if s > t:
            raise OrderViolation(f"propagator needs s <= t, got s={s} > t={t}")
        left = conjugation_superop(self.p_at(t)) @ self.expm_x(t - s)
        return Superoperator(left @ conjugation_superop(self.p_at(s).conj().T))

    def h_series(self):
        """Synthesized Hamiltonian series (cached)."""
        if self._h_series is None:
            self._h_series = synthesize_hamiltonian(
                self.model.p_series,
                self.model.frequencies,
                self.model.h_bar,
                tol_unitary=self.tol_unitary,
            )
            self._h_sampler = self._h_series.sampler(self.model.frequencies)
        return self._h_series

    def lindbladian(self, t):
        """Time-local generator L(t) as a superoperator."""
        self.h_series()
        p = self.p_at(t)
        pd = p.conj().T
        h_eff = self._h_sampler(float(t)) + p @ self.bundle.delta_h @ pd
        rotated = conjugation_superop(p) @ self.bundle.dissipator.matrix @ conjugation_superop(pd)
        return Superoperator(-1j * ad_superop(h_eff) + rotated)

    # -- propagation ------------------------------------------------------

    def evolve(self, rho0, ts):
        """Product-form trajectory at the sample times (closed form per node)."""
        rho0 = np.asarray(rho0, dtype=complex)
        ts = np.asarray(ts, dtype=float).reshape(-1)
        if np.any(ts < 0):
            raise OrderViolation("sample times must be nonnegative")
        v0 = rho0.reshape(-1, order="F")
        d = self.dim
        out = np.empty((ts.size, d, d), dtype=complex)
        if self._eig is not None:
            w, v, vinv = self._eig
            y0 = vinv @ v0
            for i, t in enumerate(ts):
                u = (v @ (np.exp(w * t) * y0)).reshape((d, d), order="F")
                p = self.p_at(t)
                out[i] = p @ u @ p.conj().T
        else:
            for i, t in enumerate(ts):
                u = (self.expm_x(t) @ v0).reshape((d, d), order="F")
                p = self.p_at(t)
                out[i] = p @ u @ p.conj().T
        return out

    def integrate_direct(self, rho0, ts, tol=1e-8, max_refinements=12):
        """Trajectory from RK4 on the time-local master equation.

        Deliberately avoids the product form: the only shared ingredients are
        the series evaluations and the constant dissipator matrix.
        """
        self.h_series()
        d = self.dim
        delta_h = self.bundle.delta_h
        diss = self.bundle.dissipator.matrix
        p_sampler = self._p_sampler
        h_sampler = self._h_sampler

        def rhs(t, rho):
            p = p_sampler(t)
            pd = p.conj().T
            h_eff = h_sampler(t) + p @ delta_h @ pd
            inner = pd @ rho @ p
            dissipated = (diss @ inner.reshape(-1, order="F")).reshape((d, d), order="F")
            return -1j * (h_eff @ rho - rho @ h_eff) + p @ dissipated @ pd

        return rk4_path(rhs, np.asarray(rho0, dtype=complex), ts, tol=tol,
                        max_refinements=max_refinements)


# ---------------------------------------------------------------------------
# module-level entry points
# ---------------------------------------------------------------------------

def sigma_superop(p_series, omega, t, tol_unitary=1e-9):
    """Conjugation superoperator by p(t) evaluated from a series."""
    p = p_series.evaluate(omega, float(t))
    drift = float(np.linalg.norm(p @ p.conj().T - np.eye(p_series.d), 2))
    if drift > tol_unitary:
        raise NotUnitary(f"p({t}) unitarity residual {drift:.3e} > {tol_unitary:.1e}")
    return Superoperator(conjugation_superop(p))


def dynamical_map(model, bundle, t, **kwargs):
    """One-off map at time t; build a DynamicalMap for repeated use."""
    return DynamicalMap(model, bundle, **kwargs).at(t)


def propagator(model, bundle, t, s, **kwargs):
    """One-off two-time propagator."""
    return DynamicalMap(model, bundle, **kwargs).propagator(t, s)


def assemble_lindbladian(model, bundle, t, **kwargs):
    """One-off time-local generator L(t)."""
    return DynamicalMap(model, bundle, **kwargs).lindbladian(t)


def integrate_mme_direct(model, bundle, rho0, t_end, tol=1e-8, samples=200):
    """Direct RK4 solution of the master equation on a uniform grid.

    Returns (ts, states) with ``samples`` nodes on [0, t_end].
    """
    ts = np.linspace(0.0, float(t_end), int(samples))
    states = DynamicalMap(model, bundle).integrate_direct(rho0, ts, tol=tol)
    return ts, states


def integrate_schrodinger_direct(model, ts, tol=1e-8):
    """RK4 solution of u' = -i H(t) u with u(ts[0]) = I.

    ``H`` is the synthesized Hamiltonian series of the model; this is the
    oracle used to confirm that p(t) exp(-i t h_bar) solves the same equation.
    """
    h_series = synthesize_hamiltonian(model.p_series, model.frequencies, model.h_bar)
    sampler = h_series.sampler(model.frequencies)

    def rhs(t, u):
        return -1j * (sampler(t) @ u)

    y0 = np.eye(model.dim, dtype=complex)
    return rk4_path(rhs, y0, ts, tol=tol, norm=np.linalg.norm)
