"""Spectral decomposition of the averaged Hamiltonian and jump operators.

The averaged (constant) Hamiltonian is diagonalized and its eigenvalues are
clustered into quasienergy levels; differences of quasienergies form the Bohr
frequency set. A coupling operator, moved to the interaction picture by the
unitary series ``p``, decomposes per Fourier index ``n`` into jump operators

    S_{n,w} = sum_{(k,l): e_k - e_l = w} P_k S_hat_n P_l,

which satisfy [h_bar, S_{n,w}] = w S_{n,w} and reassemble to S_hat_n when
summed over w. Each jump operator carries the shifted frequency
w + n . omega at which bath spectra are evaluated.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoConvergence, UnknownFrequency
from .fourier import FourierOperatorSeries, frequency_vector, _shells
from .linalg import eig_hermitian

__all__ = [
    "BohrDecomposition",
    "decompose",
    "check_congruence_freedom",
    "interaction_picture_coupling_series",
    "build_jump_operators",
    "JumpOperatorSet",
    "build_jump_operator_set",
]


def _cluster_sorted(values, atol):
    """Single-linkage clustering of a 1-d array; returns lists of indices."""
    order = np.argsort(values, kind="stable")
    clusters = [[int(order[0])]]
    for idx in order[1:]:
        idx = int(idx)
        if values[idx] - values[clusters[-1][-1]] <= atol:
            clusters[-1].append(idx)
        else:
            clusters.append([idx])
    return clusters


@dataclass
class BohrDecomposition:
    """Clustered eigenstructure of the averaged Hamiltonian.

    ``pairs[i]`` lists the quasienergy index pairs (k, l) whose difference
    belongs to Bohr frequency ``bohr_frequencies[i]``. The frequency set is
    ascending, contains 0, and is closed under negation exactly.
    """

    quasienergies: np.ndarray
    projections: list
    bohr_frequencies: np.ndarray
    pairs: list
    freq_atol: float
    h_bar: np.ndarray

    @property
    def dim(self):
        return self.h_bar.shape[0]

    @property
    def n_levels(self):
        return len(self.quasienergies)

    def frequency_index(self, w, atol=None):
        """Index of the Bohr frequency nearest ``w`` within tolerance."""
        atol = self.freq_atol if atol is None else float(atol)
        diffs = np.abs(self.bohr_frequencies - float(w))
        idx = int(np.argmin(diffs))
        if diffs[idx] > atol:
            raise UnknownFrequency(
                f"{w} is not a Bohr frequency (nearest {self.bohr_frequencies[idx]}, "
                f"tolerance {atol:.1e})"
            )
        return idx

    def q_omega(self, w, rho):
        """Frequency component of a state: sum_{(k,l) ~ w} P_k rho P_l.

        Summing q_omega over all Bohr frequencies returns rho; weighting the
        sum with exp(-i w t) realizes conjugation by exp(-i h_bar t).
        """
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"state shape {rho.shape} != {(self.dim, self.dim)}")
        idx = self.frequency_index(w)
        out = np.zeros_like(rho)
        for k, l in self.pairs[idx]:
            out += self.projections[k] @ rho @ self.projections[l]
        return out


def decompose(h_bar, tol_cluster=1e-9, tol_herm=1e-9):
    """Diagonalize and cluster the averaged Hamiltonian.

    Eigenvalues closer than ``tol_cluster`` times the spectral scale are
    merged into one quasienergy level (single linkage); Bohr frequencies are
    the clustered pairwise differences, symmetrized exactly around 0.
    """
    h_bar = np.asarray(h_bar, dtype=complex)
    w, v = eig_hermitian(h_bar, tol_herm=tol_herm)
    scale = float(np.max(np.abs(w))) if w.size and np.max(np.abs(w)) > 0 else 1.0
    atol = tol_cluster * scale

    clusters = _cluster_sorted(w, atol)
    quasienergies = np.array([float(np.mean(w[c])) for c in clusters])
    projections = []
    for c in clusters:
        cols = v[:, c]
        projections.append(cols @ cols.conj().T)

    d = h_bar.shape[0]
    completeness = np.linalg.norm(sum(projections) - np.eye(d))
    if completeness > 1e-10:
        raise NoConvergence(f"projector completeness residual {completeness:.3e}")

    n = len(clusters)
    pair_list = [(k, l) for k in range(n) for l in range(n)]
    diffs = np.array([quasienergies[k] - quasienergies[l] for k, l in pair_list])
    diff_clusters = _cluster_sorted(diffs, atol)
    reps = np.array([float(np.mean(diffs[c])) for c in diff_clusters])

    # snap the zero cluster and enforce exact negation symmetry of the set
    for i, r in enumerate(reps):
        if abs(r) <= atol:
            reps[i] = 0.0
    order = np.argsort(reps)
    reps = reps[order]
    diff_clusters = [diff_clusters[int(i)] for i in order]
    m = len(reps)
    for i in range(m // 2):
        mate = m - 1 - i
        mean = 0.5 * (reps[mate] - reps[i])
        reps[mate] = mean
        reps[i] = -mean

    pairs = [[] for _ in range(m)]
    for ci, members in enumerate(diff_clusters):
        for flat in members:
            pairs[ci].append(pair_list[flat])
    pairs = [sorted(p) for p in pairs]

    return BohrDecomposition(
        quasienergies=quasienergies,
        projections=projections,
        bohr_frequencies=reps,
        pairs=pairs,
        freq_atol=max(atol, 1e-12),
        h_bar=h_bar,
    )


def check_congruence_freedom(bohr_freqs, omega, box=12, tol=1e-9):
    """Scan for distinct Bohr frequencies congruent modulo the base lattice.

    Looks for |w - w' - n . omega| < tol with w != w' and 0 < max|n_i| <= box.
    Returns None on pass, otherwise a witness (w, w', n). Frequency vectors
    failing rational independence should be caught separately; this check
    only inspects distinct frequency pairs.
    """
    bohr_freqs = np.asarray(bohr_freqs, dtype=float).reshape(-1)
    omega = frequency_vector(omega)
    for i, wi in enumerate(bohr_freqs):
        for j, wj in enumerate(bohr_freqs):
            if i == j:
                continue
            target = wi - wj
            for n in _shells(omega.size, box):
                if abs(target - float(np.dot(n, omega))) < tol:
                    return (float(wi), float(wj), tuple(n))
    return None


def interaction_picture_coupling_series(p_series, coupling):
    """Fourier series of p(t)^dag S p(t) for a constant coupling S."""
    coupling = np.asarray(coupling, dtype=complex)
    if coupling.shape != (p_series.d, p_series.d):
        raise DimensionMismatch(
            f"coupling shape {coupling.shape} != {(p_series.d, p_series.d)}"
        )
    const = FourierOperatorSeries.constant(coupling, p_series.r)
    return p_series.adjoint().product(const).product(p_series)


def build_jump_operators(decomp, s_hat_series, drop_tol=1e-14):
    """Split each Fourier coefficient of an interaction-picture coupling into
    Bohr-frequency components.

    Returns a dict mapping (n, frequency_index) to the jump operator matrix;
    operators with Frobenius norm below ``drop_tol`` are omitted.
    """
    ops = {}
    for n in s_hat_series.indices():
        s_hat = s_hat_series.coeff(n)
        for w_idx, klist in enumerate(decomp.pairs):
            s = np.zeros_like(s_hat)
            for k, l in klist:
                s += decomp.projections[k] @ s_hat @ decomp.projections[l]
            if np.linalg.norm(s) >= drop_tol:
                ops[(n, w_idx)] = s
    return ops


@dataclass
class JumpOperatorSet:
    """All jump operators of a model, indexed by (coupling, n, frequency)."""

    decomp: BohrDecomposition
    ops: dict  # (mu, n_tuple, w_idx) -> matrix
    n_couplings: int

    def block_keys(self):
        """Sorted (w_idx, n) blocks that hold at least one operator.

        Sorted by frequency index first, Fourier index second; generator
        sums iterate in this order.
        """
        keys = {(w_idx, n) for (_, n, w_idx) in self.ops}
        return sorted(keys)

    def op(self, mu, n, w_idx):
        key = (mu, tuple(n), w_idx)
        if key in self.ops:
            return self.ops[key]
        d = self.decomp.dim
        return np.zeros((d, d), dtype=complex)

    def items_sorted(self):
        return sorted(self.ops.items(), key=lambda kv: (kv[0][2], kv[0][1], kv[0][0]))

    def shifted_frequency(self, n, w_idx, omega):
        return float(self.decomp.bohr_frequencies[w_idx] + np.dot(n, omega))


def build_jump_operator_set(decomp, s_hat_list, drop_tol=1e-14):
    """Assemble jump operators for every coupling's interaction series."""
    ops = {}
    for mu, s_hat_series in enumerate(s_hat_list):
        for (n, w_idx), s in build_jump_operators(decomp, s_hat_series, drop_tol).items():
            ops[(mu, n, w_idx)] = s
    return JumpOperatorSet(decomp=decomp, ops=ops, n_couplings=len(s_hat_list))
