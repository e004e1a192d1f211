"""Dense truncated-Fock-space simulation of the lossy NOON probe.

This is the brute-force check on :mod:`noonbound.bounds`: it builds the output
density matrix explicitly, differentiates it analytically in the phases and
evaluates the QFIM, the SLD operators and the attainability commutator from
the eigendecomposition.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb, sqrt

import numpy as np
import scipy.linalg

from .core import FisherMatrix, Scenario, WeightVector, check_weights, surviving_weights, validate_scenario

DEFAULT_MAX_ENTRIES = 10**6
EIG_CUTOFF = 1e-12


class BasisOverflowError(ValueError):
    pass


class EigenSolverError(RuntimeError):
    pass


def fock_dimension(n_modes: int, max_total: int) -> int:
    """Number of occupation tuples over ``n_modes`` modes with total <= ``max_total``."""
    return comb(max_total + n_modes, n_modes)


@dataclass(frozen=True)
class FockBasis:
    n_modes: int
    max_total: int

    @cached_property
    def states(self) -> tuple[tuple[int, ...], ...]:
        # lexicographic order over all tuples with sum <= max_total
        return tuple(t for t in itertools.product(range(self.max_total + 1), repeat=self.n_modes)
                     if sum(t) <= self.max_total)

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {t: i for i, t in enumerate(self.states)}

    @cached_property
    def totals(self) -> np.ndarray:
        return np.array([sum(t) for t in self.states])

    @property
    def dim(self) -> int:
        return len(self.states)

    def noon(self, mode: int, n: int) -> int:
        t = [0] * self.n_modes
        t[mode] = n
        return self.index[tuple(t)]

    def number_conserving(self, k: int, j: int) -> np.ndarray:
        """Matrix of a_k^dagger a_j restricted to the basis (exact: it preserves the total)."""
        m = np.zeros((self.dim, self.dim))
        for col, t in enumerate(self.states):
            if t[j] == 0:
                continue
            amp = sqrt(t[j])
            u = list(t)
            u[j] -= 1
            amp *= sqrt(u[k] + 1)
            u[k] += 1
            m[self.index[tuple(u)], col] = amp
        return m

    def number_operator(self, j: int) -> np.ndarray:
        return np.diag([float(t[j]) for t in self.states])


def make_basis(s: Scenario, max_entries: int = DEFAULT_MAX_ENTRIES) -> FockBasis:
    dim = fock_dimension(s.n_phases + 1, s.n_photons)
    if dim * dim > max_entries:
        raise BasisOverflowError(
            f"Fock dimension {dim} for N={s.n_photons}, d={s.n_phases} needs {dim * dim} matrix entries "
            f"(cap {max_entries})")
    return FockBasis(s.n_phases + 1, s.n_photons)


def _coherent_amplitudes(s: Scenario, p: WeightVector) -> np.ndarray:
    """Unnormalised N-photon amplitudes sqrt(w_j) e^{i N phi_j} (phi_0 = 0)."""
    w = surviving_weights(s, p)
    phi = np.concatenate([[0.0], s.phases.array])
    return np.sqrt(w) * np.exp(1j * s.n_photons * phi)


def build_lossy_state(s: Scenario, p: WeightVector, max_entries: int = DEFAULT_MAX_ENTRIES) -> np.ndarray:
    """Output density matrix: W |psi><psi| on the N-photon manifold plus the diagonal sigma_N."""
    validate_scenario(s)
    check_weights(s, p)
    basis = make_basis(s, max_entries)
    n = s.n_photons
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    idx = [basis.noon(j, n) for j in range(s.n_phases + 1)]
    c = _coherent_amplitudes(s, p)
    rho[np.ix_(idx, idx)] = np.outer(c, c.conj())
    for j, (pj, g) in enumerate(zip(p.p, s.loss.gamma)):
        for r in range(1, n + 1):
            rho[basis.noon(j, n - r), basis.noon(j, n - r)] += pj * comb(n, r) * (1 - g) ** (n - r) * g**r
    return rho


def lossy_state_derivatives(s: Scenario, p: WeightVector, max_entries: int = DEFAULT_MAX_ENTRIES) -> list[np.ndarray]:
    """Analytic d rho / d phi_a for a = 1..d; only the coherent block depends on the phases."""
    basis = make_basis(s, max_entries)
    n = s.n_photons
    idx = [basis.noon(j, n) for j in range(s.n_phases + 1)]
    c = _coherent_amplitudes(s, p)
    out = []
    for a in range(1, s.n_phases + 1):
        dc = np.zeros_like(c)
        dc[a] = 1j * n * c[a]
        block = np.outer(dc, c.conj()) + np.outer(c, dc.conj())
        m = np.zeros((basis.dim, basis.dim), dtype=complex)
        m[np.ix_(idx, idx)] = block
        out.append(m)
    return out


# -- independent channel route ----------------------------------------------

def noon_state_vector(s: Scenario, p: WeightVector, basis: FockBasis | None = None) -> np.ndarray:
    """Phase-encoded lossless probe sum_j sqrt(p_j) e^{i N phi_j} |N>_j."""
    basis = basis or make_basis(s)
    phi = np.concatenate([[0.0], s.phases.array])
    v = np.zeros(basis.dim, dtype=complex)
    for j in range(s.n_phases + 1):
        v[basis.noon(j, s.n_photons)] = np.sqrt(p.p[j]) * np.exp(1j * s.n_photons * phi[j])
    return v


def phase_unitary(basis: FockBasis, phases: np.ndarray) -> np.ndarray:
    """exp(i sum_j phi~_j n_j) for absolute phases phi~_0..phi~_d."""
    occ = np.array(basis.states, dtype=float)
    return np.diag(np.exp(1j * occ @ np.asarray(phases, dtype=float)))


def loss_kraus(basis: FockBasis, mode: int, gamma: float) -> list[np.ndarray]:
    """Kraus operators K_k = sqrt(C(n,k) (1-g)^(n-k) g^k) |n-k><n| on one mode (beam-splitter loss)."""
    ops = []
    for k in range(basis.max_total + 1):
        m = np.zeros((basis.dim, basis.dim))
        for col, t in enumerate(basis.states):
            nj = t[mode]
            if nj < k:
                continue
            u = list(t)
            u[mode] -= k
            m[basis.index[tuple(u)], col] = sqrt(comb(nj, k) * (1 - gamma) ** (nj - k) * gamma**k)
        ops.append(m)
    return ops


def apply_loss(rho: np.ndarray, basis: FockBasis, mode: int, gamma: float) -> np.ndarray:
    return sum(k @ rho @ k.T for k in loss_kraus(basis, mode, gamma))


def apply_all_losses(rho: np.ndarray, basis: FockBasis, gamma) -> np.ndarray:
    for j, g in enumerate(gamma):
        rho = apply_loss(rho, basis, j, g)
    return rho


def lossy_state_via_kraus(s: Scenario, p: WeightVector) -> np.ndarray:
    """Output state from the pure probe through explicit per-mode Kraus maps."""
    basis = make_basis(s)
    v = noon_state_vector(s, p, basis)
    return apply_all_losses(np.outer(v, v.conj()), basis, s.loss.gamma)


# -- QFIM, SLD, attainability -----------------------------------------------

def _block_eigh(rho: np.ndarray, totals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # diagonalise per total-photon-number block so eigenvectors never mix sectors
    dim = rho.shape[0]
    vals = np.empty(dim)
    vecs = np.zeros((dim, dim), dtype=complex)
    col = 0
    for n in np.unique(totals):
        sel = np.flatnonzero(totals == n)
        try:
            lam, u = np.linalg.eigh(rho[np.ix_(sel, sel)])
        except np.linalg.LinAlgError as exc:
            raise EigenSolverError(str(exc)) from exc
        k = len(sel)
        vals[col:col + k] = lam
        vecs[sel, col:col + k] = u
        col += k
    return vals, vecs


def qfim_oracle(s: Scenario, p: WeightVector, max_entries: int = DEFAULT_MAX_ENTRIES) -> FisherMatrix:
    """QFIM from eigenvalue derivatives, eigenvector derivatives and their cross term.

    F[a, b] = sum_j dl_j^a dl_j^b / l_j + 4 sum_j l_j Re<d_a v_j | d_b v_j>
              - 8 sum_{j,k} l_j l_k / (l_j + l_k) Re(<d_a v_j | v_k><v_k | d_b v_j>)
    with first-order perturbative eigenvector derivatives (parallel gauge).
    """
    validate_scenario(s)
    basis = make_basis(s, max_entries)
    rho = build_lossy_state(s, p, max_entries)
    drho = lossy_state_derivatives(s, p, max_entries)
    lam, v = _block_eigh(rho, basis.totals)
    lam = np.where(np.abs(lam) < EIG_CUTOFF, 0.0, lam)
    gap = lam[:, None] - lam[None, :]
    degenerate = np.abs(gap) <= EIG_CUTOFF * max(1.0, np.abs(lam).max())

    dlam, dvec = [], []
    for dr in drho:
        x = v.conj().T @ dr @ v  # x[k, j] = <v_k| d rho |v_j>
        if np.abs(x[degenerate & ~np.eye(len(lam), dtype=bool)]).max(initial=0.0) > 1e-9:
            raise EigenSolverError("derivative couples degenerate eigenvectors; perturbative step is ill-posed")
        coef = np.where(degenerate, 0.0, x / np.where(degenerate, 1.0, -gap))  # (l_j - l_k) in denominator
        dlam.append(np.real(np.diag(x)))
        dvec.append(v @ coef)  # column j is |d v_j>

    d = s.n_phases
    f = np.zeros((d, d))
    pos = lam > EIG_CUTOFF
    lp = lam[pos]
    w = np.where(pos[:, None] & pos[None, :], np.outer(lam, lam) / np.where(pos[:, None] & pos[None, :],
                                                                          lam[:, None] + lam[None, :], 1.0), 0.0)
    for a in range(d):
        for b in range(a, d):
            t1 = np.sum(dlam[a][pos] * dlam[b][pos] / lp)
            t2 = 4.0 * np.sum(lp * np.real(np.sum(dvec[a][:, pos].conj() * dvec[b][:, pos], axis=0)))
            # ov_a[k, j] = <d_a v_j | v_k>, ov_b[k, j] = <v_k | d_b v_j>
            ov_a = (v.conj().T @ dvec[a]).conj()
            ov_b = v.conj().T @ dvec[b]
            t3 = -8.0 * np.sum(w.T * np.real(ov_a * ov_b))
            f[a, b] = f[b, a] = t1 + t2 + t3
    return FisherMatrix(f, "quantum")


@dataclass(frozen=True)
class SldOperator:
    matrix: np.ndarray
    phase_index: int


def sld_operators(s: Scenario, p: WeightVector, eps: float = EIG_CUTOFF,
                  max_entries: int = DEFAULT_MAX_ENTRIES) -> list[SldOperator]:
    """L_a = sum_{l_j + l_k > eps} 2 <v_j|d_a rho|v_k> / (l_j + l_k) |v_j><v_k|.

    Equivalent to the split into a diagonal d(l_j)/l_j part and off-diagonal
    2 (l_j - l_k)/(l_j + l_k) <v_k|d v_j> terms, without eigenvector derivatives.
    """
    rho = build_lossy_state(s, p, max_entries)
    drho = lossy_state_derivatives(s, p, max_entries)
    try:
        lam, v = np.linalg.eigh(rho)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    lam = np.clip(lam, 0.0, None)
    denom = lam[:, None] + lam[None, :]
    keep = denom > eps
    out = []
    for a, dr in enumerate(drho, start=1):
        x = v.conj().T @ dr @ v
        coef = np.where(keep, 2.0 * x / np.where(keep, denom, 1.0), 0.0)
        mat = v @ coef @ v.conj().T
        out.append(SldOperator(0.5 * (mat + mat.conj().T), a))
    return out


def qfim_from_sld(rho: np.ndarray, slds: list[SldOperator]) -> FisherMatrix:
    """F[a, b] = Re Tr(rho {L_a, L_b}) / 2."""
    d = len(slds)
    f = np.zeros((d, d))
    for i, la in enumerate(slds):
        for j, lb in enumerate(slds):
            anti = la.matrix @ lb.matrix + lb.matrix @ la.matrix
            f[i, j] = 0.5 * np.real(np.trace(rho @ anti))
    return FisherMatrix(0.5 * (f + f.T), "quantum")


def sld_residual(rho: np.ndarray, drho: np.ndarray, sld: SldOperator) -> float:
    """Frobenius norm of d rho - (L rho + rho L) / 2."""
    L = sld.matrix
    return float(np.linalg.norm(drho - 0.5 * (L @ rho + rho @ L)))


def attainability_check(s: Scenario, p: WeightVector, max_entries: int = DEFAULT_MAX_ENTRIES) -> float:
    """max over (a, b) of |Tr(rho [L_a, L_b])|; zero means the QCRB is attainable."""
    rho = build_lossy_state(s, p, max_entries)
    slds = sld_operators(s, p, max_entries=max_entries)
    worst = 0.0
    for i, la in enumerate(slds):
        for lb in slds[i + 1:]:
            comm = la.matrix @ lb.matrix - lb.matrix @ la.matrix
            worst = max(worst, abs(np.trace(rho @ comm)))
    return float(worst)


# -- linear optics on the Fock space ----------------------------------------

def fock_unitary(basis: FockBasis, U: np.ndarray) -> np.ndarray:
    """Fock-space operator of a passive mesh with creation operators a_j^+ -> sum_k conj(U[j, k]) a_k^+.

    Built as exp(sum_{k,j} G[k, j] a_k^+ a_j) with G = log(U^dagger), independent
    of the multinomial amplitude formula used by the interferometer module.
    """
    g = scipy.linalg.logm(np.asarray(U, dtype=complex).conj().T)
    gen = np.zeros((basis.dim, basis.dim), dtype=complex)
    for k in range(basis.n_modes):
        for j in range(basis.n_modes):
            if g[k, j] != 0:
                gen += g[k, j] * basis.number_conserving(k, j)
    return scipy.linalg.expm(gen)


def photon_count_probabilities(rho: np.ndarray, basis: FockBasis, U: np.ndarray) -> dict[tuple[int, ...], float]:
    """Diagonal of U_BS rho U_BS^dagger in the Fock basis."""
    ub = fock_unitary(basis, U)
    out = ub @ rho @ ub.conj().T
    diag = np.real(np.diag(out))
    return {t: float(diag[i]) for i, t in enumerate(basis.states)}
