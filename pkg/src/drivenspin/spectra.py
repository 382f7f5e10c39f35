"""Hermitian diagonalization, closed-form energies and band labeling.

The eigensolver is a self-contained cyclic Jacobi method for complex
Hermitian matrices, written so that a whole stack of 4x4 problems is
rotated simultaneously; dense parameter scans diagonalize tens of
thousands of matrices per call without leaving numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import AmbiguousMatch, DegenerateGap, NonConverged, NotHermitian
from .qmodel import LABELS, DriveConfig, StateLabel

HERMITICITY_TOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 50

#: Band labeling is refused when the smallest eigenvalue gap drops below
#: DEGENERACY_FACTOR * b; near-degenerate bands permute silently otherwise.
DEGENERACY_FACTOR = 1e-6

_PAIRS4 = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def require_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOL) -> None:
    """Raise NotHermitian unless max|H - H^dag| <= tol * max|H|."""
    h = np.asarray(h)
    defect = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))))
    scale = max(np.max(np.abs(h)), 1e-300)
    if defect > tol * scale:
        raise NotHermitian(
            f"hermiticity defect {defect:.3e} exceeds {tol:.1e} * max|H| = {tol * scale:.3e}"
        )


def eigh_stack(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a stack of 4x4 complex Hermitian matrices.

    Cyclic Jacobi sweeps are applied to every matrix of the stack at once;
    each sweep visits the six upper-triangle pivots in a fixed order and
    zeroes them with an exact unitary 2x2 rotation.  Sweeps stop when the
    off-diagonal norm of every matrix falls below JACOBI_TOL times its
    Frobenius norm.

    Parameters
    ----------
    h : ndarray, shape (..., 4, 4)
        Hermitian input; hermiticity is the caller's responsibility here
        (the public ``eigensystem`` checks it).

    Returns
    -------
    values : ndarray, shape (..., 4)
        Eigenvalues in ascending order.
    vectors : ndarray, shape (..., 4, 4)
        Orthonormal eigenvectors as columns, column k belonging to value k,
        each gauged so its largest-magnitude component is real positive.
    """
    hm = np.asarray(h, dtype=complex)
    if hm.shape[-2:] != (4, 4):
        raise ValueError(f"expected trailing shape (4, 4), got {hm.shape}")
    lead_shape = hm.shape[:-2]
    hm = hm.reshape((-1, 4, 4))
    m = hm.shape[0]

    # Flat column layout: a[i][j] holds entry (i, j) of every matrix as a
    # contiguous (m,) array, which keeps each rotation a handful of 1-D ops.
    a = [[hm[:, i, j].copy() for j in range(4)] for i in range(4)]
    v = [
        [np.full(m, 1.0 + 0.0j) if i == j else np.zeros(m, complex) for j in range(4)]
        for i in range(4)
    ]
    frosq = np.zeros(m)
    for i in range(4):
        for j in range(4):
            frosq += np.abs(a[i][j]) ** 2
    threshsq = np.maximum(JACOBI_TOL**2 * frosq, 1e-300)

    converged = False
    for _ in range(JACOBI_MAX_SWEEPS):
        offsq = np.zeros(m)
        for p, q in _PAIRS4:
            offsq += np.abs(a[p][q]) ** 2
        if np.all(2.0 * offsq <= threshsq):
            converged = True
            break
        for p, q in _PAIRS4:
            apq = a[p][q]
            mag = np.abs(apq)
            active = mag > 1e-300
            safe = np.where(active, mag, 1.0)
            ph = np.where(active, apq / safe, 1.0 + 0.0j)
            tau = (a[q][q].real - a[p][p].real) / (2.0 * safe)
            sgn = np.where(tau < 0.0, -1.0, 1.0)
            # tau*tau may overflow to inf for near-zero pivots; the rotation
            # angle then correctly underflows to zero.
            with np.errstate(over="ignore"):
                t = np.where(
                    active, sgn / (np.abs(tau) + np.sqrt(1.0 + tau * tau)), 0.0
                )
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # J is identity except J[pp]=c, J[pq]=s, J[qp]=-s conj(ph),
            # J[qq]=c conj(ph); A <- J^H A J, V <- V J.
            cph = c * np.conj(ph)
            sph = s * np.conj(ph)
            for i in range(4):
                aip, aiq = a[i][p], a[i][q]
                a[i][p] = c * aip - sph * aiq
                a[i][q] = s * aip + cph * aiq
            sphc = s * ph
            cphc = c * ph
            for j in range(4):
                apj, aqj = a[p][j], a[q][j]
                a[p][j] = c * apj - sphc * aqj
                a[q][j] = s * apj + cphc * aqj
            for i in range(4):
                vip, viq = v[i][p], v[i][q]
                v[i][p] = c * vip - sph * viq
                v[i][q] = s * vip + cph * viq
    if not converged:
        raise NonConverged(
            f"Jacobi sweeps did not reach tolerance within {JACOBI_MAX_SWEEPS} sweeps"
        )

    values = np.stack([a[i][i].real for i in range(4)], axis=1)
    vectors = np.empty((m, 4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            vectors[:, i, j] = v[i][j]
    order = np.argsort(values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    vectors = np.take_along_axis(vectors, order[:, None, :], axis=2)
    # Gauge fix: largest-magnitude component of each column real positive.
    idx = np.argmax(np.abs(vectors), axis=1)
    lead = np.take_along_axis(vectors, idx[:, None, :], axis=1)[:, 0, :]
    lmag = np.abs(lead)
    phase = lead / np.where(lmag > 0.0, lmag, 1.0)
    vectors = vectors * np.conj(phase)[:, None, :]
    return values.reshape(lead_shape + (4,)), vectors.reshape(lead_shape + (4, 4))


@dataclass(frozen=True)
class EigenSystem:
    """Sorted eigenvalues with orthonormal eigenvectors of a 4x4 Hermitian."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def gap_min(self) -> float:
        """Smallest separation between adjacent (sorted) eigenvalues."""
        return float(np.min(np.diff(self.values)))


def eigensystem(h: np.ndarray) -> EigenSystem:
    """Diagonalize one Hermitian 4x4 matrix.

    Raises
    ------
    NotHermitian
        If the hermiticity defect exceeds HERMITICITY_TOL * max|H|.
    """
    require_hermitian(h)
    values, vectors = eigh_stack(np.asarray(h, dtype=complex))
    return EigenSystem(values=values, vectors=vectors)


def closed_form_adiabatic_energies(cfg: DriveConfig, label: StateLabel) -> float:
    """Instantaneous energy of one band, closed form.

    For in-phase drives (phi branch 0) the energy is -b/2 (m1 + m2 lam),
    independent of theta; for the anti-phase branch it is
    -m1 b/2 sqrt(1 + lam^2 - 2 m2 lam cos(theta)).

    Raises UnsupportedPhase away from the two branches.
    """
    return _closed_energy_table(cfg, "adiabatic")[LABELS.index(StateLabel(*label))]


def closed_form_quasienergies(cfg: DriveConfig, label: StateLabel) -> float:
    """Rotating-frame eigenvalue (quasienergy) of one band, closed form.

    At omega = 0 this reduces to ``closed_form_adiabatic_energies``.
    """
    return _closed_energy_table(cfg, "rotating")[LABELS.index(StateLabel(*label))]


def _closed_energy_table(cfg: DriveConfig, regime: str, theta=None) -> np.ndarray:
    """Closed-form energies for all four labels (LABELS order).

    ``theta`` overrides cfg.theta when sweeping a grid; it may be an array,
    in which case the result has shape theta.shape + (4,).
    """
    branch = cfg.phase_branch()
    th = cfg.theta if theta is None else theta
    c = np.cos(th)
    cols = []
    if regime == "adiabatic":
        lam = cfg.lam
        for m1, m2 in LABELS:
            if branch == 0.0:
                cols.append(np.broadcast_to(-0.5 * cfg.b * (m1 + m2 * lam), np.shape(c)))
            else:
                cols.append(-0.5 * m1 * cfg.b * np.sqrt(1.0 + lam**2 - 2.0 * m2 * lam * c))
    elif regime == "rotating":
        for m1, m2 in LABELS:
            if branch == 0.0:
                mu = cfg.mu
                root = np.sqrt(1.0 + mu**2 - 2.0 * mu * c)
                cols.append(-0.5 * m1 * cfg.b * root - m2 * cfg.t_lr)
            else:
                d = cfg.delta(m2)
                cols.append(-0.5 * m1 * cfg.b * np.sqrt(1.0 + d**2 - 2.0 * d * c))
    else:
        raise ValueError(f"regime must be 'adiabatic' or 'rotating', got {regime!r}")
    out = np.stack([np.asarray(col, dtype=float) for col in cols], axis=-1)
    return out if np.ndim(th) else out.reshape(4)


@dataclass(frozen=True)
class LabeledSpectrum:
    """Numerical eigenpairs bound to their (m1, m2) labels."""

    states: dict[StateLabel, tuple[float, np.ndarray]]
    gap_min: float

    def energy(self, label: StateLabel) -> float:
        return self.states[StateLabel(*label)][0]

    def vector(self, label: StateLabel) -> np.ndarray:
        return self.states[StateLabel(*label)][1]


def label_eigenstates(
    es: EigenSystem, cfg: DriveConfig, regime: str = "adiabatic"
) -> LabeledSpectrum:
    """Name the four numerical eigenpairs by (m1, m2).

    The bijective assignment minimizing the total |E_numeric - E_closed| is
    found by enumerating all 24 permutations; with valid inputs it is also
    the sort-order match.

    Parameters
    ----------
    es : EigenSystem
        Output of ``eigensystem`` for the matching Hamiltonian.
    cfg : DriveConfig
        Parameters the Hamiltonian was built from.
    regime : {'adiabatic', 'rotating'}
        Which closed-form table the labels refer to.

    Raises
    ------
    DegenerateGap
        If the smallest numerical gap is below DEGENERACY_FACTOR * b;
        labels permute freely near degeneracy points.
    AmbiguousMatch
        If two assignments tie, or the best assignment leaves a residual
        above 1e-8 * b for some state.
    UnsupportedPhase
        Away from the phi in {0, pi} branches.
    """
    closed = _closed_energy_table(cfg, regime)
    gap_min = es.gap_min
    if gap_min < DEGENERACY_FACTOR * cfg.b:
        raise DegenerateGap(
            f"minimal eigenvalue gap {gap_min:.3e} below threshold "
            f"{DEGENERACY_FACTOR * cfg.b:.3e}; labeling is ill-defined"
        )
    best_cost = math.inf
    second = math.inf
    best: tuple[int, ...] | None = None
    for perm in permutations(range(4)):
        cost = sum(abs(es.values[perm[k]] - closed[k]) for k in range(4))
        if cost < best_cost:
            second = best_cost
            best_cost = cost
            best = perm
        elif cost < second:
            second = cost
    assert best is not None
    if second - best_cost < 1e-12 * cfg.b:
        raise AmbiguousMatch(
            f"two label assignments tie within {1e-12 * cfg.b:.1e} "
            f"(costs {best_cost:.3e} / {second:.3e})"
        )
    residual = max(abs(es.values[best[k]] - closed[k]) for k in range(4))
    if residual > 1e-8 * cfg.b:
        raise AmbiguousMatch(
            f"best assignment residual {residual:.3e} exceeds 1e-8 * b; "
            "numerical and closed-form spectra disagree"
        )
    states = {
        LABELS[k]: (float(es.values[best[k]]), es.vectors[:, best[k]].copy())
        for k in range(4)
    }
    return LabeledSpectrum(states=states, gap_min=gap_min)


def band_order(closed_values: np.ndarray) -> np.ndarray:
    """Position of each label's band in the ascending spectrum.

    ``closed_values`` is a length-4 array in LABELS order; the result maps
    label index -> column index of the ascending-sorted eigensystem.  Used
    by grid sweeps, where closed and numerical values agree to 1e-10 and
    the sort-order match equals the assignment-problem optimum.
    """
    return np.argsort(np.argsort(closed_values, kind="stable"), kind="stable")
