"""Krylov eigensolver for the generalized problem ``A x = omega^2 B x``.

The smallest-magnitude ``omega^2`` are reached through zero-shift inversion:
one real sparse LU factorization of ``A`` turns the problem into dominant
eigenvalues ``theta = 1 / omega^2`` of the operator ``x -> A^{-1} B x``.
A restarted Arnoldi iteration in real arithmetic extracts the dominant Ritz
pairs; complex eigenvalues emerge as conjugate pairs of the real Hessenberg
matrix.  A dense solver over the explicitly formed operator serves as an
independent reference for small systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import BlockSystem, DofMap


class NumericalError(RuntimeError):
    """A numerical failure (singular factorization, non-convergence)."""


class SingularMatrixError(NumericalError):
    """Sparse LU hit a numerically singular pivot."""


class ConvergenceError(NumericalError):
    """Arnoldi failed to converge; carries the best residuals achieved."""

    def __init__(self, message: str, residuals):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class Factorization:
    """Sparse LU factors (partial pivoting, fill-reducing column ordering)."""

    lu: object
    shape: tuple

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self.lu.solve(np.asarray(b))


@dataclass(frozen=True)
class SolverOptions:
    """Options of the restarted Arnoldi eigensolver.

    ``m`` defaults to ``max(2k + 10, 30)`` clamped to the system size.
    Ritz values with ``|theta| < theta_cutoff`` are discarded: they belong to
    the kernel of B and correspond to no finite eigenvalue.
    """

    k: int = 6
    m: int = None
    tol: float = 1e-9
    max_restarts: int = 200
    theta_cutoff: float = 1e-10

    def krylov_dim(self, n: int) -> int:
        m = self.m if self.m is not None else max(2 * self.k + 10, 30)
        m = min(m, n)
        if not self.k < m:
            raise ValueError("need k < m <= system size")
        return m


@dataclass(frozen=True)
class EigenPair:
    """One computed eigenpair of the block system.

    ``omega`` is the principal square root of ``omega_sq`` (Re omega >= 0).
    ``w`` lives on the interior dofs, ``p`` on all dofs; the full eigenvector
    ``[w; p]`` has unit Euclidean norm with its largest-magnitude component
    rotated to the positive real axis.  ``residual`` is the relative residual
    ``|A x - omega^2 B x| / (|A x| + |omega^2| |B x|)``.
    """

    omega_sq: complex
    omega: complex
    w: np.ndarray
    p: np.ndarray
    residual: float
    dof_map: DofMap


def sparse_lu_factor(matrix) -> Factorization:
    """LU-factor a square sparse matrix for repeated solves."""
    matrix = sp.csc_matrix(matrix)
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    try:
        lu = spla.splu(matrix, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularMatrixError(f"sparse LU failed: {exc}") from exc
    # splu can succeed with exact zeros on U's diagonal for some inputs
    if not np.all(np.abs(lu.U.diagonal()) > 0):
        raise SingularMatrixError("sparse LU produced a zero pivot")
    return Factorization(lu=lu, shape=matrix.shape)


_BREAKDOWN_TOL = 1e-12


def _arnoldi_expand(apply, Q: np.ndarray, V, H, C, p: int, m: int):
    """Expand a (thick-restarted) Arnoldi decomposition from dimension p to m.

    On entry columns ``0..p`` of V and the block ``H[:p+1, :p]`` satisfy
    ``T V_p = V_p H_p + V[:, p] H[p, :p] + Q C_p`` with T the operator being
    applied and Q the locked subspace.  For ``p = 0`` this is a plain Arnoldi
    run from the start vector ``V[:, 0]``.  Returns ``(j, broke)`` with the
    achieved dimension j; ``broke`` flags an invariant-subspace breakdown.
    """
    ell = Q.shape[1]
    for j in range(p, m):
        # copy: apply may return (a view of) its input, e.g. for the identity
        w = np.array(apply(V[:, j]), dtype=float, copy=True)
        # Gram-Schmidt against the locked subspace, then the current basis,
        # with one full reorthogonalization pass for stability
        for _ in range(2):
            if ell:
                c = Q.T @ w
                C[:, j] += c
                w -= Q @ c
            for i in range(j + 1):
                c = V[:, i] @ w
                H[i, j] += c
                w -= c * V[:, i]
        hnext = np.linalg.norm(w)
        H[j + 1, j] = hnext
        if hnext <= _BREAKDOWN_TOL:
            return j + 1, True
        V[:, j + 1] = w / hnext
    return m, False


def _select_dominant(theta: np.ndarray, k: int):
    """Indices of the top-k |theta|, extended to keep conjugate pairs whole."""
    order = np.argsort(-np.abs(theta), kind="stable")
    take = min(k, len(theta))
    if 0 < take < len(theta):
        prev, nxt = theta[order[take - 1]], theta[order[take]]
        if abs(nxt - np.conj(prev)) <= 1e-12 * max(1.0, abs(prev)):
            take += 1
    return order[:take]


class _DeflationSpace:
    """Locked invariant subspace: T Q = Q R with orthonormal Q."""

    def __init__(self, n: int):
        self.Q = np.zeros((n, 0))
        self.R = np.zeros((0, 0))

    @property
    def dim(self) -> int:
        return self.Q.shape[1]

    def lock(self, V: np.ndarray, H: np.ndarray, C: np.ndarray) -> None:
        ell, j = self.R.shape[0], V.shape[1]
        R = np.zeros((ell + j, ell + j))
        R[:ell, :ell] = self.R
        R[:ell, ell:] = C
        R[ell:, ell:] = H
        self.Q = np.hstack([self.Q, V])
        self.R = R

    def eigenpairs(self):
        if self.dim == 0:
            return []
        theta, S = np.linalg.eig(self.R)
        return [(theta[i], self.Q @ S[:, i]) for i in range(len(theta))]

    def recover(self, theta: complex, y: np.ndarray, V: np.ndarray, C: np.ndarray):
        """True eigenvector of T from a Ritz vector of the deflated operator."""
        x = V @ y
        if self.dim:
            # T (V y + Q z) = theta (...) requires (theta I - R) z = C y
            z = np.linalg.solve(theta * np.eye(self.dim) - self.R, C @ y)
            x = x + self.Q @ z
        return x


def _fresh_start(n: int, seed: int, Q: np.ndarray) -> np.ndarray:
    """Deterministic start vector, orthogonalized against the locked space."""
    for s in range(seed, seed + n + 2):
        if s == 0:
            v = np.ones(n)
        else:
            v = np.cos(s * np.arange(1, n + 1, dtype=float))
        if Q.shape[1]:
            v = v - Q @ (Q.T @ v)
            v = v - Q @ (Q.T @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            return v / nrm
    raise ConvergenceError("could not build a start vector outside the locked space", [])


def _thick_restart(V, H, C, m: int, k: int):
    """Compress the decomposition onto the dominant Ritz subspace.

    Computes a sorted real Schur form of ``H[:m, :m]`` keeping (at least) the
    k largest-|theta| eigenvalues, and rewrites V, H, C in place so that the
    decomposition has dimension ``p`` with the residual vector in column p.
    Returns p (0 if the compression failed and a cold start is needed).
    """
    theta = np.linalg.eigvals(H[:m, :m])
    order = np.argsort(-np.abs(theta), kind="stable")
    take = min(k, m - 1)
    threshold = abs(theta[order[take - 1]])
    S, U, sdim = sla.schur(
        H[:m, :m],
        output="real",
        sort=lambda re, im: np.hypot(re, im) >= threshold * (1.0 - 1e-12),
    )
    p = int(sdim)
    if p >= m:
        # everything was selected; drop the trailing part without splitting
        # a 2x2 (conjugate-pair) diagonal block
        p = m - 1
        if p > 0 and S[p, p - 1] != 0.0:
            p -= 1
    if p < 1:
        return 0
    hlast = H[m, m - 1]
    V[:, :p] = V[:, :m] @ U[:, :p]
    V[:, p] = V[:, m]
    if C.shape[0]:
        C[:, :p] = C[:, :m] @ U[:, :p]
        C[:, p:] = 0.0
    H[:, :] = 0.0
    H[:p, :p] = S[:p, :p]
    H[p, :p] = hlast * U[m - 1, :p]
    return p


def arnoldi_dominant(apply, n: int, opts: SolverOptions):
    """Dominant eigenpairs of a real linear operator by restarted Arnoldi.

    Starts from the deterministic all-ones vector and restarts thickly: each
    cycle compresses the Krylov decomposition onto its dominant Ritz subspace
    (real Schur form) and expands it again.  Invariant subspaces hit by exact
    breakdown are locked (Schur-style deflation) and the iteration continues
    with a fresh deterministic start vector, so rank-deficient or
    symmetry-decoupled operators still yield all dominant eigenvalues.
    Returns a list of ``(theta, eigenvector)`` sorted by descending |theta|.
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    m = opts.krylov_dim(n)
    locked = _DeflationSpace(n)
    seed = 1
    best = None
    stagnant = 0
    zero_locks = 0
    restart = 0
    p = 0
    V = H = C = None

    def cold_state(v0):
        Vn = np.zeros((n, m + 1))
        Hn = np.zeros((m + 1, m))
        Cn = np.zeros((locked.dim, m))
        Vn[:, 0] = v0
        return Vn, Hn, Cn

    V, H, C = cold_state(np.ones(n) / np.sqrt(n))
    while restart <= opts.max_restarts:
        if n - locked.dim < 1:
            break
        m_eff = min(m, n - locked.dim)
        if p >= m_eff:  # no room left to expand against the locked space
            V, H, C = cold_state(_fresh_start(n, seed, locked.Q))
            p = 0
            seed += 1
            m_eff = min(m, n - locked.dim)
        j, broke = _arnoldi_expand(apply, locked.Q, V, H, C, p, m_eff)
        if broke:
            Hj = H[:j, :j]
            locked.lock(V[:, :j], Hj, C[:, :j])
            block_thetas = np.linalg.eigvals(Hj)
            if np.all(np.abs(block_thetas) < opts.theta_cutoff):
                zero_locks += 1
            else:
                zero_locks = 0
            n_useful = sum(
                1 for t in np.linalg.eigvals(locked.R) if abs(t) >= opts.theta_cutoff
            )
            if n_useful >= opts.k or zero_locks >= 3 or locked.dim >= n:
                break
            V, H, C = cold_state(_fresh_start(n, seed, locked.Q))
            p = 0
            seed += 1
            restart += 1
            continue
        # Ritz extraction from the deflated Krylov block
        theta, Y = np.linalg.eig(H[:j, :j])
        res = np.abs(H[j, j - 1]) * np.abs(Y[j - 1, :])
        locked_pairs = locked.eigenpairs()
        all_theta = np.concatenate([[t for t, _ in locked_pairs], theta])
        sel = _select_dominant(all_theta, opts.k)
        wanted_ritz = [i - len(locked_pairs) for i in sel if i >= len(locked_pairs)]
        scale = np.maximum(np.abs(theta[wanted_ritz]), np.finfo(float).tiny)
        worst = float(np.max(res[wanted_ritz] / scale)) if wanted_ritz else 0.0
        if worst <= opts.tol:
            pairs = []
            for i in sel:
                if i < len(locked_pairs):
                    t, x = locked_pairs[i]
                else:
                    ri = i - len(locked_pairs)
                    t = theta[ri]
                    x = locked.recover(t, Y[:, ri], V[:, :j], C[:, :j])
                pairs.append((complex(t), x / np.linalg.norm(x)))
            pairs.sort(key=lambda pr: -abs(pr[0]))
            return pairs
        if best is None or worst < 0.9 * best:
            best = worst
            stagnant = 0
        else:
            stagnant += 1
        if stagnant >= 10:
            # deterministic cold restart to escape stagnation
            V, H, C = cold_state(_fresh_start(n, seed, locked.Q))
            p = 0
            seed += 1
            stagnant = 0
        else:
            p = _thick_restart(V, H, C, j, opts.k)
            if p == 0:
                V, H, C = cold_state(_fresh_start(n, seed, locked.Q))
                seed += 1
        restart += 1
    else:
        raise ConvergenceError(
            f"Arnoldi did not converge after {opts.max_restarts} restarts "
            f"(best residual {best:.3e})",
            residuals=best,
        )
    # exhausted the operator through locking: report the locked spectrum
    pairs = [
        (complex(t), x / np.linalg.norm(x)) for t, x in locked.eigenpairs()
    ]
    pairs.sort(key=lambda pr: -abs(pr[0]))
    sel = _select_dominant(np.array([pr[0] for pr in pairs]), opts.k)
    return [pairs[i] for i in sorted(sel, key=lambda i: -abs(pairs[i][0]))]


def _normalize_phase(x: np.ndarray) -> np.ndarray:
    x = x / np.linalg.norm(x)
    i = int(np.argmax(np.abs(x)))
    phase = x[i] / abs(x[i])
    return x * np.conj(phase)


def _sort_key(omega_sq: complex):
    # ascending |omega^2|; negative-imaginary conjugate representative first
    return (abs(omega_sq), omega_sq.imag, omega_sq.real)


def solve_transmission_eigs(system: BlockSystem, opts: SolverOptions):
    """Smallest-|omega^2| eigenpairs of the assembled block system.

    Returns EigenPair objects sorted by ascending ``|omega^2|`` with the
    negative-imaginary member of each conjugate pair first.
    """
    fact = system.factorization()
    Bmat = system.B

    def apply(x):
        return fact.solve(Bmat @ x)

    pairs = arnoldi_dominant(apply, system.size, opts)
    out = []
    for theta, x in pairs:
        if abs(theta) < opts.theta_cutoff:
            continue
        omega_sq = 1.0 / theta
        x = _normalize_phase(x.astype(complex))
        Ax = system.A @ x
        Bx = Bmat @ x
        residual = np.linalg.norm(Ax - omega_sq * Bx) / (
            np.linalg.norm(Ax) + abs(omega_sq) * np.linalg.norm(Bx)
        )
        omega = np.sqrt(complex(omega_sq))
        if omega.real < 0:
            omega = -omega
        out.append(
            EigenPair(
                omega_sq=complex(omega_sq),
                omega=complex(omega),
                w=x[: system.n_w],
                p=x[system.n_w :],
                residual=float(residual),
                dof_map=system.dof_map,
            )
        )
    out.sort(key=lambda e: _sort_key(e.omega_sq))
    return _truncate_pairwise(out, opts.k)


def _truncate_pairwise(pairs, k: int):
    """Keep the k smallest eigenpairs without splitting conjugate pairs.

    Complex conjugate partners are taken or skipped together so the returned
    multiset stays closed under conjugation.
    """
    selected = []
    used = set()
    for i, e in enumerate(pairs):
        if len(selected) >= k:
            break
        if i in used:
            continue
        v = e.omega_sq
        if abs(v.imag) <= 1e-8 * abs(v):
            selected.append(e)
            continue
        partner = None
        best = np.inf
        for j in range(i + 1, len(pairs)):
            if j in used:
                continue
            d = abs(np.conj(v) - pairs[j].omega_sq)
            if d < best:
                best, partner = d, j
        if partner is not None and best <= 1e-6 * abs(v):
            used.add(partner)
            if len(selected) + 2 <= k:
                selected.append(e)
                selected.append(pairs[partner])
            # else: no room for the full pair; skip both members
        else:
            selected.append(e)  # unpaired complex value (partner unconverged)
    selected.sort(key=lambda e: _sort_key(e.omega_sq))
    return selected


def dense_reference_eigs(system: BlockSystem, theta_cutoff: float = 1e-10):
    """All finite eigenvalues of a small system by a dense eigensolver.

    Forms ``A^{-1} B`` densely and computes the full spectrum (Hessenberg
    reduction plus shifted QR, as provided by LAPACK).  Guarded to systems of
    size <= 2000.
    """
    if system.size > 2000:
        raise ValueError("dense reference limited to systems of size <= 2000")
    A = system.A.toarray()
    B = system.B.toarray()
    T = np.linalg.solve(A, B)
    theta, X = np.linalg.eig(T)
    keep = np.abs(theta) > theta_cutoff
    omega_sq = 1.0 / theta[keep]
    vectors = X[:, keep]
    order = sorted(range(len(omega_sq)), key=lambda i: _sort_key(omega_sq[i]))
    return [(complex(omega_sq[i]), vectors[:, i]) for i in order]


def reconstruct_uv(pair: EigenPair):
    """Recover the physical displacement fields (u, v) on all dofs.

    ``u = w - p / omega^2`` with ``w`` extended by zero to boundary dofs, and
    ``v = -p / omega^2``; the identity ``u - v = w`` holds exactly.
    """
    if pair.omega_sq == 0:
        raise ValueError("omega^2 must be nonzero to reconstruct (u, v)")
    w_full = np.zeros(pair.dof_map.n_all, dtype=complex)
    w_full[pair.dof_map.interior_to_all] = pair.w
    v = -pair.p / pair.omega_sq
    u = w_full + v
    return u, v


def export_eigenpair(pair: EigenPair, mesh, path) -> None:
    """Write one eigenpair in the plot-ready text format.

    Header ``omega_re omega_im residual``, then per vertex
    ``x y u1_re u1_im u2_re u2_im`` for the reconstructed field u.
    """
    u, _ = reconstruct_uv(pair)
    u1 = u[0::2]
    u2 = u[1::2]
    with open(path, "w") as f:
        f.write(f"{pair.omega.real:.17g} {pair.omega.imag:.17g} {pair.residual:.6g}\n")
        for (x, y), a, b in zip(mesh.vertices, u1, u2):
            f.write(
                f"{x:.17g} {y:.17g} {a.real:.17g} {a.imag:.17g} "
                f"{b.real:.17g} {b.imag:.17g}\n"
            )
