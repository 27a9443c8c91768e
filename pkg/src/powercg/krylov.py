"""Krylov iterations minimizing spectral-power-weighted error norms.

The degree-N iterate minimizes ||A^{theta/2}(h - P h)|| over the affine
Krylov space f0 + span{R_0, A R_0, ..., A^{N-1} R_0}, where P projects onto
the solution set of A f = g and R = A f - g (note the sign; the classic CG
literature negates it). theta = 1 is plain CG. Matrix-free evaluation works
for integer theta >= 1 through Lanczos tridiagonal powers; everything else
needs spectral access.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linop import KernelComponentError, SpectralAccessError, fractional_apply

# Lanczos/CG breakdown: directions with curvature below this times the
# operator norm signal an exhausted (invariant) Krylov subspace
BREAKDOWN_REL = 1e-13


class ConsistencyError(ValueError):
    """Manufactured solution fails to reproduce the datum."""


class InverseProblem:
    """Operator, datum, initial guess, and (optionally) a known solution.

    A supplied known_solution must reproduce g: ||A f - g|| is checked
    against consistency_tol * (||A||_est ||f|| + ||g||) at construction and
    the constructor raises when the gate fails. On spectral operators g must
    also be kernel-orthogonal (the datum must be attainable). Both
    tolerances are constructor parameters; the defaults suit problems built
    by exact arithmetic, discretized surrogates pass their own gate values
    (see runs.build_test_case).
    """

    def __init__(self, operator, g, f0=None, known_solution=None,
                 consistency_tol=1e-10, kernel_tol=1e-10, notes=None):
        self.operator = operator
        n = operator.dimension
        g = np.asarray(g, dtype=float)
        if g.shape != (n,):
            raise ValueError(f"g: expected shape ({n},), got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("g contains non-finite entries")
        self.g = g
        if f0 is None:
            f0 = np.zeros(n)
        f0 = np.asarray(f0, dtype=float)
        if f0.shape != (n,):
            raise ValueError(f"f0: expected shape ({n},), got {f0.shape}")
        self.f0 = f0
        self.known_solution = None
        self.consistency_tol = consistency_tol
        self.kernel_tol = kernel_tol
        self.notes = dict(notes) if notes else {}

        if operator.spectral:
            cg = operator.coefficients(g)
            ker = operator.kernel_mask()
            knorm = float(np.linalg.norm(cg[ker]))
            gnorm = float(np.linalg.norm(g))
            if knorm > kernel_tol * max(gnorm, 1e-300):
                raise KernelComponentError(
                    f"datum has kernel component of norm {knorm:.6e}, "
                    f"allowed {kernel_tol:g} * ||g|| = {kernel_tol * gnorm:.6e}")
        if known_solution is not None:
            f = np.asarray(known_solution, dtype=float)
            if f.shape != (n,):
                raise ValueError(
                    f"known_solution: expected shape ({n},), got {f.shape}")
            resid = float(np.linalg.norm(operator.apply(f) - g))
            scale = (operator.norm_estimate() * float(np.linalg.norm(f))
                     + float(np.linalg.norm(g)))
            allowed = consistency_tol * max(scale, 1e-300)
            if resid > allowed:
                raise ConsistencyError(
                    f"known solution fails: ||A f - g|| = {resid:.6e} exceeds "
                    f"{consistency_tol:g} * (||A|| ||f|| + ||g||) = {allowed:.6e}")
            self.known_solution = f

    @property
    def dimension(self):
        return self.operator.dimension

    def residual0(self):
        return self.operator.apply(self.f0) - self.g

    # spectral helpers -----------------------------------------------------

    def solution_coefficients(self):
        """Coefficients of the minimal-norm solution (kernel part zero)."""
        op = self.operator
        cg = op.coefficients(self.g)
        lam = op.eigenvalues()
        ker = op.kernel_mask()
        sol = np.zeros_like(cg)
        sol[~ker] = cg[~ker] / lam[~ker]
        return sol

    def error_coefficients(self, x):
        """Coefficients of x minus its projection onto the solution set.

        The projection keeps x's own kernel component, so the kernel entries
        are exactly zero and the rest is coeff(x) - coeff(g)/lambda.
        """
        op = self.operator
        cx = op.coefficients(np.asarray(x))
        e = cx - op.coefficients(self.g) / np.where(op.kernel_mask(), 1.0,
                                                    op.eigenvalues())
        e[op.kernel_mask()] = 0.0
        return e


@dataclass
class IterateHistory:
    theta: float
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    terminated: bool = False
    reason: str = None

    def __len__(self):
        return len(self.iterates)

    @property
    def last(self):
        return self.iterates[-1]


@dataclass
class JacobiMatrix:
    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.betas = np.asarray(self.betas, dtype=float)
        if self.betas.size and self.betas.min() <= 0:
            raise ValueError(f"off-diagonal must be positive, min = {self.betas.min()}")

    @property
    def order(self):
        return self.alphas.size

    def dense(self):
        T = np.diag(self.alphas)
        if self.betas.size:
            T += np.diag(self.betas, 1) + np.diag(self.betas, -1)
        return T


def lanczos(op, b, n_steps):
    """n_steps of the symmetric Lanczos recurrence from b, with two-pass full
    reorthogonalization. Returns (JacobiMatrix, V, breakdown) where V's
    columns are the orthonormal Krylov basis; breakdown is set when an
    invariant subspace is hit early (the tridiagonal is then truncated)."""
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ValueError("lanczos start vector is zero")
    if n_steps > op.dimension:
        raise ValueError(f"n_steps {n_steps} exceeds dimension {op.dimension}")
    tol = BREAKDOWN_REL * max(op.norm_estimate(), 1e-300)
    V = np.empty((op.dimension, n_steps))
    alphas = []
    betas = []
    q = b / nb
    V[:, 0] = q
    breakdown = False
    for k in range(n_steps):
        v = op.apply(q)
        if k > 0:
            v = v - betas[k - 1] * V[:, k - 1]
        a = float(np.dot(v, q))
        v = v - a * q
        for _ in range(2):
            v = v - V[:, :k + 1] @ (V[:, :k + 1].T @ v)
        alphas.append(a)
        if k == n_steps - 1:
            break
        beta = float(np.linalg.norm(v))
        if beta <= tol:
            breakdown = True
            break
        betas.append(beta)
        q = v / beta
        V[:, k + 1] = q
    k = len(alphas)
    return JacobiMatrix(np.array(alphas), np.array(betas)), V[:, :k].copy(), breakdown


def run_cg(problem, n_max, callback=None, reorthogonalize=True,
           tol_rel=1e-12, tol_abs=0.0):
    """Conjugate gradients from f0, residual sign R = A f - g.

    Residuals are reorthogonalized against all previous ones by default;
    at condition numbers around 1e6 plain CG iterates drift from the exact
    Krylov minimizer by order one while the reorthogonalized ones stay at
    1e-12 (cost O(N^2 n), harmless here). callback(N, f_N, R_N) fires for
    every recorded iterate including N = 0. Stops early when
    ||R|| <= tol_abs + tol_rel ||g|| or on curvature breakdown.
    """
    if n_max > problem.dimension:
        raise ValueError(
            f"n_max {n_max} exceeds dimension {problem.dimension}")
    op = problem.operator
    f = problem.f0.astype(float).copy()
    R = op.apply(f) - problem.g
    hist = IterateHistory(theta=1.0)
    hist.iterates.append(f.copy())
    hist.residuals.append(R.copy())
    if callback is not None:
        callback(0, f.copy(), R.copy())
    threshold = tol_abs + tol_rel * float(np.linalg.norm(problem.g))
    crv_tol = BREAKDOWN_REL * max(op.norm_estimate(), 1e-300)
    r = -R
    rr = float(np.dot(r, r))
    if np.sqrt(rr) <= threshold:
        hist.terminated = True
        hist.reason = "converged at N=0"
        return hist
    p = r.copy()
    basis = [r / np.sqrt(rr)]
    for N in range(1, n_max + 1):
        Ap = op.apply(p)
        pAp = float(np.dot(p, Ap))
        if pAp <= crv_tol * float(np.dot(p, p)):
            hist.terminated = True
            hist.reason = f"breakdown at N={N - 1} (curvature {pAp:.3e})"
            return hist
        a = rr / pAp
        f = f + a * p
        r_new = r - a * Ap
        if reorthogonalize:
            B = np.stack(basis, axis=1)
            for _ in range(2):
                r_new = r_new - B @ (B.T @ r_new)
        rr_new = float(np.dot(r_new, r_new))
        hist.iterates.append(f.copy())
        hist.residuals.append(-r_new)
        if callback is not None:
            callback(N, f.copy(), -r_new)
        if np.sqrt(rr_new) <= threshold:
            hist.terminated = True
            hist.reason = f"converged at N={N}"
            return hist
        if reorthogonalize:
            basis.append(r_new / np.sqrt(rr_new))
        p = r_new + (rr_new / rr) * p
        r = r_new
        rr = rr_new
    return hist


def _tridiag_powers(T, s_max):
    """T^0 .. T^{s_max} as dense matrices."""
    n = T.shape[0]
    out = [np.eye(n)]
    for _ in range(s_max):
        out.append(out[-1] @ T)
    return out


def theta_iterate(problem, theta, N):
    """Degree-N minimizer of the A^{theta/2}-weighted error, matrix-free for
    integer theta >= 1, spectral for the rest.

    Builds N + ceil(theta) Lanczos steps so that every tridiagonal power
    touching the leading N columns is exact, then solves the projected
    problem in a square-rooted form (rectangular least squares; the normal
    equations would square the condition number). Early Lanczos breakdown
    saturates the Krylov space; the iterate returned is then the minimizer
    of the saturated space, which equals the requested one.
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if theta < 1 and not problem.operator.spectral:
        raise SpectralAccessError(
            f"theta = {theta} < 1 needs spectral access")
    if N > problem.dimension:
        raise ValueError(f"N {N} exceeds dimension {problem.dimension}")
    if N == 0:
        return problem.f0.copy()
    R0 = problem.residual0()
    nR0 = float(np.linalg.norm(R0))
    if nR0 == 0.0:
        return problem.f0.copy()
    op = problem.operator
    if float(theta) != int(theta) or theta < 1:
        # theta = 0 must take the spectral route too: the tridiagonal
        # branches index powers of T from theta >= 1
        if not op.spectral:
            raise SpectralAccessError(
                f"non-integer theta = {theta} needs spectral access")
        return _theta_iterate_fractional(problem, float(theta), N, R0)
    theta = int(theta)
    m = min(N + theta, problem.dimension)
    T_jac, V, _ = lanczos(op, R0, m)
    k = T_jac.order
    Nc = min(N, k)
    T = T_jac.dense()
    if theta == 1:
        # projected system T_N y = -||R0|| e1, the CG tridiagonal
        rhs = np.zeros(Nc)
        rhs[0] = -nR0
        y = np.linalg.solve(T[:Nc, :Nc], rhs)
    elif theta % 2 == 0:
        # ||A^s e||: coordinates of A^s V_N and A^{s-1} R0 in the long basis
        s = theta // 2
        P = _tridiag_powers(T, s)
        B = P[s][:, :Nc]
        a = nR0 * P[s - 1][:, 0]
        y, *_ = np.linalg.lstsq(B, -a, rcond=None)
    else:
        # odd theta = 2s+1: objective c^T T c with c the A^s-image
        # coordinates; T = L L^T is positive definite on the Krylov space
        # (A >= 0 and R0 in ran A keep the Ritz values positive)
        s = (theta - 1) // 2
        P = _tridiag_powers(T, s)
        Lc = _chol_psd(T)
        B = Lc.T @ P[s][:, :Nc]
        a = nR0 * (Lc.T @ P[s - 1][:, 0])
        y, *_ = np.linalg.lstsq(B, -a, rcond=None)
    return problem.f0 + V[:, :Nc] @ y


def _chol_psd(T):
    try:
        return np.linalg.cholesky(T)
    except np.linalg.LinAlgError:
        # roundoff pushed a tiny Ritz value below zero; fall back to the
        # symmetric square root with negatives clipped
        vals, vecs = np.linalg.eigh(T)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _theta_iterate_fractional(problem, theta, N, R0):
    op = problem.operator
    T_jac, V, _ = lanczos(op, R0, N)
    k = T_jac.order
    cols = np.empty((problem.dimension, k))
    for i in range(k):
        cols[:, i] = fractional_apply(op, theta / 2.0, V[:, i])
    target = fractional_apply(op, (theta - 2.0) / 2.0, R0)
    y, *_ = np.linalg.lstsq(cols, -target, rcond=None)
    return problem.f0 + V @ y


def _weighted_residual_values(lam, w, N):
    """Values at the atoms of the w-weighted least-squares minimizer of
    ||p||_w over polynomials with p(0) = 1, deg p <= N.

    p = 1 - (projection of 1 onto span{lambda q(lambda)}); the span is built
    by a multiplication ladder with two-pass Gram-Schmidt in the w-inner
    product. The ladder degenerates exactly when the weight carries fewer
    than N atoms; the minimizer then already vanishes w-a.e. and the build
    stops. Returns (p values, degrees actually built)."""
    m = lam.size
    ones = np.ones(m)
    wnorm0 = np.sqrt(float(np.dot(w, ones)))
    if wnorm0 == 0.0:
        return ones, 0
    p = ones.copy()
    Q = np.empty((m, N))
    prev = ones / wnorm0
    built = 0
    lmax = max(float(lam.max()), 1e-300)
    for _ in range(N):
        v = lam * prev
        for _ in range(2):
            if built:
                v = v - Q[:, :built] @ ((w * v) @ Q[:, :built])
        nv = np.sqrt(float(np.dot(w * v, v)))
        if nv <= 1e-15 * lmax:
            break
        q = v / nv
        Q[:, built] = q
        built += 1
        p = p - float(np.dot(w * q, ones)) * q
        prev = q
    return p, built


def theta_iterate_spectral(problem, theta, N):
    """Same minimizer computed in the eigenbasis, valid for any theta >= 0.

    The objective is a weighted polynomial least-squares problem on the
    eigenvalue atoms with weights lambda^theta |e0|^2; the optimal residual
    polynomial evaluated at the atoms transports e0 to e_N directly.
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    op = problem.operator
    if not op.spectral:
        raise SpectralAccessError("theta_iterate_spectral needs spectral access")
    if N > problem.dimension:
        raise ValueError(f"N {N} exceeds dimension {problem.dimension}")
    if N == 0:
        return problem.f0.copy()
    e0 = problem.error_coefficients(problem.f0)
    lam = np.asarray(op.eigenvalues(), dtype=float)
    ker = op.kernel_mask()
    w = np.zeros(op.dimension)
    live = ~ker
    w[live] = lam[live] ** theta if theta > 0 else 1.0
    w = w * np.abs(e0) ** 2
    p, _ = _weighted_residual_values(lam, w, N)
    c = op.coefficients(problem.f0) + (p - 1.0) * e0
    out = op.from_coefficients(c)
    if np.isrealobj(problem.f0) and np.iscomplexobj(out):
        out = out.real.copy()
    return out


def brute_force_iterate(problem, theta, N, dps=None):
    """Monomial-basis oracle in extended precision (test use only).

    Diagonalizes dense operators once, forms the weighted monomial normal
    equations exactly at dps digits, and solves by Cholesky with a shrinking
    fallback when the Krylov space saturates. Capped at dimension 64; the
    float64 monomial Gram already fails near degree 8, which is the reason
    this oracle exists. The default precision scales with N and the spectral
    range: the Gram condition grows like (lambda_max / lambda_min)^{2N}, and
    a fixed dps would turn its Cholesky failure into a silent fallback onto
    the previous degree.
    """
    import mpmath as mp

    if problem.dimension > 64:
        raise ValueError("brute_force_iterate is capped at dimension 64")
    if N == 0:
        return problem.f0.copy()
    op = problem.operator
    n = op.dimension
    if dps is None:
        if op.spectral:
            ev = np.abs(np.asarray(op.eigenvalues(), dtype=float))
        else:
            ev = np.abs(np.linalg.eigvalsh(op.matrix))
        pos = ev[ev > 1e-12 * max(float(ev.max()), 1e-300)]
        span = float(pos.max() / pos.min()) if pos.size else 1.0
        dps = max(50, int(2 * N * np.log10(max(span, 10.0)) + 80))
    with mp.workdps(dps):
        if op.spectral:
            lam_np = np.asarray(op.eigenvalues(), dtype=float)
            ker = op.kernel_mask()
            e0c = problem.error_coefficients(problem.f0)
            lam = [mp.mpf(float(lam_np[i])) for i in range(n)]
            e0_re = [mp.mpf(float(np.real(e0c[i]))) for i in range(n)]
            e0_im = [mp.mpf(float(np.imag(e0c[i]))) for i in range(n)]
            U = None
        else:
            M = mp.matrix([[mp.mpf(float(op.matrix[i, j])) for j in range(n)]
                           for i in range(n)])
            E, U = mp.eigsy(M)
            lam = [E[i] for i in range(n)]
            scale = max(abs(v) for v in lam)
            ker = np.array([abs(lam[i]) <= 1e-12 * scale for i in range(n)])
            cf0 = U.T * mp.matrix([mp.mpf(float(v)) for v in problem.f0])
            cg = U.T * mp.matrix([mp.mpf(float(v)) for v in problem.g])
            e0_re = [mp.mpf(0) if ker[i] else cf0[i] - cg[i] / lam[i]
                     for i in range(n)]
            e0_im = [mp.mpf(0)] * n
        w = [mp.mpf(0) if ker[i]
             else lam[i] ** theta * (e0_re[i] ** 2 + e0_im[i] ** 2)
             for i in range(n)]
        live = [i for i in range(n) if w[i] > 0]
        mom = [sum(w[i] * lam[i] ** k for i in live)
               for k in range(2 * N + 1)]

        def solve_block(nn):
            G = mp.matrix(nn, nn)
            for i in range(nn):
                for j in range(nn):
                    G[i, j] = mom[i + j + 2]
            rhs = mp.matrix(nn, 1)
            for i in range(nn):
                rhs[i] = -mom[i + 1]
            return mp.cholesky_solve(G, rhs)

        coeff = None
        for nn in range(N, 0, -1):
            try:
                coeff = solve_block(nn)
                break
            except Exception:
                continue
        if coeff is None:
            return problem.f0.copy()
        deg = coeff.rows

        def pval(i):
            acc = mp.mpf(1)
            pw = mp.mpf(1)
            for k in range(deg):
                pw = pw * lam[i]
                acc += coeff[k] * pw
            return acc

        if op.spectral:
            pvals = np.array([float(pval(i)) if not ker[i] else 1.0
                              for i in range(n)])
            cN = op.coefficients(problem.f0) + (pvals - 1.0) * e0c
            out = op.from_coefficients(cN)
            if np.isrealobj(problem.f0) and np.iscomplexobj(out):
                out = out.real.copy()
            return out
        delta = mp.matrix([(pval(i) - 1) * e0_re[i] for i in range(n)])
        dvec = U * delta
        return problem.f0 + np.array([float(dvec[i]) for i in range(n)])


def brute_force_objective(problem, theta, x, dps=50):
    """||A^{theta/2}(x - P x)||^2 at dps digits (test oracle)."""
    import mpmath as mp

    op = problem.operator
    if not op.spectral:
        raise SpectralAccessError("objective oracle needs spectral access")
    with mp.workdps(dps):
        lam = op.eigenvalues()
        e = problem.error_coefficients(x)
        ker = op.kernel_mask()
        total = mp.mpf(0)
        for i in range(op.dimension):
            if ker[i]:
                continue
            mag = mp.mpf(complex(e[i]).real) ** 2 + mp.mpf(complex(e[i]).imag) ** 2
            total += mp.mpf(float(lam[i])) ** theta * mag
        return float(total)
