"""Self-adjoint non-negative operators with optional spectral access.

Three concrete operators: dense symmetric matrices (apply-only), diagonal
matrices (trivial spectral access), and periodic constant-coefficient
differential surrogates diagonalized by the FFT. Fractional powers exist
only where spectral access does; negative powers additionally require the
input to stay out of the kernel.
"""

import numpy as np

# eigenvalues at or below KERNEL_REL * ||A|| are treated as kernel
KERNEL_REL = 1e-12
# fractional_apply with t < 0 refuses kernel components above this fraction of ||x||
NEG_POWER_KERNEL_REL = 1e-10


class DimensionMismatchError(ValueError):
    pass


class KernelComponentError(ValueError):
    pass


class SpectralAccessError(TypeError):
    """Raised when an operation needs eigendata the operator cannot provide."""


def _as_vector(x, dim, who):
    x = np.asarray(x)
    if x.shape != (dim,):
        raise DimensionMismatchError(
            f"{who}: expected shape ({dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{who}: vector contains non-finite entries")
    return x


class SelfAdjointOperator:
    """Base class. Subclasses set .dimension and implement _apply."""

    spectral = False
    dimension = None

    def _apply(self, x):
        raise NotImplementedError

    def apply(self, x):
        x = _as_vector(x, self.dimension, type(self).__name__ + ".apply")
        return self._apply(x)

    def norm_estimate(self):
        """Upper spectral edge, within about 1 percent."""
        raise NotImplementedError

    # spectral-only interface
    def eigenvalues(self):
        raise SpectralAccessError(
            f"{type(self).__name__} has no spectral access")

    def coefficients(self, x):
        raise SpectralAccessError(
            f"{type(self).__name__} has no spectral access")

    def from_coefficients(self, c):
        raise SpectralAccessError(
            f"{type(self).__name__} has no spectral access")

    def kernel_mask(self):
        """Boolean mask of eigenvalues treated as zero."""
        lam = self.eigenvalues()
        return lam <= KERNEL_REL * self.norm_estimate()


class MatrixOperator(SelfAdjointOperator):
    """Dense symmetric non-negative matrix, apply-only access."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise ValueError("matrix is not symmetric")
        self.matrix = 0.5 * (m + m.T)
        self.dimension = m.shape[0]
        self._norm = None

    def _apply(self, x):
        return self.matrix @ x

    def norm_estimate(self):
        # power iteration; deterministic start avoids seeding questions
        if self._norm is None:
            n = self.dimension
            v = np.ones(n) + np.arange(n) / (7.0 * n)
            v /= np.linalg.norm(v)
            est = 0.0
            for _ in range(200):
                w = self.matrix @ v
                nw = np.linalg.norm(w)
                if nw == 0.0:
                    est = 0.0
                    break
                v = w / nw
                if abs(nw - est) <= 1e-4 * nw:
                    est = nw
                    break
                est = nw
            self._norm = float(est)
        return self._norm


class DiagonalOperator(SelfAdjointOperator):
    """Multiplication by a fixed non-negative diagonal.

    Eigenvalues must come in ascending order; that is the canonical form
    everything downstream assumes. Coefficients coincide with coordinates.
    """

    spectral = True

    def __init__(self, eigenvalues):
        lam = np.asarray(eigenvalues, dtype=float)
        if lam.ndim != 1:
            raise ValueError("eigenvalues must be a 1-d array")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if np.any(lam < 0):
            raise ValueError(f"negative eigenvalue: min = {lam.min()}")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        self._lam = lam
        self.dimension = lam.size

    def _apply(self, x):
        return self._lam * x

    def norm_estimate(self):
        return float(self._lam[-1]) if self.dimension else 0.0

    def eigenvalues(self):
        return self._lam

    def coefficients(self, x):
        return _as_vector(x, self.dimension, "DiagonalOperator.coefficients")

    def from_coefficients(self, c):
        c = np.asarray(c)
        if c.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"from_coefficients: expected ({self.dimension},), got {c.shape}")
        return c


class FourierOperator(SelfAdjointOperator):
    """Constant-coefficient surrogate  -d^2/dx^2 + shift  on [-L, L) periodic.

    n grid points (power of two), unitary DFT gives the spectral basis;
    eigenvalue at DFT index m is (pi m / L)^2 + shift with the usual
    aliased frequency ordering. shift = 0 leaves a one-dimensional kernel
    (the constants); shift = 1 makes the operator strictly positive.
    """

    spectral = True

    def __init__(self, n, L, shift=0.0):
        n = int(n)
        if n <= 0 or (n & (n - 1)) != 0:
            raise ValueError(f"n must be a positive power of two, got {n}")
        if not (L > 0):
            raise ValueError(f"L must be positive, got {L}")
        if shift < 0:
            raise ValueError(f"shift must be non-negative, got {shift}")
        self.n = n
        self.L = float(L)
        self.shift = float(shift)
        self.dimension = n
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * self.L / n)
        self._lam = k * k + self.shift

    def grid(self):
        return -self.L + 2.0 * self.L * np.arange(self.n) / self.n

    def _apply(self, x):
        c = np.fft.fft(x)
        out = np.fft.ifft(self._lam * c)
        return out.real if np.isrealobj(x) else out

    def norm_estimate(self):
        return float(self._lam.max())

    def eigenvalues(self):
        return self._lam

    def coefficients(self, x):
        x = _as_vector(x, self.n, "FourierOperator.coefficients")
        if np.isrealobj(x):
            # real fields need exactly conjugate-symmetric coefficients; a
            # plain fft breaks the symmetry at the roundoff floor and the
            # asymmetric part turns into spurious spectral-measure atoms
            half = np.fft.rfft(x)
            half[0] = half[0].real
            half[-1] = half[-1].real
            c = np.empty(self.n, dtype=complex)
            c[: self.n // 2 + 1] = half
            c[self.n // 2 + 1:] = np.conj(half[1:-1][::-1])
            return c / np.sqrt(self.n)
        return np.fft.fft(x) / np.sqrt(self.n)

    def from_coefficients(self, c):
        c = np.asarray(c)
        if c.shape != (self.n,):
            raise DimensionMismatchError(
                f"from_coefficients: expected ({self.n},), got {c.shape}")
        out = np.fft.ifft(c * np.sqrt(self.n))
        # hermitian-symmetric input comes back real up to roundoff
        if np.abs(out.imag).max() <= 1e-10 * max(1.0, np.abs(out.real).max()):
            return out.real.copy()
        return out


def apply(op, x):
    """A x."""
    return op.apply(x)


def estimate_norm(op):
    """Largest eigenvalue of A, exact for spectral operators."""
    return op.norm_estimate()


def fractional_apply(op, t, x):
    """A^t x through the eigenbasis. Needs spectral access.

    t < 0 inverts on the kernel complement and raises if x carries a kernel
    component above NEG_POWER_KERNEL_REL * ||x||. t = 0 projects onto the
    kernel complement (so fractional powers compose as a semigroup there).
    """
    if not op.spectral:
        raise SpectralAccessError(
            f"fractional_apply needs spectral access, {type(op).__name__} has none")
    x = np.asarray(x)
    real_in = np.isrealobj(x)
    c = op.coefficients(x)
    lam = op.eigenvalues()
    ker = op.kernel_mask()
    if t < 0:
        knorm = np.linalg.norm(c[ker])
        xnorm = np.linalg.norm(x)
        if knorm > NEG_POWER_KERNEL_REL * xnorm:
            raise KernelComponentError(
                f"A^{t} undefined: kernel component norm {knorm:.6e} exceeds "
                f"{NEG_POWER_KERNEL_REL:g} * ||x|| = {NEG_POWER_KERNEL_REL * xnorm:.6e}")
    out = np.zeros_like(c)
    live = ~ker
    if t == 0:
        out[live] = c[live]
    else:
        out[live] = lam[live] ** t * c[live]
    y = op.from_coefficients(out)
    if real_in and np.iscomplexobj(y):
        y = y.real.copy()
    return y
