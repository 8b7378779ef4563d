"""Discrete Fourier analysis on the 2*pi-periodic torus.

Every field in this package is stored by its Fourier coefficients

    c(k) = (2*pi/n) * sum_j f(x_j) * exp(-i*k*x_j),    x_j = 2*pi*j/n,

for k = -(n/2-1), ..., n/2-1, which reproduces the integral
int f(x) exp(-i*k*x) dx exactly for trigonometric polynomials the grid
resolves.  Synthesis is f(x_j) = (1/2pi) * sum_k c(k) exp(i*k*x_j).  The
unpaired Nyquist mode k = -n/2 is dropped on analysis: odd symbols such as
the Hilbert transform's -i*sgn(k) cannot act on it without breaking the
conjugate symmetry of real fields.

Pointwise products go through zero-padded physical space (3/2 padding, the
2/3 rule).  For two in-band factors the retained band is then exact; the
test suite holds it against the literal convolution sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_TWO_PI = 2.0 * np.pi

__all__ = [
    "TorusGrid",
    "SpectralField",
    "MultiplierSymbol",
    "analyze",
    "synthesize",
    "apply_multiplier",
    "compose_multipliers",
    "hilbert",
    "derivative",
    "project",
    "pointwise_product",
    "sobolev_norm",
    "homogeneous_norm",
    "inner_product",
    "commutator_vh",
    "hermitian_defect",
    "linf_norm",
    "regrid",
    "zeros",
    "from_modes",
    "cosine",
    "sine",
]


@dataclass(frozen=True)
class TorusGrid:
    """Equispaced nodes x_j = 2*pi*j/n on [0, 2*pi)."""

    n: int

    def __post_init__(self):
        if self.n % 2 != 0 or self.n < 4:
            raise ValueError(f"grid size must be even and at least 4, got {self.n}")

    @property
    def nodes(self):
        return _nodes(self.n)

    @property
    def modes(self):
        """Retained wavenumbers, -(n/2-1) .. n/2-1 in ascending order."""
        return _modes(self.n)


@lru_cache(maxsize=128)
def _nodes(n):
    x = _TWO_PI * np.arange(n) / n
    x.flags.writeable = False
    return x


@lru_cache(maxsize=128)
def _modes(n):
    k = np.arange(-(n // 2 - 1), n // 2)
    k.flags.writeable = False
    return k


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A field on the torus, held as coefficients over the retained band.

    `coeffs` is ordered by ascending wavenumber and is made read-only on
    construction, so fields can be shared across workers without copies.
    `real_flag` records that the field came from real samples (or from
    operations preserving conjugate symmetry); synthesis then returns a
    real array.
    """

    grid: TorusGrid
    coeffs: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n - 1,):
            raise ValueError(
                f"expected {self.grid.n - 1} coefficients for n={self.grid.n}, got shape {c.shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def coeff(self, k):
        n = self.grid.n
        if not -(n // 2 - 1) <= k <= n // 2 - 1:
            raise ValueError(f"mode {k} outside retained band for n={n}")
        return complex(self.coeffs[k + n // 2 - 1])

    @property
    def mean(self):
        """Average value of the field, coeff(0)/(2*pi)."""
        m = self.coeff(0) / _TWO_PI
        return m.real if self.real_flag else m

    @property
    def bandwidth(self):
        """Largest |k| carrying a strictly nonzero coefficient."""
        idx = np.nonzero(self.coeffs)[0]
        if idx.size == 0:
            return 0
        return int(np.max(np.abs(self.grid.modes[idx])))

    def _binary(self, other, op):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid.n != self.grid.n:
            raise ValueError("grid mismatch")
        return SpectralField(self.grid, op(self.coeffs, other.coeffs),
                             self.real_flag and other.real_flag)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.real_flag)

    def __mul__(self, a):
        if isinstance(a, SpectralField):
            raise TypeError("use pointwise_product for field*field")
        a = complex(a)
        keeps_real = self.real_flag and a.imag == 0.0
        return SpectralField(self.grid, a * self.coeffs, keeps_real)

    __rmul__ = __mul__


def zeros(grid, real=True):
    return SpectralField(grid, np.zeros(grid.n - 1, complex), real)


def from_modes(grid, pairs, real_flag=False):
    """Build a field from a {k: coefficient} mapping."""
    c = np.zeros(grid.n - 1, complex)
    half = grid.n // 2
    for k, v in pairs.items():
        if not -(half - 1) <= k <= half - 1:
            raise ValueError(f"mode {k} outside retained band")
        c[k + half - 1] = v
    return SpectralField(grid, c, real_flag)


def cosine(grid, k, amplitude=1.0):
    """amplitude * cos(k x); coefficients pi*amplitude at +-k."""
    a = np.pi * amplitude
    return from_modes(grid, {k: a, -k: a} if k != 0 else {0: 2 * a}, real_flag=True)


def sine(grid, k, amplitude=1.0):
    a = np.pi * amplitude
    return from_modes(grid, {k: -1j * a, -k: 1j * a}, real_flag=True)


def analyze(grid, samples):
    """Fourier coefficients of nodal samples under the 2*pi/n normalization.

    Exact (to round-off) for trigonometric polynomials with bandwidth
    below n/2.  The Nyquist bin is discarded.  Real input sets `real_flag`.
    """
    samples = np.asarray(samples)
    if samples.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} samples, got shape {samples.shape}")
    real = bool(np.isrealobj(samples))
    full = np.fft.fft(samples) * (_TWO_PI / grid.n)
    half = grid.n // 2
    band = np.concatenate([full[grid.n - (half - 1):], full[:half]])
    return SpectralField(grid, band, real)


def synthesize(field):
    """Nodal values f(x_j) = (1/2pi) sum_k c(k) e^{i k x_j}.

    Returns a real array when `real_flag` is set (the residual imaginary
    part from round-off is dropped), complex otherwise.
    """
    n = field.grid.n
    vals = np.fft.ifft(_full_spectrum(field.coeffs, n, n)) * (n / _TWO_PI)
    if field.real_flag:
        return vals.real
    return vals


def _full_spectrum(coeffs, n, m):
    """Place band coefficients into a length-m FFT layout (m >= n)."""
    half = n // 2
    full = np.zeros(m, complex)
    full[:half] = coeffs[half - 1:]
    full[m - (half - 1):] = coeffs[:half - 1]
    return full


def _band_from_full(full, n):
    half = n // 2
    m = full.shape[0]
    return np.concatenate([full[m - (half - 1):], full[:half]])


@dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """Fourier multiplier A(k) with an order/bound certificate.

    The certificate (1+|k|)^(-order) |A(k)| <= bound is validated on
    construction; it is what turns an application of the symbol into a
    Sobolev bound ||A f||_{H^{s-order}} <= bound * ||f||_{H^s}.
    """

    grid: TorusGrid
    values: np.ndarray
    order: float
    bound: float

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n - 1,):
            raise ValueError("symbol values must cover the retained band")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        w = (1.0 + np.abs(self.grid.modes)) ** (-self.order)
        sup = float(np.max(w * np.abs(v)))
        if not np.isfinite(self.bound) or sup > self.bound * (1.0 + 1e-12):
            raise ValueError(
                f"certificate violated: sup (1+|k|)^-order |A| = {sup} > bound {self.bound}"
            )

    @classmethod
    def from_function(cls, grid, fn, order, bound=None):
        vals = np.array([fn(int(k)) for k in grid.modes], dtype=complex)
        if bound is None:
            w = (1.0 + np.abs(grid.modes)) ** (-order)
            bound = float(np.max(w * np.abs(vals)))
        return cls(grid, vals, order, bound)

    def value(self, k):
        half = self.grid.n // 2
        return complex(self.values[k + half - 1])


def apply_multiplier(sym, field):
    """(A f)^(k) = A(k) f^(k).  Keeps `real_flag` when the symbol is
    conjugate-symmetric, A(-k) = conj(A(k))."""
    if sym.grid.n != field.grid.n:
        raise ValueError("grid mismatch")
    out = sym.values * field.coeffs
    herm = np.max(np.abs(np.conj(sym.values[::-1]) - sym.values)) <= 1e-14 * (
        1.0 + np.max(np.abs(sym.values))
    )
    return SpectralField(field.grid, out, field.real_flag and bool(herm))


def compose_multipliers(a, b):
    """Applying a then b equals the single multiplier with product symbol;
    orders add and bounds multiply."""
    if a.grid.n != b.grid.n:
        raise ValueError("grid mismatch")
    return MultiplierSymbol(a.grid, a.values * b.values, a.order + b.order,
                            a.bound * b.bound)


@lru_cache(maxsize=128)
def _hilbert_values(n):
    v = -1j * np.sign(_modes(n)).astype(complex)
    v.flags.writeable = False
    return v


def hilbert(field):
    """Periodic Hilbert transform, symbol -i*sgn(k) with sgn(0) = 0."""
    out = _hilbert_values(field.grid.n) * field.coeffs
    return SpectralField(field.grid, out, field.real_flag)


def derivative(field, p=1):
    """p-th spatial derivative, symbol (i k)^p."""
    if p < 0 or p != int(p):
        raise ValueError("derivative order must be a nonnegative integer")
    out = (1j * field.grid.modes) ** int(p) * field.coeffs
    return SpectralField(field.grid, out, field.real_flag)


def project(field, cutoff):
    """Galerkin projection: zero all modes with |k| > cutoff."""
    n = field.grid.n
    if not 1 <= cutoff <= n // 2 - 1:
        raise ValueError(f"cutoff {cutoff} outside [1, {n // 2 - 1}]")
    mask = np.abs(field.grid.modes) <= cutoff
    return SpectralField(field.grid, field.coeffs * mask, field.real_flag)


def _padded_size(n):
    m = (3 * n) // 2
    if (3 * n) % 2:
        m += 1
    if m % 2:
        m += 1
    return m


def pointwise_product(f, g, dealias=True):
    """Coefficients of f*g via physical space on a zero-padded grid.

    With 3/2 padding the retained band of the product of two in-band
    fields is exact; with dealias=False the product is formed on the
    native grid and aliasing folds back the tail.
    """
    if f.grid.n != g.grid.n:
        raise ValueError("grid mismatch")
    n = f.grid.n
    m = _padded_size(n) if dealias else n
    vf = np.fft.ifft(_full_spectrum(f.coeffs, n, m)) * (m / _TWO_PI)
    vg = np.fft.ifft(_full_spectrum(g.coeffs, n, m)) * (m / _TWO_PI)
    prod = np.fft.fft(vf * vg) * (_TWO_PI / m)
    return SpectralField(f.grid, _band_from_full(prod, n),
                         f.real_flag and g.real_flag)


def sobolev_norm(field, s):
    """|| f ||_{H^s} = sqrt( (1/2pi) sum_k (1+|k|)^{2s} |c(k)|^2 )."""
    w = (1.0 + np.abs(field.grid.modes)) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2) / _TWO_PI))


def homogeneous_norm(field, s):
    """|| f ||_s with weight |k|^{2s}; requires a zero-mean field."""
    if s < 0 or s != int(s):
        raise ValueError("homogeneous order must be a nonnegative integer")
    c0 = abs(field.coeff(0))
    scale = 1.0 + float(np.max(np.abs(field.coeffs), initial=0.0))
    if c0 > 1e-9 * scale:
        raise ValueError(f"field has nonzero mean (|c(0)| = {c0:.3e})")
    w = np.abs(field.grid.modes) ** (2 * int(s))
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2) / _TWO_PI))


def inner_product(f, g):
    """(f, g) = (1/2pi) sum_k f^(k) conj(g^(k)); equals int f conj(g) dx."""
    if f.grid.n != g.grid.n:
        raise ValueError("grid mismatch")
    return complex(np.sum(f.coeffs * np.conj(g.coeffs)) / _TWO_PI)


def commutator_vh(v, f, dealias=True):
    """[v; H]f = v*H[f] - H[v*f].

    The mean of the output is whatever the two dealiased products produce;
    it is generally nonzero for complex inputs and is not forced to zero.
    """
    return pointwise_product(v, hilbert(f), dealias) - hilbert(
        pointwise_product(v, f, dealias)
    )


def hermitian_defect(field):
    """max_k | conj(c(k)) - c(-k) |, the distance from conjugate symmetry."""
    return float(np.max(np.abs(np.conj(field.coeffs[::-1]) - field.coeffs)))


def linf_norm(field):
    """Grid sup-norm of the synthesized field."""
    return float(np.max(np.abs(synthesize(field))))


def regrid(field, grid):
    """Re-express the field on another grid: embed (finer) or truncate
    (coarser) the coefficient band."""
    if grid.n == field.grid.n:
        return SpectralField(grid, field.coeffs, field.real_flag)
    half_old = field.grid.n // 2
    half_new = grid.n // 2
    out = np.zeros(grid.n - 1, complex)
    keep = min(half_old, half_new) - 1
    old_mid = half_old - 1
    new_mid = half_new - 1
    out[new_mid - keep:new_mid + keep + 1] = field.coeffs[old_mid - keep:old_mid + keep + 1]
    return SpectralField(grid, out, field.real_flag)
