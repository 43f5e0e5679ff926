"""The flattened 1-D Fourier transform and the k-space restriction.

The transform acts on the row-major flattening of an image:

    forward:  out[m] = sum_n f[n] * exp(-2*pi*i * n*m / p_num)
    adjoint:  out[n] = sum_m g[m] * exp(+2*pi*i * n*m / p_num)

There is no forward normalization; adjoint(forward(f)) == p_num * f, and the
inverse is adjoint / p_num.  Two evaluation paths exist: a radix-2
decimation-in-time FFT with precomputed twiddle and bit-reversal tables
(power-of-two lengths only) and a naive matrix product that accepts any
length and serves as the independent oracle for the fast path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .grid import ComplexImage, KSpaceMask, MeasurementVector

logger = logging.getLogger(__name__)

FAST = "fast"
NAIVE = "naive"

# Largest length for which the naive path caches the full DFT matrix
# (complex128: 4096^2 entries = 256 MiB).  Above this the rows are generated
# on the fly in blocks.
_NAIVE_MATRIX_LIMIT = 4096
_NAIVE_BLOCK_ROWS = 512


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.flags.writeable = False
    return rev

def _dft_matrix(n: int) -> np.ndarray:
    # exp(-2*pi*i * k / n) looked up at k = (row * col) mod n; the modular
    # reduction keeps every twiddle angle in [0, 2*pi) at full precision.
    table = np.exp(-2j * np.pi * np.arange(n) / n)
    k = np.arange(n, dtype=np.int64)
    mat = table[np.outer(k, k) % n]
    mat.flags.writeable = False
    return mat


@dataclass(frozen=True, eq=False)
class DftPlan:
    """Precomputed tables for transforms of one fixed length.

    ``algorithm`` is ``"fast"`` (radix-2, power-of-two lengths) or
    ``"naive"`` (matrix product, any length).  Plans are immutable and can
    be shared across threads.
    """

    p_num: int
    algorithm: str = FAST

    def __post_init__(self):
        if self.p_num < 1:
            raise ValueError("transform length must be >= 1")
        if self.algorithm not in (FAST, NAIVE):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == FAST:
            if not is_power_of_two(self.p_num):
                raise ValueError(
                    f"fast plan requires a power-of-two length, got {self.p_num}"
                )
            twiddle = np.exp(-2j * np.pi * np.arange(self.p_num // 2) / self.p_num)
            twiddle.flags.writeable = False
            object.__setattr__(self, "_twiddle", twiddle)
            object.__setattr__(self, "_bitrev", _bit_reversal(self.p_num))
            object.__setattr__(self, "_matrix", None)
        else:
            matrix = _dft_matrix(self.p_num) if self.p_num <= _NAIVE_MATRIX_LIMIT else None
            object.__setattr__(self, "_twiddle", None)
            object.__setattr__(self, "_bitrev", None)
            object.__setattr__(self, "_matrix", matrix)

    def _check_length(self, values: np.ndarray):
        if values.size != self.p_num:
            raise DimensionMismatch(
                f"plan length {self.p_num} does not match input length {values.size}"
            )

    def forward_values(self, values: np.ndarray) -> np.ndarray:
        """Forward transform on a flat complex array."""
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        self._check_length(values)
        if self.algorithm == FAST:
            return _fft_radix2(values, self._bitrev, self._twiddle)
        if self._matrix is not None:
            return self._matrix @ values
        return _naive_blocked(values, sign=-1.0)

    def adjoint_values(self, values: np.ndarray) -> np.ndarray:
        """Adjoint transform (conjugate kernel) on a flat complex array."""
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        self._check_length(values)
        if self.algorithm == FAST:
            return np.conj(_fft_radix2(np.conj(values), self._bitrev, self._twiddle))
        if self._matrix is not None:
            return np.conj(self._matrix) @ values
        return _naive_blocked(values, sign=+1.0)


def _fft_radix2(x: np.ndarray, bitrev: np.ndarray, twiddle: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time butterfly pass."""
    n = x.size
    y = x[bitrev]
    half = 1
    while half < n:
        w = twiddle[:: n // (2 * half)][:half]
        blocks = y.reshape(-1, 2 * half)
        odd = blocks[:, half:] * w
        even = blocks[:, :half]
        y = np.concatenate((even + odd, even - odd), axis=1).reshape(-1)
        half *= 2
    return y


def _naive_blocked(values: np.ndarray, sign: float) -> np.ndarray:
    n = values.size
    table = np.exp(sign * 2j * np.pi * np.arange(n) / n)
    out = np.empty(n, dtype=np.complex128)
    cols = np.arange(n, dtype=np.int64)
    for start in range(0, n, _NAIVE_BLOCK_ROWS):
        rows = np.arange(start, min(start + _NAIVE_BLOCK_ROWS, n), dtype=np.int64)
        out[start : start + rows.size] = table[np.outer(rows, cols) % n] @ values
    return out


def make_plan(p_num: int, prefer: str = FAST) -> DftPlan:
    """Plan for length ``p_num``, falling back to the naive path if needed."""
    if prefer == FAST and not is_power_of_two(p_num):
        logger.warning(
            "length %d is not a power of two; falling back to the naive transform", p_num
        )
        return DftPlan(p_num, NAIVE)
    return DftPlan(p_num, prefer)


def dft_forward(plan: DftPlan, f: ComplexImage) -> ComplexImage:
    """Unnormalized forward transform of the flattened image."""
    return ComplexImage(f.shape, plan.forward_values(f.values))


def dft_adjoint(plan: DftPlan, g: ComplexImage) -> ComplexImage:
    """Adjoint transform; adjoint(forward(f)) == p_num * f."""
    return ComplexImage(g.shape, plan.adjoint_values(g.values))


def dft_inverse(plan: DftPlan, g: ComplexImage) -> ComplexImage:
    """Inverse transform, i.e. the adjoint scaled by 1 / p_num."""
    return ComplexImage(g.shape, plan.adjoint_values(g.values) / plan.p_num)


def project(mask: KSpaceMask, f: ComplexImage) -> MeasurementVector:
    """Restrict an image to the masked k-space positions."""
    if f.shape != mask.shape:
        raise DimensionMismatch(f"grid mismatch: {f.shape} vs {mask.shape}")
    return MeasurementVector(mask, f.values[mask.indices])


def embed(mask: KSpaceMask, g: MeasurementVector) -> ComplexImage:
    """Zero-fill adjoint of :func:`project`."""
    if not g.mask.matches(mask):
        raise DimensionMismatch("measurement vector does not live on this mask")
    out = np.zeros(mask.shape.p_num, dtype=np.complex128)
    out[mask.indices] = g.values
    return ComplexImage(mask.shape, out)
