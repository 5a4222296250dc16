"""Binary sparse measurement matrices, the orthonormal 2D DCT and block sampling."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import fft, sparse

from radarcs.errors import DimensionError, ParameterError, SceneIOError
from radarcs.models import BlockRef

_HEADER = np.dtype("<u8")
_INDEX = np.dtype("<u4")
_GEN_CHUNK = 512  # columns drawn per batch


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed from a tuple of nonnegative integer keys."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """Binary m x n operator stored column-wise as d sorted row indices per column."""

    m: int
    n: int
    d: int
    seed: int
    rows: np.ndarray  # (n, d)

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.shape != (self.n, self.d):
            raise DimensionError(f"row storage has shape {rows.shape}, expected ({self.n}, {self.d})")
        if rows.size and (rows.min() < 0 or rows.max() >= self.m):
            raise ParameterError("row index outside [0, m)")
        rows = rows.copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @cached_property
    def operator(self) -> sparse.csr_array:
        cols = np.repeat(np.arange(self.n), self.d)
        data = np.ones(self.n * self.d)
        return sparse.csr_array((data, (self.rows.ravel(), cols)), shape=(self.m, self.n))

    def to_dense(self) -> np.ndarray:
        return self.operator.toarray()

    def row_weights(self) -> np.ndarray:
        return np.bincount(self.rows.ravel(), minlength=self.m)

    def same_storage(self, other: MeasurementMatrix) -> bool:
        return self.to_bytes() == other.to_bytes()

    def to_bytes(self) -> bytes:
        header = np.array([self.m, self.n, self.d, self.seed], dtype=_HEADER)
        return header.tobytes() + self.rows.astype(_INDEX).tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> MeasurementMatrix:
        head = _HEADER.itemsize * 4
        if len(raw) < head:
            raise SceneIOError("measurement matrix file is truncated")
        m, n, d, seed = (int(v) for v in np.frombuffer(raw[:head], dtype=_HEADER))
        body = np.frombuffer(raw[head:], dtype=_INDEX)
        if body.size != n * d:
            raise SceneIOError(f"expected {n * d} row indices, found {body.size}")
        return cls(m=m, n=n, d=d, seed=seed, rows=body.reshape(n, d))

    def save(self, path: Path) -> None:
        path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Path) -> MeasurementMatrix:
        try:
            return cls.from_bytes(path.read_bytes())
        except FileNotFoundError as exc:
            raise SceneIOError(f"matrix file not found: {path}") from exc


def gen_measurement_matrix(m: int, n: int, d: int, seed: int) -> MeasurementMatrix:
    """Draw d distinct rows per column uniformly, then repair empty rows."""
    if not 1 <= d <= m:
        raise ParameterError(f"column weight must satisfy 1 <= d <= m, got d={d}, m={m}")
    if m > n:
        raise ParameterError(f"measurement count m={m} exceeds block length n={n}")

    rng = np.random.default_rng(seed)
    rows = np.empty((n, d), dtype=np.int64)
    for start in range(0, n, _GEN_CHUNK):
        stop = min(n, start + _GEN_CHUNK)
        keys = rng.random((stop - start, m))
        rows[start:stop] = np.argpartition(keys, d - 1, axis=1)[:, :d]
    rows.sort(axis=1)

    weights = np.bincount(rows.ravel(), minlength=m)
    for empty in np.flatnonzero(weights == 0):
        # Some row has weight >= 2 whenever one is empty, since n*d >= m.
        heavy = int(np.argmax(weights))
        candidates = np.flatnonzero((rows == heavy).any(axis=1))
        col = int(rng.choice(candidates))
        rows[col, rows[col] == heavy] = empty
        rows[col].sort()
        weights[heavy] -= 1
        weights[empty] += 1

    return MeasurementMatrix(m=m, n=n, d=d, seed=seed, rows=rows)


def apply_matrix(matrix: MeasurementMatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != matrix.n:
        raise DimensionError(f"signal has length {x.size}, matrix expects {matrix.n}")
    return np.bincount(matrix.rows.ravel(), weights=np.repeat(x, matrix.d), minlength=matrix.m)


def apply_adjoint(matrix: MeasurementMatrix, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != matrix.m:
        raise DimensionError(f"measurement vector has length {y.size}, matrix expects {matrix.m}")
    return y[matrix.rows].sum(axis=1)


@dataclass(frozen=True)
class DctOperator:
    """Orthonormal separable DCT-II over a rows x cols block, azimuth-major vectors."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ParameterError("DCT dims must be positive")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def _shape(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.n:
            raise DimensionError(f"vector has length {vec.size}, DCT expects {self.n}")
        return vec.reshape(self.rows, self.cols)

    def forward(self, block: np.ndarray) -> np.ndarray:
        return fft.dctn(self._shape(block), type=2, norm="ortho").ravel()

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        return fft.idctn(self._shape(coefficients), type=2, norm="ortho").ravel()

    def forward_columns(self, stacked: np.ndarray) -> np.ndarray:
        """Forward transform of every column of an (n, k) array."""
        k = stacked.shape[1]
        cube = np.asarray(stacked, dtype=np.float64).reshape(self.rows, self.cols, k)
        return fft.dctn(cube, type=2, norm="ortho", axes=(0, 1)).reshape(self.n, k)


def dct2_forward(op: DctOperator, block: np.ndarray) -> np.ndarray:
    return op.forward(block)


def dct2_inverse(op: DctOperator, coefficients: np.ndarray) -> np.ndarray:
    return op.inverse(coefficients)


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    values: np.ndarray
    matrix_seed: int
    ref: BlockRef | None = None

    @property
    def m(self) -> int:
        return int(self.values.size)


def sample_block(
    block: np.ndarray,
    matrix: MeasurementMatrix,
    noise_sigma: float = 0.0,
    seed: int = 0,
    ref: BlockRef | None = None,
) -> MeasurementVector:
    """y = phi x, plus optional white Gaussian noise."""
    if noise_sigma < 0:
        raise ParameterError("noise_sigma must be >= 0")
    y = apply_matrix(matrix, block)
    if noise_sigma > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise_sigma, size=y.size)
    return MeasurementVector(values=y, matrix_seed=matrix.seed, ref=ref)
