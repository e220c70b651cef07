"""Dense multipartite pure states, operators and the linear algebra under them.

Indexing convention (shared by every module): a state on subsystems with
dimensions ``dims = (d0, d1, ..., dk)`` stores amplitude
``<i0 i1 ... ik|psi>`` at flat position ``np.ravel_multi_index((i0, ..., ik), dims)``,
i.e. row-major, subsystem 0 most significant.  ``kron(a, b)`` therefore puts
``a`` on subsystem 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import DimensionMismatch, IndexOutOfRange, NoConvergence, NonUnitary

NORM_ATOL = 1e-10
UNITARY_ATOL = 1e-10
HERMITIAN_ATOL = 1e-12
PROJECTOR_ATOL = 1e-10
# Relative gap below which two Schmidt coefficients / eigenvalues count as equal.
DEGENERACY_RTOL = 1e-8
# Coefficients under this are numerical zeros and are grouped together.
ZERO_FLOOR = 1e-14


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on a tensor product of subsystems."""

    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise DimensionMismatch(f"every subsystem dimension must be >= 2, got {dims}")
        amps = np.asarray(self.amps).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise DimensionMismatch(
                f"{amps.size} amplitudes do not match dims {dims} (need {int(np.prod(dims))})"
            )
        norm = np.linalg.norm(amps)
        if abs(norm * norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalized: <psi|psi> = {norm * norm!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", _readonly(amps))

    @classmethod
    def from_amplitudes(cls, dims: Sequence[int], amps, normalize: bool = True) -> "PureState":
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(tuple(dims), amps)

    @classmethod
    def basis(cls, dims: Sequence[int], indices: Sequence[int]) -> "PureState":
        dims = tuple(dims)
        amps = np.zeros(int(np.prod(dims)), dtype=np.complex128)
        amps[np.ravel_multi_index(tuple(indices), dims)] = 1.0
        return cls(dims, amps)

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amps.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amps.reshape(self.dims)

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        if self.dims != other.dims:
            raise DimensionMismatch(f"dims differ: {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.overlap(other)) ** 2


_KINDS = ("general", "unitary", "hermitian", "projector")


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Square complex matrix tagged with the property it is checked to have."""

    entries: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "unitary":
            err = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
            if err > UNITARY_ATOL:
                raise NonUnitary(f"||U^dag U - I||_F = {err:.3e}")
        elif self.kind in ("hermitian", "projector"):
            err = np.linalg.norm(m - m.conj().T)
            if err > HERMITIAN_ATOL:
                raise ValueError(f"operator not hermitian: ||H - H^dag||_F = {err:.3e}")
            if self.kind == "projector":
                err = np.linalg.norm(m @ m - m)
                if err > PROJECTOR_ATOL:
                    raise ValueError(f"operator not idempotent: ||P^2 - P||_F = {err:.3e}")
        object.__setattr__(self, "entries", _readonly(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "DenseOperator":
        kind = "general" if self.kind == "general" else self.kind
        return DenseOperator(self.entries.conj().T, kind)

    def kron(self, other: "DenseOperator") -> "DenseOperator":
        kind = self.kind if self.kind == other.kind else "general"
        return DenseOperator(np.kron(self.entries, other.entries), kind)

    def commutator_norm(self, other: "DenseOperator") -> float:
        """Frobenius norm of [self, other]."""
        a, b = self.entries, other.entries
        return float(np.linalg.norm(a @ b - b @ a))

    @classmethod
    def identity(cls, dim: int) -> "DenseOperator":
        return cls(np.eye(dim), "unitary")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got shape {m.shape}")
        herm = np.linalg.norm(m - m.conj().T)
        if herm > HERMITIAN_ATOL:
            raise ValueError(f"density matrix not hermitian: {herm:.3e}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_ATOL:
            raise ValueError(f"density matrix trace {tr!r} != 1")
        if m.shape[0] <= 4096 and np.linalg.eigvalsh(m).min() < -NORM_ATOL:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", _readonly(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, op) -> complex:
        op = op.entries if isinstance(op, DenseOperator) else np.asarray(op)
        return complex(np.trace(self.entries @ op))

    def fidelity(self, ket) -> float:
        """<psi|rho|psi> for a pure reference state."""
        v = np.asarray(ket.amps if isinstance(ket, PureState) else ket, dtype=np.complex128)
        return float(np.vdot(v, self.entries @ v).real)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True, eq=False)
class Observable:
    """Spectral form sum_n lambda_n P_n with a complete orthogonal set of projectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[DenseOperator, ...]

    def __post_init__(self):
        lams = tuple(float(x) for x in self.eigenvalues)
        projs = tuple(p if isinstance(p, DenseOperator) else DenseOperator(p, "projector")
                      for p in self.projectors)
        if len(lams) != len(projs) or not projs:
            raise DimensionMismatch("need one eigenvalue per projector")
        dim = projs[0].dim
        if any(p.dim != dim for p in projs):
            raise DimensionMismatch("projectors have different dimensions")
        if any(p.kind != "projector" for p in projs):
            raise ValueError("observable components must be projectors")
        total = sum(p.entries for p in projs)
        err = np.linalg.norm(total - np.eye(dim))
        if err > PROJECTOR_ATOL:
            raise ValueError(f"projectors do not sum to identity: {err:.3e}")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.linalg.norm(projs[i].entries @ projs[j].entries) > PROJECTOR_ATOL:
                    raise ValueError(f"projectors {i} and {j} are not orthogonal")
        object.__setattr__(self, "eigenvalues", lams)
        object.__setattr__(self, "projectors", projs)

    @classmethod
    def from_basis(cls, vectors, eigenvalues=None) -> "Observable":
        """Rank-one projectors onto an orthonormal basis (one column or row per vector)."""
        vecs = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in vectors]
        if eigenvalues is None:
            eigenvalues = range(len(vecs))
        return cls(tuple(eigenvalues), tuple(DenseOperator(np.outer(v, v.conj()), "projector")
                                             for v in vecs))

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    def operator(self) -> DenseOperator:
        m = sum(lam * p.entries for lam, p in zip(self.eigenvalues, self.projectors))
        return DenseOperator(m, "hermitian")


def _check_axes(dims, axes, name="targets", allow_empty=False):
    axes = [int(a) for a in axes]
    if not axes and not allow_empty:
        raise IndexOutOfRange(f"{name} must be nonempty")
    if len(set(axes)) != len(axes):
        raise IndexOutOfRange(f"{name} contains duplicates: {axes}")
    for a in axes:
        if not 0 <= a < len(dims):
            raise IndexOutOfRange(f"{name} index {a} out of range for {len(dims)} subsystems")
    return axes


def tensor_product(a: PureState, b: PureState) -> PureState:
    return PureState(a.dims + b.dims, np.kron(a.amps, b.amps))


def kron_all(*vectors) -> np.ndarray:
    out = np.ones(1, dtype=np.complex128)
    for v in vectors:
        out = np.kron(out, np.asarray(v, dtype=np.complex128))
    return out


def _split(amps: np.ndarray, dims, left) -> np.ndarray:
    rest = [i for i in range(len(dims)) if i not in left]
    t = np.asarray(amps).reshape(dims).transpose(list(left) + rest)
    nl = int(np.prod([dims[i] for i in left])) if left else 1
    return t.reshape(nl, -1)


def matricize(s: PureState, left: Sequence[int]) -> np.ndarray:
    """Reshape to a matrix with ``left`` subsystems as rows, the rest (ascending) as columns."""
    left = _check_axes(s.dims, left, "left")
    if len(left) == len(s.dims):
        raise IndexOutOfRange("left must be a proper subset of the subsystems")
    return _split(s.amps, s.dims, left)


def devectorize(m: np.ndarray, dims: Sequence[int], left: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`matricize`: flat amplitudes in the standard ordering."""
    dims = tuple(dims)
    left = list(left)
    rest = [i for i in range(len(dims)) if i not in left]
    order = left + rest
    t = np.asarray(m).reshape([dims[i] for i in order])
    return t.transpose(np.argsort(order)).reshape(-1)


def apply_unitary(s: PureState, u: DenseOperator, targets: Sequence[int]) -> PureState:
    """Apply ``u`` to the listed subsystems; ``targets`` order is the operator's factor order."""
    targets = _check_axes(s.dims, targets)
    if not isinstance(u, DenseOperator) or u.kind != "unitary":
        raise NonUnitary("apply_unitary needs a DenseOperator of kind 'unitary'")
    need = int(np.prod([s.dims[i] for i in targets]))
    if u.dim != need:
        raise DimensionMismatch(f"operator dim {u.dim} != product of target dims {need}")
    m = _split(s.amps, s.dims, targets)
    return PureState(s.dims, devectorize(u.entries @ m, s.dims, targets))


def partial_trace(s: PureState, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep`` (in the listed order); everything else is traced out."""
    keep = _check_axes(s.dims, keep, "keep")
    m = _split(s.amps, s.dims, keep)
    return DensityMatrix(m @ m.conj().T)


def svd(m, full_matrices: bool = False):
    """Singular value decomposition ``m = U @ diag(s) @ Vh`` with ``s`` descending.

    Raises NoConvergence when LAPACK's iteration fails.
    """
    m = np.asarray(m, dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input has non-finite entries")
    try:
        u, sv, vh = np.linalg.svd(m, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"SVD did not converge: {exc}") from exc
    return u, sv, vh


def eig_hermitian(h):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a hermitian matrix."""
    h = h.entries if isinstance(h, DenseOperator) else np.asarray(h, dtype=np.complex128)
    if not np.all(np.isfinite(h)):
        raise ValueError("eig_hermitian input has non-finite entries")
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"eig_hermitian needs a square matrix, got shape {h.shape}")
    if np.abs(h - h.conj().T).max(initial=0.0) > HERMITIAN_ATOL * max(1.0, np.abs(h).max(initial=0.0)):
        raise ValueError("eig_hermitian input is not hermitian")
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigensolver did not converge: {exc}") from exc


def degeneracy_groups(values: Sequence[float], rtol: float = DEGENERACY_RTOL) -> list[list[int]]:
    """Partition descending ``values`` into runs whose neighbours differ by < rtol (relative)."""
    values = list(values)
    if not values:
        return []
    groups = [[0]]
    for i in range(1, len(values)):
        prev, cur = values[i - 1], values[i]
        scale = max(abs(prev), abs(cur))
        if scale < ZERO_FLOOR or abs(prev - cur) < rtol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def random_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary matrix."""
    if dim == 1:
        return np.ones((1, 1), dtype=np.complex128)
    return unitary_group.rvs(dim, random_state=np.random.default_rng(rng))


def random_state(dims: Sequence[int], rng=None) -> PureState:
    rng = np.random.default_rng(rng)
    n = int(np.prod(dims))
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return PureState.from_amplitudes(dims, v)
