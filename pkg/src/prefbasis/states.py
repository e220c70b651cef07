"""Named states and the spin-1/2 conventions used throughout.

|z+> and |z-> are the computational basis |0>, |1>; |x+-> = (|z+> +- |z->)/sqrt(2).
"""
import numpy as np

from .tensor import PureState, kron_all

SQRT1_2 = 1 / np.sqrt(2)

Z_PLUS = np.array([1, 0], dtype=np.complex128)
Z_MINUS = np.array([0, 1], dtype=np.complex128)
X_PLUS = SQRT1_2 * np.array([1, 1], dtype=np.complex128)
X_MINUS = SQRT1_2 * np.array([1, -1], dtype=np.complex128)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=np.complex128)


def bloch_ket(theta, phi):
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1> (radians)."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def bell() -> PureState:
    return PureState((2, 2), SQRT1_2 * np.array([1, 0, 0, 1]))


def singlet() -> PureState:
    return PureState((2, 2), SQRT1_2 * np.array([0, 1, -1, 0]))


def ghz(n: int = 3) -> PureState:
    amps = np.zeros(2**n)
    amps[0] = amps[-1] = SQRT1_2
    return PureState((2,) * n, amps)


def w_state() -> PureState:
    amps = np.zeros(8)
    amps[[1, 2, 4]] = 1 / np.sqrt(3)
    return PureState((2, 2, 2), amps)


def branch_state(coeffs, s_vecs, a_vecs, e_vecs=None, normalize=True) -> PureState:
    """sum_n c_n |s_n>|a_n>(|e_n>) for arbitrary (not necessarily orthogonal) families."""
    fams = [s_vecs, a_vecs] + ([e_vecs] if e_vecs is not None else [])
    fams = [[np.asarray(v, dtype=np.complex128) for v in fam] for fam in fams]
    dims = tuple(fam[0].size for fam in fams)
    amps = sum(c * kron_all(*vs) for c, *vs in zip(coeffs, *fams))
    return PureState.from_amplitudes(dims, amps, normalize=normalize)


def environment_pair(overlap: float, dim: int = 2):
    """Two unit vectors with real inner product ``overlap`` (|overlap| <= 1)."""
    if not -1.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [-1, 1], got {overlap}")
    e0 = np.zeros(dim, dtype=np.complex128)
    e0[0] = 1
    e1 = np.zeros(dim, dtype=np.complex128)
    e1[0] = overlap
    e1[1] = np.sqrt(max(0.0, 1 - overlap * overlap))
    return e0, e1


def ghz_type(coeffs=(SQRT1_2, SQRT1_2), env_overlap: float = 0.0) -> PureState:
    """c_0|0>|0>|e_0> + c_1|1>|1>|e_1> with <e_0|e_1> = env_overlap."""
    e0, e1 = environment_pair(env_overlap)
    return branch_state(coeffs, [Z_PLUS, Z_MINUS], [Z_PLUS, Z_MINUS], [e0, e1])
