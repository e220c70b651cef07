"""Environment coupling, decoherence factors and the two worked two-spin demos.

The environment is a register of independent qubits coupled to the apparatus
by a pure-dephasing Hamiltonian

    H_ae = O (x) G,   O = sum_n lambda_n P_n,   G = sum_k g_k Z_k,

with ``Z_k`` the Pauli-Z on environment qubit ``k``.  The environment has no
internal dynamics.  This is a modeling choice: only branch-correlated
environment states are needed, and the model has an exact closed form for
the decoherence factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import states as S
from .decomposition import (
    GRID_DEG,
    PRODUCT_TOL,
    degenerate_alternatives,
    find_tridecomposition,
    scan_product_conditioning,
    schmidt,
)
from .errors import BranchCountUnsupported, DimensionMismatch, NoConvergence
from .measurement import build_basis_premeasurement, premeasure
from .tensor import DenseOperator, Observable, PureState, _split, devectorize, eig_hermitian, kron_all, partial_trace

DECOHERED_THRESHOLD = 0.01
MODEL_NOTE = "pure-dephasing environment: H_ae = O_pointer (x) sum_k g_k Z_k"
# Dense Hamiltonians are only assembled up to this dimension.
MAX_DENSE_DIM = 4096


@dataclass(frozen=True, eq=False)
class EnvironmentModel:
    couplings: tuple
    initial_state: tuple = None

    def __post_init__(self):
        g = tuple(float(x) for x in self.couplings)
        if not g:
            raise ValueError("environment needs at least one qubit")
        init = self.initial_state
        if init is None:
            init = tuple(S.X_PLUS for _ in g)
        init = tuple(np.asarray(v, dtype=np.complex128) for v in init)
        if len(init) != len(g):
            raise DimensionMismatch(f"{len(init)} initial states for {len(g)} couplings")
        for v in init:
            if v.shape != (2,) or abs(np.linalg.norm(v) - 1) > 1e-10:
                raise ValueError("each environment qubit state must be a normalized 2-vector")
        object.__setattr__(self, "couplings", g)
        object.__setattr__(self, "initial_state", init)

    @classmethod
    def random(cls, n_qubits: int = 12, low: float = 0.5, high: float = 1.5, seed: int = 0):
        rng = np.random.default_rng(seed)
        return cls(tuple(rng.uniform(low, high, n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.couplings)

    def initial_vector(self) -> np.ndarray:
        return kron_all(*self.initial_state)

    def generator_diagonal(self) -> np.ndarray:
        """Diagonal of ``sum_k g_k Z_k`` in the computational basis (length 2^N)."""
        diag = np.zeros(1)
        for g in self.couplings:
            diag = (diag[:, None] + g * np.array([1.0, -1.0])[None, :]).reshape(-1)
        return diag


def build_env_coupling(pointer: Observable, env: EnvironmentModel) -> DenseOperator:
    """Dense ``H_ae`` on apparatus (x) environment qubits."""
    dim = pointer.dim * 2**env.n_qubits
    if dim > MAX_DENSE_DIM:
        raise DimensionMismatch(f"H_ae of dim {dim} exceeds the dense limit {MAX_DENSE_DIM}; "
                                "use evolve_dephasing")
    return DenseOperator(np.kron(pointer.operator().entries, np.diag(env.generator_diagonal())),
                         "hermitian")


def commutator_norm(pointer: Observable, env: EnvironmentModel, projector) -> float:
    """``||[H_ae, P (x) I_env]||_F`` without assembling ``H_ae``.

    Uses ``[O (x) G, P (x) I] = [O, P] (x) G`` so the norm factorizes.
    """
    p = projector.entries if isinstance(projector, DenseOperator) else np.asarray(projector)
    o = pointer.operator().entries
    return float(np.linalg.norm(o @ p - p @ o) * np.linalg.norm(env.generator_diagonal()))


def evolve(state: PureState, h: DenseOperator, t: float) -> PureState:
    """``exp(-i h t)|state>`` via the eigendecomposition of ``h``."""
    if h.kind not in ("hermitian", "projector"):
        raise ValueError("evolve needs a hermitian operator")
    if h.dim != state.dim:
        raise DimensionMismatch(f"operator dim {h.dim} != state dim {state.dim}")
    m = h.entries
    if not np.any(m - np.diag(np.diag(m))):
        return PureState(state.dims, np.exp(-1j * t * np.diag(m).real) * state.amps)
    w, v = eig_hermitian(m)
    return PureState(state.dims, v @ (np.exp(-1j * t * w) * (v.conj().T @ state.amps)))


def evolve_dephasing(state: PureState, pointer: Observable, env: EnvironmentModel, t: float,
                     apparatus: int, env_axes: Sequence[int] | None = None) -> PureState:
    """Exact ``exp(-i H_ae t)`` for the dephasing model, applied branch by branch.

    ``exp(-i H_ae t) = sum_n P_n (x) exp(-i lambda_n t G)`` and ``G`` is
    diagonal, so no dense operator is formed.  ``env_axes`` defaults to the
    last ``N`` subsystems.
    """
    n = env.n_qubits
    if env_axes is None:
        env_axes = list(range(state.n_subsystems - n, state.n_subsystems))
    env_axes = list(env_axes)
    if len(env_axes) != n or any(state.dims[i] != 2 for i in env_axes):
        raise DimensionMismatch("environment axes must be N qubit subsystems")
    if state.dims[apparatus] != pointer.dim:
        raise DimensionMismatch("pointer dimension does not match the apparatus subsystem")
    targets = [apparatus] + env_axes
    m = _split(state.amps, state.dims, targets).reshape(pointer.dim, 2**n, -1)
    gdiag = env.generator_diagonal()
    out = np.zeros_like(m)
    for lam, proj in zip(pointer.eigenvalues, pointer.projectors):
        phase = np.exp(-1j * lam * t * gdiag)
        out += np.tensordot(proj.entries, m, axes=(1, 0)) * phase[None, :, None]
    return PureState(state.dims, devectorize(out.reshape(pointer.dim * 2**n, -1), state.dims, targets))


def _two_branch_gap(pointer: Observable) -> float:
    if len(pointer.eigenvalues) != 2:
        raise BranchCountUnsupported(f"decoherence factor needs 2 pointer branches, got {len(pointer.eigenvalues)}")
    return pointer.eigenvalues[1] - pointer.eigenvalues[0]


def decoherence_factor(env: EnvironmentModel, times, pointer: Observable) -> np.ndarray:
    """Closed-form ``r(t) = <E_0(t)|E_1(t)>`` for the two pointer branches.

    With environment qubit states ``alpha_k|0> + beta_k|1>`` and
    ``Delta = lambda_1 - lambda_0``::

        r(t) = prod_k (|alpha_k|^2 exp(-i Delta g_k t) + |beta_k|^2 exp(+i Delta g_k t))
    """
    gap = _two_branch_gap(pointer)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    r = np.ones(t.shape, dtype=np.complex128)
    for g, v in zip(env.couplings, env.initial_state):
        a2, b2 = abs(v[0]) ** 2, abs(v[1]) ** 2
        r *= a2 * np.exp(-1j * gap * g * t) + b2 * np.exp(1j * gap * g * t)
    return r


def pointer_vectors(pointer: Observable) -> list:
    """Unit vectors spanning each rank-one pointer projector."""
    vecs = []
    for p in pointer.projectors:
        w, v = eig_hermitian(p.entries)
        if abs(w[-1] - 1) > 1e-10 or (len(w) > 1 and abs(w[-2]) > 1e-10):
            raise BranchCountUnsupported("pointer projectors must be rank one")
        vecs.append(v[:, -1])
    return vecs


def branch_overlap(state: PureState, apparatus: int, pointer: Observable) -> complex:
    """``<E_0|E_1>`` read off a state ``sum_n c_n |a_n>|E_n>`` (normalized branches)."""
    _two_branch_gap(pointer)
    branches = []
    for v in pointer_vectors(pointer):
        w = np.asarray(v).conj() @ _split(state.amps, state.dims, [apparatus])
        branches.append(w / np.linalg.norm(w))
    return complex(np.vdot(branches[0], branches[1]))


def brute_force_decoherence_factor(env: EnvironmentModel, times, pointer: Observable,
                                   dense: bool | None = None) -> np.ndarray:
    """``r(t)`` from direct evolution of apparatus (x) environment state vectors.

    The apparatus starts in an equal superposition of pointer states.  With
    ``dense`` (default: when the dimension allows) the full Hamiltonian is
    built and exponentiated through its eigendecomposition; otherwise the
    branch-wise dephasing evolution is used.
    """
    _two_branch_gap(pointer)
    vecs = pointer_vectors(pointer)
    a0 = (vecs[0] + vecs[1]) / np.sqrt(2)
    dims = (pointer.dim,) + (2,) * env.n_qubits
    psi0 = PureState.from_amplitudes(dims, kron_all(a0, env.initial_vector()))
    if dense is None:
        dense = int(np.prod(dims)) <= 1024
    h = build_env_coupling(pointer, env) if dense else None
    out = []
    for t in np.atleast_1d(times):
        psi = evolve(psi0, h, t) if dense else evolve_dephasing(psi0, pointer, env, t, 0)
        out.append(branch_overlap(psi, 0, pointer))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class DecoherenceReport:
    times: np.ndarray
    r_values: np.ndarray
    commutator_norms: dict
    couplings: tuple
    pointer_eigenvalues: tuple
    threshold: float = DECOHERED_THRESHOLD
    model: str = MODEL_NOTE

    @property
    def abs_r(self) -> np.ndarray:
        return np.abs(self.r_values)

    def first_decohered_time(self):
        idx = np.flatnonzero(self.abs_r < self.threshold)
        return float(self.times[idx[0]]) if idx.size else None


def default_candidates(pointer: Observable) -> dict:
    """Pointer projectors plus projectors onto the equal-weight superpositions."""
    v0, v1 = pointer_vectors(pointer)[:2]
    up, down = (v0 + v1) / np.sqrt(2), (v0 - v1) / np.sqrt(2)
    cands = {f"P_{n}": p for n, p in enumerate(pointer.projectors)}
    cands["P_up"] = DenseOperator(np.outer(up, up.conj()), "projector")
    cands["P_down"] = DenseOperator(np.outer(down, down.conj()), "projector")
    return cands


def run_decoherence(env: EnvironmentModel | None = None, pointer: Observable | None = None,
                    times=None, candidates: dict | None = None) -> DecoherenceReport:
    env = env or EnvironmentModel.random()
    pointer = pointer or Observable.from_basis([S.Z_PLUS, S.Z_MINUS], (1.0, -1.0))
    times = np.linspace(0.0, 10.0, 200) if times is None else np.asarray(times, dtype=float)
    candidates = default_candidates(pointer) if candidates is None else candidates
    norms = {k: commutator_norm(pointer, env, p) for k, p in candidates.items()}
    return DecoherenceReport(times, decoherence_factor(env, times, pointer), norms,
                             env.couplings, pointer.eigenvalues)


# --------------------------------------------------------------------------
# Worked two-spin examples


def _phase_residual(u: np.ndarray, v: np.ndarray) -> tuple[float, complex]:
    """min over global phase of ||u - e^{i phi} v|| and the optimal phase."""
    ov = np.vdot(v, u)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(u - phase * v)), complex(phase)


def singlet_identity():
    """x-basis and z-basis forms of the two-spin entangled state; returns (residual, phase)."""
    x_form = (kron_all(S.X_PLUS, S.X_MINUS) - kron_all(S.X_MINUS, S.X_PLUS)) / np.sqrt(2)
    z_form = (kron_all(S.Z_PLUS, S.Z_MINUS) - kron_all(S.Z_MINUS, S.Z_PLUS)) / np.sqrt(2)
    return _phase_residual(x_form, z_form)


@dataclass(frozen=True, eq=False)
class PointerDemoReport:
    identity_residual: float
    identity_phase: complex
    schmidt_coeffs: np.ndarray
    schmidt_degenerate: bool
    x_form_residual: float
    z_form_residual: float
    rotated_residual: float
    env_overlap: float
    n_clusters: int
    cluster_directions: list
    a_family_match_pointer: float
    a_family_match_superposition: float


def demo_pointer_superposition(env_overlap: float = 0.3, grid_deg: float = GRID_DEG,
                               tol: float = PRODUCT_TOL) -> PointerDemoReport:
    """Spin measured by a macroscopic pointer: two Schmidt forms, one tridecomposition.

    Pointer states are |a+> = |0>, |a-> = |1>; |a_up> and |a_down> are their
    equal-weight superpositions.  An |x+> spin swings the pointer to |a->, an
    |x-> spin leaves it at |a+>.
    """
    a_plus, a_minus = S.Z_PLUS, S.Z_MINUS
    a_up, a_down = (a_plus + a_minus) / np.sqrt(2), (a_plus - a_minus) / np.sqrt(2)
    x_form = (kron_all(S.X_PLUS, a_minus) - kron_all(S.X_MINUS, a_plus)) / np.sqrt(2)
    z_form = (kron_all(S.Z_PLUS, a_down) - kron_all(S.Z_MINUS, a_up)) / np.sqrt(2)
    ident, phase = _phase_residual(x_form, z_form)

    model = build_basis_premeasurement([S.X_PLUS, S.X_MINUS], [S.PAULI_X, np.eye(2)])
    psi = premeasure(model, S.Z_MINUS, a0=a_plus)

    sd = schmidt(psi, [0])
    alt = degenerate_alternatives(sd, S.HADAMARD)
    x_res = float(np.linalg.norm(psi.amps - x_form))
    z_res, _ = _phase_residual(psi.amps, z_form)

    e_plus, e_minus = S.environment_pair(env_overlap)
    tri = S.branch_state([1, -1], [S.X_PLUS, S.X_MINUS], [a_minus, a_plus], [e_minus, e_plus])
    scan = scan_product_conditioning(tri, 0, grid_deg, tol)
    dec = find_tridecomposition(tri, tol, grid_deg)
    pointer_match = _family_match(dec.a_vecs, [a_plus, a_minus])
    sup_match = _family_match(dec.a_vecs, [a_up, a_down])
    return PointerDemoReport(
        identity_residual=ident,
        identity_phase=phase,
        schmidt_coeffs=sd.coeffs,
        schmidt_degenerate=sd.is_degenerate(),
        x_form_residual=x_res,
        z_form_residual=z_res,
        rotated_residual=alt.residual(psi),
        env_overlap=env_overlap,
        n_clusters=scan.n_clusters,
        cluster_directions=[(c.theta_deg, c.phi_deg) for c in scan.clusters],
        a_family_match_pointer=pointer_match,
        a_family_match_superposition=sup_match,
    )


def _family_match(found: np.ndarray, reference) -> float:
    """Worst |<u|v>| after greedy matching of two vector families."""
    ref = np.array(reference, dtype=np.complex128)
    score = np.abs(found.conj() @ ref.T)
    worst, used = 1.0, set()
    for i in range(len(found)):
        j = max((j for j in range(len(ref)) if j not in used), key=lambda j: score[i, j])
        used.add(j)
        worst = min(worst, score[i, j])
    return float(worst)


@dataclass(frozen=True, eq=False)
class PathologyReport:
    env_basis: str
    n_qubits: int
    couplings: tuple
    identity_residual: float
    t_decohered: float
    abs_r: float
    spin1_reduced: np.ndarray
    spin1_reduced_t0: np.ndarray
    fidelity_prepared: float
    record_labels: tuple
    record_probabilities: tuple
    conditional_fidelity_prepared: tuple
    joint_coherence: float
    threshold: float = DECOHERED_THRESHOLD
    model: str = MODEL_NOTE


def demo_einselection_pathology(env_basis: str = "z", n_qubits: int = 12, seed: int = 0,
                                threshold: float = DECOHERED_THRESHOLD, t_max: float = 10.0,
                                samples: int = 200) -> PathologyReport:
    """Spin 1 in |z->, spin 2 used as the apparatus, environment picks spin 2's basis.

    The x-basis interaction takes |z->|x+> to (|x+>|x-> - |x->|x+>)/sqrt(2).
    The environment then dephases spin 2 in ``env_basis``; once |r| drops
    below ``threshold`` the records on spin 2 are read in that basis.  With a
    z-coupled environment spin 1 is recorded as |z+> half the time although it
    was prepared in |z->.
    """
    if env_basis not in ("x", "z"):
        raise ValueError(f"env_basis must be 'x' or 'z', got {env_basis!r}")
    ident, _ = singlet_identity()
    model = build_basis_premeasurement([S.X_PLUS, S.X_MINUS], [S.PAULI_Z, np.eye(2)])
    psi = premeasure(model, S.Z_MINUS, a0=S.X_PLUS)

    basis = [S.Z_PLUS, S.Z_MINUS] if env_basis == "z" else [S.X_PLUS, S.X_MINUS]
    labels = (f"{env_basis}+", f"{env_basis}-")
    pointer = Observable.from_basis(basis, (1.0, -1.0))
    env = EnvironmentModel.random(n_qubits, seed=seed)

    times = np.linspace(0.0, t_max, samples)
    r = decoherence_factor(env, times, pointer)
    below = np.flatnonzero(np.abs(r) < threshold)
    if not below.size:
        raise NoConvergence(f"|r| never fell below {threshold} within t <= {t_max}")
    t_star = float(times[below[0]])

    full0 = PureState(psi.dims + (2,) * n_qubits, kron_all(psi.amps, env.initial_vector()))
    full = evolve_dephasing(full0, pointer, env, t_star, apparatus=1)
    rho1 = partial_trace(full, [0]).entries
    rho1_t0 = partial_trace(full0, [0]).entries
    rho12 = partial_trace(full, [0, 1]).entries

    probs, cond_fid = [], []
    for b in basis:
        proj = np.kron(np.eye(2), np.outer(b, b.conj()))
        block = proj @ rho12 @ proj
        p = float(np.trace(block).real)
        probs.append(p)
        cond = block.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3) / p
        cond_fid.append(float(np.vdot(S.Z_MINUS, cond @ S.Z_MINUS).real))
    # block of rho12 between the two records on spin 2
    block01 = np.einsum("b,d,abcd->ac", basis[0].conj(), basis[1], rho12.reshape(2, 2, 2, 2))
    coherence = float(np.linalg.norm(block01))

    return PathologyReport(
        env_basis=env_basis,
        n_qubits=n_qubits,
        couplings=env.couplings,
        identity_residual=ident,
        t_decohered=t_star,
        abs_r=float(abs(r[below[0]])),
        spin1_reduced=rho1,
        spin1_reduced_t0=rho1_t0,
        fidelity_prepared=float(np.vdot(S.Z_MINUS, rho1 @ S.Z_MINUS).real),
        record_labels=labels,
        record_probabilities=tuple(probs),
        conditional_fidelity_prepared=tuple(cond_fid),
        joint_coherence=coherence,
        threshold=threshold,
    )
