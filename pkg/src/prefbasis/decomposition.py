"""Biorthogonal and triorthogonal-style decompositions of pure states.

A bipartite state always has a Schmidt form; when Schmidt coefficients repeat,
the form is not unique and :func:`degenerate_alternatives` builds other ones
explicitly.  For three parties the picture changes: a state
``sum_n c_n |s_n>|a_n>|e_n>`` with linearly independent ``s``/``a`` families
and a noncolinear ``e`` family has exactly one such expansion.  The module
tests that claim numerically in two independent ways:

* :func:`scan_product_conditioning` conditions subsystem ``sys`` on every
  direction of a Bloch-sphere grid and records the directions whose
  conditional vector on the remaining pair is a product.  Each term of a
  tridecomposition contributes one such direction (the dual vector of its
  ``s_n``), so a unique expansion shows up as isolated clusters, and a
  non-unique one as a continuum.
* :func:`verify_uniqueness` restarts an alternating least-squares fit from
  perturbed copies of a canonical expansion and checks whether any run
  settles on a different exact expansion.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    Inconclusive,
    InvalidCanonical,
    NotDegenerate,
    NotFound,
    ZeroVector,
)
from .states import bloch_ket
from .tensor import (
    DEGENERACY_RTOL,
    DenseOperator,
    PureState,
    _split,
    degeneracy_groups,
    devectorize,
    eig_hermitian,
    kron_all,
    matricize,
    partial_trace,
    svd,
)

PRODUCT_TOL = 1e-7
GRID_DEG = 1.0
# Two decompositions are the same when every matched vector has |<u|v>| >= 1 - MATCH_TOL.
MATCH_TOL = 1e-6
LINEAR_INDEPENDENCE_TOL = 1e-8
NONCOLINEAR_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10
# Rank cutoff when compressing conditional-vector pencils.
_CORE_RTOL = 1e-13
_ZERO_NORM = 1e-14
_CHUNK = 8192
_MAX_POLISH = 64


# --------------------------------------------------------------------------
# Schmidt decomposition


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``sum_n coeffs[n] left_basis[n] (x) right_basis[n]`` (vectors are rows)."""

    coeffs: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray
    degeneracy_groups: list
    dims: tuple
    left: tuple
    degeneracy_rtol: float = DEGENERACY_RTOL

    def reconstruct(self) -> np.ndarray:
        m = (self.left_basis.T * self.coeffs) @ self.right_basis
        return devectorize(m, self.dims, self.left)

    def residual(self, s: PureState) -> float:
        return float(np.linalg.norm(self.reconstruct() - s.amps))

    def is_degenerate(self) -> bool:
        return any(len(g) > 1 for g in self.degeneracy_groups)


def schmidt(s: PureState, left: Sequence[int], rtol: float = DEGENERACY_RTOL) -> SchmidtDecomposition:
    """Schmidt decomposition across the bipartition ``left | rest``."""
    left = tuple(int(i) for i in left)
    m = matricize(s, left)
    u, sv, vh = svd(m)
    return SchmidtDecomposition(
        coeffs=sv,
        left_basis=u.T.copy(),
        right_basis=vh.copy(),
        degeneracy_groups=degeneracy_groups(sv, rtol),
        dims=s.dims,
        left=left,
        degeneracy_rtol=rtol,
    )


def degenerate_alternatives(sd: SchmidtDecomposition, rotation, group: Sequence[int] | None = None
                            ) -> SchmidtDecomposition:
    """Rotate the Schmidt vectors of one degenerate group by ``rotation``.

    The left vectors of the group transform as ``L' = U^T L`` and the right
    vectors as ``R' = U^dag R``, which leaves ``sum_n L_n (x) R_n`` unchanged.
    ``group`` defaults to the first degeneracy group whose size matches the
    rotation.
    """
    u = rotation.entries if isinstance(rotation, DenseOperator) else np.asarray(rotation, complex)
    DenseOperator(u, "unitary")
    k = u.shape[0]
    if group is None:
        candidates = [g for g in sd.degeneracy_groups if len(g) == k and k > 1]
        if not candidates:
            raise NotDegenerate(
                f"no degenerate coefficient group of size {k}; groups are {sd.degeneracy_groups}"
            )
        group = candidates[0]
    group = [int(i) for i in group]
    if len(group) != k:
        raise DimensionMismatch(f"rotation dim {k} != group size {len(group)}")
    if k > 1 and not any(set(group) <= set(g) for g in sd.degeneracy_groups):
        raise NotDegenerate(
            f"indices {group} span distinct coefficients {sd.coeffs[group].tolist()}"
        )
    left = sd.left_basis.copy()
    right = sd.right_basis.copy()
    left[group] = u.T @ sd.left_basis[group]
    right[group] = u.conj().T @ sd.right_basis[group]
    return SchmidtDecomposition(sd.coeffs.copy(), left, right, sd.degeneracy_groups, sd.dims,
                                sd.left, sd.degeneracy_rtol)


# --------------------------------------------------------------------------
# Conditioning on one subsystem


def conditional_vector(s: PureState, sys: int, probe) -> np.ndarray:
    """``(<probe| (x) I)|s>`` on the remaining subsystems in ascending order (unnormalized)."""
    if not 0 <= sys < s.n_subsystems:
        raise IndexOutOfRange(f"subsystem {sys} out of range")
    probe = np.asarray(probe, dtype=np.complex128).reshape(-1)
    if probe.size != s.dims[sys]:
        raise DimensionMismatch(f"probe dim {probe.size} != subsystem dim {s.dims[sys]}")
    return probe.conj() @ matricize(s, [sys])


def is_product(v, dims: Sequence[int], tol: float = PRODUCT_TOL) -> tuple[bool, float]:
    """Whether ``v`` on a two-part space of shape ``dims`` has Schmidt rank one.

    The residual is the second singular value of the matricized vector over
    its norm.
    """
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if len(dims) != 2 or v.size != dims[0] * dims[1]:
        raise DimensionMismatch(f"vector of size {v.size} is not on a bipartite space {tuple(dims)}")
    norm = np.linalg.norm(v)
    if norm < _ZERO_NORM:
        raise ZeroVector("product test on a zero vector")
    sv = svd(v.reshape(dims))[1]
    res = float(sv[1] / norm) if sv.size > 1 else 0.0
    return res <= tol, res


def _bipartite_rest(s: PureState, sys: int, split=None):
    """Dims and axis split for the subsystems other than ``sys``."""
    rest = [i for i in range(s.n_subsystems) if i != sys]
    if len(rest) < 2:
        raise DimensionMismatch("need at least two subsystems besides the conditioned one")
    split = [rest[0]] if split is None else [int(i) for i in split]
    if not split or not set(split) < set(rest):
        raise IndexOutOfRange(f"split {split} must be a proper nonempty subset of {rest}")
    pos = [rest.index(i) for i in split]
    rest_dims = tuple(s.dims[i] for i in rest)
    return rest_dims, pos


@dataclass
class _Pencil:
    """Conditional vectors ``sum_i conj(probe_i) W_i`` compressed to small cores."""

    cores: np.ndarray  # (n_probe_dim, rL, rR)

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "_Pencil":
        wide = np.hstack(blocks)
        tall = np.vstack(blocks)
        ul, sl, _ = svd(wide)
        _, sr, vr = svd(tall)
        rl = max(1, int(np.sum(sl > _CORE_RTOL * sl[0]))) if sl.size and sl[0] > 0 else 1
        rr = max(1, int(np.sum(sr > _CORE_RTOL * sr[0]))) if sr.size and sr[0] > 0 else 1
        ql = ul[:, :rl]
        qr = vr[:rr].conj().T
        return cls(np.stack([ql.conj().T @ b @ qr for b in blocks]))

    def residuals(self, probes: np.ndarray):
        """Normalized second singular value and norm for each row of ``probes``."""
        probes = np.atleast_2d(probes)
        res = np.empty(len(probes))
        norms = np.empty(len(probes))
        for lo in range(0, len(probes), _CHUNK):
            p = probes[lo:lo + _CHUNK].conj()
            m = np.einsum("pi,ijk->pjk", p, self.cores)
            sv = np.linalg.svd(m, compute_uv=False)
            nrm = np.sqrt(np.sum(sv * sv, axis=1))
            second = sv[:, 1] if sv.shape[1] > 1 else np.zeros(len(p))
            with np.errstate(invalid="ignore", divide="ignore"):
                r = np.where(nrm > _ZERO_NORM, second / np.where(nrm > 0, nrm, 1), 0.0)
            res[lo:lo + _CHUNK] = r
            norms[lo:lo + _CHUNK] = nrm
        return res, norms


def _pencil_for(s: PureState, sys: int, split=None) -> _Pencil:
    rest_dims, pos = _bipartite_rest(s, sys, split)
    m = matricize(s, [sys])
    blocks = [_split(row, rest_dims, pos) for row in m]
    return _Pencil.from_blocks(blocks)


def sphere_grid(grid_deg: float = GRID_DEG):
    """(theta, phi) grid in degrees: poles once, every other latitude at all longitudes."""
    if grid_deg <= 0:
        raise ValueError("grid_deg must be positive")
    return _sphere_grid(float(grid_deg)).copy()


@lru_cache(maxsize=8)
def _sphere_grid(grid_deg: float) -> np.ndarray:
    n_theta = int(round(180.0 / grid_deg))
    n_phi = int(round(360.0 / grid_deg))
    thetas = np.linspace(0.0, 180.0, n_theta + 1)
    phis = np.arange(n_phi) * (360.0 / n_phi)
    tt, pp = np.meshgrid(thetas[1:-1], phis, indexing="ij")
    inner = np.column_stack([tt.ravel(), pp.ravel()])
    grid = np.vstack([[0.0, 0.0], inner, [180.0, 0.0]])
    grid.setflags(write=False)
    return grid


@lru_cache(maxsize=8)
def _grid_neighbours(grid_deg: float) -> np.ndarray:
    """Index pairs of grid nodes closer than 1.5 grid steps on the sphere."""
    xyz = _unit_vectors(_sphere_grid(grid_deg))
    link = 2 * np.sin(np.radians(1.5 * grid_deg) / 2)
    pairs = cKDTree(xyz).query_pairs(link, output_type="ndarray")
    pairs.setflags(write=False)
    return pairs


def _probes(angles_deg: np.ndarray) -> np.ndarray:
    th = np.radians(angles_deg[:, 0])
    ph = np.radians(angles_deg[:, 1])
    return np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=1)


def _unit_vectors(angles_deg: np.ndarray) -> np.ndarray:
    th = np.radians(angles_deg[:, 0])
    ph = np.radians(angles_deg[:, 1])
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)


def bloch_angles(vec) -> tuple[float, float]:
    """(theta, phi) in degrees of a qubit vector, ignoring global phase."""
    v = np.asarray(vec, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    if abs(v[0]) > 1e-15:
        v = v * np.exp(-1j * np.angle(v[0]))
    theta = 2 * np.arctan2(abs(v[1]), abs(v[0]))
    phi = np.angle(v[1]) % (2 * np.pi) if abs(v[1]) > 1e-15 else 0.0
    return float(np.degrees(theta)), float(np.degrees(phi))


def angular_distance_deg(a, b) -> float:
    """Great-circle distance between two Bloch directions given as (theta, phi) degrees."""
    u = _unit_vectors(np.array([a, b], dtype=float))
    return float(np.degrees(np.arccos(np.clip(u[0] @ u[1], -1.0, 1.0))))


@dataclass(frozen=True)
class Cluster:
    theta_deg: float
    phi_deg: float
    spread_deg: float
    size: int
    min_residual: float


@dataclass(frozen=True, eq=False)
class ScanResult:
    grid_deg: float
    tol: float
    n_points: int
    hits: np.ndarray  # rows (theta_deg, phi_deg, residual)
    clusters: list
    continuum: bool

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def separation_ok(self) -> bool:
        """Clusters pairwise further apart than twice the larger spread."""
        for i, a in enumerate(self.clusters):
            for b in self.clusters[i + 1:]:
                d = angular_distance_deg((a.theta_deg, a.phi_deg), (b.theta_deg, b.phi_deg))
                if d <= 2 * max(a.spread_deg, b.spread_deg, 0.5 * self.grid_deg):
                    return False
        return True


def _cluster_hits(angles: np.ndarray, residuals: np.ndarray, grid_deg: float) -> list:
    if len(angles) == 0:
        return []
    xyz = _unit_vectors(angles)
    link = 2 * np.sin(np.radians(1.5 * grid_deg) / 2)
    pairs = cKDTree(xyz).query_pairs(link, output_type="ndarray")
    n = len(xyz)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    n_comp, labels = connected_components(graph, directed=False)
    clusters = []
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        mean = xyz[idx].mean(axis=0)
        if np.linalg.norm(mean) < 1e-6:
            centre = xyz[idx[np.argmin(residuals[idx])]]
        else:
            centre = mean / np.linalg.norm(mean)
        spread = np.degrees(np.arccos(np.clip(xyz[idx] @ centre, -1.0, 1.0))).max()
        theta = np.degrees(np.arccos(np.clip(centre[2], -1.0, 1.0)))
        phi = np.degrees(np.arctan2(centre[1], centre[0])) % 360.0 if np.hypot(*centre[:2]) > 1e-12 else 0.0
        clusters.append(Cluster(float(theta), float(phi), float(spread), int(idx.size),
                                float(residuals[idx].min())))
    clusters.sort(key=lambda c: (c.theta_deg, c.phi_deg))
    return clusters


def _polish(pencil: _Pencil, start, grid_deg: float):
    """Nelder-Mead on the squared residual of one probe direction; returns (angles, residual)."""
    f = lambda x: float(pencil.residuals(_probes(np.array([x])))[0][0] ** 2)
    start = np.asarray(start, dtype=float)
    step = 0.5 * grid_deg
    opt = minimize(f, start, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-26, "maxiter": 2000,
                            "initial_simplex": [start, start + [step, 0], start + [0, step]]})
    theta, phi = opt.x
    # fold back onto theta in [0, 180], phi in [0, 360)
    theta = theta % 360.0
    if theta > 180.0:
        theta, phi = 360.0 - theta, phi + 180.0
    return np.array([theta, phi % 360.0]), float(np.sqrt(max(opt.fun, 0.0)))


def _refine_minima(pencil: _Pencil, angles: np.ndarray, res: np.ndarray, grid_deg: float,
                   tol: float, max_starts: int = _MAX_POLISH) -> np.ndarray:
    """Polished off-grid hits seeded from grid-local minima of the residual."""
    pairs = _grid_neighbours(float(grid_deg))
    nb_min = np.full(len(res), np.inf)
    np.minimum.at(nb_min, pairs[:, 0], res[pairs[:, 1]])
    np.minimum.at(nb_min, pairs[:, 1], res[pairs[:, 0]])
    cand = np.flatnonzero((res <= nb_min) & (res > tol))
    cand = cand[np.argsort(res[cand], kind="stable")][:max_starts]
    out = []
    for i in cand:
        x, r = _polish(pencil, angles[i], grid_deg)
        if r <= tol:
            out.append([x[0], x[1], r])
    return np.array(out).reshape(-1, 3)


def scan_product_conditioning(s: PureState, sys: int = 0, grid_deg: float = GRID_DEG,
                              tol: float = PRODUCT_TOL, split=None, refine: bool = True) -> ScanResult:
    """Grid search for qubit directions on ``sys`` that leave the rest in a product state.

    ``split`` picks which remaining subsystems form the left factor of the
    product test (default: the first remaining one).  Conditioning on a
    direction orthogonal to the whole support gives the zero vector, which is
    counted as a (trivial) product hit.

    Product directions rarely sit exactly on grid nodes.  With ``refine``
    each local minimum of the residual over the grid that is not already a
    hit is polished with Nelder-Mead, and the polished direction is added to
    ``hits`` when its residual is within ``tol``.
    """
    if s.dims[sys] != 2:
        raise DimensionMismatch(f"scan needs a qubit on subsystem {sys}, got dim {s.dims[sys]}")
    if grid_deg <= 0:
        raise ValueError("grid_deg must be positive")
    pencil = _pencil_for(s, sys, split)
    angles = _sphere_grid(float(grid_deg))
    res, _ = pencil.residuals(_probes(angles))
    mask = res <= tol
    hit_angles, hit_res = angles[mask], res[mask]
    if refine:
        extra = _refine_minima(pencil, angles, res, grid_deg, tol)
        if len(extra):
            hit_angles = np.vstack([hit_angles, extra[:, :2]])
            hit_res = np.concatenate([hit_res, extra[:, 2]])
    hits = np.column_stack([hit_angles, hit_res])
    clusters = _cluster_hits(hit_angles, hit_res, grid_deg)
    continuum = len(clusters) > 100 or any(c.spread_deg > 10 * grid_deg for c in clusters)
    return ScanResult(grid_deg, tol, len(angles), hits, clusters, continuum)


# --------------------------------------------------------------------------
# Tridecompositions


def _canonical_phase(v: np.ndarray):
    """Rotate ``v`` so its largest-magnitude entry is real positive; return (v, phase removed)."""
    k = int(np.argmax(np.abs(v)))
    ph = v[k] / abs(v[k])
    return v / ph, ph


def _flags(vecs: np.ndarray, gram: np.ndarray) -> dict:
    n = len(vecs)
    off = np.abs(gram - np.diag(np.diag(gram)))
    sv = np.linalg.svd(gram, compute_uv=False)
    return {
        "orthonormal": bool(np.max(np.abs(gram - np.eye(n))) <= ORTHONORMAL_TOL),
        "linearly_independent": bool(sv.min() > LINEAR_INDEPENDENCE_TOL),
        "noncolinear": bool(n < 2 or off.max() < 1 - NONCOLINEAR_TOL),
    }


@dataclass(frozen=True, eq=False)
class TriDecomposition:
    """``sum_n coeffs[n] s_vecs[n] (x) a_vecs[n] (x) e_vecs[n]``; families are unit rows."""

    coeffs: np.ndarray
    s_vecs: np.ndarray
    a_vecs: np.ndarray
    e_vecs: np.ndarray
    overlap_report: dict
    flags: dict
    residual: float = float("nan")

    @classmethod
    def from_terms(cls, coeffs, s_vecs, a_vecs, e_vecs, source: PureState | None = None):
        """Normalize each vector, fix its phase, and compute Gram matrices and flags."""
        coeffs = np.array(coeffs, dtype=np.complex128)
        fams = []
        for fam in (s_vecs, a_vecs, e_vecs):
            rows = []
            for n, v in enumerate(fam):
                v = np.asarray(v, dtype=np.complex128).reshape(-1)
                nrm = np.linalg.norm(v)
                v, ph = _canonical_phase(v / nrm)
                coeffs[n] *= nrm * ph
                rows.append(v)
            fams.append(np.array(rows))
        order = np.argsort(-np.abs(coeffs), kind="stable")
        coeffs = coeffs[order]
        fams = [f[order] for f in fams]
        grams = {name: f.conj() @ f.T for name, f in zip("sae", fams)}
        flags = {name: _flags(f, grams[name]) for name, f in zip("sae", fams)}
        out = cls(coeffs, fams[0], fams[1], fams[2], grams, flags)
        if source is not None:
            out = cls(coeffs, fams[0], fams[1], fams[2], grams, flags,
                      float(np.linalg.norm(out.reconstruct() - source.amps)))
        return out

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    @property
    def dims(self) -> tuple:
        return (self.s_vecs.shape[1], self.a_vecs.shape[1], self.e_vecs.shape[1])

    def reconstruct(self) -> np.ndarray:
        return sum(c * kron_all(s, a, e)
                   for c, s, a, e in zip(self.coeffs, self.s_vecs, self.a_vecs, self.e_vecs))

    def to_state(self) -> PureState:
        return PureState.from_amplitudes(self.dims, self.reconstruct())


def match_terms(d1: TriDecomposition, d2: TriDecomposition) -> tuple[list, float]:
    """Greedy index matching on fidelity; returns pairs and the worst matched |<u|v>|."""
    if d1.n_terms != d2.n_terms or d1.dims != d2.dims:
        return [], 0.0
    n = d1.n_terms
    score = np.ones((n, n))
    for f1, f2 in ((d1.s_vecs, d2.s_vecs), (d1.a_vecs, d2.a_vecs), (d1.e_vecs, d2.e_vecs)):
        score = np.minimum(score, np.abs(f1.conj() @ f2.T))
    pairs, used_i, used_j = [], set(), set()
    for flat in np.argsort(-score, axis=None, kind="stable"):
        i, j = divmod(int(flat), n)
        if i in used_i or j in used_j:
            continue
        pairs.append((i, j))
        used_i.add(i)
        used_j.add(j)
    worst = min(score[i, j] for i, j in pairs)
    return pairs, float(worst)


def same_decomposition(d1: TriDecomposition, d2: TriDecomposition, match_tol: float = MATCH_TOL) -> bool:
    pairs, worst = match_terms(d1, d2)
    return bool(pairs) and worst >= 1 - match_tol


def _terms_from_basis(s: PureState, basis: Sequence[np.ndarray], tol: float):
    """Condition on each basis vector; return terms and the worst product residual."""
    terms, worst = [], 0.0
    rest_dims = s.dims[1:]
    for u in basis:
        w = conditional_vector(s, 0, u)
        if np.linalg.norm(w) < _ZERO_NORM:
            continue
        ok, res = is_product(w, rest_dims, tol)
        worst = max(worst, res)
        uu, sv, vh = svd(w.reshape(rest_dims))
        terms.append((sv[0], u, uu[:, 0], vh[0]))
    return terms, worst


def _pair_objective(pencil: _Pencil, theta, phi):
    """Summed squared residuals of a block direction and its orthogonal partner."""
    probes = _probes(np.array([[theta, phi], [180.0 - theta, phi + 180.0]]))
    res, _ = pencil.residuals(probes)
    return res


def _resolve_block(s: PureState, u1, u2, grid_deg: float, tol: float):
    """Find a rotation of span{u1, u2} whose two basis vectors both condition to products."""
    w = [conditional_vector(s, 0, u) for u in (u1, u2)]
    rest_dims = s.dims[1:]
    pencil = _Pencil.from_blocks([x.reshape(rest_dims) for x in w])
    angles = sphere_grid(grid_deg)
    partner = np.column_stack([180.0 - angles[:, 0], angles[:, 1] + 180.0])
    r1, _ = pencil.residuals(_probes(angles))
    r2, _ = pencil.residuals(_probes(partner))
    score = r1 * r1 + r2 * r2
    starts = angles[np.argsort(score, kind="stable")[:4]]
    best = None
    for start in starts:
        f = lambda x: float(np.sum(_pair_objective(pencil, x[0], x[1]) ** 2))
        if f(start) == 0.0:
            x = start
        else:
            opt = minimize(f, start, method="Nelder-Mead",
                           options={"xatol": 1e-9, "fatol": 1e-26, "maxiter": 2000,
                                    "initial_simplex": [start, start + [grid_deg, 0],
                                                        start + [0, grid_deg]]})
            x = opt.x
        worst = float(np.max(_pair_objective(pencil, x[0], x[1])))
        if best is None or worst < best[0]:
            best = (worst, x)
        if worst <= tol:
            break
    worst, (theta, phi) = best
    c1, c2 = bloch_ket(np.radians(theta), np.radians(phi))
    d1, d2 = bloch_ket(np.radians(180.0 - theta), np.radians(phi + 180.0))
    return [c1 * u1 + c2 * u2, d1 * u1 + d2 * u2]


def _dual_construction(s: PureState, grid_deg: float, tol: float):
    """Tridecomposition with a non-orthogonal qubit family, from two product directions."""
    pencil = _pencil_for(s, 0)
    scan = scan_product_conditioning(s, 0, grid_deg, tol)
    if scan.n_clusters != 2 or scan.continuum:
        return None, np.inf
    chis = []
    for c in scan.clusters:
        x, _ = _polish(pencil, [c.theta_deg, c.phi_deg], grid_deg)
        chis.append(bloch_ket(*np.radians(x)))
    perp = lambda v: np.array([-np.conj(v[1]), np.conj(v[0])])
    s_vecs = [perp(chis[1]), perp(chis[0])]
    terms = []
    for sv, chi in zip(s_vecs, chis):
        # chi is orthogonal to the other s vector, so it isolates this term
        w = conditional_vector(s, 0, chi) / np.vdot(chi, sv)
        uu, sing, vh = svd(w.reshape(s.dims[1:]))
        terms.append((sing[0], sv, uu[:, 0], vh[0]))
    dec = TriDecomposition.from_terms(*zip(*terms), source=s)
    return dec, dec.residual


def find_tridecomposition(s: PureState, tol: float = PRODUCT_TOL, grid_deg: float = GRID_DEG
                          ) -> TriDecomposition:
    """Find ``sum_n c_n |s_n>|a_n>|e_n>`` for a three-party state.

    The ``s`` family is taken from the eigenvectors of the reduced state of
    subsystem 0; a two-dimensional degenerate eigenspace is rotated (grid scan
    over its Bloch sphere, then Nelder-Mead polish) until both vectors
    condition the rest into product states.  When that fails and subsystem 0
    is a qubit, a second route looks for two product-conditioning directions
    and builds a possibly non-orthogonal ``s`` family as their duals.

    Raises NotFound when the best residual exceeds ``100 * tol`` and
    Inconclusive when it lands between ``tol`` and ``100 * tol``.
    """
    if s.n_subsystems != 3:
        raise DimensionMismatch(f"tridecomposition needs exactly 3 subsystems, got {s.n_subsystems}")
    rho = partial_trace(s, [0]).entries
    evals, evecs = eig_hermitian(rho)
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]
    support = int(np.sum(evals > _ZERO_NORM))
    groups = degeneracy_groups(evals[:support])
    basis = []
    too_big = [g for g in groups if len(g) > 2]
    for g in groups:
        if len(g) == 2:
            basis += _resolve_block(s, evecs[:, g[0]], evecs[:, g[1]], grid_deg, tol)
        else:
            basis += [evecs[:, i] for i in g]
    terms, best = _terms_from_basis(s, basis, tol)
    if best <= tol and terms:
        return TriDecomposition.from_terms(*zip(*terms), source=s)
    if s.dims[0] == 2 and support == 2:
        dec, res = _dual_construction(s, grid_deg, tol)
        if dec is not None and res <= tol:
            return dec
        best = min(best, res)
    if too_big:
        raise Inconclusive(f"degenerate eigenspace of size {len(too_big[0])} > 2 is not resolved",
                           best_residual=best)
    if best > 100 * tol:
        raise NotFound(f"no product-conditioning basis (best residual {best:.3e})", best_residual=best)
    raise Inconclusive(f"best residual {best:.3e} within 100x of tol {tol:.1e}", best_residual=best)


# --------------------------------------------------------------------------
# Uniqueness check by restarted local search


def _khatri_rao(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (x[:, None, :] * y[None, :, :]).reshape(-1, x.shape[1])


def als_tridecomposition(s: PureState, factors, max_iter: int = 1000, tol: float = 1e-10):
    """Alternating least squares for a rank-R three-way expansion of ``s``.

    ``factors`` is ``(A, B, C)`` with one column per term; the coefficient is
    folded into ``A``.  Returns the fitted factors and the final residual
    ``||s - sum_r A_r (x) B_r (x) C_r||``.
    """
    t = s.tensor()
    d1, d2, d3 = s.dims
    t1 = t.reshape(d1, d2 * d3)
    t2 = t.transpose(1, 0, 2).reshape(d2, d1 * d3)
    t3 = t.transpose(2, 0, 1).reshape(d3, d1 * d2)
    a, b, c = (np.array(f, dtype=np.complex128) for f in factors)
    res = np.inf
    for _ in range(max_iter):
        a = np.linalg.lstsq(_khatri_rao(b, c), t1.T, rcond=None)[0].T
        b = np.linalg.lstsq(_khatri_rao(a, c), t2.T, rcond=None)[0].T
        c = np.linalg.lstsq(_khatri_rao(a, b), t3.T, rcond=None)[0].T
        # keep B and C columns unit so A carries the weights
        nb = np.linalg.norm(b, axis=0)
        nc = np.linalg.norm(c, axis=0)
        nb[nb == 0] = 1
        nc[nc == 0] = 1
        b, c, a = b / nb, c / nc, a * nb * nc
        new = float(np.linalg.norm(t1 - a @ _khatri_rao(b, c).T))
        if new <= tol * 1e-2 or abs(res - new) <= 1e-15:
            res = new
            break
        res = new
    return (a, b, c), res


@dataclass(frozen=True, eq=False)
class UniquenessReport:
    trials: int
    seed: int
    converged_to_canonical: int
    alternatives: int
    failed: int
    tol: float
    perturbation: float
    worst_alternative_match: float
    example_alternative: TriDecomposition | None = None

    @property
    def certified_unique(self) -> bool:
        return self.alternatives == 0 and self.converged_to_canonical > 0


def verify_uniqueness(s: PureState, canonical: TriDecomposition, trials: int = 200, seed: int = 0,
                      tol: float = 1e-8, perturbation: float = 0.3, max_iter: int = 1000
                      ) -> UniquenessReport:
    """Restart a local search from ``trials`` perturbed copies of ``canonical``.

    Each run either returns to ``canonical`` (up to per-term phase and index
    permutation), reaches a different exact expansion (an alternative), or
    fails to get below ``tol``.
    """
    if canonical.dims != s.dims:
        raise InvalidCanonical(f"canonical dims {canonical.dims} != state dims {s.dims}")
    resid = float(np.linalg.norm(canonical.reconstruct() - s.amps))
    if resid > max(tol, 1e2 * PRODUCT_TOL):
        raise InvalidCanonical(f"canonical decomposition misses the state by {resid:.3e}")
    rng = np.random.default_rng(seed)
    base = [(canonical.s_vecs * canonical.coeffs[:, None]).T, canonical.a_vecs.T, canonical.e_vecs.T]
    back = alt = failed = 0
    worst_alt = 1.0
    example = None
    for _ in range(trials):
        start = []
        for f in base:
            noise = rng.normal(size=f.shape) + 1j * rng.normal(size=f.shape)
            noise *= perturbation * np.linalg.norm(f, axis=0) / np.linalg.norm(noise, axis=0)
            start.append(f + noise)
        (a, b, c), res = als_tridecomposition(s, start, max_iter=max_iter, tol=tol)
        if res > tol or not np.all(np.isfinite(a)):
            failed += 1
            continue
        norms = np.linalg.norm(a, axis=0)
        keep = norms > 1e-12
        found = TriDecomposition.from_terms(np.ones(int(keep.sum())), a.T[keep], b.T[keep], c.T[keep], source=s)
        if same_decomposition(found, canonical):
            back += 1
        else:
            alt += 1
            worst_alt = min(worst_alt, match_terms(found, canonical)[1])
            if example is None:
                example = found
    return UniquenessReport(trials, seed, back, alt, failed, tol, perturbation, worst_alt, example)
