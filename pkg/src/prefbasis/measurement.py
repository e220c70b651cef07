"""Measurement interactions as explicit branch-conditioned unitaries.

Every model has the form ``U = sum_n P_n (x) K_n (x) A_n`` where ``P_n``
projects the measured system degree of freedom onto its n-th basis state,
``K_n`` kicks the change-carrying degree of freedom (particle deflection) and
``A_n`` kicks the apparatus.  The ideal premeasurement is the special case
without a change-carrying factor.

Continuous degrees of freedom live on periodic grids of ``N`` points with
centered positions ``x_j = j - N/2`` and momenta in radians per grid step.
The magnet (or beam splitter) grid may have a finer physical spacing than the
particle grid; momentum bookkeeping is always done in particle-grid units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AliasRisk, DimensionMismatch, DimensionTooSmall, NonUnitaryKick
from .tensor import DenseOperator, Observable, PureState, _split, devectorize, kron_all


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    branch_projectors: Observable
    a_kicks: tuple
    p_kicks: tuple | None = None

    def __post_init__(self):
        n = len(self.branch_projectors.projectors)
        kick_lists = [self.a_kicks] + ([self.p_kicks] if self.p_kicks is not None else [])
        for kicks in kick_lists:
            if len(kicks) != n:
                raise DimensionMismatch(f"{len(kicks)} kicks for {n} branches")
            if any(not isinstance(k, DenseOperator) or k.kind != "unitary" for k in kicks):
                raise NonUnitaryKick("every kick must be a DenseOperator of kind 'unitary'")
            if len({k.dim for k in kicks}) != 1:
                raise DimensionMismatch("kicks within one list must share a dimension")
        object.__setattr__(self, "a_kicks", tuple(self.a_kicks))
        if self.p_kicks is not None:
            object.__setattr__(self, "p_kicks", tuple(self.p_kicks))

    @property
    def n_branches(self) -> int:
        return len(self.a_kicks)

    @property
    def dims(self) -> tuple:
        mid = (self.p_kicks[0].dim,) if self.p_kicks is not None else ()
        return (self.branch_projectors.dim,) + mid + (self.a_kicks[0].dim,)

    def total_operator(self) -> DenseOperator:
        """Dense ``sum_n P_n (x) K_n (x) A_n``; only sensible for small dimensions."""
        if int(np.prod(self.dims)) > 4096:
            raise DimensionMismatch(f"total operator of dim {int(np.prod(self.dims))} is too large to assemble")
        total = 0
        for n, proj in enumerate(self.branch_projectors.projectors):
            factors = [proj.entries]
            if self.p_kicks is not None:
                factors.append(self.p_kicks[n].entries)
            factors.append(self.a_kicks[n].entries)
            term = factors[0]
            for f in factors[1:]:
                term = np.kron(term, f)
            total = total + term
        return DenseOperator(total, "unitary")

    def apply(self, state: PureState, targets: Sequence[int] | None = None) -> PureState:
        """Apply the interaction to ``targets`` (system, [change-carrying,] apparatus)."""
        k = len(self.dims)
        targets = list(range(k)) if targets is None else [int(t) for t in targets]
        if len(targets) != k or any(not 0 <= t < state.n_subsystems for t in targets) \
                or tuple(state.dims[t] for t in targets) != self.dims:
            raise DimensionMismatch(f"model dims {self.dims} do not match targets {targets} of {state.dims}")
        m = _split(state.amps, state.dims, targets).reshape(self.dims + (-1,))
        out = np.zeros_like(m)
        for n, proj in enumerate(self.branch_projectors.projectors):
            x = np.tensordot(proj.entries, m, axes=(1, 0))
            ops = ([self.p_kicks[n]] if self.p_kicks is not None else []) + [self.a_kicks[n]]
            for axis, op in enumerate(ops, start=1):
                x = np.moveaxis(np.tensordot(op.entries, x, axes=(1, axis)), 0, axis)
            out += x
        return PureState(state.dims, devectorize(out.reshape(int(np.prod(self.dims)), -1),
                                                 state.dims, targets))


def cyclic_shift(dim: int, steps: int = 1) -> DenseOperator:
    """|j> -> |j + steps mod dim>."""
    return DenseOperator(np.roll(np.eye(dim), steps, axis=0), "unitary")


def build_premeasurement(n_branches: int, apparatus_dim: int) -> MeasurementModel:
    """Ideal premeasurement |s_n>|a_0> -> |s_n>|a_n> with |a_n> = shift^n |a_0>."""
    if n_branches < 2:
        raise DimensionTooSmall("need at least two branches")
    if apparatus_dim < n_branches:
        raise DimensionTooSmall(f"apparatus_dim {apparatus_dim} < n_branches {n_branches}")
    pointer = Observable.from_basis(np.eye(n_branches))
    return MeasurementModel(pointer, tuple(cyclic_shift(apparatus_dim, n) for n in range(n_branches)))


def build_basis_premeasurement(system_basis, a_kicks) -> MeasurementModel:
    """Two-party model that kicks the apparatus by ``a_kicks[n]`` when the system is in ``system_basis[n]``."""
    kicks = tuple(k if isinstance(k, DenseOperator) else DenseOperator(k, "unitary") for k in a_kicks)
    return MeasurementModel(Observable.from_basis(system_basis), kicks)


def build_three_dof(p_kicks, a_kicks, system_basis=None) -> MeasurementModel:
    """|s_n>|p_0>|a_0> -> |s_n> (p_kicks[n]|p_0>) (a_kicks[n]|a_0>)."""
    def wrap(k):
        if isinstance(k, DenseOperator):
            if k.kind != "unitary":
                raise NonUnitaryKick("kicks must be unitary")
            return k
        try:
            return DenseOperator(k, "unitary")
        except ValueError as exc:
            raise NonUnitaryKick(str(exc)) from exc

    p_kicks = tuple(wrap(k) for k in p_kicks)
    a_kicks = tuple(wrap(k) for k in a_kicks)
    if len(p_kicks) != len(a_kicks):
        raise DimensionMismatch(f"{len(p_kicks)} p-kicks vs {len(a_kicks)} a-kicks")
    if system_basis is None:
        system_basis = np.eye(len(p_kicks))
    return MeasurementModel(Observable.from_basis(system_basis), a_kicks, p_kicks)


def premeasure(model: MeasurementModel, system, p0=None, a0=None) -> PureState:
    """Apply ``model`` to ``system (x) [p0 (x)] a0`` (``a0`` defaults to the first basis state)."""
    dims = model.dims
    system = np.asarray(system, dtype=np.complex128)
    if a0 is None:
        a0 = np.eye(dims[-1])[0]
    parts = [system] + ([p0 if p0 is not None else np.eye(dims[1])[0]] if len(dims) == 3 else []) + [a0]
    return model.apply(PureState.from_amplitudes(dims, kron_all(*parts)))


# --------------------------------------------------------------------------
# Grid wavepackets


def grid_positions(grid_size: int) -> np.ndarray:
    return np.arange(grid_size) - grid_size // 2


def grid_momenta(grid_size: int) -> np.ndarray:
    """FFT-ordered momenta in radians per grid step, in [-pi, pi)."""
    return 2 * np.pi * np.fft.fftfreq(grid_size)


@dataclass(frozen=True)
class GaussianWavepacket:
    """Gaussian with probability-density standard deviation ``sigma_x`` (grid steps)."""

    grid_size: int = 128
    sigma_x: float = 8.0
    x0: float = 0.0
    k0: float = 0.0

    def __post_init__(self):
        n = self.grid_size
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid_size must be a power of two >= 16, got {n}")
        if not 2 <= self.sigma_x <= n / 8:
            raise AliasRisk(f"sigma_x={self.sigma_x} outside [2, grid_size/8={n / 8}]")
        if abs(self.k0) >= np.pi:
            raise AliasRisk(f"k0={self.k0} beyond the Nyquist limit")

    def amplitudes(self) -> np.ndarray:
        x = grid_positions(self.grid_size)
        psi = np.exp(-((x - self.x0) ** 2) / (4 * self.sigma_x**2) + 1j * self.k0 * x)
        return psi / np.linalg.norm(psi)


def momentum_boost(grid_size: int, delta: float) -> DenseOperator:
    """Diagonal phase ``exp(i delta x)`` that shifts momentum by ``delta``."""
    if abs(delta) >= np.pi:
        raise AliasRisk(f"boost {delta} reaches the Nyquist limit pi")
    return DenseOperator(np.diag(np.exp(1j * delta * grid_positions(grid_size))), "unitary")


def mean_momentum(amps, axis: int = 0, dims=None) -> float:
    """<k> on one grid axis of a (possibly multipartite) state, via FFT."""
    a = np.asarray(amps.amps if isinstance(amps, PureState) else amps)
    if isinstance(amps, PureState):
        dims = amps.dims
    t = a.reshape(dims) if dims is not None else a
    t = np.moveaxis(t, axis, 0)
    spec = np.fft.fft(t, axis=0, norm="ortho")
    weight = np.sum(np.abs(spec.reshape(spec.shape[0], -1)) ** 2, axis=1)
    return float(weight @ grid_momenta(t.shape[0]) / weight.sum())


def gaussian_overlap(delta: float, sigma_x: float) -> float:
    """|<psi_{+delta/2}|psi_{-delta/2}>| for Gaussians of position width ``sigma_x``."""
    if sigma_x <= 0:
        raise ValueError(f"sigma_x must be positive, got {sigma_x}")
    return float(np.exp(-(delta**2) * sigma_x**2 / 2))


@dataclass(frozen=True)
class SGParams:
    """Kick sizes and packets for a recoil measurement (Stern-Gerlach magnet or PBS).

    ``particle_kick`` is the momentum gap between the two particle branches
    (each gets ``+-particle_kick/2``).  The apparatus takes the opposite kick.
    ``magnet_spacing`` is the physical length of one apparatus grid step in
    particle grid steps, so the apparatus phase per step is
    ``magnet_kick/2 * magnet_spacing``.
    """

    particle_kick: float = 0.8
    particle: GaussianWavepacket = field(default_factory=lambda: GaussianWavepacket(128, 8.0))
    magnet: GaussianWavepacket = field(default_factory=lambda: GaussianWavepacket(128, 4.0))
    magnet_spacing: float = 1 / 32

    def __post_init__(self):
        if self.magnet_spacing <= 0:
            raise ValueError(f"magnet_spacing must be positive, got {self.magnet_spacing}")
        if abs(self.particle_kick) / 2 + abs(self.particle.k0) >= np.pi:
            raise AliasRisk("particle kick exceeds the grid band")
        if abs(self.particle_kick) / 2 * self.magnet_spacing + abs(self.magnet.k0) >= np.pi:
            raise AliasRisk("magnet kick exceeds the grid band")

    @property
    def magnet_kick(self) -> float:
        return -self.particle_kick

    @property
    def magnet_sigma_physical(self) -> float:
        return self.magnet.sigma_x * self.magnet_spacing


@dataclass(frozen=True)
class RecoilReport:
    branch_labels: tuple
    branch_probabilities: tuple
    p_overlap: float
    a_overlap: float
    p_overlap_predicted: float
    a_overlap_predicted: float
    momentum_before: float
    momentum_after: float
    particle_momentum_after: float
    magnet_momentum_after: float

    def as_dict(self) -> dict:
        return {
            "p_overlap": self.p_overlap,
            "a_overlap": self.a_overlap,
            "momentum_before": self.momentum_before,
            "momentum_after": self.momentum_after,
            "p_overlap_predicted": self.p_overlap_predicted,
            "a_overlap_predicted": self.a_overlap_predicted,
            "particle_momentum_after": self.particle_momentum_after,
            "magnet_momentum_after": self.magnet_momentum_after,
            "branch_labels": list(self.branch_labels),
            "branch_probabilities": list(self.branch_probabilities),
        }


def _total_momentum(state: PureState, spacing: float) -> tuple[float, float]:
    return mean_momentum(state, axis=1), mean_momentum(state, axis=2) / spacing


def _simulate_recoil(params: SGParams, branch_input, signs, labels):
    v = np.asarray(branch_input, dtype=np.complex128).reshape(-1)
    if v.size != 2 or np.linalg.norm(v) == 0:
        raise DimensionMismatch("input must be a nonzero 2-vector")
    v = v / np.linalg.norm(v)
    half = params.particle_kick / 2
    np_, na = params.particle.grid_size, params.magnet.grid_size
    p_kicks = [momentum_boost(np_, s * half) for s in signs]
    a_kicks = [momentum_boost(na, -s * half * params.magnet_spacing) for s in signs]
    model = build_three_dof(p_kicks, a_kicks)
    p0, a0 = params.particle.amplitudes(), params.magnet.amplitudes()
    initial = PureState.from_amplitudes((2, np_, na), kron_all(v, p0, a0))
    final = model.apply(initial)
    p_branch = [k.entries.diagonal() * p0 for k in p_kicks]
    a_branch = [k.entries.diagonal() * a0 for k in a_kicks]
    before = sum(_total_momentum(initial, params.magnet_spacing))
    pk, ak = _total_momentum(final, params.magnet_spacing)
    report = RecoilReport(
        branch_labels=tuple(labels),
        branch_probabilities=tuple(float(abs(c) ** 2) for c in v),
        p_overlap=float(abs(np.vdot(p_branch[0], p_branch[1]))),
        a_overlap=float(abs(np.vdot(a_branch[0], a_branch[1]))),
        p_overlap_predicted=gaussian_overlap(params.particle_kick, params.particle.sigma_x),
        a_overlap_predicted=gaussian_overlap(params.particle_kick, params.magnet_sigma_physical),
        momentum_before=before,
        momentum_after=pk + ak,
        particle_momentum_after=pk,
        magnet_momentum_after=ak,
    )
    return final, report


def simulate_stern_gerlach(params: SGParams | None = None, spin_input=(1, 1)):
    """Spin (x) particle grid (x) magnet grid after the magnet interaction.

    |z+> particles are deflected up (+kick/2) and the magnet recoils down.
    """
    return _simulate_recoil(params or SGParams(), spin_input, (+1, -1), ("z+", "z-"))


def simulate_pbs(params: SGParams | None = None, polarization_input=(1, 1)):
    """Polarization (x) photon path grid (x) PBS recoil grid; H goes left, V goes right."""
    return _simulate_recoil(params or SGParams(), polarization_input, (-1, +1), ("H", "V"))
