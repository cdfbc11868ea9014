"""Truncated-Fock Lindblad integrator used to validate the moment closure.

The two-mode state lives on n_cut x n_cut Fock levels; basis index
``i = n_a * n_cut + n_b``. Superoperators act on column-stacked density
matrices, vec(A rho B) = (B^T kron A) vec(rho).

Truncation keeps the generator exactly trace preserving, so trace drift only
measures integration error. Truncation error itself shows up as population
on the outermost Fock level of either mode, which is what ``evolve`` watches
to diagnose a cutoff that is too small.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .dynamics import MOMENT_NAMES, MomentState, time_grid
from .model import ModelParams, derive_rates, time_unit

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8
DRIFT_TOL = 1e-6
EDGE_TOL = 1e-4
DEFAULT_DT_JT = 1e-2


class CutoffTooSmall(RuntimeError):
    def __init__(self, message: str, n_cut: int, suggested: int):
        self.n_cut = n_cut
        self.suggested = suggested
        super().__init__(f"{message}; cutoff-too-small at n_cut={n_cut}, try n_cut={suggested}")


class InvalidState(ValueError):
    pass


class StepTooLarge(RuntimeError):
    pass


def _ladder(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr", dtype=complex)


@dataclass(frozen=True)
class FockSpace:
    n_cut: int
    a: sp.csr_matrix = field(repr=False)
    b: sp.csr_matrix = field(repr=False)

    @classmethod
    def of(cls, n_cut: int) -> "FockSpace":
        if n_cut < 2:
            raise ValueError("n_cut must be at least 2")
        low = _ladder(n_cut)
        eye = sp.identity(n_cut, dtype=complex, format="csr")
        return cls(n_cut, sp.kron(low, eye, format="csr"), sp.kron(eye, low, format="csr"))

    @property
    def dim(self) -> int:
        return self.n_cut**2

    def operators(self) -> dict[str, sp.csr_matrix]:
        a, b = self.a, self.b
        return {
            "mean_a": a,
            "mean_b": b,
            "n_a": a.getH() @ a,
            "aa": a @ a,
            "adag_b": a.getH() @ b,
            "ab": a @ b,
            "n_b": b.getH() @ b,
            "bb": b @ b,
        }

    def edge_mask(self) -> np.ndarray:
        """True on basis states with either mode at the top Fock level."""
        n = self.n_cut
        na, nb = np.divmod(np.arange(self.dim), n)
        return (na == n - 1) | (nb == n - 1)


@dataclass(frozen=True)
class DensityMatrix:
    n_cut: int
    data: np.ndarray

    def __post_init__(self):
        d = self.n_cut**2
        if self.data.shape != (d, d):
            raise ValueError(f"expected shape {(d, d)}, got {self.data.shape}")

    @classmethod
    def from_ket(cls, n_cut: int, ket: np.ndarray) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(n_cut, np.outer(ket, ket.conj()))

    @classmethod
    def fock(cls, n_cut: int, n_a: int, n_b: int) -> "DensityMatrix":
        ket = np.zeros(n_cut**2, dtype=complex)
        ket[n_a * n_cut + n_b] = 1.0
        return cls.from_ket(n_cut, ket)

    @classmethod
    def vacuum(cls, n_cut: int) -> "DensityMatrix":
        return cls.fock(n_cut, 0, 0)

    @classmethod
    def from_vec(cls, n_cut: int, vec: np.ndarray) -> "DensityMatrix":
        d = n_cut**2
        return cls(n_cut, np.asarray(vec, dtype=complex).reshape((d, d), order="F"))

    def vec(self) -> np.ndarray:
        return self.data.reshape(-1, order="F")

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def violations(
        self,
        trace_tol: float = TRACE_TOL,
        hermitian_tol: float = HERMITIAN_TOL,
        positivity_tol: float = POSITIVITY_TOL,
    ) -> list[str]:
        out = []
        tr = self.trace()
        if abs(tr - 1) > trace_tol:
            out.append(f"trace {tr:.3e} differs from 1")
        h = self.hermiticity_error()
        if h > hermitian_tol:
            out.append(f"non-Hermitian by {h:.3e}")
        lo = self.min_eigenvalue()
        if lo < -positivity_tol:
            out.append(f"negative eigenvalue {lo:.3e}")
        return out

    def check(self, **tols) -> "DensityMatrix":
        bad = self.violations(**tols)
        if bad:
            raise InvalidState("; ".join(bad))
        return self


def _spre(A: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(sp.identity(A.shape[0], format="csr"), A, format="csr")


def _spost(A: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(A.T, sp.identity(A.shape[0], format="csr"), format="csr")


def _dissipator(L: sp.spmatrix) -> sp.csr_matrix:
    LdL = L.getH() @ L
    return (sp.kron(L.conj(), L) - 0.5 * _spre(LdL) - 0.5 * _spost(LdL)).tocsr()


@dataclass(frozen=True)
class Generator:
    """Sparse Liouvillian acting on vec(rho); immutable after construction."""

    params: ModelParams
    space: FockSpace
    matrix: sp.csr_matrix = field(repr=False)
    hamiltonian: sp.csr_matrix = field(repr=False)
    # rows give Tr(O rho) = weights @ vec(rho) for the 8 moments, then the trace
    weights: sp.csr_matrix = field(repr=False)

    @property
    def n_cut(self) -> int:
        return self.space.n_cut

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def moments_of(self, vec: np.ndarray) -> np.ndarray:
        """(8,) moments for one vec(rho), or (k, 8) for a (N^2, k) stack."""
        return (self.weights[:-1] @ vec).T

    def trace_of(self, vec: np.ndarray) -> complex:
        return complex((self.weights[-1] @ vec)[0])


def _trace_weights(op: sp.spmatrix, dim: int) -> sp.csr_matrix:
    """Row vector w with w @ vec(rho) = Tr(op rho)."""
    coo = sp.coo_matrix(op)
    idx = coo.col + dim * coo.row
    return sp.csr_matrix((coo.data, (np.zeros_like(idx), idx)), shape=(1, dim * dim))


def build_generator(params: ModelParams, n_cut: int) -> Generator:
    """Liouvillian of the driven pair on an n_cut^2-dimensional Fock space."""
    rates = derive_rates(params)
    space = FockSpace.of(n_cut)
    a, b = space.a, space.b
    ad, bd = a.getH(), b.getH()
    J = rates.coupling_J
    drive = params.epsilon * cmath.exp(1j * params.theta)
    H = (
        params.delta * (ad @ a + bd @ b)
        + J * (ad @ b)
        + J.conjugate() * (a @ bd)
        + drive * (ad @ ad)
        + drive.conjugate() * (a @ a)
    ).tocsr()
    c = (rates.p_a_scaled * a + rates.p_b_scaled * b).tocsr()
    L = -1j * (_spre(H) - _spost(H))
    for rate, op in ((rates.kappa_a, a), (rates.kappa_b, b), (params.gamma, c)):
        if rate > 0:
            L = L + rate * _dissipator(op)
    dim = space.dim
    ops = list(space.operators().values()) + [sp.identity(dim, format="csr")]
    weights = sp.vstack([_trace_weights(op, dim) for op in ops], format="csr")
    return Generator(params, space, L.tocsr(), H, weights)


@dataclass(frozen=True)
class OracleTrajectory:
    t_grid: np.ndarray
    moments: np.ndarray  # complex (len(t_grid), 8)
    trace_drift: float
    edge_population: float
    final: DensityMatrix
    n_cut: int
    j_abs: float

    @property
    def Jt(self) -> np.ndarray:
        return self.t_grid * self.j_abs

    def column(self, name: str) -> np.ndarray:
        return self.moments[:, MOMENT_NAMES.index(name)]


def edge_population(rho: DensityMatrix) -> float:
    mask = FockSpace.of(rho.n_cut).edge_mask()
    return float(np.sum(np.diag(rho.data).real[mask]))


def _rk4(gen: Generator, x: np.ndarray, h: float) -> np.ndarray:
    L = gen.matrix
    k1 = L @ x
    k2 = L @ (x + 0.5 * h * k1)
    k3 = L @ (x + 0.5 * h * k2)
    k4 = L @ (x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(
    rho0: DensityMatrix,
    gen: Generator,
    t_final: float,
    dt: float,
    *,
    drift_tol: float = DRIFT_TOL,
    edge_tol: float = EDGE_TOL,
    checkpoints: int = 4,
) -> OracleTrajectory:
    """Classical RK4 on vec(rho) with moments sampled at every step.

    The trace is monitored, never renormalized. Raises CutoffTooSmall when
    the trace drifts by more than ``drift_tol`` or the outermost Fock level
    holds more than ``edge_tol`` population; the full state checks (trace,
    Hermiticity, positivity) run at ``checkpoints`` evenly spaced steps and
    at the end.
    """
    if rho0.n_cut != gen.n_cut:
        raise ValueError("state and generator cutoffs differ")
    rho0.check()
    if gen.params.epsilon > 0 and gen.n_cut < 3:
        # a^dag a^dag maps vacuum straight out of a two-level space: the drive is lost
        raise CutoffTooSmall("two-photon drive needs at least 3 Fock levels", gen.n_cut, 8)
    t = time_grid(t_final, dt)
    x = rho0.vec().copy()
    samples = np.empty((len(t), 8), dtype=complex)
    samples[0] = gen.moments_of(x)
    tr0 = gen.trace_of(x)
    drift = 0.0
    n = gen.n_cut
    check_at = set(np.linspace(0, len(t) - 1, checkpoints + 1).astype(int)[1:])
    edge = 0.0
    for k in range(1, len(t)):
        x = _rk4(gen, x, dt)
        samples[k] = gen.moments_of(x)
        drift = max(drift, abs(gen.trace_of(x) - tr0))
        if not math.isfinite(drift) or drift > 1.0:
            raise StepTooLarge(f"RK4 unstable at dt={dt:g}; reduce dt")
        if drift > drift_tol:
            raise CutoffTooSmall(f"trace drift {drift:.3e} > {drift_tol:g}", n, 2 * n)
        if k in check_at:
            rho = DensityMatrix.from_vec(n, x)
            edge = max(edge, edge_population(rho))
            if edge > edge_tol:
                raise CutoffTooSmall(
                    f"edge Fock population {edge:.3e} > {edge_tol:g} at t={t[k]:.6g}", n, 2 * n
                )
            rho.check()
    return OracleTrajectory(
        t_grid=t,
        moments=samples,
        trace_drift=drift,
        edge_population=edge,
        final=DensityMatrix.from_vec(n, x),
        n_cut=n,
        j_abs=time_unit(derive_rates(gen.params)),
    )


def extract_moments(rho: DensityMatrix) -> MomentState:
    ops = FockSpace.of(rho.n_cut).operators()
    values = [complex((op @ rho.data).diagonal().sum()) for op in ops.values()]
    return MomentState.from_array(values)


def steady_state_oracle(
    gen: Generator,
    rho0: Optional[DensityMatrix] = None,
    dt: Optional[float] = None,
    *,
    tol: float = 1e-10,
    chunk_t: Optional[float] = None,
    max_t: Optional[float] = None,
) -> DensityMatrix:
    """Relax by RK4 until max |L vec(rho)| < tol.

    Starting from an already-evolved state (e.g. an ``evolve`` end point)
    usually needs no extra steps.
    """
    j = time_unit(derive_rates(gen.params))
    dt = DEFAULT_DT_JT / j if dt is None else dt
    chunk_t = 5.0 / j if chunk_t is None else chunk_t
    max_t = 2000.0 / j if max_t is None else max_t
    rho = rho0 or DensityMatrix.vacuum(gen.n_cut)
    x = rho.vec().copy()
    steps = max(1, int(round(chunk_t / dt)))
    elapsed = 0.0
    while np.max(np.abs(gen.apply(x))) >= tol:
        if elapsed >= max_t:
            raise RuntimeError(f"no steady state within t={max_t:g}")
        for _ in range(steps):
            x = _rk4(gen, x, dt)
        elapsed += steps * dt
    return DensityMatrix.from_vec(gen.n_cut, x).check()


@dataclass(frozen=True)
class CutoffStudy:
    chosen: int
    converged: bool
    cutoffs: tuple[int, ...]
    # max |change| of n_a, n_b over the trajectory between consecutive cutoffs
    changes: tuple[float, ...]
    # geometric-tail estimate of the remaining truncation error at ``chosen``
    error_estimate: float
    trajectory: OracleTrajectory


def auto_cutoff(
    params: ModelParams,
    t_final: float,
    dt: float,
    *,
    cutoffs: Sequence[int] = (8, 12, 16),
    rtol: float = 1e-5,
) -> CutoffStudy:
    """Raise n_cut through ``cutoffs`` until the truncation error is below rtol.

    Successive changes in (n_a, n_b) shrink geometrically with the cutoff, so
    with changes d1, d2 the remaining error is about d2 r / (1 - r), r = d2/d1.
    Convergence is declared when that estimate, relative to max(n_a, n_b),
    is below ``rtol``. Cutoffs that fail the edge-population check are skipped.
    """
    runs: list[OracleTrajectory] = []
    changes: list[float] = []
    estimate = math.inf
    for n in cutoffs:
        try:
            traj = evolve(DensityMatrix.vacuum(n), build_generator(params, n), t_final, dt)
        except CutoffTooSmall:
            continue
        if runs:
            prev = runs[-1]
            d = max(
                float(np.max(np.abs(traj.column(k) - prev.column(k)))) for k in ("n_a", "n_b")
            )
            changes.append(d)
            scale = max(
                float(np.max(np.abs(traj.column(k)))) for k in ("n_a", "n_b")
            ) or 1.0
            if d == 0.0:
                estimate = 0.0
            elif len(changes) >= 2 and changes[-2] > 0 and d < changes[-2]:
                r = d / changes[-2]
                estimate = d * r / (1 - r) / scale
            else:
                estimate = d / scale
        runs.append(traj)
        if estimate < rtol:
            break
    if not runs:
        largest = max(cutoffs)
        raise CutoffTooSmall("every candidate cutoff fails the edge check", largest, 2 * largest)
    return CutoffStudy(
        chosen=runs[-1].n_cut,
        converged=estimate < rtol,
        cutoffs=tuple(r.n_cut for r in runs),
        changes=tuple(changes),
        error_estimate=estimate,
        trajectory=runs[-1],
    )
