"""Discrete control-to-constraint map, its Gramian, and minimum-norm synthesis.

The stacked constraint vector holds the state at every node of the terminal
window ``[T-h, T]`` (the last node is the terminal condition, the others the
window condition) followed by the memory functional
``int_0^{T-h} Mt(T - s) y(s) ds``. Because the integrator is linear, the
constraint vector of a run is exactly ``G @ U + c0``.

Column ``j*m + c`` of ``G`` is the response to a unit hold on channel ``c``
during step ``j`` from a zero history. The discrete system is shift
invariant (uniform grid, zero data before the pulse), so these responses are
time shifts of ``m`` base simulations; ``tests/test_constraintmap.py``
checks them against direct simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure
from .model import Grid, SystemSpec
from .simulator import (
    CONDITIONS,
    ControlSignal,
    condition_residuals,
    history_nodes,
    integrate,
    simulate,
    trapezoid_weights,
)

DEFAULT_RANK_TOL = 1e-8
DEFAULT_VERDICT_TOL = 1e-6


@dataclass(frozen=True)
class RowLabel:
    condition: str  # "a", "b" or "c"
    step: int | None  # grid step of the sampled state; None for memory rows
    component: int


@dataclass(eq=False)
class ConstraintMap:
    spec: SystemSpec
    grid: Grid
    G: np.ndarray
    c0: np.ndarray
    history_map: np.ndarray
    row_layout: tuple[RowLabel, ...]
    weights: np.ndarray

    @property
    def d(self) -> int:
        return self.G.shape[0]

    @property
    def row_conditions(self) -> np.ndarray:
        return np.array([r.condition for r in self.row_layout])

    def rows(self, drop=()) -> np.ndarray:
        """Boolean mask of rows kept after dropping the given conditions."""
        return ~np.isin(self.row_conditions, list(drop))

    def weighted(self, drop=()) -> np.ndarray:
        """``G`` in the scaled variable ``v = sqrt(dt) u`` so that ``|v|^2`` is the L2 energy."""
        return self.G[self.rows(drop)] / np.sqrt(self.weights)[None, :]

    def apply(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float).reshape(-1)
        return self.G @ U + self.c0


def _row_layout(spec: SystemSpec, grid: Grid) -> tuple[RowLabel, ...]:
    N, nh, n = grid.n_horizon, grid.n_history, spec.n
    labels = []
    for i in range(N - nh, N + 1):
        cond = "a" if i == N else "c"
        labels.extend(RowLabel(cond, i, k) for k in range(n))
    labels.extend(RowLabel("b", None, k) for k in range(n))
    return tuple(labels)


def extract_constraints(spec: SystemSpec, grid: Grid, states: np.ndarray) -> np.ndarray:
    """Constraint vectors from batched states of shape ``(nodes, n, P)``; returns ``(d, P)``."""
    N, nh = grid.n_horizon, grid.n_history
    window = states[grid.node_index(N - nh): grid.node_index(N) + 1]
    P = states.shape[2]
    L = trapezoid_weights(spec, grid)
    J = N - nh
    mem = np.einsum("iab,ibp->ap", L, states[nh: nh + J + 1])
    return np.concatenate([window.reshape(-1, P), mem], axis=0)


def constraints(spec: SystemSpec, grid: Grid, U=None) -> np.ndarray:
    """Constraint vector of the run with the spec's history and control ``U`` (``(N, m)`` or flat)."""
    if U is not None:
        U = np.asarray(U, dtype=float).reshape(grid.n_horizon, spec.m)
    traj = simulate(spec, grid, U)
    return extract_constraints(spec, grid, traj.states[:, :, None])[:, 0]


def assemble(spec: SystemSpec, grid: Grid) -> ConstraintMap:
    """Build ``G``, the free response ``c0`` and the history-to-constraint map."""
    n, m = spec.n, spec.m
    N, nh = grid.n_horizon, grid.n_history

    pulses = np.zeros((N, m, m))
    pulses[0] = np.eye(m)
    base, _ = integrate(spec, grid, np.zeros((nh + 1, n, m)), pulses, N)
    # padded[N + r] = response at step r; zero for r < 0
    padded = np.zeros((2 * N + 1, n, m))
    padded[N:] = base[nh:]
    shifts = np.arange(N)

    blocks = []
    for i in range(N - nh, N + 1):
        resp = padded[N + i - shifts]  # (N, n, m)
        blocks.append(resp.transpose(1, 0, 2).reshape(n, N * m))
    L = trapezoid_weights(spec, grid)
    mem = np.zeros((n, N, m))
    if np.any(L):
        for i in range(N - nh + 1):
            mem += np.einsum("ab,jbc->ajc", L[i], padded[N + i - shifts])
    blocks.append(mem.reshape(n, N * m))
    G = np.concatenate(blocks, axis=0)

    phi = history_nodes(spec, grid)
    n_hist = n * (nh + 1)
    hist = np.zeros((nh + 1, n, 1 + n_hist))
    hist[:, :, 0] = phi
    hist[:, :, 1:] = np.eye(n_hist).reshape(nh + 1, n, n_hist)
    states, _ = integrate(spec, grid, hist, np.zeros((N, m, 1 + n_hist)), N)
    free = extract_constraints(spec, grid, states)

    for arr in (G, free):
        arr.setflags(write=False)
    return ConstraintMap(
        spec=spec,
        grid=grid,
        G=G,
        c0=free[:, 0],
        history_map=free[:, 1:],
        row_layout=_row_layout(spec, grid),
        weights=np.full(N * m, grid.dt),
    )


def _svd(M: np.ndarray, compute_uv=True):
    try:
        return np.linalg.svd(M, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from None


@dataclass
class ObservabilityReport:
    singular_values: np.ndarray
    sigma_max: float
    sigma_min: float
    rank: int
    observability_constant: float
    condition_number: float
    admissible_dim: int
    ratio: float
    controllable: bool
    rank_tol: float

    def to_dict(self) -> dict:
        return {
            "sigma_max": self.sigma_max,
            "sigma_min": self.sigma_min,
            "rank": self.rank,
            "observability_constant": self.observability_constant,
            "condition_number": self.condition_number,
            "admissible_dim": self.admissible_dim,
            "ratio": self.ratio,
            "controllable": self.controllable,
            "rank_tol": self.rank_tol,
            "singular_values": self.singular_values.tolist(),
        }


def _orth(M: np.ndarray, rel_tol: float) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = _svd(M)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0))
    return U[:, s > rel_tol * s[0]]


def observability_report(cm: ConstraintMap, rank_tol: float = DEFAULT_RANK_TOL, drop=()) -> ObservabilityReport:
    """Spectrum of the weighted map and the Gramian on the admissible constraint space.

    The admissible space is spanned by everything the discrete system can
    produce in constraint space: control responses and free responses to
    every history. Rows that no data can ever excite (memory rows of a zero
    target kernel, say) drop out, so ``W = Gw Gw^T`` restricted there is
    positive definite exactly when every history can be steered to zero.
    """
    rows = cm.rows(drop)
    Gw = cm.weighted(drop)
    F = cm.history_map[rows]
    s = _svd(Gw, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > rank_tol * smax)) if smax > 0 else 0

    def normalized(M):
        nrm = np.linalg.norm(M, 2) if M.size else 0.0
        return M / nrm if nrm > 0 else M

    Q = _orth(np.hstack([normalized(Gw), normalized(F)]), rank_tol)
    r = Q.shape[1]
    if r == 0:
        smin, ratio, ok = 0.0, math.inf, True
    else:
        proj = _svd(Q.T @ Gw, compute_uv=False)
        smin = float(proj[r - 1]) if proj.size >= r else 0.0
        ratio = smin / smax if smax > 0 else 0.0
        ok = ratio > rank_tol
    return ObservabilityReport(
        singular_values=s,
        sigma_max=smax,
        sigma_min=smin,
        rank=rank,
        observability_constant=smin ** 2,
        condition_number=smax / smin if smin > 0 else math.inf,
        admissible_dim=r,
        ratio=ratio,
        controllable=ok,
        rank_tol=rank_tol,
    )


@dataclass
class SynthesisResult:
    control: ControlSignal
    residual_a: float
    residual_b: float
    residual_c: float
    energy: float
    sigma_min: float
    sigma_max: float
    observability_constant: float
    controllable: bool
    rank_G: int
    relative_residual: float
    dropped: tuple[str, ...] = ()
    rank_tol: float = DEFAULT_RANK_TOL
    verdict_tol: float = DEFAULT_VERDICT_TOL
    grid: Grid | None = field(default=None, repr=False)

    @property
    def residuals(self) -> tuple[float, float, float]:
        return self.residual_a, self.residual_b, self.residual_c

    def to_dict(self) -> dict:
        out = {
            "controllable": self.controllable,
            "residual_a": self.residual_a,
            "residual_b": self.residual_b,
            "residual_c": self.residual_c,
            "energy": self.energy,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "rank": self.rank_G,
            "observability_constant": self.observability_constant,
            "relative_residual": self.relative_residual,
            "dropped": list(self.dropped),
            "tolerances": {"rank_tol": self.rank_tol, "verdict_tol": self.verdict_tol},
        }
        if self.grid is not None:
            out["grid"] = {"dt": self.grid.dt, "N": self.grid.n_horizon}
        return out


def synthesize(cm: ConstraintMap, rank_tol: float = DEFAULT_RANK_TOL,
               verdict_tol: float = DEFAULT_VERDICT_TOL, drop=()) -> SynthesisResult:
    """Minimum-energy control meeting the kept conditions in the least-squares sense.

    Truncated-SVD pseudoinverse of the weighted map; singular values below
    ``rank_tol * sigma_max`` are discarded. Reported residuals come from
    re-simulating the synthesized control, not from the linear algebra.
    """
    drop = tuple(sorted(set(drop)))
    rows = cm.rows(drop)
    Gw = cm.weighted(drop)
    c = cm.c0[rows]
    U, s, Vh = _svd(Gw)
    smax = float(s[0]) if s.size else 0.0
    if smax > 0:
        keep = s > rank_tol * smax
        v = -Vh[keep].T @ ((U[:, keep].T @ c) / s[keep])
    else:
        keep = np.zeros(s.shape, dtype=bool)
        v = np.zeros(Gw.shape[1])
    grid = cm.grid
    values = (v / np.sqrt(cm.weights)).reshape(grid.n_horizon, cm.spec.m)
    control = ControlSignal(grid.dt, values)

    lsq = float(np.linalg.norm(Gw @ v + c))
    rel = lsq / max(float(np.linalg.norm(c)), np.finfo(float).tiny)

    traj = simulate(cm.spec, grid, control)
    ra, rb, rc = condition_residuals(traj, cm.spec, grid)
    report = observability_report(cm, rank_tol, drop)
    return SynthesisResult(
        control=control,
        residual_a=ra,
        residual_b=rb,
        residual_c=rc,
        energy=float(v @ v),
        sigma_min=report.sigma_min,
        sigma_max=smax,
        observability_constant=report.observability_constant,
        controllable=bool(rel <= verdict_tol),
        rank_G=int(np.sum(keep)),
        relative_residual=rel,
        dropped=drop,
        rank_tol=rank_tol,
        verdict_tol=verdict_tol,
        grid=grid,
    )


def synthesize_partial(cm: ConstraintMap, drop, **kwargs) -> SynthesisResult:
    """:func:`synthesize` with the rows of the ``drop`` conditions removed."""
    drop = set(drop)
    unknown = drop - set(CONDITIONS)
    if unknown:
        raise ValueError(f"unknown conditions {sorted(unknown)}")
    if drop == set(CONDITIONS):
        raise ValueError("cannot drop every condition")
    return synthesize(cm, drop=drop, **kwargs)
