"""Fixed-step integration of the delay-Volterra system.

One explicit trapezoidal (Heun) step per node for the local part, the
delayed state read straight from stored nodes (``h`` is a whole number of
steps), and the memory integral by the composite trapezoidal rule over all
stored nodes. Controls are zero-order hold. The scheme is linear in the
history and the control, which is what lets :mod:`delaymem.constraintmap`
treat the discrete dynamics as an exact linear map.

The integrator works on a trailing batch axis so many right-hand sides
(unit controls, unit histories) can be pushed through one loop.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, OutOfDomain
from .model import Grid, MatrixKernel, SystemSpec

CONDITIONS = ("a", "b", "c")


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Zero-order-hold control: ``values[j]`` acts on ``[j*dt, (j+1)*dt)``."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, grid: Grid, m: int) -> "ControlSignal":
        return cls(grid.dt, np.zeros((grid.n_horizon, m)))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps)

    def energy(self) -> float:
        """Discrete L2 energy ``sum_j dt * |u_j|^2``."""
        return float(self.dt * np.sum(self.values ** 2))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States at nodes ``-h, -h+dt, ..., T[, ...]`` plus the memory integral at nodes ``0, dt, ...``."""

    grid: Grid
    states: np.ndarray
    memory: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.dt * np.arange(-self.grid.n_history, self.states.shape[0] - self.grid.n_history)

    @property
    def n_steps(self) -> int:
        """Steps after time 0 (may exceed ``grid.n_horizon`` for extended runs)."""
        return self.states.shape[0] - self.grid.n_history - 1

    def at_step(self, j: int) -> np.ndarray:
        return self.states[self.grid.n_history + j]

    def final(self) -> np.ndarray:
        return self.at_step(self.grid.n_horizon)


def _separable_fast_path(kernel: MatrixKernel) -> bool:
    return kernel.is_separable


def integrate(spec: SystemSpec, grid: Grid, hist: np.ndarray, controls: np.ndarray,
              n_steps: int | None = None, fast: bool = True):
    """Batched core integrator.

    Parameters
    ----------
    hist : array, shape (n_history + 1, n, P)
        State values at the history nodes ``-h, ..., 0``.
    controls : array, shape (n_steps, m, P)
        Held control values per step.
    fast : bool
        Use the exponential recurrence for separable kernels instead of the
        full trapezoid sum. Both give the same trapezoid value up to rounding.

    Returns
    -------
    states : array, shape (n_history + 1 + n_steps, n, P)
    memory : array, shape (n_steps + 1, n, P)
    """
    n, nh, dt = spec.n, grid.n_history, grid.dt
    if n_steps is None:
        n_steps = controls.shape[0]
    if controls.shape[0] < n_steps:
        raise GridMismatch(f"control covers {controls.shape[0]} steps, need {n_steps}")
    P = hist.shape[2]
    A, A1, B = spec.A, spec.A1, spec.B
    kernel = spec.kernel

    Y = np.zeros((nh + 1 + n_steps, n, P))
    Y[: nh + 1] = hist
    V = np.zeros((n_steps + 1, n, P))

    use_memory = not kernel.is_zero
    recurrence = use_memory and fast and _separable_fast_path(kernel)
    if use_memory:
        if recurrence:
            decay = np.exp(-kernel.decay_rates * dt)
            weighted = kernel.coefficients * decay[:, None, None]
            M0 = kernel.coefficients.sum(axis=0)
            S = 0.5 * np.broadcast_to(Y[nh], (kernel.n_terms, n, P)).copy()
        else:
            if kernel.domain_end < n_steps * dt * (1 - 1e-12):
                raise OutOfDomain(f"kernel sampled on [0, {kernel.domain_end}] but simulation runs to {n_steps * dt}")
            Kt = kernel.table(dt * np.arange(n_steps + 1))
            M0 = Kt[0]

    y = Y[nh].copy()
    f = A @ y + A1 @ Y[0] + B @ controls[0]
    for j in range(n_steps):
        Bu = B @ controls[j]
        if j > 0:
            f = A @ y + A1 @ Y[j] + V[j] + Bu
        pred = y + dt * f
        if use_memory:
            if recurrence:
                partial = dt * np.einsum("kab,kbp->ap", weighted, S)
            else:
                past = Y[nh: nh + j + 1]
                partial = dt * np.einsum("iab,ibp->ap", Kt[j + 1:0:-1], past)
                partial -= 0.5 * dt * Kt[j + 1] @ Y[nh]
            mem_pred = partial + 0.5 * dt * (M0 @ pred)
        else:
            mem_pred = 0.0
        delayed = pred if nh == 0 else Y[j + 1]
        f_pred = A @ pred + A1 @ delayed + mem_pred + Bu
        y = y + 0.5 * dt * (f + f_pred)
        Y[nh + j + 1] = y
        if use_memory:
            V[j + 1] = partial + 0.5 * dt * (M0 @ y)
            if recurrence:
                S = decay[:, None, None] * S + y
    return Y, V


def _control_array(u, grid: Grid, m: int, n_steps: int) -> np.ndarray:
    if u is None:
        return np.zeros((n_steps, m, 1))
    if isinstance(u, ControlSignal):
        if not math.isclose(u.dt, grid.dt, rel_tol=1e-9):
            raise GridMismatch(f"control dt={u.dt} differs from grid dt={grid.dt}")
        values = u.values
    else:
        values = np.asarray(u, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, m)
    if values.shape[1] != m:
        raise GridMismatch(f"control has {values.shape[1]} channels, system has {m}")
    if values.shape[0] < grid.n_horizon:
        raise GridMismatch(f"control covers {values.shape[0]} steps, horizon needs {grid.n_horizon}")
    out = np.zeros((n_steps, m, 1))
    k = min(values.shape[0], n_steps)
    out[:k, :, 0] = values[:k]
    return out


def history_nodes(spec: SystemSpec, grid: Grid) -> np.ndarray:
    """History sampled at the grid nodes ``-h, ..., 0``, shape ``(n_history + 1, n)``."""
    thetas = grid.dt * np.arange(-grid.n_history, 1)
    thetas[0] = -spec.h if grid.n_history else 0.0
    return spec.history.nodes(thetas)


def extension_steps(grid: Grid, extra_time: float) -> int:
    return int(math.ceil(extra_time / grid.dt - 1e-9)) if extra_time > 0 else 0


def simulate(spec: SystemSpec, grid: Grid, u=None, extend_to: float | None = None,
             fast: bool = True) -> Trajectory:
    """Integrate the system on ``grid`` under ``u`` (``None`` means zero control).

    With ``extend_to > T`` the run continues with zero control up to that time.
    """
    n_steps = grid.n_horizon
    if extend_to is not None and extend_to > grid.T:
        n_steps += extension_steps(grid, extend_to - grid.T)
    U = _control_array(u, grid, spec.m, n_steps)
    U[grid.n_horizon:] = 0.0
    hist = history_nodes(spec, grid)[:, :, None]
    Y, V = integrate(spec, grid, hist, U, n_steps, fast=fast)
    states, memory = Y[:, :, 0], V[:, :, 0]
    states.setflags(write=False)
    memory.setflags(write=False)
    return Trajectory(grid, states, memory)


def trapezoid_weights(spec: SystemSpec, grid: Grid, target_kernel: MatrixKernel | None = None,
                      at: float | None = None, upper_steps: int | None = None) -> np.ndarray:
    """Matrices ``L_i`` with ``sum_i L_i y_i`` = trapezoid of ``int_0^upper K(at - s) y(s) ds``.

    Returns shape ``(upper_steps + 1, n, n)``; node ``i`` sits at ``i * dt``.
    """
    k = spec.target_kernel if target_kernel is None else target_kernel
    at = grid.T if at is None else at
    J = grid.n_horizon - grid.n_history if upper_steps is None else upper_steps
    if J == 0:
        return np.zeros((1, spec.n, spec.n))
    s = grid.dt * np.arange(J + 1)
    lags = np.maximum(at - s, 0.0)
    w = np.full(J + 1, grid.dt)
    w[0] = w[-1] = 0.5 * grid.dt
    return w[:, None, None] * k.table(lags)


def memory_functional(traj: Trajectory, target_kernel: MatrixKernel, at: float, upper: float) -> np.ndarray:
    """Trapezoid approximation of ``int_0^upper K(at - s) y(s) ds`` on the trajectory's grid."""
    grid = traj.grid
    if upper > at + 1e-12 * max(1.0, at):
        raise ValueError("upper limit exceeds evaluation time")
    J = int(round(upper / grid.dt))
    if abs(J * grid.dt - upper) > 1e-9 * max(1.0, upper):
        raise GridMismatch(f"upper limit {upper} is not a grid node")
    if J > traj.n_steps:
        raise OutOfDomain("trajectory does not reach the upper limit")
    n = traj.states.shape[1]
    if J == 0 or target_kernel.is_zero:
        return np.zeros(n)
    s = grid.dt * np.arange(J + 1)
    w = np.full(J + 1, grid.dt)
    w[0] = w[-1] = 0.5 * grid.dt
    K = target_kernel.table(np.maximum(at - s, 0.0))
    ys = traj.states[grid.n_history: grid.n_history + J + 1]
    return np.einsum("i,iab,ib->a", w, K, ys)


def condition_residuals(traj: Trajectory, spec: SystemSpec, grid: Grid) -> tuple[float, float, float]:
    """Norms of the three terminal conditions: ``y(T)``, the memory functional, and ``y`` on ``[T-h, T)``."""
    N, nh = grid.n_horizon, grid.n_history
    res_a = float(np.linalg.norm(traj.at_step(N)))
    mem = memory_functional(traj, spec.target_kernel, grid.T, (N - nh) * grid.dt)
    res_b = float(np.linalg.norm(mem))
    if nh == 0:
        res_c = 0.0
    else:
        window = traj.states[grid.node_index(N - nh): grid.node_index(N)]
        res_c = float(np.max(np.linalg.norm(window, axis=1)))
    return res_a, res_b, res_c


def continuation(spec: SystemSpec, grid: Grid, u, horizon: float) -> dict:
    """Run past ``T`` with zero control and summarize what happens on ``(T, T + horizon]``.

    Returns ``rest_max`` (largest state norm) and ``memory_drift`` (largest
    norm of the memory integral) over the continuation nodes.
    """
    traj = simulate(spec, grid, u, extend_to=grid.T + horizon)
    start = grid.node_index(grid.n_horizon) + 1
    post = traj.states[start:]
    mem = traj.memory[grid.n_horizon + 1:]
    rest = float(np.max(np.linalg.norm(post, axis=1))) if len(post) else 0.0
    drift = float(np.max(np.linalg.norm(mem, axis=1))) if len(mem) else 0.0
    return {"rest_max": rest, "memory_drift": drift, "trajectory": traj}


def rest_test(spec: SystemSpec, grid: Grid, u, horizon: float) -> float:
    """Largest ``|y(t)|`` for ``t`` in ``(T, T + horizon]`` with zero control after ``T``."""
    return continuation(spec, grid, u, horizon)["rest_max"]


# -- CSV ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_to_csv(traj: Trajectory) -> str:
    n = traj.states.shape[1]
    out = io.StringIO()
    out.write(",".join(["t"] + [f"y{i + 1}" for i in range(n)]) + "\n")
    for t, row in zip(traj.times, traj.states):
        out.write(",".join([_fmt(t)] + [_fmt(v) for v in row]) + "\n")
    return out.getvalue()


def control_to_csv(u: ControlSignal) -> str:
    m = u.values.shape[1]
    out = io.StringIO()
    out.write(",".join(["t"] + [f"u{i + 1}" for i in range(m)]) + "\n")
    for t, row in zip(u.times, u.values):
        out.write(",".join([_fmt(t)] + [_fmt(v) for v in row]) + "\n")
    return out.getvalue()


def _read_table(text: str, prefix: str):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty CSV")
    header = [c.strip() for c in lines[0].split(",")]
    if header[0] != "t" or any(not c.startswith(prefix) for c in header[1:]):
        raise ValueError(f"unexpected CSV header {header}")
    data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]], dtype=float)
    data = data.reshape(-1, len(header))
    return data[:, 0], data[:, 1:]


def read_trajectory_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    return _read_table(text, "y")


def read_control_csv(text: str) -> ControlSignal:
    """Parse a control table; rows must be evenly spaced from ``t = 0``."""
    t, values = _read_table(text, "u")
    if t.size == 0:
        raise ValueError("control CSV has no rows")
    if t.size == 1:
        raise GridMismatch("cannot infer dt from a single control row")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if abs(t[0]) > 1e-12 or np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(1.0, dt):
        raise GridMismatch("control rows are not evenly spaced from t=0")
    return ControlSignal(dt, values)
