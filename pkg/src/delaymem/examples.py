"""Reference instances: a semidiscretized 1-D heat equation with memory and a small library.

The heat demo discretizes

    y_t - (y_x + int_0^t b(t - s) y_x(s) ds)_x = u chi_omega,   b(t) = exp(-gamma t)

on ``(0, L)`` with homogeneous Dirichlet conditions and second-order central
differences. With a spatially constant kernel the memory term collapses to
``M(t) = b(t) A`` where ``A`` is the discrete Laplacian. The optional
``A1 = alpha * I`` delayed term is not part of the PDE; it is added so the
demo exercises the window condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyControlRegion
from .model import HistoryFunction, MatrixKernel, SystemSpec, validate


@dataclass(frozen=True)
class HeatDemoParams:
    nodes: int = 10
    length: float = 1.0
    gamma: float = 1.0
    omega: tuple[float, float] = (0.3, 0.7)
    delay_gain: float = 0.0
    h: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        a, b = self.omega
        if self.nodes < 2:
            raise ValueError("need at least two interior nodes")
        if not self.length > 0:
            raise ValueError("domain length must be positive")
        if not 0 <= a < b <= self.length:
            raise ValueError(f"control region {self.omega} must satisfy 0 <= a < b <= L")
        if self.gamma < 0:
            raise ValueError("kernel decay rate must be nonnegative")

    @property
    def dx(self) -> float:
        return self.length / (self.nodes + 1)

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(1, self.nodes + 1)


def laplacian(nodes: int, dx: float) -> np.ndarray:
    main = -2.0 * np.ones(nodes)
    off = np.ones(nodes - 1)
    return (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / dx ** 2


def heat_semidiscretize(p: HeatDemoParams, history: HistoryFunction | None = None) -> SystemSpec:
    """Finite-difference system for the heat equation with memory.

    The default history is the constant-in-time profile ``sin(pi x / L)``.
    """
    n = p.nodes
    A = laplacian(n, p.dx)
    a, b = p.omega
    inside = np.flatnonzero((p.x > a) & (p.x < b))
    if inside.size == 0:
        raise EmptyControlRegion(f"no grid node falls inside {p.omega}")
    B = np.eye(n)[:, inside]
    kernel = MatrixKernel.separable([(p.gamma, A)])
    if history is None:
        history = HistoryFunction.constant(np.sin(np.pi * p.x / p.length))
    return validate(SystemSpec(A=A, A1=p.delay_gain * np.eye(n), B=B, h=p.h, T=p.T,
                               kernel=kernel, history=history))


@dataclass(frozen=True)
class LibraryEntry:
    name: str
    spec: SystemSpec
    controllable: bool
    provenance: str
    oracle: str
    grid_steps: int = 400
    extras: dict = field(default_factory=dict)


def _scalar(a=0.0, a1=0.0, b=1.0, h=0.0, T=1.0, kernel=None, phi=1.0) -> SystemSpec:
    return validate(SystemSpec(
        A=[[a]], A1=[[a1]], B=[[b]], h=h, T=T,
        kernel=kernel if kernel is not None else MatrixKernel.zero(1),
        history=HistoryFunction.constant([phi]),
    ))


def library() -> dict[str, LibraryEntry]:
    """Named instances with known verdicts."""
    entries = [
        LibraryEntry(
            "scalar-integrator", _scalar(), True, "TRIVIAL",
            "y' = u from y(0)=1: minimum-norm control is u = -1, energy y0^2/T = 1",
            extras={"energy": 1.0},
        ),
        LibraryEntry(
            "scalar-exponential", _scalar(a=1.0), True, "DERIVED",
            "minimum energy y0^2 exp(2aT)/W(T), W(T) = int_0^T exp(2a(T-s)) ds",
            extras={"energy": 2 * np.e ** 2 / (np.e ** 2 - 1)},
        ),
        LibraryEntry(
            "constant-kernel-memory", _scalar(kernel=MatrixKernel.constant([[1.0]])), True, "TRIVIAL",
            "augmented pair ([[0,1],[1,0]], [1,0]^T) has full Kalman rank",
        ),
        LibraryEntry(
            "exponential-kernel-memory",
            _scalar(a=-0.5, kernel=MatrixKernel.separable([(2.0, [[-1.5]])])), True, "TRIVIAL",
            "augmented pair ([[-0.5,-1.5],[1,-2]], [1,0]^T) has full Kalman rank",
        ),
        LibraryEntry(
            "pure-delay", _scalar(a1=1.0, h=1.0, T=2.0), True, "DERIVED",
            "method of steps under u=0, phi=1: y(t)=1+t on [0,1], y(t)=2+(t-1)+(t-1)^2/2 on [1,2]",
            extras={"y(1)": 2.0, "y(2)": 3.5},
        ),
        LibraryEntry(
            "scalar-delay-memory",
            _scalar(a=-0.5, a1=0.8, h=0.5, T=1.5, kernel=MatrixKernel.separable([(1.0, [[0.5]])])),
            True, "DERIVED", "scalar input acts on the whole state; Gramian oracle",
            grid_steps=420,
        ),
        LibraryEntry(
            "block-uncontrollable",
            validate(SystemSpec(
                A=[[-1.0, 1.0, 0.0], [0.0, -2.0, 0.5], [0.0, 0.0, -0.5]],
                A1=np.zeros((3, 3)), B=[[1.0], [0.0], [0.0]], h=0.0, T=1.0,
                kernel=MatrixKernel.zero(3), history=HistoryFunction.constant([1.0, 1.0, 1.0]),
            )),
            False, "TRIVIAL",
            "span{e2, e3} is A-invariant and untouched by B: unreachable invariant subspace",
            grid_steps=100,
        ),
        LibraryEntry(
            "heat-default", heat_semidiscretize(HeatDemoParams()), True, "DERIVED",
            "10-node heat with exp(-t) memory, control on (0.3, 0.7); Gramian oracle",
        ),
        LibraryEntry(
            "heat-delay",
            heat_semidiscretize(HeatDemoParams(nodes=5, gamma=1.0, omega=(0.0, 1.0), delay_gain=0.5,
                                               h=0.25, T=1.0)),
            True, "DERIVED",
            "5-node heat, exp(-t) memory, A1 = 0.5 I with h = 0.25, full actuation; Gramian oracle",
        ),
        LibraryEntry(
            "heat-delay-constant-kernel",
            heat_semidiscretize(HeatDemoParams(nodes=5, gamma=0.0, omega=(0.0, 1.0), delay_gain=-0.5,
                                               h=0.25, T=1.0)),
            True, "DERIVED",
            "5-node heat, constant memory kernel A, A1 = -0.5 I with h = 0.25, full actuation; Gramian oracle",
        ),
    ]
    return {e.name: e for e in entries}
