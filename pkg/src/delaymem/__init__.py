"""Null controllability of linear systems with a discrete delay and Volterra memory.

The target is the three-part condition at the horizon ``T``: the state
vanishes at ``T``, the target-kernel-weighted memory integral over
``[0, T-h]`` vanishes, and the state vanishes on the whole window
``[T-h, T)``. Modules:

- :mod:`delaymem.model` problem instances, kernels, histories, config I/O
- :mod:`delaymem.simulator` fixed-step integrator and residual checks
- :mod:`delaymem.constraintmap` control-to-constraint map, Gramian, synthesis
- :mod:`delaymem.algebraic` rank tests and cross-validation
- :mod:`delaymem.examples` heat-equation demo and instance library
- :mod:`delaymem.cli` command-line interface
"""

from .constraintmap import (
    ConstraintMap,
    SynthesisResult,
    assemble,
    observability_report,
    synthesize,
    synthesize_partial,
)
from .model import (
    Grid,
    HistoryFunction,
    MatrixKernel,
    SystemSpec,
    eval_history,
    eval_kernel,
    load_spec,
    make_grid,
    save_spec,
    validate,
)
from .simulator import ControlSignal, Trajectory, condition_residuals, rest_test, simulate

__version__ = "0.1.0"

__all__ = [
    "ConstraintMap",
    "ControlSignal",
    "Grid",
    "HistoryFunction",
    "MatrixKernel",
    "SynthesisResult",
    "SystemSpec",
    "Trajectory",
    "assemble",
    "condition_residuals",
    "eval_history",
    "eval_kernel",
    "load_spec",
    "make_grid",
    "observability_report",
    "rest_test",
    "save_spec",
    "simulate",
    "synthesize",
    "synthesize_partial",
    "validate",
]
