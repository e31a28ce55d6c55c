"""Problem instances for linear systems with a discrete delay and Volterra memory.

The system is

    y'(t) = A y(t) + A1 y(t - h) + int_0^t M(t - s) y(s) ds + B u(t),   t in [0, T]
    y(theta) = phi(theta),                                                 theta in [-h, 0]

and the controllability target additionally involves a second kernel
``target_kernel`` (defaults to ``kernel``) weighting the memory functional
that must vanish at ``T``.

Everything here is immutable: arrays are copied on construction and flagged
read-only so instances can be shared between workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GridError,
    HorizonTooShort,
    KernelDomainTooShort,
    NegativeDelay,
    OutOfDomain,
    ParseError,
)

SEPARABLE = "separable"
SAMPLED = "sampled"

CONSTANT = "constant"
POLYNOMIAL = "polynomial"

# slack for floating-point grid endpoints, relative to the interval length
_DOMAIN_SLACK = 1e-12


def _frozen(a, ndim=None, name="array"):
    arr = np.array(a, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _matrix(a, name):
    arr = np.array(a, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MatrixKernel:
    """Matrix-valued convolution kernel ``t -> M(t)``.

    Two forms are supported. ``separable`` is an exponential sum
    ``M(t) = sum_k exp(-decay_k t) coeff_k`` (an empty sum is the zero
    kernel); ``sampled`` linearly interpolates matrices given on an
    increasing time grid starting at 0.

    Use the :meth:`separable`, :meth:`sampled` and :meth:`zero`
    constructors rather than the raw initializer.
    """

    form: str
    n: int
    decay_rates: np.ndarray = field(default_factory=lambda: _frozen([]))
    coefficients: np.ndarray = field(default_factory=lambda: _frozen(np.zeros((0, 0, 0))))
    times: np.ndarray = field(default_factory=lambda: _frozen([]))
    values: np.ndarray = field(default_factory=lambda: _frozen(np.zeros((0, 0, 0))))

    @classmethod
    def zero(cls, n: int) -> "MatrixKernel":
        return cls.separable([], n=n)

    @classmethod
    def constant(cls, matrix) -> "MatrixKernel":
        return cls.separable([(0.0, matrix)])

    @classmethod
    def separable(cls, terms: Sequence[tuple[float, Any]], n: int | None = None) -> "MatrixKernel":
        rates = [float(g) for g, _ in terms]
        mats = [np.array(c, dtype=float) for _, c in terms]
        if mats:
            n0 = mats[0].shape[0] if mats[0].ndim == 2 else -1
            for c in mats:
                if c.ndim != 2 or c.shape != (n0, n0):
                    raise DimensionMismatch("kernel coefficients must share one square shape")
            if n is not None and n != n0:
                raise DimensionMismatch(f"kernel coefficients are {n0}x{n0}, expected n={n}")
            n = n0
        elif n is None:
            raise DimensionMismatch("an empty separable kernel needs an explicit n")
        for g in rates:
            if not (g >= 0.0 and math.isfinite(g)):
                raise ValueError(f"decay rates must be finite and nonnegative, got {g}")
        coeffs = np.array(mats, dtype=float).reshape(len(mats), n, n)
        return cls(SEPARABLE, int(n), decay_rates=_frozen(rates), coefficients=_frozen(coeffs))

    @classmethod
    def sampled(cls, times, values) -> "MatrixKernel":
        t = np.array(times, dtype=float)
        v = np.array(values, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("sampled kernel needs at least two sample times")
        if v.ndim != 3 or v.shape[0] != t.size or v.shape[1] != v.shape[2]:
            raise DimensionMismatch(f"sampled kernel values must have shape ({t.size}, n, n), got {v.shape}")
        if t[0] != 0.0:
            raise ValueError("sampled kernel grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sampled kernel times must be strictly increasing")
        return cls(SAMPLED, int(v.shape[1]), times=_frozen(t), values=_frozen(v))

    @property
    def is_separable(self) -> bool:
        return self.form == SEPARABLE

    @property
    def n_terms(self) -> int:
        return len(self.decay_rates) if self.is_separable else 0

    @property
    def domain_end(self) -> float:
        return math.inf if self.is_separable else float(self.times[-1])

    @property
    def is_zero(self) -> bool:
        """True when the kernel vanishes identically (structurally)."""
        if self.is_separable:
            return not np.any(self.coefficients)
        return not np.any(self.values)

    def __call__(self, t: float) -> np.ndarray:
        return eval_kernel(self, t)

    def table(self, ts) -> np.ndarray:
        """Kernel matrices at every time in ``ts``, shape ``(len(ts), n, n)``."""
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < 0):
            raise OutOfDomain("kernel evaluated at negative time")
        if self.is_separable:
            if self.n_terms == 0:
                return np.zeros((ts.size, self.n, self.n))
            w = np.exp(-np.outer(ts, self.decay_rates))
            return np.einsum("tk,kab->tab", w, self.coefficients)
        end = self.times[-1]
        if np.any(ts > end + _DOMAIN_SLACK * max(1.0, end)):
            raise OutOfDomain(f"kernel sampled on [0, {end}] evaluated at t={ts.max()}")
        ts = np.minimum(ts, end)
        idx = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[idx]
        t1 = self.times[idx + 1]
        lam = ((ts - t0) / (t1 - t0))[:, None, None]
        return (1.0 - lam) * self.values[idx] + lam * self.values[idx + 1]

    def __eq__(self, other):
        if not isinstance(other, MatrixKernel):
            return NotImplemented
        if self.form != other.form or self.n != other.n:
            return False
        if self.is_separable:
            return (np.array_equal(self.decay_rates, other.decay_rates)
                    and np.array_equal(self.coefficients, other.coefficients))
        return np.array_equal(self.times, other.times) and np.array_equal(self.values, other.values)

    __hash__ = None


def eval_kernel(k: MatrixKernel, t: float) -> np.ndarray:
    """Evaluate ``k`` at a single time ``t >= 0``.

    Separable kernels are summed exactly; sampled kernels are linearly
    interpolated and raise :class:`OutOfDomain` past their last sample.
    """
    if t < 0:
        raise OutOfDomain(f"kernel evaluated at negative time t={t}")
    if k.is_separable:
        out = np.zeros((k.n, k.n))
        for g, c in zip(k.decay_rates, k.coefficients):
            out += math.exp(-g * t) * c
        return out
    return k.table([t])[0]


@dataclass(frozen=True, eq=False)
class HistoryFunction:
    """Initial history ``phi`` on ``[-h, 0]``.

    ``constant``: ``data`` is a vector. ``polynomial``: ``data`` has shape
    ``(degree + 1, n)`` with ``phi(theta) = sum_p data[p] * theta**p``.
    ``sampled``: ``times`` (increasing, ending at 0) and ``data`` of shape
    ``(len(times), n)`` with linear interpolation.
    """

    form: str
    data: np.ndarray
    times: np.ndarray = field(default_factory=lambda: _frozen([]))

    @classmethod
    def constant(cls, vector) -> "HistoryFunction":
        return cls(CONSTANT, _frozen(vector, 1, "history vector"))

    @classmethod
    def zero(cls, n: int) -> "HistoryFunction":
        return cls.constant(np.zeros(n))

    @classmethod
    def polynomial(cls, coefficients) -> "HistoryFunction":
        c = np.array(coefficients, dtype=float)
        if c.ndim != 2 or c.shape[0] == 0:
            raise DimensionMismatch("polynomial history coefficients must have shape (degree+1, n)")
        return cls(POLYNOMIAL, _frozen(c))

    @classmethod
    def sampled(cls, times, values) -> "HistoryFunction":
        t = np.array(times, dtype=float)
        v = np.array(values, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("sampled history needs at least one sample time")
        if v.ndim != 2 or v.shape[0] != t.size:
            raise DimensionMismatch(f"sampled history values must have shape ({t.size}, n), got {v.shape}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sampled history times must be strictly increasing")
        if t[-1] != 0.0:
            raise ValueError("sampled history grid must end at 0")
        return cls(SAMPLED, _frozen(v), _frozen(t))

    @property
    def n(self) -> int:
        return int(self.data.shape[-1])

    @property
    def domain_start(self) -> float:
        return float(self.times[0]) if self.form == SAMPLED else -math.inf

    def __call__(self, theta: float) -> np.ndarray:
        return eval_history(self, theta)

    def nodes(self, thetas) -> np.ndarray:
        """History values at each ``theta`` in ``thetas``, shape ``(len, n)``."""
        th = np.asarray(thetas, dtype=float)
        if np.any(th > 0):
            raise OutOfDomain("history evaluated at positive time")
        if self.form == CONSTANT:
            return np.tile(self.data, (th.size, 1))
        if self.form == POLYNOMIAL:
            powers = th[:, None] ** np.arange(self.data.shape[0])[None, :]
            return powers @ self.data
        start = self.times[0]
        if np.any(th < start - _DOMAIN_SLACK * max(1.0, abs(start))):
            raise OutOfDomain(f"history sampled on [{start}, 0] evaluated at theta={th.min()}")
        th = np.maximum(th, start)
        if self.times.size == 1:
            return np.tile(self.data[0], (th.size, 1))
        return np.stack([np.interp(th, self.times, self.data[:, i]) for i in range(self.n)], axis=1)

    def __eq__(self, other):
        if not isinstance(other, HistoryFunction):
            return NotImplemented
        return (self.form == other.form and np.array_equal(self.data, other.data)
                and np.array_equal(self.times, other.times))

    __hash__ = None


def eval_history(phi: HistoryFunction, theta: float, h: float | None = None) -> np.ndarray:
    """Evaluate the history at ``theta``; with ``h`` given, enforce ``-h <= theta <= 0``."""
    if h is not None and theta < -h - _DOMAIN_SLACK * max(1.0, h):
        raise OutOfDomain(f"theta={theta} outside [-{h}, 0]")
    return phi.nodes([theta])[0]


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A full problem instance. ``n`` and ``m`` are inferred from ``A`` and ``B``."""

    A: np.ndarray
    A1: np.ndarray
    B: np.ndarray
    h: float
    T: float
    kernel: MatrixKernel
    history: HistoryFunction
    target_kernel: MatrixKernel | None = None

    def __post_init__(self):
        object.__setattr__(self, "A", _matrix(self.A, "A"))
        object.__setattr__(self, "A1", _matrix(self.A1, "A1"))
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        object.__setattr__(self, "B", _matrix(B, "B"))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "T", float(self.T))
        if self.target_kernel is None:
            object.__setattr__(self, "target_kernel", self.kernel)

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def m(self) -> int:
        return int(self.B.shape[1])

    def replace(self, **changes) -> "SystemSpec":
        fields = dict(A=self.A, A1=self.A1, B=self.B, h=self.h, T=self.T, kernel=self.kernel,
                      history=self.history, target_kernel=self.target_kernel)
        if "kernel" in changes and "target_kernel" not in changes and self.target_kernel is self.kernel:
            fields["target_kernel"] = None
        fields.update(changes)
        return SystemSpec(**fields)

    def __eq__(self, other):
        if not isinstance(other, SystemSpec):
            return NotImplemented
        return (np.array_equal(self.A, other.A) and np.array_equal(self.A1, other.A1)
                and np.array_equal(self.B, other.B) and self.h == other.h and self.T == other.T
                and self.kernel == other.kernel and self.target_kernel == other.target_kernel
                and self.history == other.history)

    __hash__ = None


def validate(spec: SystemSpec) -> SystemSpec:
    """Check every invariant of ``spec`` and return it unchanged."""
    n = spec.n
    if spec.A.shape != (n, n):
        raise DimensionMismatch(f"A must be square, got {spec.A.shape}")
    if spec.A1.shape != (n, n):
        raise DimensionMismatch(f"A1 has shape {spec.A1.shape}, expected ({n}, {n})")
    if spec.B.shape[0] != n:
        raise DimensionMismatch(f"B has {spec.B.shape[0]} rows, expected {n}")
    for name, k in (("kernel", spec.kernel), ("target_kernel", spec.target_kernel)):
        if k.n != n:
            raise DimensionMismatch(f"{name} is {k.n}x{k.n}, expected {n}x{n}")
    if spec.history.n != n:
        raise DimensionMismatch(f"history has dimension {spec.history.n}, expected {n}")
    for name, v in (("h", spec.h), ("T", spec.T)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
    if spec.h < 0:
        raise NegativeDelay(f"delay h={spec.h} is negative")
    if not spec.T > spec.h:
        raise HorizonTooShort(f"horizon T={spec.T} must exceed the delay h={spec.h}")
    for name, k in (("kernel", spec.kernel), ("target_kernel", spec.target_kernel)):
        if not k.is_separable and k.domain_end < spec.T * (1 - _DOMAIN_SLACK):
            raise KernelDomainTooShort(f"{name} sampled on [0, {k.domain_end}] does not cover [0, {spec.T}]")
    if spec.history.form == SAMPLED and spec.history.domain_start > -spec.h + _DOMAIN_SLACK * max(1.0, spec.h):
        raise OutOfDomain(f"history sampled from {spec.history.domain_start} does not cover [-{spec.h}, 0]")
    for name in ("A", "A1", "B"):
        if not np.all(np.isfinite(getattr(spec, name))):
            raise ValueError(f"{name} has non-finite entries")
    return spec


@dataclass(frozen=True)
class Grid:
    """Uniform time grid with ``h = n_history * dt`` and ``T = n_horizon * dt``."""

    dt: float
    n_history: int
    n_horizon: int

    def __post_init__(self):
        if not self.dt > 0:
            raise GridError(f"dt must be positive, got {self.dt}")
        if self.n_history < 0 or self.n_horizon < 1:
            raise GridError("grid needs n_history >= 0 and n_horizon >= 1")

    @property
    def h(self) -> float:
        return self.n_history * self.dt

    @property
    def T(self) -> float:
        return self.n_horizon * self.dt

    @property
    def times(self) -> np.ndarray:
        """Node times from ``-h`` to ``T`` inclusive."""
        return self.dt * np.arange(-self.n_history, self.n_horizon + 1)

    def node_index(self, j: int) -> int:
        """Array index of node ``t_j = j * dt`` in a trajectory including history nodes."""
        return self.n_history + j


def make_grid(spec: SystemSpec, n_steps: int) -> Grid:
    """Grid with ``n_steps`` steps on ``[0, T]``; the delay must be a whole number of steps."""
    if n_steps < 1:
        raise GridError("need at least one step")
    dt = spec.T / n_steps
    ratio = spec.h / dt
    nh = int(round(ratio))
    if abs(ratio - nh) > 1e-9 * max(1.0, ratio):
        raise GridError(f"delay h={spec.h} is not a multiple of dt=T/{n_steps}")
    return Grid(dt, nh, n_steps)


def compatible_steps(spec: SystemSpec, n_steps: int, limit: int = 100_000) -> int:
    """Smallest step count ``>= n_steps`` making ``h`` a multiple of ``T / N``."""
    for N in range(max(n_steps, 1), limit + 1):
        try:
            make_grid(spec, N)
            return N
        except GridError:
            continue
    raise GridError(f"no step count up to {limit} aligns h={spec.h} with T={spec.T}")


# -- serialization -----------------------------------------------------------

def kernel_to_dict(k: MatrixKernel) -> dict:
    if k.is_separable:
        return {"form": SEPARABLE, "n": k.n,
                "terms": [{"decay": float(g), "coefficient": c.tolist()}
                          for g, c in zip(k.decay_rates, k.coefficients)]}
    return {"form": SAMPLED, "samples": {"times": k.times.tolist(), "values": k.values.tolist()}}


def history_to_dict(phi: HistoryFunction) -> dict:
    if phi.form == SAMPLED:
        return {"form": SAMPLED, "data": {"times": phi.times.tolist(), "values": phi.data.tolist()}}
    return {"form": phi.form, "data": phi.data.tolist()}


def spec_to_dict(spec: SystemSpec) -> dict:
    doc = {
        "n": spec.n,
        "m": spec.m,
        "A": spec.A.tolist(),
        "A1": spec.A1.tolist(),
        "B": spec.B.tolist(),
        "h": spec.h,
        "T": spec.T,
        "kernel": kernel_to_dict(spec.kernel),
    }
    if spec.target_kernel != spec.kernel:
        doc["target_kernel"] = kernel_to_dict(spec.target_kernel)
    doc["history"] = history_to_dict(spec.history)
    return doc


def save_spec(spec: SystemSpec) -> str:
    """Config document (JSON text) for ``spec``."""
    return json.dumps(spec_to_dict(spec), indent=2)


def _require(doc: dict, key: str, path: str = ""):
    name = f"{path}{key}"
    if not isinstance(doc, dict):
        raise ParseError("expected an object", field=path.rstrip(".") or "<root>")
    if key not in doc:
        raise ParseError("missing required field", field=name)
    return doc[key]


def _numeric(value, name, ndim=None):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"not numeric ({exc})", field=name) from None
    if ndim is not None and arr.ndim != ndim and not (arr.size == 0 and ndim == 2):
        raise ParseError(f"expected a {ndim}-dimensional array, got shape {arr.shape}", field=name)
    return arr


def kernel_from_dict(doc, n: int, path: str) -> MatrixKernel:
    form = _require(doc, "form", path + ".")
    if form == SEPARABLE:
        terms_doc = _require(doc, "terms", path + ".")
        if not isinstance(terms_doc, list):
            raise ParseError("expected a list", field=f"{path}.terms")
        terms = []
        for i, term in enumerate(terms_doc):
            tp = f"{path}.terms[{i}]."
            g = _numeric(_require(term, "decay", tp), tp + "decay", 0)
            c = _numeric(_require(term, "coefficient", tp), tp + "coefficient", 2)
            terms.append((float(g), c))
        try:
            return MatrixKernel.separable(terms, n=n)
        except ValueError as exc:
            if isinstance(exc, DimensionMismatch):
                raise
            raise ParseError(str(exc), field=path) from None
    if form == SAMPLED:
        samples = _require(doc, "samples", path + ".")
        sp = f"{path}.samples."
        times = _numeric(_require(samples, "times", sp), sp + "times", 1)
        values = _numeric(_require(samples, "values", sp), sp + "values", 3)
        try:
            return MatrixKernel.sampled(times, values)
        except ValueError as exc:
            if isinstance(exc, DimensionMismatch):
                raise
            raise ParseError(str(exc), field=path) from None
    raise ParseError(f"unknown kernel form {form!r}", field=f"{path}.form")


def history_from_dict(doc) -> HistoryFunction:
    form = _require(doc, "form", "history.")
    data = _require(doc, "data", "history.")
    try:
        if form == CONSTANT:
            return HistoryFunction.constant(_numeric(data, "history.data", 1))
        if form == POLYNOMIAL:
            return HistoryFunction.polynomial(_numeric(data, "history.data", 2))
        if form == SAMPLED:
            times = _numeric(_require(data, "times", "history.data."), "history.data.times", 1)
            values = _numeric(_require(data, "values", "history.data."), "history.data.values", 2)
            return HistoryFunction.sampled(times, values)
    except ValueError as exc:
        if isinstance(exc, (DimensionMismatch, ParseError)):
            raise
        raise ParseError(str(exc), field="history") from None
    raise ParseError(f"unknown history form {form!r}", field="history.form")


def spec_from_dict(doc: dict) -> SystemSpec:
    if not isinstance(doc, dict):
        raise ParseError("config document must be a JSON object", field="<root>")
    A = _numeric(_require(doc, "A"), "A", 2)
    n = A.shape[0] if A.ndim == 2 else 0
    if "n" in doc and int(doc["n"]) != n:
        raise DimensionMismatch(f"field 'n'={doc['n']} but A is {A.shape}")
    A1 = _numeric(_require(doc, "A1"), "A1", 2)
    B = _numeric(_require(doc, "B"), "B", 2)
    if "m" in doc and B.ndim == 2 and int(doc["m"]) != B.shape[1]:
        raise DimensionMismatch(f"field 'm'={doc['m']} but B is {B.shape}")
    h = float(_numeric(_require(doc, "h"), "h", 0))
    T = float(_numeric(_require(doc, "T"), "T", 0))
    kernel = kernel_from_dict(_require(doc, "kernel"), n, "kernel")
    target = None
    if doc.get("target_kernel") is not None:
        target = kernel_from_dict(doc["target_kernel"], n, "target_kernel")
    history = history_from_dict(_require(doc, "history"))
    return validate(SystemSpec(A=A, A1=A1, B=B, h=h, T=T, kernel=kernel, history=history,
                               target_kernel=target))


def load_spec(text: str) -> SystemSpec:
    """Parse and validate a config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return spec_from_dict(doc)
