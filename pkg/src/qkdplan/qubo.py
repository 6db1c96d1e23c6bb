"""QUBO representation, evaluation and local solver backends.

A :class:`QuboProblem` stores ``x^T Q x`` sparsely with upper-triangular
indices (``i <= j``); diagonal entries are the linear terms.  Three
backends implement the :class:`QuboSolver` interface:

* ``exhaustive`` - brute-force enumeration, the ground-truth oracle
* ``sa`` - single-flip simulated annealing with restarts
* ``milp`` - exact solve of the standard linearization through HiGHS
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

MAX_EXHAUSTIVE_VARS = 25


class SolverError(RuntimeError):
    """Backend failure; the message is prefixed with the backend name."""


@dataclass(frozen=True, eq=False)
class QuboProblem:
    labels: tuple[str, ...]
    coefficients: Mapping[tuple[int, int], float]
    # Constant dropped when expanding squared penalties; not part of x^T Q x.
    offset: float = 0.0

    def __post_init__(self):
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("duplicate variable labels")
        for i, j in self.coefficients:
            if not (0 <= i <= j < n):
                raise ValueError(f"coefficient index ({i}, {j}) out of bounds")
        keys = sorted(self.coefficients)
        object.__setattr__(self, "_rows", np.array([k[0] for k in keys], dtype=np.int64))
        object.__setattr__(self, "_cols", np.array([k[1] for k in keys], dtype=np.int64))
        object.__setattr__(
            self, "_vals", np.array([self.coefficients[k] for k in keys], dtype=np.float64)
        )
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    @classmethod
    def from_matrix(cls, matrix, labels: Sequence[str] | None = None) -> "QuboProblem":
        """Fold a (possibly non-symmetric) square matrix into upper form."""
        q = np.asarray(matrix, dtype=float)
        n = q.shape[0]
        if q.shape != (n, n):
            raise ValueError("QUBO matrix must be square")
        coeffs: dict[tuple[int, int], float] = {}
        for i in range(n):
            for j in range(n):
                if q[i, j] != 0:
                    key = (min(i, j), max(i, j))
                    coeffs[key] = coeffs.get(key, 0.0) + float(q[i, j])
        labels = tuple(labels) if labels is not None else tuple(f"x{i}" for i in range(n))
        return cls(labels, {k: v for k, v in coeffs.items() if v != 0})

    @property
    def num_variables(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._index[label]

    def to_dense(self) -> np.ndarray:
        """Upper-triangular dense matrix."""
        out = np.zeros((self.num_variables, self.num_variables))
        out[self._rows, self._cols] = self._vals
        return out

    def linear_and_couplings(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Linear vector and symmetric CSR coupling arrays (indptr, indices, data)."""
        n = self.num_variables
        diag = self._rows == self._cols
        h = np.zeros(n)
        np.add.at(h, self._rows[diag], self._vals[diag])
        r, c, v = self._rows[~diag], self._cols[~diag], self._vals[~diag]
        rows = np.concatenate([r, c])
        cols = np.concatenate([c, r])
        vals = np.concatenate([v, v])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return h, np.cumsum(indptr), cols.astype(np.int64), vals

    def dumps(self) -> str:
        """Text dump: ``# labels`` header, then ``i j coefficient`` lines."""
        lines = ["# " + " ".join(self.labels)]
        for i, j, v in zip(self._rows, self._cols, self._vals):
            lines.append(f"{int(i)} {int(j)} {float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "QuboProblem":
        rows = text.splitlines()
        if not rows or not rows[0].startswith("#"):
            raise ValueError("QUBO dump is missing its label header")
        labels = tuple(rows[0][1:].split())
        coeffs = {}
        for line in rows[1:]:
            if line.strip():
                i, j, v = line.split()
                coeffs[(int(i), int(j))] = float(v)
        return cls(labels, coeffs)


class QuboBuilder:
    """Accumulates linear, quadratic and squared-penalty terms by label."""

    def __init__(self, labels: Iterable[str] = ()):
        self.labels: list[str] = []
        self._index: dict[str, int] = {}
        self.coefficients: dict[tuple[int, int], float] = {}
        self.offset = 0.0
        for label in labels:
            self.add_variable(label)

    def add_variable(self, label: str) -> int:
        if label in self._index:
            raise ValueError(f"duplicate variable {label}")
        self._index[label] = len(self.labels)
        self.labels.append(label)
        return self._index[label]

    def _add(self, i: int, j: int, value: float) -> None:
        if value == 0:
            return
        key = (i, j) if i <= j else (j, i)
        self.coefficients[key] = self.coefficients.get(key, 0.0) + value

    def linear(self, label: str, value: float) -> None:
        i = self._index[label]
        self._add(i, i, value)

    def quadratic(self, a: str, b: str, value: float) -> None:
        self._add(self._index[a], self._index[b], value)

    def square(self, terms: Sequence[tuple[str, float]], constant: float = 0.0, scale: float = 1.0) -> None:
        """Add ``scale * (constant + sum(c * x))**2`` using ``x**2 == x``."""
        self.offset += scale * constant * constant
        idx = [(self._index[label], c) for label, c in terms]
        for k, (i, ci) in enumerate(idx):
            self._add(i, i, scale * (ci * ci + 2 * constant * ci))
            for j, cj in idx[k + 1:]:
                self._add(i, j, scale * 2 * ci * cj)

    def build(self) -> QuboProblem:
        coeffs = {k: v for k, v in self.coefficients.items() if v != 0}
        return QuboProblem(tuple(self.labels), coeffs, self.offset)


def evaluate(problem: QuboProblem, x) -> float:
    """Energy ``sum_{i<=j} Q_ij x_i x_j`` of a bit vector."""
    bits = np.asarray(x, dtype=np.float64)
    if bits.shape != (problem.num_variables,):
        raise ValueError(
            f"assignment has length {bits.size}, problem has {problem.num_variables} variables"
        )
    return float(np.sum(problem._vals * bits[problem._rows] * bits[problem._cols]))


def acceptance_probability(energy: float, new_energy: float, temperature: float) -> float:
    """Metropolis rule: 1 for non-worsening moves, else ``exp(-(e' - e) / T)``."""
    delta = new_energy - energy
    if delta <= 0:
        return 1.0
    return math.exp(-delta / temperature)


@dataclass(frozen=True)
class SolveResult:
    assignment: tuple[int, ...]
    energy: float
    solver: str
    restarts: int = 1
    seed: int | None = None
    best_iteration: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    def value(self, problem: QuboProblem, label: str) -> int:
        return self.assignment[problem.index(label)]


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling ``t -> alpha * t`` from ``t_start`` down to ``t_end``.

    ``sweeps_per_temp`` is the number of single-flip proposals made at each
    temperature; ``None`` means one per variable.
    """

    t_start: float = 1000.0
    t_end: float = 1e-4
    alpha: float = 0.9
    sweeps_per_temp: int | None = None
    restarts: int = 10

    def __post_init__(self):
        if not self.t_start > 0 or not self.t_end > 0:
            raise ValueError("temperatures must be positive")
        if not self.t_end < self.t_start:
            raise ValueError("t_end must be below t_start")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.sweeps_per_temp is not None and self.sweeps_per_temp < 1:
            raise ValueError("sweeps_per_temp must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")

    def temperatures(self) -> np.ndarray:
        temps = []
        t = self.t_start
        while t > self.t_end:
            temps.append(t)
            t *= self.alpha
        return np.array(temps)


def cooling_steps(t_start: float, t_end: float, alpha: float) -> int:
    """Number of ``t -> alpha * t`` steps until ``t <= t_end``."""
    steps, t = 0, t_start
    while t > t_end:
        t *= alpha
        steps += 1
    return steps


# exhaustive --------------------------------------------------------------

@njit(cache=True)
def _gray_scan(h, q, threshold, out):
    """Visit all states in Gray-code order, one flip per step.

    Returns the minimum energy and the number of states at or below
    ``threshold``; the first ``len(out)`` of those are stored in ``out`` as
    integers with variable 0 as the most significant bit.
    """
    n = h.shape[0]
    x = np.zeros(n, dtype=np.int8)
    local = h.copy()
    energy = 0.0
    best = 0.0
    state = 0
    count = 0
    if energy <= threshold:
        if count < out.shape[0]:
            out[count] = state
        count += 1
    for k in range(1, 1 << n):
        b = 0
        while not (k >> b) & 1:
            b += 1
        i = n - 1 - b
        if x[i] == 0:
            energy += local[i]
            x[i] = 1
            sign = 1.0
        else:
            energy -= local[i]
            x[i] = 0
            sign = -1.0
        for j in range(n):
            local[j] += sign * q[i, j]
        state ^= 1 << b
        if energy < best:
            best = energy
        if energy <= threshold:
            if count < out.shape[0]:
                out[count] = state
            count += 1
    return best, count


def _bits_of(state: int, n: int) -> tuple[int, ...]:
    return tuple((state >> (n - 1 - i)) & 1 for i in range(n))


def _tolerance(problem: QuboProblem) -> float:
    scale = float(np.abs(problem._vals).sum()) if problem._vals.size else 1.0
    return 1e-9 * max(1.0, scale)


def _minimizers(problem: QuboProblem, max_vars: int) -> list[int]:
    """Sorted state integers attaining the minimum within round-off."""
    n = problem.num_variables
    if n > max_vars:
        raise SolverError(f"exhaustive: {n} variables exceed the limit of {max_vars}")
    upper = problem.to_dense()
    h = np.ascontiguousarray(np.diag(upper))
    q = upper + upper.T
    np.fill_diagonal(q, 0.0)
    tol = _tolerance(problem)
    best, _ = _gray_scan(h, q, -np.inf, np.empty(0, dtype=np.int64))
    # running sums drift slightly; take a wider net and filter exactly below
    threshold = best + 10 * tol
    out = np.empty(1 << 12, dtype=np.int64)
    _, count = _gray_scan(h, q, threshold, out)
    if count > out.shape[0]:
        out = np.empty(count, dtype=np.int64)
        _gray_scan(h, q, threshold, out)
    states = np.sort(out[:count])
    bits = ((states[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1).astype(np.float64)
    exact = np.einsum("ij,ij->i", bits @ upper, bits)
    return [int(s) for s in states[exact <= exact.min() + tol]]


def solve_exhaustive(problem: QuboProblem, max_vars: int = MAX_EXHAUSTIVE_VARS) -> SolveResult:
    """Global minimum by enumeration; ties go to the lexicographically
    smallest bit vector."""
    n = problem.num_variables
    if n > max_vars:
        raise SolverError(f"exhaustive: {n} variables exceed the limit of {max_vars}")
    if n == 0:
        return SolveResult((), 0.0, "exhaustive")
    bits = _bits_of(_minimizers(problem, max_vars)[0], n)
    return SolveResult(bits, evaluate(problem, bits), "exhaustive", metadata={"states": 1 << n})


def exhaustive_ground_states(problem: QuboProblem, max_vars: int = 22) -> list[tuple[int, ...]]:
    """Every assignment attaining the minimum energy (within round-off)."""
    n = problem.num_variables
    if n == 0:
        return [()]
    return [_bits_of(s, n) for s in _minimizers(problem, max_vars)]


# simulated annealing ----------------------------------------------------

@njit(cache=True)
def _anneal(h, indptr, indices, data, x0, temps, steps, seed):
    np.random.seed(seed)
    n = h.shape[0]
    x = x0.copy()
    local = h.copy()
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            if x[indices[k]] == 1:
                local[i] += data[k]
    energy = 0.0
    for i in range(n):
        if x[i] == 1:
            energy += 0.5 * (h[i] + local[i])
    best = energy
    best_x = x.copy()
    best_step = 0
    step = 0
    for t in temps:
        for _ in range(steps):
            step += 1
            i = np.random.randint(n)
            delta = local[i] if x[i] == 0 else -local[i]
            if delta <= 0.0 or np.random.random() < np.exp(-delta / t):
                sign = 1.0 if x[i] == 0 else -1.0
                x[i] = 1 - x[i]
                energy += delta
                for k in range(indptr[i], indptr[i + 1]):
                    local[indices[k]] += sign * data[k]
                if energy < best - 1e-12:
                    best = energy
                    best_x[:] = x
                    best_step = step
    return best_x, best_step


def solve_sa(problem: QuboProblem, schedule: AnnealSchedule | None = None, seed: int = 0) -> SolveResult:
    """Best assignment over independent annealing restarts.

    Each restart draws random initial bits, proposes single-bit flips with
    Metropolis acceptance and cools geometrically.  Restarts are merged by
    minimum energy, ties going to the lowest restart index.
    """
    schedule = schedule or AnnealSchedule()
    n = problem.num_variables
    if n == 0:
        raise SolverError("sa: problem has no variables")
    h, indptr, indices, data = problem.linear_and_couplings()
    temps = schedule.temperatures()
    steps = schedule.sweeps_per_temp or n
    children = np.random.SeedSequence(seed).spawn(schedule.restarts)
    best: tuple[float, int, tuple[int, ...], int] | None = None
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        x0 = rng.integers(0, 2, size=n).astype(np.int64)
        kernel_seed = int(rng.integers(0, 2**31 - 1))
        bits, step = _anneal(h, indptr, indices, data, x0, temps, steps, kernel_seed)
        assignment = tuple(int(b) for b in bits)
        e = evaluate(problem, assignment)
        if best is None or e < best[0]:
            best = (e, r, assignment, step)
    energy, restart, assignment, step = best
    return SolveResult(
        assignment,
        energy,
        "sa",
        restarts=schedule.restarts,
        seed=seed,
        best_iteration=step,
        metadata={"best_restart": restart, "temperature_levels": len(temps)},
    )


# MILP --------------------------------------------------------------------

def solve_milp(problem: QuboProblem, time_limit: float | None = 60.0) -> SolveResult:
    """Exact minimum via the standard product linearization.

    Each coupling ``x_i x_j`` becomes a continuous ``z`` bounded by
    ``z >= x_i + x_j - 1`` (positive coefficient) or ``z <= x_i, z <= x_j``
    (negative coefficient), solved with HiGHS branch and bound.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    n = problem.num_variables
    diag = problem._rows == problem._cols
    cost = np.zeros(n)
    np.add.at(cost, problem._rows[diag], problem._vals[diag])
    pairs = [(int(i), int(j), float(v)) for i, j, v in
             zip(problem._rows[~diag], problem._cols[~diag], problem._vals[~diag])]
    m = len(pairs)
    rows, cols, vals, lo, hi = [], [], [], [], []
    r = 0
    for k, (i, j, v) in enumerate(pairs):
        z = n + k
        if v > 0:
            rows += [r, r, r]
            cols += [z, i, j]
            vals += [1.0, -1.0, -1.0]
            lo.append(-1.0)
            hi.append(np.inf)
            r += 1
        else:
            for var in (i, j):
                rows += [r, r]
                cols += [z, var]
                vals += [1.0, -1.0]
                lo.append(-np.inf)
                hi.append(0.0)
                r += 1
    c = np.concatenate([cost, [v for _, _, v in pairs]])
    integrality = np.concatenate([np.ones(n), np.zeros(m)])
    constraints = []
    if r:
        a = coo_matrix((vals, (rows, cols)), shape=(r, n + m)).tocsr()
        constraints.append(LinearConstraint(a, lo, hi))
    options = {"disp": False, "mip_rel_gap": 0.0}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = milp(c, integrality=integrality, bounds=Bounds(0, 1), constraints=constraints,
               options=options)
    if res.status != 0 or res.x is None:
        raise SolverError(f"milp: no optimal solution ({res.message})")
    bits = tuple(int(round(b)) for b in res.x[:n])
    return SolveResult(bits, evaluate(problem, bits), "milp", metadata={"mip_gap": res.mip_gap})


# solver interface -------------------------------------------------------

class QuboSolver:
    """Backend interface: ``solve(problem, seed=None) -> SolveResult``.

    Backend exceptions are re-raised as :class:`SolverError` carrying the
    backend name.
    """

    name = "abstract"

    def solve(self, problem: QuboProblem, seed: int | None = None) -> SolveResult:
        try:
            result = self._solve(problem, seed)
        except SolverError as exc:
            msg = str(exc)
            raise SolverError(msg if msg.startswith(f"{self.name}:") else f"{self.name}: {msg}") from exc
        except Exception as exc:
            raise SolverError(f"{self.name}: {exc}") from exc
        return result

    def _solve(self, problem, seed):
        raise NotImplementedError


class ExhaustiveSolver(QuboSolver):
    name = "exhaustive"

    def __init__(self, max_vars: int = MAX_EXHAUSTIVE_VARS):
        self.max_vars = max_vars

    def _solve(self, problem, seed):
        return solve_exhaustive(problem, self.max_vars)


class SimulatedAnnealingSolver(QuboSolver):
    name = "sa"

    def __init__(self, schedule: AnnealSchedule | None = None, seed: int = 0):
        self.schedule = schedule or AnnealSchedule()
        self.seed = seed

    def _solve(self, problem, seed):
        return solve_sa(problem, self.schedule, self.seed if seed is None else seed)


class MilpSolver(QuboSolver):
    name = "milp"

    def __init__(self, time_limit: float | None = 60.0):
        self.time_limit = time_limit

    def _solve(self, problem, seed):
        return solve_milp(problem, self.time_limit)


SOLVERS = {"exhaustive": ExhaustiveSolver, "sa": SimulatedAnnealingSolver, "milp": MilpSolver}


def make_solver(name: str, **kwargs) -> QuboSolver:
    try:
        cls = SOLVERS[name]
    except KeyError:
        raise SolverError(f"unknown solver backend {name!r}") from None
    return cls(**kwargs)
