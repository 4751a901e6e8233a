"""Transfer-operator numerics for the Gauss map.

The weighted operator (L_s f)(x) = sum_a (a+x)^{-2s} f(1/(a+x)) is
discretized by barycentric interpolation on a Chebyshev-Lobatto grid in
[0, 1]; its iterates at 0 are exactly the cylinder sums sum q_n^{-2s}.  The
pressure P(s) is the log of the leading eigenvalue, and the dimension number
for r large digits against a geometric threshold B^n is the root of

    P(s) = (s + (2s-1)(r-1)) ln B.

Digit sums are truncated at a cap, with the tail enclosed between the
monotone integral bounds int_{A}^inf and int_{A+1}^inf applied to inf/sup of
f near 0, so every estimate carries a bracket.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cfcore import DomainError
from .thresholds import ThresholdFn, growth_exponents

DEFAULT_GRID = 128
DEFAULT_CAP = 10_000
CURVE_CAP = 2048
CURVE_NODES = 33
S_FLOOR = 0.5 + 2.5e-4
S_CEIL = 1.02
LN4 = math.log(4.0)


def chebyshev_lobatto(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Ascending Chebyshev-Lobatto nodes on [0,1] and barycentric weights."""
    k = np.arange(n)
    x = 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    w *= (-1.0) ** k
    return x, w


def _bary_rows(u: np.ndarray, nodes: np.ndarray, bw: np.ndarray) -> np.ndarray:
    """Interpolation rows: C @ f gives the interpolant of f at points u."""
    d = u[..., None] - nodes
    exact = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = bw / d
        c = r / r.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    if np.any(hit):
        c[hit] = exact[hit].astype(float)
    return c


@dataclass
class OperatorGrid:
    """A function sampled on the collocation grid, plus operator metadata."""

    nodes: np.ndarray
    values: np.ndarray
    digit_cap: int = DEFAULT_CAP
    tail_mode: str = "analytic-integral-bound"
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or np.any(np.diff(self.nodes) <= 0):
            raise DomainError("nodes must be strictly increasing")
        if self.nodes[0] < 0 or self.nodes[-1] > 1:
            raise DomainError("nodes must lie in [0, 1]")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("values must be finite")

    @classmethod
    def ones(cls, grid_size: int = DEFAULT_GRID, cap: int = DEFAULT_CAP) -> "OperatorGrid":
        x, _ = chebyshev_lobatto(grid_size)
        return cls(x, np.ones(grid_size), cap)

    @classmethod
    def from_function(cls, fn, grid_size: int = DEFAULT_GRID, cap: int = DEFAULT_CAP):
        x, _ = chebyshev_lobatto(grid_size)
        return cls(x, np.asarray([fn(t) for t in x], dtype=float), cap)


# one matrix per (s, grid, cap); the curve builder reuses these heavily
_matrix_cache: dict = {}
_matrix_lock = threading.Lock()


def _operator_matrix(s: float, grid_size: int, cap: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    key = (round(float(s), 15), grid_size, cap)
    with _matrix_lock:
        if key in _matrix_cache:
            return _matrix_cache[key]
    nodes, bw = chebyshev_lobatto(grid_size)
    M = np.zeros((grid_size, grid_size))
    chunk = max(1, min(256, cap))
    a0 = 1
    while a0 <= cap:
        a = np.arange(a0, min(cap, a0 + chunk - 1) + 1, dtype=float)[:, None]
        base = a + nodes[None, :]
        rows = _bary_rows(1.0 / base, nodes, bw)
        M += np.einsum("ai,aij->ij", base ** (-2.0 * s), rows)
        a0 += chunk
    with _matrix_lock:
        _matrix_cache[key] = (nodes, bw, M)
    return nodes, bw, M


def _tail_bounds(s, nodes, bw, flo, fhi, cap):
    """Enclosure of sum_{a>cap} (a+x)^{-2s} f(1/(a+x)) at every node.

    f is pinned between its min/max over [0, 1/(cap+1)] (sampled through the
    interpolant) and the digit sum between the integral bounds.
    """
    u = np.linspace(0.0, 1.0 / (cap + 1), 7)
    rows = _bary_rows(u, nodes, bw)
    lo_vals = rows @ flo
    hi_vals = rows @ fhi
    fmin = max(lo_vals.min(), 0.0)
    fmax = max(hi_vals.max(), 0.0)
    expo = 1.0 - 2.0 * s
    denom = 2.0 * s - 1.0
    integral_lo = (cap + 1.0 + nodes) ** expo / denom
    integral_hi = (cap + nodes) ** expo / denom
    return fmin * integral_lo, fmax * integral_hi


@dataclass(frozen=True)
class PressureEstimate:
    """A pressure value in natural-log units with a rigorous-direction bracket."""

    s: float
    value: float
    bracket: tuple
    method: str
    params: dict
    ratio_refined: Optional[float] = None
    log_sums: tuple = ()

    def __post_init__(self):
        lo, hi = self.bracket
        if not lo <= self.value <= hi:
            raise RuntimeError("pressure bracket does not contain its value")


def transfer_apply(grid: OperatorGrid, s: float) -> OperatorGrid:
    """One application of L_s with the digit tail enclosed."""
    if s <= 0.5:
        raise DomainError("transfer operator diverges for s <= 1/2")
    nodes, bw, M = _operator_matrix(s, len(grid.nodes), grid.digit_cap)
    if not np.allclose(nodes, grid.nodes):
        raise DomainError("grid nodes must be the Chebyshev-Lobatto grid")
    flo = grid.values if grid.lower is None else grid.lower
    fhi = grid.values if grid.upper is None else grid.upper
    mp = np.clip(M, 0.0, None)
    mm = np.clip(M, None, 0.0)
    tlo, thi = _tail_bounds(s, nodes, bw, flo, fhi, grid.digit_cap)
    lo = mp @ flo + mm @ fhi + tlo
    hi = mp @ fhi + mm @ flo + thi
    return OperatorGrid(nodes, 0.5 * (lo + hi), grid.digit_cap, grid.tail_mode, lo, hi)


def pressure_eigen(
    s: float,
    grid_size: int = DEFAULT_GRID,
    cap: int = DEFAULT_CAP,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> PressureEstimate:
    """P(s) as the log leading eigenvalue, by power iteration on the positive
    cone with a nodewise Collatz-Wielandt bracket."""
    if s <= 0.5:
        raise DomainError("pressure is defined only for s > 1/2 here")
    nodes, bw, M = _operator_matrix(s, grid_size, cap)
    f = np.ones(grid_size)
    spread_prev = math.inf
    value = bracket = None
    for it in range(max_iter):
        tlo, thi = _tail_bounds(s, nodes, bw, f, f, cap)
        core = M @ f
        g_lo, g_hi = core + tlo, core + thi
        g = 0.5 * (g_lo + g_hi)
        if np.any(g <= 0):
            raise RuntimeError(f"iterate left the positive cone at step {it}")
        r_lo = float(np.min(g_lo / f))
        r_hi = float(np.max(g_hi / f))
        value = math.log(float(f @ g) / float(f @ f))
        bracket = (math.log(r_lo), math.log(r_hi))
        spread = bracket[1] - bracket[0]
        f = g / np.max(g)
        if spread < tol or (it > 12 and spread >= spread_prev * 0.999):
            return PressureEstimate(
                s, value, bracket, "eigen",
                {"grid": grid_size, "cap": cap, "iterations": it + 1, "spread": spread},
            )
        spread_prev = spread
    raise RuntimeError(
        f"power iteration did not stabilize in {max_iter} steps "
        f"(s={s}, last spread={spread_prev:.3e})"
    )


def capped_cylinder_sum(s: float, depth: int, cap: int) -> float:
    """Exact enumeration of sum over words in {1..cap}^depth of q_n^{-2s}.

    Independent oracle for the operator route; cost cap^depth, guarded.
    """
    if cap**depth > 2_000_000:
        raise DomainError("enumeration budget exceeded; lower cap or depth")
    total = 0.0
    stack = [(0, 1, 0)]  # (q_prev, q, level)
    while stack:
        q_prev, q, level = stack.pop()
        if level == depth:
            total += float(q) ** (-2.0 * s)
            continue
        for a in range(1, cap + 1):
            stack.append((q, a * q + q_prev, level + 1))
    return total


def pressure_cylinder(
    s: float,
    depth: int,
    cap: int = DEFAULT_CAP,
    grid_size: int = DEFAULT_GRID,
    include_tail: bool = True,
) -> PressureEstimate:
    """(1/n) ln of the depth-n cylinder sum, via n-fold operator application
    evaluated at 0, with the quasi-multiplicativity correction (ln 4^s)/n.

    ratio_refined carries ln(S_n/S_{n-1}), which kills the Theta(1/n) bias of
    the raw value and is what cross-validation against the eigenvalue uses.
    """
    if s <= 0.5:
        raise DomainError("cylinder sums diverge for s <= 1/2")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    nodes, bw, M = _operator_matrix(s, grid_size, cap)
    mp = np.clip(M, 0.0, None)
    mm = np.clip(M, None, 0.0)
    flo = np.ones(grid_size)
    fhi = np.ones(grid_size)
    log_scale = 0.0
    log_sums = []
    for _ in range(depth):
        if include_tail:
            tlo, thi = _tail_bounds(s, nodes, bw, flo, fhi, cap)
        else:
            tlo = thi = 0.0
        flo, fhi = mp @ flo + mm @ fhi + tlo, mp @ fhi + mm @ flo + thi
        log_sums.append(
            (log_scale + math.log(flo[0]), log_scale + math.log(fhi[0]))
        )
        scale = float(np.max(fhi))
        flo /= scale
        fhi /= scale
        log_scale += math.log(scale)
    ls_lo, ls_hi = log_sums[-1]
    value = 0.5 * (ls_lo + ls_hi) / depth
    bracket = ((ls_lo - s * LN4) / depth, ls_hi / depth)
    refined = None
    if depth >= 2:
        prev = 0.5 * (log_sums[-2][0] + log_sums[-2][1])
        refined = 0.5 * (ls_lo + ls_hi) - prev
    return PressureEstimate(
        s, value, bracket, "cylinder",
        {"depth": depth, "cap": cap, "grid": grid_size, "include_tail": include_tail},
        ratio_refined=refined,
        log_sums=tuple(0.5 * (a + b) for a, b in log_sums),
    )


# ---------------------------------------------------------------------------
# cached pressure curve P(s) and the dimension solvers
# ---------------------------------------------------------------------------


class PressureCurve:
    """P(s) tabulated at Chebyshev nodes in tau = ln(s - 1/2), where the
    blow-up at s = 1/2 flattens out; evaluated by barycentric interpolation."""

    def __init__(
        self,
        grid_size: int = DEFAULT_GRID,
        cap: int = CURVE_CAP,
        n_nodes: int = CURVE_NODES,
        s_floor: float = S_FLOOR,
        s_ceil: float = S_CEIL,
    ):
        t_lo, t_hi = math.log(s_floor - 0.5), math.log(s_ceil - 0.5)
        k = np.arange(n_nodes)
        t = t_lo + 0.5 * (1.0 - np.cos(np.pi * k / (n_nodes - 1))) * (t_hi - t_lo)
        self.tau = t
        self.s_nodes = 0.5 + np.exp(t)
        self.bw = np.ones(n_nodes)
        self.bw[0] = self.bw[-1] = 0.5
        self.bw *= (-1.0) ** k
        self.grid_size = grid_size
        self.cap = cap
        self.s_floor, self.s_ceil = s_floor, s_ceil
        self.values = np.array(
            [pressure_eigen(s, grid_size, cap).value for s in self.s_nodes]
        )

    def eval(self, s: float) -> float:
        if not self.s_floor <= s <= self.s_ceil:
            raise DomainError(
                f"s={s} outside cached curve domain [{self.s_floor}, {self.s_ceil}]"
            )
        t = math.log(s - 0.5)
        d = t - self.tau
        hit = np.nonzero(d == 0.0)[0]
        if hit.size:
            return float(self.values[hit[0]])
        r = self.bw / d
        return float(r @ self.values / r.sum())


_curve_cache: dict = {}
_curve_lock = threading.Lock()


def default_curve(grid_size: int = DEFAULT_GRID, cap: int = CURVE_CAP) -> PressureCurve:
    key = (grid_size, cap)
    with _curve_lock:
        cached = _curve_cache.get(key)
    if cached is not None:
        return cached
    curve = PressureCurve(grid_size, cap)
    with _curve_lock:
        _curve_cache.setdefault(key, curve)
        return _curve_cache[key]


@dataclass(frozen=True)
class DimensionResult:
    regime: str  # "B=1" | "finite-B" | "B=inf"
    value: float
    inputs: dict
    trace: tuple = ()
    flags: tuple = ()


def solve_dimension(
    r: int,
    B: float,
    tol: float = 1e-4,
    curve: Optional[PressureCurve] = None,
) -> DimensionResult:
    """Root of g(s) = P(s) - (s + (2s-1)(r-1)) ln B by bisection.

    g is strictly decreasing on (1/2, 1]: P decreases while the linear term
    increases, so the root is unique.
    """
    if r < 1:
        raise DomainError("r must be >= 1")
    if not 1.0 < B < math.inf:
        raise DomainError("solve_dimension needs 1 < B < inf")
    if tol < 5e-6:
        raise DomainError("tol below cached-curve accuracy; rebuild with a larger grid")
    curve = curve or default_curve()
    ln_b = math.log(B)

    def g(s):
        return curve.eval(s) - (s + (2.0 * s - 1.0) * (r - 1)) * ln_b

    hi = 1.0
    if g(hi) >= 0.0:
        raise DomainError("B is too close to 1 for the cached curve accuracy")
    lo = 0.5 + 1e-3
    while g(lo) <= 0.0:
        lo = 0.5 + (lo - 0.5) / 4.0
        if lo - 0.5 < curve.s_floor - 0.5:
            raise DomainError(
                "root sits below the cached curve domain; rebuild with a smaller s floor"
            )
    trace = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        trace.append((mid, gm))
        if gm > 0.0:
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    return DimensionResult(
        "finite-B", value, {"r": r, "B": B, "tol": tol}, tuple(trace)
    )


def hussain_shulga_exponent(
    r: int,
    B: float,
    tol: float = 1e-4,
    curve: Optional[PressureCurve] = None,
) -> DimensionResult:
    """min_i d_i for the window construction with every base equal to B.

    d_i is the root of P(s) - s ln(beta_i) + (1-s) ln(beta_{i-1}) with
    beta_i = B^{i+1}; an independent reduction that must agree with
    solve_dimension, the minimum sitting at i = r-1.
    """
    if r < 1:
        raise DomainError("r must be >= 1")
    if not 1.0 < B < math.inf:
        raise DomainError("hussain_shulga_exponent needs 1 < B < inf")
    curve = curve or default_curve()
    ln_b = math.log(B)
    roots = []
    for i in range(r):
        ln_beta_i = (i + 1) * ln_b
        ln_beta_prev = i * ln_b

        def g(s, a=ln_beta_i, b=ln_beta_prev):
            return curve.eval(s) - s * a + (1.0 - s) * b

        hi = 1.0
        if g(hi) >= 0.0:
            raise DomainError("B is too close to 1 for the cached curve accuracy")
        lo = 0.5 + 1e-3
        while g(lo) <= 0.0:
            lo = 0.5 + (lo - 0.5) / 4.0
            if lo - 0.5 < curve.s_floor - 0.5:
                raise DomainError("root below cached curve domain")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if g(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    best = min(range(r), key=lambda i: roots[i])
    return DimensionResult(
        "finite-B",
        roots[best],
        {"r": r, "B": B, "tol": tol, "per_offset": tuple(roots), "argmin": best},
    )


def dimension_dispatch(
    r: int,
    psi: ThresholdFn,
    tol: float = 1e-4,
    curve: Optional[PressureCurve] = None,
) -> DimensionResult:
    """Three-regime dimension of the r-large-digits set for threshold psi.

    B = 1 gives dimension 1; finite B solves the pressure equation; B = inf
    gives 1/(1+b), degenerating to 0 when b = inf.  Growth exponents at or
    below 0 (bounded or decaying psi) fall into the full-dimension regime.
    """
    g = growth_exponents(psi)
    flags = g.flags
    if not g.exact:
        flags = flags + ("exponents are finite-horizon estimates",)
    if g.log_B == math.inf:
        if g.log_b == math.inf:
            return DimensionResult("B=inf", 0.0, {"r": r, "log_b": g.log_b}, flags=flags)
        b = math.exp(g.log_b)
        return DimensionResult(
            "B=inf", 1.0 / (1.0 + b), {"r": r, "b": b}, flags=flags
        )
    if g.log_B <= 0.0:
        return DimensionResult("B=1", 1.0, {"r": r, "log_B": g.log_B}, flags=flags)
    B = math.exp(g.log_B)
    res = solve_dimension(r, B, tol, curve)
    return DimensionResult(res.regime, res.value, res.inputs, res.trace, flags)
