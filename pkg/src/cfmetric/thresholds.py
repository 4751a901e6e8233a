"""Threshold functions, monotone envelopes, the series criterion, and the
growth exponents that drive the dimension dispatcher.

Built-in families are evaluated in log space so that doubly exponential
thresholds never materialize; tables carry explicit values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cfcore import DomainError

INF = math.inf


def _logsumexp(values):
    m = max(values, default=-INF)
    if m == -INF:
        return -INF
    if m == INF:
        return INF
    return m + math.log(sum(math.exp(v - m) for v in values))


@dataclass(frozen=True)
class ThresholdFn:
    """A positive function psi on {1, 2, ...} with monotonicity metadata.

    kind is one of poly_log / geometric / scaled_geometric / double_exp /
    table.  For closed-form kinds all evaluation happens through
    log_value(n) = ln psi(n).
    """

    kind: str
    params: tuple = ()
    values: Optional[tuple] = None
    inner: Optional["ThresholdFn"] = None

    # -- evaluation ---------------------------------------------------------

    def log_value(self, n: int) -> float:
        if n < 1:
            raise DomainError("psi is defined on n >= 1")
        if self.kind == "poly_log":
            alpha, c = self.params
            # log n clamped at n=1 so psi stays positive
            return alpha * math.log(n) + c * math.log(math.log(max(n, 2)))
        if self.kind == "geometric":
            (B,) = self.params
            return n * math.log(B)
        if self.kind == "scaled_geometric":
            (delta,) = self.params
            return n * math.log(delta) + self.inner.log_value(n)
        if self.kind == "double_exp":
            c, b = self.params
            # ln psi = b^n ln c, computed as exp(n ln b + ln ln c)
            try:
                return math.exp(n * math.log(b) + math.log(math.log(c)))
            except OverflowError:
                return INF
        if self.kind == "table":
            if n > len(self.values):
                raise DomainError(f"table defines psi only up to n={len(self.values)}")
            return math.log(self.values[n - 1])
        raise DomainError(f"unknown kind {self.kind!r}")

    def value(self, n: int) -> float:
        lv = self.log_value(n)
        if lv == INF:
            return INF
        try:
            return math.exp(lv)
        except OverflowError:
            return INF

    @property
    def domain_limit(self) -> Optional[int]:
        return len(self.values) if self.kind == "table" else None

    # -- monotonicity hint --------------------------------------------------
    # ("nondecreasing", None) | ("eventually", N0) | ("limit", log of inf tail)
    # | ("unknown", None)

    @property
    def monotone_hint(self) -> tuple:
        if self.kind == "poly_log":
            alpha, c = self.params
            if alpha > 0:
                if c >= 0:
                    return ("nondecreasing", None)
                return ("eventually", max(2, math.ceil(math.exp(-c / alpha))))
            if alpha == 0:
                if c >= 0:
                    return ("nondecreasing", None)
                return ("limit", -INF)
            return ("limit", -INF)
        if self.kind == "geometric":
            (B,) = self.params
            return ("nondecreasing", None) if B >= 1 else ("limit", -INF)
        if self.kind == "double_exp":
            return ("nondecreasing", None)
        if self.kind == "scaled_geometric":
            (delta,) = self.params
            hint = self.inner.monotone_hint
            if delta >= 1 and hint[0] == "nondecreasing":
                return ("nondecreasing", None)
            if delta > 1 and self.inner.kind == "poly_log":
                alpha, c = self.inner.params
                n0 = math.ceil((abs(alpha) + 1.5 * abs(c) + 1) / math.log(delta)) + 2
                return ("eventually", n0)
            return ("unknown", None)
        if self.kind == "table":
            vals = self.values
            if all(a <= b for a, b in zip(vals, vals[1:])):
                return ("nondecreasing", None)
            return ("unknown", None)
        return ("unknown", None)

    def describe(self) -> str:
        if self.kind == "poly_log":
            return f"poly_log({self.params[0]},{self.params[1]})"
        if self.kind == "geometric":
            return f"geometric({self.params[0]})"
        if self.kind == "double_exp":
            return f"double_exp({self.params[0]},{self.params[1]})"
        if self.kind == "scaled_geometric":
            return f"scaled_geometric({self.params[0]},{self.inner.describe()})"
        return f"table[{len(self.values)}]"


def poly_log(alpha: float, c: float) -> ThresholdFn:
    """psi(n) = n^alpha (log n)^c, the polynomial/logarithmic family."""
    return ThresholdFn("poly_log", (float(alpha), float(c)))


def geometric(B: float) -> ThresholdFn:
    """psi(n) = B^n."""
    if B <= 0:
        raise DomainError("geometric base must be positive")
    return ThresholdFn("geometric", (float(B),))


def scaled_geometric(delta: float, inner: ThresholdFn) -> ThresholdFn:
    """psi(n) = delta^n * inner(n)."""
    if delta <= 0:
        raise DomainError("scale must be positive")
    if inner.kind == "scaled_geometric":
        return scaled_geometric(delta * inner.params[0], inner.inner)
    return ThresholdFn("scaled_geometric", (float(delta),), inner=inner)


def double_exp(c: float, b: float) -> ThresholdFn:
    """psi(n) = c^(b^n); needs c > 1 and b > 1."""
    if c <= 1 or b <= 1:
        raise DomainError("double_exp needs c > 1 and b > 1")
    return ThresholdFn("double_exp", (float(c), float(b)))


def table(values: Sequence[float]) -> ThresholdFn:
    vals = tuple(float(v) for v in values)
    if not vals:
        raise DomainError("table must be nonempty")
    if any(v <= 0 for v in vals):
        raise DomainError("psi must be positive")
    return ThresholdFn("table", values=vals)


_PSI_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def parse_psi(spec: str) -> ThresholdFn:
    """Parse the CLI grammar: poly_log(a,c), geometric(B), double_exp(c,b),
    scaled_geometric(d, <inner>), table:FILE."""
    spec = spec.strip()
    if spec.startswith("table:"):
        path = spec[len("table:"):]
        with open(path) as fh:
            vals = [float(line) for line in fh if line.strip()]
        return table(vals)
    m = _PSI_RE.match(spec)
    if not m:
        raise DomainError(f"cannot parse psi spec {spec!r}")
    name, args = m.group(1), m.group(2)
    if name == "scaled_geometric":
        head, _, rest = args.partition(",")
        return scaled_geometric(float(head), parse_psi(rest))
    parts = [p.strip() for p in args.split(",") if p.strip()]
    if name == "poly_log" and len(parts) == 2:
        return poly_log(float(parts[0]), float(parts[1]))
    if name == "geometric" and len(parts) == 1:
        return geometric(float(parts[0]))
    if name == "double_exp" and len(parts) == 2:
        return double_exp(float(parts[0]), float(parts[1]))
    raise DomainError(f"cannot parse psi spec {spec!r}")


# ---------------------------------------------------------------------------
# monotone envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeTable:
    """ln of the nondecreasing minorant psi~(n) = min_{m >= n} psi(m) over 1..N."""

    log_values: tuple
    exact: bool
    note: str = ""

    def __len__(self):
        return len(self.log_values)


def envelope(psi: ThresholdFn, horizon: int) -> EnvelopeTable:
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    if psi.domain_limit is not None and horizon > psi.domain_limit:
        raise DomainError(
            f"horizon {horizon} exceeds table domain {psi.domain_limit}"
        )
    hint, aux = psi.monotone_hint
    logs = [psi.log_value(n) for n in range(1, horizon + 1)]
    if hint == "nondecreasing":
        return EnvelopeTable(tuple(logs), True)
    if hint == "limit":
        return EnvelopeTable((aux,) * horizon, True, "psi decreases; envelope is its tail infimum")
    if hint == "eventually":
        n0 = aux
        # beyond n0 psi is nondecreasing, so every suffix min is attained by n0
        ext = [psi.log_value(n) for n in range(horizon + 1, n0 + 1)]
        suffix = INF
        out = [0.0] * horizon
        for n in range(max(horizon, n0), 0, -1):
            v = logs[n - 1] if n <= horizon else ext[n - horizon - 1]
            suffix = min(suffix, v)
            if n <= horizon:
                out[n - 1] = suffix
        return EnvelopeTable(tuple(out), True)
    # unknown: suffix minimum over the horizon only, an upper bound for psi~
    if psi.domain_limit == horizon:
        # the table is the whole domain, so this suffix minimum is exact
        exact, note = True, ""
    else:
        exact, note = False, "envelope is upper bound only (unknown monotonicity)"
    out = []
    suffix = INF
    for v in reversed(logs):
        suffix = min(suffix, v)
        out.append(suffix)
    out.reverse()
    return EnvelopeTable(tuple(out), exact, note)


# ---------------------------------------------------------------------------
# series criterion:  sum n^{r-1} psi~(n)^{-r}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesVerdict:
    verdict: str  # convergent | divergent | undetermined
    method: str  # analytic | numeric
    partial_sums: tuple = ()
    horizon: int = 0

    def __bool__(self):
        raise TypeError("compare SeriesVerdict.verdict explicitly")


def _partial_sums(r: int, psi: ThresholdFn, horizon: int) -> tuple:
    limit = psi.domain_limit
    n_max = min(horizon, limit) if limit else horizon
    samples = []
    total = 0.0
    mark = 8
    for n in range(1, n_max + 1):
        lt = (r - 1) * math.log(n) - r * psi.log_value(n)
        total += math.exp(lt) if lt < 700 else INF
        if n == mark or n == n_max:
            samples.append((n, total))
            mark *= 4
    return tuple(samples)


def series_classify(r: int, psi: ThresholdFn, horizon: int = 4096) -> SeriesVerdict:
    """Convergence of sum n^{r-1} psi~(n)^{-r} (integral test on the built-ins)."""
    if r < 1:
        raise DomainError("r must be >= 1")

    def analytic(kind: str) -> SeriesVerdict:
        return SeriesVerdict(kind, "analytic", _partial_sums(r, psi, 512), 512)

    k = psi.kind
    if k == "poly_log":
        alpha, c = psi.params
        if alpha < 0 or (alpha == 0 and c < 0):
            return analytic("divergent")  # envelope collapses to 0
        if alpha > 1:
            return analytic("convergent")
        if alpha < 1:
            return analytic("divergent")
        return analytic("convergent" if c > 1.0 / r else "divergent")
    if k == "geometric":
        (B,) = psi.params
        return analytic("convergent" if B > 1 else "divergent")
    if k == "double_exp":
        return analytic("convergent")
    if k == "scaled_geometric":
        (delta,) = psi.params
        inner = psi.inner
        if inner.kind == "geometric":
            return series_classify(r, geometric(delta * inner.params[0]), horizon)
        if inner.kind == "double_exp":
            return analytic("convergent")
        if inner.kind == "poly_log":
            if delta > 1:
                return analytic("convergent")
            if delta < 1:
                return analytic("divergent")
            return series_classify(r, inner, horizon)
        # scaled table: fall through to numeric
    # numeric path (tables and anything without a closed form)
    env = envelope(psi, min(horizon, psi.domain_limit or horizon))
    n_max = len(env)
    sums = []
    total = 0.0
    terms = []
    mark = 8
    for n in range(1, n_max + 1):
        lt = (r - 1) * math.log(n) - r * env.log_values[n - 1]
        terms.append(lt)
        total += math.exp(lt) if lt < 700 else INF
        if n == mark or n == n_max:
            sums.append((n, total))
            mark *= 4
    verdict = "undetermined"
    if n_max >= 64:
        # slope of log-term against log n over the last half
        xs = [math.log(n) for n in range(n_max // 2, n_max + 1)]
        ys = [terms[n - 1] for n in range(n_max // 2, n_max + 1)]
        xbar = sum(xs) / len(xs)
        ybar = sum(ys) / len(ys)
        denom = sum((x - xbar) ** 2 for x in xs)
        if denom > 0:
            slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / denom
            if slope < -1.2:
                verdict = "convergent"
            elif slope > -0.9:
                verdict = "divergent"
    return SeriesVerdict(verdict, "numeric", tuple(sums), n_max)


# ---------------------------------------------------------------------------
# dyadic block sandwich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DyadicReport:
    rows: tuple  # (j, log_block_sum, log_mid, slack_lower, slack_upper)
    worst_upper: float
    bound: float  # 2^{2r}
    lower_ok: bool
    upper_ok: bool


def dyadic_equivalence_check(r: int, psi: ThresholdFn, J: int) -> DyadicReport:
    """Check the two-sided dyadic block sandwich

        S_j <= (2^{j+1} / psi(2^j))^r <= 2^{2r} S_{j-1},

    with S_j the block sum of n^{r-1} psi(n)^{-r} over [2^j, 2^{j+1}).
    Requires a nondecreasing psi.
    """
    hint, _ = psi.monotone_hint
    if hint == "limit":
        raise DomainError("dyadic check requires a nondecreasing psi")
    if psi.domain_limit is not None and 2 ** (J + 1) - 1 > psi.domain_limit:
        raise DomainError("table too short for requested J")

    def block_log_sum(j):
        terms = [
            (r - 1) * math.log(n) - r * psi.log_value(n)
            for n in range(2**j, 2 ** (j + 1))
        ]
        return _logsumexp(terms)

    rows = []
    worst = 0.0
    lower_ok = upper_ok = True
    prev = block_log_sum(0)
    for j in range(1, J + 1):
        cur = block_log_sum(j)
        log_mid = r * ((j + 1) * math.log(2.0) - psi.log_value(2**j))
        slack_lower = log_mid - cur          # >= 0 required
        slack_upper = log_mid - prev         # <= ln(2^{2r}) required
        lower_ok &= slack_lower >= -1e-9
        upper_ok &= slack_upper <= 2 * r * math.log(2.0) + 1e-9
        worst = max(worst, math.exp(min(slack_upper, 700.0)))
        rows.append((j, cur, log_mid, slack_lower, slack_upper))
        prev = cur
    return DyadicReport(tuple(rows), worst, 4.0**r, lower_ok, upper_ok)


# ---------------------------------------------------------------------------
# growth exponents  log B, log b
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthExponents:
    log_B: float  # liminf ln(psi~(n)) / n
    log_b: float  # liminf ln(ln(psi~(n))) / n
    exact: bool
    flags: tuple = ()
    argmin_B: Optional[int] = None
    argmin_b: Optional[int] = None


def growth_exponents(psi: ThresholdFn, horizon: int = 4096) -> GrowthExponents:
    """Exact exponents for built-in kinds, finite-horizon liminf estimate for
    tables (reported with the minimizing index, no extrapolation)."""
    k = psi.kind
    if k == "poly_log":
        alpha, c = psi.params
        if alpha < 0 or (alpha == 0 and c < 0):
            return GrowthExponents(-INF, -INF, True, ("envelope collapses to 0",))
        return GrowthExponents(0.0, 0.0, True)
    if k == "geometric":
        (B,) = psi.params
        if B < 1:
            return GrowthExponents(-INF, -INF, True, ("envelope collapses to 0",))
        return GrowthExponents(math.log(B), 0.0, True)
    if k == "double_exp":
        _, b = psi.params
        return GrowthExponents(INF, math.log(b), True)
    if k == "scaled_geometric":
        (delta,) = psi.params
        g = growth_exponents(psi.inner, horizon)
        log_B = math.log(delta) + g.log_B
        if log_B == INF:
            return GrowthExponents(INF, g.log_b, g.exact, g.flags)
        if log_B < 0 or not g.exact:
            # envelope eventually collapses, or inner was only an estimate
            return GrowthExponents(log_B, 0.0, g.exact, g.flags + ("see inner",))
        return GrowthExponents(log_B, 0.0, g.exact, g.flags)
    # table: numeric liminf over the horizon
    if horizon < 10:
        raise DomainError("horizon must be >= 10")
    env = envelope(psi, min(horizon, psi.domain_limit or horizon))
    flags = [] if env.exact else [env.note]
    best_B, arg_B = INF, None
    best_b, arg_b = INF, None
    skipped = False
    for n in range(1, len(env) + 1):
        lv = env.log_values[n - 1]
        q = lv / n
        if q < best_B:
            best_B, arg_B = q, n
        if lv <= 0:
            skipped = True
            continue
        q2 = math.log(lv) / n
        if q2 < best_b:
            best_b, arg_b = q2, n
    if skipped:
        flags.append("log log undefined at some points; skipped")
    if arg_b is None:
        best_b = -INF
    return GrowthExponents(best_B, best_b, False, tuple(flags), arg_B, arg_b)
