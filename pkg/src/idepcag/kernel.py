"""Per-interval kernel quantities for the piecewise-constant-argument solver.

Everything here reduces to weighted integrals against the scalar flow
phi(t, s) = exp(int_s^t a).  The central object is

    j(t, zeta_k) = 1 + int_{zeta_k}^t exp(int_s^{zeta_k} a(u) du) b(s) ds,

whose zeros are exactly the in-interval zeros of the solution, together
with e(t, zeta_k) = phi(t, zeta_k) * j(t, zeta_k) and the one-step factor
w(t, s) = phi(t, s) * j(t, zeta_k) / j(s, zeta_k).

Numerically, e is evaluated through the equivalent form

    e(t, zeta) = 1 + int_zeta^t phi(t, s) (a(s) + b(s)) ds,

which stays exact for the family b = -a (the integrand vanishes
pointwise) and avoids the catastrophic cancellation of the product
phi * j when int |a| over an interval is large.  The step and intra-step
factors then come out as plain ratios of e values, with no exponential
prefactors at all.  The criterion integrals keep their direct
definitional quadrature so they cross-check the e route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

from .expressions import Const, ScalarExpr
from .grid import LaggedUniformGrid
from .problem import Problem
from .quadrature import default_rel_tol, integrate

SINGULARITY_FACTOR = 1e-12
_EXP_OVERFLOW = 709.0


class SingularKernel(RuntimeError):
    """The kernel j(t, zeta_k) vanished where the construction divides by it."""

    def __init__(self, k: int, value: float):
        super().__init__(
            f"kernel singular on interval k={k}: |j| ~ {value:.3e}"
        )
        self.k = k
        self.value = value


def _exp_guarded(w: float) -> float:
    if w > _EXP_OVERFLOW:
        return math.inf
    return math.exp(w)


def phi(a: ScalarExpr, s: float, t: float, rel_tol: float | None = None) -> float:
    """Flow factor exp(int_s^t a(u) du) of the homogeneous part."""
    if s == t:
        return 1.0
    if isinstance(a, Const):
        return _exp_guarded(a.value * (t - s))
    value, _ = integrate(a.ev, s, t, rel_tol)
    return _exp_guarded(value)


def flow_weighted_integral(
    a: ScalarExpr,
    g: Callable[[float], float],
    lo: float,
    hi: float,
    anchor: float,
    rel_tol: float | None = None,
) -> Tuple[float, float]:
    """int_lo^hi exp(int_s^anchor a(u) du) * g(s) ds with error estimate.

    The inner flow integral is exact for constant ``a`` and adaptive
    otherwise; a vanishing ``g(s)`` short-circuits the inner work.
    """
    tol = default_rel_tol() if rel_tol is None else rel_tol
    inner_tol = 0.1 * tol
    a_fn = a.ev
    const_a = a.value if isinstance(a, Const) else None

    def integrand(s: float) -> float:
        gs = g(s)
        if gs == 0.0:
            return 0.0
        if const_a is not None:
            w = const_a * (anchor - s)
        else:
            w, _ = integrate(a_fn, s, anchor, inner_tol)
        if w > _EXP_OVERFLOW:
            raise OverflowError(f"flow weight exp({w:.3g}) overflows")
        return math.exp(w) * gs

    return integrate(integrand, lo, hi, tol)


def _deviation_integral(
    a: ScalarExpr, b: ScalarExpr, zeta: float, t: float, rel_tol: float | None
) -> Tuple[float, float]:
    """r(t; zeta) = int_zeta^t phi(t, s) (a(s) + b(s)) ds, so e = 1 + r."""
    if t == zeta:
        return 0.0, 0.0
    a_fn, b_fn = a.ev, b.ev
    return flow_weighted_integral(
        a, lambda s: a_fn(s) + b_fn(s), zeta, t, anchor=t, rel_tol=rel_tol
    )


def _require_invertible(e_value: float, r_value: float, k: int) -> None:
    if abs(e_value) < SINGULARITY_FACTOR * (1.0 + abs(r_value)):
        raise SingularKernel(k, abs(e_value))


@dataclass(frozen=True)
class IntervalKernel:
    """Cached quantities of one interval [t_k, t_{k+1}]."""

    k: int
    j_at_tk: float
    j_at_tk1: float
    w_step: float
    i_plus: float
    i_minus: float
    nu_plus: float
    nu_minus: float
    quadrature_error_estimate: float


@dataclass(frozen=True)
class H3Report:
    """Invertibility diagnostics over a range of intervals.

    nu_plus/nu_minus pair exp(int |a|) over the advanced/delayed part with
    int |b| over the same part; the kernel quotients are guaranteed well
    defined when both sups stay below 1, with |1/j| bounded by the
    reported ``inverse_bound_*`` values.
    """

    k_range: Tuple[int, ...]
    rho_plus: Tuple[float, ...]
    rho_minus: Tuple[float, ...]
    nu_plus: Tuple[float, ...]
    nu_minus: Tuple[float, ...]
    sup_rho: float
    sup_nu_plus: float
    sup_nu_minus: float
    passed: bool

    @property
    def inverse_bound_plus(self) -> float:
        return 1.0 / (1.0 - self.sup_nu_plus) if self.passed else math.inf

    @property
    def inverse_bound_minus(self) -> float:
        return 1.0 / (1.0 - self.sup_nu_minus) if self.passed else math.inf


class KernelTable:
    """Lazy per-interval cache of kernel quantities for one problem.

    Construction is single-writer: computing an entry mutates only the
    private dicts, and every stored value is immutable afterwards.
    """

    def __init__(self, problem: Problem, rel_tol: float | None = None):
        if problem.grid.lagged:
            raise ValueError("kernel table requires a non-lagged grid")
        self.problem = problem
        self.rel_tol = default_rel_tol() if rel_tol is None else rel_tol
        self._e_knots: Dict[int, Tuple[float, float, float]] = {}
        self._criterion: Dict[int, Tuple[float, float, float]] = {}
        self._h3: Dict[int, Tuple[float, float, float, float]] = {}

    # -- e route -------------------------------------------------------------

    def e_value(self, k: int, t: float, zeta: float | None = None) -> float:
        """e(t, zeta_k) = 1 + r; computed fresh for arbitrary t."""
        if zeta is None:
            zeta = self.problem.grid.zeta(k)
        r, _ = _deviation_integral(self.problem.a, self.problem.b, zeta, t, self.rel_tol)
        return 1.0 + r

    def e_at_knots(self, k: int) -> Tuple[float, float, float]:
        """(e(t_k, zeta_k), e(t_{k+1}, zeta_k), error estimate)."""
        cached = self._e_knots.get(k)
        if cached is None:
            grid = self.problem.grid
            zeta = grid.zeta(k)
            r0, err0 = _deviation_integral(
                self.problem.a, self.problem.b, zeta, grid.knot(k), self.rel_tol
            )
            r1, err1 = _deviation_integral(
                self.problem.a, self.problem.b, zeta, grid.knot(k + 1), self.rel_tol
            )
            cached = (1.0 + r0, 1.0 + r1, err0 + err1)
            self._e_knots[k] = cached
        return cached

    def w_step(self, k: int) -> float:
        """One-interval propagation factor w(t_{k+1}, t_k)."""
        e0, e1, _ = self.e_at_knots(k)
        _require_invertible(e0, e0 - 1.0, k)
        return e1 / e0

    def w_intra(self, k: int, t: float, s: float) -> float:
        """w(t, s) = phi(t, s) j(t, zeta_k)/j(s, zeta_k) for t, s in I_k."""
        grid = self.problem.grid
        slack = 1e-9 * (grid.knot(k + 1) - grid.knot(k))
        for x in (t, s):
            if not (grid.knot(k) - slack <= x <= grid.knot(k + 1) + slack):
                raise ValueError(f"point {x} outside interval k={k}")
        if t == s:
            return 1.0
        et = self.e_value(k, t)
        es = self.e_value(k, s)
        _require_invertible(es, es - 1.0, k)
        return et / es

    def j_value(self, k: int, t: float) -> float:
        """j(t, zeta_k); equals 1 exactly at t = zeta_k."""
        zeta = self.problem.grid.zeta(k)
        e = self.e_value(k, t, zeta)
        return e * phi(self.problem.a, t, zeta, self.rel_tol)

    # -- definitional integrals ----------------------------------------------

    def criterion(self, k: int) -> Tuple[float, float, float]:
        """(i_plus, i_minus, err): the advanced and delayed kernel integrals."""
        cached = self._criterion.get(k)
        if cached is None:
            grid = self.problem.grid
            tk, tk1, zeta = grid.knot(k), grid.knot(k + 1), grid.zeta(k)
            b_fn = self.problem.b.ev
            if zeta == tk:
                i_plus, err_p = 0.0, 0.0
            else:
                i_plus, err_p = flow_weighted_integral(
                    self.problem.a, b_fn, tk, zeta, anchor=zeta, rel_tol=self.rel_tol
                )
            if zeta == tk1:
                i_minus, err_m = 0.0, 0.0
            else:
                i_minus, err_m = flow_weighted_integral(
                    self.problem.a, b_fn, zeta, tk1, anchor=zeta, rel_tol=self.rel_tol
                )
            cached = (i_plus, i_minus, err_p + err_m)
            self._criterion[k] = cached
        return cached

    def h3(self, k: int) -> Tuple[float, float, float, float]:
        """(rho_plus, rho_minus, nu_plus, nu_minus) for interval k."""
        cached = self._h3.get(k)
        if cached is None:
            grid = self.problem.grid
            tk, tk1, zeta = grid.knot(k), grid.knot(k + 1), grid.zeta(k)
            a_fn, b_fn = self.problem.a.ev, self.problem.b.ev
            abs_a = lambda s: abs(a_fn(s))
            abs_b = lambda s: abs(b_fn(s))
            if zeta == tk:
                rho_p, int_b_p = 1.0, 0.0
            else:
                rho_p = _exp_guarded(integrate(abs_a, tk, zeta, self.rel_tol)[0])
                int_b_p = integrate(abs_b, tk, zeta, self.rel_tol)[0]
            if zeta == tk1:
                rho_m, int_b_m = 1.0, 0.0
            else:
                rho_m = _exp_guarded(integrate(abs_a, zeta, tk1, self.rel_tol)[0])
                int_b_m = integrate(abs_b, zeta, tk1, self.rel_tol)[0]
            cached = (rho_p, rho_m, rho_p * int_b_p, rho_m * int_b_m)
            self._h3[k] = cached
        return cached

    def interval_kernel(self, k: int) -> IntervalKernel:
        e0, e1, err_e = self.e_at_knots(k)
        grid = self.problem.grid
        zeta = grid.zeta(k)
        j0 = e0 * phi(self.problem.a, grid.knot(k), zeta, self.rel_tol)
        j1 = e1 * phi(self.problem.a, grid.knot(k + 1), zeta, self.rel_tol)
        _require_invertible(e0, e0 - 1.0, k)
        i_plus, i_minus, err_c = self.criterion(k)
        _, _, nu_p, nu_m = self.h3(k)
        return IntervalKernel(
            k=k,
            j_at_tk=j0,
            j_at_tk1=j1,
            w_step=e1 / e0,
            i_plus=i_plus,
            i_minus=i_minus,
            nu_plus=nu_p,
            nu_minus=nu_m,
            quadrature_error_estimate=err_e + err_c,
        )


# -- module-level operations -------------------------------------------------

def j_value(problem: Problem, k: int, t: float, rel_tol: float | None = None) -> float:
    """Kernel j(t, zeta_k) for t in [t_k, t_{k+1}]."""
    return KernelTable(problem, rel_tol).j_value(k, t)


def w_intra(
    problem: Problem, k: int, t: float, s: float, rel_tol: float | None = None
) -> float:
    """In-interval propagation factor carrying z(s) to z(t)."""
    return KernelTable(problem, rel_tol).w_intra(k, t, s)


def criterion_integrals(
    problem: Problem, k: int, rel_tol: float | None = None
) -> Tuple[float, float]:
    """(i_plus, i_minus): kernel integrals over the advanced/delayed parts."""
    i_plus, i_minus, _ = KernelTable(problem, rel_tol).criterion(k)
    return i_plus, i_minus


def h3_check(
    problem: Problem, k_range: Sequence[int], rel_tol: float | None = None
) -> H3Report:
    """Invertibility diagnostics (sup nu^+/- < 1) over the given intervals."""
    table = KernelTable(problem, rel_tol)
    ks = tuple(k_range)
    if not ks:
        raise ValueError("empty interval range")
    rows = [table.h3(k) for k in ks]
    rho_p = tuple(r[0] for r in rows)
    rho_m = tuple(r[1] for r in rows)
    nu_p = tuple(r[2] for r in rows)
    nu_m = tuple(r[3] for r in rows)
    sup_nu_p = max(nu_p)
    sup_nu_m = max(nu_m)
    return H3Report(
        k_range=ks,
        rho_plus=rho_p,
        rho_minus=rho_m,
        nu_plus=nu_p,
        nu_minus=nu_m,
        sup_rho=max(p * m for p, m in zip(rho_p, rho_m)),
        sup_nu_plus=sup_nu_p,
        sup_nu_minus=sup_nu_m,
        passed=sup_nu_p < 1.0 and sup_nu_m < 1.0,
    )


def gl2_lagged_integral(p: float, k: int = 1, rel_tol: float | None = None) -> float:
    """Flow integral over [t_{k-1}, t_{k+1}] for the unit-lag argument.

    For the grid gamma(t) = [t - 1] the delayed window of interval k spans
    two mesh cells, each carrying its own argument value; the integral is

        int_{k-1}^{k+1} exp(-p (gamma(s) - s)) ds
          = int_{k-1}^{k} exp(-p ((k-2) - s)) ds
            + int_{k}^{k+1} exp(-p ((k-1) - s)) ds,

    independent of k.  Requires p != 0.
    """
    if p == 0:
        raise ValueError("p must be nonzero")
    grid = LaggedUniformGrid(0.0, 1.0, 1)
    total = 0.0
    for j in (k - 1, k):
        zeta = grid.zeta(j)
        value, _ = integrate(
            lambda s, z=zeta: math.exp(-p * (z - s)),
            grid.knot(j),
            grid.knot(j + 1),
            rel_tol,
        )
        total += value
    return total


def gl2_oscillation_bound(p: float) -> float:
    """Coefficient threshold p e^{-p} / (2 (e^p - 1)) implied by the
    two-cell integral above: a lagged coefficient above it forces
    oscillation."""
    if p == 0:
        raise ValueError("p must be nonzero")
    return p * math.exp(-p) / (2.0 * (math.exp(p) - 1.0))
