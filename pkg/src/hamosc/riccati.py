"""Scalar Riccati criterion kernels for the 4d Hamiltonian system.

Everything here feeds the verdict engines in ``criteria``:

* the exponentially weighted tail integral I(xi; t) = int_xi^t
  exp(-int_tau^t g) h dtau, computed as an initial value problem rather
  than nested quadrature;
* the partition condition that certifies global existence of a scalar
  Riccati solution: on each subinterval [t_k, t_{k+1}) the running
  integral int exp{int_{t_k}^tau [g - I(t_k; s)] ds} h(tau) dtau must
  stay nonpositive, and ``partition_search`` looks for a partition
  greedily;
* the comparison oracle: existence and ordering transfer between two
  scalar Riccati flows with ordered free terms (f >= 0, h <= h1), used
  as a test oracle throughout the suite;
* the free terms chi_1, chi_2 distilled from the diagonal-B structure,
  in the sign-corrected convention (see free_term_diag);
* the coupling envelope machinery: the weighted running maximum of
  |a12/b1 - conj(a21)/b2|, the exponentially weighted integrals of the
  off-diagonal drive, and the derived free terms chi_3, chi_4;
* the joint subsystem flow for (z11, y) and (z22, v) after the ratio
  substitutions, plus the bound check that validates the envelope
  inequality against direct integration.

The envelope's c12 term carries a sign ambiguity (two reasonable
derivations disagree on it); both variants are computable via
sign_convention in {"minus_c12", "plus_c12"}. The coupling-bound check
always uses plus_c12, which is the form consistent with the
variation-of-constants representation of y and v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .coefsys import Scenario, ratio_fns
from .mat2 import norm_max
from .odeint import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    DEFAULT_Y_MAX,
    BlowupRecord,
    Trajectory,
    adaptive_solve,
    solve_scalar_riccati,
)

__all__ = [
    "Kernel",
    "Partition",
    "ChiProfile",
    "EnvelopeData",
    "EnvelopeTerms",
    "HypothesisViolated",
    "NotDiagonalB",
    "NotPositiveB",
    "exp_weighted_integral",
    "check_partition_condition",
    "partition_search",
    "comparison_oracle",
    "free_term_diag",
    "coupling_gap_peak",
    "envelope_terms_diag",
    "build_envelope_terms",
    "subsystem_solve",
    "coupling_bound_check",
    "TOL_COND",
]

# nonpositivity slack for the partition condition, scaled by the running
# integral of |h| so long windows with large kernels are not penalized
TOL_COND = 1e-10

_EXP_CAP = 700.0  # exp argument cap; overflow becomes a huge finite value


class HypothesisViolated(RuntimeError):
    def __init__(self, which: str, t: float):
        super().__init__(f"hypothesis {which!r} fails at t = {t!r}")
        self.which = which
        self.t = t


class NotDiagonalB(ValueError):
    pass


class NotPositiveB(ValueError):
    pass


@dataclass(frozen=True)
class Kernel:
    """Coefficients of y' + f y^2 + g y + h = 0 that the conditions see."""

    g: Callable
    h: Callable


@dataclass(frozen=True)
class Partition:
    points: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("partition needs >= 2 strictly increasing points")
        object.__setattr__(self, "points", pts)


def exp_weighted_integral(
    k: Kernel,
    xi: float,
    t: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> float:
    """The weighted tail integral int_xi^t exp(-int_tau^t g) h dtau.

    Computed by integrating I' = h - g I, I(xi) = 0, which is the same
    quantity without nested quadrature.
    """
    xi, t = float(xi), float(t)
    if t < xi:
        raise ValueError("need t >= xi")
    if t == xi:
        return 0.0
    traj = adaptive_solve(
        lambda s, y: np.array([k.h(s) - k.g(s) * y[0]]),
        np.array([0.0]),
        (xi, t),
        rtol,
        atol,
    )
    return float(traj.states[-1, 0])


_PROFILE_ESCAPE = 1e300  # condition-profile magnitude treated as escape


def _condition_profile(k: Kernel, lo: float, hi: float, rtol: float, atol: float) -> Trajectory:
    """Augmented flow of the partition condition on one subinterval.

    State (I, L, T, Tabs): I is the inner weighted integral from lo and
    L the running exponent int [g - I]. The displayed integral carries
    the weight exp(L(t) - L(tau)); the outer exp(L(t)) factor is positive
    and drops out of the sign condition, so T accumulates exp(-L(tau)) h
    and Tabs the same with |h|, which sets the violation tolerance scale.
    This is pure quadrature (no feedback from T into its own rate), so
    stiffness cannot arise. On kernels whose weight explodes, T and Tabs
    balloon and the flow stops with an escape event well before float
    overflow; callers must not certify past t_end. The exponent cap only
    engages in that same ballooning regime, right before the escape.
    """

    def field(s, y):
        i, ell = y[0], y[1]
        gv = k.g(s)
        hv = k.h(s)
        w = math.exp(min(-ell, _EXP_CAP))
        return np.array([hv - gv * i, gv - i, w * hv, w * abs(hv)])

    return adaptive_solve(
        field,
        np.zeros(4),
        (lo, hi),
        rtol,
        atol,
        escape_norm=_PROFILE_ESCAPE,
        escape_slice=slice(2, 4),
        underflow="event",
    )


def check_partition_condition(
    k: Kernel,
    part: Partition,
    *,
    n_grid: int = 64,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> tuple[bool, Optional[tuple]]:
    """Whether the nonpositivity condition holds on every subinterval.

    For each consecutive pair the augmented integral T is sampled at
    n_grid interior points plus the endpoints; the condition is
    T <= TOL_COND * (1 + Tabs) throughout. Returns (ok, first_violation)
    with first_violation = (subinterval index, t) when it fails.
    """
    pts = part.points
    for ki in range(len(pts) - 1):
        lo, hi = pts[ki], pts[ki + 1]
        traj = _condition_profile(k, lo, hi, rtol, atol)
        ts = np.linspace(lo, traj.t_end, max(n_grid, 2) + 1)
        states = traj.dense_eval(ts)
        tvals = states[:, 2]
        tabs = states[:, 3]
        bad = np.nonzero(tvals > TOL_COND * (1.0 + tabs))[0]
        if len(bad):
            return False, (ki, float(ts[bad[0]]))
        if traj.t_end < hi - 1e-12 * (1.0 + abs(hi)):
            # profile escaped before the right end; the unreachable part of
            # the subinterval is unverified, which cannot count as certified
            return False, (ki, float(traj.t_end))
    return True, None


def partition_search(
    k: Kernel,
    window: tuple,
    max_points: int = 64,
    *,
    grid_n: int = 1024,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> Optional[Partition]:
    """Greedy left-to-right search for a conforming partition.

    From the current point the augmented condition flow is integrated
    over the rest of the window and sampled on the global grid; the next
    partition point is the last grid position before the first
    violation. The search fails (returns None) when it cannot advance by
    at least (window length) / max_points, so a returned partition has
    at most max_points + 1 points. None means "not certified by this
    search", never "oscillatory".
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("window must satisfy T > t0")
    ts = np.linspace(lo, hi, grid_n + 1)
    min_advance = (hi - lo) / max_points
    points = [lo]
    cur = lo
    while cur < hi:
        traj = _condition_profile(k, cur, hi, rtol, atol)
        tail = ts[np.searchsorted(ts, cur, side="right") :]
        sample = np.concatenate([tail, [hi]]) if len(tail) == 0 or tail[-1] < hi else tail
        states = traj.dense_eval(np.clip(sample, cur, traj.t_end))
        ok = states[:, 2] <= TOL_COND * (1.0 + states[:, 3])
        if traj.t_end < hi - 1e-12 * (1.0 + abs(hi)):
            # the condition flow itself blew up; don't certify past it
            ok &= sample <= traj.t_end
        bad = np.nonzero(~ok)[0]
        if len(bad) == 0:
            points.append(hi)
            return Partition(tuple(points))
        first_bad = bad[0]
        if first_bad == 0:
            return None
        nxt = float(sample[first_bad - 1])
        if nxt - cur < min_advance or nxt <= cur:
            return None
        points.append(nxt)
        cur = nxt
    return Partition(tuple(points))


def comparison_oracle(
    f: Callable,
    g: Callable,
    h: Callable,
    h1: Callable,
    y1_0: float,
    y_0: float,
    window: tuple,
    *,
    tol: float = 1e-6,
    y_max: float = DEFAULT_Y_MAX,
) -> bool:
    """Existence and ordering transfer between two scalar Riccati flows.

    With f >= 0, h <= h1, and y(t0) >= y1(t0), the solution y of
    y' + f y^2 + g y + h = 0 must exist wherever y1 (same f, g, free
    term h1) exists, and satisfy y >= y1 - tol * (1 + |y1|). Hypotheses
    are sampled on a 256-point grid and violations raise; a failed
    conclusion returns False. This is a test oracle, not a production
    decision path.
    """
    lo, hi = float(window[0]), float(window[1])
    grid = np.linspace(lo, hi, 256)
    fs = np.array([f(t) for t in grid])
    hs = np.array([h(t) for t in grid])
    h1s = np.array([h1(t) for t in grid])
    scale = 1.0 + max(np.max(np.abs(hs)), np.max(np.abs(h1s)), np.max(np.abs(fs)))
    hyp_tol = 1e-9 * scale
    if np.any(fs < -hyp_tol):
        raise HypothesisViolated("f >= 0", float(grid[int(np.argmin(fs))]))
    if np.any(hs > h1s + hyp_tol):
        raise HypothesisViolated("h <= h1", float(grid[int(np.argmax(hs - h1s))]))
    if y_0 < y1_0 - 1e-9 * (1.0 + abs(y1_0)):
        raise HypothesisViolated("y(t0) >= y1(t0)", lo)

    traj1, rec1 = solve_scalar_riccati(f, g, h1, y1_0, (lo, hi), y_max=y_max)
    traj0, rec0 = solve_scalar_riccati(f, g, h, y_0, (lo, hi), y_max=y_max)

    end1 = traj1.t_end
    end0 = traj0.t_end
    if rec1 is None and rec0 is not None:
        return False
    if rec1 is not None and end0 < end1 - 1e-6 * (1.0 + abs(end1)):
        return False

    tc = min(end0, end1)
    sample = lo + (tc - lo) * np.linspace(0.0, 0.999999, 256)
    y1v = traj1.dense_eval(sample)[:, 0]
    y0v = traj0.dense_eval(sample)[:, 0]
    return bool(np.all(y0v >= y1v - tol * (1.0 + np.abs(y1v))))


# ---------------------------------------------------------------------------
# Free terms of the scalar criteria, diagonal-B case.


@dataclass(frozen=True)
class ChiProfile:
    """One of the two diagonal free terms as a pointwise callable."""

    j: int
    values: Callable
    branch_at: Callable  # t -> "b_zero" | "b_nonzero"


def free_term_diag(s: Scenario, j: int, *, uncorrected_sign: bool = False) -> ChiProfile:
    """The free term chi_j of the scalar oscillation criteria.

    chi_j = -c_jj - |a_{3-j,j}|^2 / b_{3-j} where b_{3-j} is nonzero,
    and chi_j = -c_jj on the b_{3-j} = 0 branch. The sign is the
    corrected convention: it makes the scalar pair for the harmonic
    system literally phi'' + phi = 0, and matches the free term of the
    ratio-substituted flow. The uncorrected (negated) form is kept
    behind uncorrected_sign for auditing old computations.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    if "B_diagonal" not in s.tags:
        raise NotDiagonalB(f"scenario {s.name!r} lacks the B_diagonal tag")
    from .coefsys import TOL_POS

    other = 2 - j  # 0-based index of 3-j

    def _parts(t):
        a, b, c = s.eval(t)
        bo = float(np.real(b[other, other]))
        cjj = float(np.real(c[j - 1, j - 1]))
        coupling = complex(a[other, j - 1])
        zero = abs(bo) <= TOL_POS * (1.0 + norm_max(b))
        return bo, cjj, coupling, zero

    def values(t):
        bo, cjj, coupling, zero = _parts(t)
        v = cjj if zero else cjj + abs(coupling) ** 2 / bo
        return v if uncorrected_sign else -v

    def branch_at(t):
        return "b_zero" if _parts(t)[3] else "b_nonzero"

    return ChiProfile(j=j, values=values, branch_at=branch_at)


# ---------------------------------------------------------------------------
# Coupling envelope machinery.


@dataclass(frozen=True)
class EnvelopeData:
    """Inputs of the coupling envelope, already in ratio form.

    For diagonal B these are r1 = a12/b1, r2 = conj(a21)/b2 with the
    actual b_j; the reduced (PSD) path reuses the same machinery with
    unit b and the reduced coefficients in place of a and c.
    """

    a_sum: Callable  # conj(a11) + a22, complex
    r1: Callable
    r2: Callable
    dr1: Callable
    dr2: Callable
    c12: Callable  # complex
    b1: Callable  # real
    b2: Callable
    c11: Callable  # real
    c22: Callable


@dataclass(frozen=True)
class EnvelopeTerms:
    """Envelope profiles and the derived free terms chi_3, chi_4."""

    m_peak: Callable  # weighted running maximum of |r1 - r2|
    e_y: Callable  # weighted integral envelope for the y drive
    e_v: Callable
    chi3: Callable
    chi4: Callable
    sign_convention: str
    grid: np.ndarray


def build_envelope_terms(
    data: EnvelopeData,
    window: tuple,
    sign_convention: str = "minus_c12",
    *,
    grid_n: int = 1024,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> EnvelopeTerms:
    """Envelope profiles over the window.

    The running maximum M(t) = e^{-R(t)} max_{tau<=t} e^{R(tau)}
    |r1 - r2| (R = int Re a_sum) is accumulated on a grid by the scale-
    free recursion M_{i+1} = max(M_i e^{-dR}, |gap(t_{i+1})|), and the
    weighted integrals evolve as E' = -R' E + |w| with w the respective
    off-diagonal drive. Nothing here exponentiates R itself, so strongly
    damped or strongly growing scenarios stay in range.

    chi_3 = b2 (M + E_y)^2 - b2 |r2|^2 - c11 and symmetrically chi_4;
    sign_convention picks the sign of c12 inside the drives w.
    """
    if sign_convention not in ("minus_c12", "plus_c12"):
        raise ValueError("sign_convention must be 'minus_c12' or 'plus_c12'")
    sgn = -1.0 if sign_convention == "minus_c12" else 1.0
    lo, hi = float(window[0]), float(window[1])

    def w_y(t):
        return data.dr2(t) + data.r2(t) * data.a_sum(t) + sgn * data.c12(t)

    def w_v(t):
        return data.dr1(t) + data.r1(t) * data.a_sum(t) + sgn * data.c12(t)

    def field(t, y):
        rp = float(np.real(data.a_sum(t)))
        return np.array([rp, -rp * y[1] + abs(w_y(t)), -rp * y[2] + abs(w_v(t))])

    traj = adaptive_solve(field, np.zeros(3), (lo, hi), rtol, atol)

    ts = np.linspace(lo, hi, grid_n + 1)
    rs = traj.dense_eval(ts)[:, 0]
    gaps = np.array([abs(data.r1(t) - data.r2(t)) for t in ts])
    m = np.empty_like(gaps)
    m[0] = gaps[0]
    for i in range(1, len(ts)):
        m[i] = max(m[i - 1] * math.exp(min(rs[i - 1] - rs[i], _EXP_CAP)), gaps[i])

    def _r_at(t):
        return float(traj.dense_eval(float(t))[0])

    def m_peak(t):
        t = float(t)
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 1))
        decayed = m[i] * math.exp(min(rs[i] - _r_at(t), _EXP_CAP))
        return max(decayed, abs(data.r1(t) - data.r2(t)))

    def e_y(t):
        return float(traj.dense_eval(float(t))[1])

    def e_v(t):
        return float(traj.dense_eval(float(t))[2])

    def chi3(t):
        b2 = data.b2(t)
        env = m_peak(t) + e_y(t)
        return b2 * env * env - b2 * abs(data.r2(t)) ** 2 - data.c11(t)

    def chi4(t):
        b1 = data.b1(t)
        env = m_peak(t) + e_v(t)
        return b1 * env * env - b1 * abs(data.r1(t)) ** 2 - data.c22(t)

    return EnvelopeTerms(
        m_peak=m_peak,
        e_y=e_y,
        e_v=e_v,
        chi3=chi3,
        chi4=chi4,
        sign_convention=sign_convention,
        grid=ts,
    )


def _memoized_eval(s: Scenario) -> Scenario:
    """Scenario copy whose eval caches the most recent sample.

    The envelope closures read several coefficient entries at the same t
    in a row; a one-slot cache turns those into a single eval call.
    Callers only read the returned matrices, so sharing them is safe.
    """
    last_t = [None]
    last_v = [None]
    inner = s.eval

    def ev(t):
        t = float(t)
        if last_t[0] != t:
            last_v[0] = inner(t)
            last_t[0] = t
        return last_v[0]

    return replace(s, eval=ev)


def _diag_envelope_data(s: Scenario) -> EnvelopeData:
    s = _memoized_eval(s)
    rf = ratio_fns(s)

    def a_sum(t):
        a = s.eval(t)[0]
        return complex(np.conj(a[0, 0]) + a[1, 1])

    def c12(t):
        return complex(s.eval(t)[2][0, 1])

    def b1(t):
        return float(np.real(s.eval(t)[1][0, 0]))

    def b2(t):
        return float(np.real(s.eval(t)[1][1, 1]))

    def c11(t):
        return float(np.real(s.eval(t)[2][0, 0]))

    def c22(t):
        return float(np.real(s.eval(t)[2][1, 1]))

    return EnvelopeData(
        a_sum=a_sum,
        r1=rf.r1,
        r2=rf.r2,
        dr1=rf.dr1,
        dr2=rf.dr2,
        c12=c12,
        b1=b1,
        b2=b2,
        c11=c11,
        c22=c22,
    )


def coupling_gap_peak(s: Scenario, window: tuple, **kw) -> Callable:
    """The weighted running maximum of |a12/b1 - conj(a21)/b2| alone."""
    _require_positive_diag(s)
    return build_envelope_terms(_diag_envelope_data(s), window, **kw).m_peak


def _require_positive_diag(s: Scenario):
    if "B_diagonal" not in s.tags:
        raise NotDiagonalB(f"scenario {s.name!r} lacks the B_diagonal tag")
    if "B_positive" not in s.tags:
        raise NotPositiveB(f"scenario {s.name!r} lacks the B_positive tag")


def envelope_terms_diag(
    s: Scenario, window: tuple, sign_convention: str = "minus_c12", **kw
) -> EnvelopeTerms:
    """chi_3 and chi_4 for a positive diagonal-B scenario."""
    _require_positive_diag(s)
    return build_envelope_terms(_diag_envelope_data(s), window, sign_convention, **kw)


# ---------------------------------------------------------------------------
# The substituted subsystem flow and the envelope bound check.


def subsystem_solve(
    s: Scenario,
    which: str,
    init: tuple,
    window: tuple,
    *,
    other_init: tuple | None = None,
    y_max: float = DEFAULT_Y_MAX,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> tuple[Trajectory, Optional[BlowupRecord]]:
    """Integrate the ratio-substituted pair flow and project one pair.

    which = "first" returns (z11, y) with y = z12 + conj(a21)/b2;
    which = "second" returns (z22, v) with v = z12 + a12/b1. The two
    displayed pairs are not closed on their own: each drive couples to
    the other diagonal component through b1 z11 + b2 z22, so the full
    four-real-plus-two-complex state is integrated jointly and the
    requested projection is returned. init seeds the requested pair and
    other_init the opposite one (defaults to mirroring init).

    The returned trajectory's states are (z, Re w, Im w).
    """
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    rf = ratio_fns(s)
    z0, w0 = float(init[0]), complex(init[1])
    oz0, ow0 = (z0, w0) if other_init is None else (float(other_init[0]), complex(other_init[1]))
    if which == "first":
        z11_0, y0, z22_0, v0 = z0, w0, oz0, ow0
    else:
        z22_0, v0, z11_0, y0 = z0, w0, oz0, ow0

    def field(t, st):
        z11, z22 = st[0], st[1]
        y = st[2] + 1j * st[3]
        v = st[4] + 1j * st[5]
        a, b, c = s.eval(t)
        b1 = float(np.real(b[0, 0]))
        b2 = float(np.real(b[1, 1]))
        a11, a12, a21, a22 = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
        c11 = float(np.real(c[0, 0]))
        c22 = float(np.real(c[1, 1]))
        c12 = c[0, 1]
        asum = np.conj(a11) + a22
        sig = b1 * z11 + b2 * z22 + asum
        dz11 = -(
            b1 * z11 * z11
            + 2.0 * float(np.real(a11)) * z11
            + b2 * abs(y) ** 2
            - abs(a21) ** 2 / b2
            - c11
        )
        dz22 = -(
            b2 * z22 * z22
            + 2.0 * float(np.real(a22)) * z22
            + b1 * abs(v) ** 2
            - abs(a12) ** 2 / b1
            - c22
        )
        dy = -(
            sig * y
            + (a12 - (b1 / b2) * np.conj(a21)) * z11
            - rf.dr2(t)
            - rf.r2(t) * asum
            - c12
        )
        dv = -(
            sig * v
            + (np.conj(a21) - (b2 / b1) * a12) * z22
            - rf.dr1(t)
            - rf.r1(t) * asum
            - c12
        )
        return np.array([dz11, dz22, dy.real, dy.imag, dv.real, dv.imag])

    st0 = np.array([z11_0, z22_0, y0.real, y0.imag, v0.real, v0.imag])
    traj = adaptive_solve(
        field,
        st0,
        window,
        rtol,
        atol,
        escape_norm=y_max,
        underflow="event",
    )
    record = None
    if any(e.kind in ("escape", "underflow") for e in traj.events):
        record = BlowupRecord(
            escape_time=traj.t_end, last_norm=float(np.max(np.abs(traj.states[-1])))
        )
    idx = (0, 2, 3) if which == "first" else (1, 4, 5)
    proj = Trajectory(
        times=traj.times,
        states=traj.states[:, list(idx)],
        events=traj.events,
        meta={"kind": f"subsystem_{which}", "joint": traj},
        _seg_h=traj._seg_h,
        _seg_y=traj._seg_y[:, list(idx)],
        _seg_q=traj._seg_q[:, list(idx), :],
    )
    return proj, record


def coupling_bound_check(
    s: Scenario,
    window: tuple,
    *,
    z0: float = 1.0,
    tol: float = 1e-6,
    n_grid: int = 200,
) -> bool:
    """Validate the coupling envelope bound against direct integration.

    Integrates the joint substituted flow from (z0, 0) for both pairs
    and, provided both diagonal components stay nonnegative on the
    window, asserts |y| <= M + E_y and |v| <= M + E_v within
    tol * (1 + bound) on a uniform grid. A negative diagonal component
    raises HypothesisViolated: the bound promises nothing there. The
    envelope uses the plus_c12 drive, which is the form produced by the
    variation-of-constants representation of y and v.
    """
    if z0 < 0.0:
        raise ValueError("z0 must be nonnegative")
    _require_positive_diag(s)
    traj, record = subsystem_solve(s, "first", (z0, 0.0), window)
    joint = traj.meta["joint"]
    hi = joint.t_end
    zmin = float(np.min(joint.states[:, :2]))
    if zmin < -1e-9 * (1.0 + abs(zmin)):
        tneg = float(joint.times[int(np.argmin(np.min(joint.states[:, :2], axis=1)))])
        raise HypothesisViolated("z >= 0", tneg)

    env = build_envelope_terms(_diag_envelope_data(s), (float(window[0]), hi), "plus_c12")
    ts = np.linspace(float(window[0]), hi, n_grid)
    states = joint.dense_eval(ts)
    y_abs = np.hypot(states[:, 2], states[:, 3])
    v_abs = np.hypot(states[:, 4], states[:, 5])
    for i, t in enumerate(ts):
        by = env.m_peak(t) + env.e_y(t)
        bv = env.m_peak(t) + env.e_v(t)
        if y_abs[i] > by + tol * (1.0 + by) or v_abs[i] > bv + tol * (1.0 + bv):
            return False
    return True
