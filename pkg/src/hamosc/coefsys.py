"""Coefficient providers: the map t -> (A(t), B(t), C(t)) with metadata.

A Scenario bundles the coefficient triple of the 4d Hamiltonian system
with its left endpoint, optional analytic derivatives, and structural
tags (diagonal B, PSD / positive B, real coefficients). Tags are verified
by sampling, never trusted from the caller: validate_scenario is the one
place that sets them, and the built-in families wire them in because
their structure is known by construction.

Built-in families:

* harmonic            A = 0, B = I, C = -I
* euler               A = 0, B = I, C = -(c/t^2) I, t0 = 1
* diag_B              constant coefficients with B = diag(b1, b2)
* vector_schrodinger  phi'' + K phi = 0 with a two-frequency potential
                      and +-10i off-diagonal coupling
* ones_B_zero_drift   B = all-ones (singular), A = 0, C = (c_sum/2) I
* ones_B_euler        B = all-ones, row sums of A equal alpha/t,
                      c11 + 2 Re c12 + c22 = (alpha - alpha^2)/t^2
* ones_B_alpha_conditions  B = all-ones, row sums a0 + a1 t, constant
                      Hermitian-part sum of C

The ones_B families fix only row sums and entry sums, so the concrete
matrices below are representatives: A spread uniformly over the row,
C diagonal. Any other representative with the same sums behaves the
same under the all-ones B reduction.

Tabulated scenarios interpolate CSV samples with cubic splines, entrywise
on real and imaginary parts, and never extrapolate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .mat2 import TOL_HERM, is_hermitian, is_psd, norm_max, sqrt_psd

__all__ = [
    "Scenario",
    "TabulatedCoeffs",
    "RatioFns",
    "ValidationReport",
    "UnknownFamily",
    "MissingParam",
    "NonHermitianSample",
    "NonHermitian",
    "OutOfDomain",
    "ZeroDiagonalB",
    "make_family",
    "from_table",
    "load_table_csv",
    "coeff_derivative",
    "ratio_fns",
    "validate_scenario",
    "validated",
    "FAMILIES",
    "TOL_POS",
]

# strict-positivity margin separating B > 0 from B >= 0
TOL_POS = 1e-9


class UnknownFamily(ValueError):
    pass


class MissingParam(ValueError):
    pass


class NonHermitianSample(ValueError):
    def __init__(self, t: float, which: str, asym: float):
        super().__init__(f"{which}({t!r}) is not Hermitian (asymmetry {asym:.3e})")
        self.t = t
        self.which = which


class NonHermitian(ValueError):
    """A scenario violated the standing Hermitian hypothesis on B or C."""

    def __init__(self, t: float, which: str, asym: float):
        super().__init__(f"{which}({t!r}) is not Hermitian (asymmetry {asym:.3e})")
        self.t = t
        self.which = which


class OutOfDomain(ValueError):
    def __init__(self, t: float, lo: float, hi: float):
        super().__init__(f"t = {t!r} outside [{lo!r}, {hi!r}]")
        self.t = t


class ZeroDiagonalB(ValueError):
    def __init__(self, t: float, j: int):
        super().__init__(f"b{j}({t!r}) = 0; ratio undefined")
        self.t = t
        self.j = j


@dataclass(frozen=True)
class Scenario:
    """Coefficient triple with metadata.

    eval: t -> (A, B, C), each a 2x2 complex ndarray.
    analytic_derivatives: t -> (A', B', C') when the family knows them.
    tags: structural flags from {B_diagonal, B_psd, B_positive,
    real_coefficients}; set by construction or by validate_scenario.
    domain_end: right end of validity (None = unbounded).
    """

    name: str
    t0: float
    eval: Callable
    analytic_derivatives: Callable | None = None
    tags: frozenset = frozenset()
    domain_end: float | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RatioFns:
    """a12/b1 and conj(a21)/b2 with derivatives, for diagonal B."""

    r1: Callable
    r2: Callable
    dr1: Callable
    dr2: Callable


@dataclass(frozen=True)
class ValidationReport:
    tags: frozenset
    max_asymmetry: float
    n_samples: int
    window: tuple


_I2 = np.eye(2, dtype=complex)
_ONES = np.ones((2, 2), dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)

# parameter aliases so scenario files may use the typeset names
_PARAM_ALIASES = {
    "λ1": "lam1",
    "λ2": "lam2",
    "θ1": "theta1",
    "θ2": "theta2",
    "α": "alpha",
    "lambda1": "lam1",
    "lambda2": "lam2",
}


def _normalize_params(params: dict) -> dict:
    out = {}
    for key, val in params.items():
        out[_PARAM_ALIASES.get(key, key)] = float(val)
    return out


def _require(params: dict, family: str, *names: str) -> list[float]:
    vals = []
    for nm in names:
        if nm not in params:
            raise MissingParam(f"family {family!r} needs parameter {nm!r}")
        vals.append(params[nm])
    return vals


def _const_eval(a, b, c):
    def ev(t):
        return a.copy(), b.copy(), c.copy()

    return ev


def _zero_derivs(t):
    return _Z2.copy(), _Z2.copy(), _Z2.copy()


def _make_harmonic(params):
    ev = _const_eval(_Z2, _I2, -_I2)
    return Scenario(
        name="harmonic",
        t0=0.0,
        eval=ev,
        analytic_derivatives=_zero_derivs,
        tags=frozenset({"B_diagonal", "B_psd", "B_positive", "real_coefficients"}),
    )


def _make_euler(params):
    (c,) = _require(params, "euler", "c")

    def ev(t):
        return _Z2.copy(), _I2.copy(), (-c / (t * t)) * _I2

    def dv(t):
        return _Z2.copy(), _Z2.copy(), (2.0 * c / (t * t * t)) * _I2

    return Scenario(
        name=f"euler(c={c:g})",
        t0=1.0,
        eval=ev,
        analytic_derivatives=dv,
        tags=frozenset({"B_diagonal", "B_psd", "B_positive", "real_coefficients"}),
        params={"c": c},
    )


def _make_vector_schrodinger(params):
    p1 = params.get("p1", 1.0)
    p2 = params.get("p2", 1.0)
    lam1 = params.get("lam1", 1.0)
    # default second frequency sqrt(2): rational independence of the two
    # frequencies is the user's assertion, it cannot be checked numerically
    lam2 = params.get("lam2", math.sqrt(2.0))
    th1 = params.get("theta1", 0.0)
    th2 = params.get("theta2", 0.0)

    def mu(t):
        return p1 * math.sin(lam1 * t + th1) + p2 * math.sin(lam2 * t + th2)

    def ev(t):
        c = np.array([[-mu(t), -10j], [10j, t * t]], dtype=complex)
        return _Z2.copy(), _I2.copy(), c

    def dv(t):
        dmu = p1 * lam1 * math.cos(lam1 * t + th1) + p2 * lam2 * math.cos(lam2 * t + th2)
        dc = np.array([[-dmu, 0.0], [0.0, 2.0 * t]], dtype=complex)
        return _Z2.copy(), _Z2.copy(), dc

    return Scenario(
        name="vector_schrodinger",
        t0=0.0,
        eval=ev,
        analytic_derivatives=dv,
        tags=frozenset({"B_diagonal", "B_psd", "B_positive"}),
        params=dict(p1=p1, p2=p2, lam1=lam1, lam2=lam2, theta1=th1, theta2=th2),
    )


def _make_diag_b(params):
    b1, b2 = _require(params, "diag_B", "b1", "b2")
    a11 = params.get("a11", 0.0)
    a22 = params.get("a22", 0.0)
    a12 = complex(params.get("a12_re", 0.0), params.get("a12_im", 0.0))
    a21 = complex(params.get("a21_re", 0.0), params.get("a21_im", 0.0))
    c11 = params.get("c11", 0.0)
    c22 = params.get("c22", 0.0)
    c12 = complex(params.get("c12_re", 0.0), params.get("c12_im", 0.0))
    a = np.array([[a11, a12], [a21, a22]], dtype=complex)
    b = np.array([[b1, 0.0], [0.0, b2]], dtype=complex)
    c = np.array([[c11, c12], [np.conj(c12), c22]], dtype=complex)
    tags = {"B_diagonal"}
    if b1 >= 0.0 and b2 >= 0.0:
        tags.add("B_psd")
    if b1 > TOL_POS and b2 > TOL_POS:
        tags.add("B_positive")
    if norm_max(np.imag(a) + 0j) == 0.0 and params.get("c12_im", 0.0) == 0.0:
        tags.add("real_coefficients")
    return Scenario(
        name="diag_B",
        t0=0.0,
        eval=_const_eval(a, b, c),
        analytic_derivatives=_zero_derivs,
        tags=frozenset(tags),
        params=dict(params),
    )


def _make_ones_b_zero_drift(params):
    (c_sum,) = _require(params, "ones_B_zero_drift", "c_sum")

    def ev(t):
        return _Z2.copy(), _ONES.copy(), (c_sum / 2.0) * _I2

    return Scenario(
        name="ones_B_zero_drift",
        t0=0.0,
        eval=ev,
        analytic_derivatives=_zero_derivs,
        tags=frozenset({"B_psd", "real_coefficients"}),
        params={"c_sum": c_sum},
    )


def _make_ones_b_euler(params):
    (alpha,) = _require(params, "ones_B_euler", "alpha")

    def ev(t):
        a = (alpha / (2.0 * t)) * _ONES
        c = ((alpha - alpha * alpha) / (2.0 * t * t)) * _I2
        return a, _ONES.copy(), c

    def dv(t):
        da = (-alpha / (2.0 * t * t)) * _ONES
        dc = ((alpha * alpha - alpha) / (t * t * t)) * _I2
        return da, _Z2.copy(), dc

    return Scenario(
        name=f"ones_B_euler(alpha={alpha:g})",
        t0=1.0,
        eval=ev,
        analytic_derivatives=dv,
        tags=frozenset({"B_psd", "real_coefficients"}),
        params={"alpha": alpha},
    )


def _make_ones_b_alpha_conditions(params):
    a0, a1, s0 = _require(params, "ones_B_alpha_conditions", "a0", "a1", "s0")
    if a0 <= 0.0 or a1 < 0.0:
        raise ValueError("row-sum a0 + a1*t must be positive and nondecreasing")

    def ev(t):
        a = ((a0 + a1 * t) / 2.0) * _ONES
        return a, _ONES.copy(), (s0 / 2.0) * _I2

    def dv(t):
        return (a1 / 2.0) * _ONES, _Z2.copy(), _Z2.copy()

    return Scenario(
        name="ones_B_alpha_conditions",
        t0=0.0,
        eval=ev,
        analytic_derivatives=dv,
        tags=frozenset({"B_psd", "real_coefficients"}),
        params={"a0": a0, "a1": a1, "s0": s0},
    )


FAMILIES = {
    "harmonic": _make_harmonic,
    "euler": _make_euler,
    "diag_B": _make_diag_b,
    "vector_schrodinger": _make_vector_schrodinger,
    "ones_B_zero_drift": _make_ones_b_zero_drift,
    "ones_B_euler": _make_ones_b_euler,
    "ones_B_alpha_conditions": _make_ones_b_alpha_conditions,
}


def make_family(family_id: str, params: dict | None = None) -> Scenario:
    """Build a Scenario from a named parametric family."""
    if family_id not in FAMILIES:
        raise UnknownFamily(f"unknown family {family_id!r}; known: {sorted(FAMILIES)}")
    scen = FAMILIES[family_id](_normalize_params(params or {}))
    return replace(scen, family=family_id)


# ---------------------------------------------------------------------------
# Tabulated coefficients.

CSV_COLUMNS = ["t"] + [
    f"{part}_{entry}"
    for entry in (
        "a11", "a12", "a21", "a22",
        "b11", "b12", "b21", "b22",
        "c11", "c12", "c21", "c22",
    )
    for part in ("re", "im")
]


@dataclass(frozen=True)
class TabulatedCoeffs:
    """Sampled coefficient triples on a strictly increasing grid."""

    times: np.ndarray
    samples: np.ndarray  # (n, 3, 2, 2) complex, A/B/C per row

    def __post_init__(self):
        if len(self.times) < 2:
            raise ValueError("need at least 2 samples")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")


def load_table_csv(path) -> TabulatedCoeffs:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != CSV_COLUMNS:
            raise ValueError(
                f"bad CSV header: expected {','.join(CSV_COLUMNS)!r}"
            )
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.asarray(rows)
    times = data[:, 0]
    flat = data[:, 1::2] + 1j * data[:, 2::2]  # (n, 12)
    samples = flat.reshape(len(times), 3, 2, 2)
    return TabulatedCoeffs(times=times, samples=samples)


def from_table(tab: TabulatedCoeffs, name: str = "tabulated") -> Scenario:
    """Scenario interpolating the table with entrywise cubic splines.

    B and C samples must be Hermitian. Evaluation outside the sampled
    range raises OutOfDomain: no extrapolation, per the finite-window
    policy for every downstream operation.
    """
    for i, t in enumerate(tab.times):
        for which, mat in (("B", tab.samples[i, 1]), ("C", tab.samples[i, 2])):
            flag = is_hermitian(mat)
            if not flag.is_hermitian:
                raise NonHermitianSample(float(t), which, flag.max_asymmetry)

    bc = "not-a-knot" if len(tab.times) >= 4 else "natural"
    flat = tab.samples.reshape(len(tab.times), 12)
    spl_re = CubicSpline(tab.times, np.real(flat), bc_type=bc)
    spl_im = CubicSpline(tab.times, np.imag(flat), bc_type=bc)
    dre = spl_re.derivative()
    dim = spl_im.derivative()
    lo, hi = float(tab.times[0]), float(tab.times[-1])

    def _check(t):
        if t < lo - 1e-12 * (1 + abs(lo)) or t > hi + 1e-12 * (1 + abs(hi)):
            raise OutOfDomain(t, lo, hi)
        return min(max(t, lo), hi)

    def ev(t):
        t = _check(float(t))
        v = (spl_re(t) + 1j * spl_im(t)).reshape(3, 2, 2)
        return v[0], v[1], v[2]

    def dv(t):
        t = _check(float(t))
        v = (dre(t) + 1j * dim(t)).reshape(3, 2, 2)
        return v[0], v[1], v[2]

    scen = Scenario(
        name=name,
        t0=lo,
        eval=ev,
        analytic_derivatives=dv,
        domain_end=hi,
    )
    report = validate_scenario(scen, (lo, hi), n_samples=max(64, 4 * len(tab.times)))
    return replace(scen, tags=report.tags)


# ---------------------------------------------------------------------------
# Derivatives and ratio functions.

_FD_EPS = np.finfo(float).eps ** (1.0 / 3.0)


def _fd_step(t: float) -> float:
    return _FD_EPS * max(1.0, abs(t))


def _central_fd(fn, t, lo, hi):
    h = _fd_step(t)
    if lo is not None and t - h < lo:
        # second-order one-sided at the left edge
        return (-3.0 * fn(t) + 4.0 * fn(t + h) - fn(t + 2 * h)) / (2.0 * h)
    if hi is not None and t + h > hi:
        return (3.0 * fn(t) - 4.0 * fn(t - h) + fn(t - 2 * h)) / (2.0 * h)
    return (fn(t + h) - fn(t - h)) / (2.0 * h)


def coeff_derivative(s: Scenario, which: str, t: float):
    """Derivative of A, B, C, or sqrtB at t.

    Analytic when the scenario provides one; otherwise a central finite
    difference with step eps^(1/3) * max(1, |t|), one-sided at domain
    edges. sqrtB always differentiates the sqrt_psd composition by the
    finite-difference scheme, since the square-root path has no wired
    analytic derivative.
    """
    t = float(t)
    hi = s.domain_end
    if t < s.t0 - 1e-12 * (1 + abs(s.t0)) or (hi is not None and t > hi + 1e-12 * (1 + abs(hi))):
        raise OutOfDomain(t, s.t0, hi if hi is not None else math.inf)
    idx = {"A": 0, "B": 1, "C": 2}
    if which == "sqrtB":
        return _central_fd(lambda u: sqrt_psd(s.eval(u)[1]), t, s.t0, hi)
    if which not in idx:
        raise ValueError(f"which must be A, B, C, or sqrtB, got {which!r}")
    if s.analytic_derivatives is not None:
        return s.analytic_derivatives(t)[idx[which]]
    return _central_fd(lambda u: s.eval(u)[idx[which]], t, s.t0, hi)


def ratio_fns(s: Scenario) -> RatioFns:
    """The coupling ratios a12/b1 and conj(a21)/b2 for diagonal B."""
    if "B_diagonal" not in s.tags:
        raise ValueError("ratio functions need the B_diagonal tag")

    def _b(t, j):
        b = s.eval(t)[1]
        val = float(np.real(b[j - 1, j - 1]))
        if abs(val) <= TOL_POS * (1.0 + norm_max(b)):
            raise ZeroDiagonalB(t, j)
        return val

    def r1(t):
        return complex(s.eval(t)[0][0, 1]) / _b(t, 1)

    def r2(t):
        return complex(np.conj(s.eval(t)[0][1, 0])) / _b(t, 2)

    if s.analytic_derivatives is not None:

        def dr1(t):
            a, b, _ = s.eval(t)
            da, db, _ = s.analytic_derivatives(t)
            b1 = _b(t, 1)
            return complex(da[0, 1]) / b1 - complex(a[0, 1]) * float(np.real(db[0, 0])) / (b1 * b1)

        def dr2(t):
            a, b, _ = s.eval(t)
            da, db, _ = s.analytic_derivatives(t)
            b2 = _b(t, 2)
            return complex(np.conj(da[1, 0])) / b2 - complex(np.conj(a[1, 0])) * float(
                np.real(db[1, 1])
            ) / (b2 * b2)

    else:
        hi = s.domain_end

        def dr1(t):
            return _central_fd(r1, t, s.t0, hi)

        def dr2(t):
            return _central_fd(r2, t, s.t0, hi)

    return RatioFns(r1=r1, r2=r2, dr1=dr1, dr2=dr2)


def validate_scenario(s: Scenario, window: tuple, n_samples: int = 256) -> ValidationReport:
    """Sample the window and derive the structural tags.

    Hermitian violation of B or C is a hard error: the entire theory
    assumes it. Tags are set from what the samples show, with the strict
    positivity margin TOL_POS * (1 + |B|) separating B_positive from
    B_psd.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("window must satisfy T > t0")
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    ts = np.linspace(lo, hi, n_samples)
    diag = True
    psd = True
    positive = True
    realc = True
    worst_asym = 0.0
    for t in ts:
        a, b, c = s.eval(float(t))
        for which, m in (("B", b), ("C", c)):
            flag = is_hermitian(m)
            worst_asym = max(worst_asym, flag.max_asymmetry)
            if not flag.is_hermitian:
                raise NonHermitian(float(t), which, flag.max_asymmetry)
        scale = 1.0 + norm_max(b)
        if abs(b[0, 1]) > TOL_HERM * scale or abs(b[1, 0]) > TOL_HERM * scale:
            diag = False
        if not is_psd(b):
            psd = False
            positive = False
        elif not is_psd(b - TOL_POS * scale * np.eye(2)):
            positive = False
        if max(norm_max(np.imag(a) + 0j), norm_max(np.imag(b) + 0j), norm_max(np.imag(c) + 0j)) > TOL_HERM * (
            1.0 + max(norm_max(a), norm_max(b), norm_max(c))
        ):
            realc = False
    tags = set()
    if diag:
        tags.add("B_diagonal")
    if psd:
        tags.add("B_psd")
    if positive:
        tags.add("B_positive")
    if realc:
        tags.add("real_coefficients")
    return ValidationReport(
        tags=frozenset(tags), max_asymmetry=worst_asym, n_samples=n_samples, window=(lo, hi)
    )


def validated(s: Scenario, window: tuple, n_samples: int = 256) -> Scenario:
    """Copy of the scenario carrying freshly verified tags."""
    return replace(s, tags=validate_scenario(s, window, n_samples).tags)
