"""Equilibria, stability and case classification of the reduced planar map.

The reduced map is ``H(x) = (phi_1(x) x_1, phi_2(x) x_2)`` with

    phi_i(x) = rS_i / (1 + cS_i1 x_1 + cS_i2 x_2) + rI_i / (1 + cI_i1 x_1 + cI_i2 x_2).

Species are numbered 1 and 2 in the public functions, as in the usual
notation; arrays are indexed from zero internally.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError
from .model import DemographyParams, DiseaseParams
from .reduction import ReducedParams, compute_nu

SCAN_INTERVALS = 10_000
ROOT_XTOL = 1e-12
HYPERBOLIC_MARGIN = 1e-9
INTERCEPT_RTOL = 1e-9
TANGENCY_TOL = 1e-9


class ReducedState(NamedTuple):
    n1: float
    n2: float


def _species(i):
    if i not in (1, 2):
        raise DomainError(f"species index must be 1 or 2, got {i!r}")
    return i - 1


def _phi_array(rp, s, x1, x2):
    return (rp.rS[s] / (1 + rp.cS[s, 0] * x1 + rp.cS[s, 1] * x2)
            + rp.rI[s] / (1 + rp.cI[s, 0] * x1 + rp.cI[s, 1] * x2))


def phi(rp: ReducedParams, i: int, x) -> float:
    """Per-capita growth factor of species ``i`` at ``x``."""
    x1, x2 = x
    if x1 < 0 or x2 < 0:
        raise DomainError("state must be componentwise non-negative")
    return float(_phi_array(rp, _species(i), x1, x2))


def reduced_map(rp, X):
    """Vectorised ``H`` on an array whose last axis has length 2."""
    X = np.asarray(X, dtype=float)
    x1, x2 = X[..., 0], X[..., 1]
    return np.stack([_phi_array(rp, 0, x1, x2) * x1,
                     _phi_array(rp, 1, x1, x2) * x2], axis=-1)


def reduced_step(rp: ReducedParams, x) -> ReducedState:
    x1, x2 = (float(v) for v in x)
    if x1 < 0 or x2 < 0:
        raise DomainError("state must be componentwise non-negative")
    return ReducedState(float(_phi_array(rp, 0, x1, x2)) * x1,
                        float(_phi_array(rp, 1, x1, x2)) * x2)


def jacobian(rp: ReducedParams, x) -> np.ndarray:
    """Closed-form derivative ``DH(x)`` as a 2x2 array."""
    x = np.asarray(x, dtype=float)
    J = np.empty((2, 2))
    for s in range(2):
        dS = 1 + rp.cS[s] @ x
        dI = 1 + rp.cI[s] @ x
        grad = -rp.rS[s] * rp.cS[s] / dS**2 - rp.rI[s] * rp.cI[s] / dI**2
        J[s] = x[s] * grad
        J[s, s] += rp.rS[s] / dS + rp.rI[s] / dI
    return J


def eigenvalues_2x2(J):
    """Both eigenvalues of a real 2x2 matrix from its characteristic polynomial."""
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = 0.25 * tr * tr - det
    if disc >= 0:
        root = disc**0.5
        big = 0.5 * tr + (root if tr >= 0 else -root)
        small = det / big if big != 0 else 0.5 * tr - (root if tr >= 0 else -root)
        return complex(big), complex(small)
    root = cmath.sqrt(disc)
    return 0.5 * tr + root, 0.5 * tr - root


# -- isoclines -------------------------------------------------------------

@dataclass(frozen=True)
class IsoclineBranch:
    """Geometry of the curve ``phi_i = 1`` in the closed positive quadrant.

    ``R1`` and ``R2`` are the intercepts with the x1 and x2 axes and are
    ``None`` when ``phi0 <= 1`` (the curve misses the open quadrant).
    ``delta`` and ``Delta`` are the two conic discriminants.
    """

    species: int
    phi0: float
    alpha1: float
    alpha2: float
    R1: float | None
    R2: float | None
    degenerate: bool
    delta: float
    Delta: float

    @property
    def exists(self):
        return self.R1 is not None


def _axis_intercept(rS, rI, a, b):
    """Positive root of ``rS/(1+a x) + rI/(1+b x) = 1`` and the linear
    coefficient ``alpha`` of ``a b x^2 - alpha x - (rS + rI - 1) = 0``."""
    alpha = a * (rI - 1) + b * (rS - 1)
    excess = rS + rI - 1
    if excess <= 0:
        return alpha, None
    root = (alpha * alpha + 4 * a * b * excess) ** 0.5
    if alpha >= 0:
        R = (alpha + root) / (2 * a * b)
    else:
        R = 2 * excess / (root - alpha)
    return alpha, R


def isocline(rp: ReducedParams, i: int) -> IsoclineBranch:
    s = _species(i)
    rS, rI = float(rp.rS[s]), float(rp.rI[s])
    cS, cI = rp.cS[s], rp.cI[s]
    alpha1, R1 = _axis_intercept(rS, rI, cS[0], cI[0])
    alpha2, R2 = _axis_intercept(rS, rI, cS[1], cI[1])

    cross = 0.5 * (cS[0] * cI[1] + cS[1] * cI[0])
    lin1 = -0.5 * (cS[0] * (rI - 1) + cI[0] * (rS - 1))
    lin2 = -0.5 * (cS[1] * (rI - 1) + cI[1] * (rS - 1))
    conic = np.array([[cS[0] * cI[0], cross, lin1],
                      [cross, cS[1] * cI[1], lin2],
                      [lin1, lin2, 1 - rS - rI]])
    delta = float(np.linalg.det(conic[:2, :2]))
    Delta = float(np.linalg.det(conic))
    skew = cS[0] * cI[1] - cS[1] * cI[0]
    degenerate = abs(skew) <= 1e-12 * (cS[0] * cI[1] + cS[1] * cI[0])
    return IsoclineBranch(i, rS + rI, float(alpha1), float(alpha2),
                          None if R1 is None else float(R1),
                          None if R2 is None else float(R2),
                          bool(degenerate), delta, Delta)


def _height_array(rp, s, x1, degenerate):
    """Non-negative solution ``x2`` of ``phi_s(x1, x2) = 1``; ``x1`` must lie
    within the branch's domain."""
    rS, rI = rp.rS[s], rp.rI[s]
    cS, cI = rp.cS[s], rp.cI[s]
    x1 = np.asarray(x1, dtype=float)
    if degenerate:
        # cI is a multiple of cS: the curve is a level set of u = cS . x.
        lam = cI[1] / cS[1]
        _, u = _axis_intercept(rS, rI, 1.0, lam)
        return np.maximum((u - cS[0] * x1) / cS[1], 0.0)
    P = 1 + cS[0] * x1
    Q = 1 + cI[0] * x1
    A = cS[1] * cI[1]
    B = P * cI[1] + Q * cS[1] - rS * cI[1] - rI * cS[1]
    C = P * Q - rS * Q - rI * P
    C = np.minimum(C, 0.0)
    root = np.sqrt(B * B - 4 * A * C)
    with np.errstate(divide="ignore", invalid="ignore"):
        x2 = np.where(B >= 0, -2 * C / (B + root), (root - B) / (2 * A))
    return np.where(B + root == 0, 0.0, x2)


def isocline_height(rp: ReducedParams, i: int, x1: float) -> float:
    """Height of the isocline of species ``i`` above ``x1``, for ``x1`` between
    0 and the branch's x1-intercept."""
    branch = isocline(rp, i)
    if not branch.exists:
        raise DomainError(f"isocline of species {i} does not reach the quadrant")
    if not 0 <= x1 <= branch.R1:
        raise DomainError(f"x1={x1} outside [0, {branch.R1}]")
    return float(_height_array(rp, _species(i), x1, branch.degenerate))


# -- equilibria ------------------------------------------------------------

class Kind(str, enum.Enum):
    TRIVIAL = "trivial"
    SEMITRIVIAL_1 = "semitrivial-1"
    SEMITRIVIAL_2 = "semitrivial-2"
    POSITIVE = "positive"


class Stability(str, enum.Enum):
    ATTRACTING = "attracting"
    SADDLE = "saddle"
    REPELLING = "repelling"
    UNSTABLE_OTHER = "unstable-other"


@dataclass(frozen=True)
class Equilibrium:
    name: str
    location: ReducedState
    kind: Kind
    eigenvalues: tuple
    stability: Stability
    hyperbolic: bool

    def as_dict(self):
        return {
            "name": self.name,
            "location": list(self.location),
            "kind": self.kind.value,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "stability": self.stability.value,
            "hyperbolic": self.hyperbolic,
        }


def _stability(eigs):
    mods = [abs(z) for z in eigs]
    if any(abs(m - 1) <= HYPERBOLIC_MARGIN for m in mods):
        return Stability.UNSTABLE_OTHER, False
    if all(m < 1 for m in mods):
        return Stability.ATTRACTING, True
    if all(m > 1 for m in mods):
        return Stability.REPELLING, True
    return Stability.SADDLE, True


def _make_equilibrium(rp, name, location, kind):
    eigs = eigenvalues_2x2(jacobian(rp, location))
    stability, hyperbolic = _stability(eigs)
    return Equilibrium(name, ReducedState(*map(float, location)), kind,
                       eigs, stability, hyperbolic)


@dataclass(frozen=True)
class EquilibriumSet:
    """All equilibria in the order E0, E1, E2 (when present) then the
    positive ones sorted along the K-order (x1 up, x2 down).

    ``nongeneric`` is set for tangencies, non-hyperbolic points or more than
    three positive equilibria; ``notes`` says which.
    """

    equilibria: tuple
    nongeneric: bool
    notes: tuple

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self):
        return len(self.equilibria)

    def __getitem__(self, idx):
        return self.equilibria[idx]

    @property
    def positive(self):
        return [e for e in self.equilibria if e.kind is Kind.POSITIVE]

    def by_name(self, name):
        for e in self.equilibria:
            if e.name == name:
                return e
        raise KeyError(name)


def _newton_polish(rp, x, steps=3):
    """Newton on ``phi_1 = phi_2 = 1``; keeps the best iterate."""
    def resid(y):
        return np.array([_phi_array(rp, 0, *y) - 1, _phi_array(rp, 1, *y) - 1])

    best = np.asarray(x, dtype=float)
    best_r = np.abs(resid(best)).max()
    y = best.copy()
    for _ in range(steps):
        grad = np.empty((2, 2))
        for s in range(2):
            dS = 1 + rp.cS[s] @ y
            dI = 1 + rp.cI[s] @ y
            grad[s] = -rp.rS[s] * rp.cS[s] / dS**2 - rp.rI[s] * rp.cI[s] / dI**2
        try:
            y = y - np.linalg.solve(grad, resid(y))
        except np.linalg.LinAlgError:
            break
        if np.any(y <= 0):
            break
        r = np.abs(resid(y)).max()
        if r < best_r:
            best, best_r = y.copy(), r
    return best


def _positive_roots(rp, b1, b2):
    """Roots of ``Phi_1 - Phi_2`` on the common domain plus tangency notes."""
    top = min(b1.R1, b2.R1)
    xs = np.linspace(0.0, top, SCAN_INTERVALS + 1)
    g = _height_array(rp, 0, xs, b1.degenerate) - _height_array(rp, 1, xs, b2.degenerate)

    def gfun(x):
        return float(_height_array(rp, 0, x, b1.degenerate)
                     - _height_array(rp, 1, x, b2.degenerate))

    scale = max(b1.R2, b2.R2)
    roots, notes = [], []
    sign = np.sign(g)
    for k in np.flatnonzero(sign[1:-1] == 0) + 1:
        roots.append(float(xs[k]))
    for k in np.flatnonzero(sign[:-1] * sign[1:] < 0):
        roots.append(brentq(gfun, xs[k], xs[k + 1], xtol=ROOT_XTOL, rtol=1e-15))

    # A pair of roots closer than the scan spacing, or a tangency, shows up
    # as a local extremum of g without a sign change around it.
    dg = np.diff(g)
    candidates = np.flatnonzero(
        (dg[:-1] * dg[1:] < 0) & (sign[:-2] == sign[1:-1]) & (sign[1:-1] == sign[2:])
    ) + 1
    for k in candidates:
        mid = g[k]
        flip = -1.0 if mid > 0 else 1.0
        res = minimize_scalar(lambda x: flip * gfun(x), bounds=(xs[k - 1], xs[k + 1]),
                              method="bounded", options={"xatol": 1e-14})
        ge = gfun(res.x)
        if abs(ge) <= TANGENCY_TOL * scale:
            notes.append(f"isoclines tangent near x1={res.x:.12g}")
        elif np.sign(ge) != sign[k]:
            roots.append(brentq(gfun, xs[k - 1], res.x, xtol=ROOT_XTOL, rtol=1e-15))
            roots.append(brentq(gfun, res.x, xs[k + 1], xtol=ROOT_XTOL, rtol=1e-15))
    return sorted(roots), notes


def find_equilibria(rp: ReducedParams) -> EquilibriumSet:
    """Locate and classify every non-negative equilibrium of the reduced map."""
    b1, b2 = isocline(rp, 1), isocline(rp, 2)
    eqs = [_make_equilibrium(rp, "E0", (0.0, 0.0), Kind.TRIVIAL)]
    notes = []
    if b1.exists:
        eqs.append(_make_equilibrium(rp, "E1", (b1.R1, 0.0), Kind.SEMITRIVIAL_1))
    if b2.exists:
        eqs.append(_make_equilibrium(rp, "E2", (0.0, b2.R2), Kind.SEMITRIVIAL_2))
    if b1.exists and b2.exists:
        roots, notes = _positive_roots(rp, b1, b2)
        for n, x1 in enumerate(roots):
            x2 = float(_height_array(rp, 0, x1, b1.degenerate))
            loc = _newton_polish(rp, (x1, x2))
            eqs.append(_make_equilibrium(rp, f"E{3 + n}", loc, Kind.POSITIVE))
        if len(roots) > 3:
            notes.append(f"{len(roots)} positive equilibria")
    for e in eqs:
        if not e.hyperbolic:
            notes.append(f"{e.name} is not hyperbolic")
    return EquilibriumSet(tuple(eqs), bool(notes), tuple(notes))


# -- case classification ---------------------------------------------------

class CaseLabel(str, enum.Enum):
    EXT00 = "Ext00"
    EXT1 = "Ext1"
    EXT2 = "Ext2"
    A1 = "A1"
    A3 = "A3"
    B1 = "B1"
    B3 = "B3"
    C0 = "C0"
    C2 = "C2"
    D0 = "D0"
    D2 = "D2"
    NONGENERIC = "NonGeneric"

    def __str__(self):
        return self.value


_ALLOWED_COUNTS = {"A": (1, 3), "B": (1, 3), "C": (0, 2), "D": (0, 2)}


@dataclass(frozen=True)
class Classification:
    label: CaseLabel
    branches: tuple
    equilibria: EquilibriumSet
    letter: str | None
    reason: str

    def as_dict(self):
        return {
            "label": self.label.value,
            "letter": self.letter,
            "reason": self.reason,
            "isoclines": [
                {"species": b.species, "phi0": b.phi0, "R1": b.R1, "R2": b.R2,
                 "alpha1": b.alpha1, "alpha2": b.alpha2,
                 "degenerate": b.degenerate, "delta": b.delta, "Delta": b.Delta}
                for b in self.branches
            ],
            "equilibria": [e.as_dict() for e in self.equilibria],
            "positive_count": len(self.equilibria.positive),
            "nongeneric_notes": list(self.equilibria.notes),
        }


def _compare(a, b):
    if abs(a - b) <= INTERCEPT_RTOL * max(abs(a), abs(b)):
        return 0
    return 1 if a > b else -1


def classify(rp: ReducedParams) -> Classification:
    """Case label together with the isoclines and equilibria behind it."""
    b1, b2 = isocline(rp, 1), isocline(rp, 2)
    eqs = find_equilibria(rp)
    branches = (b1, b2)
    if not b1.exists and not b2.exists:
        return Classification(CaseLabel.EXT00, branches, eqs, None, "phi_i(0,0) <= 1 for both")
    if not b2.exists:
        return Classification(CaseLabel.EXT1, branches, eqs, None, "phi_2(0,0) <= 1")
    if not b1.exists:
        return Classification(CaseLabel.EXT2, branches, eqs, None, "phi_1(0,0) <= 1")

    on_x1 = _compare(b1.R1, b2.R1)
    on_x2 = _compare(b1.R2, b2.R2)
    if on_x1 == 0 or on_x2 == 0:
        return Classification(CaseLabel.NONGENERIC, branches, eqs, None, "intercepts coincide")
    letter = {(-1, 1): "A", (1, -1): "B", (1, 1): "C", (-1, -1): "D"}[(on_x1, on_x2)]
    count = len(eqs.positive)
    if eqs.nongeneric:
        return Classification(CaseLabel.NONGENERIC, branches, eqs, letter, "; ".join(eqs.notes))
    if count not in _ALLOWED_COUNTS[letter]:
        return Classification(CaseLabel.NONGENERIC, branches, eqs, letter,
                              f"{count} positive equilibria incompatible with case {letter}")
    return Classification(CaseLabel(f"{letter}{count}"), branches, eqs, letter, "generic")


def classify_case(rp: ReducedParams) -> CaseLabel:
    return classify(rp).label


# Stability of the positive equilibria in K-order and of (E1, E2), per case.
EXPECTED_STABILITY = {
    CaseLabel.A1: (("attracting",), ("saddle", "saddle")),
    CaseLabel.A3: (("attracting", "saddle", "attracting"), ("saddle", "saddle")),
    CaseLabel.B1: (("saddle",), ("attracting", "attracting")),
    CaseLabel.B3: (("saddle", "attracting", "saddle"), ("attracting", "attracting")),
    CaseLabel.C0: ((), ("attracting", "saddle")),
    CaseLabel.C2: (("attracting", "saddle"), ("attracting", "saddle")),
    CaseLabel.D0: ((), ("saddle", "attracting")),
    CaseLabel.D2: (("saddle", "attracting"), ("saddle", "attracting")),
}


def stability_pattern(eqs: EquilibriumSet):
    """``(positive stabilities in K-order, (E1, E2) stabilities)``."""
    positive = tuple(e.stability.value for e in eqs.positive)
    semi = tuple(eqs.by_name(n).stability.value for n in ("E1", "E2"))
    return positive, semi


# -- parasite-mediated competition ----------------------------------------

class Scenario(str, enum.Enum):
    """Classical outcomes of two-species Leslie-Gower competition."""

    SPECIES1_WINS = "species 1 out-competes species 2"
    SPECIES2_WINS = "species 2 out-competes species 1"
    COEXISTENCE = "coexistence"
    BISTABLE_EXCLUSION = "exclusion depending on initial conditions"


SCENARIO_CASE = {
    Scenario.SPECIES1_WINS: CaseLabel.C0,
    Scenario.SPECIES2_WINS: CaseLabel.D0,
    Scenario.COEXISTENCE: CaseLabel.A1,
    Scenario.BISTABLE_EXCLUSION: CaseLabel.B1,
}


def lv_scenario(D1, D2):
    """Decode the Leslie-Gower outcome from the signs of ``D1`` and ``D2``;
    ``None`` when either is zero."""
    if D1 == 0 or D2 == 0:
        return None
    if D1 > 0:
        return Scenario.SPECIES1_WINS if D2 < 0 else Scenario.BISTABLE_EXCLUSION
    return Scenario.COEXISTENCE if D2 < 0 else Scenario.SPECIES2_WINS


def leslie_gower_D(b, c):
    """``(D1, D2)`` for growth rates ``b`` and a 2x2 coefficient table ``c``."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    D1 = (b[0] - 1) / c[0, 0] - (b[1] - 1) / c[1, 0]
    D2 = (b[1] - 1) / c[1, 1] - (b[0] - 1) / c[0, 1]
    return float(D1), float(D2)


@dataclass(frozen=True)
class OutcomeCoefficients:
    nu: float
    D1: float
    D2: float
    D1bar: float
    D2bar: float
    D1barI: float
    D2barI: float
    D1barS: float
    D2barS: float
    extinction_possible: tuple

    def as_dict(self):
        out = dict(self.__dict__)
        out["extinction_possible"] = list(self.extinction_possible)
        return out


def outcome_coefficients_at_nu(p: DemographyParams, nu: float) -> OutcomeCoefficients:
    """Outcome coefficients when competition does not depend on infection.

    ``D1, D2`` describe the parasite-free community (susceptible growth
    rates), ``D1bar, D2bar`` the reduced system, which splits as
    ``(1 - nu) * DbarI + nu * DbarS``.  ``extinction_possible[i]`` is true
    when ``bI_i < 1``, in which case a large enough R0 drives species ``i``
    extinct.
    """
    if not p.is_status_independent:
        raise DomainError("parasite-modified setting: D-coefficients undefined")
    nu = float(nu)
    if not 0 < nu <= 1:
        raise DomainError(f"nu must lie in (0, 1], got {nu}")
    c = p.c[:, :, 0, 0]
    D1, D2 = leslie_gower_D(p.bS, c)
    Dbar1, Dbar2 = leslie_gower_D(nu * p.bS + (1 - nu) * p.bI, c)
    DI1, DI2 = leslie_gower_D(p.bI, c)
    return OutcomeCoefficients(nu, D1, D2, Dbar1, Dbar2, DI1, DI2, D1, D2,
                               tuple(bool(b < 1) for b in p.bI))


def outcome_coefficients(p: DemographyParams, d: DiseaseParams) -> OutcomeCoefficients:
    return outcome_coefficients_at_nu(p, compute_nu(d))
