"""Aggregation of the fast disease dynamics into a planar map.

With equal transmission ``beta`` and recovery ``gamma`` in both species the
disease map conserves species totals and drives every state with infected
individuals to the endemic split ``(nu N, (1 - nu) N)`` per species, where
``nu = gamma / beta = 1 / R0``.  Freezing that split and applying one
demographic step gives the reduced parameters below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, HypothesisError
from .model import DemographyParams, DiseaseParams, FullState, disease_map


def compute_nu(d: DiseaseParams) -> float:
    """Susceptible fraction at the endemic equilibrium, ``gamma / beta``."""
    if not d.is_homogeneous:
        raise HypothesisError("reduction requires homogeneous disease")
    beta, gamma = float(d.beta[0, 0]), float(d.gamma[0])
    if not 0 < gamma < beta <= 1:
        raise HypothesisError(
            f"Hypothesis 1 violated: need 0 < gamma < beta <= 1, "
            f"got beta={beta}, gamma={gamma}")
    return gamma / beta


@dataclass(frozen=True, eq=False)
class ReducedParams:
    """Coefficients of the reduced two-species map.

    ``cS[i, j]`` and ``cI[i, j]`` are the aggregated effects of species
    ``j`` on the susceptible and infected fractions of species ``i``.
    ``nu = 1`` is accepted for synthetic Leslie-Gower baselines even though
    no admissible disease produces it.
    """

    nu: float
    rS: np.ndarray
    rI: np.ndarray
    cS: np.ndarray
    cI: np.ndarray
    synthetic: bool = field(default=False)

    def __post_init__(self):
        for name, shape in (("rS", (2,)), ("rI", (2,)), ("cS", (2, 2)), ("cI", (2, 2))):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DomainError(f"{name} must have shape {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "nu", float(self.nu))
        if not 0 < self.nu <= 1:
            raise DomainError(f"nu must lie in (0, 1], got {self.nu}")
        if np.any(self.rS <= 0) or np.any(self.rI < 0):
            raise DomainError("need rS > 0 and rI >= 0")
        if np.any(self.cS <= 0) or np.any(self.cI <= 0):
            raise DomainError("aggregated competition coefficients must be positive")

    def __eq__(self, other):
        if not isinstance(other, ReducedParams):
            return NotImplemented
        return (self.nu == other.nu
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ("rS", "rI", "cS", "cI")))

    __hash__ = None

    @classmethod
    def from_leslie_gower(cls, b, c):
        """Synthetic ``nu = 1`` parameters reproducing the Leslie-Gower map
        ``N_i' = b_i N_i / (1 + c_i1 N_1 + c_i2 N_2)``."""
        c = np.asarray(c, dtype=float)
        return cls(1.0, b, np.zeros(2), c, c, synthetic=True)

    @property
    def growth_at_origin(self):
        """``phi_i(0, 0) = rS_i + rI_i`` for both species."""
        return self.rS + self.rI

    def trapping_box(self):
        """Upper corner of the half-open box that contains ``H(R_+^2)``."""
        diag = np.arange(2)
        return self.rS / self.cS[diag, diag] + self.rI / self.cI[diag, diag]

    def as_dict(self):
        return {
            "nu": self.nu,
            "rS": self.rS.tolist(),
            "rI": self.rI.tolist(),
            "cS": self.cS.tolist(),
            "cI": self.cI.tolist(),
        }


def reduce_params_at_nu(p: DemographyParams, nu: float) -> ReducedParams:
    """Reduced parameters for a given susceptible fraction ``nu``.

    Used directly by parameter sweeps, which treat ``nu`` as a coordinate.
    """
    nu = float(nu)
    if not 0 < nu <= 1:
        raise DomainError(f"nu must lie in (0, 1], got {nu}")
    c = p.c
    cS = nu * c[:, :, 0, 0] + (1 - nu) * c[:, :, 0, 1]
    cI = nu * c[:, :, 1, 0] + (1 - nu) * c[:, :, 1, 1]
    return ReducedParams(nu, p.bS * nu, p.bI * (1 - nu), cS, cI,
                         synthetic=nu == 1)


def reduce_params(p: DemographyParams, d: DiseaseParams) -> ReducedParams:
    return reduce_params_at_nu(p, compute_nu(d))


def endemic_equilibrium(d: DiseaseParams, totals) -> FullState:
    """Fixed point of the disease map with the given species totals."""
    nu = compute_nu(d)
    n1, n2 = (float(t) for t in totals)
    if n1 < 0 or n2 < 0 or n1 + n2 <= 0:
        raise DomainError("totals must be non-negative with a positive sum")
    return FullState(nu * n1, (1 - nu) * n1, nu * n2, (1 - nu) * n2)


def fast_limit_array(nu, X):
    X = np.asarray(X, dtype=float)
    n = X[..., 0::2] + X[..., 1::2]
    out = np.empty_like(X)
    out[..., 0::2] = nu * n
    out[..., 1::2] = (1 - nu) * n
    return out


def fast_limit_map(d: DiseaseParams, x) -> FullState:
    """Limit of ``F^k`` as ``k -> inf``: each species split at its endemic ratio."""
    return FullState(*fast_limit_array(compute_nu(d), x).tolist())


def contraction_bound(d: DiseaseParams) -> float:
    """``max(1 - gamma, |1 - gamma - beta|)``, below 1 whenever ``0 < gamma < beta <= 1``.

    This bounds the per-episode factor of the infected product coordinate.
    The infected fraction itself settles at rate :func:`linear_rate`, which
    exceeds this bound when ``nu > 1/2``.
    """
    compute_nu(d)
    beta, gamma = float(d.beta[0, 0]), float(d.gamma[0])
    return max(1 - gamma, abs(1 - gamma - beta))


def linear_rate(d: DiseaseParams) -> float:
    """``1 - beta + gamma``, the slope of the infected-fraction map
    ``x -> (1 + beta - gamma - beta x) x`` at its fixed point ``1 - nu``."""
    compute_nu(d)
    return 1 - float(d.beta[0, 0]) + float(d.gamma[0])


@dataclass(frozen=True)
class ConvergenceReport:
    k_values: tuple
    sup_errors: tuple
    fitted_ratio: float
    bound_c: float
    conservation_error: float
    linear_rate: float

    def as_dict(self):
        return {
            "k_values": list(self.k_values),
            "sup_errors": list(self.sup_errors),
            "fitted_ratio": self.fitted_ratio,
            "bound_c": self.bound_c,
            "conservation_error": self.conservation_error,
            "linear_rate": self.linear_rate,
        }


def certify_convergence(d: DiseaseParams, grid, k_max: int) -> ConvergenceReport:
    """Measure how fast ``F^k`` approaches its limit over a set of states.

    For ``k = 1..k_max`` records the largest max-norm gap between ``F^k(x)``
    and the fast limit over ``grid``.  The decay ratio is a least-squares fit
    of ``log(error)`` against ``k`` over the second half of the range,
    skipping errors at round-off level.  ``conservation_error`` is the
    largest relative drift of a species total seen during the iteration.
    """
    nu = compute_nu(d)
    X = np.array(grid, dtype=float)
    if X.size == 0:
        raise DomainError("empty grid")
    X = X.reshape(-1, 4)
    if np.any(X < 0) or np.any(X[:, 1] + X[:, 3] <= 0):
        raise DomainError("grid states must lie in Omega")
    totals0 = X[:, 0::2] + X[:, 1::2]
    if np.any(totals0 <= 0):
        raise DomainError("grid states need both species present")
    target = fast_limit_array(nu, X)
    scale = np.abs(target).max()

    errors, drift = [], 0.0
    for _ in range(k_max):
        X = disease_map(d, X)
        errors.append(float(np.abs(X - target).max()))
        totals = X[:, 0::2] + X[:, 1::2]
        drift = max(drift, float((np.abs(totals - totals0) / totals0).max()))
    k_values = tuple(range(1, k_max + 1))

    errs = np.array(errors)
    tail = slice(k_max // 2, None)
    ks, es = np.array(k_values)[tail], errs[tail]
    usable = es > 1e3 * np.finfo(float).eps * scale
    if usable.sum() >= 2:
        slope = np.polyfit(ks[usable], np.log(es[usable]), 1)[0]
        ratio = float(np.exp(slope))
    else:
        ratio = 0.0
    return ConvergenceReport(k_values, tuple(errors), ratio,
                             contraction_bound(d), drift, linear_rate(d))
