"""Four-variable competition model with a shared SIS parasite.

State vectors are ordered ``(N_S^1, N_I^1, N_S^2, N_I^2)``.  Competition
coefficients live in a ``(2, 2, 2, 2)`` array indexed ``c[i, j, A, B]``:
focal species ``i``, competitor species ``j``, focal status ``A`` and
competitor status ``B`` (status 0 is susceptible, 1 is infected).  In
config files the same entry is spelled ``c_AB_ij``, so ``c_SI_12`` is
``c[0, 1, 0, 1]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PositivityWarning

STATUSES = ("S", "I")


def coefficient_key(i, j, a, b):
    """Config key for ``c[i, j, a, b]`` (zero-based indices)."""
    return f"c_{STATUSES[a]}{STATUSES[b]}_{i + 1}{j + 1}"


def parse_coefficient_key(key):
    """Inverse of :func:`coefficient_key`; returns zero-based ``(i, j, a, b)``."""
    try:
        prefix, status, species = key.split("_")
    except ValueError:
        raise KeyError(key) from None
    if (prefix != "c" or len(status) != 2 or len(species) != 2
            or any(s not in STATUSES for s in status)
            or any(s not in "12" for s in species)):
        raise KeyError(key)
    return (int(species[0]) - 1, int(species[1]) - 1,
            STATUSES.index(status[0]), STATUSES.index(status[1]))


COEFFICIENT_KEYS = tuple(
    coefficient_key(i, j, a, b)
    for i in range(2) for j in range(2) for a in range(2) for b in range(2)
)


def _frozen(values, shape):
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DemographyParams:
    """Growth rates and status-dependent competition coefficients."""

    bS: np.ndarray
    bI: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bS", _frozen(self.bS, (2,)))
        object.__setattr__(self, "bI", _frozen(self.bI, (2,)))
        object.__setattr__(self, "c", _frozen(self.c, (2, 2, 2, 2)))
        if not np.all(np.isfinite(self.bS)) or np.any(self.bS <= 0):
            raise DomainError(f"bS must be positive, got {self.bS.tolist()}")
        if not np.all(np.isfinite(self.bI)) or np.any(self.bI < 0):
            raise DomainError(f"bI must be non-negative, got {self.bI.tolist()}")
        if not np.all(np.isfinite(self.c)) or np.any(self.c <= 0):
            raise DomainError("competition coefficients must be positive")

    def __eq__(self, other):
        if not isinstance(other, DemographyParams):
            return NotImplemented
        return (np.array_equal(self.bS, other.bS)
                and np.array_equal(self.bI, other.bI)
                and np.array_equal(self.c, other.c))

    __hash__ = None

    @classmethod
    def from_mapping(cls, bS, bI, coefficients):
        """Build from a ``{"c_AB_ij": value}`` mapping holding all 16 keys."""
        missing = set(COEFFICIENT_KEYS) - set(coefficients)
        if missing:
            raise DomainError(f"missing coefficients: {sorted(missing)}")
        c = np.empty((2, 2, 2, 2))
        for key, value in coefficients.items():
            try:
                c[parse_coefficient_key(key)] = value
            except KeyError:
                raise DomainError(f"unknown coefficient {key!r}") from None
        return cls(bS, bI, c)

    @classmethod
    def status_independent(cls, bS, bI, c):
        """Coefficients depending only on the species pair: ``c[i][j]``."""
        c = np.asarray(c, dtype=float)
        if c.shape != (2, 2):
            raise DomainError("status-independent coefficients need a 2x2 table")
        return cls(bS, bI, np.broadcast_to(c[:, :, None, None], (2, 2, 2, 2)))

    def coefficient_mapping(self):
        return {
            coefficient_key(i, j, a, b): float(self.c[i, j, a, b])
            for i in range(2) for j in range(2) for a in range(2) for b in range(2)
        }

    @property
    def is_status_independent(self):
        return bool(np.all(self.c == self.c[:, :, :1, :1]))

    def replace(self, name, value):
        """Copy with one scalar parameter changed.

        ``name`` is ``bS1``, ``bS2``, ``bI1``, ``bI2`` or a coefficient key.
        """
        bS, bI, c = self.bS.copy(), self.bI.copy(), self.c.copy()
        if len(name) == 3 and name[:2] in ("bS", "bI") and name[2] in "12":
            target = bS if name[:2] == "bS" else bI
            target[int(name[2]) - 1] = value
        else:
            try:
                c[parse_coefficient_key(name)] = value
            except KeyError:
                raise DomainError(f"unknown demographic parameter {name!r}") from None
        return DemographyParams(bS, bI, c)


@dataclass(frozen=True, eq=False)
class DiseaseParams:
    """Transmission matrix ``beta[i, j]`` and recovery rates ``gamma[i]``."""

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim == 0:
            beta = np.full((2, 2), float(beta))
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim == 0:
            gamma = np.full(2, float(gamma))
        object.__setattr__(self, "beta", _frozen(beta, (2, 2)))
        object.__setattr__(self, "gamma", _frozen(gamma, (2,)))
        if np.any(self.beta <= 0) or np.any(self.gamma <= 0):
            raise DomainError("transmission and recovery rates must be positive")

    def __eq__(self, other):
        if not isinstance(other, DiseaseParams):
            return NotImplemented
        return (np.array_equal(self.beta, other.beta)
                and np.array_equal(self.gamma, other.gamma))

    __hash__ = None

    @classmethod
    def homogeneous(cls, beta, gamma):
        return cls(np.full((2, 2), float(beta)), np.full(2, float(gamma)))

    @property
    def admissible(self):
        """All rates in (0, 1], which keeps the disease map positive."""
        return bool(np.all(self.beta <= 1) and np.all(self.gamma <= 1))

    @property
    def is_homogeneous(self):
        return bool(np.all(self.beta == self.beta[0, 0])
                    and self.gamma[0] == self.gamma[1])

    @property
    def satisfies_hypothesis(self):
        """Homogeneous with ``0 < gamma < beta <= 1``."""
        return (self.is_homogeneous
                and 0 < self.gamma[0] < self.beta[0, 0] <= 1)


class FullState(NamedTuple):
    nS1: float
    nI1: float
    nS2: float
    nI2: float

    @property
    def totals(self):
        return (self.nS1 + self.nI1, self.nS2 + self.nI2)

    @property
    def in_omega(self):
        """Non-negative with at least one infected individual."""
        return min(self) >= 0 and self.nI1 + self.nI2 > 0


def demography_map(p, X):
    """Vectorised demographic map on an array whose last axis has length 4."""
    X = np.asarray(X, dtype=float)
    n = X.reshape(X.shape[:-1] + (2, 2))
    den = 1.0 + np.einsum("ijab,...jb->...ia", p.c, n)
    b = np.stack([p.bS, p.bI], axis=-1)
    return (b * n / den).reshape(X.shape)


def disease_map(d, X):
    """Vectorised disease map; no domain checks."""
    X = np.asarray(X, dtype=float)
    nS = X[..., 0::2]
    nI = X[..., 1::2]
    total = X.sum(axis=-1, keepdims=True)
    infections = nS * (nI @ d.beta.T) / total
    recoveries = d.gamma * nI
    out = np.empty_like(X)
    out[..., 0::2] = nS - infections + recoveries
    out[..., 1::2] = nI + infections - recoveries
    return out


def demographic_step(p: DemographyParams, x) -> FullState:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("state must be componentwise non-negative")
    return FullState(*demography_map(p, x).tolist())


def disease_step(d: DiseaseParams, x) -> FullState:
    """One infection-recovery episode.

    Species totals are conserved.  Raises :class:`DomainError` for a state
    with zero total population; emits :class:`PositivityWarning` when the
    rates fall outside (0, 1].
    """
    x = np.asarray(x, dtype=float)
    if x.sum() <= 0:
        raise DomainError("disease map undefined at zero total population")
    if not d.admissible:
        warnings.warn("rates outside (0, 1]; positivity not guaranteed",
                      PositivityWarning, stacklevel=2)
    return FullState(*disease_map(d, x).tolist())


def disease_iterate(d, X, k):
    """``k`` applications of the disease map to an array of states."""
    X = np.asarray(X, dtype=float)
    for _ in range(k):
        X = disease_map(d, X)
    return X


def full_step(p: DemographyParams, d: DiseaseParams, k: int, x) -> FullState:
    """``S(F^k(x))``: ``k`` disease episodes followed by one demographic step."""
    if k < 0:
        raise DomainError("k must be non-negative")
    x = np.asarray(x, dtype=float)
    if k > 0:
        if x.sum() <= 0:
            raise DomainError("disease map undefined at zero total population")
        if not d.admissible:
            warnings.warn("rates outside (0, 1]; positivity not guaranteed",
                          PositivityWarning, stacklevel=2)
        x = disease_iterate(d, x, k)
    elif np.any(x < 0):
        raise DomainError("state must be componentwise non-negative")
    return FullState(*demography_map(p, x).tolist())
