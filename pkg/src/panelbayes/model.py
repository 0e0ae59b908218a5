"""Random-effects logistic model for panel binary data.

The observation model: individual i contributes binary responses y_ij at time
points j with covariates (x1_ij, x2_ij). Conditional on the individual effect
eps_i,

    P(y_ij = 1) = exp(mu_ij) / (1 + exp(mu_ij)),
    mu_ij = beta0 + beta1 * x1_ij + beta2 * x2_ij + eps_i,

with eps_i ~ N(0, sigma2). Everything here is a pure function of immutable
inputs: arrays are frozen at construction and safe to share across threads or
processes.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .priors import PriorSet, log_density_invgamma, log_density_normal

PANEL_CSV_HEADER = ["individual", "time", "y", "x1", "x2"]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Binary panel observations in long form.

    Rows are canonicalized to (individual, time) order at construction. Time
    indices must be strictly increasing within each individual (this also
    rules out duplicate observations). Ragged panels (unequal lengths per
    individual) are allowed.

    Attributes
    ----------
    individual : int array, original individual ids (any integers)
    time : int array, original time index j of each observation
    y : int array of 0/1 responses
    x1, x2 : float covariate arrays
    """

    individual: np.ndarray
    time: np.ndarray
    y: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    # derived, filled in __post_init__
    ids: np.ndarray = field(init=False, repr=False, compare=False)
    codes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ind = np.asarray(self.individual, dtype=np.int64)
        tim = np.asarray(self.time, dtype=np.int64)
        y_raw = np.asarray(self.y)
        x1 = np.asarray(self.x1, dtype=np.float64)
        x2 = np.asarray(self.x2, dtype=np.float64)
        n = ind.size
        if not (tim.size == y_raw.size == x1.size == x2.size == n):
            raise ValueError("panel columns must have equal length")
        if n and not ((y_raw == 0) | (y_raw == 1)).all():
            raise ValueError("responses must be exactly 0 or 1")
        y = y_raw.astype(np.int64)
        order = np.lexsort((tim, ind))
        ind, tim, y, x1, x2 = ind[order], tim[order], y[order], x1[order], x2[order]
        if not (np.isfinite(x1).all() and np.isfinite(x2).all()):
            raise ValueError("covariates must be finite")
        ids, codes = np.unique(ind, return_inverse=True)
        # strictly increasing times within an individual (catches duplicates)
        if n:
            same = codes[1:] == codes[:-1]
            if np.any(same & (np.diff(tim) <= 0)):
                raise ValueError("time indices must be strictly increasing within an individual")
        for name, arr in [("individual", ind), ("time", tim), ("y", y), ("x1", x1), ("x2", x2)]:
            object.__setattr__(self, name, _frozen(arr))
        object.__setattr__(self, "ids", _frozen(ids))
        object.__setattr__(self, "codes", _frozen(codes.astype(np.int64)))

    @property
    def n_obs(self) -> int:
        return int(self.y.size)

    @property
    def n_individuals(self) -> int:
        return int(self.ids.size)

    def counts(self) -> np.ndarray:
        """Observations per individual, in `ids` order."""
        return np.bincount(self.codes, minlength=self.n_individuals)

    def times(self) -> np.ndarray:
        """Sorted unique time indices present in the panel."""
        return np.unique(self.time)

    def is_rectangular(self) -> bool:
        """True when every individual is observed at the same time points."""
        if self.n_obs == 0:
            return True
        t = self.times()
        if self.n_obs != t.size * self.n_individuals:
            return False
        expect = np.tile(t, self.n_individuals)
        return bool(np.array_equal(self.time, expect))

    def subset(self, ids=None, times=None) -> "PanelDataset":
        """Rows restricted to the given individual ids and/or time indices."""
        mask = np.ones(self.n_obs, dtype=bool)
        if ids is not None:
            mask &= np.isin(self.individual, np.asarray(ids))
        if times is not None:
            mask &= np.isin(self.time, np.asarray(times))
        return PanelDataset(self.individual[mask], self.time[mask], self.y[mask],
                            self.x1[mask], self.x2[mask])

    def content_hash(self) -> str:
        """SHA-256 of the canonical row bytes; equal hash == equal panel."""
        h = hashlib.sha256()
        for arr in (self.individual, self.time, self.y, self.x1, self.x2):
            h.update(arr.tobytes())
        return h.hexdigest()

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PANEL_CSV_HEADER)
            for i in range(self.n_obs):
                w.writerow([int(self.individual[i]), int(self.time[i]), int(self.y[i]),
                            repr(float(self.x1[i])), repr(float(self.x2[i]))])

    @classmethod
    def from_csv(cls, path: str) -> "PanelDataset":
        ind, tim, y, x1, x2 = [], [], [], [], []
        try:
            fh = open(path, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise ConfigError(f"{path}: cannot open ({exc.strerror})") from None
        with fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != PANEL_CSV_HEADER:
                raise ConfigError(f"{path}:1: expected header {','.join(PANEL_CSV_HEADER)}")
            for rowno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 5:
                    raise ConfigError(f"{path}:{rowno}: expected 5 columns, got {len(row)}")
                try:
                    ind.append(int(row[0]))
                    tim.append(int(row[1]))
                except ValueError:
                    raise ConfigError(f"{path}:{rowno}: individual/time must be integers") from None
                if row[2] not in ("0", "1"):
                    raise ConfigError(f"{path}:{rowno}: column 'y' must be 0 or 1, got {row[2]!r}")
                y.append(int(row[2]))
                for col, name, dest in [(3, "x1", x1), (4, "x2", x2)]:
                    try:
                        dest.append(float(row[col]))
                    except ValueError:
                        raise ConfigError(f"{path}:{rowno}: column {name!r} is not a number: {row[col]!r}") from None
        try:
            return cls(np.array(ind, dtype=np.int64), np.array(tim, dtype=np.int64),
                       np.array(y, dtype=np.int64), np.array(x1), np.array(x2))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def concat_panels(*parts: PanelDataset) -> PanelDataset:
    """Row-union of panels; duplicate (individual, time) pairs are rejected."""
    if not parts:
        raise ValueError("need at least one panel")
    return PanelDataset(
        np.concatenate([p.individual for p in parts]),
        np.concatenate([p.time for p in parts]),
        np.concatenate([p.y for p in parts]),
        np.concatenate([p.x1 for p in parts]),
        np.concatenate([p.x2 for p in parts]),
    )


@dataclass(frozen=True, eq=False)
class ParameterState:
    """One point in parameter space: fixed effects, individual effects, variance."""

    beta: np.ndarray     # (beta0, beta1, beta2)
    epsilon: np.ndarray  # one entry per individual, in PanelDataset.ids order
    sigma2: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        eps = np.asarray(self.epsilon, dtype=np.float64)
        if beta.shape != (3,):
            raise ValueError("beta must have exactly 3 components")
        if float(self.sigma2) <= 0.0:
            raise ValueError("sigma2 must be positive")
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "epsilon", _frozen(eps))
        object.__setattr__(self, "sigma2", float(self.sigma2))


def linear_predictor(state: ParameterState, i: int, x1: float, x2: float) -> float:
    """mu = beta0 + beta1*x1 + beta2*x2 + eps_i for the i-th individual (1-based)."""
    if not 1 <= i <= state.epsilon.size:
        raise IndexError(f"individual index {i} out of range 1..{state.epsilon.size}")
    b = state.beta
    return float(b[0] + b[1] * x1 + b[2] * x2 + state.epsilon[i - 1])


def success_probability(mu: float) -> float:
    """Logistic map exp(mu)/(1+exp(mu)), branch-stable for large |mu|."""
    if not math.isfinite(mu):
        raise ValueError("linear predictor must be finite")
    if mu >= 0.0:
        z = math.exp(-mu)
        return 1.0 / (1.0 + z)
    z = math.exp(mu)
    return z / (1.0 + z)


def _mu_vector(data: PanelDataset, state: ParameterState) -> np.ndarray:
    b = state.beta
    mu = b[0] + b[1] * data.x1 + b[2] * data.x2
    if data.n_individuals:
        mu = mu + state.epsilon[data.codes]
    return mu


def log_likelihood(data: PanelDataset, state: ParameterState) -> float:
    """Sum over observations of y*mu - log(1 + exp(mu)).

    Uses logaddexp(0, mu) so trending covariates with large |mu| neither
    overflow nor lose the tail.
    """
    if state.epsilon.size != data.n_individuals:
        raise ValueError(
            f"epsilon has {state.epsilon.size} entries but the panel has "
            f"{data.n_individuals} individuals")
    if data.n_obs == 0:
        return 0.0
    mu = _mu_vector(data, state)
    return float(data.y @ mu - np.logaddexp(0.0, mu).sum())


def log_posterior(data: PanelDataset, state: ParameterState, priors: PriorSet) -> float:
    """Unnormalized-in-data but fully-normalized-in-parameters log density:

    log_likelihood
      + sum_k log N(beta_k | prior)
      + sum_i log N(eps_i | 0, sigma2)
      + log IG(sigma2 | shape, scale)
    """
    if state.sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    total = log_likelihood(data, state)
    for b, p in zip(state.beta, priors.beta_priors):
        total += log_density_normal(p, float(b))
    eps = state.epsilon
    if eps.size:
        total += float(-0.5 * eps.size * math.log(2.0 * math.pi * state.sigma2)
                       - (eps @ eps) / (2.0 * state.sigma2))
    total += log_density_invgamma(priors.sigma2_prior, state.sigma2)
    return float(total)
