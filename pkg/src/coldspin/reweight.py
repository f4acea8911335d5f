"""Boltzmann reweighting of sample pools and figures of merit.

A pool's distinct support S defines a restricted thermal distribution
mu_tilde(s) = exp(-beta E_s) / Z_tilde, Z_tilde = sum_S exp(-beta E_s),
regardless of how often each state was visited.  Against the exact
distribution this gives closed-form divergences,

    KL(mu_tilde || mu) = ln Z - ln Z_tilde
    TVD(mu_tilde, mu)  = 1 - exp(-KL),

both zero exactly when the support carries all the thermal weight.  The
raw empirical histogram is scored too, via
D(mu_bar || mu) = ln Z + beta <E>_mu_bar - S(mu_bar); the reweighted
figures can never exceed the empirical ones.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .exact import ExactThermal
from .hamiltonian import packed_to_indices, spins_from_bits, unpack_rows
from .pool import SamplePool

__all__ = [
    "ReweightedDistribution",
    "FomTrace",
    "TemperatureFit",
    "DivergenceReport",
    "reweight",
    "ln_z_tilde",
    "expectation",
    "magnetization",
    "connected_correlation",
    "mean_energy",
    "divergences",
    "cumulative_fom",
    "fit_effective_temperature",
    "empirical_vs_reweighted",
]


@dataclass(frozen=True)
class ReweightedDistribution:
    """mu_tilde over a pool's distinct states, arrival-ordered."""

    pool: SamplePool
    beta: float
    ln_z_tilde: float
    weights: np.ndarray

    def spins(self) -> np.ndarray:
        """(distinct, N) matrix of +-1 spins for observable evaluation."""
        return spins_from_bits(
            unpack_rows(self.pool.rows, self.pool.h.n_qubits)
        ).astype(np.float64)


def ln_z_tilde(pool: SamplePool, beta: float) -> float:
    """Restricted log partition function over the pool's support."""
    if pool.distinct_count == 0:
        raise ValueError("pool is empty")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return float(logsumexp(-beta * pool.energies))


def reweight(pool: SamplePool, beta: float) -> ReweightedDistribution:
    lz = ln_z_tilde(pool, beta)
    w = np.exp(-beta * pool.energies - lz)
    return ReweightedDistribution(pool, float(beta), lz, w)


def expectation(rw: ReweightedDistribution, observable: Callable[[np.ndarray], np.ndarray]) -> float:
    """<O> under mu_tilde for an observable of the spin configuration.

    ``observable`` receives the (distinct, N) spin matrix and returns a
    value per state.
    """
    values = np.asarray(observable(rw.spins()), dtype=np.float64)
    if values.shape != rw.weights.shape:
        raise ValueError("observable must return one value per distinct state")
    return float(np.dot(rw.weights, values))


def magnetization(rw: ReweightedDistribution) -> float:
    """Site-averaged <Z_i> under mu_tilde."""
    return expectation(rw, lambda s: s.mean(axis=1))


def mean_energy(rw: ReweightedDistribution) -> float:
    return float(np.dot(rw.weights, rw.pool.energies))


def connected_correlation(rw: ReweightedDistribution) -> float:
    """Ring-bond average of <Z_i Z_{i+1}> - <Z_i> <Z_{i+1}>."""
    s = rw.spins()
    n = s.shape[1]
    site = rw.weights @ s
    total = 0.0
    for i in range(n):
        j = (i + 1) % n
        total += float(rw.weights @ (s[:, i] * s[:, j])) - site[i] * site[j]
    return total / n


def divergences(pool: SamplePool, beta: float, exact: ExactThermal) -> tuple[float, float]:
    """(KL, TVD) of the reweighted pool against the exact state.

    Raises if ln Z_tilde exceeds the oracle's ln Z beyond 1e-9, which
    can only mean the oracle belongs to a different instance or beta.
    """
    if abs(beta - exact.beta) > 1e-12:
        raise ValueError("oracle was computed at a different beta")
    lz = ln_z_tilde(pool, beta)
    kl = exact.ln_z - lz
    if kl < -1e-9:
        raise ValueError(
            f"pool ln Z_tilde {lz} exceeds exact ln Z {exact.ln_z}; oracle mismatch"
        )
    kl = max(kl, 0.0)
    tvd = -np.expm1(-kl)
    return float(kl), float(tvd)


@dataclass(frozen=True)
class FomTrace:
    """ln Z_tilde as a function of samples collected, per beta.

    ``samples[i]`` is the running sample count at which the i-th
    distinct state arrived (duplicates advance the count but add no
    point); ``values[b, i]`` is ln Z_tilde over the first i+1 states at
    ``betas[b]``.  A closing point at the pool's final sample count
    repeats the last value so the trace spans the whole run.
    """

    samples: np.ndarray
    betas: np.ndarray
    values: np.ndarray

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["samples", "ln_z_tilde", "beta"])
            for b, beta in enumerate(self.betas):
                for i in range(self.samples.size):
                    w.writerow(
                        [int(self.samples[i]), repr(float(self.values[b, i])), repr(float(beta))]
                    )


def cumulative_fom(pool: SamplePool, betas) -> FomTrace:
    """Prefix ln Z_tilde in arrival order at each requested beta."""
    if pool.distinct_count == 0:
        raise ValueError("pool is empty")
    beta_arr = np.asarray(betas, dtype=np.float64)
    if beta_arr.ndim != 1 or beta_arr.size == 0:
        raise ValueError("betas must be a non-empty 1d sequence")
    counts = pool.first_seen + 1
    close = pool.total_samples > counts[-1]
    size = counts.size + (1 if close else 0)
    samples = np.empty(size, dtype=np.int64)
    samples[: counts.size] = counts
    values = np.empty((beta_arr.size, size), dtype=np.float64)
    for b, beta in enumerate(beta_arr):
        prefix = np.logaddexp.accumulate(-beta * pool.energies)
        values[b, : counts.size] = prefix
        if close:
            values[b, -1] = prefix[-1]
    if close:
        samples[-1] = pool.total_samples
    return FomTrace(samples, beta_arr, values)


@dataclass(frozen=True)
class TemperatureFit:
    """Inverse-temperature fit of an empirical mean energy."""

    beta_eff: float
    t_eff: float
    residual: float
    bracket: tuple[float, float]
    saturated: bool


def fit_effective_temperature(
    empirical_energy: float,
    mean_energy_fn: Callable[[float], float],
    bracket: tuple[float, float],
) -> TemperatureFit:
    """Invert the monotone beta -> <E>(beta) map by bisection.

    Stops when the bracket shrinks below 1e-8 or the energy residual
    falls below 1e-9.  An empirical energy at or below what the bracket
    ceiling can express returns the ceiling flagged as saturated (the
    pool looks colder than the scan allows, e.g. pure ground-state
    shots); one above the floor's mean energy raises.
    """
    beta_lo, beta_hi = float(bracket[0]), float(bracket[1])
    if not 0 < beta_lo < beta_hi:
        raise ValueError("need 0 < bracket floor < bracket ceiling")
    e_hot = mean_energy_fn(beta_lo)
    e_cold = mean_energy_fn(beta_hi)
    if empirical_energy > e_hot:
        raise ValueError(
            f"empirical energy {empirical_energy} is hotter than the bracket floor "
            f"beta={beta_lo} can express (<E>={e_hot})"
        )
    if empirical_energy <= e_cold:
        return TemperatureFit(
            beta_eff=beta_hi,
            t_eff=1.0 / beta_hi,
            residual=float(empirical_energy - e_cold),
            bracket=(beta_lo, beta_hi),
            saturated=True,
        )
    lo, hi = beta_lo, beta_hi
    mid = 0.5 * (lo + hi)
    resid = np.inf
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        e_mid = mean_energy_fn(mid)
        resid = e_mid - empirical_energy
        if abs(resid) < 1e-9:
            break
        if e_mid > empirical_energy:
            lo = mid
        else:
            hi = mid
    return TemperatureFit(
        beta_eff=float(mid),
        t_eff=float(1.0 / mid),
        residual=float(resid),
        bracket=(beta_lo, beta_hi),
        saturated=False,
    )


@dataclass(frozen=True)
class DivergenceReport:
    kl_empirical: float
    tvd_empirical: float
    kl_reweighted: float
    tvd_reweighted: float


def empirical_vs_reweighted(
    pool: SamplePool, beta: float, exact: ExactThermal
) -> DivergenceReport:
    """Score the raw visit histogram and the reweighted support side by
    side against the exact distribution.

    The empirical KL uses D(mu_bar || mu) = ln Z + beta <E> - S(mu_bar),
    which needs no per-state exact probabilities and stays finite at any
    beta; the TVD sums the probability table, so the oracle must come
    from enumeration.
    """
    if exact.probabilities is None:
        raise ValueError("empirical TVD needs an enumeration oracle with probabilities")
    if abs(beta - exact.beta) > 1e-12:
        raise ValueError("oracle was computed at a different beta")
    mu_bar = pool.multiplicities / pool.total_samples
    entropy = float(-np.sum(mu_bar * np.log(mu_bar)))
    e_bar = float(np.dot(mu_bar, pool.energies))
    kl_emp = exact.ln_z + beta * e_bar - entropy

    idx = packed_to_indices(pool.rows, pool.h.n_qubits)
    mu_support = exact.probabilities[idx]
    tvd_emp = 0.5 * (
        float(np.abs(mu_bar - mu_support).sum()) + float(1.0 - mu_support.sum())
    )

    kl_rw, tvd_rw = divergences(pool, beta, exact)
    return DivergenceReport(
        kl_empirical=float(kl_emp),
        tvd_empirical=float(tvd_emp),
        kl_reweighted=kl_rw,
        tvd_reweighted=tvd_rw,
    )
