"""Classical Monte Carlo samplers over diagonal spin Hamiltonians.

All chains are single-random-bit-flip Metropolis-Hastings with
acceptance min(1, exp(-beta * dE)); replica exchange adds
alternating-parity swap attempts between adjacent temperatures after
every sweep of N local updates.  Every visited (or, for the greedy
refinement, every proposed) state lands in a SamplePool, including
rejections, so pool multiplicities are the raw visit counts.

The inner loops are numba kernels operating on bit-packed states.  All
randomness is drawn up front from per-walker PCG64 streams (initial
state, then flip proposals, then acceptance uniforms, in that order),
so a run is a pure function of (instance, parameters, seed) and the jit
never touches an RNG.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .hamiltonian import DiagonalHamiltonian
from .pool import SamplePool
from .rng import seeded_rng

__all__ = [
    "ReplicaLadder",
    "PTResult",
    "LadderAdaptationError",
    "mh_run",
    "pt_run",
    "adapt_ladder",
    "greedy_pp",
    "throughput_benchmark",
]


def _term_tables(h: DiagonalHamiltonian):
    """Flatten terms into CSR arrays for the kernels.

    Returns (t_ptr, t_idx, t_coef, adj_ptr, adj_term): term t acts on
    qubits t_idx[t_ptr[t]:t_ptr[t+1]] with coefficient t_coef[t], and
    qubit q appears in terms adj_term[adj_ptr[q]:adj_ptr[q+1]].
    """
    n = h.n_qubits
    t_ptr = np.zeros(h.n_terms + 1, dtype=np.int64)
    idx: list[int] = []
    coefs = np.empty(h.n_terms, dtype=np.float64)
    adj: list[list[int]] = [[] for _ in range(n)]
    for t, (sup, coef) in enumerate(h.terms):
        idx.extend(sup)
        t_ptr[t + 1] = len(idx)
        coefs[t] = coef
        for q in sup:
            adj[q].append(t)
    adj_ptr = np.zeros(n + 1, dtype=np.int64)
    adj_flat: list[int] = []
    for q in range(n):
        adj_flat.extend(adj[q])
        adj_ptr[q + 1] = len(adj_flat)
    return (
        t_ptr,
        np.asarray(idx, dtype=np.int32),
        coefs,
        adj_ptr,
        np.asarray(adj_flat, dtype=np.int32),
    )


@njit(cache=True)
def _delta_e(state, q, t_ptr, t_idx, t_coef, adj_ptr, adj_term):
    """Energy change from flipping bit q of the packed state."""
    acc = 0.0
    for a in range(adj_ptr[q], adj_ptr[q + 1]):
        t = adj_term[a]
        prod = 1.0
        for k in range(t_ptr[t], t_ptr[t + 1]):
            i = t_idx[k]
            if (state[i >> 3] >> (i & 7)) & 1:
                prod = -prod
        acc += t_coef[t] * prod
    return -2.0 * acc


@njit(cache=True)
def _mh_kernel(state, beta, t_ptr, t_idx, t_coef, adj_ptr, adj_term, proposals, uniforms, out):
    """One walker: visit recording after each accept/reject decision."""
    record = out.shape[0] > 0
    for t in range(proposals.shape[0]):
        q = proposals[t]
        d_e = _delta_e(state, q, t_ptr, t_idx, t_coef, adj_ptr, adj_term)
        if d_e <= 0.0 or uniforms[t] < math.exp(-beta * d_e):
            state[q >> 3] ^= np.uint8(1 << (q & 7))
        if record:
            out[t, :] = state


@njit(cache=True)
def _pp_kernel(state, beta, t_ptr, t_idx, t_coef, adj_ptr, adj_term, proposals, uniforms, out):
    """Greedy-refinement walker: records every PROPOSED state, then
    moves per Metropolis at (possibly zero) temperature."""
    for t in range(proposals.shape[0]):
        q = proposals[t]
        byte = q >> 3
        mask = np.uint8(1 << (q & 7))
        state[byte] ^= mask
        out[t, :] = state
        state[byte] ^= mask
        d_e = _delta_e(state, q, t_ptr, t_idx, t_coef, adj_ptr, adj_term)
        if d_e <= 0.0 or uniforms[t] < math.exp(-beta * d_e):
            state[byte] ^= mask


@njit(cache=True)
def _pt_kernel(
    states,
    energies,
    betas,
    t_ptr,
    t_idx,
    t_coef,
    adj_ptr,
    adj_term,
    proposals,
    uniforms,
    swap_uniforms,
    out,
    swap_att,
    swap_acc,
    swap_log,
):
    """Replica-exchange sweeps.

    Per sweep: N local updates per replica (each recorded), then swap
    attempts on adjacent pairs of matching parity (even pairs on even
    sweeps).  swap_log rows are (sweep, pair, E_lo, E_hi, uniform,
    accepted) when logging is enabled by a non-empty array.
    """
    n_rep = states.shape[0]
    n_sweeps = swap_uniforms.shape[0]
    n = adj_ptr.shape[0] - 1
    record = out.shape[1] > 0
    log_rows = swap_log.shape[0]
    logged = 0
    for sweep in range(n_sweeps):
        for r in range(n_rep):
            base = sweep * n
            for u in range(n):
                q = proposals[r, base + u]
                d_e = _delta_e(states[r], q, t_ptr, t_idx, t_coef, adj_ptr, adj_term)
                if d_e <= 0.0 or uniforms[r, base + u] < math.exp(-betas[r] * d_e):
                    states[r, q >> 3] ^= np.uint8(1 << (q & 7))
                    energies[r] += d_e
                if record:
                    out[r, base + u, :] = states[r]
        for j in range(sweep % 2, n_rep - 1, 2):
            swap_att[j] += 1
            arg = (energies[j] - energies[j + 1]) * (betas[j] - betas[j + 1])
            uu = swap_uniforms[sweep, j]
            accept = arg >= 0.0 or uu < math.exp(arg)
            if logged < log_rows:
                swap_log[logged, 0] = sweep
                swap_log[logged, 1] = j
                swap_log[logged, 2] = energies[j]
                swap_log[logged, 3] = energies[j + 1]
                swap_log[logged, 4] = uu
                swap_log[logged, 5] = 1.0 if accept else 0.0
                logged += 1
            if accept:
                swap_acc[j] += 1
                for b in range(states.shape[1]):
                    tmp = states[j, b]
                    states[j, b] = states[j + 1, b]
                    states[j + 1, b] = tmp
                tmp_e = energies[j]
                energies[j] = energies[j + 1]
                energies[j + 1] = tmp_e
    return logged


def _walker_streams(seed: int, n_walkers: int, n_qubits: int, n_steps: int):
    """Initial packed states plus pre-drawn proposals and uniforms."""
    children = np.random.SeedSequence(seed).spawn(n_walkers)
    inits = np.empty((n_walkers, (n_qubits + 7) // 8), dtype=np.uint8)
    props = np.empty((n_walkers, n_steps), dtype=np.int32)
    unis = np.empty((n_walkers, n_steps), dtype=np.float64)
    for w, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        bits = rng.integers(0, 2, size=n_qubits).astype(np.uint8)
        inits[w] = np.packbits(bits, bitorder="little")
        props[w] = rng.integers(0, n_qubits, size=n_steps, dtype=np.int64).astype(np.int32)
        unis[w] = rng.random(n_steps)
    return inits, props, unis


def mh_run(
    h: DiagonalHamiltonian,
    beta: float,
    n_steps: int,
    n_walkers: int = 1,
    seed: int = 0,
) -> SamplePool:
    """Metropolis sampling; returns a pool of n_walkers * n_steps visits.

    Each walker starts from its own uniform-random bitstring and runs an
    independent chain from a stream keyed by (seed, walker).  Records
    are merged in (step, walker) order, so the pool is identical however
    the walkers are scheduled.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if n_steps < 1 or n_walkers < 1:
        raise ValueError("n_steps and n_walkers must be >= 1")
    tables = _term_tables(h)
    nb = (h.n_qubits + 7) // 8
    inits, props, unis = _walker_streams(seed, n_walkers, h.n_qubits, n_steps)
    outs = np.empty((n_walkers, n_steps, nb), dtype=np.uint8)
    for w in range(n_walkers):
        _mh_kernel(inits[w], float(beta), *tables, props[w], unis[w], outs[w])
    pool = SamplePool(h)
    pool.record_batch(outs.transpose(1, 0, 2).reshape(n_walkers * n_steps, nb))
    return pool


@dataclass
class ReplicaLadder:
    """Strictly increasing inverse temperatures with swap counters."""

    betas: np.ndarray
    swap_attempts: np.ndarray
    swap_accepts: np.ndarray

    @classmethod
    def from_betas(cls, betas) -> "ReplicaLadder":
        arr = np.asarray(betas, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("ladder needs at least two temperatures")
        if not np.all(np.diff(arr) > 0):
            raise ValueError("ladder betas must be strictly increasing")
        z = np.zeros(arr.size - 1, dtype=np.int64)
        return cls(arr, z.copy(), z.copy())

    @property
    def n_replicas(self) -> int:
        return int(self.betas.size)

    def acceptance_ratios(self) -> np.ndarray:
        att = self.swap_attempts
        with np.errstate(invalid="ignore"):
            r = np.where(att > 0, self.swap_accepts / np.maximum(att, 1), 0.0)
        return r


@dataclass
class PTResult:
    """Everything one replica-exchange run produced."""

    replica_pools: list[SamplePool]
    combined: SamplePool
    ladder: ReplicaLadder
    swap_log: dict | None = None


def pt_run(
    h: DiagonalHamiltonian,
    ladder: ReplicaLadder,
    n_sweeps: int,
    seed: int = 0,
    record: bool = True,
    log_swaps: bool = False,
) -> PTResult:
    """Replica exchange for n_sweeps sweeps.

    Each replica records N states per sweep into its own pool; the
    combined pool merges them in (sweep, replica, update) order for
    cross-temperature reweighting.  The returned ladder is a copy of
    the input with this run's swap counters added.
    """
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be >= 1")
    n = h.n_qubits
    n_rep = ladder.n_replicas
    nb = (n + 7) // 8
    tables = _term_tables(h)

    children = np.random.SeedSequence(seed).spawn(n_rep + 1)
    states = np.empty((n_rep, nb), dtype=np.uint8)
    props = np.empty((n_rep, n_sweeps * n), dtype=np.int32)
    unis = np.empty((n_rep, n_sweeps * n), dtype=np.float64)
    for r, child in enumerate(children[:n_rep]):
        rng = np.random.Generator(np.random.PCG64(child))
        bits = rng.integers(0, 2, size=n).astype(np.uint8)
        states[r] = np.packbits(bits, bitorder="little")
        props[r] = rng.integers(0, n, size=n_sweeps * n, dtype=np.int64).astype(np.int32)
        unis[r] = rng.random(n_sweeps * n)
    swap_rng = np.random.Generator(np.random.PCG64(children[n_rep]))
    swap_unis = swap_rng.random((n_sweeps, max(n_rep - 1, 1)))

    energies = h.energies_packed(states)
    out = np.empty((n_rep, n_sweeps * n if record else 0, nb), dtype=np.uint8)
    # Pair j is tried on sweeps of parity j % 2.
    n_attempts = sum(
        (n_sweeps + 1) // 2 if j % 2 == 0 else n_sweeps // 2
        for j in range(n_rep - 1)
    )
    log_arr = np.empty((n_attempts if log_swaps else 0, 6), dtype=np.float64)
    attempts = np.zeros(n_rep - 1, dtype=np.int64)
    accepts = np.zeros(n_rep - 1, dtype=np.int64)
    logged = _pt_kernel(
        states,
        energies,
        ladder.betas,
        *tables,
        props,
        unis,
        swap_unis,
        out,
        attempts,
        accepts,
        log_arr,
    )

    new_ladder = ReplicaLadder(
        ladder.betas.copy(),
        ladder.swap_attempts + attempts,
        ladder.swap_accepts + accepts,
    )
    replica_pools: list[SamplePool] = []
    combined = SamplePool(h)
    if record:
        for r in range(n_rep):
            p = SamplePool(h)
            p.record_batch(out[r])
            replica_pools.append(p)
        interleaved = (
            out.reshape(n_rep, n_sweeps, n, nb)
            .transpose(1, 0, 2, 3)
            .reshape(n_rep * n_sweeps * n, nb)
        )
        combined.record_batch(interleaved)

    swap_log = None
    if log_swaps:
        la = log_arr[:logged]
        swap_log = {
            "sweep": la[:, 0].astype(np.int64),
            "pair": la[:, 1].astype(np.int64),
            "e_low": la[:, 2].copy(),
            "e_high": la[:, 3].copy(),
            "uniform": la[:, 4].copy(),
            "accepted": la[:, 5] > 0.5,
        }
    return PTResult(replica_pools, combined, new_ladder, swap_log)


class LadderAdaptationError(RuntimeError):
    """Raised when ladder refinement hits its iteration cap.

    Carries the best ladder reached so far as ``.ladder``.
    """

    def __init__(self, message: str, ladder: ReplicaLadder):
        super().__init__(message)
        self.ladder = ladder


def adapt_ladder(
    h: DiagonalHamiltonian,
    beta_min: float,
    beta_max: float,
    target_ratio: float,
    n_pt_steps: int,
    seed: int = 0,
    max_iters: int = 30,
    steps_unit: str = "updates",
) -> ReplicaLadder:
    """Grow a temperature ladder until every adjacent swap ratio is
    at least target_ratio.

    Starts from {beta_min, beta_max}; each round measures acceptance
    with a fresh short replica-exchange run, then inserts the midpoint
    (beta_j + beta_{j+1}) / 2 into every pair still below target.
    ``n_pt_steps`` counts single-bit update attempts per replica by
    default ("updates"); pass steps_unit="sweeps" to count sweeps.
    Raises LadderAdaptationError carrying the partial ladder if
    max_iters rounds do not converge.
    """
    if not 0 < beta_min < beta_max:
        raise ValueError("need 0 < beta_min < beta_max")
    if not 0 < target_ratio < 1:
        raise ValueError("target_ratio must lie in (0, 1)")
    if steps_unit == "updates":
        n_sweeps = max(1, -(-int(n_pt_steps) // h.n_qubits))
    elif steps_unit == "sweeps":
        n_sweeps = int(n_pt_steps)
    else:
        raise ValueError(f"unknown steps_unit {steps_unit!r}")

    iter_seeds = np.random.SeedSequence(seed).generate_state(max_iters, dtype=np.uint64)
    betas = np.array([beta_min, beta_max], dtype=np.float64)
    ladder = ReplicaLadder.from_betas(betas)
    for it in range(max_iters):
        ladder = ReplicaLadder.from_betas(betas)
        result = pt_run(h, ladder, n_sweeps, seed=int(iter_seeds[it]), record=False)
        ladder = result.ladder
        ratios = ladder.acceptance_ratios()
        if np.all(ratios >= target_ratio):
            return ladder
        new_betas = [betas[0]]
        for j in range(betas.size - 1):
            if ratios[j] < target_ratio:
                new_betas.append(0.5 * (betas[j] + betas[j + 1]))
            new_betas.append(betas[j + 1])
        betas = np.asarray(new_betas)
    raise LadderAdaptationError(
        f"ladder did not reach swap ratio {target_ratio} within {max_iters} rounds "
        f"({ladder.n_replicas} replicas so far)",
        ladder,
    )


def greedy_pp(
    h: DiagonalHamiltonian,
    pool: SamplePool,
    n_pp: int,
    n_sweeps: int,
    t_pp: float = 0.02,
    seed: int = 0,
) -> SamplePool:
    """Greedy low-temperature refinement of a pool's best states.

    Takes the n_pp lowest-energy distinct states already in the pool
    (ties by arrival) as walker starts.  Each walker performs
    n_sweeps * N single-bit proposals; EVERY proposed bitstring is
    recorded, and the walker moves per Metropolis at temperature t_pp
    (t_pp = 0 accepts only non-increasing energies).  Exactly
    n_pp * n_sweeps * N records are added.  The pool is grown in place
    and returned.
    """
    if n_pp < 1 or n_sweeps < 1:
        raise ValueError("n_pp and n_sweeps must be >= 1")
    if t_pp < 0:
        raise ValueError("t_pp must be non-negative")
    if n_pp > pool.distinct_count:
        raise ValueError(
            f"n_pp={n_pp} exceeds the pool's {pool.distinct_count} distinct states"
        )
    beta = math.inf if t_pp == 0 else 1.0 / t_pp
    targets = pool.lowest(n_pp)
    starts = pool.rows[targets].copy()
    tables = _term_tables(h)
    n = h.n_qubits
    nb = (n + 7) // 8
    n_steps = n_sweeps * n
    children = np.random.SeedSequence(seed).spawn(n_pp)
    out = np.empty((n_steps, nb), dtype=np.uint8)
    for w in range(n_pp):
        rng = np.random.Generator(np.random.PCG64(children[w]))
        props = rng.integers(0, n, size=n_steps, dtype=np.int64).astype(np.int32)
        unis = rng.random(n_steps)
        state = starts[w].copy()
        _pp_kernel(state, beta, *tables, props, unis, out)
        pool.record_batch(out)
    return pool


def throughput_benchmark(
    h: DiagonalHamiltonian,
    duration_seconds: float = 2.0,
    beta: float = 1.0,
    seed: int = 0,
    chunk_steps: int = 1 << 20,
) -> dict:
    """Measured single-walker update rate on this instance.

    Runs the production Metropolis kernel (recording included) in
    chunks until the time budget is spent; only kernel time is counted,
    not jit compilation, which is triggered by a tiny warmup call.
    """
    if duration_seconds <= 0:
        raise ValueError("duration_seconds must be positive")
    tables = _term_tables(h)
    n = h.n_qubits
    nb = (n + 7) // 8
    rng = seeded_rng(seed)
    state = np.packbits(rng.integers(0, 2, size=n).astype(np.uint8), bitorder="little")
    warm = np.empty((16, nb), dtype=np.uint8)
    _mh_kernel(
        state.copy(),
        float(beta),
        *tables,
        rng.integers(0, n, size=16, dtype=np.int64).astype(np.int32),
        rng.random(16),
        warm,
    )
    out = np.empty((chunk_steps, nb), dtype=np.uint8)
    total = 0
    elapsed = 0.0
    while elapsed < duration_seconds:
        props = rng.integers(0, n, size=chunk_steps, dtype=np.int64).astype(np.int32)
        unis = rng.random(chunk_steps)
        t0 = time.perf_counter()
        _mh_kernel(state, float(beta), *tables, props, unis, out)
        elapsed += time.perf_counter() - t0
        total += chunk_steps
    return {
        "n_qubits": n,
        "updates": total,
        "seconds": elapsed,
        "updates_per_second": total / elapsed,
    }
