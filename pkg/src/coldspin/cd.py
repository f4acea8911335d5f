"""Counterdiabatic impulse-circuit sampler with bias-field iteration.

One sampling round interpolates H(lam) = (1 - lam) H_i + lam H_f from a
transverse-field start (optionally tilted by a per-qubit bias) to the
diagonal target, keeps only the first-order counterdiabatic drive, and
Trotterizes it on a dimensionless grid:

    A1(lam)   = i alpha_1(lam) [H(lam), H_f - H_i]
    alpha_1   = -Tr[O1^dag O1] / Tr[O2^dag O2],  O2 = [H(lam), O1]
    U approx  prod_{k=1..n_trot} prod_j exp(-i theta_{jk} W_jk)

with theta_{jk} = (dlam/ds)(s_k) / n_trot times the Pauli coefficient
of alpha_1 * i O1 at lam(s_k), s_k = k / n_trot.  The physical anneal
time cancels out of every angle, so no duration parameter exists
anywhere in the API.  The adiabatic part of the evolution is dropped
entirely (impulse regime); circuits contain only the drive rotations.

Measured shots feed a bias field for the next round: the n_cvar
lowest-energy shots vote on a mean spin per qubit, which tilts the next
initial Hamiltonian toward (sign "aligned") the low-energy region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hamiltonian import (
    DiagonalHamiltonian,
    indices_to_packed,
    spins_from_bits,
    unpack_rows,
)
from .pauli import PauliString, PauliSum, commutator, hs_inner
from .pool import SamplePool
from .samplers import greedy_pp

__all__ = [
    "Schedule",
    "get_schedule",
    "BiasField",
    "CDConfig",
    "CDCircuit",
    "CDResult",
    "IterationStats",
    "build_initial_hamiltonian",
    "initial_ground_state",
    "gauge_alpha1",
    "build_cd_circuit",
    "pauli_apply",
    "apply_rotation",
    "apply_circuit",
    "sample_measurements",
    "update_bias",
    "cd_run",
    "SIMULATION_CAP",
]

SIMULATION_CAP = 24


@dataclass(frozen=True)
class Schedule:
    """Annealing profile lam(s) on the dimensionless clock s in [0, 1]."""

    name: str
    lam: Callable[[float], float]
    dlam: Callable[[float], float]


def _sinpi(s: float) -> float:
    """sin(pi * s), exactly zero at integer s (math.sin(math.pi) is not)."""
    if s == math.floor(s):
        return 0.0
    return math.sin(math.pi * s)


_SCHEDULES = {
    "sin2": Schedule(
        "sin2",
        lambda s: math.sin(0.5 * math.pi * s) ** 2,
        lambda s: 0.5 * math.pi * _sinpi(s),
    ),
    "linear": Schedule("linear", lambda s: float(s), lambda s: 1.0),
}


def get_schedule(name: str) -> Schedule:
    try:
        return _SCHEDULES[name]
    except KeyError:
        raise ValueError(
            f"unknown schedule {name!r}, have {sorted(_SCHEDULES)}"
        ) from None


@dataclass(frozen=True)
class BiasField:
    """Per-qubit bias b_i with the global steering weight w."""

    values: np.ndarray
    w: float

    @classmethod
    def zero(cls, n_qubits: int, w: float) -> "BiasField":
        return cls(np.zeros(n_qubits), float(w))


@dataclass(frozen=True)
class CDConfig:
    """Knobs of the full iterated sampler."""

    n_iter: int = 5
    n_shots: int = 1000
    w: float = 0.5
    n_cvar: int = 20
    n_trot: int = 2
    schedule: str = "sin2"
    bias_sign: str = "aligned"
    pp_refined_bias: bool = False
    pp_bias_states: int = 2000
    pp_bias_sweeps: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.n_shots < 1:
            raise ValueError("n_shots must be >= 1")
        if not 1 <= self.n_cvar <= self.n_shots:
            raise ValueError("need 1 <= n_cvar <= n_shots")
        if self.n_trot < 1:
            raise ValueError("n_trot must be >= 1")
        if self.w < 0:
            raise ValueError("w must be non-negative")
        if self.bias_sign not in ("aligned", "inverted"):
            raise ValueError("bias_sign must be 'aligned' or 'inverted'")
        if self.pp_bias_states < 1 or self.pp_bias_sweeps < 1:
            raise ValueError("pp bias refinement sizes must be >= 1")
        get_schedule(self.schedule)


class CDCircuit:
    """Trotter steps of (Pauli word, rotation angle) pairs.

    Gates within a step are sorted by mask pair, so a circuit is a
    deterministic function of its inputs.  Steps whose schedule
    derivative vanishes are present but empty.
    """

    def __init__(self, n_qubits: int, steps: list[list[tuple[PauliString, float]]]):
        self.n_qubits = n_qubits
        self.steps = steps

    @property
    def n_gates(self) -> int:
        return sum(len(s) for s in self.steps)

    def describe(self) -> str:
        """Debug dump, one line per gate: 'step k: <word> <angle>'."""
        lines = []
        for k, step in enumerate(self.steps, start=1):
            for word, theta in step:
                lines.append(f"step {k}: {word.label()} {theta:.12g}")
        return "\n".join(lines)


def build_initial_hamiltonian(n_qubits: int, bias: BiasField) -> PauliSum:
    """H_i = -sum_i (X_i + w b_i Z_i)."""
    if bias.values.shape != (n_qubits,):
        raise ValueError("bias length does not match the register")
    out = PauliSum(n_qubits)
    for q in range(n_qubits):
        out.add_string(PauliString(n_qubits, 1 << q, 0, -1.0))
        wb = bias.w * float(bias.values[q])
        if wb != 0.0:
            out.add_string(PauliString(n_qubits, 0, 1 << q, -wb))
    return out


def initial_ground_state(n_qubits: int, bias: BiasField) -> np.ndarray:
    """Product ground state of the biased transverse-field start.

    Qubit i carries the ground state of -(X + w b_i Z), i.e. amplitudes
    (cos(t/2), sin(t/2)) with t = atan2(1, w b_i); zero bias gives |+>
    and the sign of <Z> follows the sign of b_i.
    """
    if n_qubits > SIMULATION_CAP:
        raise ValueError(
            f"state-vector register of {n_qubits} exceeds the {SIMULATION_CAP}-qubit cap"
        )
    psi = np.ones(1, dtype=np.complex128)
    for q in range(n_qubits):
        a = bias.w * float(bias.values[q])
        t = math.atan2(1.0, a)
        amps = np.array([math.cos(0.5 * t), math.sin(0.5 * t)], dtype=np.complex128)
        psi = np.kron(amps, psi)
    return psi


def gauge_alpha1(h_i: PauliSum, h_f: PauliSum, lam: float) -> tuple[float, PauliSum]:
    """First-order variational gauge coefficient at interpolation lam.

    Returns (alpha_1, O1) where O1 = [H(lam), H_f - H_i] and
    alpha_1 = -||O1||^2 / ||O2||^2 in the Hilbert-Schmidt norm with
    O2 = [H(lam), O1].  Raises if the drive degenerates (commuting
    endpoint Hamiltonians).
    """
    h_ad = (1.0 - lam) * h_i + lam * h_f
    o0 = h_f - h_i
    o1 = commutator(h_ad, o0)
    o2 = commutator(h_ad, o1)
    n1 = hs_inner(o1, o1).real
    n2 = hs_inner(o2, o2).real
    if n2 == 0.0:
        raise ValueError(
            "first-order drive is degenerate at this point "
            "(initial and final Hamiltonians commute)"
        )
    return -n1 / n2, o1


def build_cd_circuit(
    h_i: PauliSum, h_f: PauliSum, schedule: Schedule, n_trot: int
) -> CDCircuit:
    """Trotterized impulse circuit on the right-endpoint grid s_k = k / n_trot.

    Step k rotates by theta_j = (dlam(s_k) / n_trot) * c_j where c_j are
    the Pauli coefficients of alpha_1(lam_k) * i O1(lam_k).  Every angle
    is dimensionless by construction.  A step with dlam(s_k) = 0
    contributes no gates.
    """
    if n_trot < 1:
        raise ValueError("n_trot must be >= 1")
    n = h_i.n_qubits
    steps: list[list[tuple[PauliString, float]]] = []
    for k in range(1, n_trot + 1):
        s_k = k / n_trot
        rate = schedule.dlam(s_k)
        if rate == 0.0:
            steps.append([])
            continue
        lam = schedule.lam(s_k)
        alpha1, o1 = gauge_alpha1(h_i, h_f, lam)
        prefactor = 1j * alpha1 * rate / n_trot
        gates: list[tuple[PauliString, float]] = []
        for (x_mask, z_mask), coef in sorted(o1.items()):
            word = PauliString(n, x_mask, z_mask, 1j ** ((x_mask & z_mask).bit_count()))
            angle = (prefactor * coef) * (-1j) ** word.n_y
            if abs(angle.imag) > 1e-10 * max(1.0, abs(angle)):
                raise ValueError("drive term is not Hermitian; bad generator")
            gates.append((word, float(angle.real)))
        steps.append(gates)
    return CDCircuit(n, steps)


def pauli_apply(psi: np.ndarray, p: PauliString) -> np.ndarray:
    """P |psi> by index permutation and phase, no matrices built."""
    size = psi.shape[0]
    if size != 1 << p.n_qubits:
        raise ValueError("state size does not match the word's register")
    idx = np.arange(size, dtype=np.int64)
    parity = np.zeros(size, dtype=np.int64)
    z = p.z_mask
    while z:
        q = (z & -z).bit_length() - 1
        parity ^= (idx >> q) & 1
        z &= z - 1
    amp = (1.0 - 2.0 * parity) * psi
    out = np.empty_like(psi)
    out[idx ^ p.x_mask] = amp
    if p.coef != 1.0:
        out *= p.coef
    return out


def apply_rotation(psi: np.ndarray, p: PauliString, theta: float) -> np.ndarray:
    """exp(-i theta P) |psi> = cos(theta) |psi> - i sin(theta) P |psi>.

    Requires P Hermitian and involutory, i.e. a Pauli word whose letter
    coefficient is +1 or -1.
    """
    lc = p.letter_coef
    if abs(lc.imag) > 1e-12 or abs(abs(lc.real) - 1.0) > 1e-12:
        raise ValueError("rotation words must have letter coefficient +1 or -1")
    return math.cos(theta) * psi - 1j * math.sin(theta) * pauli_apply(psi, p)


def apply_circuit(circuit: CDCircuit, psi: np.ndarray) -> np.ndarray:
    """Run all steps in order; checks norm conservation at the end."""
    for step in circuit.steps:
        for word, theta in step:
            psi = apply_rotation(psi, word, theta)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-10:
        raise RuntimeError(f"state norm drifted to {norm!r} during the circuit")
    return psi


def sample_measurements(
    psi: np.ndarray, n_shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Born-rule computational-basis samples as integer indices."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    p = np.abs(psi) ** 2
    p /= p.sum()
    cdf = np.cumsum(p)
    draws = np.searchsorted(cdf, rng.random(n_shots), side="right")
    return np.minimum(draws, p.size - 1).astype(np.int64)


def update_bias(
    shots: SamplePool, n_cvar: int, w: float, bias_sign: str = "aligned"
) -> BiasField:
    """Bias from the n_cvar lowest-energy shots of one iteration.

    Shots are ranked by energy with ties broken by arrival; the boundary
    state contributes only as many copies as fit.  m_i is the mean spin
    of qubit i over those shots; "aligned" sets b_i = +m_i so the next
    start tilts toward the observed low-energy spins, "inverted" applies
    the opposite sign.
    """
    if bias_sign not in ("aligned", "inverted"):
        raise ValueError("bias_sign must be 'aligned' or 'inverted'")
    if n_cvar < 1 or n_cvar > shots.total_samples:
        raise ValueError("need 1 <= n_cvar <= total shots in the pool")
    n = shots.h.n_qubits
    m = np.zeros(n)
    remaining = n_cvar
    for rank in shots.lowest(shots.distinct_count):
        take = min(int(shots.multiplicities[rank]), remaining)
        spins = spins_from_bits(
            unpack_rows(shots.rows[rank : rank + 1], n)[0]
        ).astype(np.float64)
        m += take * spins
        remaining -= take
        if remaining == 0:
            break
    m /= n_cvar
    return BiasField(m if bias_sign == "aligned" else -m, float(w))


@dataclass(frozen=True)
class IterationStats:
    """Per-round shot statistics of the iterated sampler."""

    iteration: int
    mean_energy: float
    min_energy: float
    n_gates: int
    bias_max_abs: float


@dataclass
class CDResult:
    pool: SamplePool
    iteration_pools: list[SamplePool]
    stats: list[IterationStats]
    final_bias: BiasField


def cd_run(h_f: DiagonalHamiltonian, config: CDConfig) -> CDResult:
    """Full iterated sampler: n_iter rounds of circuit, shots, bias.

    Round k >= 2 builds its circuit and initial state from the bias
    voted by round k-1's shots alone (or, with pp_refined_bias, by the
    single best state a scratch refinement of the cumulative pool
    found; refinement states never enter the returned pool).
    """
    n = h_f.n_qubits
    if n > SIMULATION_CAP:
        raise ValueError(
            f"instance of {n} qubits exceeds the {SIMULATION_CAP}-qubit simulator cap"
        )
    schedule = get_schedule(config.schedule)
    h_f_pauli = h_f.to_pauli_sum()
    children = np.random.SeedSequence(config.seed).spawn(2 * config.n_iter)
    bias = BiasField.zero(n, config.w)
    merged = SamplePool(h_f)
    iteration_pools: list[SamplePool] = []
    stats: list[IterationStats] = []
    for k in range(1, config.n_iter + 1):
        h_i = build_initial_hamiltonian(n, bias)
        circuit = build_cd_circuit(h_i, h_f_pauli, schedule, config.n_trot)
        psi = initial_ground_state(n, bias)
        psi = apply_circuit(circuit, psi)
        shot_rng = np.random.Generator(np.random.PCG64(children[2 * (k - 1)]))
        idx = sample_measurements(psi, config.n_shots, shot_rng)
        ipool = SamplePool(h_f)
        ipool.record_batch(indices_to_packed(idx, n))
        merged.merge_from(ipool)
        iteration_pools.append(ipool)
        mean_e = float(
            np.dot(ipool.energies, ipool.multiplicities) / ipool.total_samples
        )
        stats.append(
            IterationStats(
                iteration=k,
                mean_energy=mean_e,
                min_energy=ipool.min_energy(),
                n_gates=circuit.n_gates,
                bias_max_abs=float(np.abs(bias.values).max()),
            )
        )
        if k == config.n_iter:
            break
        if config.pp_refined_bias:
            scratch = merged.copy()
            pp_seed = int(children[2 * k - 1].generate_state(1, dtype=np.uint64)[0])
            greedy_pp(
                h_f,
                scratch,
                min(config.pp_bias_states, scratch.distinct_count),
                config.pp_bias_sweeps,
                t_pp=0.02,
                seed=pp_seed,
            )
            best = scratch.lowest(1)[0]
            spins = spins_from_bits(
                unpack_rows(scratch.rows[best : best + 1], n)[0]
            ).astype(np.float64)
            vals = spins if config.bias_sign == "aligned" else -spins
            bias = BiasField(vals, config.w)
        else:
            bias = update_bias(ipool, config.n_cvar, config.w, config.bias_sign)
    return CDResult(merged, iteration_pools, stats, bias)
