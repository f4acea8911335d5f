"""coldspin: low-temperature Boltzmann sampling laboratory for
classical spin Hamiltonians.

Generate diagonal spin instances, sample them with Metropolis, replica
exchange, or a counterdiabatic impulse-circuit sampler with bias-field
iteration, refine pools greedily, and score everything against exact
thermal oracles through Boltzmann reweighting.
"""

from .cd import (
    BiasField,
    CDCircuit,
    CDConfig,
    CDResult,
    Schedule,
    apply_circuit,
    apply_rotation,
    build_cd_circuit,
    build_initial_hamiltonian,
    cd_run,
    gauge_alpha1,
    get_schedule,
    initial_ground_state,
    sample_measurements,
    update_bias,
)
from .exact import (
    ExactThermal,
    enumerate_boltzmann,
    exact_mean_energy,
    transfer_matrix,
)
from .hamiltonian import (
    DiagonalHamiltonian,
    bit_to_spin,
    gen_ising_chain,
    gen_spin_glass,
    gen_three_body,
    load_instance,
    save_instance,
)
from .pauli import PauliString, PauliSum, commutator, hs_inner, multiply
from .pool import SamplePool
from .reweight import (
    FomTrace,
    ReweightedDistribution,
    TemperatureFit,
    connected_correlation,
    cumulative_fom,
    divergences,
    empirical_vs_reweighted,
    expectation,
    fit_effective_temperature,
    ln_z_tilde,
    magnetization,
    reweight,
)
from .samplers import (
    LadderAdaptationError,
    PTResult,
    ReplicaLadder,
    adapt_ladder,
    greedy_pp,
    mh_run,
    pt_run,
    throughput_benchmark,
)

__version__ = "0.1.0"
