"""Markovian matrix product density operators.

Certification of approximate Markovianity from local data, efficient
global-entropy evaluation with rigorous error bounds, certified variational
upper bounds on free energy, and NP-style witness construction and
verification for the 1D free-energy problem.
"""

from .channels import (
    QuantumChannel,
    apply,
    channel_distance_bound,
    channel_from_choi,
    compose_then_trace,
    identity_channel,
    jamiolkowski_state,
    replacement_channel,
    round_channel,
    round_density_matrix,
)
from .certify import (
    Verdict,
    WitnessDocument,
    parse_instance,
    parse_witness,
    round_witness,
    serialize_instance,
    serialize_witness,
    verify,
)
from .errors import (
    FormatError,
    InvalidChannelError,
    MarkovMpdoError,
    NumericError,
    PrecisionTooLowError,
    ResourceLimitError,
    UsageError,
    ValidationError,
)
from .mpdo import (
    MarkovianMpdo,
    MarkovReport,
    contract,
    energy,
    entropy_estimate,
    free_energy_upper_bound,
    markov_epsilons,
    pair_marginals,
    single_site_marginals,
    window_marginal,
)
from .spectra import (
    DensityMatrix,
    binary_entropy,
    cmi,
    entropy_continuity_bound,
    operator_norm,
    partial_trace,
    schatten_norms,
    trace_norm,
    von_neumann_entropy,
)
from .spinchain import (
    BlockingPlan,
    DecayScan,
    FreeEnergyInstance,
    LocalHamiltonian,
    build_witness,
    block_hamiltonian,
    cmi_decay_scan,
    free_energy,
    gibbs_state,
    lemma2_check,
    petz_recovery,
    recovery_diagnostic,
    transverse_field_ising,
)

__version__ = "0.1.0"
