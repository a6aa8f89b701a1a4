"""Eratosthenes sieve as a discrete dynamic system.

Cycles of gaps between the survivors of each sieve stage, the recursion that
produces the next cycle from the current one, constellation admissibility and
driving terms, exact Markov-chain population models with their Pascal
eigenstructure, CRT construction of admissible instances in primorial
coordinates, and a segmented-sieve census of constellations among actual
primes over intervals of survival.
"""

from .constellations import (
    Constellation,
    DrivingTerm,
    PopulationCount,
    count_populations,
    driving_terms,
    is_admissible,
    is_driving_term,
    nu,
    q_of,
    upsilon,
)
from .crt_instances import (
    PrimorialCoordinates,
    enumerate_instances,
    images_under_replication,
    instance_from_residues,
    scan_instances,
    to_primorial_coordinates,
    verify_instance,
)
from .cycle_core import (
    BOOTSTRAP_PRIMES,
    DEFAULT_MEMORY_BUDGET,
    CycleReport,
    FusionEvent,
    GapCycle,
    MemoryBudgetError,
    front_generators,
    fusion_events,
    initial_cycle,
    next_cycle,
    next_prime,
    stream_gaps,
    verify_cycle,
)
from .population_model import (
    EigenSystem,
    HLWeight,
    RelativePopulation,
    TransferMatrix,
    default_bootstrap,
    eigenvalue_products,
    evolve,
    evolve_counts,
    hl_weight,
    initial_population,
    lambda_param,
    pascal_eigensystem,
    transfer_matrix,
    w_asymptotic_closed,
    w_asymptotic_spectral,
    w_curve,
)
from .prime_census import (
    BoundExceededError,
    CensusRecord,
    SieveConfig,
    SurvivalInterval,
    ap_scan,
    census,
    census_range,
    count_primes,
    cpap_divisibility_check,
    primes_array,
    repetition_w_infinity,
    segmented_sieve,
    survival_comparison,
    survival_intervals,
)

__version__ = "0.1.0"
