"""Exact desk-scale computation and verification of the conditional
structure of lattice random fields: finite-conditional distributions,
transition energies, Hamiltonians, specifications, and convergence
diagnostics, with full reproductions of two worked examples."""

from .lattice import (
    Alphabet,
    CapacityError,
    Configuration,
    DomainError,
    EMPTY_CONFIGURATION,
    Filtration,
    GeometryError,
    NeighborhoodSystem,
    Volume,
    binary_alphabet,
    box_filtration,
    box_volume,
    concat,
    configuration,
    enumerate_configurations,
    enumeration_cap,
    format_configuration,
    grid_window,
    interval_filtration,
    line_window,
    nearest_neighbor_system,
    parse_configuration,
    restrict,
    spin_alphabet,
    volume,
)
from .fields import (
    FLOAT,
    FiniteDistribution,
    ProductField,
    RATIONAL,
    RandomFieldModel,
    TableField,
    ValidationError,
    check_marginal_consistency,
    close,
    is_positive,
    marginalize,
    read_distribution_file,
    seeded_positive_table,
    table_field,
    write_distribution_file,
)
from .conditionals import (
    ConditionalKernel,
    KernelCache,
    LimitEstimate,
    NullConditionError,
    PositivityError,
    check_one_point_consistency,
    check_pair_consistency,
    finite_conditional,
    limit_along_filtration,
    limit_estimate_csv,
    markov_radius,
    one_point_from_model,
    reconstruct_from_one_point,
)
from .energy import (
    HamiltonianTable,
    InconsistentEnergyError,
    TransitionEnergy,
    check_antisymmetry,
    check_cocycle,
    check_decomposition,
    check_hamiltonian_consistency,
    check_one_point_exchange,
    energy_quasilocality_modulus,
    gibbs_form_from_energy,
    hamiltonian_from_energy,
    transition_energy,
)
from .specifications import (
    GibbsVolumeField,
    MeasureSystem,
    OnePointSpec,
    OnePointTEF,
    Potential,
    Specification,
    finite_volume_gibbs,
    hamiltonian_from_potential,
    ising_potential,
    measure_system_from_model,
    measure_system_from_potential,
    onepoint_spec_from_model,
    onepoint_spec_from_tef,
    pair_site_fixtures,
    parse_potential,
    spec_from_model,
    spec_from_onepoint,
    tef_from_1spec,
    tef_from_measure_system,
    tef_from_potential,
    validate_1spec,
    validate_spec,
    validate_tef,
    volume_split_fixtures,
    zero_potential,
)
from .models import (
    BernoulliMixtureModel,
    IsingDemoModel,
    MarkovChainPairModel,
    bernoulli_product,
    example1_pair,
    example2_limiting_hamiltonian,
    example2_model,
    ising_demo,
)
from .diagnostics import (
    BoundaryFamily,
    ConvergenceReport,
    constant_boundary,
    constant_density_boundary,
    density_switch_boundary,
    energy_criterion_report,
    filtration_independence_check,
    locality_probe_family,
    mixed_family,
    non_gibbs_witness,
    oscillating_density_boundary,
    positive_half_boundary,
    quasilocality_report,
    seeded_random_boundary,
    uniform_convergence_report,
)

__version__ = "0.1.0"
