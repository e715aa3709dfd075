"""Effective potentials, effective constants and their zero-temperature limit
for finite-range observables on subshifts of finite type."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from .effective import (
    EffectiveFamily,
    FixedPointResult,
    apply_G_plus,
    contraction_probe,
    effective_family,
    solve_fixed_point,
)
from .ergopt import (
    CostTable,
    MaxMeanCycleResult,
    SubAction,
    TransshipmentResult,
    build_cost_table,
    calibrated_subaction,
    karp_max_mean_cycle,
    pair_graph_cycle,
    subaction_family,
    transshipment_lp,
    verify_triple_equality,
)
from .potentials import (
    PairPotential,
    XPotential,
    builtin_potential,
    lip_constant,
    make_pair_potential,
    make_xpotential,
    quotient_norm,
    sup_norm,
    truncate_to_range,
)
from .sft import SubshiftSpec, block_graph, build_sft, enumerate_words, word_distance
from .transfer import equilibrium, gibbs_quotient_profile, ks_entropy, pressure
from .zerotemp import (
    SweepRow,
    ZeroTempResult,
    additive_eigen,
    beta_sweep,
    extrapolate_c,
    maxplus_G,
    zero_temperature,
)
