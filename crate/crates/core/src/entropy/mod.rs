//! Computational information theory on finite weighted sample spaces and
//! finite-alphabet shift systems, plus exact sigma-field identity checks.

pub mod exchange;
pub mod measures;
pub mod space;
pub mod symbolic;

pub use exchange::{
    exchange_identity_check, independent_exchange_check, monotone_limit_check,
    simplify_by_c_check, ExchangeReport, IndependentExchangeReport, MonotoneLimitReport,
    SimplifyReport, WitnessAtoms,
};
pub use measures::{
    block_continuity_bound, conditional_entropy, entropy, partition_distance,
    partition_distance_join_form, phi,
};
pub use space::{FinitePartition, FiniteSpace, EXACT_TOL, NULL_ATOM_EPS, WEIGHT_SUM_TOL};
pub use symbolic::{
    entropy_rate_sequence, pinsker_residuals, word_entropy, MeasureSpec, SymbolicSystem,
    CYLINDER_STATE_CAP,
};
