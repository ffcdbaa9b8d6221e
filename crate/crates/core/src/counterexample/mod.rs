//! Explicit parabolic operators with a Log-Lipschitz, non-Lipschitz
//! coefficient `l(t)` and exact solutions whose norms rule out Hölder
//! continuous dependence for the backward problem.

mod family;
mod indices;
mod sequences;

pub use family::{
    check_growth_conditions, ln_unit_norm, parabolicity_ratio, relative_residual,
    CounterexampleFamily, DecayCheck, Fields, GrowthReport, LowerOrder, ScaledValue, SliceState,
    Transitions, Trig, ENVELOPE_EXPONENTS, ILL_CONDITIONED,
};
pub use indices::{
    divergence_ratio, increment_lower_bound, index_arguments, index_pairs, indices, norm_datum,
    reversed_family, Anchor, IndexPair, NormDatum, RatioValue, ReversedMember, SumMode,
};
pub use sequences::{
    build_sequences, direct_sums, extend_q, p_of, r_of, tail_a, z_of, Bounded, QValue,
    SequenceRow, SequenceTable, DIRECT_LIMIT, HEAD_INDEX,
};
