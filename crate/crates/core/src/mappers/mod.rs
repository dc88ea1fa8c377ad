//! Noise-to-target mapping networks trained with exact transport maps:
//! OTtrans (one fixed map, then regression) and OTgen (a fresh map from the
//! current predictions at every step).

mod diversity;
mod prior;
mod train;

pub use diversity::{
    diversity_penalty, diversity_penalty_with, mean_pair_distance, PairSet, ALL_PAIRS_LIMIT,
};
pub use prior::{sample_prior, PriorKind, PriorSampler, PriorSpec};
pub use train::{
    frozen_objective, frozen_objective_gradient, generate, map_points, train_otgen, train_ottrans,
    write_loss_csv, FeedbackTrace, LossRecord, PoolSampler, TargetSampler, TrainConfig,
    TrainOutcome, TransportPlan,
};
