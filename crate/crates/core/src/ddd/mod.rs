//! Dichotomous data difficulty analysis: how many models get each image right,
//! how that compares to an independent-model binomial baseline, and which
//! images are trivial, impossible or inconclusive.

mod classes;
mod dynamics;
mod histogram;
mod ordering;
mod partition;

pub use classes::{class_accuracy, ClassAccuracy, ClassStat};
pub use dynamics::{correctness_flip_rate, epoch_dynamics, label_swap_rate, EpochStep};
pub use histogram::{
    binomial_baseline, correct_count_histogram, correct_counts, histogram_csv, overlay_histogram,
    Baseline, BaselineMode, CorrectCounts, DifficultyHistogram,
};
pub use ordering::{order_images_by_mean_accuracy, OrderScope};
pub use partition::{
    classify_difficulty, restricted_kappa, subsample_export, Difficulty, DifficultyPartition, Keep,
    Subsample,
};
