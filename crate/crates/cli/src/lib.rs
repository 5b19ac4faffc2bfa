//! The `ddd` command line: batch analyses over decision cubes plus the HTTP
//! server for the forced-choice experiment.

pub mod args;
pub mod commands;
pub mod server;

pub use args::Cli;
pub use commands::{exit_code, run, UsageError};

/// Every analysis operation of `ddd-core` and the one command exposing it.
pub const OPERATIONS: &[(&str, &str)] = &[
    ("parse_records", "ingest"),
    ("assemble_cube", "ingest"),
    ("accuracy_of", "ingest"),
    ("write_cache", "ingest"),
    ("read_cache", "ingest"),
    ("error_consistency", "kappa"),
    ("restricted_kappa", "kappa"),
    ("pairwise_kappa_matrix", "matrix"),
    ("within_condition_consistency", "matrix"),
    ("render_heatmap", "matrix"),
    ("correct_count_histogram", "histogram"),
    ("binomial_baseline", "histogram"),
    ("overlay_histogram", "histogram"),
    ("classify_difficulty", "classify"),
    ("ddd_index", "classify"),
    ("build_manifest", "classify"),
    ("subsample_export", "subsample"),
    ("label_swap_rate", "epochs"),
    ("correctness_flip_rate", "epochs"),
    ("order_images_by_mean_accuracy", "epochs"),
    ("render_decision_raster", "epochs"),
    ("class_accuracy", "classes"),
    ("generate_dataset", "synth"),
    ("kl_gaussian", "synth"),
    ("oracle_classify", "synth"),
    ("evaluate_oracle", "synth"),
    ("simulate_cube", "sim"),
    ("expected_kappa", "sim"),
    ("rdm", "rsa"),
    ("rsa_correlation", "rsa"),
    ("next_trial", "serve"),
    ("record_response", "serve"),
    ("subject_statistics", "report"),
    ("inter_subject_kappa", "report"),
    ("binomial_tail_p", "report"),
];

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use clap::CommandFactory;

    use super::*;

    #[test]
    fn every_operation_maps_to_exactly_one_existing_command() {
        let commands: BTreeSet<String> =
            Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (op, cmd) in OPERATIONS {
            assert!(commands.contains(*cmd), "{op} maps to unknown command {cmd}");
            *seen.entry(op).or_default() += 1;
        }
        for (op, n) in &seen {
            assert_eq!(*n, 1, "{op} is listed {n} times");
        }
    }

    #[test]
    fn every_command_exposes_an_operation() {
        let used: BTreeSet<&str> = OPERATIONS.iter().map(|(_, c)| *c).collect();
        for c in Cli::command().get_subcommands() {
            assert!(used.contains(c.get_name()), "{} exposes nothing", c.get_name());
        }
    }

    #[test]
    fn operation_table_is_complete() {
        let expected = [
            "parse_records", "assemble_cube", "accuracy_of", "write_cache", "read_cache",
            "error_consistency", "pairwise_kappa_matrix", "within_condition_consistency", "rdm",
            "rsa_correlation", "correct_count_histogram", "binomial_baseline",
            "classify_difficulty", "ddd_index", "subsample_export", "restricted_kappa",
            "label_swap_rate", "correctness_flip_rate", "order_images_by_mean_accuracy",
            "class_accuracy", "overlay_histogram", "generate_dataset", "kl_gaussian",
            "oracle_classify", "evaluate_oracle", "simulate_cube", "expected_kappa",
            "render_decision_raster", "render_heatmap", "build_manifest", "next_trial",
            "record_response", "binomial_tail_p", "subject_statistics", "inter_subject_kappa",
        ];
        let listed: BTreeSet<&str> = OPERATIONS.iter().map(|(o, _)| *o).collect();
        assert_eq!(listed, expected.into_iter().collect());
    }

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
