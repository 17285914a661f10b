pub mod reconstruct;
pub mod report;
pub mod stress;
pub mod synthesize;

/// Label-derived stage seeds, so one `--seed` drives every stage.
pub const RECONSTRUCT_LABEL: &str = "reconstruct";
pub const SCENARIO_LABEL: &str = "scenario";
