//! Experiment harness: configuration, sweep drivers and report files.
//!
//! A run takes a validated [`ExperimentConfig`], evaluates every sweep point
//! and trial in a work pool, and returns an [`ExperimentReport`] whose rows
//! follow the sweep order. Each row carries a [`Status`]; solver failures are
//! recorded, never dropped. Identical configurations produce byte-identical
//! files.

mod config;
mod experiments;
mod report;

pub use config::{
    load_config, ExperimentConfig, ExperimentKind, LayoutConfig, PatternConfig, Placement, PlanarConfig,
    ReceiverConfig, ScenarioConfig, SimulationConfig, SolverConfig, SweepAxis, SweepConfig,
};
pub use experiments::{baseline_zf_ula, BaselineMetrics};
pub use report::{fmt_num, ExperimentReport, Metadata, Metric, ReportRow, Stats, Status, Table, Unit};

use crate::geometry::NodeLayout;
use crate::Result;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let out = match cfg.kind {
        ExperimentKind::Pattern => experiments::run_pattern(cfg)?,
        ExperimentKind::PlanarPattern => experiments::run_planar(cfg)?,
        _ => experiments::run_sweep(cfg)?,
    };
    let mut warnings = out.warnings;
    let scn = cfg.scenario()?;
    let margin = scn.far_field_margin(cfg.layout.aperture_m);
    if margin < 2.0 {
        warnings.push(format!("range is only {margin:.1} times the aperture product; far-field terms are coarse"));
    }
    let metadata = Metadata {
        kind: cfg.kind.name(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        trials: cfg.trials,
        sweep_axis: cfg.axis().column(),
        rows: out.rows.len(),
        crate_version: env!("CARGO_PKG_VERSION"),
        summary: out.summary,
        warnings,
    };
    Ok(ExperimentReport { kind: cfg.kind, axis: cfg.axis(), metrics: out.metrics, rows: out.rows, plot: out.plot, metadata })
}

/// Layout the harness would deploy for `nodes` flight nodes, with no rotation offset.
pub fn deploy_layout(cfg: &ExperimentConfig, nodes: usize) -> Result<NodeLayout> {
    experiments::build_layout(cfg, &cfg.scenario()?, nodes, cfg.layout.rotation_deg.to_radians())
}
