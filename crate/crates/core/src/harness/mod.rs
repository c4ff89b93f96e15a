//! Batch front end: experiment configs, table and figure sweeps, and the
//! validation suite.

mod config;
mod sweep;
mod validate;

pub use config::{default_alpha_m, default_scenarios, ExperimentConfig, MCValidation, Scenario};
pub use sweep::{
    emit_figure_data, figure_scenarios, run_cell, run_sweep, run_tables, write_figure_series,
    write_tables, CellResult, DominanceViolation, FigureData, Sweep,
};
pub use validate::{
    black_scholes_call, call_domain, call_errors, mc_cases, mc_comparison, validate, CallErrors,
    CheckResult, McComparison, ValidationReport, CALL_CASE,
};
