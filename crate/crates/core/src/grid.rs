//! Wealth and guarantee discretizations and the surfaces defined on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GmwbError, Result};
use crate::model::{ContractSpec, MarketParams};

/// Discretization settings shared by the PDE and the event step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Number of wealth nodes including `W = 0`.
    pub num_wealth_nodes: usize,
    /// Guarantee levels per contractual amount `G`.
    pub nodes_per_contract_amount: usize,
    /// Time steps per year between event dates.
    pub steps_per_year: usize,
    /// Upper cap on the wealth domain as a multiple of `W0`.
    pub wealth_cap_multiple: f64,
    /// Fixed upper end of the wealth domain; overrides the heuristic.
    pub wealth_max: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridPreset::Paper.config()
    }
}

/// Named resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPreset {
    Fast,
    Paper,
    Fine,
}

pub const DEFAULT_WEALTH_CAP_MULTIPLE: f64 = 8.0;

impl GridPreset {
    pub fn config(self) -> GridConfig {
        let (num_wealth_nodes, nodes_per_contract_amount, steps_per_year) = match self {
            GridPreset::Fast => (161, 5, 40),
            GridPreset::Paper => (401, 10, 100),
            GridPreset::Fine => (801, 20, 200),
        };
        GridConfig {
            num_wealth_nodes,
            nodes_per_contract_amount,
            steps_per_year,
            wealth_cap_multiple: DEFAULT_WEALTH_CAP_MULTIPLE,
            wealth_max: None,
        }
    }
}

impl std::str::FromStr for GridPreset {
    type Err = GmwbError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(GridPreset::Fast),
            "paper" => Ok(GridPreset::Paper),
            "fine" => Ok(GridPreset::Fine),
            other => Err(GmwbError::Config(format!("unknown grid preset `{other}`"))),
        }
    }
}

impl GridConfig {
    /// Resolution of `preset` with this config's domain settings.
    pub fn with_preset(self, preset: GridPreset) -> Self {
        GridConfig {
            wealth_cap_multiple: self.wealth_cap_multiple,
            wealth_max: self.wealth_max,
            ..preset.config()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_wealth_nodes < 51 {
            return invalid("num_wealth_nodes", "at least 51 nodes (50 intervals) are required");
        }
        if self.nodes_per_contract_amount < 1 {
            return invalid("nodes_per_contract_amount", "must be at least 1");
        }
        if self.steps_per_year < 1 {
            return invalid("steps_per_year", "must be at least 1");
        }
        if !(self.wealth_cap_multiple.is_finite() && self.wealth_cap_multiple > 1.0) {
            return invalid("wealth_cap_multiple", "must exceed 1");
        }
        if let Some(w) = self.wealth_max {
            if !(w.is_finite() && w > 0.0) {
                return invalid("wealth_max", "must be positive");
            }
        }
        Ok(())
    }
}

/// Uniform wealth nodes `w_i = i h`, `i = 0..=I`.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthGrid {
    nodes: Vec<f64>,
    spacing: f64,
}

impl WealthGrid {
    /// Uniform grid on `[0, wealth_max]` with `intervals` cells.
    pub fn uniform(wealth_max: f64, intervals: usize) -> Result<Self> {
        if intervals < 50 {
            return invalid("num_wealth_nodes", "at least 50 intervals are required");
        }
        if !(wealth_max.is_finite() && wealth_max > 0.0) {
            return invalid("wealth_max", "must be positive");
        }
        let spacing = wealth_max / intervals as f64;
        let nodes = (0..=intervals).map(|i| i as f64 * spacing).collect();
        Ok(Self { nodes, spacing })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index of the node equal to `w`, if any (within 1e-9 of a spacing).
    pub fn node_index(&self, w: f64) -> Option<usize> {
        let pos = w / self.spacing;
        let i = pos.round();
        ((pos - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.nodes.len()).then_some(i as usize)
    }
}

/// Guarantee levels `a_j = j * da`, `j = 0..=J`, with `a_J = A0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeGrid {
    levels: Vec<f64>,
    spacing: f64,
    /// Contractual amounts expressed in guarantee-grid units.
    contract_units: Vec<usize>,
}

impl GuaranteeGrid {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `G_n` in grid units for the 1-based event index `n`.
    pub fn contract_units(&self, n: usize) -> usize {
        self.contract_units[n - 1]
    }

    /// Amount corresponding to `units` grid steps.
    pub fn amount(&self, units: usize) -> f64 {
        units as f64 * self.spacing
    }

    /// Index of the level equal to `a`, if any.
    pub fn level_index(&self, a: f64) -> Option<usize> {
        let pos = a / self.spacing;
        let j = pos.round();
        ((pos - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.levels.len()).then_some(j as usize)
    }
}

/// Values on the (guarantee, wealth) grid, one row per guarantee level.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ValueSurface {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(
        guarantee: &GuaranteeGrid,
        wealth: &WealthGrid,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        let mut s = Self::zeros(guarantee.len(), wealth.len());
        for (j, &a) in guarantee.levels().iter().enumerate() {
            for (v, &w) in s.row_mut(j).iter_mut().zip(wealth.nodes()) {
                *v = f(a, w);
            }
        }
        s
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.values.chunks_exact_mut(self.cols)
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.cols + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First non-finite entry as `(row, col)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k / self.cols, k % self.cols))
    }
}

/// Heuristic upper end of the wealth domain before snapping `W0` to a node.
pub fn wealth_domain_target(spec: &ContractSpec, market: &MarketParams, config: &GridConfig) -> f64 {
    let w0 = spec.initial_wealth;
    let growth = 5.0 * w0 * ((market.r + 2.0 * market.sigma) * spec.maturity).exp();
    growth.max(10.0 * w0).min(config.wealth_cap_multiple * w0.max(spec.initial_guarantee))
}

/// Uniform wealth grid whose spacing divides `W0`, so `W0` is a node.
pub fn build_wealth_grid(
    spec: &ContractSpec,
    market: &MarketParams,
    config: &GridConfig,
) -> Result<WealthGrid> {
    config.validate()?;
    let intervals = config.num_wealth_nodes - 1;
    let w0 = spec.initial_wealth;
    let target = config
        .wealth_max
        .unwrap_or_else(|| wealth_domain_target(spec, market, config));
    if target <= w0 {
        return invalid("wealth_max", "wealth domain must extend beyond W0");
    }
    // Snap so that W0 = m * h for an integer m.
    let m = ((w0 * intervals as f64 / target).round() as usize).clamp(1, intervals - 1);
    WealthGrid::uniform(w0 / m as f64 * intervals as f64, intervals)
}

/// Uniform guarantee grid with spacing `G / K`.
pub fn build_guarantee_grid(spec: &ContractSpec, config: &GridConfig) -> Result<GuaranteeGrid> {
    config.validate()?;
    spec.validate()?;
    let k = config.nodes_per_contract_amount;
    let n = spec.num_events();
    let base = spec.initial_guarantee / n as f64;
    let spacing = base / k as f64;
    let total_units = n * k;
    let mut levels: Vec<f64> = (0..=total_units).map(|j| j as f64 * spacing).collect();
    levels[total_units] = spec.initial_guarantee;
    let mut contract_units = Vec::with_capacity(n);
    for &g in &spec.contractual_amounts {
        let units = g / spacing;
        let rounded = units.round();
        if (units - rounded).abs() > 1e-8 {
            return invalid(
                "contractual_amounts",
                format!("amount {g} is not a multiple of the guarantee spacing {spacing}"),
            );
        }
        contract_units.push(rounded as usize);
    }
    Ok(GuaranteeGrid {
        levels,
        spacing,
        contract_units,
    })
}

/// Piecewise-linear interpolation of a row at wealth `w`; clamps beyond `W_max`.
pub fn interpolate_w(row: &[f64], grid: &WealthGrid, w: f64) -> Result<f64> {
    if w.is_nan() {
        return Err(GmwbError::NanInput);
    }
    if w < 0.0 {
        return invalid("w", "wealth must be nonnegative");
    }
    Ok(lerp_uniform(row, grid.spacing(), w))
}

#[inline]
pub(crate) fn lerp_uniform(row: &[f64], spacing: f64, w: f64) -> f64 {
    let last = row.len() - 1;
    let pos = w / spacing;
    if pos >= last as f64 {
        return row[last];
    }
    let nearest = pos.round();
    if (pos - nearest).abs() <= 1e-10 * nearest.max(1.0) {
        return row[nearest as usize];
    }
    let i = pos as usize;
    let frac = pos - i as f64;
    row[i] + frac * (row[i + 1] - row[i])
}
