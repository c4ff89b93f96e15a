//! Backward time stepping of the value and liability PDEs on the wealth axis.
//!
//! Each guarantee level is an independent one-dimensional problem between
//! event dates. With `mu = r - alpha_tot` the operator is
//!
//! ```text
//! Op V = 1/2 sigma^2 w^2 V_ww + mu w V_w - r V
//! ```
//!
//! and a backward step of the theta scheme solves
//! `(I - theta dt Op) V^n = (I + (1 - theta) dt Op) V^{n+1} + dt s`, where `s`
//! is a source proportional to `w` (`-alpha_ins w` for the liability).
//!
//! The reaction rate is replaced by the fitted rate `r_eff` for which the
//! scheme discounts W-independent data by exactly `exp(-r dt)`; the drift
//! uses `r_eff - alpha_tot` so that `Op w = -alpha_tot w` holds exactly on
//! the grid. The latter keeps `L + W - V` equal, node by node, to the
//! discrete management-fee surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GmwbError, Result};
use crate::grid::{GridConfig, ValueSurface, WealthGrid};
use crate::model::{FeeSchedule, MarketParams};

/// Time-stepping scheme for one sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    CrankNicolson,
    Implicit,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::CrankNicolson => 0.5,
            Scheme::Implicit => 1.0,
        }
    }

    /// Reaction rate that makes one step discount constants by `exp(-r dt)`.
    pub fn fitted_rate(self, r: f64, dt: f64) -> f64 {
        match self {
            Scheme::CrankNicolson => 2.0 / dt * (0.5 * r * dt).tanh(),
            Scheme::Implicit => (r * dt).exp_m1() / dt,
        }
    }
}

/// Implicit sub-steps taken right after each event date.
pub const RANNACHER_STEPS: usize = 2;

/// A tridiagonal linear system `lower[i] x[i-1] + diagonal[i] x[i] + upper[i] x[i+1] = rhs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diagonal: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn is_diagonally_dominant(&self) -> bool {
        self.rows_dominant(0..self.diagonal.len())
    }

    /// Diagonal dominance restricted to `rows`.
    pub fn rows_dominant(&self, rows: std::ops::Range<usize>) -> bool {
        let n = self.diagonal.len();
        rows.into_iter().all(|i| {
            let off = if i > 0 { self.lower[i].abs() } else { 0.0 }
                + if i + 1 < n { self.upper[i].abs() } else { 0.0 };
            self.diagonal[i].abs() >= off
        })
    }

    /// Thomas algorithm.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let factor = ThomasFactor::new(&self.lower, &self.diagonal, &self.upper)?;
        let mut x = self.rhs.clone();
        let mut scratch = vec![0.0; x.len()];
        factor.solve_in_place(&mut x, &mut scratch);
        Ok(x)
    }
}

/// LU factors of a tridiagonal matrix, reused across right-hand sides.
#[derive(Debug, Clone)]
struct ThomasFactor {
    lower: Vec<f64>,
    c_star: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl ThomasFactor {
    fn new(lower: &[f64], diagonal: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diagonal.len();
        let mut c_star = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        for i in 0..n {
            let denom = if i == 0 {
                diagonal[0]
            } else {
                diagonal[i] - lower[i] * c_star[i - 1]
            };
            let inv = 1.0 / denom;
            if !inv.is_finite() {
                return Err(GmwbError::NumericalInstability {
                    a_index: 0,
                    w_index: i,
                });
            }
            inv_denom[i] = inv;
            c_star[i] = if i + 1 < n { upper[i] * inv } else { 0.0 };
        }
        Ok(Self {
            lower: lower.to_vec(),
            c_star,
            inv_denom,
        })
    }

    /// Overwrites `x` (holding the right-hand side) with the solution.
    fn solve_in_place(&self, x: &mut [f64], d_star: &mut [f64]) {
        let n = self.inv_denom.len();
        d_star[0] = x[0] * self.inv_denom[0];
        for i in 1..n {
            d_star[i] = (x[i] - self.lower[i] * d_star[i - 1]) * self.inv_denom[i];
        }
        x[n - 1] = d_star[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_star[i] - self.c_star[i] * x[i + 1];
        }
    }
}

/// One backward sub-step of a given length and scheme, factorized once and
/// applied to any number of rows.
#[derive(Debug, Clone)]
pub struct StepOperator {
    dt: f64,
    theta: f64,
    /// Coefficients of `Op` on interior nodes and node 0.
    op_lower: Vec<f64>,
    op_diag: Vec<f64>,
    op_upper: Vec<f64>,
    wealth: Vec<f64>,
    factor: ThomasFactor,
}

impl StepOperator {
    pub fn new(
        grid: &WealthGrid,
        market: &MarketParams,
        alpha_tot: f64,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        let nodes = grid.nodes();
        let n = nodes.len();
        let h = grid.spacing();
        let theta = scheme.theta();
        let r_eff = scheme.fitted_rate(market.r, dt);
        let mu = r_eff - alpha_tot;
        let half_var = 0.5 * market.sigma * market.sigma;

        let mut op_lower = vec![0.0; n];
        let mut op_diag = vec![0.0; n];
        let mut op_upper = vec![0.0; n];
        op_diag[0] = -r_eff;
        for i in 1..n - 1 {
            let w = nodes[i];
            let diff = half_var * w * w / (h * h);
            let conv = mu * w / (2.0 * h);
            let (mut lo, mut up) = (diff - conv, diff + conv);
            if lo < 0.0 || up < 0.0 {
                // Cell Peclet condition fails: one-sided upwind drift.
                if mu > 0.0 {
                    lo = diff;
                    up = diff + 2.0 * conv;
                } else {
                    lo = diff - 2.0 * conv;
                    up = diff;
                }
            }
            op_lower[i] = lo;
            op_upper[i] = up;
            op_diag[i] = -(lo + up) - r_eff;
        }

        // Top node: V_ww = 0 with a one-sided drift term.
        let top = n - 1;
        let conv_top = mu * nodes[top] / h;
        op_lower[top] = -conv_top;
        op_diag[top] = conv_top - r_eff;

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            lower[i] = -theta * dt * op_lower[i];
            diag[i] = 1.0 - theta * dt * op_diag[i];
            upper[i] = -theta * dt * op_upper[i];
        }
        let system = TridiagonalSystem {
            lower,
            diagonal: diag,
            upper,
            rhs: Vec::new(),
        };
        // The top row extrapolates linearly; with upward drift its
        // off-diagonal is positive, so only rows below it are checked.
        debug_assert!(
            system.rows_dominant(0..top),
            "implicit matrix is not diagonally dominant (dt = {dt})"
        );
        let factor = ThomasFactor::new(&system.lower, &system.diagonal, &system.upper)?;
        Ok(Self {
            dt,
            theta,
            op_lower,
            op_diag,
            op_upper,
            wealth: nodes.to_vec(),
            factor,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances one row in place; `source_rate * w` is the source per unit time.
    pub fn apply(&self, row: &mut [f64], source_rate: f64, scratch: &mut Vec<f64>) {
        self.apply_block(row, 1, source_rate, scratch);
    }

    /// Advances `width` rows stored node-major (`block[i * width + k]` is row
    /// `k` at wealth node `i`).
    pub fn apply_block(&self, block: &mut [f64], width: usize, source_rate: f64, scratch: &mut Vec<f64>) {
        let n = self.wealth.len();
        debug_assert_eq!(block.len(), n * width);
        let explicit = (1.0 - self.theta) * self.dt;
        let f = &self.factor;
        scratch.resize(n * width, 0.0);
        let d = &mut scratch[..n * width];

        // Forward sweep fused with the explicit half.
        {
            let a = 1.0 + explicit * self.op_diag[0];
            let inv = f.inv_denom[0];
            for (dk, &vk) in d[..width].iter_mut().zip(&block[..width]) {
                *dk = vk * a * inv;
            }
        }
        for i in 1..n {
            let src = self.dt * source_rate * self.wealth[i];
            let lo = explicit * self.op_lower[i];
            let di = 1.0 + explicit * self.op_diag[i];
            let up = explicit * self.op_upper[i];
            let (fl, inv) = (f.lower[i], f.inv_denom[i]);
            let (done, rest) = d.split_at_mut(i * width);
            let prev_d = &done[(i - 1) * width..];
            let cur_d = &mut rest[..width];
            let prev = &block[(i - 1) * width..i * width];
            let cur = &block[i * width..(i + 1) * width];
            if i + 1 < n {
                let next = &block[(i + 1) * width..(i + 2) * width];
                for k in 0..width {
                    let rhs = lo * prev[k] + di * cur[k] + up * next[k] + src;
                    cur_d[k] = (rhs - fl * prev_d[k]) * inv;
                }
            } else {
                for k in 0..width {
                    let rhs = lo * prev[k] + di * cur[k] + src;
                    cur_d[k] = (rhs - fl * prev_d[k]) * inv;
                }
            }
        }

        block[(n - 1) * width..].copy_from_slice(&d[(n - 1) * width..]);
        for i in (0..n - 1).rev() {
            let c = f.c_star[i];
            let (head, tail) = block.split_at_mut((i + 1) * width);
            let cur = &mut head[i * width..];
            let next = &tail[..width];
            let di = &d[i * width..(i + 1) * width];
            for k in 0..width {
                cur[k] = di[k] - c * next[k];
            }
        }
    }

    /// Advances every row of a surface.
    pub fn apply_surface(&self, surface: &mut ValueSurface, source_rate: f64) {
        let mut blocks = NodeMajor::from_surface(surface);
        blocks.step(self, source_rate);
        blocks.write_back(surface);
    }
}

/// Rows per node-major block.
const BLOCK_ROWS: usize = 32;

/// A surface split into node-major blocks of rows, the layout the stepping
/// loops want.
struct NodeMajor {
    cols: usize,
    blocks: Vec<(usize, Vec<f64>)>,
}

impl NodeMajor {
    fn from_surface(surface: &ValueSurface) -> Self {
        let (rows, cols) = (surface.rows(), surface.cols());
        let blocks = (0..rows)
            .step_by(BLOCK_ROWS)
            .map(|r0| {
                let width = BLOCK_ROWS.min(rows - r0);
                let mut data = vec![0.0; width * cols];
                for k in 0..width {
                    for (i, &v) in surface.row(r0 + k).iter().enumerate() {
                        data[i * width + k] = v;
                    }
                }
                (width, data)
            })
            .collect();
        Self { cols, blocks }
    }

    fn step(&mut self, op: &StepOperator, source_rate: f64) {
        self.blocks
            .par_iter_mut()
            .for_each_init(Vec::new, |scratch, (width, data)| {
                op.apply_block(data, *width, source_rate, scratch)
            });
    }

    fn write_back(&self, surface: &mut ValueSurface) {
        let mut r0 = 0;
        for (width, data) in &self.blocks {
            for k in 0..*width {
                for (i, v) in surface.row_mut(r0 + k).iter_mut().enumerate() {
                    *v = data[i * width + k];
                }
            }
            r0 += width;
        }
        debug_assert_eq!(surface.cols(), self.cols);
    }
}

fn check_finite(surface: &ValueSurface) -> Result<()> {
    match surface.first_non_finite() {
        Some((a_index, w_index)) => Err(GmwbError::NumericalInstability { a_index, w_index }),
        None => Ok(()),
    }
}

fn single_step(
    surface: &ValueSurface,
    grid: &WealthGrid,
    dt: f64,
    market: &MarketParams,
    fees: &FeeSchedule,
    scheme: Scheme,
    source_rate: f64,
) -> Result<ValueSurface> {
    if !(dt > 0.0) {
        return Err(GmwbError::Validation {
            field: "dt",
            reason: "time step must be positive".into(),
        });
    }
    let op = StepOperator::new(grid, market, fees.alpha_tot(), dt, scheme)?;
    let mut out = surface.clone();
    op.apply_surface(&mut out, source_rate);
    check_finite(&out)?;
    Ok(out)
}

/// One backward step of the policy value PDE.
pub fn step_value(
    surface: &ValueSurface,
    grid: &WealthGrid,
    dt: f64,
    market: &MarketParams,
    fees: &FeeSchedule,
    scheme: Scheme,
) -> Result<ValueSurface> {
    single_step(surface, grid, dt, market, fees, scheme, 0.0)
}

/// One backward step of the net liability PDE, which carries the insurance
/// fee income as a source.
pub fn step_liability(
    surface: &ValueSurface,
    grid: &WealthGrid,
    dt: f64,
    market: &MarketParams,
    fees: &FeeSchedule,
    scheme: Scheme,
) -> Result<ValueSurface> {
    single_step(surface, grid, dt, market, fees, scheme, -fees.alpha_ins())
}

/// Sub-step layout of one interval: `(count, dt)`. The first
/// [`RANNACHER_STEPS`] are implicit, the rest Crank-Nicolson.
pub fn substeps(t_start: f64, t_end: f64, steps_per_year: usize) -> (usize, f64) {
    let len = t_end - t_start;
    if len <= 0.0 {
        return (0, 0.0);
    }
    // Guard against 0.9999999 * 100 rounding up to 101.
    let count = ((len * steps_per_year as f64) - 1e-9).ceil().max(1.0) as usize;
    (count, len / count as f64)
}

pub fn substep_schemes(count: usize) -> impl Iterator<Item = Scheme> {
    (0..count).map(|k| {
        if k < RANNACHER_STEPS {
            Scheme::Implicit
        } else {
            Scheme::CrankNicolson
        }
    })
}

/// A surface to advance together with its source rate per unit wealth.
pub struct SurfaceJob<'a> {
    pub surface: &'a mut ValueSurface,
    pub source_rate: f64,
}

/// Advances several surfaces from `t_end` back to `t_start` with identical
/// sub-steps. Returns the number of sub-steps taken.
pub fn advance_interval(
    jobs: &mut [SurfaceJob<'_>],
    grid: &WealthGrid,
    t_start: f64,
    t_end: f64,
    market: &MarketParams,
    alpha_tot: f64,
    steps_per_year: usize,
) -> Result<usize> {
    let (count, dt) = substeps(t_start, t_end, steps_per_year);
    if count == 0 {
        return Ok(0);
    }
    let implicit = StepOperator::new(grid, market, alpha_tot, dt, Scheme::Implicit)?;
    let cn = if count > RANNACHER_STEPS {
        Some(StepOperator::new(grid, market, alpha_tot, dt, Scheme::CrankNicolson)?)
    } else {
        None
    };
    for job in jobs.iter_mut() {
        let mut blocks = NodeMajor::from_surface(job.surface);
        for scheme in substep_schemes(count) {
            let op = match scheme {
                Scheme::Implicit => &implicit,
                Scheme::CrankNicolson => cn.as_ref().expect("built when count > RANNACHER_STEPS"),
            };
            blocks.step(op, job.source_rate);
        }
        blocks.write_back(job.surface);
        check_finite(job.surface)?;
    }
    Ok(count)
}

/// European call on wealth with payoff `max(w - strike, 0)` at `maturity`,
/// valued at time 0 on every node. The fee rate acts as a dividend yield.
pub fn european_call(
    strike: f64,
    maturity: f64,
    market: &MarketParams,
    alpha_tot: f64,
    grid: &WealthGrid,
    steps_per_year: usize,
) -> Result<Vec<f64>> {
    let mut surface = ValueSurface::zeros(1, grid.len());
    for (v, &w) in surface.row_mut(0).iter_mut().zip(grid.nodes()) {
        *v = (w - strike).max(0.0);
    }
    advance_interval(
        &mut [SurfaceJob {
            surface: &mut surface,
            source_rate: 0.0,
        }],
        grid,
        0.0,
        maturity,
        market,
        alpha_tot,
        steps_per_year,
    )?;
    Ok(surface.row(0).to_vec())
}

/// Solves both PDEs over `[t_start, t_end]` from post-jump terminal data.
#[allow(clippy::too_many_arguments)]
pub fn solve_between_events(
    value: &ValueSurface,
    liability: &ValueSurface,
    grid: &WealthGrid,
    t_start: f64,
    t_end: f64,
    market: &MarketParams,
    fees: &FeeSchedule,
    config: &GridConfig,
) -> Result<(ValueSurface, ValueSurface)> {
    let mut v = value.clone();
    let mut l = liability.clone();
    advance_interval(
        &mut [
            SurfaceJob {
                surface: &mut v,
                source_rate: 0.0,
            },
            SurfaceJob {
                surface: &mut l,
                source_rate: -fees.alpha_ins(),
            },
        ],
        grid,
        t_start,
        t_end,
        market,
        fees.alpha_tot(),
        config.steps_per_year,
    )?;
    Ok((v, l))
}
