//! Calibration of the constant insurance fee that makes `L0 = 0`.

use serde::{Deserialize, Serialize};

use crate::dp::{price_with_options, PricingOptions, PricingResult, StrategyKind};
use crate::error::{invalid, GmwbError, Result};
use crate::grid::GridConfig;
use crate::model::{ContractSpec, FeeSchedule, MarketParams};

/// Outermost bracket reached by geometric expansion.
pub const EXPANSION_LIMITS: (f64, f64) = (-0.10, 0.60);

/// Net liabilities below this magnitude count as a root.
const LIABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    pub bracket_low: f64,
    pub bracket_high: f64,
    /// Target width of the final bracket on the fee.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            bracket_low: -0.05,
            bracket_high: 0.40,
            tolerance: 1e-6,
            max_iterations: 100,
        }
    }
}

impl CalibrationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.bracket_low < self.bracket_high) {
            return invalid("bracket_low", "must be below bracket_high");
        }
        if !(self.tolerance > 0.0) {
            return invalid("tolerance", "must be positive");
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations", "must be positive");
        }
        Ok(())
    }
}

/// A calibrated fee together with the pricing at that fee.
#[derive(Debug, Clone)]
pub struct FairFee {
    pub alpha_ins: f64,
    pub pricing: PricingResult,
    pub evaluations: usize,
    /// Bracket that contained the sign change.
    pub bracket: (f64, f64),
}

/// Finds a sign change of `f` inside `[low, high]`, widening the interval
/// geometrically up to `limits`. Returns the bracketing pair of points.
pub fn expand_bracket<F>(
    f: &mut F,
    low: f64,
    high: f64,
    limits: (f64, f64),
) -> Result<((f64, f64), (f64, f64))>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut points = vec![(low, f(low)?), (high, f(high)?)];
    loop {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(pair) = points
            .windows(2)
            .find(|p| p[0].1 == 0.0 || p[0].1.signum() != p[1].1.signum())
        {
            return Ok((pair[0], pair[1]));
        }
        let (lo, hi) = (points[0].0, points[points.len() - 1].0);
        if lo <= limits.0 && hi >= limits.1 {
            return Err(GmwbError::NoRoot {
                low: lo,
                high: hi,
                liability_low: points[0].1,
                liability_high: points[points.len() - 1].1,
            });
        }
        let width = hi - lo;
        let new_lo = (lo - 0.5 * width).max(limits.0);
        let new_hi = (hi + 0.5 * width).min(limits.1);
        if new_lo < lo {
            points.push((new_lo, f(new_lo)?));
        }
        if new_hi > hi {
            points.push((new_hi, f(new_hi)?));
        }
    }
}

/// Brent's method on a bracket with `f(a)` and `f(b)` of opposite signs.
/// Every iterate stays inside the current bracket; falls back to bisection
/// when the interpolation step is not trustworthy.
pub fn brent<F>(
    f: &mut F,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    tolerance: f64,
    max_iterations: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iterations {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tolerance;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= LIABILITY_TOLERANCE {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Ok(b)
}

/// Solves `L0(alpha_ins) = 0` for a constant insurance fee.
pub fn solve_fair_fee(
    contract: &ContractSpec,
    market: &MarketParams,
    alpha_m: f64,
    strategy: StrategyKind,
    settings: &CalibrationSettings,
    grid_config: &GridConfig,
) -> Result<FairFee> {
    settings.validate()?;
    FeeSchedule::new(alpha_m, 0.0)?;
    let options = PricingOptions {
        track_management_fees: false,
        record_policy: false,
    };
    let mut evaluations = 0;
    let mut liability = |alpha_ins: f64| -> Result<f64> {
        evaluations += 1;
        let fees = FeeSchedule::new(alpha_m, alpha_ins)?;
        Ok(price_with_options(contract, market, &fees, strategy, grid_config, options)?.l0)
    };
    let (lo, hi) = expand_bracket(
        &mut liability,
        settings.bracket_low,
        settings.bracket_high,
        EXPANSION_LIMITS,
    )?;
    let alpha_ins = brent(&mut liability, lo, hi, settings.tolerance, settings.max_iterations)?;
    let fees = FeeSchedule::new(alpha_m, alpha_ins)?;
    let pricing = price_with_options(
        contract,
        market,
        &fees,
        strategy,
        grid_config,
        PricingOptions::default(),
    )?;
    Ok(FairFee {
        alpha_ins,
        pricing,
        evaluations: evaluations + 1,
        bracket: (lo.0, hi.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let mut f = |x: f64| Ok(x * x * x - 2.0 * x - 5.0);
        let root = brent(&mut f, (2.0, -1.0), (3.0, 16.0), 1e-12, 100).unwrap();
        assert!((root - 2.094_551_481_542_327).abs() < 1e-10);
    }

    #[test]
    fn brent_handles_step_function() {
        let mut calls = 0;
        let mut f = |x: f64| {
            calls += 1;
            Ok(if x < 0.3 { 1.0 } else { -1.0 })
        };
        let root = brent(&mut f, (0.0, 1.0), (1.0, -1.0), 1e-8, 200).unwrap();
        assert!((root - 0.3).abs() < 1e-8);
    }

    #[test]
    fn bracket_expands_to_limits() {
        let mut f = |x: f64| Ok(0.5 - x);
        let (lo, hi) = expand_bracket(&mut f, -0.05, 0.40, EXPANSION_LIMITS).unwrap();
        assert!(lo.0 <= 0.5 && hi.0 >= 0.5);

        let mut g = |_x: f64| Ok(1.0);
        let err = expand_bracket(&mut g, -0.05, 0.40, EXPANSION_LIMITS).unwrap_err();
        assert!(matches!(err, GmwbError::NoRoot { low, high, .. } if low == -0.10 && high == 0.60));
    }

    #[test]
    fn settings_validation() {
        let bad = CalibrationSettings {
            bracket_low: 0.1,
            bracket_high: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(CalibrationSettings::default().validate().is_ok());
    }
}
