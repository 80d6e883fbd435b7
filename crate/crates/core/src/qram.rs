//! Closed-form QRAM feasibility estimates.
//!
//! A bucket-brigade query of depth `T = log N` accumulates infidelity
//! `1 - F = eps * T * log N / 4`. The per-step error of a phonon-coupled
//! transmon router is modeled as `eps = (kappa + gamma) c_d pi / (2 g_d) + (g_d / nu)^2`.
//! All rates are angular frequencies in rad/s.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base of the logarithm in `T = log N`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    pub fn log(self, n: f64) -> f64 {
        match self {
            LogBase::Two => n.log2(),
            LogBase::E => n.ln(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" | "two" => Ok(LogBase::Two),
            "e" | "ln" | "natural" => Ok(LogBase::E),
            other => Err(Error::param("log_base", format!("expected `2` or `e`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QramHardwareParams {
    /// Direct transmon-phonon coupling.
    pub g_d: f64,
    /// Free spectral range of the acoustic resonator.
    pub nu: f64,
    /// Gate-depth constant.
    pub c_d: f64,
    /// Combined phonon and transmon decoherence rate.
    pub kappa_plus_gamma: f64,
}

impl Default for QramHardwareParams {
    fn default() -> Self {
        Self {
            g_d: 2.0 * PI * 1e3,
            nu: 2.0 * PI * 1e7,
            c_d: 4.5,
            kappa_plus_gamma: 0.0,
        }
    }
}

impl QramHardwareParams {
    pub fn with_decoherence(mut self, kappa_plus_gamma: f64) -> Self {
        self.kappa_plus_gamma = kappa_plus_gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("g_d", self.g_d), ("nu", self.nu), ("c_d", self.c_d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(field, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.kappa_plus_gamma.is_finite() && self.kappa_plus_gamma >= 0.0) {
            return Err(Error::param("kappa_plus_gamma", "must be non-negative and finite"));
        }
        if self.g_d >= self.nu {
            return Err(Error::param("g_d", "coupling must be below the free spectral range"));
        }
        Ok(())
    }

    /// Coupling-induced error `(g_d / nu)^2`, present even without decoherence.
    pub fn error_floor(&self) -> f64 {
        (self.g_d / self.nu).powi(2)
    }
}

fn check_size(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 2.0) {
        return Err(Error::param("data_size", format!("need N >= 2, got {n}")));
    }
    Ok(())
}

/// Query infidelity `eps * log^2(N) / 4`.
pub fn infidelity(epsilon: f64, n: f64, base: LogBase) -> Result<f64> {
    check_size(n)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::param("epsilon", "must be non-negative"));
    }
    Ok(0.25 * epsilon * base.log(n).powi(2))
}

/// Per-step error rate that yields `one_minus_f` over a depth-`log N` query.
pub fn epsilon_bound(one_minus_f: f64, n: f64, base: LogBase) -> Result<f64> {
    check_size(n)?;
    if !(one_minus_f > 0.0 && one_minus_f < 1.0) {
        return Err(Error::param("one_minus_f", format!("must lie in (0, 1), got {one_minus_f}")));
    }
    Ok(4.0 * one_minus_f / base.log(n).powi(2))
}

pub fn epsilon_from_hardware(hw: &QramHardwareParams) -> Result<f64> {
    hw.validate()?;
    Ok(hw.kappa_plus_gamma * hw.c_d * PI / (2.0 * hw.g_d) + hw.error_floor())
}

/// Largest `kappa + gamma` keeping the step error at `epsilon_target`.
/// `hw.kappa_plus_gamma` is ignored.
pub fn decoherence_budget(epsilon_target: f64, hw: &QramHardwareParams) -> Result<f64> {
    hw.with_decoherence(0.0).validate()?;
    let floor = hw.error_floor();
    if !(epsilon_target >= floor) {
        return Err(Error::Infeasible {
            floor,
            target: epsilon_target,
        });
    }
    Ok((epsilon_target - floor) * 2.0 * hw.g_d / (hw.c_d * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub n: f64,
    pub one_minus_f: f64,
    pub epsilon: f64,
    /// `None` when the coupling floor alone exceeds `epsilon`.
    pub kappa_plus_gamma: Option<f64>,
    /// Within a factor of two of `N = 1e3`, `1 - F = 1e-3`.
    pub highlighted: bool,
}

impl GridRow {
    pub fn feasible(&self) -> bool {
        self.kappa_plus_gamma.is_some()
    }
}

fn near(x: f64, center: f64) -> bool {
    x >= center / 2.0 && x <= center * 2.0
}

/// Every `(N, 1 - F)` combination, ordered by `N` then `1 - F`.
pub fn feasibility_grid(
    sizes: &[f64],
    infidelities: &[f64],
    hw: &QramHardwareParams,
    base: LogBase,
) -> Result<Vec<GridRow>> {
    if sizes.is_empty() {
        return Err(Error::param("n_range", "empty range"));
    }
    if infidelities.is_empty() {
        return Err(Error::param("fidelity_range", "empty range"));
    }
    hw.with_decoherence(0.0).validate()?;
    let cells: Vec<(f64, f64)> = sizes
        .iter()
        .flat_map(|&n| infidelities.iter().map(move |&f| (n, f)))
        .collect();
    cells
        .into_par_iter()
        .map(|(n, one_minus_f)| {
            let epsilon = epsilon_bound(one_minus_f, n, base)?;
            let kappa_plus_gamma = match decoherence_budget(epsilon, hw) {
                Ok(k) => Some(k),
                Err(Error::Infeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(GridRow {
                n,
                one_minus_f,
                epsilon,
                kappa_plus_gamma,
                highlighted: near(n, 1e3) && near(one_minus_f, 1e-3),
            })
        })
        .collect()
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("N,one_minus_F,epsilon,kappa_plus_gamma,feasible\n");
    for r in rows {
        let budget = r.kappa_plus_gamma.map(|k| format!("{k:e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:e},{:e},{},{}",
            r.n,
            r.one_minus_f,
            r.epsilon,
            budget,
            r.feasible()
        );
    }
    out
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(lo > 0.0 && hi >= lo) {
        return Err(Error::param("range", format!("need 0 < lo <= hi and count >= 1, got {lo}..{hi} x{count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Parses an angular rate. Plain numbers are rad/s; `1kHz*2pi` (also
/// `2pi*1kHz`, units Hz/kHz/MHz/GHz) is a frequency times `2 pi`.
pub fn parse_rate(text: &str) -> Result<f64> {
    let bad = || Error::param("rate", format!("cannot parse `{text}`"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let lower = s.to_ascii_lowercase();
    let (body, two_pi) = if let Some(b) = lower.strip_suffix("*2pi") {
        (b, true)
    } else if let Some(b) = lower.strip_prefix("2pi*") {
        (b, true)
    } else {
        (lower.as_str(), false)
    };
    let (digits, scale) = [("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)]
        .iter()
        .find_map(|&(unit, scale)| body.strip_suffix(unit).map(|d| (d, scale)))
        .unwrap_or((body, 1.0));
    let value: f64 = digits.parse().map_err(|_| bad())?;
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value * scale * if two_pi { 2.0 * PI } else { 1.0 })
}
