//! Parameter sweeps, efficiency maximization and trajectory post-processing.

use rayon::prelude::*;

use crate::optimize::{grid_then_golden, DEFAULT_TOL, GRID_POINTS};
use crate::perturbation::{perturbation_constants, perturbative_efficiency, renormalized_frequencies};
use crate::propagator::{transfer_efficiency, PropagationConfig};
use crate::ring::{mode_table, RingSpec};
use crate::system::{assemble_momentum_generator, SystemSpec};
use crate::{Error, Result};

pub const DELTA_AXIS: &str = "delta";
pub const DETUNING_AXIS: &str = "detuning";

/// How sweep points are evaluated. Results are merged by grid index in both
/// cases, so the output is identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    pub grid: Vec<Vec<f64>>,
    pub eta_values: Vec<f64>,
    pub converged_flags: Vec<bool>,
    /// Grid point and value of the largest finite eta (lowest index on ties).
    pub argmax: (Vec<f64>, f64),
}

impl SweepResult {
    fn build(axis_names: &[&str], grid: Vec<Vec<f64>>, points: Vec<(f64, bool)>) -> Self {
        let (eta_values, converged_flags): (Vec<f64>, Vec<bool>) = points.into_iter().unzip();
        let best = argmax_index(&eta_values);
        let argmax = match best {
            Some(i) => (grid[i].clone(), eta_values[i]),
            None => (Vec::new(), f64::NAN),
        };
        Self {
            axis_names: axis_names.iter().map(|s| s.to_string()).collect(),
            grid,
            eta_values,
            converged_flags,
            argmax,
        }
    }

    pub fn len(&self) -> usize {
        self.eta_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_values.is_empty()
    }

    /// Eta values of the rows whose first coordinate equals `delta`.
    pub fn row(&self, delta: f64) -> Vec<(f64, f64)> {
        self.grid
            .iter()
            .zip(&self.eta_values)
            .filter(|(p, _)| p[0] == delta)
            .map(|(p, &eta)| (p[1], eta))
            .collect()
    }
}

/// Index of the largest finite value; ties go to the lowest index.
pub fn argmax_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.map_or(true, |b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} grid contains non-finite value {v}")));
    }
    Ok(())
}

fn product(delta_grid: &[f64], detuning_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_grid(DELTA_AXIS, delta_grid)?;
    check_grid(DETUNING_AXIS, detuning_grid)?;
    Ok(delta_grid
        .iter()
        .flat_map(|&d| detuning_grid.iter().map(move |&x| vec![d, x]))
        .collect())
}

fn evaluate<F>(grid: &[Vec<f64>], exec: Execution, f: F) -> Result<Vec<(f64, bool)>>
where
    F: Fn(&[f64]) -> Result<(f64, bool)> + Sync,
{
    match exec {
        Execution::Sequential => grid.iter().map(|p| f(p)).collect(),
        Execution::Parallel => grid.par_iter().map(|p| f(p)).collect(),
    }
}

fn point_spec(template: &SystemSpec, delta: f64, detuning: f64) -> Result<SystemSpec> {
    Ok(template
        .with_ring(template.ring.with_delta(delta)?)
        .with_detuning(detuning))
}

/// Exact transfer efficiency over the product grid, rows ordered with
/// dimerization outer and detuning inner.
pub fn sweep_detuning(
    template: &SystemSpec,
    delta_grid: &[f64],
    detuning_grid: &[f64],
    config: &PropagationConfig,
    exec: Execution,
) -> Result<SweepResult> {
    config.validate()?;
    let grid = product(delta_grid, detuning_grid)?;
    let points = evaluate(&grid, exec, |p| {
        let sys = point_spec(template, p[0], p[1])?;
        let r = transfer_efficiency(&assemble_momentum_generator(&sys), config)?;
        Ok((r.eta, r.converged))
    })?;
    Ok(SweepResult::build(&[DELTA_AXIS, DETUNING_AXIS], grid, points))
}

/// Second-order perturbative efficiency over the same grid layout as
/// [`sweep_detuning`]. Points whose closed-form integral diverges or hits a
/// resonance are stored as NaN and flagged; points outside `[0, 1]` are kept
/// but flagged.
pub fn sweep_detuning_perturbative(
    template: &SystemSpec,
    delta_grid: &[f64],
    detuning_grid: &[f64],
    exec: Execution,
) -> Result<SweepResult> {
    let grid = product(delta_grid, detuning_grid)?;
    let points = evaluate(&grid, exec, |p| {
        let sys = point_spec(template, p[0], p[1])?;
        let eta = renormalized_frequencies(&sys)
            .and_then(|f| perturbation_constants(&sys, &f))
            .and_then(|sol| perturbative_efficiency(&sol, sys.charge_sep_gamma));
        match eta {
            Ok(eta) => Ok((eta, (0.0..=1.0).contains(&eta))),
            Err(Error::DivergentIntegral(_) | Error::Degenerate(_)) => Ok((f64::NAN, false)),
            Err(e) => Err(e),
        }
    })?;
    Ok(SweepResult::build(&[DELTA_AXIS, DETUNING_AXIS], grid, points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeParameter {
    /// Detuning `omega - epsilon_A`.
    Delta,
    DimerizationDelta,
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub argmax: f64,
    pub eta: f64,
    /// False if any efficiency evaluation during the search was flagged.
    pub converged: bool,
}

fn with_parameter(template: &SystemSpec, parameter: OptimizeParameter, value: f64) -> Result<SystemSpec> {
    match parameter {
        OptimizeParameter::Delta => Ok(template.with_detuning(value)),
        OptimizeParameter::DimerizationDelta => Ok(template.with_ring(template.ring.with_delta(value)?)),
        OptimizeParameter::Kappa => {
            let sys = SystemSpec { fluorescence_kappa: value, ..*template };
            sys.validate()?;
            Ok(sys)
        }
    }
}

/// Maximize the exact transfer efficiency over one parameter on `[lo, hi]`
/// (33-point scan, then golden-section refinement to 1e-4).
pub fn maximize_efficiency(
    template: &SystemSpec,
    parameter: OptimizeParameter,
    bracket: (f64, f64),
    config: &PropagationConfig,
) -> Result<Optimum> {
    config.validate()?;
    let (lo, hi) = bracket;
    with_parameter(template, parameter, lo)?;
    with_parameter(template, parameter, hi)?;
    let mut converged = true;
    let (argmax, eta) = grid_then_golden(
        |x| {
            let sys = with_parameter(template, parameter, x)?;
            let r = transfer_efficiency(&assemble_momentum_generator(&sys), config)?;
            converged &= r.converged;
            Ok(r.eta)
        },
        lo,
        hi,
        GRID_POINTS,
        DEFAULT_TOL,
    )?;
    Ok(Optimum { argmax, eta, converged })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Decay rate, the negated slope of `ln(value)` versus time.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub const MIN_TAIL_SAMPLES: usize = 10;

/// Least-squares line through `ln(value)` for samples with `t0 <= t <= t1`.
pub fn tail_decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<TailFit> {
    let (t0, t1) = window;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t0 && t <= t1)
        .collect();
    if pts.len() < MIN_TAIL_SAMPLES {
        return Err(Error::Domain(format!(
            "tail window [{t0}, {t1}] holds {} samples, need at least {MIN_TAIL_SAMPLES}",
            pts.len()
        )));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {v} at t = {t} in tail window")));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let (dt, dy) = (t - mean_t, v.ln() - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::Domain("tail window has no time spread".into()));
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Ok(TailFit { rate: -slope, r_squared, samples: pts.len() })
}

/// Default tail window `[0.6 t_end, 0.95 t_end]`.
pub fn default_tail_window(t_end: f64) -> (f64, f64) {
    (0.6 * t_end, 0.95 * t_end)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRow {
    pub k: f64,
    pub abs_h_a: f64,
    pub abs_h_b: f64,
}

/// Mode-resolved coupling magnitudes sorted by momentum.
pub fn coupling_report(ring: &RingSpec) -> Vec<CouplingRow> {
    let mut rows: Vec<CouplingRow> = mode_table(ring)
        .entries
        .iter()
        .map(|e| CouplingRow { k: e.momentum_k, abs_h_a: e.coupling_h_a.norm(), abs_h_b: e.coupling_h_b.norm() })
        .collect();
    rows.sort_by(|a, b| a.k.total_cmp(&b.k));
    rows
}
