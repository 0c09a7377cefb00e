//! Fixed-step RK4 integration of `i d psi/dt = M psi` with the two loss
//! integrals (charge separation, fluorescence) carried as extra state and
//! advanced by the same stages.
//!
//! Each propagation is repeated with the step halved until the transfer
//! efficiency changes by less than [`ETA_REFINEMENT_TOL`]; the finest run is
//! returned.

use crate::system::{BasisLabel, EffectiveGenerator};
use crate::{Error, Result, C64};

/// Upper bound on `step_dt * max |M_ij|`.
pub const STABILITY_LIMIT: f64 = 0.1;
pub const MAX_REFINEMENTS: usize = 6;
pub const ETA_REFINEMENT_TOL: f64 = 1e-8;
/// Residual population above which a run that hit `t_max` is flagged.
pub const NONCONVERGED_RESIDUAL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub step_dt: f64,
    pub t_max: f64,
    pub residual_tol: f64,
    pub sample_stride: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { step_dt: 0.002, t_max: 200.0, residual_tol: 1e-8, sample_stride: 10 }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_dt.is_finite() && self.step_dt > 0.0) {
            return Err(Error::Config(format!("step_dt must be > 0, got {}", self.step_dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::Config(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if !(self.residual_tol.is_finite() && self.residual_tol >= 0.0) {
            return Err(Error::Config(format!(
                "residual_tol must be >= 0, got {}",
                self.residual_tol
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::Config("sample_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Amplitudes in the generator's basis at dimensionless time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub time: f64,
    pub amplitudes: Vec<C64>,
}

impl AmplitudeState {
    /// All population in basis state `index` at `t = 0`.
    pub fn basis_state(dimension: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dimension];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { time: 0.0, amplitudes }
    }

    /// The single-photon initial state `|1_b>`.
    pub fn photon(dimension: usize) -> Self {
        Self::basis_state(dimension, crate::system::PHOTON)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ResidualBelowTol,
    TMaxReached,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub labels: Vec<BasisLabel>,
    pub samples: Vec<AmplitudeState>,
    /// Running charge-separation yield at each sample.
    pub eta_series: Vec<f64>,
    /// Running fluorescence loss at each sample.
    pub loss_series: Vec<f64>,
    pub eta_accumulated: f64,
    pub fluorescence_loss: f64,
    pub terminated_by: Termination,
    /// Step actually used for the returned run.
    pub step_dt: f64,
    pub refinements: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &AmplitudeState {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn residual(&self) -> f64 {
        self.final_state().norm_sqr()
    }

    pub fn end_time(&self) -> f64 {
        self.final_state().time
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// Total donor population of each sample.
    pub fn donor_population(&self) -> Vec<f64> {
        let donors: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_donor())
            .map(|(i, _)| i)
            .collect();
        self.samples
            .iter()
            .map(|s| donors.iter().map(|&i| s.population(i)).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyResult {
    pub eta: f64,
    pub fluorescence_loss: f64,
    /// Population `||psi(T)||^2` left at termination.
    pub residual: f64,
    /// False when `t_max` was reached with residual above [`NONCONVERGED_RESIDUAL`];
    /// `eta` is then a lower bound.
    pub converged: bool,
    pub terminated_by: Termination,
    pub step_dt: f64,
}

/// Compressed-row copy of `-i M`, the right-hand side of `dpsi/dt`.
struct Rhs {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    eta_weights: Vec<(usize, f64)>,
    loss_weights: Vec<(usize, f64)>,
}

impl Rhs {
    fn new(gen: &EffectiveGenerator) -> Self {
        let dim = gen.dimension();
        let minus_i = C64::new(0.0, -1.0);
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..dim {
            row_start.push(cols.len());
            for c in 0..dim {
                let v = gen.matrix[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(minus_i * v);
                }
            }
        }
        row_start.push(cols.len());

        let rates = gen.loss_rates();
        let mut eta_weights = Vec::new();
        let mut loss_weights = Vec::new();
        for (i, label) in gen.labels.iter().enumerate() {
            if rates[i] == 0.0 {
                continue;
            }
            match label {
                BasisLabel::Acceptor => eta_weights.push((i, rates[i])),
                l if l.is_donor() => loss_weights.push((i, rates[i])),
                _ => {}
            }
        }
        Self { dim, row_start, cols, vals, eta_weights, loss_weights }
    }

    #[inline]
    fn apply(&self, y: &[C64], out: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for idx in self.row_start[r]..self.row_start[r + 1] {
                acc += self.vals[idx] * y[self.cols[idx]];
            }
            out[r] = acc;
        }
    }

    #[inline]
    fn eta_rate(&self, y: &[C64]) -> f64 {
        self.eta_weights.iter().map(|&(i, w)| w * y[i].norm_sqr()).sum()
    }

    #[inline]
    fn loss_rate(&self, y: &[C64]) -> f64 {
        self.loss_weights.iter().map(|&(i, w)| w * y[i].norm_sqr()).sum()
    }
}

struct Run {
    samples: Vec<AmplitudeState>,
    eta_series: Vec<f64>,
    loss_series: Vec<f64>,
    final_state: AmplitudeState,
    eta: f64,
    loss: f64,
    termination: Termination,
}

fn integrate(
    rhs: &Rhs,
    initial: &AmplitudeState,
    dt: f64,
    t_max: f64,
    residual_tol: f64,
    stride: Option<usize>,
) -> Result<Run> {
    let dim = rhs.dim;
    let t0 = initial.time;
    let n_steps = ((t_max - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut y = initial.amplitudes.clone();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    let mut stage = vec![zero; dim];
    let mut eta = 0.0;
    let mut loss = 0.0;

    let mut samples = Vec::new();
    let mut eta_series = Vec::new();
    let mut loss_series = Vec::new();
    let record = |samples: &mut Vec<AmplitudeState>,
                  eta_series: &mut Vec<f64>,
                  loss_series: &mut Vec<f64>,
                  t: f64,
                  y: &[C64],
                  eta: f64,
                  loss: f64| {
        samples.push(AmplitudeState { time: t, amplitudes: y.to_vec() });
        eta_series.push(eta);
        loss_series.push(loss);
    };
    if stride.is_some() {
        record(&mut samples, &mut eta_series, &mut loss_series, t0, &y, eta, loss);
    }

    let half = 0.5 * dt;
    let sixth = dt / 6.0;
    let mut termination = Termination::TMaxReached;
    let mut last_step = 0;
    let initial_norm: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    if initial_norm < residual_tol {
        termination = Termination::ResidualBelowTol;
    } else {
        for step in 1..=n_steps {
            let g1 = rhs.eta_rate(&y);
            let l1 = rhs.loss_rate(&y);
            rhs.apply(&y, &mut k1);

            for i in 0..dim {
                stage[i] = y[i] + k1[i] * half;
            }
            let g2 = rhs.eta_rate(&stage);
            let l2 = rhs.loss_rate(&stage);
            rhs.apply(&stage, &mut k2);

            for i in 0..dim {
                stage[i] = y[i] + k2[i] * half;
            }
            let g3 = rhs.eta_rate(&stage);
            let l3 = rhs.loss_rate(&stage);
            rhs.apply(&stage, &mut k3);

            for i in 0..dim {
                stage[i] = y[i] + k3[i] * dt;
            }
            let g4 = rhs.eta_rate(&stage);
            let l4 = rhs.loss_rate(&stage);
            rhs.apply(&stage, &mut k4);

            let mut norm = 0.0;
            for i in 0..dim {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth;
                norm += y[i].norm_sqr();
            }
            eta += (g1 + 2.0 * (g2 + g3) + g4) * sixth;
            loss += (l1 + 2.0 * (l2 + l3) + l4) * sixth;
            last_step = step;

            if !norm.is_finite() || !eta.is_finite() || !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite state at t = {}",
                    t0 + step as f64 * dt
                )));
            }
            let done = norm < residual_tol;
            if let Some(s) = stride {
                if step % s == 0 || done || step == n_steps {
                    let t = t0 + step as f64 * dt;
                    record(&mut samples, &mut eta_series, &mut loss_series, t, &y, eta, loss);
                }
            }
            if done {
                termination = Termination::ResidualBelowTol;
                break;
            }
        }
    }

    let final_state = AmplitudeState { time: t0 + last_step as f64 * dt, amplitudes: y };
    Ok(Run { samples, eta_series, loss_series, final_state, eta, loss, termination })
}

struct Refined {
    run: Run,
    dt: f64,
    refinements: usize,
}

fn refine(
    gen: &EffectiveGenerator,
    initial: &AmplitudeState,
    config: &PropagationConfig,
    sampled: bool,
) -> Result<Refined> {
    config.validate()?;
    if initial.amplitudes.len() != gen.dimension() {
        return Err(Error::Validation(format!(
            "initial state has dimension {}, generator has {}",
            initial.amplitudes.len(),
            gen.dimension()
        )));
    }
    if initial.norm_sqr() > 1.0 + 1e-9 {
        return Err(Error::Validation(format!(
            "initial norm^2 {} exceeds 1",
            initial.norm_sqr()
        )));
    }

    let max_element = crate::linalg::max_abs(&gen.matrix);
    let mut dt = config.step_dt;
    let mut stride = config.sample_stride;
    let mut guard_halvings = 0;
    while dt * max_element >= STABILITY_LIMIT {
        if guard_halvings == MAX_REFINEMENTS {
            return Err(Error::Numerical(format!(
                "step {} * max|M| = {} violates the stability limit {} after {} halvings",
                dt,
                dt * max_element,
                STABILITY_LIMIT,
                MAX_REFINEMENTS
            )));
        }
        dt *= 0.5;
        stride *= 2;
        guard_halvings += 1;
    }

    let rhs = Rhs::new(gen);
    let sampling = |s: usize| if sampled { Some(s) } else { None };
    let mut previous = integrate(&rhs, initial, dt, config.t_max, config.residual_tol, sampling(stride))?;
    for refinement in 1..=MAX_REFINEMENTS {
        dt *= 0.5;
        stride *= 2;
        let next = integrate(&rhs, initial, dt, config.t_max, config.residual_tol, sampling(stride))?;
        if (next.eta - previous.eta).abs() < ETA_REFINEMENT_TOL {
            return Ok(Refined { run: next, dt, refinements: refinement });
        }
        previous = next;
    }
    Err(Error::Numerical(format!(
        "transfer efficiency did not settle to {ETA_REFINEMENT_TOL:e} within {MAX_REFINEMENTS} step halvings"
    )))
}

/// Integrate from `initial` under `gen`, recording every `sample_stride` steps
/// (strides are doubled along with each step halving so sample times are
/// unchanged).
pub fn propagate(
    gen: &EffectiveGenerator,
    initial: &AmplitudeState,
    config: &PropagationConfig,
) -> Result<Trajectory> {
    let Refined { run, dt, refinements } = refine(gen, initial, config, true)?;
    Ok(Trajectory {
        labels: gen.labels.clone(),
        samples: run.samples,
        eta_series: run.eta_series,
        loss_series: run.loss_series,
        eta_accumulated: run.eta,
        fluorescence_loss: run.loss,
        terminated_by: run.termination,
        step_dt: dt,
        refinements,
    })
}

/// `(t, |alpha_A(t)|^2)` at every recorded sample.
pub fn acceptor_population(traj: &Trajectory) -> Vec<(f64, f64)> {
    let a = traj
        .labels
        .iter()
        .position(|l| *l == BasisLabel::Acceptor)
        .unwrap_or(crate::system::ACCEPTOR);
    traj.samples.iter().map(|s| (s.time, s.population(a))).collect()
}

/// Transfer efficiency `2 Gamma int |alpha_A|^2 dt` starting from `|1_b>`.
pub fn transfer_efficiency(
    gen: &EffectiveGenerator,
    config: &PropagationConfig,
) -> Result<EfficiencyResult> {
    let initial = AmplitudeState::photon(gen.dimension());
    let Refined { run, dt, .. } = refine(gen, &initial, config, false)?;
    let residual = run.final_state.norm_sqr();
    let converged =
        !(run.termination == Termination::TMaxReached && residual > NONCONVERGED_RESIDUAL);
    Ok(EfficiencyResult {
        eta: run.eta,
        fluorescence_loss: run.loss,
        residual,
        converged,
        terminated_by: run.termination,
        step_dt: dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Boundary, RingSpec};
    use crate::system::{assemble_momentum_generator, assemble_site_generator, SystemSpec};

    fn reference_system(delta: f64) -> SystemSpec {
        let ring = RingSpec::new(8, 1.0, delta, Boundary::Moebius).unwrap();
        SystemSpec::new(ring, -6.0, -6.0, 1.0, 0.3, 0.3).unwrap()
    }

    #[test]
    fn decoupled_photon_rotates_freely() {
        let mut sys = reference_system(0.3);
        sys.photon_coupling_j = 0.0;
        let gen = assemble_momentum_generator(&sys);
        let cfg = PropagationConfig { t_max: 20.0, ..Default::default() };
        let traj = propagate(&gen, &AmplitudeState::photon(gen.dimension()), &cfg).unwrap();
        for s in &traj.samples {
            let exact = C64::from_polar(1.0, -sys.photon_omega * s.time);
            assert!((s.amplitudes[0] - exact).norm() < 1e-7);
            assert!(s.population(1) < 1e-30);
        }
        assert_eq!(traj.eta_accumulated, 0.0);
        assert_eq!(traj.terminated_by, Termination::TMaxReached);
    }

    #[test]
    fn zero_gamma_gives_zero_eta() {
        let mut sys = reference_system(0.0);
        sys.charge_sep_gamma = 0.0;
        let r = transfer_efficiency(&assemble_momentum_generator(&sys), &PropagationConfig {
            t_max: 50.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.eta, 0.0);
    }

    #[test]
    fn bookkeeping_closes() {
        for delta in [0.0, 0.6] {
            let gen = assemble_site_generator(&reference_system(delta));
            let traj =
                propagate(&gen, &AmplitudeState::photon(10), &PropagationConfig::default()).unwrap();
            for ((s, eta), loss) in traj.samples.iter().zip(&traj.eta_series).zip(&traj.loss_series) {
                assert!((s.norm_sqr() + eta + loss - 1.0).abs() < 1e-6);
            }
            let norms: Vec<f64> = traj.samples.iter().map(|s| s.norm_sqr()).collect();
            assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert_eq!(traj.terminated_by, Termination::ResidualBelowTol);
        }
    }

    #[test]
    fn sample_times_follow_stride() {
        let gen = assemble_momentum_generator(&reference_system(0.3));
        let cfg = PropagationConfig { t_max: 1.0, sample_stride: 50, ..Default::default() };
        let traj = propagate(&gen, &AmplitudeState::photon(10), &cfg).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 11);
        for (i, t) in times.iter().enumerate() {
            assert!((t - 0.1 * i as f64).abs() < 1e-12);
        }
        let pa = acceptor_population(&traj);
        assert_eq!(pa[0].1, 0.0);
        assert!(pa.iter().all(|&(_, p)| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn stability_guard_halves_large_steps() {
        let gen = assemble_momentum_generator(&reference_system(0.3));
        let cfg = PropagationConfig { step_dt: 0.05, t_max: 5.0, ..Default::default() };
        let traj = propagate(&gen, &AmplitudeState::photon(10), &cfg).unwrap();
        assert!(traj.step_dt * crate::linalg::max_abs(&gen.matrix) < STABILITY_LIMIT);

        let huge = PropagationConfig { step_dt: 10.0, t_max: 5.0, ..Default::default() };
        assert!(matches!(
            propagate(&gen, &AmplitudeState::photon(10), &huge),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn rejects_bad_initial_state() {
        let gen = assemble_momentum_generator(&reference_system(0.3));
        let mut s = AmplitudeState::photon(10);
        s.amplitudes[1] = C64::new(1.0, 0.0);
        assert!(matches!(
            propagate(&gen, &s, &PropagationConfig::default()),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            propagate(&gen, &AmplitudeState::photon(4), &PropagationConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn flags_truncated_runs() {
        let gen = assemble_momentum_generator(&reference_system(0.3));
        let r = transfer_efficiency(&gen, &PropagationConfig { t_max: 2.0, ..Default::default() })
            .unwrap();
        assert!(!r.converged);
        assert_eq!(r.terminated_by, Termination::TMaxReached);
        assert!(r.residual > NONCONVERGED_RESIDUAL);
    }
}
