use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mobius_harvest::analysis::{default_tail_window, Execution, OptimizeParameter};
use mobius_harvest::linalg::{max_abs, unitarity_defect};
use mobius_harvest::perturbation::{solve, ww_rates_lorentzian};
use mobius_harvest::propagator::NONCONVERGED_RESIDUAL;
use mobius_harvest::system::momentum_transform;
use mobius_harvest::*;

use crate::config::{parse_config, BoundaryKey, Overrides, Resolved};
use crate::csv::{emit_csv, Table};
use crate::{EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(name = "mobius-harvest", version, about = "Light harvesting by a dimerized Moebius ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper-band energies eps_k as CSV `m,k,eps_k`.
    Spectrum(Common),
    /// Mode coupling magnitudes as CSV `k,abs_h_a,abs_h_b`.
    Couplings(Common),
    /// Populations over time from the photon initial state.
    Dynamics(DynamicsArgs),
    /// Transfer efficiency summary (JSON), with tail fit and optimum when configured.
    Efficiency(Common),
    /// Efficiency over the configured (delta, detuning) grid as CSV.
    Sweep(SweepArgs),
    /// Renormalized frequencies, decay rates and perturbative efficiency (JSON).
    Perturb(PerturbArgs),
    /// Compare the full periodic ring against its three-level reduction.
    PbcCompare(Common),
    /// Run the built-in oracle checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Moebius,
    Periodic,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    coupling_j: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
enum BasisArg {
    #[default]
    Momentum,
    Site,
}

#[derive(Debug, Args)]
struct DynamicsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t)]
    basis: BasisArg,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Use the second-order perturbative efficiency instead of propagation.
    #[arg(long)]
    perturbative: bool,
    /// Evaluate points one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    #[command(flatten)]
    common: Common,
    /// Lorentzian half-width for the continuum decay estimate (defaults to kappa).
    #[arg(long)]
    width: Option<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::DivergentIntegral(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<crate::config::ConfigError> for Failure {
    fn from(e: crate::config::ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

/// Parse `argv` (program name first), run the command and return the exit code.
pub fn run_command<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let out_path = match &cli.command {
        Command::Spectrum(c) | Command::Couplings(c) | Command::Efficiency(c) | Command::PbcCompare(c) => c.out.clone(),
        Command::Dynamics(a) => a.common.out.clone(),
        Command::Sweep(a) => a.common.out.clone(),
        Command::Perturb(a) => a.common.out.clone(),
        Command::Validate(a) => a.out.clone(),
    };
    let result = match cli.command {
        Command::Spectrum(c) => load(&c).map(|r| spectrum(&r)),
        Command::Couplings(c) => load(&c).map(|r| couplings(&r)),
        Command::Dynamics(a) => load(&a.common).and_then(|r| dynamics(&r, a.basis)),
        Command::Efficiency(c) => load(&c).and_then(|r| efficiency(&r)),
        Command::Sweep(a) => load(&a.common).and_then(|r| sweep(&r, a.perturbative, a.sequential)),
        Command::Perturb(a) => load(&a.common).and_then(|r| perturb(&r, a.width)),
        Command::PbcCompare(c) => load(&c).and_then(|r| pbc_compare(&r)),
        Command::Validate(_) => Ok(validate()),
    };
    match result.and_then(|o| write_output(out_path, o, stdout)) {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Numerical(m)) => {
            let _ = writeln!(stderr, "numerical error: {m}");
            EXIT_NUMERICAL
        }
        Err(Failure::Io(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_CONFIG
        }
    }
}

fn write_output(path: Option<PathBuf>, o: Output, stdout: &mut dyn Write) -> Outcome<i32> {
    match path {
        Some(p) => std::fs::write(&p, &o.text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))?,
        None => stdout.write_all(o.text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))?,
    }
    Ok(o.code)
}

fn load(c: &Common) -> Outcome<Resolved> {
    let text = std::fs::read_to_string(&c.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", c.config.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.apply(&Overrides {
        n_sites: c.n_sites,
        delta: c.delta,
        boundary: c.boundary.map(|b| match b {
            BoundaryArg::Moebius => BoundaryKey::Moebius,
            BoundaryArg::Periodic => BoundaryKey::Periodic,
        }),
        omega: c.omega,
        kappa: c.kappa,
        gamma: c.gamma,
        coupling_j: c.coupling_j,
    });
    Ok(cfg.resolve()?)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("summary serializes");
    s.push('\n');
    s
}

fn spectrum(r: &Resolved) -> Output {
    let mut t = Table::new(&["m", "k", "eps_k"]);
    for e in &mode_table(&r.system.ring).entries {
        t.push(vec![e.index_m.into(), e.momentum_k.into(), e.energy_eps_k.into()]);
    }
    Output::ok(emit_csv(&t))
}

fn couplings(r: &Resolved) -> Output {
    let mut t = Table::new(&["k", "abs_h_a", "abs_h_b"]);
    for row in coupling_report(&r.system.ring) {
        t.push(vec![row.k.into(), row.abs_h_a.into(), row.abs_h_b.into()]);
    }
    Output::ok(emit_csv(&t))
}

fn dynamics(r: &Resolved, basis: BasisArg) -> Outcome<Output> {
    let gen = match basis {
        BasisArg::Momentum => assemble_momentum_generator(&r.system),
        BasisArg::Site => assemble_site_generator(&r.system),
    };
    let traj = propagate(&gen, &AmplitudeState::photon(gen.dimension()), &r.propagation)?;
    let donors = traj.donor_population();
    let mut t = Table::new(&["t_xi", "t_ps", "p_photon", "p_acceptor", "p_donors", "norm2", "eta_cum", "loss_cum"]);
    for (i, s) in traj.samples.iter().enumerate() {
        t.push(vec![
            s.time.into(),
            r.scale.time_to_ps(s.time).into(),
            s.population(gen.photon_index()).into(),
            s.population(gen.acceptor_index()).into(),
            donors[i].into(),
            s.norm_sqr().into(),
            traj.eta_series[i].into(),
            traj.loss_series[i].into(),
        ]);
    }
    Ok(Output::ok(emit_csv(&t)))
}

#[derive(Serialize)]
struct TailSummary {
    window_xi: [f64; 2],
    rate: f64,
    r_squared: f64,
    samples: usize,
}

#[derive(Serialize)]
struct OptimumSummary {
    parameter: &'static str,
    argmax: f64,
    eta: f64,
    converged: bool,
}

#[derive(Serialize)]
struct EfficiencySummary {
    eta: f64,
    fluorescence_loss: f64,
    residual: f64,
    converged: bool,
    terminated_by: &'static str,
    step_dt: f64,
    end_time_xi: f64,
    end_time_ps: f64,
    tail_fit: Option<TailSummary>,
    optimum: Option<OptimumSummary>,
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ResidualBelowTol => "residual_below_tol",
        Termination::TMaxReached => "t_max_reached",
    }
}

fn efficiency(r: &Resolved) -> Outcome<Output> {
    let gen = assemble_momentum_generator(&r.system);
    let traj = propagate(&gen, &AmplitudeState::photon(gen.dimension()), &r.propagation)?;
    let residual = traj.residual();
    let converged = !(traj.terminated_by == Termination::TMaxReached && residual > NONCONVERGED_RESIDUAL);
    let window = r.tail_window.unwrap_or_else(|| default_tail_window(traj.end_time()));
    let tail_fit = tail_decay_fit(&acceptor_population(&traj), window).ok().map(|f| TailSummary {
        window_xi: [window.0, window.1],
        rate: f.rate,
        r_squared: f.r_squared,
        samples: f.samples,
    });
    let optimum = match r.optimize {
        Some((param, bracket)) => {
            let o = maximize_efficiency(&r.system, param, bracket, &r.propagation)?;
            Some(OptimumSummary {
                parameter: match param {
                    OptimizeParameter::Delta => "detuning",
                    OptimizeParameter::DimerizationDelta => "dimerization",
                    OptimizeParameter::Kappa => "kappa",
                },
                argmax: o.argmax,
                eta: o.eta,
                converged: o.converged,
            })
        }
        None => None,
    };
    let all_converged = converged && optimum.as_ref().map_or(true, |o| o.converged);
    let summary = EfficiencySummary {
        eta: traj.eta_accumulated,
        fluorescence_loss: traj.fluorescence_loss,
        residual,
        converged,
        terminated_by: termination_name(traj.terminated_by),
        step_dt: traj.step_dt,
        end_time_xi: traj.end_time(),
        end_time_ps: r.scale.time_to_ps(traj.end_time()),
        tail_fit,
        optimum,
    };
    Ok(Output { text: json(&summary), code: if all_converged { EXIT_OK } else { EXIT_NUMERICAL } })
}

fn sweep(r: &Resolved, perturbative: bool, sequential: bool) -> Outcome<Output> {
    let (deltas, detunings) = r
        .sweep
        .clone()
        .ok_or_else(|| Failure::Config("config key `sweep`: required by the sweep command".into()))?;
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let s = if perturbative {
        sweep_detuning_perturbative(&r.system, &deltas, &detunings, exec)?
    } else {
        sweep_detuning(&r.system, &deltas, &detunings, &r.propagation, exec)?
    };
    let mut t = Table::new(&["delta", "detuning", "eta", "converged"]);
    for ((p, &eta), &ok) in s.grid.iter().zip(&s.eta_values).zip(&s.converged_flags) {
        t.push(vec![p[0].into(), p[1].into(), eta.into(), ok.into()]);
    }
    Ok(Output::ok(emit_csv(&t)))
}

#[derive(Serialize)]
struct PerturbSummary {
    omega_b: [f64; 2],
    omega_a: [f64; 2],
    lamb_shift: f64,
    decay_rate: f64,
    lorentzian_width: f64,
    lorentzian_lamb_shift: f64,
    lorentzian_decay_rate: f64,
    eta_perturbative: Option<f64>,
    eta_status: String,
}

fn perturb(r: &Resolved, width: Option<f64>) -> Outcome<Output> {
    let sys = &r.system;
    let sol = solve(sys)?;
    let ww = ww_rates(sys)?;
    let width = width.unwrap_or(sys.fluorescence_kappa);
    let lor = ww_rates_lorentzian(sys, width)?;
    let (eta, status) = match perturbative_efficiency(&sol, sys.charge_sep_gamma) {
        Ok(v) if (0.0..=1.0).contains(&v) => (Some(v), "ok".to_string()),
        Ok(v) => (Some(v), "outside_unit_interval".to_string()),
        Err(Error::DivergentIntegral(m)) => (None, format!("divergent: {m}")),
        Err(e) => return Err(e.into()),
    };
    let summary = PerturbSummary {
        omega_b: [sol.freqs.omega_b.re, sol.freqs.omega_b.im],
        omega_a: [sol.freqs.omega_a.re, sol.freqs.omega_a.im],
        lamb_shift: ww.lamb_shift,
        decay_rate: ww.decay_rate,
        lorentzian_width: width,
        lorentzian_lamb_shift: lor.lamb_shift,
        lorentzian_decay_rate: lor.decay_rate,
        eta_perturbative: eta,
        eta_status: status,
    };
    Ok(Output::ok(json(&summary)))
}

type Outcome<T> = std::result::Result<T, Failure>;

pub const PBC_TOLERANCE: f64 = 1e-8;

#[derive(Serialize)]
struct PbcSummary {
    samples: usize,
    max_acceptor_population_difference: f64,
    max_amplitude_difference: f64,
    tolerance: f64,
    pass: bool,
}

fn pbc_compare(r: &Resolved) -> Outcome<Output> {
    let reduced = pbc_effective_generator(&r.system)?;
    let full = assemble_site_generator(&r.system);
    let a = propagate(&full, &AmplitudeState::photon(full.dimension()), &r.propagation)?;
    let b = propagate(&reduced, &AmplitudeState::photon(3), &r.propagation)?;
    let mut pa: f64 = 0.0;
    let mut amp: f64 = 0.0;
    let mut aligned = a.samples.len() == b.samples.len();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        aligned &= x.time == y.time;
        pa = pa.max((x.population(1) - y.population(1)).abs());
        for i in [0, 1] {
            amp = amp.max((x.amplitudes[i] - y.amplitudes[i]).norm());
        }
    }
    let pass = aligned && pa < PBC_TOLERANCE && amp < PBC_TOLERANCE;
    let summary = PbcSummary {
        samples: a.samples.len().min(b.samples.len()),
        max_acceptor_population_difference: pa,
        max_amplitude_difference: amp,
        tolerance: PBC_TOLERANCE,
        pass,
    };
    Ok(Output { text: json(&summary), code: if pass { EXIT_OK } else { EXIT_VALIDATION } })
}

fn reference_system(n: usize, delta: f64, boundary: Boundary) -> SystemSpec {
    let ring = RingSpec::new(n, 1.0, delta, boundary).expect("valid ring");
    SystemSpec::new(ring, -6.0, -6.0, 1.0, 0.3, 0.3).expect("valid system")
}

fn check_spectrum() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for n in [4, 6, 8, 10, 12, 16] {
        for delta in [0.0, 0.3, 0.6, 1.0] {
            for boundary in [Boundary::Moebius, Boundary::Periodic] {
                let ring = RingSpec::new(n, 1.0, delta, boundary).expect("valid ring");
                let mut e = mode_table(&ring).mode_energies();
                e.sort_by(f64::total_cmp);
                match dense_hermitian_eigenvalues(&site_hamiltonian(&ring)) {
                    Ok(b) => {
                        for (x, y) in e.iter().zip(&b) {
                            worst = worst.max((x - y).abs());
                        }
                    }
                    Err(_) => worst = f64::INFINITY,
                }
            }
        }
    }
    (worst < 1e-10, format!("max |analytic - brute force| {worst:.2e} (tol 1e-10)"))
}

fn check_modes() -> (bool, String) {
    let mut unit: f64 = 0.0;
    let mut diag: f64 = 0.0;
    let mut sum_rule: f64 = 0.0;
    for n in [8, 10, 200] {
        for delta in [0.0, 0.6] {
            for boundary in [Boundary::Moebius, Boundary::Periodic] {
                let ring = RingSpec::new(n, 1.0, delta, boundary).expect("valid ring");
                let t = mode_table(&ring);
                let w = &t.transform_w;
                unit = unit.max(unitarity_defect(w));
                let d = w * site_hamiltonian(&ring) * w.adjoint();
                let target = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    2 * t.n_modes(),
                    t.mode_energies().into_iter().map(|e| C64::new(e, 0.0)),
                ));
                diag = diag.max(max_abs(&(d - target)));
                let total: f64 = t.couplings().iter().map(|h| h.norm_sqr()).sum();
                sum_rule = sum_rule.max((total - n as f64).abs());
            }
        }
    }
    (
        unit < 1e-12 && diag < 1e-10 && sum_rule < 1e-9,
        format!("unitarity {unit:.2e} (tol 1e-12), diagonalization {diag:.2e} (tol 1e-10), sum rule {sum_rule:.2e} (tol 1e-9)"),
    )
}

fn check_pbc() -> Result<(bool, String)> {
    let sys = reference_system(8, 0.0, Boundary::Periodic);
    let cfg = PropagationConfig::default();
    let full = assemble_site_generator(&sys);
    let a = propagate(&full, &AmplitudeState::photon(full.dimension()), &cfg)?;
    let b = propagate(&pbc_effective_generator(&sys)?, &AmplitudeState::photon(3), &cfg)?;
    let mut worst: f64 = 0.0;
    for (x, y) in a.samples.iter().zip(&b.samples) {
        for i in [0, 1] {
            worst = worst.max((x.amplitudes[i] - y.amplitudes[i]).norm());
        }
    }
    let ok = a.samples.len() == b.samples.len() && worst < 1e-8;
    Ok((ok, format!("max amplitude difference {worst:.2e} (tol 1e-8)")))
}

fn check_conservation() -> Result<(bool, String)> {
    let cfg = PropagationConfig::default();
    let mut worst: f64 = 0.0;
    for delta in [0.0, 0.3, 0.6] {
        let r = transfer_efficiency(&assemble_momentum_generator(&reference_system(8, delta, Boundary::Moebius)), &cfg)?;
        worst = worst.max((r.eta + r.fluorescence_loss + r.residual - 1.0).abs());
    }
    let mut lossless = reference_system(8, 0.3, Boundary::Moebius);
    lossless.charge_sep_gamma = 0.0;
    lossless.fluorescence_kappa = 0.0;
    let gen = assemble_momentum_generator(&lossless);
    let traj = propagate(&gen, &AmplitudeState::photon(gen.dimension()), &PropagationConfig { t_max: 100.0, ..cfg })?;
    let drift = traj.samples.iter().map(|s| (s.norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
    Ok((worst < 1e-6 && drift < 1e-9, format!("budget defect {worst:.2e} (tol 1e-6), lossless drift {drift:.2e} (tol 1e-9)")))
}

fn check_basis() -> Result<(bool, String)> {
    let cfg = PropagationConfig::default();
    let sys = reference_system(8, 0.6, Boundary::Moebius);
    let site = assemble_site_generator(&sys);
    let mom = assemble_momentum_generator(&sys);
    let t = momentum_transform(&mode_table(&sys.ring));
    let a = propagate(&site, &AmplitudeState::photon(site.dimension()), &cfg)?;
    let b = propagate(&mom, &AmplitudeState::photon(mom.dimension()), &cfg)?;
    let mut amp: f64 = 0.0;
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let mapped = &t * nalgebra::DVector::from_vec(x.amplitudes.clone());
        for (u, v) in mapped.iter().zip(&y.amplitudes) {
            amp = amp.max((u - v).norm());
        }
    }
    let eta = (a.eta_accumulated - b.eta_accumulated).abs();
    Ok((amp < 1e-10 && eta < 1e-8, format!("amplitude difference {amp:.2e} (tol 1e-10), eta difference {eta:.2e} (tol 1e-8)")))
}

fn check_ww_closed_form() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (n, j, kappa, omega) in [(8, 1.0, 0.3, -6.0), (16, 0.3, 0.1, -1.0), (40, 0.05, 1.0, 3.0)] {
        let ring = RingSpec::new(n, 1.0, 0.4, Boundary::Periodic)?;
        let sys = SystemSpec::new(ring, omega, -6.0, j, 0.3, kappa)?;
        let expect = n as f64 * j * j * kappa / ((omega - 2.0f64).powi(2) + kappa * kappa);
        worst = worst.max((ww_rates(&sys)?.decay_rate - expect).abs());
    }
    Ok((worst < 1e-10, format!("periodic decay rate vs closed form {worst:.2e} (tol 1e-10)")))
}

fn validate() -> Output {
    let checks: Vec<(&str, Result<(bool, String)>)> = vec![
        ("spectrum", Ok(check_spectrum())),
        ("mode transform", Ok(check_modes())),
        ("periodic reduction", check_pbc()),
        ("conservation", check_conservation()),
        ("basis independence", check_basis()),
        ("decay rate closed form", check_ww_closed_form()),
    ];
    let mut text = String::new();
    let mut all = true;
    for (name, r) in checks {
        let (ok, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        text.push_str(&format!("{} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" }));
    }
    Output { text, code: if all { EXIT_OK } else { EXIT_VALIDATION } }
}
