//! Second-order multi-scale perturbation theory for the photon -> ring ->
//! acceptor problem, with the initial condition `|1_b>`.
//!
//! Couplings of mode `k` are `J_k = J h_k` (photon) and `xi_k = xi h_k`
//! (acceptor). Bare energies carry their losses: `eps_A' = eps_A - i Gamma`,
//! `eps_k - i kappa` for the upper band and `-eps_k - i kappa` for the lower
//! band. First- and third-order frequency corrections vanish identically, so
//! only the second-order shifts are represented; the bookkeeping parameter is
//! fixed to one.

use crate::ring::{mode_table, ModeTable};
use crate::system::SystemSpec;
use crate::propagator::AmplitudeState;
use crate::{Error, Result, C64};

/// Smallest admissible modulus of any perturbative denominator.
pub const RESONANCE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizedFrequencies {
    pub omega_b: C64,
    pub omega_a: C64,
    pub omega_ak: Vec<C64>,
    pub omega_bk: Vec<C64>,
}

impl RenormalizedFrequencies {
    /// Mode frequencies in generator order (`A_k` then `B_k`).
    pub fn modes(&self) -> impl Iterator<Item = C64> + '_ {
        self.omega_ak.iter().chain(self.omega_bk.iter()).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSolution {
    pub freqs: RenormalizedFrequencies,
    pub const_a_b: C64,
    pub const_a_a: C64,
    pub const_b_ak: Vec<C64>,
    pub const_b_bk: Vec<C64>,
    pub coupling_j_ak: Vec<C64>,
    pub coupling_j_bk: Vec<C64>,
    pub coupling_xi_ak: Vec<C64>,
    pub coupling_xi_bk: Vec<C64>,
    /// Bare photon frequency.
    pub omega: f64,
    /// Bare acceptor energy including charge separation, `eps_A - i Gamma`.
    pub acceptor_bare: C64,
    /// Bare mode energies including fluorescence, `A_k` then `B_k`.
    pub mode_bare: Vec<C64>,
}

/// Bare mode data in generator order.
struct Modes {
    bare: Vec<C64>,
    j: Vec<C64>,
    xi: Vec<C64>,
}

impl Modes {
    fn new(sys: &SystemSpec, table: &ModeTable) -> Self {
        let kappa = sys.fluorescence_kappa;
        let bare = table
            .mode_energies()
            .into_iter()
            .map(|e| C64::new(e, -kappa))
            .collect();
        let h = table.couplings();
        Self {
            bare,
            j: h.iter().map(|z| z * sys.photon_coupling_j).collect(),
            xi: h.iter().map(|z| z * sys.acceptor_coupling_xi).collect(),
        }
    }
}

fn acceptor_bare(sys: &SystemSpec) -> C64 {
    C64::new(sys.acceptor_energy, -sys.charge_sep_gamma)
}

fn guard(d: C64, what: &str) -> Result<C64> {
    if d.norm() < RESONANCE_GUARD {
        Err(Error::Degenerate(format!(
            "denominator {what} vanishes (|d| = {:e}); use kappa > 0 or Gamma > 0 to regularize the resonance",
            d.norm()
        )))
    } else {
        Ok(d)
    }
}

fn check_denominators(sys: &SystemSpec, modes: &Modes) -> Result<()> {
    let omega = C64::new(sys.photon_omega, 0.0);
    let ea = acceptor_bare(sys);
    guard(omega - ea, "omega - eps_A'")?;
    for &e in &modes.bare {
        guard(omega - e, "omega - E_k")?;
        guard(ea - e, "eps_A' - E_k")?;
    }
    Ok(())
}

fn split(v: Vec<C64>) -> (Vec<C64>, Vec<C64>) {
    let half = v.len() / 2;
    let mut a = v;
    let b = a.split_off(half);
    (a, b)
}

fn frequencies_from(sys: &SystemSpec, modes: &Modes) -> RenormalizedFrequencies {
    let omega = C64::new(sys.photon_omega, 0.0);
    let ea = acceptor_bare(sys);
    let mut omega_b = omega;
    let mut omega_a = ea;
    let mut mode_freqs = Vec::with_capacity(modes.bare.len());
    for ((&e, j), x) in modes.bare.iter().zip(&modes.j).zip(&modes.xi) {
        omega_b += j.norm_sqr() / (omega - e);
        omega_a += x.norm_sqr() / (ea - e);
        mode_freqs.push(e + x.norm_sqr() / (e - ea) + j.norm_sqr() / (e - omega));
    }
    let (omega_ak, omega_bk) = split(mode_freqs);
    RenormalizedFrequencies { omega_b, omega_a, omega_ak, omega_bk }
}

/// Second-order renormalized frequencies `Omega_b`, `Omega_A`, `Omega_Ak`, `Omega_Bk`.
pub fn renormalized_frequencies(sys: &SystemSpec) -> Result<RenormalizedFrequencies> {
    let table = mode_table(&sys.ring);
    let modes = Modes::new(sys, &table);
    check_denominators(sys, &modes)?;
    Ok(frequencies_from(sys, &modes))
}

/// Amplitude constants fixed by `alpha_b(0) = 1`, all others zero.
pub fn perturbation_constants(
    sys: &SystemSpec,
    freqs: &RenormalizedFrequencies,
) -> Result<PerturbationSolution> {
    let table = mode_table(&sys.ring);
    let modes = Modes::new(sys, &table);
    check_denominators(sys, &modes)?;

    let omega = C64::new(sys.photon_omega, 0.0);
    let ea = acceptor_bare(sys);
    let mut a_b = C64::new(1.0, 0.0);
    let mut direct = C64::new(0.0, 0.0);
    let mut via_photon = C64::new(0.0, 0.0);
    let mut b = Vec::with_capacity(modes.bare.len());
    for ((&e, &j), &x) in modes.bare.iter().zip(&modes.j).zip(&modes.xi) {
        let dp = omega - e;
        a_b -= j.norm_sqr() / (dp * dp);
        direct += j * x.conj() / (dp * (ea - e));
        via_photon += j * x.conj() / dp;
        b.push(-j / dp);
    }
    let a_a = -direct - via_photon / (omega - ea);

    let (const_b_ak, const_b_bk) = split(b);
    let (coupling_j_ak, coupling_j_bk) = split(modes.j);
    let (coupling_xi_ak, coupling_xi_bk) = split(modes.xi);
    Ok(PerturbationSolution {
        freqs: freqs.clone(),
        const_a_b: a_b,
        const_a_a: a_a,
        const_b_ak,
        const_b_bk,
        coupling_j_ak,
        coupling_j_bk,
        coupling_xi_ak,
        coupling_xi_bk,
        omega: sys.photon_omega,
        acceptor_bare: ea,
        mode_bare: modes.bare,
    })
}

/// Frequencies and constants in one call.
pub fn solve(sys: &SystemSpec) -> Result<PerturbationSolution> {
    let freqs = renormalized_frequencies(sys)?;
    perturbation_constants(sys, &freqs)
}

impl PerturbationSolution {
    fn b_constants(&self) -> impl Iterator<Item = C64> + '_ {
        self.const_b_ak.iter().chain(&self.const_b_bk).copied()
    }

    fn j(&self) -> impl Iterator<Item = C64> + '_ {
        self.coupling_j_ak.iter().chain(&self.coupling_j_bk).copied()
    }

    fn xi(&self) -> impl Iterator<Item = C64> + '_ {
        self.coupling_xi_ak.iter().chain(&self.coupling_xi_bk).copied()
    }

    /// `alpha_b(t) = sum c_i e^{-i Omega_i t}` as `(c_i, Omega_i)` pairs.
    pub fn photon_terms(&self) -> Vec<(C64, C64)> {
        let omega = C64::new(self.omega, 0.0);
        let mut terms = vec![(self.const_a_b, self.freqs.omega_b)];
        for (((b, j), e), f) in self.b_constants().zip(self.j()).zip(&self.mode_bare).zip(self.freqs.modes()) {
            terms.push((b * j.conj() / (e - omega), f));
        }
        terms
    }

    /// `alpha_A(t) = sum c_i e^{-i Omega_i t}` as `(c_i, Omega_i)` pairs.
    pub fn acceptor_terms(&self) -> Vec<(C64, C64)> {
        let omega = C64::new(self.omega, 0.0);
        let ea = self.acceptor_bare;
        let mut terms = vec![(self.const_a_a, self.freqs.omega_a)];
        let mut mediated = C64::new(0.0, 0.0);
        for ((((b, j), x), e), f) in self
            .b_constants()
            .zip(self.j())
            .zip(self.xi())
            .zip(&self.mode_bare)
            .zip(self.freqs.modes())
        {
            terms.push((b * x.conj() / (e - ea), f));
            mediated += j * x.conj() / (omega - e);
        }
        terms.push((self.const_a_b * mediated / (omega - ea), self.freqs.omega_b));
        terms
    }

    /// Terms of the mode amplitude with generator index `2 + i`.
    pub fn mode_terms(&self, i: usize) -> [(C64, C64); 2] {
        let omega = C64::new(self.omega, 0.0);
        let b = self.b_constants().nth(i).expect("mode index in range");
        let j = self.j().nth(i).expect("mode index in range");
        let f = self.freqs.modes().nth(i).expect("mode index in range");
        [(b, f), (self.const_a_b * j / (omega - self.mode_bare[i]), self.freqs.omega_b)]
    }
}

fn evaluate(terms: &[(C64, C64)], t: f64) -> C64 {
    terms
        .iter()
        .map(|&(c, f)| c * (C64::new(0.0, -t) * f).exp())
        .sum()
}

/// Closed-form amplitudes at time `t`, ordered as the momentum-basis
/// generator: photon, acceptor, `A_k`, `B_k`.
pub fn perturbative_amplitudes(sol: &PerturbationSolution, t: f64) -> AmplitudeState {
    let n = sol.mode_bare.len();
    let mut amplitudes = Vec::with_capacity(n + 2);
    amplitudes.push(evaluate(&sol.photon_terms(), t));
    amplitudes.push(evaluate(&sol.acceptor_terms(), t));
    let omega = C64::new(sol.omega, 0.0);
    let phase_b = (C64::new(0.0, -t) * sol.freqs.omega_b).exp();
    for (((b, j), e), f) in sol.b_constants().zip(sol.j()).zip(&sol.mode_bare).zip(sol.freqs.modes()) {
        let own = b * (C64::new(0.0, -t) * f).exp();
        amplitudes.push(own + sol.const_a_b * j / (omega - e) * phase_b);
    }
    AmplitudeState { time: t, amplitudes }
}

/// `int_0^inf |sum_i c_i e^{-i Omega_i t}|^2 dt = sum_ij c_i c_j^* / (i (Omega_i - Omega_j^*))`.
///
/// Every term with a nonzero coefficient must decay (`Im Omega < 0`).
pub fn exponential_sum_integral(terms: &[(C64, C64)]) -> Result<f64> {
    let live: Vec<&(C64, C64)> = terms.iter().filter(|(c, _)| c.norm() > 0.0).collect();
    if let Some((_, f)) = live.iter().find(|(_, f)| f.im >= 0.0) {
        return Err(Error::DivergentIntegral(format!(
            "term with frequency {f} does not decay"
        )));
    }
    let i = C64::new(0.0, 1.0);
    let mut total = C64::new(0.0, 0.0);
    for &&(ci, fi) in &live {
        for &&(cj, fj) in &live {
            total += ci * cj.conj() / (i * (fi - fj.conj()));
        }
    }
    Ok(total.re)
}

/// `2 Gamma int_0^inf |alpha_A(t)|^2 dt` for the perturbative `alpha_A`.
pub fn perturbative_efficiency(sol: &PerturbationSolution, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * gamma * exponential_sum_integral(&sol.acceptor_terms())?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WwRates {
    /// `Delta' = Re(Omega_b) - omega`.
    pub lamb_shift: f64,
    /// `gamma = -Im(Omega_b)`; the photon survival decays as `e^{-2 gamma t}`.
    pub decay_rate: f64,
}

/// Lamb shift and decay rate of the photon from the discrete, kappa-broadened
/// mode sums.
pub fn ww_rates(sys: &SystemSpec) -> Result<WwRates> {
    let table = mode_table(&sys.ring);
    let modes = Modes::new(sys, &table);
    let omega = C64::new(sys.photon_omega, 0.0);
    let mut shift = C64::new(0.0, 0.0);
    for (&e, j) in modes.bare.iter().zip(&modes.j) {
        if j.norm_sqr() == 0.0 {
            continue;
        }
        shift += j.norm_sqr() / guard(omega - e, "omega - E_k")?;
    }
    Ok(WwRates { lamb_shift: shift.re, decay_rate: -shift.im })
}

/// As [`ww_rates`] but with every mode broadened into a Lorentzian of
/// half-width `width` instead of `kappa`, for continuum estimates at large N.
pub fn ww_rates_lorentzian(sys: &SystemSpec, width: f64) -> Result<WwRates> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::Config(format!("Lorentzian width must be > 0, got {width}")));
    }
    let table = mode_table(&sys.ring);
    let energies = table.mode_energies();
    let h = table.couplings();
    let mut lamb_shift = 0.0;
    let mut decay_rate = 0.0;
    for (e, h) in energies.iter().zip(&h) {
        let weight = (h * sys.photon_coupling_j).norm_sqr();
        let x = sys.photon_omega - e;
        let denom = x * x + width * width;
        lamb_shift += weight * x / denom;
        decay_rate += weight * width / denom;
    }
    Ok(WwRates { lamb_shift, decay_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Boundary, RingSpec};

    fn spec(delta: f64, boundary: Boundary, j: f64, xi: f64, gamma: f64, kappa: f64) -> SystemSpec {
        let ring = RingSpec::new(8, 1.0, delta, boundary).unwrap();
        let mut s = SystemSpec::new(ring, -6.0, -6.0, j, gamma, kappa).unwrap();
        s.acceptor_coupling_xi = xi;
        s
    }

    #[test]
    fn bare_energies_without_coupling() {
        let mut sys = spec(0.3, Boundary::Moebius, 0.0, 1.0, 0.3, 0.3);
        sys.acceptor_coupling_xi = 1e-300;
        let f = renormalized_frequencies(&sys).unwrap();
        assert_eq!(f.omega_b, C64::new(-6.0, 0.0));
        assert!((f.omega_a - C64::new(-6.0, -0.3)).norm() < 1e-12);
        let t = mode_table(&sys.ring);
        for (e, (a, b)) in t.entries.iter().zip(f.omega_ak.iter().zip(&f.omega_bk)) {
            assert!((a - C64::new(e.energy_eps_k, -0.3)).norm() < 1e-12);
            assert!((b - C64::new(-e.energy_eps_k, -0.3)).norm() < 1e-12);
        }
        let sol = perturbation_constants(&sys, &f).unwrap();
        assert_eq!(sol.const_a_b, C64::new(1.0, 0.0));
        assert!(sol.const_a_a.norm() < 1e-250);
        assert!(sol.b_constants().all(|b| b == C64::new(0.0, 0.0)));
        let a = perturbative_amplitudes(&sol, 3.7);
        let exact = C64::from_polar(1.0, 6.0 * 3.7);
        assert!((a.amplitudes[0] - exact).norm() < 1e-14);
    }

    #[test]
    fn pbc_photon_frequency_closed_form() {
        let sys = spec(0.4, Boundary::Periodic, 0.7, 1.0, 0.3, 0.2);
        let f = renormalized_frequencies(&sys).unwrap();
        let n = 8.0;
        let expected = C64::new(-6.0, 0.0)
            + n * 0.49 / C64::new(-6.0 - 2.0, 0.2);
        assert!((f.omega_b - expected).norm() < 1e-12);

        let w = ww_rates(&sys).unwrap();
        let gamma = n * 0.49 * 0.2 / ((-6.0f64 - 2.0).powi(2) + 0.04);
        assert!((w.decay_rate - gamma).abs() < 1e-12);
    }

    #[test]
    fn initial_condition_reconstruction() {
        let sys = spec(0.3, Boundary::Moebius, 0.1, 0.1, 0.3, 0.1);
        let sol = solve(&sys).unwrap();
        let psi0 = perturbative_amplitudes(&sol, 0.0);
        assert!((psi0.amplitudes[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        for z in &psi0.amplitudes[1..] {
            assert!(z.norm() < 1e-4);
        }
    }

    #[test]
    fn degenerate_denominator_is_reported() {
        // Lossless photon tuned onto an upper-band mode.
        let ring = RingSpec::new(8, 1.0, 0.3, Boundary::Moebius).unwrap();
        let e0 = mode_table(&ring).entries[0].energy_eps_k;
        let sys = SystemSpec::new(ring, e0, -6.0, 0.5, 0.0, 0.0).unwrap();
        assert!(matches!(renormalized_frequencies(&sys), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_term_integral() {
        let c = C64::new(0.6, -0.2);
        let gamma0 = 0.25;
        let v = exponential_sum_integral(&[(c, C64::new(-3.0, -gamma0))]).unwrap();
        assert!((v - c.norm_sqr() / (2.0 * gamma0)).abs() < 1e-14);
        assert!(matches!(
            exponential_sum_integral(&[(c, C64::new(1.0, 0.0))]),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn zero_gamma_zero_efficiency() {
        let sys = spec(0.3, Boundary::Moebius, 0.1, 0.1, 0.0, 0.1).with_detuning(0.5);
        let sol = solve(&sys).unwrap();
        assert_eq!(perturbative_efficiency(&sol, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lorentzian_with_kappa_width_matches_discrete() {
        let sys = spec(0.6, Boundary::Moebius, 0.3, 1.0, 0.3, 0.25);
        let a = ww_rates(&sys).unwrap();
        let b = ww_rates_lorentzian(&sys, 0.25).unwrap();
        assert!((a.lamb_shift - b.lamb_shift).abs() < 1e-12);
        assert!((a.decay_rate - b.decay_rate).abs() < 1e-12);
        let none = ww_rates(&spec(0.6, Boundary::Moebius, 0.0, 1.0, 0.3, 0.25)).unwrap();
        assert_eq!(none.lamb_shift, 0.0);
        assert_eq!(none.decay_rate, 0.0);
    }

    #[test]
    fn photon_inherits_decay() {
        let f = renormalized_frequencies(&spec(0.3, Boundary::Moebius, 0.5, 1.0, 0.3, 0.2)).unwrap();
        assert!(f.omega_b.im < 0.0);
    }
}
