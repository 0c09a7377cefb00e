//! Photon + acceptor + donor ring in the single-excitation subspace, assembled
//! as a non-Hermitian effective generator.
//!
//! Basis ordering is always photon, acceptor, then donors (sites, modes, or the
//! single bright mode of a periodic ring). Losses enter as `-i Gamma` on the
//! acceptor and `-i kappa` on every donor state; the photon does not decay.

use std::fmt;

use crate::linalg::CMatrix;
use crate::ring::{mode_table, site_hamiltonian, Boundary, ModeTable, RingSpec};
use crate::{Error, Result, C64};

pub const PHOTON: usize = 0;
pub const ACCEPTOR: usize = 1;
pub const FIRST_DONOR: usize = 2;

/// Full parameter set of the light-harvesting system, in units of xi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub ring: RingSpec,
    pub photon_omega: f64,
    pub acceptor_energy: f64,
    pub photon_coupling_j: f64,
    pub acceptor_coupling_xi: f64,
    pub charge_sep_gamma: f64,
    pub fluorescence_kappa: f64,
}

impl SystemSpec {
    /// Build a spec with `acceptor_coupling_xi = 1` (the energy unit).
    pub fn new(
        ring: RingSpec,
        photon_omega: f64,
        acceptor_energy: f64,
        photon_coupling_j: f64,
        charge_sep_gamma: f64,
        fluorescence_kappa: f64,
    ) -> Result<Self> {
        let spec = Self {
            ring,
            photon_omega,
            acceptor_energy,
            photon_coupling_j,
            acceptor_coupling_xi: 1.0,
            charge_sep_gamma,
            fluorescence_kappa,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("photon_omega", self.photon_omega),
            ("acceptor_energy", self.acceptor_energy),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        let nonneg = [
            ("photon_coupling_j", self.photon_coupling_j),
            ("charge_sep_gamma", self.charge_sep_gamma),
            ("fluorescence_kappa", self.fluorescence_kappa),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.acceptor_coupling_xi.is_finite() && self.acceptor_coupling_xi > 0.0) {
            return Err(Error::Config(format!(
                "acceptor_coupling_xi must be finite and > 0, got {}",
                self.acceptor_coupling_xi
            )));
        }
        Ok(())
    }

    pub fn with_ring(&self, ring: RingSpec) -> Self {
        Self { ring, ..*self }
    }

    /// Set the photon frequency from the detuning `omega - epsilon_A`.
    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self { photon_omega: self.acceptor_energy + detuning, ..*self }
    }

    pub fn detuning(&self) -> f64 {
        self.photon_omega - self.acceptor_energy
    }

    /// Scale both photon and acceptor couplings by `s`.
    pub fn with_scaled_couplings(&self, s: f64) -> Self {
        Self {
            photon_coupling_j: self.photon_coupling_j * s,
            acceptor_coupling_xi: self.acceptor_coupling_xi * s,
            ..*self
        }
    }

    pub fn dimension(&self) -> usize {
        self.ring.n_sites() + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Site,
    Momentum,
    PbcEffective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    Photon,
    Acceptor,
    /// Donor site, 1-based.
    Site(usize),
    /// Upper-band mode with grid index `m`.
    ModeA(usize),
    /// Lower-band mode with grid index `m`.
    ModeB(usize),
    /// Uniform (zero-momentum) mode of a periodic ring.
    UniformMode,
}

impl BasisLabel {
    pub fn is_donor(&self) -> bool {
        !matches!(self, BasisLabel::Photon | BasisLabel::Acceptor)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Photon => f.write_str("photon"),
            BasisLabel::Acceptor => f.write_str("acceptor"),
            BasisLabel::Site(j) => write!(f, "d{j}"),
            BasisLabel::ModeA(m) => write!(f, "A{m}"),
            BasisLabel::ModeB(m) => write!(f, "B{m}"),
            BasisLabel::UniformMode => f.write_str("beta0"),
        }
    }
}

/// Non-Hermitian single-excitation Hamiltonian `M`; amplitudes obey
/// `i d psi/dt = M psi`.
#[derive(Debug, Clone)]
pub struct EffectiveGenerator {
    pub basis: Basis,
    pub matrix: CMatrix,
    pub labels: Vec<BasisLabel>,
}

impl EffectiveGenerator {
    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn photon_index(&self) -> usize {
        PHOTON
    }

    pub fn acceptor_index(&self) -> usize {
        ACCEPTOR
    }

    pub fn donor_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_donor())
            .map(|(i, _)| i)
    }

    /// Population loss rate `-2 Im M_ii` of each basis state.
    pub fn loss_rates(&self) -> Vec<f64> {
        (0..self.dimension())
            .map(|i| -2.0 * self.matrix[(i, i)].im)
            .collect()
    }
}

fn decayed(energy: f64, rate: f64) -> C64 {
    C64::new(energy, -rate)
}

/// Generator in the Bloch-mode basis: `(photon, acceptor, A_k..., B_k...)`.
pub fn assemble_momentum_generator(sys: &SystemSpec) -> EffectiveGenerator {
    let table = mode_table(&sys.ring);
    assemble_momentum_generator_with(sys, &table)
}

/// As [`assemble_momentum_generator`], reusing a precomputed mode table.
pub fn assemble_momentum_generator_with(sys: &SystemSpec, table: &ModeTable) -> EffectiveGenerator {
    let n = sys.ring.n_sites();
    let dim = n + 2;
    let kappa = sys.fluorescence_kappa;
    let mut m = CMatrix::zeros(dim, dim);
    m[(PHOTON, PHOTON)] = C64::new(sys.photon_omega, 0.0);
    m[(ACCEPTOR, ACCEPTOR)] = decayed(sys.acceptor_energy, sys.charge_sep_gamma);

    let energies = table.mode_energies();
    let couplings = table.couplings();
    for (i, (&e, &h)) in energies.iter().zip(couplings.iter()).enumerate() {
        let r = FIRST_DONOR + i;
        m[(r, r)] = decayed(e, kappa);
        m[(r, PHOTON)] = h * sys.photon_coupling_j;
        m[(PHOTON, r)] = h.conj() * sys.photon_coupling_j;
        m[(r, ACCEPTOR)] = h * sys.acceptor_coupling_xi;
        m[(ACCEPTOR, r)] = h.conj() * sys.acceptor_coupling_xi;
    }

    let cells = table.n_modes();
    let labels = [BasisLabel::Photon, BasisLabel::Acceptor]
        .into_iter()
        .chain((0..cells).map(BasisLabel::ModeA))
        .chain((0..cells).map(BasisLabel::ModeB))
        .collect();
    EffectiveGenerator { basis: Basis::Momentum, matrix: m, labels }
}

/// Generator in the site basis: `(photon, acceptor, d_1..d_N)`.
pub fn assemble_site_generator(sys: &SystemSpec) -> EffectiveGenerator {
    let n = sys.ring.n_sites();
    let dim = n + 2;
    let mut m = CMatrix::zeros(dim, dim);
    m[(PHOTON, PHOTON)] = C64::new(sys.photon_omega, 0.0);
    m[(ACCEPTOR, ACCEPTOR)] = decayed(sys.acceptor_energy, sys.charge_sep_gamma);
    let ring = site_hamiltonian(&sys.ring);
    let j = C64::new(sys.photon_coupling_j, 0.0);
    let xi = C64::new(sys.acceptor_coupling_xi, 0.0);
    for a in 0..n {
        let r = FIRST_DONOR + a;
        m[(r, PHOTON)] = j;
        m[(PHOTON, r)] = j;
        m[(r, ACCEPTOR)] = xi;
        m[(ACCEPTOR, r)] = xi;
        for b in 0..n {
            m[(r, FIRST_DONOR + b)] = ring[(a, b)];
        }
        m[(r, r)] -= C64::new(0.0, sys.fluorescence_kappa);
    }
    let labels = [BasisLabel::Photon, BasisLabel::Acceptor]
        .into_iter()
        .chain((1..=n).map(BasisLabel::Site))
        .collect();
    EffectiveGenerator { basis: Basis::Site, matrix: m, labels }
}

/// Three-level reduction `(photon, acceptor, beta_0)` of a periodic ring, where
/// `beta_0` is the uniform mode at energy `2g`.
pub fn pbc_effective_generator(sys: &SystemSpec) -> Result<EffectiveGenerator> {
    if sys.ring.boundary() != Boundary::Periodic {
        return Err(Error::Config(
            "the three-level reduction requires a periodic ring".into(),
        ));
    }
    let root_n = (sys.ring.n_sites() as f64).sqrt();
    let mut m = CMatrix::zeros(3, 3);
    m[(PHOTON, PHOTON)] = C64::new(sys.photon_omega, 0.0);
    m[(ACCEPTOR, ACCEPTOR)] = decayed(sys.acceptor_energy, sys.charge_sep_gamma);
    m[(2, 2)] = decayed(2.0 * sys.ring.hopping_g(), sys.fluorescence_kappa);
    let j = C64::new(root_n * sys.photon_coupling_j, 0.0);
    let xi = C64::new(root_n * sys.acceptor_coupling_xi, 0.0);
    m[(2, PHOTON)] = j;
    m[(PHOTON, 2)] = j;
    m[(2, ACCEPTOR)] = xi;
    m[(ACCEPTOR, 2)] = xi;
    Ok(EffectiveGenerator {
        basis: Basis::PbcEffective,
        matrix: m,
        labels: vec![BasisLabel::Photon, BasisLabel::Acceptor, BasisLabel::UniformMode],
    })
}

/// `diag(1, 1, W)`: maps site-basis amplitudes to momentum-basis amplitudes.
pub fn momentum_transform(table: &ModeTable) -> CMatrix {
    let n = table.transform_w.nrows();
    let mut t = CMatrix::zeros(n + 2, n + 2);
    t[(PHOTON, PHOTON)] = C64::new(1.0, 0.0);
    t[(ACCEPTOR, ACCEPTOR)] = C64::new(1.0, 0.0);
    t.view_mut((FIRST_DONOR, FIRST_DONOR), (n, n)).copy_from(&table.transform_w);
    t
}
