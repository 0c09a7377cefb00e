//! Dimerized donor ring: site Hamiltonian, analytic Bloch spectrum, mode
//! transform and the coupling of each mode to the uniform (photon/acceptor)
//! channel.
//!
//! Sites are numbered `1..=N` in formulas and `0..N` in matrices. The bond from
//! site `j` to `j + 1` carries `g (1 - (-1)^j delta)`, so odd bonds are strong
//! for `delta > 0`. The closing bond `N -> 1` carries the same magnitude with a
//! minus sign for the Moebius boundary.
//!
//! The Moebius ring is gauge-equivalent to a cyclic ring whose bonds all carry
//! the phase `e^{i pi/N}`; its two-site unit cell is periodic over `N/2` cells,
//! which fixes the momentum grid to `4 pi m / N`, `m = 0..N/2`.

use std::f64::consts::PI;

use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// Relative threshold below which a band energy is treated as zero.
pub const ZERO_ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Moebius,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Moebius => f.write_str("moebius"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

/// Geometry and topology of the donor ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    n_sites: usize,
    hopping_g: f64,
    dimerization_delta: f64,
    boundary: Boundary,
}

fn check_n_sites(n_sites: usize) -> Result<()> {
    if n_sites < 4 || n_sites % 2 != 0 {
        return Err(Error::Config(format!(
            "n_sites must be an even integer >= 4, got {n_sites}"
        )));
    }
    Ok(())
}

impl RingSpec {
    pub fn new(
        n_sites: usize,
        hopping_g: f64,
        dimerization_delta: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        check_n_sites(n_sites)?;
        if !(hopping_g.is_finite() && hopping_g > 0.0) {
            return Err(Error::Config(format!(
                "hopping_g must be finite and > 0, got {hopping_g}"
            )));
        }
        if !(dimerization_delta.is_finite() && dimerization_delta.abs() <= 1.0) {
            return Err(Error::Config(format!(
                "dimerization delta must lie in [-1, 1], got {dimerization_delta}"
            )));
        }
        Ok(Self { n_sites, hopping_g, dimerization_delta, boundary })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hopping_g(&self) -> f64 {
        self.hopping_g
    }

    pub fn dimerization_delta(&self) -> f64 {
        self.dimerization_delta
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_cells(&self) -> usize {
        self.n_sites / 2
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.n_sites, self.hopping_g, delta, self.boundary)
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self { boundary, ..*self }
    }

    /// Uniform bond phase left after gauging away the boundary: `pi/N` for
    /// Moebius, zero for periodic.
    pub fn twist(&self) -> f64 {
        match self.boundary {
            Boundary::Moebius => PI / self.n_sites as f64,
            Boundary::Periodic => 0.0,
        }
    }

    /// Hopping on the bond from site `j` to `j + 1` (1-based, `j < N`).
    fn bond(&self, j: usize) -> f64 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        self.hopping_g * (1.0 - sign * self.dimerization_delta)
    }
}

/// Cell momenta `4 pi m / N` for `m = 0..N/2`, all in `[0, 2 pi)`.
pub fn momentum_grid(n_sites: usize) -> Result<Vec<f64>> {
    check_n_sites(n_sites)?;
    Ok((0..n_sites / 2)
        .map(|m| 4.0 * PI * m as f64 / n_sites as f64)
        .collect())
}

/// Upper-band energy `eps_k >= 0`; the lower band is `-eps_k`.
pub fn band_energy(ring: &RingSpec, k: f64) -> f64 {
    let x = 0.5 * k - ring.twist();
    let (s, c) = x.sin_cos();
    let d = ring.dimerization_delta;
    2.0 * ring.hopping_g * (c * c + d * d * s * s).sqrt()
}

/// Unit-cell phase `e^{i theta_k}`, the relative phase between the two
/// sublattices of a Bloch mode. At a zero-energy point the `delta -> 0+`
/// limit `e^{-i phi}` is returned, where `phi` is the twist.
pub fn band_phase(ring: &RingSpec, k: f64) -> C64 {
    let eps = band_energy(ring, k);
    let phi = ring.twist();
    if eps <= ZERO_ENERGY_TOL * ring.hopping_g {
        return C64::from_polar(1.0, -phi);
    }
    let d = ring.dimerization_delta;
    let sum = C64::from_polar(1.0 + d, -phi) + C64::from_polar(1.0 - d, -(k - phi));
    sum * (ring.hopping_g / eps)
}

/// Donor-ring Hamiltonian in the site basis (zero site energies).
pub fn site_hamiltonian(ring: &RingSpec) -> CMatrix {
    let n = ring.n_sites;
    let mut h = CMatrix::zeros(n, n);
    for j in 1..n {
        let t = C64::new(ring.bond(j), 0.0);
        h[(j, j - 1)] = t;
        h[(j - 1, j)] = t;
    }
    let closing = match ring.boundary {
        Boundary::Moebius => -ring.bond(n),
        Boundary::Periodic => ring.bond(n),
    };
    h[(0, n - 1)] = C64::new(closing, 0.0);
    h[(n - 1, 0)] = C64::new(closing, 0.0);
    h
}

/// Diagonal entries `e^{i j pi / N}`, `j = 1..=N`, of the gauge transform that
/// removes the Moebius sign flip.
pub fn gauge_phases(n_sites: usize) -> Result<Vec<C64>> {
    check_n_sites(n_sites)?;
    Ok((1..=n_sites)
        .map(|j| C64::from_polar(1.0, j as f64 * PI / n_sites as f64))
        .collect())
}

/// Upper-band energy gap `4 g |delta|`.
pub fn band_gap(ring: &RingSpec) -> f64 {
    4.0 * ring.hopping_g * ring.dimerization_delta.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEntry {
    pub index_m: usize,
    pub momentum_k: f64,
    pub energy_eps_k: f64,
    pub phase_theta_k: C64,
    /// Overlap of the upper-band mode with the uniform site vector.
    pub coupling_h_a: C64,
    /// Overlap of the lower-band mode with the uniform site vector.
    pub coupling_h_b: C64,
}

/// Bloch modes of the ring together with the site-to-mode transform.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub ring: RingSpec,
    pub entries: Vec<ModeEntry>,
    /// Maps site amplitudes to mode amplitudes; rows are `A_k` (upper band,
    /// ordered by `m`) followed by `B_k` (lower band).
    pub transform_w: CMatrix,
}

impl ModeTable {
    pub fn n_modes(&self) -> usize {
        self.entries.len()
    }

    /// Mode energies in row order of `transform_w`: `+eps_k` then `-eps_k`.
    pub fn mode_energies(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.energy_eps_k)
            .chain(self.entries.iter().map(|e| -e.energy_eps_k))
            .collect()
    }

    /// Coupling factors in row order of `transform_w`: `h_A` then `h_B`.
    pub fn couplings(&self) -> Vec<C64> {
        self.entries
            .iter()
            .map(|e| e.coupling_h_a)
            .chain(self.entries.iter().map(|e| e.coupling_h_b))
            .collect()
    }
}

/// Build the Bloch mode table for `ring`.
///
/// The `A_k` row has entries `e^{-ikj} e^{i(2j-1)phi} / sqrt(N)` on site
/// `2j-1` and `e^{-ikj} e^{i theta_k} e^{i 2j phi} / sqrt(N)` on site `2j`;
/// `B_k` flips the sign on even sites. Coupling factors are the row sums,
/// i.e. the expansion of the uniform vector in the mode basis.
pub fn mode_table(ring: &RingSpec) -> ModeTable {
    let n = ring.n_sites;
    let cells = ring.n_cells();
    let phi = ring.twist();
    let norm = 1.0 / (n as f64).sqrt();
    let grid = momentum_grid(n).expect("RingSpec guarantees a valid size");

    let mut w = CMatrix::zeros(n, n);
    let mut entries = Vec::with_capacity(cells);
    for (m, &k) in grid.iter().enumerate() {
        let theta = band_phase(ring, k);
        let mut h_a = C64::new(0.0, 0.0);
        let mut h_b = C64::new(0.0, 0.0);
        for j in 1..=cells {
            let odd = 2 * j - 1;
            let even = 2 * j;
            let cell = C64::from_polar(norm, -k * j as f64);
            let on_odd = cell * C64::from_polar(1.0, odd as f64 * phi);
            let on_even = cell * theta * C64::from_polar(1.0, even as f64 * phi);
            w[(m, odd - 1)] = on_odd;
            w[(m, even - 1)] = on_even;
            w[(cells + m, odd - 1)] = on_odd;
            w[(cells + m, even - 1)] = -on_even;
            h_a += on_odd + on_even;
            h_b += on_odd - on_even;
        }
        entries.push(ModeEntry {
            index_m: m,
            momentum_k: k,
            energy_eps_k: band_energy(ring, k),
            phase_theta_k: theta,
            coupling_h_a: h_a,
            coupling_h_b: h_b,
        });
    }
    ModeTable { ring: *ring, entries, transform_w: w }
}

/// Closed-form coupling factors from the geometric cell sum
/// `S_k = N^{-1/2} e^{-i phi} sum_j e^{-i (k - 2 phi) j}`, with
/// `h_A = S_k (1 + e^{i theta_k} e^{i phi})` and `h_B = S_k (1 - e^{i theta_k} e^{i phi})`.
///
/// Independent of `transform_w`; used to cross-check [`mode_table`].
pub fn analytic_couplings(ring: &RingSpec) -> Vec<(C64, C64)> {
    let n = ring.n_sites;
    let cells = ring.n_cells() as i32;
    let phi = ring.twist();
    momentum_grid(n)
        .expect("RingSpec guarantees a valid size")
        .into_iter()
        .map(|k| {
            let z = C64::from_polar(1.0, -(k - 2.0 * phi));
            let geometric = if (z - 1.0).norm() < 1e-14 {
                C64::new(cells as f64, 0.0)
            } else {
                z * (C64::new(1.0, 0.0) - z.powi(cells)) / (C64::new(1.0, 0.0) - z)
            };
            let s = geometric * C64::from_polar(1.0 / (n as f64).sqrt(), -phi);
            let twist = band_phase(ring, k) * C64::from_polar(1.0, phi);
            (s * (1.0 + twist), s * (1.0 - twist))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_hermitian_eigenvalues;
    use crate::linalg::{hermitian_defect, max_abs, unitarity_defect};

    fn ring(n: usize, delta: f64, boundary: Boundary) -> RingSpec {
        RingSpec::new(n, 1.0, delta, boundary).unwrap()
    }

    #[test]
    fn grid_values() {
        let g4 = momentum_grid(4).unwrap();
        assert_eq!(g4.len(), 2);
        assert_eq!(g4[0], 0.0);
        assert!((g4[1] - PI).abs() < 1e-15);

        let g6 = momentum_grid(6).unwrap();
        let expect = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];
        for (a, b) in g6.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        // Same set mod 2 pi as 4 pi n / N - pi + 2 pi / N for N = 6.
        let mut literal: Vec<f64> = (0..3)
            .map(|n| (4.0 * PI * n as f64 / 6.0 - PI + 2.0 * PI / 6.0).rem_euclid(2.0 * PI))
            .collect();
        literal.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for a in &g6 {
            assert!(literal.iter().any(|b| {
                let d = (a - b).rem_euclid(2.0 * PI);
                d < 1e-12 || d > 2.0 * PI - 1e-12
            }));
        }
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(matches!(momentum_grid(7), Err(Error::Config(_))));
        assert!(matches!(momentum_grid(2), Err(Error::Config(_))));
        assert!(RingSpec::new(7, 1.0, 0.0, Boundary::Moebius).is_err());
        assert!(RingSpec::new(8, 1.0, 1.5, Boundary::Moebius).is_err());
        assert!(RingSpec::new(8, 0.0, 0.0, Boundary::Moebius).is_err());
    }

    #[test]
    fn band_energy_examples() {
        let full = ring(8, 1.0, Boundary::Moebius);
        for k in [0.0, 0.3, 2.0, 5.9] {
            assert!((band_energy(&full, k) - 2.0).abs() < 1e-14);
        }
        let r4 = ring(4, 0.0, Boundary::Moebius);
        assert!((band_energy(&r4, 0.0) - 2f64.sqrt()).abs() < 1e-14);

        let half = ring(8, 0.5, Boundary::Moebius);
        let k = 2.0 * (PI / 2.0 + PI / 8.0);
        assert!((band_energy(&half, k) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn band_phase_examples() {
        let r4 = ring(4, 0.0, Boundary::Moebius);
        let p = band_phase(&r4, 0.0);
        assert!((p - C64::new(1.0, 0.0)).norm() < 1e-14);

        // Zero-energy point at delta = 0: k = pi + 2 pi / N, on grid for N = 6.
        let r6 = ring(6, 0.0, Boundary::Moebius);
        let k0 = PI + 2.0 * PI / 6.0;
        assert!(band_energy(&r6, k0) < 1e-12);
        let limit = C64::from_polar(1.0, -PI / 6.0);
        assert!((band_phase(&r6, k0) - limit).norm() < 1e-14);
        let near = ring(6, 1e-6, Boundary::Moebius);
        assert!((band_phase(&near, k0) - limit).norm() < 1e-9);
    }

    #[test]
    fn hamiltonian_spectra_n4() {
        let m = site_hamiltonian(&ring(4, 0.0, Boundary::Moebius));
        assert_eq!(hermitian_defect(&m), 0.0);
        let e = dense_hermitian_eigenvalues(&m).unwrap();
        let s = 2f64.sqrt();
        for (a, b) in e.iter().zip([-s, -s, s, s]) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = dense_hermitian_eigenvalues(&site_hamiltonian(&ring(4, 0.0, Boundary::Periodic)))
            .unwrap();
        for (a, b) in p.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_bond_pattern() {
        let r = ring(6, 0.3, Boundary::Moebius);
        let h = site_hamiltonian(&r);
        assert!((h[(1, 0)].re - 1.3).abs() < 1e-15);
        assert!((h[(2, 1)].re - 0.7).abs() < 1e-15);
        assert!((h[(0, 5)].re + 0.7).abs() < 1e-15);
        let p = site_hamiltonian(&r.with_boundary(Boundary::Periodic));
        assert!((p[(0, 5)].re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn gauge_transform_removes_boundary_sign() {
        let phases = gauge_phases(4).unwrap();
        let expect = [
            C64::from_polar(1.0, PI / 4.0),
            C64::new(0.0, 1.0),
            C64::from_polar(1.0, 3.0 * PI / 4.0),
            C64::new(-1.0, 0.0),
        ];
        for (a, b) in phases.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }

        let r = ring(8, 0.4, Boundary::Moebius);
        let u = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(gauge_phases(8).unwrap()));
        let h = site_hamiltonian(&r);
        let t = &u * &h * u.adjoint();
        let bond_phase = C64::from_polar(1.0, PI / 8.0);
        for j in 1..8 {
            let expected = r.bond(j) * bond_phase;
            assert!((t[(j, j - 1)] - expected).norm() < 1e-14);
        }
        assert!((t[(0, 7)] - r.bond(8) * bond_phase).norm() < 1e-14);

        let e1 = dense_hermitian_eigenvalues(&h).unwrap();
        let e2 = dense_hermitian_eigenvalues(&t).unwrap();
        for (a, b) in e1.iter().zip(e2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_values() {
        assert_eq!(band_gap(&ring(8, 0.5, Boundary::Moebius)), 2.0);
        assert_eq!(band_gap(&ring(8, 0.0, Boundary::Moebius)), 0.0);
    }

    #[test]
    fn gap_against_brute_force() {
        for n in [6, 10, 14, 8, 12] {
            for delta in [0.2, 0.5, 0.9] {
                let r = ring(n, delta, Boundary::Moebius);
                let e = dense_hermitian_eigenvalues(&site_hamiltonian(&r)).unwrap();
                let min_upper = e.iter().cloned().filter(|&x| x > 0.0).fold(f64::MAX, f64::min);
                let max_lower = e.iter().cloned().filter(|&x| x < 0.0).fold(f64::MIN, f64::max);
                let measured = min_upper - max_lower;
                if n % 4 == 2 {
                    assert!((measured - band_gap(&r)).abs() < 1e-9, "n={n} delta={delta}");
                } else {
                    assert!(band_gap(&r) <= measured + 1e-12);
                }
            }
        }
    }

    #[test]
    fn mode_table_is_unitary_and_diagonalizes() {
        for boundary in [Boundary::Moebius, Boundary::Periodic] {
            for n in [4, 6, 8, 10] {
                for delta in [0.0, 0.3, 0.6, 1.0] {
                    let r = ring(n, delta, boundary);
                    let t = mode_table(&r);
                    assert!(unitarity_defect(&t.transform_w) < 1e-12);
                    let d = &t.transform_w * site_hamiltonian(&r) * t.transform_w.adjoint();
                    let diag = t.mode_energies();
                    let target = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        n,
                        diag.iter().map(|&x| C64::new(x, 0.0)),
                    ));
                    assert!(max_abs(&(d - target)) < 1e-10, "{boundary} n={n} delta={delta}");
                    let sum: f64 = t.couplings().iter().map(|h| h.norm_sqr()).sum();
                    assert!((sum - n as f64).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn periodic_couples_single_mode() {
        for n in [4, 6, 8, 12] {
            for delta in [0.0, 0.3, 0.9] {
                let t = mode_table(&ring(n, delta, Boundary::Periodic));
                let h = t.couplings();
                let bright: Vec<_> = h.iter().filter(|z| z.norm() > 1e-12).collect();
                assert_eq!(bright.len(), 1);
                assert!((bright[0].norm() - (n as f64).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn moebius_couples_all_modes() {
        let t = mode_table(&ring(8, 0.0, Boundary::Moebius));
        for e in &t.entries {
            assert!(e.coupling_h_a.norm_sqr() + e.coupling_h_b.norm_sqr() > 0.0);
        }
    }

    #[test]
    fn analytic_couplings_match_projection() {
        for boundary in [Boundary::Moebius, Boundary::Periodic] {
            for n in [4, 8, 10, 16] {
                for delta in [0.0, 0.35, 0.8] {
                    let r = ring(n, delta, boundary);
                    let t = mode_table(&r);
                    for (e, (ha, hb)) in t.entries.iter().zip(analytic_couplings(&r)) {
                        assert!((e.coupling_h_a - ha).norm() < 1e-12);
                        assert!((e.coupling_h_b - hb).norm() < 1e-12);
                    }
                }
            }
        }
    }
}
