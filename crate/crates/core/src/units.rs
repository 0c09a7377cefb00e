//! Conversion between internal units (multiples of the donor-acceptor coupling
//! xi) and physical units.

/// Default value of xi in ps^-1.
pub const DEFAULT_XI_PER_PS: f64 = 10.0;

/// Unit converter parameterized by the value of xi in ps^-1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale {
    xi_per_ps: f64,
}

impl Default for UnitScale {
    fn default() -> Self {
        Self { xi_per_ps: DEFAULT_XI_PER_PS }
    }
}

impl UnitScale {
    pub fn new(xi_per_ps: f64) -> crate::Result<Self> {
        if !(xi_per_ps.is_finite() && xi_per_ps > 0.0) {
            return Err(crate::Error::Config(format!(
                "xi_scale_per_ps must be finite and > 0, got {xi_per_ps}"
            )));
        }
        Ok(Self { xi_per_ps })
    }

    pub fn xi_per_ps(&self) -> f64 {
        self.xi_per_ps
    }

    /// Energy or rate in units of xi -> ps^-1.
    pub fn rate_to_per_ps(&self, value_xi: f64) -> f64 {
        value_xi * self.xi_per_ps
    }

    pub fn rate_from_per_ps(&self, value_per_ps: f64) -> f64 {
        value_per_ps / self.xi_per_ps
    }

    /// Dimensionless xi*t -> t in ps.
    pub fn time_to_ps(&self, t_xi: f64) -> f64 {
        t_xi / self.xi_per_ps
    }

    pub fn time_from_ps(&self, t_ps: f64) -> f64 {
        t_ps * self.xi_per_ps
    }
}
