//! JSON run configuration with a strict schema.

use serde::Deserialize;

use mobius_harvest::analysis::OptimizeParameter;
use mobius_harvest::units::{UnitScale, DEFAULT_XI_PER_PS};
use mobius_harvest::{Boundary, PropagationConfig, RingSpec, SystemSpec};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("config key `{key}`: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Xi,
    PerPs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKey {
    Moebius,
    Periodic,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationBlock {
    pub step_dt: Option<f64>,
    pub t_max: Option<f64>,
    pub residual_tol: Option<f64>,
    pub sample_stride: Option<usize>,
}

/// Either an explicit list or `points` evenly spaced values on `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range(GridRange { start, stop, points }) => {
                if *points == 0 {
                    return Err(bad(key, "points must be >= 1"));
                }
                if *points == 1 {
                    vec![*start]
                } else {
                    let step = (stop - start) / (*points - 1) as f64;
                    (0..*points).map(|i| start + step * i as f64).collect()
                }
            }
        };
        if v.is_empty() {
            return Err(bad(key, "grid must not be empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad(key, "grid values must be finite"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub deltas: Vec<f64>,
    pub detunings: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeKey {
    Detuning,
    Dimerization,
    Kappa,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    pub parameter: OptimizeKey,
    pub bracket: [f64; 2],
}

/// Raw configuration as written in the file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_sites: usize,
    pub hopping_g: f64,
    pub delta: f64,
    pub boundary: BoundaryKey,
    pub omega: f64,
    pub epsilon_a: f64,
    pub coupling_j: f64,
    #[serde(default)]
    pub coupling_xi: Option<f64>,
    pub gamma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub xi_scale_per_ps: Option<f64>,
    #[serde(default)]
    pub propagation: PropagationBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub tail_window: Option<[f64; 2]>,
    #[serde(default)]
    pub optimize: Option<OptimizeBlock>,
}

/// Command-line values that replace config entries before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n_sites: Option<usize>,
    pub delta: Option<f64>,
    pub boundary: Option<BoundaryKey>,
    pub omega: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub coupling_j: Option<f64>,
}

/// Validated configuration in internal (xi) units.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub system: SystemSpec,
    pub propagation: PropagationConfig,
    pub scale: UnitScale,
    pub sweep: Option<(Vec<f64>, Vec<f64>)>,
    pub tail_window: Option<(f64, f64)>,
    pub optimize: Option<(OptimizeParameter, (f64, f64))>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n_sites {
            self.n_sites = v;
        }
        if let Some(v) = o.delta {
            self.delta = v;
        }
        if let Some(v) = o.boundary {
            self.boundary = v;
        }
        if let Some(v) = o.omega {
            self.omega = v;
        }
        if let Some(v) = o.kappa {
            self.kappa = v;
        }
        if let Some(v) = o.gamma {
            self.gamma = v;
        }
        if let Some(v) = o.coupling_j {
            self.coupling_j = v;
        }
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let scale = UnitScale::new(self.xi_scale_per_ps.unwrap_or(DEFAULT_XI_PER_PS))
            .map_err(|e| bad("xi_scale_per_ps", e))?;
        let rate = |key: &str, v: f64| -> Result<f64, ConfigError> {
            if !v.is_finite() {
                return Err(bad(key, format!("must be finite, got {v}")));
            }
            Ok(match self.units {
                Units::Xi => v,
                Units::PerPs => scale.rate_from_per_ps(v),
            })
        };
        let time = |v: f64| match self.units {
            Units::Xi => v,
            Units::PerPs => scale.time_from_ps(v),
        };
        let nonneg = |key: &str, v: f64| -> Result<f64, ConfigError> {
            let v = rate(key, v)?;
            if v < 0.0 {
                return Err(bad(key, format!("must be >= 0, got {v}")));
            }
            Ok(v)
        };

        if self.n_sites < 4 || self.n_sites % 2 != 0 {
            return Err(bad("n_sites", format!("must be an even integer >= 4, got {}", self.n_sites)));
        }
        if !(self.delta.is_finite() && self.delta.abs() <= 1.0) {
            return Err(bad("delta", format!("must lie in [-1, 1], got {}", self.delta)));
        }
        let g = rate("hopping_g", self.hopping_g)?;
        if g <= 0.0 {
            return Err(bad("hopping_g", format!("must be > 0, got {}", self.hopping_g)));
        }
        let boundary = match self.boundary {
            BoundaryKey::Moebius => Boundary::Moebius,
            BoundaryKey::Periodic => Boundary::Periodic,
        };
        let ring = RingSpec::new(self.n_sites, g, self.delta, boundary).map_err(|e| bad("n_sites", e))?;
        let xi = match self.coupling_xi {
            Some(v) => {
                let v = rate("coupling_xi", v)?;
                if v <= 0.0 {
                    return Err(bad("coupling_xi", "must be > 0"));
                }
                v
            }
            None => 1.0,
        };
        let system = SystemSpec {
            ring,
            photon_omega: rate("omega", self.omega)?,
            acceptor_energy: rate("epsilon_a", self.epsilon_a)?,
            photon_coupling_j: nonneg("coupling_j", self.coupling_j)?,
            acceptor_coupling_xi: xi,
            charge_sep_gamma: nonneg("gamma", self.gamma)?,
            fluorescence_kappa: nonneg("kappa", self.kappa)?,
        };
        system.validate().map_err(|e| ConfigError(format!("config: {e}")))?;

        let d = PropagationConfig::default();
        let p = &self.propagation;
        let propagation = PropagationConfig {
            step_dt: p.step_dt.map(time).unwrap_or(d.step_dt),
            t_max: p.t_max.map(time).unwrap_or(d.t_max),
            residual_tol: p.residual_tol.unwrap_or(d.residual_tol),
            sample_stride: p.sample_stride.unwrap_or(d.sample_stride),
        };
        propagation.validate().map_err(|e| bad("propagation", e))?;

        let sweep = match &self.sweep {
            Some(s) => {
                if s.deltas.is_empty() {
                    return Err(bad("sweep.deltas", "grid must not be empty"));
                }
                if let Some(d) = s.deltas.iter().find(|d| !(d.is_finite() && d.abs() <= 1.0)) {
                    return Err(bad("sweep.deltas", format!("values must lie in [-1, 1], got {d}")));
                }
                let det = s
                    .detunings
                    .values("sweep.detunings")?
                    .into_iter()
                    .map(|v| rate("sweep.detunings", v))
                    .collect::<Result<Vec<f64>, _>>()?;
                Some((s.deltas.clone(), det))
            }
            None => None,
        };

        let tail_window = match self.tail_window {
            Some([a, b]) => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(bad("tail_window", format!("must satisfy t0 < t1, got [{a}, {b}]")));
                }
                Some((time(a), time(b)))
            }
            None => None,
        };

        let optimize = match &self.optimize {
            Some(o) => {
                let [lo, hi] = o.bracket;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(bad("optimize.bracket", format!("must satisfy lo < hi, got [{lo}, {hi}]")));
                }
                let (param, lo, hi) = match o.parameter {
                    OptimizeKey::Detuning => (OptimizeParameter::Delta, rate("optimize.bracket", lo)?, rate("optimize.bracket", hi)?),
                    OptimizeKey::Dimerization => (OptimizeParameter::DimerizationDelta, lo, hi),
                    OptimizeKey::Kappa => (OptimizeParameter::Kappa, rate("optimize.bracket", lo)?, rate("optimize.bracket", hi)?),
                };
                Some((param, (lo, hi)))
            }
            None => None,
        };

        Ok(Resolved { system, propagation, scale, sweep, tail_window, optimize })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"{
        "n_sites": 8, "hopping_g": 1, "delta": 0, "boundary": "moebius",
        "omega": -6, "epsilon_a": -6, "coupling_j": 1, "gamma": 0.3, "kappa": 0.3
    }"#;

    #[test]
    fn fig3_config_is_valid() {
        let r = parse_config(REFERENCE).unwrap().resolve().unwrap();
        assert_eq!(r.system.ring.n_sites(), 8);
        assert_eq!(r.system.acceptor_coupling_xi, 1.0);
        assert_eq!(r.propagation, PropagationConfig::default());
        assert_eq!(r.scale.xi_per_ps(), 10.0);
    }

    #[test]
    fn odd_sites_named() {
        let e = parse_config(&REFERENCE.replace("\"n_sites\": 8", "\"n_sites\": 7")).unwrap().resolve().unwrap_err();
        assert!(e.0.contains("n_sites") && e.0.contains("even"), "{e}");
    }

    #[test]
    fn delta_range_named() {
        let e = parse_config(&REFERENCE.replace("\"delta\": 0", "\"delta\": 1.5")).unwrap().resolve().unwrap_err();
        assert!(e.0.contains("delta") && e.0.contains("[-1, 1]"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config(&REFERENCE.replace("\"kappa\"", "\"kapa\"")).unwrap_err();
        assert!(e.0.contains("kapa"), "{e}");
    }

    #[test]
    fn per_ps_units_convert() {
        let text = r#"{
            "n_sites": 8, "hopping_g": 10, "delta": 0, "boundary": "moebius",
            "omega": -60, "epsilon_a": -60, "coupling_j": 10, "gamma": 3, "kappa": 3,
            "units": "per_ps", "propagation": {"t_max": 20}
        }"#;
        let r = parse_config(text).unwrap().resolve().unwrap();
        let x = parse_config(REFERENCE).unwrap().resolve().unwrap();
        assert!((r.system.photon_omega - x.system.photon_omega).abs() < 1e-12);
        assert!((r.system.charge_sep_gamma - 0.3).abs() < 1e-12);
        assert!((r.propagation.t_max - 200.0).abs() < 1e-9);
    }

    #[test]
    fn overrides_apply_before_validation() {
        let mut c = parse_config(REFERENCE).unwrap();
        c.apply(&Overrides { delta: Some(0.6), ..Default::default() });
        assert_eq!(c.resolve().unwrap().system.ring.dimerization_delta(), 0.6);
        c.apply(&Overrides { delta: Some(2.0), ..Default::default() });
        assert!(c.resolve().is_err());
    }

    #[test]
    fn range_grid_expands() {
        let g = Grid::Range(GridRange { start: -4.0, stop: 4.0, points: 81 });
        let v = g.values("x").unwrap();
        assert_eq!(v.len(), 81);
        assert_eq!(v[0], -4.0);
        assert_eq!(v[80], 4.0);
    }
}
