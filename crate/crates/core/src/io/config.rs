//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::eulerian::SpectralField;
use crate::field::GridSpec;
use crate::lagrangian::EnsembleSpec;
use crate::presets::InitialField;
use crate::reconstruct::{DensityRoute, ReconstructionConfig};

/// `dims` points spanning `lengths` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 3],
    pub lengths: [f64; 3],
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.dims,
            [0, 1, 2].map(|a| self.lengths[a] / self.dims[a].max(1) as f64),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSettings {
    /// Keep every n-th integration step in the table.
    pub record_every: usize,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self { record_every: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionSettings {
    pub quadrature: [usize; 3],
    pub dt: f64,
    pub density: DensityRoute,
    /// Sampling offset in cells.
    pub offset: [f64; 3],
    /// Cloud steps `(space, angle)`; defaults to 1e-4 of the domain and 1e-4 rad.
    pub cloud: Option<[f64; 2]>,
    /// Compare only where the reference energy density exceeds this fraction
    /// of its maximum.
    pub mask: Option<f64>,
}

impl Default for ReconstructionSettings {
    fn default() -> Self {
        Self {
            quadrature: [2, 4, 1],
            dt: 0.01,
            density: DensityRoute::Jacobian,
            offset: [0.5; 3],
            cloud: None,
            mask: None,
        }
    }
}

impl ReconstructionSettings {
    pub fn to_config(&self) -> ReconstructionConfig {
        let mut cfg = ReconstructionConfig::new(self.quadrature, self.dt);
        cfg.density = self.density;
        cfg.offset = self.offset;
        cfg.cloud = self
            .cloud
            .map(|[space, angle]| crate::reconstruct::CloudStep { space, angle });
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub quadrature: [usize; 3],
    pub random_fields: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            quadrature: [32, 32, 8],
            random_fields: 100,
        }
    }
}

/// Everything a CLI run needs. Fully deterministic: there is no seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub grid: GridConfig,
    pub field: InitialField,
    /// Output times for `evolve` and `reconstruct`.
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub trace: TraceSettings,
    #[serde(default)]
    pub reconstruction: ReconstructionSettings,
    #[serde(default)]
    pub verify: VerifySettings,
    pub output: Option<PathBuf>,
}

fn default_times() -> Vec<f64> {
    vec![0.0]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Structural checks. The divergence constraint is checked by [`RunConfig::build_field`].
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let grid = self.grid.spec()?;
        self.field.validate(&grid)?;
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("times must be finite".into()));
        }
        if let Some(e) = &self.ensemble {
            e.validate()?;
        }
        if self.trace.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        let r = &self.reconstruction;
        if r.quadrature.contains(&0) || !(r.dt.is_finite() && r.dt > 0.0) {
            return Err(Error::InvalidConfig(
                "reconstruction needs positive quadrature orders and dt".into(),
            ));
        }
        if self.verify.quadrature.contains(&0) {
            return Err(Error::InvalidConfig("verify quadrature orders must be positive".into()));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.grid.spec()
    }

    pub fn build_field(&self) -> Result<SpectralField> {
        self.field.build(self.grid_spec()?, self.constants)
    }

    pub fn period(&self) -> f64 {
        self.field.period(self.constants.c)
    }

    /// The plane-wave example: `eps0 = 2`, `k = 2 pi`, unit amplitude, on a
    /// 64-point line with a `16 x 16 x 8 x 4` label lattice.
    pub fn plane_wave_demo() -> Self {
        use std::f64::consts::{PI, TAU};
        let margin = 0.05;
        Self {
            constants: PhysicalConstants {
                eps0: 2.0,
                ..Default::default()
            },
            grid: GridConfig {
                dims: [1, 1, 64],
                lengths: [1.0, 1.0, 1.0],
            },
            field: InitialField::plane_wave(1.0, TAU),
            times: vec![0.25, 0.5, 1.0],
            ensemble: Some(EnsembleSpec {
                counts: [1, 1, 16, 16, 8, 4],
                lower: [0.0, 0.0, 0.0, margin, 0.0, 0.0],
                upper: [0.0, 0.0, 1.0, PI - margin, TAU, TAU],
                integrator: Default::default(),
                dt: 0.01,
                t_final: 1.0,
            }),
            trace: TraceSettings { record_every: 25 },
            reconstruction: ReconstructionSettings::default(),
            verify: VerifySettings::default(),
            output: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STANDING: &str = r#"
times = [0.0, 0.25]

[constants]
eps0 = 2.0

[grid]
dims = [1, 1, 32]
lengths = [1.0, 1.0, 1.0]

[field]
preset = "standing_wave"
amplitude = 1.0
k = [0.0, 0.0, 6.283185307179586]

[reconstruction]
quadrature = [4, 8, 2]
dt = 0.0025
density = "transport"
"#;

    #[test]
    fn parses_standing_wave() {
        let cfg = RunConfig::from_toml(STANDING).unwrap();
        assert_eq!(cfg.constants.eps0, 2.0);
        assert_eq!(cfg.constants.hbar, 1.0);
        assert!(matches!(cfg.field, InitialField::StandingWave { .. }));
        assert_eq!(cfg.reconstruction.density, DensityRoute::Transport);
        assert_eq!(cfg.reconstruction.offset, [0.5; 3]);
        assert_eq!(cfg.trace.record_every, 1);
        assert!(cfg.build_field().is_ok());
    }

    #[test]
    fn demo_round_trips_through_toml() {
        let cfg = RunConfig::plane_wave_demo();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn superposition_components() {
        let text = r#"
[grid]
dims = [1, 1, 16]
lengths = [1.0, 1.0, 1.0]

[field]
preset = "superposition"

[[field.components]]
amplitude = 1.0
k = [0.0, 0.0, 6.283185307179586]

[[field.components]]
amplitude = 0.5
k = [0.0, 0.0, -12.566370614359172]
polarization = [0.0, 1.0, 0.0]
phase = 0.3
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.field.components().len(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            RunConfig::from_toml(&STANDING.replace("times =", "tims =")),
            Err(Error::InvalidConfig(_))
        ));
        assert!(RunConfig::from_toml(&STANDING.replace("dims = [1, 1, 32]", "dims = [1, 1, 0]")).is_err());
        assert!(RunConfig::from_toml(&STANDING.replace("6.283185307179586", "5.0")).is_err());
    }
}
