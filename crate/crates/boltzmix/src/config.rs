//! Run configuration: a single JSON format, fully validated at load, with
//! defaults echoed into the run manifest.

use crate::error::{Error, Result};
use crate::grids::{lebedev_like_rule, AngularRule, SpatialGrid, VelocityGrid};
use crate::species::{AngularForm, GlobalFrame, SpeciesPair};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub m_a: f64,
    pub m_b: f64,
    pub gamma: f64,
    #[serde(default = "default_c_phi")]
    pub c_phi: [[f64; 2]; 2],
    #[serde(default = "default_one")]
    pub c_b: f64,
    #[serde(default = "default_b_form")]
    pub b_form: String,
}

fn default_c_phi() -> [[f64; 2]; 2] {
    [[1.0, 1.0], [1.0, 1.0]]
}

fn default_one() -> f64 {
    1.0
}

fn default_b_form() -> String {
    "cos_cutoff".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityGridConfig {
    /// Extent R; `None` picks 6 thermal widths of the widest Maxwellian.
    #[serde(default)]
    pub extent: Option<f64>,
    #[serde(default = "default_n_velocity")]
    pub points_per_axis: usize,
}

fn default_n_velocity() -> usize {
    16
}

impl Default for VelocityGridConfig {
    fn default() -> Self {
        Self { extent: None, points_per_axis: default_n_velocity() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialGridConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn default_dimension() -> usize {
    1
}

fn default_period() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_cells() -> usize {
    128
}

impl Default for SpatialGridConfig {
    fn default() -> Self {
        Self { dimension: 1, period: default_period(), cells: default_cells() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    #[serde(default = "default_weight_l")]
    pub weight_exponent: f64,
    /// `None` uses the midpoint of the admissible interval.
    #[serde(default)]
    pub q_tilde: Option<f64>,
}

fn default_weight_l() -> f64 {
    25.0 / 4.0
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { weight_exponent: default_weight_l(), q_tilde: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_deltas")]
    pub delta_list: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilon_list: Vec<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_deltas() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

fn default_epsilons() -> Vec<f64> {
    vec![0.04, 0.02, 0.01]
}

fn default_t_end() -> f64 {
    0.5
}

fn default_cfl() -> f64 {
    0.4
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            delta_list: default_deltas(),
            epsilon_list: default_epsilons(),
            t_end: default_t_end(),
            cfl: default_cfl(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub species: SpeciesConfig,
    #[serde(default)]
    pub velocity_grid: VelocityGridConfig,
    #[serde(default)]
    pub spatial_grid: SpatialGridConfig,
    #[serde(default = "default_angular_order")]
    pub angular_order: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff_m: f64,
    #[serde(default)]
    pub frame: FrameConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_angular_order() -> usize {
    6
}

fn default_cutoff() -> f64 {
    0.1
}

impl RunConfig {
    /// Loads and fully validates a configuration file; unknown keys are
    /// rejected by the parser, constraint violations name the field.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("parse error in {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.species()?;
        self.velocity_grid()?;
        self.angular_rule()?;
        if self.cutoff_m <= 0.0 || self.cutoff_m >= 1.0 {
            return Err(Error::Config(format!(
                "cutoff_m must lie in (0, 1), got {}",
                self.cutoff_m
            )));
        }
        if self.frame.weight_exponent < 25.0 / 4.0 {
            return Err(Error::Config("frame.weight_exponent must be >= 25/4".into()));
        }
        if let Some(q) = self.frame.q_tilde {
            let s = self.species()?;
            let lo = s.max_mass() / s.mass_sum();
            if q <= lo || q > 1.0 {
                return Err(Error::Config(format!(
                    "frame.q_tilde must lie in ({lo}, 1], got {q}"
                )));
            }
        }
        if self.study.cfl <= 0.0 || self.study.cfl > 1.0 {
            return Err(Error::Config("study.cfl must lie in (0, 1]".into()));
        }
        if self.study.t_end <= 0.0 {
            return Err(Error::Config("study.t_end must be positive".into()));
        }
        for (name, list) in [
            ("delta_list", &self.study.delta_list),
            ("epsilon_list", &self.study.epsilon_list),
        ] {
            if list.is_empty() || list.iter().any(|&x| x <= 0.0) {
                return Err(Error::Config(format!("study.{name} must be nonempty and positive")));
            }
        }
        self.spatial()?;
        Ok(())
    }

    pub fn species(&self) -> Result<SpeciesPair<f64>> {
        let b_form = match self.species.b_form.as_str() {
            "cos_cutoff" => AngularForm::CosCutoff,
            "cos_squared" => AngularForm::CosSquared,
            other => {
                return Err(Error::Config(format!(
                    "species.b_form must be cos_cutoff or cos_squared, got {other}"
                )))
            }
        };
        SpeciesPair::new(
            self.species.m_a,
            self.species.m_b,
            self.species.gamma,
            self.species.c_phi,
            self.species.c_b,
            b_form,
        )
        .map_err(|e| Error::Config(format!("species: {e}")))
    }

    /// Default extent: six thermal widths of the widest unit-temperature
    /// Maxwellian in the pair.
    pub fn resolved_extent(&self) -> f64 {
        self.velocity_grid
            .extent
            .unwrap_or_else(|| 6.0 / self.species.m_a.min(self.species.m_b).sqrt())
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid<f64>> {
        VelocityGrid::new(self.resolved_extent(), self.velocity_grid.points_per_axis)
            .map_err(|e| Error::Config(format!("velocity_grid: {e}")))
    }

    pub fn spatial(&self) -> Result<SpatialGrid<f64>> {
        SpatialGrid::new(
            self.spatial_grid.period,
            self.spatial_grid.cells,
            self.spatial_grid.dimension,
        )
        .map_err(|e| Error::Config(format!("spatial_grid: {e}")))
    }

    pub fn angular_rule(&self) -> Result<AngularRule<f64>> {
        lebedev_like_rule(self.angular_order).map_err(|e| Error::Config(format!("angular: {e}")))
    }

    pub fn global_frame(&self, theta_m: f64) -> Result<GlobalFrame<f64>> {
        let species = self.species()?;
        let q = self.frame.q_tilde.unwrap_or_else(|| GlobalFrame::default_q_tilde(&species));
        GlobalFrame::new(theta_m, q, self.frame.weight_exponent, &species)
    }

    /// Canonical JSON with all defaults resolved, used for hashing and the
    /// manifest echo.
    pub fn resolved_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        v["velocity_grid"]["extent"] = serde_json::json!(self.resolved_extent());
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("config.json");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let dir = std::env::temp_dir().join("boltzmix-cfg-min");
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_config(&dir, r#"{"species": {"m_a": 1.0, "m_b": 2.0, "gamma": 1.0}}"#);
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.velocity_grid.points_per_axis, 16);
        assert_eq!(cfg.angular_order, 6);
        assert!((cfg.resolved_extent() - 6.0).abs() < 1e-12);
        assert_eq!(cfg.study.delta_list, vec![0.1, 0.05, 0.025]);
        let echoed = cfg.resolved_json().unwrap();
        assert!((echoed["velocity_grid"]["extent"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        let dir = std::env::temp_dir().join("boltzmix-cfg-gamma");
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_config(&dir, r#"{"species": {"m_a": 1.0, "m_b": 2.0, "gamma": 1.5}}"#);
        let err = RunConfig::load(&path).unwrap_err();
        assert!(format!("{err}").contains("gamma"), "{err}");
    }

    #[test]
    fn odd_velocity_grid_rejected() {
        let dir = std::env::temp_dir().join("boltzmix-cfg-odd");
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_config(
            &dir,
            r#"{"species": {"m_a": 1.0, "m_b": 2.0, "gamma": 1.0},
                "velocity_grid": {"points_per_axis": 15}}"#,
        );
        assert!(RunConfig::load(&path).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = std::env::temp_dir().join("boltzmix-cfg-unknown");
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_config(
            &dir,
            r#"{"species": {"m_a": 1.0, "m_b": 2.0, "gamma": 1.0}, "surprise": 1}"#,
        );
        let err = RunConfig::load(&path).unwrap_err();
        assert!(format!("{err}").contains("surprise"), "{err}");
    }
}
