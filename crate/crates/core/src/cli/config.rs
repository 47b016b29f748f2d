//! Experiment manifests.
//!
//! A manifest is a TOML file with one table per concern:
//!
//! ```toml
//! [model]
//! alpha = 0.8
//! horizon = 2.0
//!
//! [law]
//! kind = "reciprocal-exp"
//! rate = 1.0
//!
//! [scheme]
//! kind = "bridge"
//!
//! [mesh]
//! kind = "uniform"
//! n = 200
//!
//! [run]
//! particles = 100000
//! seed = 1
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{InitialLaw, ModelParams};
use crate::scheme::SchemeKind;
use crate::study::{check_doubling, MeshSpec, StudySetup};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default = "default_mesh_kind")]
    pub kind: String,
    /// Exponent of a refined mesh; defaults to the law's.
    pub beta: Option<f64>,
    /// Steps for single-mesh commands.
    pub n: Option<usize>,
    /// Doubling sequence for refinement studies.
    pub n_list: Option<Vec<usize>>,
}

fn default_mesh_kind() -> String {
    "uniform".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub particles: usize,
    #[serde(default)]
    pub seed: u64,
    /// Independent path sets averaged in refinement studies.
    #[serde(default = "one")]
    pub replicates: usize,
    pub evaluation_time: Option<f64>,
    pub out: Option<PathBuf>,
    /// Levels of the inverse-curve distance.
    #[serde(default = "default_levels")]
    pub d3_levels: usize,
    /// Points of the density grid.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    pub bandwidth: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_levels() -> usize {
    1001
}

fn default_grid() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub law: InitialLaw,
    pub scheme: SchemeSection,
    pub mesh: MeshSection,
    pub run: RunSection,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.alpha.is_finite() && m.alpha >= 0.0) {
            return Err(field_error("model.alpha", format!("must be >= 0, got {}", m.alpha)));
        }
        if !(m.horizon.is_finite() && m.horizon > 0.0) {
            return Err(field_error("model.horizon", format!("must be > 0, got {}", m.horizon)));
        }
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(field_error(field, format!("must be > 0, got {v}")))
            }
        };
        match self.law {
            InitialLaw::Dirac { y0 } => positive("law.y0", y0)?,
            InitialLaw::Gamma { shape, scale } => {
                positive("law.shape", shape)?;
                positive("law.scale", scale)?;
            }
            InitialLaw::ReciprocalExp { rate } => positive("law.rate", rate)?,
        }
        self.mesh_spec()?;
        if let Some(beta) = self.mesh.beta {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(field_error("mesh.beta", format!("must lie in (0, 1], got {beta}")));
            }
        }
        if self.mesh.kind == "refined" && self.mesh.beta.is_none() && self.law.holder_beta().is_none()
        {
            return Err(field_error("mesh.beta", "required: the law has no exponent in (0, 1]"));
        }
        if self.mesh.n == Some(0) {
            return Err(field_error("mesh.n", "must be >= 1"));
        }
        if let Some(list) = &self.mesh.n_list {
            if list.is_empty() || list[0] == 0 {
                return Err(field_error("mesh.n_list", "entries must be >= 1"));
            }
            if !list.windows(2).all(|w| w[1] > w[0] && w[1] % w[0] == 0) {
                return Err(field_error(
                    "mesh.n_list",
                    "entries must increase and each must divide the next",
                ));
            }
        }
        if self.run.particles == 0 {
            return Err(field_error("run.particles", "must be >= 1"));
        }
        if self.run.replicates == 0 {
            return Err(field_error("run.replicates", "must be >= 1"));
        }
        if self.run.d3_levels == 0 {
            return Err(field_error("run.d3_levels", "must be >= 1"));
        }
        if self.run.grid_points < 2 {
            return Err(field_error("run.grid_points", "must be >= 2"));
        }
        if let Some(h) = self.run.bandwidth {
            positive("run.bandwidth", h)?;
        }
        if let Some(t) = self.run.evaluation_time {
            if !(t > 0.0 && t <= m.horizon) {
                return Err(field_error(
                    "run.evaluation_time",
                    format!("must lie in (0, {}], got {t}", m.horizon),
                ));
            }
        }
        Ok(())
    }

    pub fn mesh_spec(&self) -> Result<MeshSpec> {
        match self.mesh.kind.as_str() {
            "uniform" => Ok(MeshSpec::Uniform),
            "refined" => Ok(MeshSpec::Refined { beta: self.mesh.beta }),
            other => Err(field_error(
                "mesh.kind",
                format!("expected `uniform` or `refined`, got `{other}`"),
            )),
        }
    }

    pub fn evaluation_time(&self) -> f64 {
        self.run.evaluation_time.unwrap_or(self.model.horizon)
    }

    /// Steps for single-mesh commands.
    pub fn single_n(&self) -> Result<usize> {
        self.mesh
            .n
            .ok_or_else(|| field_error("mesh.n", "required by this command"))
    }

    /// Study setup for the refinement commands, which need at least four
    /// sizes in a doubling sequence.
    pub fn study_setup(&self) -> Result<StudySetup> {
        let sizes = self
            .mesh
            .n_list
            .clone()
            .ok_or_else(|| field_error("mesh.n_list", "required by this command"))?;
        if sizes.len() < 4 {
            return Err(field_error("mesh.n_list", "needs at least 4 entries"));
        }
        check_doubling(&sizes).map_err(|e| field_error("mesh.n_list", e))?;
        Ok(StudySetup {
            params: self.model,
            law: self.law,
            scheme: self.scheme.kind,
            mesh: self.mesh_spec()?,
            sizes,
            particles: self.run.particles,
            seed: self.run.seed,
            replicates: self.run.replicates,
            evaluation_time: self.run.evaluation_time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
alpha = 0.8
horizon = 2.0

[law]
kind = "reciprocal-exp"
rate = 1.0

[scheme]
kind = "bridge"

[mesh]
kind = "uniform"
n = 200
n_list = [50, 100, 200, 400]

[run]
particles = 1000
seed = 7
"#;

    fn with(edit: (&str, &str)) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&BASE.replace(edit.0, edit.1))
    }

    #[test]
    fn parses_base() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.model, ModelParams { alpha: 0.8, horizon: 2.0 });
        assert_eq!(c.law, InitialLaw::ReciprocalExp { rate: 1.0 });
        assert_eq!(c.scheme.kind, SchemeKind::Bridge);
        assert_eq!(c.single_n().unwrap(), 200);
        assert_eq!(c.run.replicates, 1);
        assert_eq!(c.evaluation_time(), 2.0);
        assert_eq!(c.study_setup().unwrap().sizes, vec![50, 100, 200, 400]);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (("alpha = 0.8", "alpha = -1.0"), "model.alpha"),
            (("horizon = 2.0", "horizon = 0.0"), "model.horizon"),
            (("rate = 1.0", "rate = 0.0"), "law.rate"),
            (("kind = \"uniform\"", "kind = \"spiral\""), "mesh.kind"),
            (("n = 200", "n = 0"), "mesh.n"),
            (("[50, 100, 200, 400]", "[50, 100, 250, 500]"), "mesh.n_list"),
            (("particles = 1000", "particles = 0"), "run.particles"),
            (("seed = 7", "seed = 7\nevaluation_time = 5.0"), "run.evaluation_time"),
            (("seed = 7", "seed = 7\nbandwidth = -1.0"), "run.bandwidth"),
        ];
        for ((from, to), field) in cases {
            let err = with((from, to)).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{err}");
            assert!(err.to_string().contains(field), "{field}: {err}");
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = with(("alpha = 0.8", "alpha = ")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = with(("seed = 7", "seed = 7\ncolour = 3")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn study_needs_doubling_list() {
        let c = with(("[50, 100, 200, 400]", "[50, 150, 300, 600]")).unwrap();
        assert!(c.study_setup().is_err());
        let c = with(("[50, 100, 200, 400]", "[50, 100, 200]")).unwrap();
        assert!(c.study_setup().is_err());
    }

    #[test]
    fn gamma_refined_mesh() {
        let text = BASE
            .replace("kind = \"reciprocal-exp\"\nrate = 1.0", "kind = \"gamma\"\nshape = 1.5\nscale = 0.5")
            .replace("kind = \"uniform\"", "kind = \"refined\"");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.mesh_spec().unwrap(), MeshSpec::Refined { beta: None });
        let text = text.replace("shape = 1.5", "shape = 3.0");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("mesh.beta"));
    }
}
