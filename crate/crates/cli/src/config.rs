//! Run description read from `--config`. Every key is optional; flags given
//! on the command line win over the file, the file wins over defaults.
//!
//! ```toml
//! out = "results"
//! seed = 7
//! threads = 4
//!
//! [operator]
//! n = 1
//! s = 0.5
//! m = 1.0
//! flavor = "massive"        # or "massless-shifted"
//!
//! [grid]
//! N = 1024
//! L = 12.0
//!
//! [potential]
//! spec = "gaussian:4"
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 2000
//! state = 0
//!
//! [geometry]
//! x0 = [0.0]
//! R = 0.5
//! jmax = 10
//!
//! [sweeps]
//! localization_jmax = 6
//! localization_dims = [1, 2]
//! chains = 3
//! smoothing_dims = [1, 3]
//! orders = [2, 3, 4]
//! d = [0.25, 0.5, 1.0]
//! mass = 0.1
//! combinatorics_jmax = 40
//! beta_max = 60
//! A = 1.0
//! B = 2.5
//! radii = [0.1, 0.5, 1.0, 2.0]
//! ```

use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub sweeps: SweepSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub n: Option<usize>,
    pub s: Option<f64>,
    pub m: Option<f64>,
    pub flavor: Option<String>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "N")]
    pub samples: Option<usize>,
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub spec: Option<String>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub state: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub jmax: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub localization_jmax: Option<usize>,
    pub localization_dims: Option<Vec<usize>>,
    pub chains: Option<usize>,
    pub smoothing_dims: Option<Vec<usize>>,
    pub orders: Option<Vec<usize>>,
    pub d: Option<Vec<f64>>,
    pub mass: Option<f64>,
    pub combinatorics_jmax: Option<usize>,
    pub beta_max: Option<usize>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub radii: Option<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
