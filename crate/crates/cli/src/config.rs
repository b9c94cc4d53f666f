//! Strict run configuration: unknown keys are rejected, parse-validate
//! round trips are lossless, and every run is identified by the FNV-1a
//! hash of its config file bytes.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use slabrad::dynamics::{DetectorSide, DetectorSpec};
use slabrad::model::{Basis, PhysicalScales, SlabParams, StateSpec};
use slabrad::oracle::BathConfig;
use slabrad::spectrum::SearchBox;
use slabrad::linalg::CMat;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub state: StateConfig,
    pub detector: Option<DetectorConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub oracle: Option<OracleConfig>,
    pub output: Option<OutputConfig>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n_layers: usize,
    #[serde(default)]
    pub delta0: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub physical: Option<PhysicalConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    pub omega: f64,
    pub lattice: f64,
    pub dipole: f64,
    pub area: f64,
    pub hbar: f64,
    pub light_speed: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
pub enum StateConfig {
    Coherent { basis: BasisConfig, amplitudes: Vec<[f64; 2]> },
    Fock { basis: BasisConfig, occupations: Vec<u64> },
    Chaotic { basis: BasisConfig, occupations: Vec<f64> },
    Raw { mean: Vec<[f64; 2]>, normal: Vec<Vec<[f64; 2]>>, anomalous: Vec<Vec<[f64; 2]>> },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisConfig {
    K,
    Layer,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub z: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub n_samples: usize,
    #[serde(default = "default_side")]
    pub side: SideConfig,
}

fn default_side() -> SideConfig {
    SideConfig::Positive
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideConfig {
    Positive,
    Negative,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(rename = "box", default)]
    pub search_box: Option<BoxConfig>,
    #[serde(default)]
    pub seed_only: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default)]
    pub box_length: Option<f64>,
    #[serde(default)]
    pub q_max: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Option<FormatConfig>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatConfig {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    N,
    Delta0,
    G,
}

impl RunConfig {
    pub fn slab_params(&self) -> Result<SlabParams, String> {
        let p = &self.params;
        match (&p.physical, p.delta0, p.g) {
            (Some(ph), None, None) => SlabParams::from_physical(
                p.n_layers,
                PhysicalScales {
                    omega: ph.omega,
                    lattice: ph.lattice,
                    dipole: ph.dipole,
                    area: ph.area,
                    hbar: ph.hbar,
                    light_speed: ph.light_speed,
                },
            )
            .map_err(|e| e.to_string()),
            (None, Some(delta0), Some(g)) => {
                SlabParams::dimensionless(p.n_layers, delta0, g).map_err(|e| e.to_string())
            }
            _ => Err("params must give either (delta0, g) or physical scales, not both".into()),
        }
    }

    pub fn state_spec(&self) -> StateSpec {
        fn cvec(v: &[[f64; 2]]) -> Vec<C64> {
            v.iter().map(|p| C64::new(p[0], p[1])).collect()
        }
        fn cmat(rows: &[Vec<[f64; 2]>]) -> CMat {
            let n = rows.len();
            CMat::from_fn(n, |i, j| C64::new(rows[i][j][0], rows[i][j][1]))
        }
        match &self.state {
            StateConfig::Coherent { basis, amplitudes } => StateSpec::Coherent {
                amplitudes: cvec(amplitudes),
                basis: (*basis).to_model(),
            },
            StateConfig::Fock { basis, occupations } => StateSpec::Fock {
                occupations: occupations.clone(),
                basis: (*basis).to_model(),
            },
            StateConfig::Chaotic { basis, occupations } => StateSpec::Chaotic {
                occupations: occupations.clone(),
                basis: (*basis).to_model(),
            },
            StateConfig::Raw { mean, normal, anomalous } => StateSpec::Raw {
                mean: cvec(mean),
                normal: cmat(normal),
                anomalous: cmat(anomalous),
            },
        }
    }

    pub fn detector_spec(&self) -> Result<DetectorSpec, String> {
        let d = self
            .detector
            .as_ref()
            .ok_or_else(|| "this command requires a detector section".to_string())?;
        if d.n_samples < 2 {
            return Err("detector.n_samples must be >= 2".into());
        }
        if d.t_stop <= d.t_start {
            return Err("detector.t_stop must exceed detector.t_start".into());
        }
        let dt = (d.t_stop - d.t_start) / (d.n_samples - 1) as f64;
        let t_grid = (0..d.n_samples).map(|i| d.t_start + dt * i as f64).collect();
        Ok(DetectorSpec {
            z: d.z,
            t_grid,
            side: match d.side {
                SideConfig::Positive => DetectorSide::PositiveZ,
                SideConfig::Negative => DetectorSide::NegativeZ,
            },
        })
    }

    pub fn search_boxes(&self) -> Option<Vec<SearchBox>> {
        self.solver.search_box.map(|b| {
            let pos = SearchBox {
                re_min: b.re_min,
                re_max: b.re_max,
                im_min: b.im_min,
                im_max: b.im_max,
            };
            let neg = SearchBox {
                re_min: -pos.re_max,
                re_max: -pos.re_min,
                im_min: pos.im_min,
                im_max: pos.im_max,
            };
            vec![pos, neg]
        })
    }

    pub fn bath_config(&self, t_max: f64, z: f64) -> BathConfig {
        let base = BathConfig::for_window(t_max, z);
        match &self.oracle {
            None => base,
            Some(o) => BathConfig {
                box_length: o.box_length.unwrap_or(base.box_length),
                q_max: o.q_max.unwrap_or(base.q_max),
                dt: o.dt.unwrap_or_else(|| 0.05 / o.q_max.unwrap_or(base.q_max)),
            },
        }
    }

    pub fn oracle_enabled(&self) -> bool {
        self.oracle.as_ref().is_none_or(|o| o.enabled)
    }
}

impl BasisConfig {
    fn to_model(self) -> Basis {
        match self {
            BasisConfig::K => Basis::KSpace,
            BasisConfig::Layer => Basis::Layer,
        }
    }
}

/// FNV-1a hash of the raw config bytes; stamped into every output sidecar.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
