//! JSON run configuration.

use anyhow::{bail, ensure, Context, Result};
use cmarkov::kernels::FellerConfig;
use cmarkov::{Increment, IndexFamily, IndexSet, InitialLaw, KernelSpec, Tree};
use serde::Deserialize;
use serde_json::Value;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub family: Option<FamilyConfig>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec<f64>,
    #[serde(default)]
    pub initial: InitialConfig,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    /// Monte Carlo sample size for statistical checks.
    pub samples: Option<usize>,
    #[serde(default)]
    pub sets: Vec<Value>,
    pub grid: Option<Vec<Vec<f64>>>,
    pub increment: Option<IncrementConfig>,
    #[serde(default)]
    pub splits: Vec<Value>,
    #[serde(default)]
    pub extras: Vec<Value>,
    #[serde(default)]
    pub boundary: Vec<Value>,
    #[serde(default)]
    pub inside: Vec<Value>,
    #[serde(default)]
    pub outside: Vec<Value>,
    pub u: Option<Value>,
    pub v: Option<Value>,
    #[serde(default)]
    pub coefs: Vec<f64>,
    #[serde(default)]
    pub flow: Vec<Value>,
    pub star: Option<StarConfig>,
    #[serde(default)]
    pub feller: FellerSettings,
}

fn default_kernel() -> KernelSpec<f64> {
    KernelSpec::brownian()
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Rect {
        dim: usize,
        #[serde(default)]
        measure: RectMeasure,
    },
    Tree {
        nodes: usize,
        edges: Vec<(usize, usize)>,
        #[serde(default)]
        root_mass: f64,
    },
    Product {
        factors: Vec<FamilyConfig>,
        /// Additive measure weights; the product measure when absent.
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RectMeasure {
    #[default]
    Lebesgue,
    Weighted {
        weights: Vec<f64>,
    },
    Additive {
        weights: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    PointMass { value: f64 },
    Gaussian { mean: f64, var: f64 },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::PointMass { value: 0.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementConfig {
    pub outer: Value,
    pub parts: Vec<Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarConfig {
    pub s: f64,
    pub t: f64,
    pub h: f64,
    pub k: f64,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FellerSettings {
    pub rhos: Vec<f64>,
    pub bound: usize,
    pub pairs: usize,
    pub grid: Vec<f64>,
    pub mc_samples: usize,
    /// Allowed relative growth between consecutive moduli.
    pub slack: f64,
}

impl Default for FellerSettings {
    fn default() -> Self {
        let base = FellerConfig::default();
        FellerSettings {
            rhos: (1..=6).map(|k| 2f64.powi(-k)).collect(),
            bound: base.bound,
            pairs: base.pairs,
            grid: base.grid,
            mc_samples: base.mc_samples,
            slack: 0.1,
        }
    }
}

impl FellerSettings {
    pub fn to_config(&self, seed: u64) -> FellerConfig {
        FellerConfig {
            bound: self.bound,
            pairs: self.pairs,
            grid: self.grid.clone(),
            mc_samples: self.mc_samples,
            seed,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("invalid config")?;
        ensure!(
            cfg.version == CONFIG_VERSION,
            "unsupported config version {} (expected {CONFIG_VERSION})",
            cfg.version
        );
        Ok(cfg)
    }

    pub fn family(&self) -> Result<IndexFamily<f64>> {
        let fam = self.family.as_ref().context("config needs a `family`")?;
        let family = build_family(fam)?;
        self.kernel.validate(&family).context("kernel does not fit the family")?;
        Ok(family)
    }

    pub fn initial(&self) -> Result<InitialLaw<f64>> {
        let law = match self.initial {
            InitialConfig::PointMass { value } => InitialLaw::PointMass(value),
            InitialConfig::Gaussian { mean, var } => InitialLaw::Gaussian { mean, var },
        };
        law.validate().context("invalid initial law")?;
        Ok(law)
    }
}

pub fn build_family(cfg: &FamilyConfig) -> Result<IndexFamily<f64>> {
    Ok(match cfg {
        FamilyConfig::Rect { dim, measure } => {
            ensure!(*dim >= 1, "rect dimension must be at least 1");
            match measure {
                RectMeasure::Lebesgue => IndexFamily::rect(*dim),
                RectMeasure::Weighted { weights } => {
                    ensure!(weights.len() == *dim, "expected {dim} measure weights");
                    IndexFamily::rect_weighted(weights.clone())?
                }
                RectMeasure::Additive { weights } => {
                    ensure!(weights.len() == *dim, "expected {dim} measure weights");
                    IndexFamily::rect_additive(weights.clone())?
                }
            }
        }
        FamilyConfig::Tree { nodes, edges, root_mass } => {
            IndexFamily::tree_with_root_mass(Tree::from_edges(*nodes, edges)?, *root_mass)?
        }
        FamilyConfig::Product { factors, weights } => {
            let fs = factors.iter().map(build_family).collect::<Result<Vec<_>>>()?;
            match weights {
                Some(w) => IndexFamily::product_additive(fs, w.clone())?,
                None => IndexFamily::product(fs)?,
            }
        }
    })
}

/// Reads a set literal: a corner array for rectangles, a node id for trees,
/// one literal per factor for products.
pub fn parse_set(family: &IndexFamily<f64>, v: &Value) -> Result<IndexSet<f64>> {
    let set = match (family.dim(), family.factors(), family.tree_ref()) {
        (Some(_), _, _) => {
            let arr = v.as_array().with_context(|| format!("expected a corner array, got {v}"))?;
            let corner = arr
                .iter()
                .map(|x| x.as_f64().with_context(|| format!("non-numeric coordinate {x}")))
                .collect::<Result<Vec<_>>>()?;
            IndexSet::Rect(corner)
        }
        (_, Some(fs), _) => {
            let arr = v.as_array().with_context(|| format!("expected one set per factor, got {v}"))?;
            ensure!(arr.len() == fs.len(), "expected {} factor sets, got {}", fs.len(), arr.len());
            IndexSet::Prod(fs.iter().zip(arr).map(|(f, x)| parse_set(f, x)).collect::<Result<Vec<_>>>()?)
        }
        (_, _, Some(_)) => {
            let node = v.as_u64().with_context(|| format!("expected a node id, got {v}"))?;
            IndexSet::Node(node as usize)
        }
        _ => bail!("unsupported family"),
    };
    family.check(&set).with_context(|| format!("set {v}"))?;
    Ok(set)
}

pub fn parse_sets(family: &IndexFamily<f64>, vs: &[Value], what: &str) -> Result<Vec<IndexSet<f64>>> {
    vs.iter()
        .map(|v| parse_set(family, v))
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("in `{what}`"))
}

pub fn parse_increment(family: &IndexFamily<f64>, cfg: Option<&IncrementConfig>) -> Result<Increment<f64>> {
    let cfg = cfg.context("config needs an `increment` with `outer` and `parts`")?;
    let outer = parse_set(family, &cfg.outer).context("in `increment.outer`")?;
    let parts = parse_sets(family, &cfg.parts, "increment.parts")?;
    Ok(Increment::new(family, outer, parts)?)
}
