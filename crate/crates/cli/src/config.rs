use anyhow::{bail, Context, Result};
use minsurf::complexfn::{Poly, RationalMap, C64};
use minsurf::spectral::Schedule;
use minsurf::surface::{self, Puncture, WeierstrassData};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags,
/// then echoed verbatim into the provenance block.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate: Option<EnumerateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexOutputs>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    /// plane, catenoid, enneper, costa, or rational
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational: Option<RationalSpec>,
}

/// Explicit data: coefficients ascending, each [re, im].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalSpec {
    pub g_num: Vec<[f64; 2]>,
    pub g_den: Vec<[f64; 2]>,
    pub dh_num: Vec<[f64; 2]>,
    pub dh_den: Vec<[f64; 2]>,
    /// "inf" or "re,im"
    pub punctures: Vec<String>,
    #[serde(default)]
    pub basepoint: [f64; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// relative, total curvature against the quantized value
    pub total_curvature: f64,
    /// relative, fitted curvature decay exponent against −2 − 2(n+1)/d
    pub decay_exponent: f64,
    /// absolute, |Σ residues| of each basis form
    pub residue: f64,
    /// L²* inner product of unit forms of different parity
    pub cross_parity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { total_curvature: 1e-2, decay_exponent: 5e-2, residue: 1e-10, cross_parity: 1e-8 }
    }
}

impl Tolerances {
    pub fn set(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').with_context(|| format!("--tol expects name=value, got {kv}"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("tolerance {k}"))?;
        if !(v > 0.0) {
            bail!("tolerance {k} must be positive");
        }
        match k.trim() {
            "total_curvature" => self.total_curvature = v,
            "decay_exponent" => self.decay_exponent = v,
            "residue" => self.residue = v,
            "cross_parity" => self.cross_parity = v,
            other => bail!("unknown tolerance {other}"),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(default)]
    pub genus: u32,
    #[serde(default)]
    pub multiplicities: Vec<u32>,
    #[serde(default)]
    pub one_sided: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateSpec {
    #[serde(default)]
    pub budget: u32,
    #[serde(default)]
    pub one_sided: bool,
    #[serde(default)]
    pub embedded: bool,
    #[serde(default)]
    pub nonflat: bool,
    #[serde(default)]
    pub min_ends: u32,
    #[serde(default)]
    pub min_genus: u32,
    /// preset ids from the literature file
    #[serde(default)]
    pub presets: Vec<String>,
    /// exclusion ids from the literature file
    #[serde(default)]
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    pub t: f64,
    /// extrinsic radius of the quarter mesh
    pub r: f64,
    /// relative edge length
    pub h: f64,
    /// |φ| below this fraction of max|φ| is treated as the zero set
    pub zero_tol: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        AuditSpec { t: 1.0, r: 40.0, h: 0.3, zero_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexOutputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenfunctions: Option<String>,
    #[serde(default = "default_eigs")]
    pub eigenfunction_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
}

fn default_eigs() -> usize {
    3
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn c(p: &[f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn poly(v: &[[f64; 2]]) -> Poly {
    Poly::new(v.iter().map(c).collect())
}

fn puncture(s: &str) -> Result<Puncture> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Puncture::Infinity);
    }
    let (re, im) = s.split_once(',').with_context(|| format!("puncture \"{s}\" is not \"inf\" or \"re,im\""))?;
    Ok(Puncture::Finite(C64::new(re.trim().parse()?, im.trim().parse()?)))
}

impl SurfaceSpec {
    pub fn catalog(name: &str, k: Option<u32>, t: Option<f64>) -> Self {
        SurfaceSpec { name: name.to_string(), k, t, rational: None }
    }

    pub fn build(&self) -> Result<WeierstrassData> {
        Ok(match self.name.as_str() {
            "plane" => surface::plane(),
            "catenoid" => surface::catenoid(),
            "enneper" => {
                let k = self.k.unwrap_or(1);
                if k == 0 {
                    bail!("enneper needs k ≥ 1");
                }
                surface::enneper(k)
            }
            "costa" => surface::costa(self.t.unwrap_or(1.0))?,
            "rational" => {
                let r = self.rational.as_ref().context("surface \"rational\" needs a [surface.rational] table")?;
                let g = RationalMap::new(poly(&r.g_num), poly(&r.g_den))?;
                let dh = RationalMap::new(poly(&r.dh_num), poly(&r.dh_den))?;
                let p = r.punctures.iter().map(|s| puncture(s)).collect::<Result<Vec<_>>>()?;
                surface::from_rational("rational", g, dh, p, c(&r.basepoint))?
            }
            other => bail!("unknown surface {other}; expected plane, catenoid, enneper, costa or rational"),
        })
    }
}
