//! Exact topology arithmetic: the Jorge–Meeks degree, index lower and upper
//! bounds, the total-curvature sandwich, and the finite case enumeration that
//! settles low-index classification questions.
//!
//! Everything here is integer or rational; there is no floating point.

use crate::error::{Error, Result};
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;

pub type Q = Rational64;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn ser_q<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_opt_q<S: Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    Two,
    One,
}

/// (g, r, d₁..d_r, sidedness). For one-sided surfaces g is the genus of the
/// two-sided double cover.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SurfaceTopology {
    pub genus: u32,
    pub ends: u32,
    pub multiplicities: Vec<u32>,
    pub sided: Sidedness,
}

impl SurfaceTopology {
    pub fn new(genus: u32, multiplicities: Vec<u32>, sided: Sidedness) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::InvalidInput("a complete surface has at least one end".into()));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidInput("end multiplicities are at least 1".into()));
        }
        Ok(SurfaceTopology { genus, ends: multiplicities.len() as u32, multiplicities, sided })
    }

    pub fn two_sided(genus: u32, multiplicities: &[u32]) -> Self {
        Self::new(genus, multiplicities.to_vec(), Sidedness::Two).expect("valid topology")
    }

    pub fn one_sided(genus: u32, multiplicities: &[u32]) -> Self {
        Self::new(genus, multiplicities.to_vec(), Sidedness::One).expect("valid topology")
    }

    /// Σ(dⱼ + 1)
    pub fn end_sum(&self) -> i64 {
        self.multiplicities.iter().map(|&d| d as i64 + 1).sum()
    }

    pub fn is_embedded(&self) -> bool {
        self.multiplicities.iter().all(|&d| d == 1)
    }

    fn check(&self) -> Result<()> {
        if self.multiplicities.len() != self.ends as usize || self.ends == 0 || self.multiplicities.contains(&0) {
            return Err(Error::InvalidInput(format!("inconsistent topology {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for SurfaceTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d: Vec<String> = self.multiplicities.iter().map(|d| d.to_string()).collect();
        let side = match self.sided {
            Sidedness::Two => "",
            Sidedness::One => ", one-sided",
        };
        write!(f, "g={} r={} d=({}){}", self.genus, self.ends, d.join(","), side)
    }
}

/// Two-sided: g − 1 + (r + Σd)/2. One-sided: g − 1 + r + Σd.
pub fn jorge_meeks_degree(t: &SurfaceTopology) -> Q {
    let g = q(t.genus as i64);
    let r = q(t.ends as i64);
    let sd = q(t.multiplicities.iter().map(|&d| d as i64).sum());
    match t.sided {
        Sidedness::Two => g - 1 + (r + sd) / 2,
        Sidedness::One => g - 1 + r + sd,
    }
}

/// Total curvature divided by π: −4·deg (two-sided) or −2·deg (one-sided).
pub fn total_curvature_over_pi(t: &SurfaceTopology) -> Q {
    match t.sided {
        Sidedness::Two => -jorge_meeks_degree(t) * 4,
        Sidedness::One => -jorge_meeks_degree(t) * 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    /// (2g + 2Σ(dⱼ+1) − 5)/3
    TwoSided,
    /// (2g + 4r − 5)/3, all ends embedded
    TwoSidedEmbedded,
    /// (g + 2Σ(dⱼ+1) − 4)/3
    OneSided,
}

pub fn index_lower_bound(t: &SurfaceTopology) -> Q {
    let g = q(t.genus as i64);
    let s = q(t.end_sum());
    match t.sided {
        Sidedness::Two => (g * 2 + s * 2 - 5) / 3,
        Sidedness::One => (g + s * 2 - 4) / 3,
    }
}

/// The embedded-ends specialization (all dⱼ = 1).
pub fn index_lower_bound_embedded(genus: u32, ends: u32) -> Q {
    (q(2 * genus as i64) + q(4 * ends as i64) - 5) / 3
}

/// −(1/π)∫κ + 2g − 3, two-sided only.
pub fn index_upper_bound(t: &SurfaceTopology, total_curvature_over_pi: Q) -> Result<Q> {
    if t.sided != Sidedness::Two {
        return Err(Error::InvalidInput("the upper bound formula is for two-sided surfaces".into()));
    }
    Ok(-total_curvature_over_pi + q(2 * t.genus as i64) - 3)
}

pub fn ceil_q(x: Q) -> i64 {
    x.ceil().to_integer()
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub topology: SurfaceTopology,
    #[serde(serialize_with = "ser_q")]
    pub lower: Q,
    pub lower_ceil: i64,
    #[serde(serialize_with = "ser_opt_q")]
    pub upper: Option<Q>,
    pub formula_used: BoundFormula,
    #[serde(serialize_with = "ser_q")]
    pub jorge_meeks_degree: Q,
}

pub fn bound_report(t: &SurfaceTopology) -> Result<BoundReport> {
    t.check()?;
    let lower = index_lower_bound(t);
    let (formula_used, upper) = match t.sided {
        Sidedness::Two => {
            let f = if t.is_embedded() { BoundFormula::TwoSidedEmbedded } else { BoundFormula::TwoSided };
            (f, Some(index_upper_bound(t, total_curvature_over_pi(t))?))
        }
        Sidedness::One => (BoundFormula::OneSided, None),
    };
    Ok(BoundReport {
        topology: t.clone(),
        lower,
        lower_ceil: ceil_q(lower),
        upper,
        formula_used,
        jorge_meeks_degree: jorge_meeks_degree(t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sandwich {
    #[serde(serialize_with = "ser_q")]
    pub lower: Q,
    #[serde(serialize_with = "ser_q")]
    pub upper: Q,
    /// ∫(−κ)/π
    #[serde(serialize_with = "ser_q")]
    pub total_curvature_over_pi: Q,
}

impl Sandwich {
    pub fn contains(&self, index: i64) -> bool {
        self.lower <= q(index) && q(index) <= self.upper
    }
}

/// 1/3 + (1/6π)∫(−κ) ≤ Index ≤ −3 + (3/2π)∫(−κ), or −6 + (3/π)∫(−κ) on the
/// right for one-sided surfaces.
pub fn sandwich(t: &SurfaceTopology) -> Result<Sandwich> {
    t.check()?;
    if jorge_meeks_degree(t).is_zero() {
        return Err(Error::PlanarInput);
    }
    let tc = -total_curvature_over_pi(t);
    let lower = Q::new(1, 3) + tc / 6;
    let upper = match t.sided {
        Sidedness::Two => q(-3) + tc * 3 / 2,
        Sidedness::One => q(-6) + tc * 3,
    };
    Ok(Sandwich { lower, upper, total_curvature_over_pi: tc })
}

// ---------------------------------------------------------------------------
// literature file

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    pub id: String,
    pub genus: u32,
    pub multiplicities: Vec<u32>,
    pub sided: Sidedness,
    pub reason: String,
    pub citation: String,
}

impl Exclusion {
    fn matches(&self, t: &SurfaceTopology) -> bool {
        let mut a = self.multiplicities.clone();
        a.sort_unstable_by(|x, y| y.cmp(x));
        self.genus == t.genus && self.sided == t.sided && a == t.multiplicities
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub id: String,
    #[serde(default)]
    pub min_genus: Option<u32>,
    #[serde(default)]
    pub min_ends: Option<u32>,
    pub reason: String,
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KnownSurface {
    pub name: String,
    pub genus: u32,
    pub multiplicities: Vec<u32>,
    pub index: i64,
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Literature {
    #[serde(default)]
    pub exclusion: Vec<Exclusion>,
    #[serde(default)]
    pub preset: Vec<Preset>,
    #[serde(default)]
    pub known: Vec<KnownSurface>,
}

const BUILTIN_LITERATURE: &str = include_str!("../../data/literature.toml");

impl Literature {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LITERATURE).expect("bundled literature file parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lit: Literature = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("literature file: {e}")))?;
        for e in &lit.exclusion {
            if e.citation.trim().is_empty() {
                return Err(Error::InvalidInput(format!("exclusion {} has no citation", e.id)));
            }
        }
        Ok(lit)
    }

    pub fn exclusion(&self, id: &str) -> Result<Exclusion> {
        self.exclusion
            .iter()
            .find(|e| e.id == id)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("unknown exclusion id {id}")))
    }

    pub fn preset(&self, id: &str) -> Result<Preset> {
        self.preset
            .iter()
            .find(|e| e.id == id)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("unknown preset id {id}")))
    }

    pub fn known_for(&self, t: &SurfaceTopology) -> Vec<&KnownSurface> {
        self.known
            .iter()
            .filter(|k| {
                let mut a = k.multiplicities.clone();
                a.sort_unstable_by(|x, y| y.cmp(x));
                t.sided == Sidedness::Two && k.genus == t.genus && a == t.multiplicities
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// enumeration

#[derive(Debug, Clone, Default, Serialize)]
pub struct FeasibilityConstraints {
    /// Σ(dⱼ+1) ≥ 4
    pub nonflat: bool,
    /// all dⱼ = 1
    pub embedded: bool,
    pub min_ends: u32,
    pub min_genus: u32,
    pub excluded_topologies: Vec<Exclusion>,
    /// Where min_ends / min_genus came from, echoed into the notes.
    pub provenance: Vec<String>,
}

impl FeasibilityConstraints {
    pub fn with_preset(mut self, p: &Preset) -> Self {
        if let Some(g) = p.min_genus {
            self.min_genus = self.min_genus.max(g);
        }
        if let Some(r) = p.min_ends {
            self.min_ends = self.min_ends.max(r);
        }
        self.provenance.push(format!("{}: {} [{}]", p.id, p.reason, p.citation));
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Enumeration {
    pub budget: u32,
    pub sided: Sidedness,
    pub topologies: Vec<SurfaceTopology>,
    /// The case split, one line per step.
    pub trace: Vec<String>,
    pub notes: Vec<String>,
}

/// Partitions of n into parts ≥ 2, parts in descending order.
fn partitions(n: i64, max_part: i64, out: &mut Vec<Vec<i64>>, cur: &mut Vec<i64>) {
    if n == 0 {
        out.push(cur.clone());
        return;
    }
    let mut p = max_part.min(n);
    while p >= 2 {
        cur.push(p);
        partitions(n - p, p, out, cur);
        cur.pop();
        p -= 1;
    }
}

fn fmt_d(d: &[u32]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// All topologies whose index lower bound is at most `budget`, subject to the
/// constraints, with the case trace. Order: (g, r, d descending).
pub fn enumerate_feasible(budget: u32, sided: Sidedness, c: &FeasibilityConstraints) -> Enumeration {
    let b = budget as i64;
    let mut trace = Vec::new();
    let mut notes = c.provenance.clone();
    // index ≤ B against the lower bound, cleared of denominators
    let rhs = match sided {
        Sidedness::Two => 3 * b + 5,
        Sidedness::One => 3 * b + 4,
    };
    match (sided, c.embedded) {
        (Sidedness::Two, false) => trace.push(format!("lower bound ≤ {b} requires 2g + 2Σ(dⱼ+1) ≤ {rhs}")),
        (Sidedness::Two, true) => trace.push(format!("lower bound ≤ {b} with embedded ends requires g + 2r ≤ {}", rhs / 2)),
        (Sidedness::One, _) => trace.push(format!("lower bound ≤ {b} requires g + 2Σ(dⱼ+1) ≤ {rhs}")),
    }
    if c.nonflat {
        trace.push("nonflat: Σ(dⱼ+1) ≥ 4".into());
    }
    if c.min_genus > 0 {
        trace.push(format!("constraint: g ≥ {}", c.min_genus));
    }
    if c.min_ends > 0 {
        trace.push(format!("constraint: r ≥ {}", c.min_ends));
    }
    let s_max_for = |g: i64| -> i64 {
        match sided {
            Sidedness::Two => (rhs - 2 * g).div_euclid(2),
            Sidedness::One => (rhs - g).div_euclid(2),
        }
    };
    // every end contributes at least 2 to Σ(dⱼ+1)
    let s_floor = 2 * (c.min_ends.max(1) as i64);
    let mut topologies = Vec::new();
    let mut g = c.min_genus as i64;
    loop {
        let s_max = s_max_for(g);
        if s_max < s_floor {
            trace.push(format!("g = {g}: Σ(dⱼ+1) ≤ {s_max} < {s_floor}, no topology; g ≤ {} is exhaustive", g - 1));
            break;
        }
        let mut cands = Vec::new();
        for s in 2..=s_max {
            partitions(s, s, &mut cands, &mut Vec::new());
        }
        cands.sort_by(|a, b| a.len().cmp(&b.len()).then(b.cmp(a)));
        let line = if c.embedded && sided == Sidedness::Two {
            format!("g = {g}: 2r ≤ {}", s_max)
        } else {
            format!("g = {g}: Σ(dⱼ+1) ≤ {s_max}")
        };
        trace.push(line);
        let before = topologies.len();
        for parts in cands {
            let d: Vec<u32> = parts.iter().map(|p| (p - 1) as u32).collect();
            let t = SurfaceTopology::new(g as u32, d.clone(), sided).expect("candidate");
            let s: i64 = parts.iter().sum();
            let verdict = if c.embedded && !t.is_embedded() {
                None
            } else if (t.ends) < c.min_ends {
                None
            } else if c.nonflat && s < 4 {
                Some(format!("rejected, Σ(dⱼ+1) = {s} < 4 is flat"))
            } else if let Some(e) = c.excluded_topologies.iter().find(|e| e.matches(&t)) {
                Some(format!("rejected, {} [{}]", e.reason, e.citation))
            } else {
                debug_assert!(index_lower_bound(&t) <= q(b));
                topologies.push(t.clone());
                Some(format!("feasible, lower bound {}", index_lower_bound(&t)))
            };
            // candidates removed by the structural filters are not listed
            if let Some(v) = verdict {
                trace.push(format!("  r = {}, d = ({}): {v}", t.ends, fmt_d(&d)));
            }
        }
        if topologies.len() == before {
            trace.push(format!("g = {g}: no candidate survives"));
        }
        g += 1;
    }
    if topologies.is_empty() {
        trace.push("no feasible topology".into());
    }
    if c.min_ends > 0 || c.min_genus > 0 {
        notes.push("genus and end-count minima are constraints supplied by the caller".into());
    }
    let lit = Literature::builtin();
    for t in &topologies {
        for k in lit.known_for(t) {
            notes.push(format!("{t}: realized by {} (index {}) [{}]", k.name, k.index, k.citation));
        }
    }
    Enumeration { budget, sided, topologies, trace, notes }
}

/// Minimum integer index compatible with the lower bound.
pub fn min_index(t: &SurfaceTopology) -> i64 {
    ceil_q(index_lower_bound(t)).max(0)
}

pub fn to_f64(x: Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
