//! Config-driven experiment runner.
//!
//! Parses a flat `key = value` text config with `[section]` headers into a
//! fully validated experiment description, runs it, and writes CSV artifacts.
//! Every file starts with a comment line recording the complete resolved
//! configuration (defaults included) and the seed, so a run can be reproduced
//! from its output alone. The same spec yields byte-identical files across
//! re-runs and across thread counts.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::{analytic_curve, brickwork_curve, excess_distribution, thinned_curve};
use crate::bounds::{gcc_bound, max_flow_bound, ultimate_capacity};
use crate::exact::exact_shared_expectation;
use crate::percolation::{
    default_fraction_level, site_bond_curve_sim, Ensemble, Estimator, GRID_CONNECTION_LEVEL,
};
use crate::protocol::{estimate_rate, ProtocolConfig, Variant};
use crate::qkd::{bits_to_hex, run_qkd, GhzShare};
use crate::topology::{DegreeDistribution, Topology};
use crate::{Error, Result};

/// Stream salt for per-trial topology resampling, distinct from the link,
/// plan, and fusion salts used inside the protocol modules.
const TOPO_SALT: u64 = 0x746f_706f;

/// The experiment registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    RateVsP,
    RateVsDistance,
    SiteBondSim,
    SiteBondAnalytic,
    BoundsComparison,
    QkdSift,
    OracleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::RateVsP,
        ExperimentKind::RateVsDistance,
        ExperimentKind::SiteBondSim,
        ExperimentKind::SiteBondAnalytic,
        ExperimentKind::BoundsComparison,
        ExperimentKind::QkdSift,
        ExperimentKind::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RateVsP => "rate-vs-p",
            ExperimentKind::RateVsDistance => "rate-vs-distance",
            ExperimentKind::SiteBondSim => "site-bond-sim",
            ExperimentKind::SiteBondAnalytic => "site-bond-analytic",
            ExperimentKind::BoundsComparison => "bounds-comparison",
            ExperimentKind::QkdSift => "qkd-sift",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }

    pub fn from_name(name: &str) -> Result<ExperimentKind> {
        ExperimentKind::ALL.iter().copied().find(|k| k.name() == name).ok_or_else(|| {
            let valid: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!(
                "unknown experiment kind {name:?}; valid kinds: {}",
                valid.join(", ")
            ))
        })
    }

    fn doc(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::RateVsP => &[
                "Shared-state rate against link probability p at fixed consumers.",
                "columns: p,distance,rate,stderr",
                "[experiment] seed, trials, output?",
                "[topology]   type=grid, width, height, consumer_a?, consumer_b?, brickwork?, divided?",
                "[protocol]   variant=random|brickwork, n, q, p_star?",
                "[sweep]      p_values | p_min + p_max + p_count",
            ],
            ExperimentKind::RateVsDistance => &[
                "Rate against consumer separation on a grid's middle row at fixed p.",
                "columns: p,distance,rate,stderr",
                "[experiment] seed, trials, output?",
                "[topology]   type=grid, width, height, brickwork?",
                "[protocol]   variant=random|brickwork, n, p, q, p_star?",
                "[sweep]      distances (comma-separated separations)",
            ],
            ExperimentKind::SiteBondSim => &[
                "Monte Carlo critical fusion probability q_c over a p grid.",
                "columns: p,q_c,uncertainty (q_c empty when unreachable at q = 1)",
                "[experiment] seed, trials, output?",
                "[topology]   type=grid (connection estimator) or type=configuration",
                "             (resampled ensemble, largest-component estimator);",
                "             grid: width, height, consumer_a?, consumer_b?, brickwork?;",
                "             configuration: nodes, degree=constant:<d>|poisson:<lambda>",
                "[protocol]   variant=random|brickwork, n",
                "[sweep]      p_values | p_min + p_max + p_count, tol? (bisection width),",
                "             level? (crossing level; defaults: grid 0.3, configuration N^(-1/3))",
            ],
            ExperimentKind::SiteBondAnalytic => &[
                "Generating-function critical curve q_c(p) for a degree distribution.",
                "columns: p,q_c (q_c empty where no finite threshold exists)",
                "[experiment] output?",
                "[topology]   degree=constant:<d>|poisson:<lambda>",
                "[protocol]   variant=random|brickwork, n",
                "[sweep]      p_values | p_min + p_max + p_count, thinned? (monotone envelope)",
            ],
            ExperimentKind::BoundsComparison => &[
                "Capacity and bound chain against measured rates on one grid.",
                "columns: p,capacity,max_flow,gcc_bound,gcc_stderr,rate_4ghz,stderr_4ghz,rate_3ghz,stderr_3ghz",
                "[experiment] seed, trials, output?",
                "[topology]   type=grid, width, height, consumer_a?, consumer_b?",
                "[sweep]      p_values | p_min + p_max + p_count",
            ],
            ExperimentKind::QkdSift => &[
                "GHZ-based key sifting rounds; writes round metadata plus a hex key file.",
                "columns: round,m,l,basis_a,basis_b,sifted,key_bit",
                "[experiment] seed, output?, key_output? (default key.hex)",
                "[qkd]        m, l, rounds",
            ],
            ExperimentKind::OracleCheck => &[
                "Exhaustive-enumeration expectation vs Monte Carlo on small grids.",
                "columns: width,height,n,p,q,exact,mc_rate,mc_stderr,z",
                "[experiment] seed, trials, output?",
                "[oracle]     sizes? (default 2x2,2x3), ns? (default 2,3,4),",
                "             ps? (default 0.3,0.7), qs? (default 0.5,1.0)",
            ],
        }
    }
}

/// Text registry of all experiment kinds with their parameter documentation.
pub fn list_experiments() -> String {
    let mut s = String::new();
    for kind in ExperimentKind::ALL {
        let _ = writeln!(s, "{}", kind.name());
        for line in kind.doc() {
            let _ = writeln!(s, "    {line}");
        }
        let _ = writeln!(s);
    }
    s
}

// ---------------------------------------------------------------------------
// Config text parsing
// ---------------------------------------------------------------------------

/// Parses `[section]` / `key = value` text into `section.key -> value`.
/// Blank lines and lines starting with `#` or `;` are ignored.
fn parse_raw(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                Error::Config(format!("line {lineno}: unterminated section header {line:?}"))
            })?;
            section = name.trim().to_string();
            if section.is_empty() {
                return Err(Error::Config(format!("line {lineno}: empty section name")));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {lineno}: expected key = value or [section], got {line:?}"
            )));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {lineno}: empty key")));
        }
        let full =
            if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if entries.insert(full.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {lineno}: duplicate key \"{full}\"")));
        }
    }
    Ok(entries)
}

/// Typed accessor over the raw entries. Every consumed key is recorded with
/// its resolved value (explicit or default) so the CSV header can reproduce
/// the full effective configuration; leftover keys fail the parse.
struct Cfg {
    entries: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Cfg {
    fn new(entries: BTreeMap<String, String>) -> Cfg {
        Cfg { entries, resolved: BTreeMap::new() }
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    fn take_raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn opt<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some(s) => {
                let v: T = s.trim().parse().map_err(|e| {
                    Error::Config(format!("invalid value for key \"{key}\": {e}"))
                })?;
                self.record(key, &v);
                Ok(Some(v))
            }
        }
    }

    fn get_or<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.opt::<T>(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    fn require<T>(&mut self, key: &str) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(key)?
            .ok_or_else(|| Error::Config(format!("missing required key \"{key}\"")))
    }

    fn opt_list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some(s) => {
                let items = s
                    .split(',')
                    .map(|tok| {
                        tok.trim().parse::<T>().map_err(|e| {
                            Error::Config(format!("invalid value for key \"{key}\": {e}"))
                        })
                    })
                    .collect::<Result<Vec<T>>>()?;
                let joined =
                    items.iter().map(T::to_string).collect::<Vec<_>>().join(",");
                self.record(key, joined);
                Ok(Some(items))
            }
        }
    }

    fn finish(self) -> Result<BTreeMap<String, String>> {
        if !self.entries.is_empty() {
            let keys: Vec<String> =
                self.entries.keys().map(|k| format!("\"{k}\"")).collect();
            let noun = if keys.len() == 1 { "key" } else { "keys" };
            return Err(Error::Config(format!("unknown {noun} {}", keys.join(", "))));
        }
        Ok(self.resolved)
    }
}

fn check_range(key: &str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Config(format!("key \"{key}\" must lie in [{lo}, {hi}], got {v}")))
    }
}

fn check_min_u64(key: &str, v: u64, lo: u64) -> Result<u64> {
    if v >= lo {
        Ok(v)
    } else {
        Err(Error::Config(format!("key \"{key}\" must be at least {lo}, got {v}")))
    }
}

fn parse_pair(key: &str, s: &str) -> Result<(i32, i32)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("key \"{key}\" must be \"x,y\", got {s:?}")));
    }
    let coord = |t: &str| {
        t.parse::<i32>()
            .map_err(|e| Error::Config(format!("invalid value for key \"{key}\": {e}")))
    };
    Ok((coord(parts[0])?, coord(parts[1])?))
}

fn parse_degree(key: &str, s: &str) -> Result<DegreeDistribution> {
    if let Some(d) = s.strip_prefix("constant:") {
        let d: usize = d.trim().parse().map_err(|e| {
            Error::Config(format!("invalid value for key \"{key}\": {e}"))
        })?;
        if d < 1 {
            return Err(Error::Config(format!("key \"{key}\": degree must be at least 1")));
        }
        Ok(DegreeDistribution::constant(d))
    } else if let Some(l) = s.strip_prefix("poisson:") {
        let lambda: f64 = l.trim().parse().map_err(|e| {
            Error::Config(format!("invalid value for key \"{key}\": {e}"))
        })?;
        DegreeDistribution::poisson(lambda, None)
    } else {
        Err(Error::Config(format!(
            "key \"{key}\" must be \"constant:<d>\" or \"poisson:<lambda>\", got {s:?}"
        )))
    }
}

/// Inclusive p grid: explicit `sweep.p_values` wins over a linear range.
fn parse_p_grid(cfg: &mut Cfg) -> Result<Vec<f64>> {
    if let Some(values) = cfg.opt_list::<f64>("sweep.p_values")? {
        if values.is_empty() {
            return Err(Error::Config(
                "key \"sweep.p_values\" must list at least one value".into(),
            ));
        }
        for &p in &values {
            check_range("sweep.p_values", p, 0.0, 1.0)?;
        }
        return Ok(values);
    }
    let lo = check_range("sweep.p_min", cfg.require("sweep.p_min")?, 0.0, 1.0)?;
    let hi = check_range("sweep.p_max", cfg.require("sweep.p_max")?, 0.0, 1.0)?;
    if hi < lo {
        return Err(Error::Config("key \"sweep.p_max\" must be >= sweep.p_min".into()));
    }
    let count: u64 = check_min_u64("sweep.p_count", cfg.require("sweep.p_count")?, 1)?;
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

// ---------------------------------------------------------------------------
// Topology / protocol sections
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum TopoKind {
    Grid {
        width: u32,
        height: u32,
        a: (i32, i32),
        b: (i32, i32),
        brickwork: bool,
        divided: bool,
    },
    Configuration {
        dist: DegreeDistribution,
        nodes: u32,
    },
}

impl TopoKind {
    fn build_grid(&self) -> Result<Topology> {
        match self {
            TopoKind::Grid { width, height, a, b, brickwork, divided } => {
                let mut g = Topology::square_grid(*width, *height, *a, *b)?;
                if *brickwork {
                    g = g.brickwork_colored()?;
                }
                if *divided {
                    g = g.divided()?;
                }
                Ok(g)
            }
            TopoKind::Configuration { .. } => Err(Error::Config(
                "key \"topology.type\" must be \"grid\" for this experiment".into(),
            )),
        }
    }
}

fn parse_topology(cfg: &mut Cfg) -> Result<TopoKind> {
    let ty: String = cfg.get_or("topology.type", "grid".to_string())?;
    match ty.as_str() {
        "grid" => {
            let width: u32 = cfg.require("topology.width")?;
            let height: u32 = cfg.require("topology.height")?;
            let a = match cfg.opt::<String>("topology.consumer_a")? {
                Some(s) => parse_pair("topology.consumer_a", &s)?,
                None => {
                    cfg.record("topology.consumer_a", "1,1");
                    (1, 1)
                }
            };
            let b = match cfg.opt::<String>("topology.consumer_b")? {
                Some(s) => parse_pair("topology.consumer_b", &s)?,
                None => {
                    let bd = (width as i32 - 2, height as i32 - 2);
                    cfg.record("topology.consumer_b", format!("{},{}", bd.0, bd.1));
                    bd
                }
            };
            let brickwork = cfg.get_or("topology.brickwork", false)?;
            let divided = cfg.get_or("topology.divided", false)?;
            if brickwork && divided {
                return Err(Error::Config(
                    "keys \"topology.brickwork\" and \"topology.divided\" cannot be combined"
                        .into(),
                ));
            }
            Ok(TopoKind::Grid { width, height, a, b, brickwork, divided })
        }
        "configuration" => {
            let nodes: u32 = cfg.require("topology.nodes")?;
            if nodes < 2 {
                return Err(Error::Config("key \"topology.nodes\" must be at least 2".into()));
            }
            let spec: String = cfg.require("topology.degree")?;
            let dist = parse_degree("topology.degree", &spec)?;
            Ok(TopoKind::Configuration { dist, nodes })
        }
        other => Err(Error::Config(format!(
            "key \"topology.type\" must be \"grid\" or \"configuration\", got {other:?}"
        ))),
    }
}

fn parse_variant(cfg: &mut Cfg) -> Result<Variant> {
    let name: String = cfg.get_or("protocol.variant", "random".to_string())?;
    let n: u32 = cfg.require("protocol.n")?;
    if n < 2 {
        return Err(Error::Config(format!("key \"protocol.n\" must be at least 2, got {n}")));
    }
    match name.as_str() {
        "random" => Ok(Variant::Random { n }),
        "brickwork" => Ok(Variant::Brickwork { n }),
        other => Err(Error::Config(format!(
            "key \"protocol.variant\" must be \"random\" or \"brickwork\", got {other:?}"
        ))),
    }
}

/// A brickwork-variant run on a grid needs the colored grid.
fn check_brickwork_consistency(kind: &TopoKind, variant: Variant) -> Result<()> {
    if let (Variant::Brickwork { .. }, TopoKind::Grid { brickwork: false, .. }) = (variant, kind)
    {
        return Err(Error::Config(
            "protocol.variant = brickwork on a grid requires topology.brickwork = true".into(),
        ));
    }
    Ok(())
}

fn consumers_for_distance(width: u32, height: u32, d: u32) -> Result<((i32, i32), (i32, i32))> {
    let y = (height / 2) as i32;
    let xa = (width as i64 - d as i64) / 2;
    let xb = xa + d as i64;
    if d == 0 || xa < 0 || xb > width as i64 - 1 {
        return Err(Error::Config(format!(
            "key \"sweep.distances\": separation {d} does not fit a width-{width} grid"
        )));
    }
    Ok(((xa as i32, y), (xb as i32, y)))
}

// ---------------------------------------------------------------------------
// Experiment spec
// ---------------------------------------------------------------------------

/// A fully validated experiment: kind, resolved parameters, output names,
/// and the seed (CLI override already applied).
#[derive(Debug)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: u64,
    output: String,
    header: String,
    body: Body,
}

#[derive(Debug)]
enum Body {
    RateVsP {
        topo: Topology,
        variant: Variant,
        q: f64,
        p_star: Option<f64>,
        p_values: Vec<f64>,
        trials: u64,
    },
    RateVsDistance {
        width: u32,
        height: u32,
        brickwork: bool,
        distances: Vec<u32>,
        variant: Variant,
        p: f64,
        q: f64,
        p_star: Option<f64>,
        trials: u64,
    },
    SiteBondSim {
        kind: TopoKind,
        variant: Variant,
        p_values: Vec<f64>,
        trials: u64,
        tol: f64,
        level: f64,
    },
    SiteBondAnalytic {
        dist: DegreeDistribution,
        n: u32,
        brickwork: bool,
        thinned: bool,
        p_values: Vec<f64>,
    },
    BoundsComparison {
        topo: Topology,
        p_values: Vec<f64>,
        trials: u64,
    },
    QkdSift {
        m: usize,
        l: usize,
        rounds: u64,
        key_output: String,
    },
    OracleCheck {
        sizes: Vec<(u32, u32)>,
        ns: Vec<u32>,
        ps: Vec<f64>,
        qs: Vec<f64>,
        trials: u64,
    },
}

fn default_output(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::RateVsP => "rate_vs_p.csv",
        ExperimentKind::RateVsDistance => "rate_vs_distance.csv",
        ExperimentKind::SiteBondSim => "site_bond_sim.csv",
        ExperimentKind::SiteBondAnalytic => "site_bond_analytic.csv",
        ExperimentKind::BoundsComparison => "bounds_comparison.csv",
        ExperimentKind::QkdSift => "qkd_rounds.csv",
        ExperimentKind::OracleCheck => "oracle_check.csv",
    }
}

/// Parses and validates a config text. `seed_override` (the CLI flag)
/// replaces any seed given in the file and is what the header records.
pub fn parse_spec(text: &str, seed_override: Option<u64>) -> Result<ExperimentSpec> {
    let mut cfg = Cfg::new(parse_raw(text)?);
    let kind_name: String = cfg.require("experiment.kind")?;
    let kind = ExperimentKind::from_name(&kind_name)?;
    let seed = match seed_override {
        Some(s) => {
            cfg.take_raw("experiment.seed");
            cfg.record("experiment.seed", s);
            s
        }
        None => cfg.get_or("experiment.seed", 0u64)?,
    };
    let output: String = {
        let d = default_output(kind).to_string();
        cfg.get_or("experiment.output", d)?
    };

    let body = match kind {
        ExperimentKind::RateVsP => {
            let tk = parse_topology(&mut cfg)?;
            let variant = parse_variant(&mut cfg)?;
            check_brickwork_consistency(&tk, variant)?;
            let q = check_range("protocol.q", cfg.require("protocol.q")?, 0.0, 1.0)?;
            let p_star = match cfg.opt::<f64>("protocol.p_star")? {
                Some(v) => Some(check_range("protocol.p_star", v, 0.0, 1.0)?),
                None => None,
            };
            let p_values = parse_p_grid(&mut cfg)?;
            let trials = check_min_u64("experiment.trials", cfg.require("experiment.trials")?, 1)?;
            let topo = tk.build_grid()?;
            ProtocolConfig { variant, p: p_values[0], q, p_star, trials, seed }
                .validate(&topo)?;
            Body::RateVsP { topo, variant, q, p_star, p_values, trials }
        }
        ExperimentKind::RateVsDistance => {
            let ty: String = cfg.get_or("topology.type", "grid".to_string())?;
            if ty != "grid" {
                return Err(Error::Config(
                    "key \"topology.type\" must be \"grid\" for this experiment".into(),
                ));
            }
            let width: u32 = cfg.require("topology.width")?;
            let height: u32 = cfg.require("topology.height")?;
            let brickwork = cfg.get_or("topology.brickwork", false)?;
            let variant = parse_variant(&mut cfg)?;
            if matches!(variant, Variant::Brickwork { .. }) && !brickwork {
                return Err(Error::Config(
                    "protocol.variant = brickwork on a grid requires topology.brickwork = true"
                        .into(),
                ));
            }
            let p = check_range("protocol.p", cfg.require("protocol.p")?, 0.0, 1.0)?;
            let q = check_range("protocol.q", cfg.require("protocol.q")?, 0.0, 1.0)?;
            let p_star = match cfg.opt::<f64>("protocol.p_star")? {
                Some(v) => Some(check_range("protocol.p_star", v, 0.0, 1.0)?),
                None => None,
            };
            let distances = cfg.opt_list::<u32>("sweep.distances")?.ok_or_else(|| {
                Error::Config("missing required key \"sweep.distances\"".into())
            })?;
            let trials = check_min_u64("experiment.trials", cfg.require("experiment.trials")?, 1)?;
            for &d in &distances {
                let (a, b) = consumers_for_distance(width, height, d)?;
                let g = Topology::square_grid(width, height, a, b)?;
                let g = if brickwork { g.brickwork_colored()? } else { g };
                ProtocolConfig { variant, p, q, p_star, trials, seed }.validate(&g)?;
            }
            Body::RateVsDistance { width, height, brickwork, distances, variant, p, q, p_star, trials }
        }
        ExperimentKind::SiteBondSim => {
            let tk = parse_topology(&mut cfg)?;
            let variant = parse_variant(&mut cfg)?;
            check_brickwork_consistency(&tk, variant)?;
            let p_values = parse_p_grid(&mut cfg)?;
            let trials = check_min_u64("experiment.trials", cfg.require("experiment.trials")?, 1)?;
            let tol = check_range("sweep.tol", cfg.get_or("sweep.tol", 1.0 / 256.0)?, 1e-9, 0.5)?;
            let level = match cfg.opt::<f64>("sweep.level")? {
                Some(v) => check_range("sweep.level", v, 1e-12, 1.0)?,
                None => {
                    let v = match &tk {
                        TopoKind::Grid { .. } => GRID_CONNECTION_LEVEL,
                        TopoKind::Configuration { nodes, .. } => {
                            default_fraction_level(*nodes as usize)
                        }
                    };
                    cfg.record("sweep.level", v);
                    v
                }
            };
            if let TopoKind::Grid { .. } = &tk {
                tk.build_grid()?;
            }
            Body::SiteBondSim { kind: tk, variant, p_values, trials, tol, level }
        }
        ExperimentKind::SiteBondAnalytic => {
            let spec: String = cfg.require("topology.degree")?;
            let dist = parse_degree("topology.degree", &spec)?;
            excess_distribution(&dist)?;
            let variant = parse_variant(&mut cfg)?;
            let thinned = cfg.get_or("sweep.thinned", false)?;
            let p_values = parse_p_grid(&mut cfg)?;
            let (n, brickwork) = match variant {
                Variant::Random { n } => (n, false),
                Variant::Brickwork { n } => (n, true),
            };
            Body::SiteBondAnalytic { dist, n, brickwork, thinned, p_values }
        }
        ExperimentKind::BoundsComparison => {
            let tk = parse_topology(&mut cfg)?;
            let p_values = parse_p_grid(&mut cfg)?;
            let trials = check_min_u64("experiment.trials", cfg.require("experiment.trials")?, 1)?;
            let topo = tk.build_grid()?;
            topo.consumer_distance()?;
            Body::BoundsComparison { topo, p_values, trials }
        }
        ExperimentKind::QkdSift => {
            let m: usize = cfg.require("qkd.m")?;
            let l: usize = cfg.require("qkd.l")?;
            GhzShare::new(m, l)?;
            let rounds: u64 = cfg.require("qkd.rounds")?;
            let key_output: String = cfg.get_or("experiment.key_output", "key.hex".to_string())?;
            Body::QkdSift { m, l, rounds, key_output }
        }
        ExperimentKind::OracleCheck => {
            let sizes_s: String = cfg.get_or("oracle.sizes", "2x2,2x3".to_string())?;
            let mut sizes = Vec::new();
            for tok in sizes_s.split(',') {
                let tok = tok.trim();
                let Some((w, h)) = tok.split_once('x') else {
                    return Err(Error::Config(format!(
                        "key \"oracle.sizes\" entries must be <width>x<height>, got {tok:?}"
                    )));
                };
                let parse = |t: &str| {
                    t.trim().parse::<u32>().map_err(|e| {
                        Error::Config(format!("invalid value for key \"oracle.sizes\": {e}"))
                    })
                };
                let (w, h) = (parse(w)?, parse(h)?);
                let edges = w as u64 * h.saturating_sub(1) as u64
                    + h as u64 * w.saturating_sub(1) as u64;
                if edges > 16 {
                    return Err(Error::Config(format!(
                        "key \"oracle.sizes\": {w}x{h} has {edges} edges; exact enumeration supports at most 16"
                    )));
                }
                Topology::square_grid(w, h, (0, 0), (w as i32 - 1, h as i32 - 1))?;
                sizes.push((w, h));
            }
            let ns = match cfg.opt_list::<u32>("oracle.ns")? {
                Some(v) => v,
                None => {
                    cfg.record("oracle.ns", "2,3,4");
                    vec![2, 3, 4]
                }
            };
            for &n in &ns {
                if n < 2 {
                    return Err(Error::Config(format!(
                        "key \"oracle.ns\" entries must be at least 2, got {n}"
                    )));
                }
            }
            let ps = match cfg.opt_list::<f64>("oracle.ps")? {
                Some(v) => v,
                None => {
                    cfg.record("oracle.ps", "0.3,0.7");
                    vec![0.3, 0.7]
                }
            };
            let qs = match cfg.opt_list::<f64>("oracle.qs")? {
                Some(v) => v,
                None => {
                    cfg.record("oracle.qs", "0.5,1");
                    vec![0.5, 1.0]
                }
            };
            for &p in ps.iter().chain(qs.iter()) {
                check_range("oracle.ps/oracle.qs", p, 0.0, 1.0)?;
            }
            let trials = check_min_u64("experiment.trials", cfg.require("experiment.trials")?, 1)?;
            Body::OracleCheck { sizes, ns, ps, qs, trials }
        }
    };

    let resolved = cfg.finish()?;
    let mut header = String::from("#");
    for (k, v) in &resolved {
        let _ = write!(header, " {k}={v}");
    }
    Ok(ExperimentSpec { kind, seed, output, header, body })
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// Files written by a successful run.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// Runs the experiment and writes its artifacts under `out_dir` (created if
/// missing). Returns the paths written.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let seed = spec.seed;
    let mut files = Vec::new();
    let mut s = String::new();
    let _ = writeln!(s, "{}", spec.header);

    match &spec.body {
        Body::RateVsP { topo, variant, q, p_star, p_values, trials } => {
            let _ = writeln!(s, "p,distance,rate,stderr");
            let d = topo.consumer_distance()?;
            for &p in p_values {
                let cfg = ProtocolConfig {
                    variant: *variant,
                    p,
                    q: *q,
                    p_star: *p_star,
                    trials: *trials,
                    seed,
                };
                let est = estimate_rate(topo, &cfg)?;
                let _ = writeln!(s, "{},{},{},{}", fmt_f(p), d, fmt_f(est.rate), fmt_f(est.stderr));
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
        }
        Body::RateVsDistance {
            width,
            height,
            brickwork,
            distances,
            variant,
            p,
            q,
            p_star,
            trials,
        } => {
            let _ = writeln!(s, "p,distance,rate,stderr");
            for &d in distances {
                let (a, b) = consumers_for_distance(*width, *height, d)?;
                let mut g = Topology::square_grid(*width, *height, a, b)?;
                if *brickwork {
                    g = g.brickwork_colored()?;
                }
                let cfg = ProtocolConfig {
                    variant: *variant,
                    p: *p,
                    q: *q,
                    p_star: *p_star,
                    trials: *trials,
                    seed,
                };
                let est = estimate_rate(&g, &cfg)?;
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt_f(*p),
                    g.consumer_distance()?,
                    fmt_f(est.rate),
                    fmt_f(est.stderr)
                );
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
        }
        Body::SiteBondSim { kind, variant, p_values, trials, tol, level } => {
            let curve = match kind {
                TopoKind::Grid { .. } => {
                    let topo = kind.build_grid()?;
                    let curve = site_bond_curve_sim(
                        &Ensemble::Fixed(&topo),
                        *variant,
                        p_values,
                        Estimator::Connection { level: *level },
                        *trials,
                        seed,
                        *tol,
                    )?;
                    curve
                }
                TopoKind::Configuration { dist, nodes } => {
                    let need_color = matches!(variant, Variant::Brickwork { .. });
                    let n = variant.n();
                    let dist = dist.clone();
                    let nodes = *nodes;
                    let sample = move |trial: u64| -> Result<Topology> {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TOPO_SALT);
                        rng.set_stream(trial);
                        let t = Topology::configuration_graph(&dist, nodes as usize, &mut rng)?;
                        Ok(if need_color { t.bounded_black_colored(n, &mut rng) } else { t })
                    };
                    site_bond_curve_sim(
                        &Ensemble::Resampled(Box::new(sample)),
                        *variant,
                        p_values,
                        Estimator::GiantFraction { level: *level },
                        *trials,
                        seed,
                        *tol,
                    )?
                }
            };
            let _ = writeln!(s, "p,q_c,uncertainty");
            for pt in &curve {
                let qc = pt.q_c.map(fmt_f).unwrap_or_default();
                let _ = writeln!(s, "{},{},{}", fmt_f(pt.p), qc, fmt_f(pt.uncertainty));
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
        }
        Body::SiteBondAnalytic { dist, n, brickwork, thinned, p_values } => {
            let ctx = excess_distribution(dist)?;
            let mut pts = if *brickwork {
                brickwork_curve(&ctx, *n, p_values)
            } else {
                analytic_curve(&ctx, *n, p_values)
            };
            if *thinned {
                pts = thinned_curve(&pts);
            }
            let _ = writeln!(s, "p,q_c");
            for (p, qc) in &pts {
                let qc = qc.map(fmt_f).unwrap_or_default();
                let _ = writeln!(s, "{},{}", fmt_f(*p), qc);
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
        }
        Body::BoundsComparison { topo, p_values, trials } => {
            let _ = writeln!(
                s,
                "p,capacity,max_flow,gcc_bound,gcc_stderr,rate_4ghz,stderr_4ghz,rate_3ghz,stderr_3ghz"
            );
            let dmax = (topo.max_degree() as u32).max(2);
            for &p in p_values {
                let capacity = ultimate_capacity(p)?;
                let flow = max_flow_bound(p)?;
                let bond_cfg = ProtocolConfig {
                    variant: Variant::Random { n: dmax },
                    p,
                    q: 1.0,
                    p_star: None,
                    trials: *trials,
                    seed,
                };
                let (frac, frac_se) = crate::percolation::giant_component_fraction(topo, &bond_cfg)?;
                let gcc = gcc_bound(frac)?;
                let gcc_se = 2.0 * frac * frac_se;
                let est4 = estimate_rate(
                    topo,
                    &ProtocolConfig {
                        variant: Variant::Random { n: 4 },
                        p,
                        q: 1.0,
                        p_star: None,
                        trials: *trials,
                        seed,
                    },
                )?;
                let est3 = estimate_rate(
                    topo,
                    &ProtocolConfig {
                        variant: Variant::Random { n: 3 },
                        p,
                        q: 1.0,
                        p_star: None,
                        trials: *trials,
                        seed,
                    },
                )?;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    fmt_f(p),
                    fmt_f(capacity),
                    fmt_f(flow),
                    fmt_f(gcc),
                    fmt_f(gcc_se),
                    fmt_f(est4.rate),
                    fmt_f(est4.stderr),
                    fmt_f(est3.rate),
                    fmt_f(est3.stderr),
                );
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
        }
        Body::QkdSift { m, l, rounds, key_output } => {
            let res = run_qkd(GhzShare::new(*m, *l)?, *rounds, seed)?;
            let _ = writeln!(
                s,
                "# sifted={} sift_rate={} mismatches={} key_bits={}",
                res.sifted,
                fmt_f(res.sift_rate()),
                res.mismatches,
                res.key_a.len()
            );
            let _ = writeln!(s, "round,m,l,basis_a,basis_b,sifted,key_bit");
            for (i, r) in res.log.iter().enumerate() {
                let key = r.key_bit.map(|b| b.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    i,
                    m,
                    l,
                    r.basis_a.symbol(),
                    r.basis_b.symbol(),
                    r.sifted as u8,
                    key
                );
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
            let key_text = format!("{}\n", bits_to_hex(&res.key_a));
            files.push(write_out(out_dir, key_output, &key_text)?);
        }
        Body::OracleCheck { sizes, ns, ps, qs, trials } => {
            let _ = writeln!(s, "width,height,n,p,q,exact,mc_rate,mc_stderr,z");
            for &(w, h) in sizes {
                let topo = Topology::square_grid(w, h, (0, 0), (w as i32 - 1, h as i32 - 1))?;
                for &n in ns {
                    let variant = Variant::Random { n };
                    for &p in ps {
                        for &q in qs {
                            let exact = exact_shared_expectation(&topo, variant, p, q)?;
                            let est = estimate_rate(
                                &topo,
                                &ProtocolConfig {
                                    variant,
                                    p,
                                    q,
                                    p_star: None,
                                    trials: *trials,
                                    seed,
                                },
                            )?;
                            let z = if est.stderr > 0.0 {
                                (est.rate - exact) / est.stderr
                            } else if (est.rate - exact).abs() < 1e-12 {
                                0.0
                            } else {
                                f64::INFINITY
                            };
                            let _ = writeln!(
                                s,
                                "{},{},{},{},{},{},{},{},{}",
                                w,
                                h,
                                n,
                                fmt_f(p),
                                fmt_f(q),
                                fmt_f(exact),
                                fmt_f(est.rate),
                                fmt_f(est.stderr),
                                fmt_f(z),
                            );
                        }
                    }
                }
            }
            files.push(write_out(out_dir, &spec.output, &s)?);
        }
    }
    Ok(RunOutcome { files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir()
            .join(format!("ghznet-test-{}-{tag}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "[experiment]\nkind = qkd-sift\n[qkd]\nm = 2\nl = 1\nrounds = 4\nfoo = 1\n";
        let err = parse_spec(text, None).unwrap_err().to_string();
        assert!(err.contains("unknown key \"qkd.foo\""), "{err}");
    }

    #[test]
    fn out_of_range_q_names_key() {
        let text = "[experiment]\nkind = rate-vs-p\ntrials = 10\n\
                    [topology]\nwidth = 3\nheight = 3\n\
                    [protocol]\nn = 3\nq = 1.5\n[sweep]\np_values = 0.5\n";
        let err = parse_spec(text, None).unwrap_err().to_string();
        assert!(err.contains("protocol.q"), "{err}");
    }

    #[test]
    fn unknown_kind_lists_valid() {
        let err = ExperimentKind::from_name("nope").unwrap_err().to_string();
        for kind in ExperimentKind::ALL {
            assert!(err.contains(kind.name()), "{err} missing {}", kind.name());
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = parse_raw("[a]\nx = 1\nx = 2\n").unwrap_err().to_string();
        assert!(err.contains("duplicate key \"a.x\""), "{err}");
    }

    #[test]
    fn listing_covers_all_kinds() {
        let text = list_experiments();
        for kind in ExperimentKind::ALL {
            assert!(text.contains(kind.name()), "listing missing {}", kind.name());
        }
        assert!(text.contains("tol"));
        assert!(text.contains("p_values"));
    }

    #[test]
    fn seed_override_wins_and_is_recorded() {
        let text = "[experiment]\nkind = qkd-sift\nseed = 5\n[qkd]\nm = 2\nl = 1\nrounds = 4\n";
        let spec = parse_spec(text, Some(42)).unwrap();
        assert_eq!(spec.seed, 42);
        assert!(spec.header.contains("experiment.seed=42"), "{}", spec.header);
        let spec2 = parse_spec(text, None).unwrap();
        assert_eq!(spec2.seed, 5);
    }

    #[test]
    fn defaults_recorded_in_header() {
        let text = "[experiment]\nkind = rate-vs-p\ntrials = 10\n\
                    [topology]\nwidth = 4\nheight = 4\n\
                    [protocol]\nn = 3\nq = 0.5\n[sweep]\np_values = 0.5\n";
        let spec = parse_spec(text, None).unwrap();
        assert!(spec.header.contains("topology.consumer_a=1,1"), "{}", spec.header);
        assert!(spec.header.contains("topology.consumer_b=2,2"), "{}", spec.header);
        assert!(spec.header.contains("protocol.variant=random"), "{}", spec.header);
        assert!(spec.header.contains("experiment.seed=0"), "{}", spec.header);
    }

    #[test]
    fn oracle_check_runs_and_reruns_identically() {
        let text = "[experiment]\nkind = oracle-check\nseed = 9\ntrials = 400\n\
                    [oracle]\nsizes = 2x2\nns = 2\nps = 0.6\nqs = 0.5\n";
        let dir = tmp_dir("oracle");
        let spec = parse_spec(text, None).unwrap();
        let out1 = run_experiment(&spec, &dir).unwrap();
        let bytes1 = std::fs::read(&out1.files[0]).unwrap();
        let out2 = run_experiment(&spec, &dir).unwrap();
        let bytes2 = std::fs::read(&out2.files[0]).unwrap();
        assert_eq!(bytes1, bytes2);
        let body = String::from_utf8(bytes1).unwrap();
        assert!(body.starts_with('#'), "{body}");
        assert!(body.lines().nth(1).unwrap().starts_with("width,height"), "{body}");
        assert_eq!(body.lines().count(), 3);
    }

    #[test]
    fn qkd_sift_writes_csv_and_key() {
        let text = "[experiment]\nkind = qkd-sift\nseed = 3\n[qkd]\nm = 2\nl = 2\nrounds = 64\n";
        let dir = tmp_dir("qkd");
        let spec = parse_spec(text, None).unwrap();
        let out = run_experiment(&spec, &dir).unwrap();
        assert_eq!(out.files.len(), 2);
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        assert!(csv.contains("round,m,l,basis_a,basis_b,sifted,key_bit"));
        let key = std::fs::read_to_string(&out.files[1]).unwrap();
        let key = key.trim();
        assert!(!key.is_empty());
        assert!(key.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn analytic_curve_has_empty_entries_below_threshold() {
        let text = "[experiment]\nkind = site-bond-analytic\n\
                    [topology]\ndegree = constant:4\n\
                    [protocol]\nn = 3\n[sweep]\np_values = 0.2,1.0\n";
        let dir = tmp_dir("analytic");
        let spec = parse_spec(text, None).unwrap();
        let out = run_experiment(&spec, &dir).unwrap();
        let body = std::fs::read_to_string(&out.files[0]).unwrap();
        let rows: Vec<&str> = body.lines().skip(2).collect();
        assert!(rows[0].ends_with(','), "no threshold at p=0.2: {}", rows[0]);
        assert!(rows[1].contains("6.66666667e-1"), "q_c(1) = 2/3: {}", rows[1]);
    }

    #[test]
    fn brickwork_variant_requires_colored_grid() {
        let text = "[experiment]\nkind = rate-vs-p\ntrials = 10\n\
                    [topology]\nwidth = 4\nheight = 4\n\
                    [protocol]\nvariant = brickwork\nn = 3\nq = 0.5\n\
                    [sweep]\np_values = 0.5\n";
        let err = parse_spec(text, None).unwrap_err().to_string();
        assert!(err.contains("topology.brickwork"), "{err}");
    }

    #[test]
    fn p_grid_linear_range() {
        let text = "[experiment]\nkind = site-bond-analytic\n\
                    [topology]\ndegree = constant:4\n\
                    [protocol]\nn = 3\n\
                    [sweep]\np_min = 0.2\np_max = 1.0\np_count = 5\n";
        let dir = tmp_dir("grid");
        let spec = parse_spec(text, None).unwrap();
        let out = run_experiment(&spec, &dir).unwrap();
        let body = std::fs::read_to_string(&out.files[0]).unwrap();
        assert_eq!(body.lines().count(), 7);
        assert!(body.contains("4.00000000e-1"), "{body}");
    }
}
