//! Experiment configuration: flat `key = value` files, flag overrides and
//! validation into a [`RunSpec`] before anything is computed.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use multibaker::husimi::default_resolution;

use crate::error::{CliError, CliResult};

/// Largest D accepted without `large-d = true`.
pub const DESK_MAX_D: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    CurrentSweep,
    Spectrum,
    LevelStats,
    Evolve,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CurrentSweep => "current-sweep",
            Self::Spectrum => "spectrum",
            Self::LevelStats => "level-stats",
            Self::Evolve => "evolve",
        }
    }

    fn default_dim(&self) -> usize {
        match self {
            Self::CurrentSweep => 100,
            Self::Spectrum | Self::LevelStats => 30,
            Self::Evolve => 20,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "current-sweep" => Ok(Self::CurrentSweep),
            "spectrum" => Ok(Self::Spectrum),
            "level-stats" => Ok(Self::LevelStats),
            "evolve" => Ok(Self::Evolve),
            _ => Err(format!("unknown experiment '{s}'")),
        }
    }
}

/// Raw configuration as read from a file and/or flags. Unset keys stay `None`
/// so that the file form round-trips exactly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub dims: Option<Vec<usize>>,
    pub d1: Option<Vec<usize>>,
    /// Inclusive `D1` range.
    pub d1_range: Option<(usize, usize)>,
    /// Momentum strip widths in states.
    pub delta_p: Option<Vec<usize>>,
    /// Strip width as a fraction of the momentum period.
    pub delta_p_width: Option<f64>,
    pub n_k: Option<usize>,
    pub t_max: Option<usize>,
    pub mc_samples: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    pub large_d: Option<bool>,
    pub husimi_t: Option<usize>,
    pub husimi_cells: Option<Vec<i64>>,
    pub husimi_resolution: Option<usize>,
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|e| format!("'{}': {e}", x.trim())))
        .collect()
}

fn parse_one<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("'{v}': {e}"))
}

/// `lo..=hi` or `lo:hi`, both inclusive.
pub fn parse_range(v: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = v
        .split_once("..=")
        .or_else(|| v.split_once(':'))
        .ok_or_else(|| format!("range '{v}' must look like 50..=99 or 50:99"))?;
    Ok((parse_one(lo.trim())?, parse_one(hi.trim())?))
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses the flat file form. Keys may use `-` or `_`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CliError::ConfigLine { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected 'key = value'".into()))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            if !seen.insert(key.clone()) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            cfg.set(&key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "experiment" => self.experiment = Some(parse_one(v)?),
            "D" => self.dims = Some(parse_list(v)?),
            "D1" => self.d1 = Some(parse_list(v)?),
            "D1-range" => self.d1_range = Some(parse_range(v)?),
            "delta-p" => self.delta_p = Some(parse_list(v)?),
            "delta-p-width" => self.delta_p_width = Some(parse_one(v)?),
            "n-k" => self.n_k = Some(parse_one(v)?),
            "t-max" => self.t_max = Some(parse_one(v)?),
            "mc-samples" => self.mc_samples = Some(parse_one(v)?),
            "seed" => self.seed = Some(parse_one(v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "svg" => self.svg = Some(parse_one(v)?),
            "large-d" => self.large_d = Some(parse_one(v)?),
            "husimi-t" => self.husimi_t = Some(parse_one(v)?),
            "husimi-cells" => self.husimi_cells = Some(parse_list(v)?),
            "husimi-resolution" => self.husimi_resolution = Some(parse_one(v)?),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// File form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        put("experiment", self.experiment.map(|e| e.to_string()));
        put("D", self.dims.as_deref().map(join));
        put("D1", self.d1.as_deref().map(join));
        put("D1-range", self.d1_range.map(|(a, b)| format!("{a}..={b}")));
        put("delta-p", self.delta_p.as_deref().map(join));
        put("delta-p-width", self.delta_p_width.map(|x| x.to_string()));
        put("n-k", self.n_k.map(|x| x.to_string()));
        put("t-max", self.t_max.map(|x| x.to_string()));
        put("mc-samples", self.mc_samples.map(|x| x.to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("svg", self.svg.map(|x| x.to_string()));
        put("large-d", self.large_d.map(|x| x.to_string()));
        put("husimi-t", self.husimi_t.map(|x| x.to_string()));
        put("husimi-cells", self.husimi_cells.as_deref().map(join));
        put("husimi-resolution", self.husimi_resolution.map(|x| x.to_string()));
        s
    }

    /// Values set in `over` replace those in `self`.
    pub fn overridden_by(self, over: ExperimentConfig) -> Self {
        Self {
            experiment: over.experiment.or(self.experiment),
            dims: over.dims.or(self.dims),
            d1: over.d1.or(self.d1),
            d1_range: over.d1_range.or(self.d1_range),
            delta_p: over.delta_p.or(self.delta_p),
            delta_p_width: over.delta_p_width.or(self.delta_p_width),
            n_k: over.n_k.or(self.n_k),
            t_max: over.t_max.or(self.t_max),
            mc_samples: over.mc_samples.or(self.mc_samples),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            svg: over.svg.or(self.svg),
            large_d: over.large_d.or(self.large_d),
            husimi_t: over.husimi_t.or(self.husimi_t),
            husimi_cells: over.husimi_cells.or(self.husimi_cells),
            husimi_resolution: over.husimi_resolution.or(self.husimi_resolution),
        }
    }
}

/// One dimension of a run with its `D1` and `Δp` lists (sorted, unique).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimPlan {
    pub dim: usize,
    pub d1: Vec<usize>,
    pub delta_p: Vec<usize>,
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub experiment: Experiment,
    pub plans: Vec<DimPlan>,
    pub n_k: usize,
    pub t_max: usize,
    pub mc_samples: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
    pub husimi_t: usize,
    pub husimi_cells: Vec<i64>,
    pub husimi_resolution: usize,
    /// The effective configuration, with every default filled in.
    pub snapshot: ExperimentConfig,
}

impl RunSpec {
    /// The single `(D, D1, Δp)` of experiments that need exactly one.
    pub fn single(&self) -> (usize, usize, usize) {
        let p = &self.plans[0];
        (p.dim, p.d1[0], p.delta_p[0])
    }
}

fn sorted_unique<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v.dedup();
    v
}

impl ExperimentConfig {
    /// Checks every constraint and fills defaults.
    pub fn validate(&self, experiment: Experiment) -> CliResult<RunSpec> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Some(e) = self.experiment {
            if e != experiment {
                return usage(format!("config is for '{e}' but '{experiment}' was requested"));
            }
        }
        let single = experiment != Experiment::CurrentSweep;
        let large_d = self.large_d.unwrap_or(false);

        let dims = sorted_unique(self.dims.clone().unwrap_or_else(|| vec![experiment.default_dim()]));
        if dims.is_empty() {
            return usage("D list is empty".into());
        }
        if single && dims.len() != 1 {
            return usage(format!("{experiment} takes a single D"));
        }
        if self.d1.is_some() && self.d1_range.is_some() {
            return usage("give either D1 or D1-range, not both".into());
        }
        if let Some((lo, hi)) = self.d1_range {
            if lo > hi {
                return usage(format!("empty D1-range {lo}..={hi}"));
            }
        }
        if let Some(w) = self.delta_p_width {
            if !(w > 0.0 && w <= 1.0) {
                return usage(format!("delta-p-width {w} must lie in (0, 1]"));
            }
        }
        let n_k = self.n_k.unwrap_or(multibaker::transport::DEFAULT_N_K);
        if n_k == 0 {
            return usage("n-k must be positive".into());
        }

        let mut plans = Vec::new();
        for &dim in &dims {
            if dim < 2 || dim % 2 != 0 {
                return usage(format!("D = {dim} must be even and at least 2"));
            }
            if dim > DESK_MAX_D && !large_d {
                return usage(format!("D = {dim} exceeds {DESK_MAX_D}; set large-d = true (--large-d) to allow it"));
            }
            let d1 = match (&self.d1, self.d1_range) {
                (Some(list), _) => sorted_unique(list.clone()),
                (None, Some((lo, hi))) => (lo..=hi).collect(),
                (None, None) if single => vec![dim / 2],
                (None, None) => (dim / 2..dim).collect(),
            };
            if d1.is_empty() {
                return usage("D1 list is empty".into());
            }
            if let Some(&bad) = d1.iter().find(|&&d1| d1 == 0 || d1 >= dim) {
                return usage(format!("D1 = {bad} outside [1, {}] for D = {dim}", dim - 1));
            }
            if experiment == Experiment::Evolve && d1.len() != 1 {
                return usage("evolve takes a single D1".into());
            }
            let from_width = self
                .delta_p_width
                .map(|w| (dim as f64 * w).round().max(1.0) as usize);
            let delta_p = match (&self.delta_p, from_width) {
                (Some(list), Some(derived)) => {
                    if list.iter().any(|&dp| dp != derived) {
                        return usage(format!(
                            "delta-p {list:?} inconsistent with delta-p-width: round(D·δp) = {derived} for D = {dim}"
                        ));
                    }
                    vec![derived]
                }
                (Some(list), None) => sorted_unique(list.clone()),
                (None, Some(derived)) => vec![derived],
                (None, None) => vec![((dim as f64 / 10.0).round() as usize).max(1)],
            };
            if delta_p.is_empty() {
                return usage("delta-p list is empty".into());
            }
            if let Some(&bad) = delta_p.iter().find(|&&dp| dp == 0 || dp > dim) {
                return usage(format!("delta-p = {bad} outside [1, {dim}] for D = {dim}"));
            }
            if single && delta_p.len() != 1 && experiment == Experiment::Evolve {
                return usage("evolve takes a single delta-p".into());
            }
            plans.push(DimPlan { dim, d1, delta_p });
        }

        let dim0 = dims[0];
        let t_max = self.t_max.unwrap_or(4 * dim0);
        if experiment == Experiment::Evolve && t_max == 0 {
            return usage("t-max must be at least 1".into());
        }
        let husimi_t = self.husimi_t.unwrap_or(t_max.min(3));
        if experiment == Experiment::Evolve && husimi_t > t_max {
            return usage(format!("husimi-t = {husimi_t} exceeds t-max = {t_max}"));
        }
        let husimi_cells = match &self.husimi_cells {
            Some(c) => sorted_unique(c.clone()),
            None => [-3i64, -1, 1, 3]
                .into_iter()
                .filter(|x| x.unsigned_abs() as usize <= husimi_t)
                .collect(),
        };
        if let Some(&bad) = husimi_cells.iter().find(|x| x.unsigned_abs() as usize > husimi_t) {
            return usage(format!("husimi cell {bad} outside the light cone |x| <= {husimi_t}"));
        }
        let husimi_resolution = self.husimi_resolution.unwrap_or(default_resolution(dim0));
        if husimi_resolution < 2 {
            return usage("husimi-resolution must be at least 2".into());
        }

        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("multibaker_out"));
        let mut snapshot = self.clone();
        snapshot.experiment = Some(experiment);
        snapshot.dims = Some(dims);
        snapshot.n_k = Some(n_k);
        snapshot.mc_samples = Some(self.mc_samples.unwrap_or(0));
        snapshot.seed = Some(self.seed.unwrap_or(0));
        snapshot.out = Some(out.clone());
        snapshot.svg = Some(self.svg.unwrap_or(false));
        snapshot.large_d = Some(large_d);
        if experiment == Experiment::Evolve {
            snapshot.t_max = Some(t_max);
            snapshot.husimi_t = Some(husimi_t);
            snapshot.husimi_cells = Some(husimi_cells.clone());
            snapshot.husimi_resolution = Some(husimi_resolution);
        }
        Ok(RunSpec {
            experiment,
            plans,
            n_k,
            t_max,
            mc_samples: self.mc_samples.unwrap_or(0),
            seed: self.seed.unwrap_or(0),
            out,
            svg: self.svg.unwrap_or(false),
            husimi_t,
            husimi_cells,
            husimi_resolution,
            snapshot,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> ExperimentConfig {
        ExperimentConfig {
            experiment: Some(Experiment::Evolve),
            dims: Some(vec![20]),
            d1: Some(vec![15]),
            d1_range: None,
            delta_p: Some(vec![2]),
            delta_p_width: Some(0.1),
            n_k: Some(128),
            t_max: Some(40),
            mc_samples: Some(1000),
            seed: Some(7),
            out: Some(PathBuf::from("runs/a b")),
            svg: Some(true),
            large_d: Some(false),
            husimi_t: Some(3),
            husimi_cells: Some(vec![-3, 1]),
            husimi_resolution: Some(64),
        }
    }

    #[test]
    fn file_form_round_trips() {
        let c = full();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        let c = ExperimentConfig {
            d1_range: Some((50, 99)),
            delta_p_width: Some(0.1 + 0.2),
            husimi_cells: Some(vec![]),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn parsing_comments_aliases_and_errors() {
        let c = ExperimentConfig::parse("# sweep\n\n D = 20,40 \nn_k=64\nD1-range = 10:19\n").unwrap();
        assert_eq!(c.dims, Some(vec![20, 40]));
        assert_eq!(c.n_k, Some(64));
        assert_eq!(c.d1_range, Some((10, 19)));
        for bad in ["D 20", "D = x", "bogus = 1", "D = 2\nD = 4", "D1-range = 3"] {
            assert!(matches!(
                ExperimentConfig::parse(bad),
                Err(CliError::ConfigLine { .. })
            ));
        }
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig::parse("D = 20\nseed = 1").unwrap();
        let flags = ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = file.overridden_by(flags);
        assert_eq!((c.dims, c.seed), (Some(vec![20]), Some(9)));
    }

    #[test]
    fn sweep_defaults() {
        let spec = ExperimentConfig::default()
            .validate(Experiment::CurrentSweep)
            .unwrap();
        let p = &spec.plans[0];
        assert_eq!(p.dim, 100);
        assert_eq!(p.d1, (50..100).collect::<Vec<_>>());
        assert_eq!(p.delta_p, vec![10]);
        assert_eq!(spec.n_k, 256);
    }

    #[test]
    fn evolve_defaults_and_width_consistency() {
        let c = ExperimentConfig {
            dims: Some(vec![80]),
            d1: Some(vec![60]),
            delta_p_width: Some(0.1),
            ..Default::default()
        };
        let spec = c.validate(Experiment::Evolve).unwrap();
        assert_eq!(spec.single(), (80, 60, 8));
        assert_eq!(spec.t_max, 320);
        assert_eq!(spec.husimi_cells, vec![-3, -1, 1, 3]);
        assert_eq!(spec.husimi_resolution, 64);

        let bad = ExperimentConfig {
            delta_p: Some(vec![7]),
            ..c
        };
        assert!(matches!(bad.validate(Experiment::Evolve), Err(CliError::Usage(_))));
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        let cases = [
            ExperimentConfig { dims: Some(vec![21]), ..Default::default() },
            ExperimentConfig { dims: Some(vec![200]), ..Default::default() },
            ExperimentConfig { dims: Some(vec![20]), d1: Some(vec![20]), ..Default::default() },
            ExperimentConfig { dims: Some(vec![20]), d1_range: Some((12, 10)), ..Default::default() },
            ExperimentConfig { dims: Some(vec![20]), delta_p: Some(vec![0]), ..Default::default() },
            ExperimentConfig { dims: Some(vec![20]), n_k: Some(0), ..Default::default() },
            ExperimentConfig { d1: Some(vec![5]), d1_range: Some((5, 6)), ..Default::default() },
            ExperimentConfig { experiment: Some(Experiment::Spectrum), ..Default::default() },
        ];
        for c in cases {
            let e = c.validate(Experiment::CurrentSweep).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{c:?}");
        }
        let big = ExperimentConfig { dims: Some(vec![200]), large_d: Some(true), ..Default::default() };
        assert!(big.validate(Experiment::CurrentSweep).is_ok());
        let two = ExperimentConfig { dims: Some(vec![20, 40]), ..Default::default() };
        assert!(two.validate(Experiment::Spectrum).is_err());
        let cells = ExperimentConfig { husimi_cells: Some(vec![5]), ..Default::default() };
        assert!(cells.validate(Experiment::Evolve).is_err());
    }

    #[test]
    fn snapshot_revalidates_identically() {
        let spec = full().validate(Experiment::Evolve).unwrap();
        let again = ExperimentConfig::parse(&spec.snapshot.to_text())
            .unwrap()
            .validate(Experiment::Evolve)
            .unwrap();
        assert_eq!(again, spec);
    }
}
