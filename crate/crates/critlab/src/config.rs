//! Experiment configuration: TOML text in, a validated [`ExperimentConfig`]
//! out, with every problem reported at once.

use std::fmt;
use std::path::PathBuf;

use critlab_core::measures::Metric;
use critlab_core::RootDistribution;
use num_complex::Complex64;
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Convergence,
    JensenAudit,
    Smallball,
    DecoupleCheck,
    Maxlog,
    Lln,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Convergence,
        Self::JensenAudit,
        Self::Smallball,
        Self::DecoupleCheck,
        Self::Maxlog,
        Self::Lln,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::JensenAudit => "jensen-audit",
            Self::Smallball => "smallball",
            Self::DecoupleCheck => "decouple-check",
            Self::Maxlog => "maxlog",
            Self::Lln => "lln",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which Möbius maps the LLN audit integrates against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiChoice {
    Random,
    Identity,
}

/// Optional knobs beyond the core fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Reference sample size; defaults to 2^14 (convergence) or 2^20 (lln).
    pub reference_size: Option<usize>,
    /// Circle radius for maxlog.
    pub radius: f64,
    /// Small-ball threshold.
    pub threshold: f64,
    /// Number of evaluation points `L`; defaults to `2^(k+2) k`.
    pub points: Option<usize>,
    /// Centre of the maxlog circle and of the small-ball point cluster.
    pub center: Complex64,
    /// Radius of the small-ball point cluster.
    pub spread: f64,
    pub psi: PsiChoice,
    /// Initial grid size for circle maxima.
    pub grid: usize,
    /// Record real wall-clock times instead of zeros.
    pub timing: bool,
    /// `n` values of the linear small-ball companion table.
    pub linear_n_list: Vec<usize>,
    /// Projection directions for the sliced metrics.
    pub directions: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            reference_size: None,
            radius: 2.0,
            threshold: 1.0,
            points: None,
            center: Complex64::new(0.0, 0.0),
            spread: 0.01,
            psi: PsiChoice::Random,
            grid: 256,
            timing: false,
            linear_n_list: vec![64, 256, 1024],
            directions: critlab_core::measures::DEFAULT_DIRECTIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub distribution: RootDistribution,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Monte Carlo trials (smallball), instances per seed and `n`
    /// (decouple-check), or Möbius maps per seed and `n` (jensen-audit, lln).
    pub trials: u64,
    pub metric: String,
    pub output_path: PathBuf,
    pub workers: usize,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn metric(&self) -> Metric {
        match Metric::from_name(&self.metric).expect("validated") {
            Metric::SlicedW1 { .. } => Metric::SlicedW1 { directions: self.params.directions },
            Metric::SlicedW1Chordal { .. } => Metric::SlicedW1Chordal { directions: self.params.directions },
        }
    }

    /// `L` for the joint small-ball estimate.
    pub fn points(&self) -> usize {
        self.params.points.unwrap_or((1usize << (self.k + 2).min(20)) * self.k)
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

pub const DEFAULT_TRIALS: u64 = 20;
pub const DEFAULT_OUTPUT: &str = "critlab-out";

const TOP_KEYS: &[&str] = &[
    "experiment",
    "distribution",
    "k",
    "n_list",
    "seeds",
    "trials",
    "metric",
    "output_path",
    "workers",
    "reference_size",
    "radius",
    "threshold",
    "points",
    "center",
    "spread",
    "psi",
    "grid",
    "timing",
    "linear_n_list",
    "directions",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    parse_config_for(text, None)
}

/// Like [`parse_config`], with `experiment` supplied when the file omits it.
/// A file naming a different experiment is an error.
pub fn parse_config_for(text: &str, experiment: Option<Experiment>) -> Result<ExperimentConfig, ConfigErrors> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![syntax_error(text, &e)]))?;
    let mut errs = Vec::new();
    let mut p = Parser { errs: &mut errs };

    for key in table.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            p.err(format!("unknown key `{key}`"));
        }
    }

    let experiment = match (table.get("experiment"), experiment) {
        (None, Some(e)) => Some(e),
        (None, None) => {
            p.err(format!("missing `experiment` (one of {})", Experiment::valid_names()));
            None
        }
        (Some(v), cli) => match v.as_str() {
            Some(name) => match Experiment::from_name(name) {
                Some(e) if cli.is_some_and(|c| c != e) => {
                    p.err(format!("config names experiment `{name}` but `{}` was requested", cli.unwrap()));
                    None
                }
                Some(e) => Some(e),
                None => {
                    p.err(format!("unknown experiment `{name}`; valid values are {}", Experiment::valid_names()));
                    None
                }
            },
            None => {
                p.err("`experiment` must be a string".into());
                None
            }
        },
    };

    let distribution = match table.get("distribution") {
        None => {
            p.err("missing [distribution] table".into());
            None
        }
        Some(Value::Table(t)) => p.distribution(t, "distribution"),
        Some(_) => {
            p.err("`distribution` must be a table".into());
            None
        }
    };

    let k = p.usize_or(&table, "k", 1);
    let n_list = match table.get("n_list") {
        None => {
            p.err("missing `n_list`".into());
            Vec::new()
        }
        Some(v) => p.usize_list(v, "n_list"),
    };
    if n_list.is_empty() && table.contains_key("n_list") {
        p.err("`n_list` must not be empty".into());
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        p.err(format!("`n_list` must be strictly ascending, got {n_list:?}"));
    }
    if n_list.contains(&0) {
        p.err("`n_list` entries must be positive".into());
    }

    let trials = p.usize_or(&table, "trials", DEFAULT_TRIALS as usize) as u64;
    if trials == 0 {
        p.err("`trials` must be positive".into());
    }
    let seeds: Vec<u64> = match table.get("seeds") {
        None => (0..DEFAULT_TRIALS).collect(),
        Some(v) => p.usize_list(v, "seeds").into_iter().map(|s| s as u64).collect(),
    };
    if seeds.is_empty() {
        p.err("`seeds` must not be empty".into());
    }

    let metric = p.str_or(&table, "metric", "sliced_w1");
    if Metric::from_name(&metric).is_none() {
        p.err(format!("unknown metric `{metric}`; valid values are {}", Metric::names().join(", ")));
    }
    let output_path = PathBuf::from(p.str_or(&table, "output_path", DEFAULT_OUTPUT));
    let workers = p.usize_or(&table, "workers", default_workers());
    if workers == 0 {
        p.err("`workers` must be positive".into());
    }

    let defaults = Params::default();
    let params = Params {
        reference_size: table.get("reference_size").map(|v| p.usize_value(v, "reference_size")),
        radius: p.f64_or(&table, "radius", defaults.radius),
        threshold: p.f64_or(&table, "threshold", defaults.threshold),
        points: table.get("points").map(|v| p.usize_value(v, "points")),
        center: table.get("center").map_or(defaults.center, |v| p.complex(v, "center")),
        spread: p.f64_or(&table, "spread", defaults.spread),
        psi: match p.str_or(&table, "psi", "random").as_str() {
            "random" => PsiChoice::Random,
            "identity" => PsiChoice::Identity,
            other => {
                p.err(format!("unknown psi `{other}`; valid values are random, identity"));
                PsiChoice::Random
            }
        },
        grid: p.usize_or(&table, "grid", defaults.grid),
        timing: match table.get("timing") {
            None => false,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                p.err("`timing` must be a boolean".into());
                false
            }
        },
        linear_n_list: table.get("linear_n_list").map_or(defaults.linear_n_list.clone(), |v| p.usize_list(v, "linear_n_list")),
        directions: p.usize_or(&table, "directions", defaults.directions),
    };
    for (name, v) in [("radius", params.radius), ("threshold", params.threshold), ("spread", params.spread)] {
        if !(v.is_finite() && v > 0.0) {
            p.err(format!("`{name}` must be positive and finite"));
        }
    }
    if params.directions == 0 || params.grid == 0 || params.reference_size == Some(0) || params.points == Some(0) {
        p.err("`directions`, `grid`, `reference_size` and `points` must be positive".into());
    }

    if let (Some(e), Some(&n0)) = (experiment, n_list.first()) {
        let min_k = usize::from(e != Experiment::Convergence);
        if k < min_k && e != Experiment::Lln {
            p.err(format!("`k` must be at least {min_k} for {e}"));
        }
        let needs_strict = matches!(e, Experiment::Convergence | Experiment::JensenAudit);
        if e != Experiment::Lln && (n0 < k || (needs_strict && n0 == k)) {
            p.err(format!("smallest n ({n0}) is too small for k = {k}"));
        }
        if e == Experiment::Smallball && trials < critlab_core::anticoncentration::MIN_TRIALS {
            p.err(format!("smallball needs `trials` ≥ {}", critlab_core::anticoncentration::MIN_TRIALS));
        }
        if e == Experiment::DecoupleCheck && k > 16 {
            p.err("decouple-check supports k ≤ 16".into());
        }
    }

    if !errs.is_empty() {
        return Err(ConfigErrors(errs));
    }
    Ok(ExperimentConfig {
        experiment: experiment.unwrap(),
        distribution: distribution.unwrap(),
        k,
        n_list,
        seeds,
        trials,
        metric,
        output_path,
        workers,
        params,
    })
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn syntax_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message();
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {msg}")
        }
        None => msg.to_string(),
    }
}

struct Parser<'a> {
    errs: &'a mut Vec<String>,
}

impl Parser<'_> {
    fn err(&mut self, msg: String) {
        self.errs.push(msg);
    }

    fn usize_value(&mut self, v: &Value, name: &str) -> usize {
        match v.as_integer() {
            Some(i) if i >= 0 => i as usize,
            _ => {
                self.err(format!("`{name}` must be a non-negative integer"));
                0
            }
        }
    }

    fn usize_or(&mut self, t: &Table, name: &str, default: usize) -> usize {
        t.get(name).map_or(default, |v| self.usize_value(v, name))
    }

    fn f64_value(&mut self, v: &Value, name: &str) -> f64 {
        match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => {
                self.err(format!("`{name}` must be a number"));
                f64::NAN
            }
        }
    }

    fn f64_or(&mut self, t: &Table, name: &str, default: f64) -> f64 {
        t.get(name).map_or(default, |v| self.f64_value(v, name))
    }

    fn str_or(&mut self, t: &Table, name: &str, default: &str) -> String {
        match t.get(name) {
            None => default.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.err(format!("`{name}` must be a string"));
                default.to_string()
            }
        }
    }

    fn usize_list(&mut self, v: &Value, name: &str) -> Vec<usize> {
        match v.as_array() {
            Some(items) => items.iter().map(|x| self.usize_value(x, name)).collect(),
            None => {
                self.err(format!("`{name}` must be an array of integers"));
                Vec::new()
            }
        }
    }

    fn f64_list(&mut self, v: &Value, name: &str) -> Vec<f64> {
        match v.as_array() {
            Some(items) => items.iter().map(|x| self.f64_value(x, name)).collect(),
            None => {
                self.err(format!("`{name}` must be an array of numbers"));
                Vec::new()
            }
        }
    }

    fn complex(&mut self, v: &Value, name: &str) -> Complex64 {
        let parts = self.f64_list(v, name);
        if parts.len() != 2 {
            self.err(format!("`{name}` must be [re, im]"));
            return Complex64::new(f64::NAN, f64::NAN);
        }
        Complex64::new(parts[0], parts[1])
    }

    fn distribution(&mut self, t: &Table, path: &str) -> Option<RootDistribution> {
        const KEYS: &[&str] = &["kind", "radius", "scale", "atoms", "weights", "components", "at"];
        for key in t.keys() {
            if !KEYS.contains(&key.as_str()) {
                self.err(format!("unknown key `{path}.{key}`"));
            }
        }
        let Some(kind) = t.get("kind").and_then(Value::as_str) else {
            self.err(format!("`{path}.kind` missing or not a string"));
            return None;
        };
        let num = |s: &mut Self, key: &str, default: f64| t.get(key).map_or(default, |v| s.f64_value(v, &format!("{path}.{key}")));
        let dist = match kind {
            "uniform-disk" => RootDistribution::uniform_disk(num(self, "radius", 1.0)),
            "uniform-circle" => RootDistribution::uniform_circle(num(self, "radius", 1.0)),
            "complex-gaussian" => RootDistribution::complex_gaussian(num(self, "scale", 1.0)),
            "two-atom" => Ok(RootDistribution::two_atom()),
            "point-mass" => {
                let at = t.get("at").map_or(Complex64::new(0.0, 0.0), |v| self.complex(v, &format!("{path}.at")));
                Ok(RootDistribution::point_mass(at))
            }
            "discrete" => {
                let atoms: Vec<Complex64> = match t.get("atoms").and_then(Value::as_array) {
                    Some(items) => items.iter().map(|a| self.complex(a, &format!("{path}.atoms"))).collect(),
                    None => {
                        self.err(format!("`{path}.atoms` must be an array of [re, im] pairs"));
                        return None;
                    }
                };
                let weights = match t.get("weights") {
                    Some(v) => self.f64_list(v, &format!("{path}.weights")),
                    None => vec![1.0 / atoms.len().max(1) as f64; atoms.len()],
                };
                RootDistribution::discrete(atoms, weights)
            }
            "mixture" => {
                let Some(items) = t.get("components").and_then(Value::as_array) else {
                    self.err(format!("`{path}.components` must be an array of tables"));
                    return None;
                };
                let mut components = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match item.as_table() {
                        Some(ct) => components.push(self.distribution(ct, &format!("{path}.components[{i}]"))?),
                        None => {
                            self.err(format!("`{path}.components[{i}]` must be a table"));
                            return None;
                        }
                    }
                }
                let weights = match t.get("weights") {
                    Some(v) => self.f64_list(v, &format!("{path}.weights")),
                    None => vec![1.0 / components.len().max(1) as f64; components.len()],
                };
                RootDistribution::mixture(components, weights)
            }
            other => {
                self.err(format!(
                    "unknown distribution kind `{other}`; valid values are uniform-disk, uniform-circle, complex-gaussian, two-atom, point-mass, discrete, mixture"
                ));
                return None;
            }
        };
        match dist {
            Ok(d) => Some(d),
            Err(e) => {
                self.err(format!("`{path}`: {e}"));
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "convergence"
n_list = [64, 256]
[distribution]
kind = "uniform-disk"
"#;

    #[test]
    fn minimal_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.trials, 20);
        assert_eq!(c.seeds, (0..20).collect::<Vec<u64>>());
        assert_eq!(c.metric, "sliced_w1");
        assert_eq!(c.workers, default_workers());
        assert_eq!(c.k, 1);
        assert_eq!(c.distribution, RootDistribution::UniformDisk { radius: 1.0 });
    }

    #[test]
    fn bogus_experiment_lists_valid_names() {
        let err = parse_config(&MINIMAL.replace("convergence", "bogus")).unwrap_err();
        let text = err.to_string();
        for e in Experiment::ALL {
            assert!(text.contains(e.name()), "{text}");
        }
    }

    #[test]
    fn duplicate_key_reports_line() {
        let text = "experiment = \"lln\"\nk = 1\nk = 2\nn_list = [4]\n[distribution]\nkind = \"uniform-disk\"\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.0[0].starts_with("line 3:"), "{err}");
    }

    #[test]
    fn collects_every_error() {
        let text = "experiment = \"convergence\"\nn_list = [8, 4]\nmetric = \"w9\"\nbogus = 1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.0.len() >= 4, "{err}");
    }

    #[test]
    fn empty_n_list_rejected() {
        assert!(parse_config(&MINIMAL.replace("[64, 256]", "[]")).is_err());
    }

    #[test]
    fn mixture_and_discrete() {
        let text = r#"
experiment = "lln"
n_list = [8]
[distribution]
kind = "mixture"
weights = [0.25, 0.75]
[[distribution.components]]
kind = "discrete"
atoms = [[1.0, 0.0], [0.0, 2.0]]
weights = [0.5, 0.5]
[[distribution.components]]
kind = "uniform-circle"
radius = 3.0
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.distribution.kind_name(), "mixture");
    }

    #[test]
    fn cli_experiment_fills_in_and_conflicts() {
        let text = MINIMAL.replace("experiment = \"convergence\"\n", "");
        assert_eq!(parse_config_for(&text, Some(Experiment::Maxlog)).unwrap().experiment, Experiment::Maxlog);
        assert!(parse_config_for(MINIMAL, Some(Experiment::Lln)).is_err());
    }
}
