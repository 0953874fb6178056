use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::detect::{ThresholdMethod, VdfShift};
use crate::error::{Error, Result};
use crate::graph::AffinityMode;
use crate::imaging::Segmentation;
use crate::regression::{LinearSolver, ProxMode, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// Graph from the pre-event image, regression target the post-event one.
    #[default]
    Forward,
    /// Inputs swapped.
    Backward,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::Config(format!("unknown direction `{other}`"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub pre: Option<PathBuf>,
    pub post: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub n_superpixels: usize,
    pub segmentation: Segmentation,
    pub seed: u64,
    pub standardize: bool,
    pub k: usize,
    pub graph_mode: AffinityMode,
    pub solver: SolverConfig,
    /// Row budget for `prox = topk`.
    pub tau: Option<usize>,
    pub threshold: ThresholdMethod,
    pub direction: Direction,
    pub run_vdf: bool,
    pub vdf_shift: VdfShift,
    /// Cutoff of the spectral-projection baseline; `None` skips it.
    pub kc: Option<usize>,
    pub trace: bool,
    pub strict: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            pre: None,
            post: None,
            truth: None,
            out_dir: PathBuf::from("out"),
            n_superpixels: 2000,
            segmentation: Segmentation::Grid,
            seed: 42,
            standardize: false,
            k: 30,
            graph_mode: AffinityMode::L2,
            solver: SolverConfig::default(),
            tau: None,
            threshold: ThresholdMethod::Otsu,
            direction: Direction::Forward,
            run_vdf: false,
            vdf_shift: VdfShift::Laplacian,
            kc: None,
            trace: false,
            strict: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value `{value}` for `{key}`"
        ))),
    }
}

fn parse_with<T>(value: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    f(value).map_err(|e| match e {
        Error::InvalidParameter(msg) => Error::Config(msg),
        other => other,
    })
}

impl PipelineConfig {
    /// Keys accepted by [`PipelineConfig::set`]; they mirror the CLI flags.
    pub const KEYS: &'static [&'static str] = &[
        "pre",
        "post",
        "truth",
        "out",
        "n-superpixels",
        "segmentation",
        "seed",
        "standardize",
        "k",
        "graph-mode",
        "alpha",
        "mu",
        "xi0",
        "max-iter",
        "prox",
        "tau",
        "filter-coeffs",
        "linear-solver",
        "threshold",
        "direction",
        "vdf",
        "vdf-shift",
        "kc",
        "trace",
        "strict",
    ];

    /// Sets one field from its textual form. `_` and `-` are interchangeable
    /// in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "pre" => self.pre = Some(PathBuf::from(value)),
            "post" => self.post = Some(PathBuf::from(value)),
            "truth" => self.truth = Some(PathBuf::from(value)),
            "out" | "out-dir" => self.out_dir = PathBuf::from(value),
            "n-superpixels" => self.n_superpixels = parse(k, value)?,
            "segmentation" => self.segmentation = parse_with(value, str::parse)?,
            "seed" => self.seed = parse(k, value)?,
            "standardize" => self.standardize = parse_bool(k, value)?,
            "k" => self.k = parse(k, value)?,
            "graph-mode" => self.graph_mode = parse_with(value, str::parse)?,
            "alpha" => self.solver.alpha = parse(k, value)?,
            "mu" => self.solver.mu = parse(k, value)?,
            "xi0" => self.solver.xi0 = parse(k, value)?,
            "max-iter" => self.solver.max_iter = parse(k, value)?,
            "prox" => {
                // `topk` needs tau, which may arrive later; checked in `validate`.
                self.solver.prox = match value {
                    "topk" => ProxMode::TopK {
                        tau: self.tau.unwrap_or(0),
                    },
                    other => parse_with(other, |v| ProxMode::parse(v, None))?,
                }
            }
            "tau" => {
                let tau = parse(k, value)?;
                self.tau = Some(tau);
                if let ProxMode::TopK { .. } = self.solver.prox {
                    self.solver.prox = ProxMode::TopK { tau };
                }
            }
            "filter-coeffs" => {
                self.solver.filter_coeffs = value
                    .split(',')
                    .map(|v| parse::<f64>(k, v.trim()))
                    .collect::<Result<_>>()?
            }
            "linear-solver" => {
                self.solver.linear_solver = parse_with(value, str::parse::<LinearSolver>)?
            }
            "threshold" => self.threshold = parse_with(value, str::parse)?,
            "direction" => self.direction = parse(k, value)?,
            "vdf" => self.run_vdf = parse_bool(k, value)?,
            "vdf-shift" => self.vdf_shift = parse_with(value, str::parse)?,
            "kc" => self.kc = Some(parse(k, value)?),
            "trace" => self.trace = parse_bool(k, value)?,
            "strict" => self.strict = parse_bool(k, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Defaults, then the optional file, then `overrides` in order.
    pub fn resolve<'a>(
        file: Option<&Path>,
        overrides: impl IntoIterator<Item = (&'a str, String)>,
    ) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        for (key, value) in overrides {
            cfg.set(key, &value)?;
        }
        Ok(cfg)
    }

    /// Range checks that do not depend on the input images.
    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| Error::Config(e.to_string());
        if self.n_superpixels < 2 {
            return Err(Error::Config("n-superpixels must be at least 2".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let ProxMode::TopK { tau: 0 } = self.solver.prox {
            return Err(Error::Config("prox `topk` requires tau >= 1".into()));
        }
        if self.kc == Some(0) {
            return Err(Error::Config("kc must be at least 1".into()));
        }
        self.solver.validate(usize::MAX).map_err(config)
    }
}
