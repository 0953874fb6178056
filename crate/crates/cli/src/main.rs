use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphcd::io::{affinity_coo_text, read_png, write_change_map, write_raster_png};
use graphcd::pipeline::{
    image_affinity, image_spectrum, load_inputs, run_on_images, write_outputs, PipelineConfig,
};
use graphcd::synth::{generate_synthetic, ModalityMap, SyntheticSpec};
use graphcd::{Error, Result};

#[derive(Parser)]
#[command(
    name = "graphcd",
    version,
    about = "Graph-based change detection for heterogeneous image pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a pre/post image pair.
    Detect(DetectArgs),
    /// Write a synthetic pre/post/truth triple.
    Synth(SynthArgs),
    /// Graph spectrum of an image's features, as `lambda,norm` CSV.
    Spectrum(SingleImageArgs),
    /// Export an image's adaptive affinity as a coordinate list.
    Graph(GraphExportArgs),
}

/// Settings shared by every subcommand that builds a graph. Unset flags fall
/// back to the config file, then to the defaults.
#[derive(Args)]
struct GraphArgs {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_superpixels: Option<String>,
    /// grid | slic
    #[arg(long)]
    segmentation: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Standardize feature columns (true | false).
    #[arg(long)]
    standardize: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// l2 | entropy
    #[arg(long)]
    graph_mode: Option<String>,
}

impl GraphArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        push(&mut v, "n-superpixels", &self.n_superpixels);
        push(&mut v, "segmentation", &self.segmentation);
        push(&mut v, "seed", &self.seed);
        push(&mut v, "standardize", &self.standardize);
        push(&mut v, "k", &self.k);
        push(&mut v, "graph-mode", &self.graph_mode);
        v
    }
}

fn push(v: &mut Vec<(&'static str, String)>, key: &'static str, value: &Option<String>) {
    if let Some(value) = value {
        v.push((key, value.clone()));
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DetectArgs {
    #[arg(long)]
    pre: Option<PathBuf>,
    #[arg(long)]
    post: Option<PathBuf>,
    /// Ground-truth change map; enables metrics.json.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    xi0: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// l21 | l20 | l20-literal | topk
    #[arg(long)]
    prox: Option<String>,
    /// Row budget for `--prox topk`.
    #[arg(long)]
    tau: Option<String>,
    /// Penalty polynomial coefficients, e.g. `1,1,1`.
    #[arg(long)]
    filter_coeffs: Option<String>,
    /// direct | iterative
    #[arg(long)]
    linear_solver: Option<String>,
    /// otsu | kmeans2
    #[arg(long)]
    threshold: Option<String>,
    /// forward | backward
    #[arg(long)]
    direction: Option<String>,
    /// Also run the spectral-projection baseline with this cutoff.
    #[arg(long)]
    kc: Option<String>,
    /// laplacian | average
    #[arg(long)]
    vdf_shift: Option<String>,
    /// Also run the vertex-domain filtering baseline.
    #[arg(long)]
    vdf: bool,
    /// Write the per-iteration solver log to trace.csv.
    #[arg(long)]
    trace: bool,
    /// Exit with status 3 when the solver does not converge.
    #[arg(long)]
    strict: bool,
}

impl DetectArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut v = Vec::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        push(&mut v, "pre", &path(&self.pre));
        push(&mut v, "post", &path(&self.post));
        push(&mut v, "truth", &path(&self.truth));
        push(&mut v, "out", &path(&self.out));
        v.extend(self.graph.overrides());
        push(&mut v, "alpha", &self.alpha);
        push(&mut v, "mu", &self.mu);
        push(&mut v, "xi0", &self.xi0);
        push(&mut v, "max-iter", &self.max_iter);
        // tau first so that `--prox topk` sees it.
        push(&mut v, "tau", &self.tau);
        push(&mut v, "prox", &self.prox);
        push(&mut v, "filter-coeffs", &self.filter_coeffs);
        push(&mut v, "linear-solver", &self.linear_solver);
        push(&mut v, "threshold", &self.threshold);
        push(&mut v, "direction", &self.direction);
        push(&mut v, "kc", &self.kc);
        push(&mut v, "vdf-shift", &self.vdf_shift);
        for (flag, key) in [
            (self.vdf, "vdf"),
            (self.trace, "trace"),
            (self.strict, "strict"),
        ] {
            if flag {
                v.push((key, "true".to_string()));
            }
        }
        PipelineConfig::resolve(self.graph.config.as_deref(), v)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving pre.png, post.png and truth.png.
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 48)]
    regions: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 0.1)]
    change_fraction: f64,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Comma-separated channel maps: identity, inverted, gamma:<g>, sigmoid:<s>.
    #[arg(long)]
    pre_maps: Option<String>,
    #[arg(long)]
    post_maps: Option<String>,
}

fn parse_maps(list: &str) -> Result<Vec<ModalityMap>> {
    list.split(',').map(|m| m.trim().parse()).collect()
}

#[derive(Args)]
struct SingleImageArgs {
    #[arg(long)]
    image: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphArgs,
}

impl SingleImageArgs {
    fn config(&self) -> Result<PipelineConfig> {
        PipelineConfig::resolve(self.graph.config.as_deref(), self.graph.overrides())
    }
}

#[derive(Args)]
struct GraphExportArgs {
    #[command(flatten)]
    image: SingleImageArgs,
    /// Export the row-stochastic affinity before Sinkhorn balancing.
    #[arg(long)]
    unbalanced: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        _ => 1,
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }),
            _ => Ok(()),
        },
    }
}

fn detect(args: &DetectArgs) -> Result<u8> {
    let cfg = args.config()?;
    cfg.validate()?;
    let pair = load_inputs(&cfg)?;
    let out = run_on_images(&pair, &cfg)?;
    write_outputs(&out, &cfg)?;
    if out.products.segmented.degenerate {
        eprintln!("warning: difference image is constant; every pixel is labeled unchanged");
    }
    let s = &out.state;
    eprintln!(
        "{} superpixels, {} iterations, converged: {}",
        out.map.n_regions(),
        s.iter,
        s.converged
    );
    if let Some(r) = &out.products.report {
        print!("{}", r.to_json());
    }
    if cfg.strict && !s.converged {
        let feas = s.feas_history.last().copied().unwrap_or(f64::NAN);
        eprintln!("error: solver did not converge (final primal residual {feas:e})");
        return Ok(3);
    }
    Ok(0)
}

fn synth(args: &SynthArgs) -> Result<u8> {
    let mut spec = SyntheticSpec {
        height: args.height,
        width: args.width,
        n_regions: args.regions,
        n_classes: args.classes,
        change_fraction: args.change_fraction,
        noise_sigma: args.noise,
        seed: args.seed,
        ..Default::default()
    };
    if let Some(m) = &args.pre_maps {
        spec.pre_maps = parse_maps(m)?;
    }
    if let Some(m) = &args.post_maps {
        spec.post_maps = parse_maps(m)?;
    }
    let pair = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    write_raster_png(args.out.join("pre.png"), &pair.pre)?;
    write_raster_png(args.out.join("post.png"), &pair.post)?;
    write_change_map(args.out.join("truth.png"), &pair.truth)?;
    Ok(0)
}

fn spectrum(args: &SingleImageArgs) -> Result<u8> {
    let cfg = args.config()?;
    let img = read_png(&args.image)?;
    let profile = image_spectrum(&img, &cfg)?;
    write_text(args.out.as_deref(), &profile.to_csv())?;
    Ok(0)
}

fn graph(args: &GraphExportArgs) -> Result<u8> {
    let cfg = args.image.config()?;
    let img = read_png(&args.image.image)?;
    let w = image_affinity(&img, &cfg, !args.unbalanced)?;
    write_text(args.image.out.as_deref(), &affinity_coo_text(&w))?;
    Ok(0)
}

fn main() -> ExitCode {
    graphcd::faer::set_global_parallelism(graphcd::faer::Par::Seq);
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Synth(a) => synth(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Graph(a) => graph(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
