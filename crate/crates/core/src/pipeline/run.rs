use std::fs;
use std::path::{Path, PathBuf};

use faer::Mat;

use super::{Direction, PipelineConfig};
use crate::detect::{
    difference_image, evaluate, segment_threshold, vdf_difference, ChangeMap, DifferenceImage,
    EvalReport, Segmented,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_adaptive_affinity, build_graph, pairwise_sq_distances, GraphOperators, SparseAffinity,
};
use crate::imaging::{
    extract_features, reproject, segment_superpixels, FeatureMatrix, ImageRaster, SuperpixelMap,
};
use crate::io::{
    read_change_map, read_png, write_change_map, write_channels_png, write_gray_png, write_gspm,
};
use crate::regression::{solve_decomposition, ProxMode, RegressionState};
use crate::spectral::{
    energy_profile, laplacian_basis, spectral_projection_regression, EnergyProfile,
};

/// Difference image, its change map and, with ground truth, the metrics.
#[derive(Debug, Clone)]
pub struct ChangeProducts {
    pub di: DifferenceImage,
    pub segmented: Segmented,
    pub report: Option<EvalReport>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub map: SuperpixelMap,
    pub state: RegressionState,
    pub products: ChangeProducts,
    pub vdf: Option<ChangeProducts>,
    pub spectral: Option<ChangeProducts>,
}

/// Both rasters with the graph-source image first.
pub struct ImagePair {
    pub pre: ImageRaster,
    pub post: ImageRaster,
    pub truth: Option<ChangeMap>,
}

fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| Error::Config(format!("missing `{what}` input path")))
}

pub fn load_inputs(cfg: &PipelineConfig) -> Result<ImagePair> {
    let pre = read_png(required(&cfg.pre, "pre")?)?;
    let post = read_png(required(&cfg.post, "post")?)?;
    let truth = cfg.truth.as_ref().map(read_change_map).transpose()?;
    Ok(ImagePair { pre, post, truth })
}

fn products(
    per_vertex: Vec<f64>,
    map: &SuperpixelMap,
    cfg: &PipelineConfig,
    truth: Option<&ChangeMap>,
) -> Result<ChangeProducts> {
    let di = DifferenceImage::from_vertex_values(per_vertex, map)?;
    finish_products(di, cfg, truth)
}

fn finish_products(
    di: DifferenceImage,
    cfg: &PipelineConfig,
    truth: Option<&ChangeMap>,
) -> Result<ChangeProducts> {
    let segmented = segment_threshold(&di, cfg.threshold)?;
    let report = truth
        .map(|t| evaluate(&segmented.map, t, &di.per_pixel.data))
        .transpose()?;
    Ok(ChangeProducts {
        di,
        segmented,
        report,
    })
}

fn with_config_errors<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter(msg) => Error::Config(msg),
        other => other,
    })
}

/// Superpixels of `source`, features of both images on that tessellation.
pub fn image_features(
    source: &ImageRaster,
    target: &ImageRaster,
    cfg: &PipelineConfig,
) -> Result<(SuperpixelMap, FeatureMatrix, FeatureMatrix)> {
    if source.height() != target.height() || source.width() != target.width() {
        return Err(Error::dims(format!(
            "images are {}x{} and {}x{}",
            source.height(),
            source.width(),
            target.height(),
            target.width()
        )));
    }
    let map = with_config_errors(segment_superpixels(
        source,
        cfg.n_superpixels,
        cfg.segmentation,
        cfg.seed,
    ))?;
    let x = extract_features(source, &map, cfg.standardize)?;
    let y = extract_features(target, &map, cfg.standardize)?;
    Ok((map, x, y))
}

fn check_k(cfg: &PipelineConfig, n: usize) -> Result<()> {
    if cfg.k >= n {
        return Err(Error::Config(format!(
            "k = {} needs more than {} superpixels",
            cfg.k, n
        )));
    }
    Ok(())
}

/// Runs every stage in memory.
pub fn run_on_images(pair: &ImagePair, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (source, target) = match cfg.direction {
        Direction::Forward => (&pair.pre, &pair.post),
        Direction::Backward => (&pair.post, &pair.pre),
    };
    if let Some(t) = &pair.truth {
        if t.height != source.height() || t.width != source.width() {
            return Err(Error::dims("ground truth size differs from the images"));
        }
    }
    let (map, x, y) = image_features(source, target, cfg)?;
    let n = map.n_regions();
    check_k(cfg, n)?;
    if let ProxMode::TopK { tau } = cfg.solver.prox {
        if tau > n {
            return Err(Error::Config(format!(
                "tau = {tau} exceeds {n} superpixels"
            )));
        }
    }
    let graph = build_graph(&x, cfg.k, cfg.graph_mode)?;
    let state = solve_decomposition(&y, &graph, &cfg.solver)?;
    let truth = pair.truth.as_ref();
    let di = difference_image(&state.delta, &map)?;
    let main = finish_products(di, cfg, truth)?;

    let vdf = if cfg.run_vdf {
        let g_target = build_graph(&y, cfg.k, cfg.graph_mode)?;
        let d = vdf_difference(&y, &graph, &g_target, cfg.vdf_shift)?;
        Some(products(d, &map, cfg, truth)?)
    } else {
        None
    };
    let spectral = match cfg.kc {
        Some(kc) => {
            if kc > n {
                return Err(Error::Config(format!("kc = {kc} exceeds {n} superpixels")));
            }
            let basis = laplacian_basis(&graph)?;
            let (_, high) = spectral_projection_regression(&basis, &y, kc)?;
            Some(products(high.row_norms(), &map, cfg, truth)?)
        }
        None => None,
    };
    Ok(PipelineOutput {
        map,
        state,
        products: main,
        vdf,
        spectral,
    })
}

fn write_products(dir: &Path, prefix: &str, p: &ChangeProducts) -> Result<()> {
    let grid = &p.di.per_pixel;
    write_gray_png(dir.join(format!("{prefix}di.png")), grid)?;
    let m = Mat::from_fn(grid.height, grid.width, |i, j| grid.get(i, j));
    write_gspm(dir.join(format!("{prefix}di.gspm")), &m)?;
    write_change_map(dir.join(format!("{prefix}cm.png")), &p.segmented.map)?;
    if let Some(report) = &p.report {
        let path = dir.join(format!("{prefix}metrics.json"));
        fs::write(&path, report.to_json()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Writes `z.png`, `di.png`, `di.gspm`, `cm.png`, `metrics.json` (with
/// truth), `vdf_*` and `sp_*` baseline files when enabled, and `trace.csv`
/// with tracing on.
pub fn write_outputs(out: &PipelineOutput, cfg: &PipelineConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let z = out.state.z.as_mat();
    let means = (0..z.ncols() / 3)
        .map(|c| {
            let col: Vec<f64> = (0..z.nrows()).map(|i| z[(i, 3 * c)]).collect();
            reproject(&col, &out.map)
        })
        .collect::<Result<Vec<_>>>()?;
    write_channels_png(dir.join("z.png"), &means)?;
    write_products(dir, "", &out.products)?;
    if let Some(p) = &out.vdf {
        write_products(dir, "vdf_", p)?;
    }
    if let Some(p) = &out.spectral {
        write_products(dir, "sp_", p)?;
    }
    if cfg.trace {
        let path = dir.join("trace.csv");
        fs::write(&path, out.state.trace_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads the inputs named in `cfg`, runs every stage and writes the products.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let pair = load_inputs(cfg)?;
    let out = run_on_images(&pair, cfg)?;
    write_outputs(&out, cfg)?;
    Ok(out)
}

/// Energy profile of an image's own features on its own adaptive graph.
pub fn image_spectrum(img: &ImageRaster, cfg: &PipelineConfig) -> Result<EnergyProfile> {
    cfg.validate()?;
    let (_, x, _) = image_features(img, img, cfg)?;
    check_k(cfg, x.nrows())?;
    let graph: GraphOperators = build_graph(&x, cfg.k, cfg.graph_mode)?;
    energy_profile(&laplacian_basis(&graph)?, &x)
}

/// Adaptive affinity of an image's features; balanced when `balanced`.
pub fn image_affinity(
    img: &ImageRaster,
    cfg: &PipelineConfig,
    balanced: bool,
) -> Result<SparseAffinity> {
    cfg.validate()?;
    let (_, x, _) = image_features(img, img, cfg)?;
    check_k(cfg, x.nrows())?;
    if balanced {
        return Ok(build_graph(&x, cfg.k, cfg.graph_mode)?.affinity);
    }
    let dist = pairwise_sq_distances(&x)?;
    Ok(build_adaptive_affinity(dist.as_ref(), cfg.k, cfg.graph_mode)?.affinity)
}
