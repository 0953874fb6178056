use std::fs;
use std::path::Path;

use graphcd::io::{read_change_map, read_gspm, read_png, write_change_map, write_raster_png};
use graphcd::pipeline::{run_on_images, run_pipeline, ImagePair, PipelineConfig};
use graphcd::synth::{generate_synthetic, SyntheticSpec};
use graphcd::Error;

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        height: 64,
        width: 64,
        n_regions: 32,
        seed,
        ..Default::default()
    }
}

fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.n_superpixels = 256;
    cfg.k = 15;
    cfg
}

fn write_inputs(dir: &Path, seed: u64) -> PipelineConfig {
    let pair = generate_synthetic(&small_spec(seed)).unwrap();
    write_raster_png(dir.join("pre.png"), &pair.pre).unwrap();
    write_raster_png(dir.join("post.png"), &pair.post).unwrap();
    write_change_map(dir.join("truth.png"), &pair.truth).unwrap();
    let mut cfg = small_config();
    cfg.pre = Some(dir.join("pre.png"));
    cfg.post = Some(dir.join("post.png"));
    cfg.truth = Some(dir.join("truth.png"));
    cfg.out_dir = dir.join("out");
    cfg
}

#[test]
fn precedence_is_flag_then_file_then_default() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    fs::write(&file, "alpha = 0.2\nmu = 0.5\n").unwrap();
    let cfg = PipelineConfig::resolve(Some(&file), [("mu", "2".to_string())]).unwrap();
    assert_eq!(cfg.solver.alpha, 0.2);
    assert_eq!(cfg.solver.mu, 2.0);
    assert_eq!(
        cfg.solver.max_iter,
        PipelineConfig::default().solver.max_iter
    );
    assert_eq!(cfg.k, 30);
}

#[test]
fn identical_inputs_give_a_near_zero_difference() {
    let pair = generate_synthetic(&small_spec(3)).unwrap();
    let same = ImagePair {
        pre: pair.pre.clone(),
        post: pair.pre.clone(),
        truth: None,
    };
    let quiet = run_on_images(&same, &small_config())
        .unwrap()
        .products
        .di
        .per_pixel
        .data;
    let changed = ImagePair {
        pre: pair.pre,
        post: pair.post,
        truth: None,
    };
    let loud = run_on_images(&changed, &small_config())
        .unwrap()
        .products
        .di
        .per_pixel
        .data;
    let inside: Vec<f64> = loud
        .iter()
        .zip(&pair.truth.labels)
        .filter(|(_, &t)| t == 1)
        .map(|(&v, _)| v)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&quiet) < 0.02, "{}", mean(&quiet));
    assert!(mean(&quiet) < 0.05 * mean(&inside));
}

#[test]
fn planted_change_is_detected() {
    let pair = generate_synthetic(&small_spec(5)).unwrap();
    let ip = ImagePair {
        pre: pair.pre,
        post: pair.post,
        truth: Some(pair.truth),
    };
    let report = run_on_images(&ip, &small_config())
        .unwrap()
        .products
        .report
        .unwrap();
    assert!(report.aur.unwrap() > 0.9, "{report:?}");
}

#[test]
fn outputs_round_trip_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = write_inputs(dir.path(), 11);
    cfg.run_vdf = true;
    cfg.trace = true;
    let out = run_pipeline(&cfg).unwrap();
    let o = &cfg.out_dir;
    for f in [
        "z.png",
        "di.png",
        "cm.png",
        "metrics.json",
        "trace.csv",
        "vdf_di.gspm",
        "vdf_cm.png",
    ] {
        assert!(o.join(f).is_file(), "{f} missing");
    }
    let di = read_gspm(o.join("di.gspm")).unwrap();
    assert_eq!((di.nrows(), di.ncols()), (64, 64));
    for i in 0..64 {
        for j in 0..64 {
            assert_eq!(di[(i, j)], out.products.di.per_pixel.get(i, j));
        }
    }
    assert_eq!(
        read_change_map(o.join("cm.png")).unwrap(),
        out.products.segmented.map
    );
    assert_eq!(read_png(o.join("di.png")).unwrap().height(), 64);
    let json = fs::read_to_string(o.join("metrics.json")).unwrap();
    let parsed: graphcd::detect::EvalReport = serde_json::from_str(&json).unwrap();
    assert_eq!(&parsed, out.products.report.as_ref().unwrap());

    let first = fs::read(o.join("metrics.json")).unwrap();
    let first_di = fs::read(o.join("di.gspm")).unwrap();
    cfg.out_dir = dir.path().join("again");
    run_pipeline(&cfg).unwrap();
    assert_eq!(fs::read(cfg.out_dir.join("metrics.json")).unwrap(), first);
    assert_eq!(fs::read(cfg.out_dir.join("di.gspm")).unwrap(), first_di);
}

#[test]
fn error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_inputs(dir.path(), 2);

    let mut missing = cfg.clone();
    missing.pre = Some(dir.path().join("nope.png"));
    assert!(matches!(run_pipeline(&missing), Err(Error::Io { .. })));

    let mut big_k = cfg.clone();
    big_k.k = 10_000;
    assert!(matches!(run_pipeline(&big_k), Err(Error::Config(_))));

    let mut bad = cfg.clone();
    bad.solver.alpha = -1.0;
    assert!(matches!(run_pipeline(&bad), Err(Error::Config(_))));

    let other = generate_synthetic(&SyntheticSpec {
        height: 32,
        ..small_spec(2)
    })
    .unwrap();
    write_change_map(dir.path().join("small.png"), &other.truth).unwrap();
    let mut mismatch = cfg.clone();
    mismatch.truth = Some(dir.path().join("small.png"));
    assert!(matches!(
        run_pipeline(&mismatch),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn backward_swaps_the_inputs() {
    let pair = generate_synthetic(&small_spec(4)).unwrap();
    let mut cfg = small_config();
    let fwd = ImagePair {
        pre: pair.pre.clone(),
        post: pair.post.clone(),
        truth: None,
    };
    let bwd = ImagePair {
        pre: pair.post,
        post: pair.pre,
        truth: None,
    };
    let a = run_on_images(&fwd, &cfg).unwrap();
    cfg.set("direction", "backward").unwrap();
    let b = run_on_images(&bwd, &cfg).unwrap();
    assert_eq!(a.products.di.per_pixel, b.products.di.per_pixel);
}
