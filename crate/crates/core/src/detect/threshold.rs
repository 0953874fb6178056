use std::fmt;
use std::str::FromStr;

use super::DifferenceImage;
use crate::error::{Error, Result};

pub const OTSU_BINS: usize = 256;
const KMEANS_MAX_SWEEPS: usize = 100;

/// Binary per-pixel labels, `1` = changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u8>,
}

impl ChangeMap {
    pub fn new(height: usize, width: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::dims(format!(
                "{} labels for a {height}x{width} map",
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::param("change map labels must be 0 or 1"));
        }
        Ok(ChangeMap {
            height,
            width,
            labels,
        })
    }

    pub fn changed_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMethod {
    #[default]
    Otsu,
    KMeans2,
}

impl FromStr for ThresholdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "otsu" => Ok(ThresholdMethod::Otsu),
            "kmeans2" | "kmeans" => Ok(ThresholdMethod::KMeans2),
            other => Err(Error::param(format!("unknown threshold method `{other}`"))),
        }
    }
}

impl fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMethod::Otsu => "otsu",
            ThresholdMethod::KMeans2 => "kmeans2",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Segmented {
    pub map: ChangeMap,
    /// Decision boundary in difference-image units.
    pub threshold: f64,
    /// The difference image was constant and everything was labeled unchanged.
    pub degenerate: bool,
}

/// Histogram bin of a value already scaled to `[0, 1]`.
pub fn otsu_bin(v: f64) -> usize {
    ((v * OTSU_BINS as f64) as usize).min(OTSU_BINS - 1)
}

/// Cut `t` in `1..=255` maximizing the between-class variance of bins `< t`
/// versus bins `>= t`. The first maximum wins.
pub fn otsu_cut(hist: &[u64; OTSU_BINS]) -> usize {
    let total: f64 = hist.iter().sum::<u64>() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(b, &h)| b as f64 * h as f64)
        .sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 1);
    for t in 1..OTSU_BINS {
        w0 += hist[t - 1] as f64;
        s0 += (t - 1) as f64 * hist[t - 1] as f64;
        let w1 = total - w0;
        let between = if w0 == 0.0 || w1 == 0.0 {
            0.0
        } else {
            let diff = s0 / w0 - (sum_all - s0) / w1;
            w0 * w1 * diff * diff
        };
        if between > best.0 {
            best = (between, t);
        }
    }
    best.1
}

pub fn segment_threshold(di: &DifferenceImage, method: ThresholdMethod) -> Result<Segmented> {
    let grid = &di.per_pixel;
    let (lo, hi) = grid
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if grid.data.is_empty() {
        return Err(Error::Empty("difference image"));
    }
    if !(hi > lo) {
        return Ok(Segmented {
            map: ChangeMap::new(grid.height, grid.width, vec![0; grid.data.len()])?,
            threshold: hi,
            degenerate: true,
        });
    }
    let (labels, threshold) = match method {
        ThresholdMethod::Otsu => {
            let bins: Vec<usize> = grid.normalized().into_iter().map(otsu_bin).collect();
            let mut hist = [0u64; OTSU_BINS];
            for &b in &bins {
                hist[b] += 1;
            }
            let cut = otsu_cut(&hist);
            let labels = bins.iter().map(|&b| u8::from(b >= cut)).collect();
            (labels, lo + (hi - lo) * cut as f64 / OTSU_BINS as f64)
        }
        ThresholdMethod::KMeans2 => {
            let (c_lo, c_hi) = two_means(&di.per_vertex);
            let labels = grid
                .data
                .iter()
                .map(|&v| u8::from((v - c_hi).abs() < (v - c_lo).abs()))
                .collect();
            (labels, 0.5 * (c_lo + c_hi))
        }
    };
    Ok(Segmented {
        map: ChangeMap::new(grid.height, grid.width, labels)?,
        threshold,
        degenerate: false,
    })
}

/// 1-D 2-means with centers initialized at the extremes.
fn two_means(values: &[f64]) -> (f64, f64) {
    let mut c_lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut c_hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut assign: Vec<bool> = vec![false; values.len()];
    for sweep in 0..KMEANS_MAX_SWEEPS {
        let next: Vec<bool> = values
            .iter()
            .map(|&v| (v - c_hi).abs() < (v - c_lo).abs())
            .collect();
        if sweep > 0 && next == assign {
            break;
        }
        assign = next;
        let (mut s, mut n) = ([0.0; 2], [0usize; 2]);
        for (&v, &a) in values.iter().zip(&assign) {
            s[usize::from(a)] += v;
            n[usize::from(a)] += 1;
        }
        if n[0] > 0 {
            c_lo = s[0] / n[0] as f64;
        }
        if n[1] > 0 {
            c_hi = s[1] / n[1] as f64;
        }
    }
    (c_lo, c_hi)
}
