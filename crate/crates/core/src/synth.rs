//! Synthetic heterogeneous image pairs with a known change mask.
//!
//! A latent piecewise-constant image is drawn as Voronoi cells of seeded
//! points; every cell takes one of a few evenly spaced class levels, so each
//! class recurs across the scene. Each modality renders the latent value through
//! its own monotone channel maps, so the two images share region structure but
//! not intensities. A contiguous union of cells gets a new latent value before
//! the post-event rendering.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::detect::ChangeMap;
use crate::error::{Error, Result};
use crate::imaging::ImageRaster;

/// Monotone map `[0, 1] -> [0, 1]` rendering a latent value in one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModalityMap {
    Identity,
    Inverted,
    Gamma(f64),
    Sigmoid(f64),
}

impl ModalityMap {
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            ModalityMap::Identity => v,
            ModalityMap::Inverted => 1.0 - v,
            ModalityMap::Gamma(g) => v.powf(g),
            ModalityMap::Sigmoid(s) => {
                let f = |x: f64| 1.0 / (1.0 + (-s * (x - 0.5)).exp());
                (f(v) - f(0.0)) / (f(1.0) - f(0.0))
            }
        }
    }
}

impl FromStr for ModalityMap {
    type Err = Error;

    /// `identity`, `inverted`, `gamma:<g>` or `sigmoid:<slope>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            a.and_then(|a| a.parse::<f64>().ok())
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| Error::param(format!("modality `{s}` needs a positive parameter")))
        };
        match name {
            "identity" => Ok(ModalityMap::Identity),
            "inverted" => Ok(ModalityMap::Inverted),
            "gamma" => Ok(ModalityMap::Gamma(number(arg)?)),
            "sigmoid" => Ok(ModalityMap::Sigmoid(number(arg)?)),
            _ => Err(Error::param(format!("unknown modality map `{s}`"))),
        }
    }
}

impl fmt::Display for ModalityMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModalityMap::Identity => f.write_str("identity"),
            ModalityMap::Inverted => f.write_str("inverted"),
            ModalityMap::Gamma(g) => write!(f, "gamma:{g}"),
            ModalityMap::Sigmoid(s) => write!(f, "sigmoid:{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    /// Voronoi cells of the latent image.
    pub n_regions: usize,
    /// Distinct latent levels shared by the cells.
    pub n_classes: usize,
    pub change_fraction: f64,
    pub noise_sigma: f64,
    /// One map per pre-event channel.
    pub pre_maps: Vec<ModalityMap>,
    /// One map per post-event channel.
    pub post_maps: Vec<ModalityMap>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            height: 256,
            width: 256,
            n_regions: 48,
            n_classes: 4,
            change_fraction: 0.1,
            noise_sigma: 0.02,
            pre_maps: vec![ModalityMap::Identity],
            post_maps: vec![
                ModalityMap::Inverted,
                ModalityMap::Gamma(0.3),
                ModalityMap::Gamma(0.5),
            ],
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let pixels = self.height * self.width;
        if pixels == 0 {
            return Err(Error::Empty("synthetic image"));
        }
        if self.n_regions < 2 || self.n_regions > pixels {
            return Err(Error::param(format!(
                "n_regions = {} must lie in [2, {pixels}]",
                self.n_regions
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::param("n_classes must be at least 2"));
        }
        if !(self.change_fraction > 0.0 && self.change_fraction < 1.0) {
            return Err(Error::param("change_fraction must lie in (0, 1)"));
        }
        if self.change_fraction * (pixels as f64) < 1.0 {
            return Err(Error::param("change_fraction covers less than one pixel"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::param("noise_sigma must be finite and nonnegative"));
        }
        if self.pre_maps.is_empty() || self.post_maps.is_empty() {
            return Err(Error::param("each modality needs at least one channel map"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub pre: ImageRaster,
    pub post: ImageRaster,
    pub truth: ChangeMap,
    /// Latent cell index of every pixel.
    pub cells: Vec<usize>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticPair> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<(f64, f64)> = (0..spec.n_regions)
        .map(|_| {
            (
                rng.random_range(0.0..h as f64),
                rng.random_range(0.0..w as f64),
            )
        })
        .collect();
    let level = |class: usize| (class as f64 + 0.5) / spec.n_classes as f64;
    let classes: Vec<usize> = (0..spec.n_regions)
        .map(|_| rng.random_range(0..spec.n_classes))
        .collect();

    let cells: Vec<usize> = (0..h * w)
        .map(|p| {
            let (y, x) = ((p / w) as f64 + 0.5, (p % w) as f64 + 0.5);
            let d2 = |s: &(f64, f64)| (s.0 - y).powi(2) + (s.1 - x).powi(2);
            (0..seeds.len())
                .min_by(|&a, &b| d2(&seeds[a]).total_cmp(&d2(&seeds[b])).then(a.cmp(&b)))
                .expect("at least two cells")
        })
        .collect();
    let mut sizes = vec![0usize; spec.n_regions];
    for &c in &cells {
        sizes[c] += 1;
    }

    let adjacent = cell_adjacency(&cells, h, w, spec.n_regions);
    let target = spec.change_fraction * (h * w) as f64;
    let changed = grow_change_region(&seeds, &sizes, &adjacent, target, &mut rng)?;
    // Changed cells move half the palette away, so every change has a
    // comparable latent magnitude.
    let shift = spec.n_classes / 2;
    let replaced: Vec<usize> = classes
        .iter()
        .map(|&c| (c + shift) % spec.n_classes)
        .collect();

    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::param(e.to_string()))?;
    let mut render = |maps: &[ModalityMap], post: bool| -> Vec<f64> {
        let mut data = Vec::with_capacity(h * w * maps.len());
        for &c in &cells {
            let v = level(if post && changed[c] {
                replaced[c]
            } else {
                classes[c]
            });
            for m in maps {
                let e = if spec.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                data.push((m.apply(v) + e).clamp(0.0, 1.0));
            }
        }
        data
    };
    let pre = render(&spec.pre_maps, false);
    let post = render(&spec.post_maps, true);
    let truth = cells.iter().map(|&c| u8::from(changed[c])).collect();
    Ok(SyntheticPair {
        pre: ImageRaster::new(h, w, spec.pre_maps.len(), pre)?,
        post: ImageRaster::new(h, w, spec.post_maps.len(), post)?,
        truth: ChangeMap::new(h, w, truth)?,
        cells,
    })
}

fn cell_adjacency(cells: &[usize], h: usize, w: usize, n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    let mut link = |a: usize, b: usize| {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    };
    for y in 0..h {
        for x in 0..w {
            let c = cells[y * w + x];
            if x + 1 < w {
                link(c, cells[y * w + x + 1]);
            }
            if y + 1 < h {
                link(c, cells[(y + 1) * w + x]);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Grows a connected union of cells from a random start cell. Each step adds
/// the frontier cell nearest the start that keeps the area within 20% above
/// the target; growth stops at the target or when nothing fits.
fn grow_change_region(
    seeds: &[(f64, f64)],
    sizes: &[usize],
    adjacent: &[Vec<usize>],
    target: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<bool>> {
    let n = seeds.len();
    let nonempty: Vec<usize> = (0..n).filter(|&c| sizes[c] > 0).collect();
    let start = nonempty[rng.random_range(0..nonempty.len())];
    let dist =
        |c: usize| (seeds[c].0 - seeds[start].0).powi(2) + (seeds[c].1 - seeds[start].1).powi(2);
    let (lo, hi) = (0.8 * target, 1.2 * target);
    let mut changed = vec![false; n];
    let mut frontier = vec![start];
    let mut area = 0.0;
    while area < target {
        let pick = frontier
            .iter()
            .copied()
            .filter(|&c| !changed[c] && area + sizes[c] as f64 <= hi)
            .min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        let Some(c) = pick else { break };
        changed[c] = true;
        area += sizes[c] as f64;
        frontier.extend(adjacent[c].iter().copied().filter(|&d| sizes[d] > 0));
    }
    if area < lo {
        return Err(Error::param(format!(
            "change_fraction cannot be met within 20% from cells of this size \
             (reached {area} of {target} pixels); use more regions"
        )));
    }
    Ok(changed)
}
