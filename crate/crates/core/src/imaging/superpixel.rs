//! Partitioning a raster into graph vertices.
//!
//! Two methods are provided. [`Segmentation::Grid`] cuts the image into
//! axis-aligned blocks and is exactly reproducible; [`Segmentation::Slic`]
//! runs a simple linear iterative clustering in (intensity, position) space,
//! followed by a connectivity pass that absorbs small fragments.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ImageRaster;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Segmentation {
    #[default]
    Grid,
    Slic,
}

impl FromStr for Segmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Segmentation::Grid),
            "slic" => Ok(Segmentation::Slic),
            other => Err(Error::param(format!(
                "unknown segmentation method `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Segmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segmentation::Grid => "grid",
            Segmentation::Slic => "slic",
        })
    }
}

/// Assignment of every pixel to exactly one vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    height: usize,
    width: usize,
    labels: Vec<usize>,
    region_pixels: Vec<Vec<usize>>,
}

impl SuperpixelMap {
    /// Validates a label image: labels must cover `0..n` with no gaps.
    pub fn from_labels(height: usize, width: usize, labels: Vec<usize>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Empty("label image"));
        }
        if labels.len() != height * width {
            return Err(Error::dims(format!(
                "{} labels for a {height}x{width} image",
                labels.len()
            )));
        }
        let n = labels.iter().max().map_or(0, |&m| m + 1);
        let mut region_pixels = vec![Vec::new(); n];
        for (p, &l) in labels.iter().enumerate() {
            region_pixels[l].push(p);
        }
        if let Some(empty) = region_pixels.iter().position(Vec::is_empty) {
            return Err(Error::param(format!("region {empty} has no pixels")));
        }
        Ok(SuperpixelMap {
            height,
            width,
            labels,
            region_pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_regions(&self) -> usize {
        self.region_pixels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, y: usize, x: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Row-major pixel indices of region `i`, ascending.
    pub fn region(&self, i: usize) -> &[usize] {
        &self.region_pixels[i]
    }

    pub fn regions(&self) -> impl Iterator<Item = &[usize]> {
        self.region_pixels.iter().map(Vec::as_slice)
    }
}

pub fn segment_superpixels(
    img: &ImageRaster,
    n_target: usize,
    method: Segmentation,
    seed: u64,
) -> Result<SuperpixelMap> {
    let pixels = img.pixel_count();
    if n_target == 0 || n_target > pixels {
        return Err(Error::param(format!(
            "superpixel count {n_target} must lie in [1, {pixels}]"
        )));
    }
    match method {
        Segmentation::Grid => grid_partition(img.height(), img.width(), n_target),
        Segmentation::Slic => slic(img, n_target, seed),
    }
}

/// Block counts `(rows, cols)` whose product approximates `n_target` while
/// keeping blocks close to square.
fn grid_shape(height: usize, width: usize, n_target: usize) -> (usize, usize) {
    let rows = ((n_target as f64 * height as f64 / width as f64)
        .sqrt()
        .round() as usize)
        .clamp(1, height);
    let cols = ((n_target as f64 / rows as f64).round() as usize).clamp(1, width);
    (rows, cols)
}

/// Block boundaries `floor(k * len / parts)` so sizes differ by at most one.
fn block_index(pos: usize, len: usize, parts: usize) -> usize {
    // Largest b with floor(b * len / parts) <= pos.
    ((pos + 1) * parts - 1) / len
}

pub fn grid_partition(height: usize, width: usize, n_target: usize) -> Result<SuperpixelMap> {
    if n_target == 0 || n_target > height * width {
        return Err(Error::param(format!(
            "superpixel count {n_target} must lie in [1, {}]",
            height * width
        )));
    }
    let (rows, cols) = grid_shape(height, width, n_target);
    let labels = (0..height)
        .flat_map(|y| {
            let by = block_index(y, height, rows);
            (0..width).map(move |x| by * cols + block_index(x, width, cols))
        })
        .collect();
    SuperpixelMap::from_labels(height, width, labels)
}

const SLIC_COMPACTNESS: f64 = 0.1;
const SLIC_ITERATIONS: usize = 10;

#[derive(Clone)]
struct Center {
    y: f64,
    x: f64,
    color: Vec<f64>,
}

fn slic(img: &ImageRaster, n_target: usize, seed: u64) -> Result<SuperpixelMap> {
    let (h, w, nc) = (img.height(), img.width(), img.channels());
    let step = ((h * w) as f64 / n_target as f64).sqrt().max(1.0);
    let (rows, cols) = grid_shape(h, w, n_target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = step / 8.0;

    let mut centers: Vec<Center> = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let cy = (r as f64 + 0.5) * h as f64 / rows as f64 - 0.5;
            let cx = (c as f64 + 0.5) * w as f64 / cols as f64 - 0.5;
            let y = (cy + rng.random_range(-jitter..=jitter)).clamp(0.0, (h - 1) as f64);
            let x = (cx + rng.random_range(-jitter..=jitter)).clamp(0.0, (w - 1) as f64);
            let p = y.round() as usize * w + x.round() as usize;
            centers.push(Center {
                y,
                x,
                color: img.pixel(p).to_vec(),
            });
        }
    }

    let spatial_weight = (SLIC_COMPACTNESS / step).powi(2);
    let radius = (2.0 * step).ceil() as isize;
    let mut labels = vec![usize::MAX; h * w];
    let mut best = vec![f64::INFINITY; h * w];

    for _ in 0..SLIC_ITERATIONS {
        best.fill(f64::INFINITY);
        labels.fill(usize::MAX);
        for (k, center) in centers.iter().enumerate() {
            let cy = center.y.round() as isize;
            let cx = center.x.round() as isize;
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius) as usize).min(h - 1);
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius) as usize).min(w - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let dc: f64 = img
                        .pixel(p)
                        .iter()
                        .zip(&center.color)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    let ds = (y as f64 - center.y).powi(2) + (x as f64 - center.x).powi(2);
                    let d = dc + spatial_weight * ds;
                    if d < best[p] {
                        best[p] = d;
                        labels[p] = k;
                    }
                }
            }
        }
        // Pixels outside every search window fall back to the spatially nearest center.
        for p in 0..h * w {
            if labels[p] == usize::MAX {
                let (y, x) = ((p / w) as f64, (p % w) as f64);
                labels[p] = nearest_center(&centers, y, x);
            }
        }
        let mut acc = vec![(0.0, 0.0, vec![0.0; nc], 0usize); centers.len()];
        for (p, &k) in labels.iter().enumerate() {
            let a = &mut acc[k];
            a.0 += (p / w) as f64;
            a.1 += (p % w) as f64;
            for (s, v) in a.2.iter_mut().zip(img.pixel(p)) {
                *s += v;
            }
            a.3 += 1;
        }
        for (center, (sy, sx, sc, count)) in centers.iter_mut().zip(acc) {
            if count > 0 {
                let n = count as f64;
                center.y = sy / n;
                center.x = sx / n;
                center.color = sc.into_iter().map(|s| s / n).collect();
            }
        }
    }

    let min_size = ((step * step) / 4.0).floor().max(1.0) as usize;
    let labels = enforce_connectivity(h, w, &labels, min_size);
    SuperpixelMap::from_labels(h, w, labels)
}

fn nearest_center(centers: &[Center], y: f64, x: f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, c) in centers.iter().enumerate() {
        let d = (c.y - y).powi(2) + (c.x - x).powi(2);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Splits labels into 4-connected components, merges components smaller than
/// `min_size` into a neighbor, and renumbers in scan order.
fn enforce_connectivity(h: usize, w: usize, labels: &[usize], min_size: usize) -> Vec<usize> {
    let mut comp = vec![usize::MAX; h * w];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let mut pix = Vec::new();
        comp[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            pix.push(p);
            for q in neighbors4(p, h, w) {
                if comp[q] == usize::MAX && labels[q] == labels[start] {
                    comp[q] = id;
                    queue.push_back(q);
                }
            }
        }
        members.push(pix);
    }

    let n = members.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = members.iter().map(Vec::len).collect();
    for id in 0..n {
        let root = find(&mut parent, id);
        if size[root] >= min_size {
            continue;
        }
        let target = members[id]
            .iter()
            .flat_map(|&p| neighbors4(p, h, w))
            .map(|q| comp[q])
            .find(|&c| find(&mut parent, c) != root);
        if let Some(t) = target {
            let troot = find(&mut parent, t);
            parent[root] = troot;
            size[troot] += size[root];
        }
    }

    let mut renumber = vec![usize::MAX; n];
    let mut next = 0;
    comp.iter()
        .map(|&c| {
            let r = find(&mut parent, c);
            if renumber[r] == usize::MAX {
                renumber[r] = next;
                next += 1;
            }
            renumber[r]
        })
        .collect()
}

fn neighbors4(p: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    let (y, x) = (p / w, p % w);
    [
        (y > 0).then(|| p - w),
        (y + 1 < h).then(|| p + w),
        (x > 0).then(|| p - 1),
        (x + 1 < w).then(|| p + 1),
    ]
    .into_iter()
    .flatten()
}
