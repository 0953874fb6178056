use crate::error::{Error, Result};

/// A multi-channel image with intensities normalized to `[0, 1]`, stored
/// row-major with channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageRaster {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Empty("image"));
        }
        if data.len() != height * width * channels {
            return Err(Error::dims(format!(
                "{} samples for a {height}x{width}x{channels} image",
                data.len()
            )));
        }
        if let Some(v) = data
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::param(format!("image intensity {v} outside [0, 1]")));
        }
        Ok(ImageRaster {
            height,
            width,
            channels,
            data,
        })
    }

    /// 8-bit samples scaled by 1/255.
    pub fn from_u8(height: usize, width: usize, channels: usize, samples: &[u8]) -> Result<Self> {
        let data = samples.iter().map(|&s| f64::from(s) / 255.0).collect();
        Self::new(height, width, channels, data)
    }

    /// 16-bit samples scaled by 1/65535.
    pub fn from_u16(height: usize, width: usize, channels: usize, samples: &[u16]) -> Result<Self> {
        let data = samples.iter().map(|&s| f64::from(s) / 65535.0).collect();
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Samples of pixel `p` (row-major index) across all channels.
    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    /// Per-pixel mean over channels.
    pub fn luminance(&self) -> PixelGrid {
        let c = self.channels as f64;
        let data = (0..self.pixel_count())
            .map(|p| self.pixel(p).iter().sum::<f64>() / c)
            .collect();
        PixelGrid {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// Single-band real-valued raster without a range restriction (difference
/// images, reprojected signals).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl PixelGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::dims(format!(
                "{} values for a {height}x{width} grid",
                data.len()
            )));
        }
        Ok(PixelGrid {
            height,
            width,
            data,
        })
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Min-max rescaling to `[0, 1]`; a constant grid maps to zeros.
    pub fn normalized(&self) -> Vec<f64> {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        if !(span > 0.0) {
            return vec![0.0; self.data.len()];
        }
        self.data.iter().map(|&v| (v - lo) / span).collect()
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.normalized()
            .into_iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect()
    }
}
