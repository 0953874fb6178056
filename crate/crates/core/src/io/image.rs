use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::detect::ChangeMap;
use crate::error::{Error, Result};
use crate::imaging::{ImageRaster, PixelGrid};

fn png_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        what: "PNG",
        detail: format!("{}: {e}", path.display()),
    }
}

/// Decodes 8- or 16-bit gray or RGB; palettes are expanded and alpha dropped.
pub fn read_png(path: impl AsRef<Path>) -> Result<ImageRaster> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| png_error(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_error(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| png_error(path, e))?;
    buf.truncate(info.buffer_size());
    let (h, w) = (info.height as usize, info.width as usize);
    let (stored, kept) = match info.color_type {
        ColorType::Grayscale => (1, 1),
        ColorType::GrayscaleAlpha => (2, 1),
        ColorType::Rgb => (3, 3),
        ColorType::Rgba => (4, 3),
        ColorType::Indexed => return Err(png_error(path, "unexpanded palette")),
    };
    match info.bit_depth {
        BitDepth::Eight => {
            let samples: Vec<u8> = buf
                .chunks_exact(stored)
                .flat_map(|px| px[..kept].iter().copied())
                .collect();
            ImageRaster::from_u8(h, w, kept, &samples)
        }
        BitDepth::Sixteen => {
            let samples: Vec<u16> = buf
                .chunks_exact(2 * stored)
                .flat_map(|px| {
                    px[..2 * kept]
                        .chunks_exact(2)
                        .map(|b| u16::from_be_bytes([b[0], b[1]]))
                })
                .collect();
            ImageRaster::from_u16(h, w, kept, &samples)
        }
        other => Err(png_error(path, format!("unsupported bit depth {other:?}"))),
    }
}

fn write_gray8(path: &Path, height: usize, width: usize, data: &[u8]) -> Result<()> {
    write8(path, height, width, ColorType::Grayscale, data)
}

fn write8(path: &Path, height: usize, width: usize, color: ColorType, data: &[u8]) -> Result<()> {
    encode(path, height, width, color, BitDepth::Eight, data)
}

fn encode(
    path: &Path,
    height: usize,
    width: usize,
    color: ColorType,
    depth: BitDepth,
    data: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc.write_header().map_err(|e| png_error(path, e))?;
    writer
        .write_image_data(data)
        .map_err(|e| png_error(path, e))?;
    writer.finish().map_err(|e| png_error(path, e))
}

/// 16-bit gray or RGB PNG of a one- or three-channel raster, unscaled.
pub fn write_raster_png(path: impl AsRef<Path>, img: &ImageRaster) -> Result<()> {
    let color = match img.channels() {
        1 => ColorType::Grayscale,
        3 => ColorType::Rgb,
        c => return Err(Error::param(format!("cannot store {c} channels as PNG"))),
    };
    let data: Vec<u8> = img
        .data()
        .iter()
        .flat_map(|&v| ((v * 65535.0).round() as u16).to_be_bytes())
        .collect();
    encode(
        path.as_ref(),
        img.height(),
        img.width(),
        color,
        BitDepth::Sixteen,
        &data,
    )
}

/// 8-bit gray PNG of the min-max normalized grid.
pub fn write_gray_png(path: impl AsRef<Path>, grid: &PixelGrid) -> Result<()> {
    write_gray8(path.as_ref(), grid.height, grid.width, &grid.to_u8())
}

/// Three grids become an RGB image, anything else a gray image of their
/// mean. Each grid is min-max normalized on its own.
pub fn write_channels_png(path: impl AsRef<Path>, grids: &[PixelGrid]) -> Result<()> {
    let first = grids.first().ok_or(Error::Empty("channel list"))?;
    let (h, w) = (first.height, first.width);
    if grids.iter().any(|g| g.height != h || g.width != w) {
        return Err(Error::dims("channel grids differ in size"));
    }
    if grids.len() == 3 {
        let bytes: Vec<Vec<u8>> = grids.iter().map(PixelGrid::to_u8).collect();
        let data: Vec<u8> = (0..h * w)
            .flat_map(|p| bytes.iter().map(move |b| b[p]))
            .collect();
        return write8(path.as_ref(), h, w, ColorType::Rgb, &data);
    }
    let normalized: Vec<Vec<f64>> = grids.iter().map(PixelGrid::normalized).collect();
    let mean = (0..h * w)
        .map(|p| normalized.iter().map(|g| g[p]).sum::<f64>() / grids.len() as f64)
        .collect();
    write_gray_png(path, &PixelGrid::new(h, w, mean)?)
}

/// Changed pixels as 255, unchanged as 0.
pub fn write_change_map(path: impl AsRef<Path>, cm: &ChangeMap) -> Result<()> {
    let data: Vec<u8> = cm.labels.iter().map(|&l| l * 255).collect();
    write_gray8(path.as_ref(), cm.height, cm.width, &data)
}

/// Any channel above half intensity marks a changed pixel.
pub fn read_change_map(path: impl AsRef<Path>) -> Result<ChangeMap> {
    let img = read_png(path)?;
    let labels = (0..img.pixel_count())
        .map(|p| u8::from(img.pixel(p).iter().any(|&v| v > 0.5)))
        .collect();
    ChangeMap::new(img.height(), img.width(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, w: u32, h: u32, color: ColorType, depth: BitDepth, data: &[u8]) {
        let mut enc = png::Encoder::new(BufWriter::new(File::create(path).unwrap()), w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(data).unwrap();
        writer.finish().unwrap();
    }

    #[test]
    fn raster_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.png");
        let data: Vec<f64> = (0..4 * 5 * 3).map(|i| (i as f64 / 59.0).sqrt()).collect();
        let img = ImageRaster::new(4, 5, 3, data).unwrap();
        write_raster_png(&path, &img).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!((back.height(), back.width(), back.channels()), (4, 5, 3));
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
        let two = ImageRaster::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert!(write_raster_png(&path, &two).is_err());
    }

    #[test]
    fn reads_rgb8_and_gray16() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        write_raw(
            &p,
            2,
            1,
            ColorType::Rgb,
            BitDepth::Eight,
            &[0, 51, 255, 255, 0, 102],
        );
        let img = read_png(&p).unwrap();
        assert_eq!((img.height(), img.width(), img.channels()), (1, 2, 3));
        assert_eq!(img.pixel(0), &[0.0, 0.2, 1.0]);
        assert_eq!(img.pixel(1), &[1.0, 0.0, 0.4]);

        let p = dir.path().join("g16.png");
        write_raw(
            &p,
            1,
            2,
            ColorType::Grayscale,
            BitDepth::Sixteen,
            &[0xff, 0xff, 0, 0],
        );
        let img = read_png(&p).unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.data(), &[1.0, 0.0]);
    }

    #[test]
    fn alpha_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ga.png");
        write_raw(
            &p,
            1,
            1,
            ColorType::GrayscaleAlpha,
            BitDepth::Eight,
            &[255, 0],
        );
        assert_eq!(read_png(&p).unwrap().data(), &[1.0]);
    }

    #[test]
    fn change_map_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cm.png");
        let cm = ChangeMap::new(2, 3, vec![0, 1, 1, 0, 0, 1]).unwrap();
        write_change_map(&p, &cm).unwrap();
        assert_eq!(read_change_map(&p).unwrap(), cm);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_png("/nonexistent/x.png"),
            Err(Error::Io { .. })
        ));
    }
}
