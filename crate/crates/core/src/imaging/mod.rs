//! Raster ingestion, superpixel partitioning, per-region features and
//! reprojection of vertex values back to the pixel grid.

mod features;
mod raster;
mod superpixel;

pub use features::{extract_features, reproject, FeatureMatrix};
pub use raster::{ImageRaster, PixelGrid};
pub use superpixel::{grid_partition, segment_superpixels, Segmentation, SuperpixelMap};
