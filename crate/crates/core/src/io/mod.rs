//! File formats: PNG rasters, the `GSPM` binary matrix and affinity lists.

mod coo;
mod gspm;
mod image;

pub use coo::{affinity_coo_text, read_affinity_coo, write_affinity_coo};
pub use gspm::{read_gspm, write_gspm, GSPM_MAGIC};
pub use image::{
    read_change_map, read_png, write_change_map, write_channels_png, write_gray_png,
    write_raster_png,
};
