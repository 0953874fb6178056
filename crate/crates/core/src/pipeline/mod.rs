//! End-to-end change detection: configuration, stages and output files.

mod config;
mod run;

pub use config::{Direction, PipelineConfig};
pub use run::{
    image_affinity, image_features, image_spectrum, load_inputs, run_on_images, run_pipeline,
    write_outputs, ChangeProducts, ImagePair, PipelineOutput,
};
