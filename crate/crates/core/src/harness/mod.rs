//! Image files, dataset preparation, evaluation, training runs and the command line.

pub mod cli;
pub mod config;
pub mod data;
pub mod eval;
pub mod io;
pub mod resize;
pub mod train;

pub use config::{Dataset, MetricFlags, RunConfig};
pub use data::{augment, crop_to_multiple, degrade, random_crop, stripes};
pub use eval::{evaluate_dirs, write_report};
pub use io::{list_pngs, load_png, read_sidecar, save_png, write_sidecar, BitDepth};
pub use resize::{bicubic_resize, resize_to, Direction};
pub use train::{
    compare_wavelet_loss, load_dataset, run_toy_train, stripe_pairs, ArmReport, LossComparison,
    Pair, TrainSummary,
};
