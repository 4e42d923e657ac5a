//! File formats: the two-file raster layout, LiDAR point CSV, GCP CSV,
//! P6 class-map rendering, and the binary model container.

pub mod gcps;
pub mod model;
pub mod points;
pub mod ppm;
pub mod raster;
