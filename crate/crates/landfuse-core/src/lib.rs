//! Core algorithms for joint land-cover classification of hyperspectral and
//! LiDAR rasters.
//!
//! The processing chain modelled here:
//!
//! 1. LiDAR point records are triangulated (Delaunay TIN) and rasterized into
//!    DEM / DSM / nDSM / intensity surfaces ([`tin`]).
//! 2. Rasters are co-registered with a first-order polynomial fitted to
//!    ground control points and nearest-neighbor resampling ([`register`]).
//! 3. Kernel PCA with a Gaussian kernel compresses the hyperspectral cube
//!    into a few informative components ([`kpca`]).
//! 4. Each component is quantized and filtered on its tree of shapes with
//!    area and standard-deviation attributes, producing self-dual attribute
//!    profiles ([`tos`], [`profiles`]).
//! 5. Profiles, nDSM and intensity are stacked and classified by SVM,
//!    random forest or an RBF network ([`classify`]).
//! 6. Accuracy is summarized as confusion-matrix metrics over Monte-Carlo
//!    train/test splits ([`metrics`]).
//!
//! This crate holds the in-memory data model and the numerics only; file
//! formats, the command line, and wall-clock measurement live in the
//! companion `landfuse-cli` crate. The crate is `no_std`-compatible
//! (an allocator is required); the default `std` feature switches float
//! math from `libm` to the platform intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod classify;
pub mod kpca;
pub mod linalg;
pub mod metrics;
pub mod profiles;
pub mod raster;
pub mod register;
pub mod scene;
pub mod seed;
pub mod tin;
pub mod tos;

pub use raster::{ClassMap, GrayImage, RasterGrid};
