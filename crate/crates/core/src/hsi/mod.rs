//! Hyperspectral cube I/O and synthetic cube generation.

mod cube;
pub mod csv;
mod synth;

pub use cube::{
    load_cube, read_header, save_cube, save_cube_with_header, CubeHeader, ElementType, Interleave,
};
pub use synth::{synth_cube, SyntheticCube, SyntheticCubeSpec, WAVELENGTH_RANGE_UM};
