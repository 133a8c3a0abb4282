//! Convolution algebra on uniform grids, second-kind Volterra solves,
//! resolvent kernels and the two constructions of `H_n`.

mod conv;
mod grid;
mod hn;
mod memory;
mod resolvent;
mod volterra;

pub use conv::{conv_power, convolve, convolve_exp, convolve_with_ek, e_k};
pub use grid::{SampledFunction, TimeGrid};
pub use hn::{
    g_kernel, g_kernel_from, h_direct, h_series, h_series_from, series_length, z_kernel,
    ConvolutionPowers, GKernel, SeriesResult,
};
pub use memory::{ExpTerm, MemoryKernel};
pub use resolvent::{central_difference, resolvent_from_samples, resolvent_of, ResolventTriple};
pub use volterra::volterra_solve;


pub(crate) use conv::conv_at;
