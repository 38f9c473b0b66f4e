//! Client-side private state: sizing, coverage bounds, the hint pool and its
//! on-disk form.

mod bounds;
mod params;
mod persist;
mod pool;

pub use bounds::{coverage_bounds, CoverageBounds};
pub use params::{ceil_sqrt, compute_params, hint_count, CoverageParams};
pub use persist::{POOL_MAGIC, POOL_VERSION};
pub(crate) use persist::write_atomically;
pub use pool::{
    preprocess, preprocess_with_seeds, replacement_position_for, Hint, HintHandle, HintPool, Lookup,
    NextGeneration, PartialHint, RefreshReport, RefreshSource, SearchPolicy,
};
pub(crate) use pool::xor_into;
