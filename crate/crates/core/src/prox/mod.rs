//! Proximal operators and base-polytope projections for the block families.

pub mod block;
pub mod concave;
pub mod dnc;
pub mod tv;

pub use block::{Block, BlockFamily, BlockKind, ConcaveGroup, Path, Table};
pub use concave::project_concave_cardinality;
pub use dnc::{dnc_prox, project_generic_small_support, DncMode, DncOptions, DncOutput, Quadratic, SearchInterval, SeparablePenalty};
pub use tv::prox_tv1d;
