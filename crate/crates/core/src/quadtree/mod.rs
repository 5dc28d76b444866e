//! Exact geometric model: rectangles, the quadtree covering and the spine.

mod geometry;
mod spine;
mod tree;

pub use geometry::{normalize_rect, split, AffineMap, Rect};
pub use spine::{sample_spine_step, spine_step, spine_trace, SpineTrace};
pub use tree::{build_quadtree, PointRecord, QuadCover, QuadTree};
