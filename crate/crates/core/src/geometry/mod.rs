//! Point containers, predictor scaling, exact spatial indexing and
//! nearest-neighbour distances in geographic or scaled-predictor space.

pub mod io;
pub mod kdtree;
mod metric;
mod nnd;
mod pointset;

pub use metric::{distance, fit_scaling, squared_distance, Embedding, Metric, MetricKind, Scaling};
pub use nnd::{build_index, nnd_between, nnd_cv, nnd_within, NndRole, NndSample, SpatialIndex};
pub(crate) use nnd::{nnd_between_embedded, nnd_cv_embedded, nnd_within_embedded};
pub use pointset::PointSet;
