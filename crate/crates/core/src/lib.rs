//! maskpath-core: from binary defect masks to physical marking paths.
//!
//! The stages, in pipeline order:
//!
//! 1. [`mask`] – binary masks, tiling into fixed-size patches, connected-component
//!    instance separation.
//! 2. [`vacuum`] – the vacuum field (an LBP-style count of background
//!    neighbours) and salient boundary point selection.
//! 3. [`hull`] – Graham-scan convex polygonization of the salient points.
//! 4. [`calib`] – pixel to millimetre projection.
//! 5. [`path`] – closed waypoint paths with step-size constraints.
//! 6. [`sim`] – software marker: rasterizes paths and scores fidelity.
//! 7. [`metrics`] – instance matching and confusion-based metrics.
//!
//! [`pgm`] and [`annotation`] hold the input codecs.

pub mod annotation;
pub mod calib;
pub mod error;
pub mod hull;
pub mod mask;
pub mod metrics;
pub mod path;
pub mod pgm;
pub mod sim;
pub mod synth;
pub mod vacuum;

pub use calib::{PhysicalCalibration, PhysicalPoint, PixelAnchor};
pub use error::{Error, Result};
pub use hull::{convex_hull, ConvexPolygon, HullKind, PixelPoint};
pub use mask::{binarize, connected_components, label_regions, tile, BinaryMask, Connectivity, DefectRegion, Tile, TileGrid};
pub use metrics::{
    compute_metrics, compute_metrics_with, match_instances, ConfusionCounts, F1Mode, MatchMode,
    MatchPolicy, MetricsReport,
};
pub use path::{plan_path, validate_path, MarkingPath, PlanOptions, ValidationReport, Violation, Waypoint};
pub use sim::{fidelity, rasterize_path, FidelityReport, Rasterized};
pub use vacuum::{select_salient, vacuum_field, SalientPoint, SalientPointSet, VacuumField, VacuumSet};
