//! Desk-scale model of a privacy-preserving cellular core: cell topology and
//! coverage, UE mobility, paging under tracking-area lists, anonymity and
//! capacity metrics, and the shared-IMSI AKA attach procedure.
//!
//! The crate is organized around the simulation pipeline:
//!
//! 1. [`topology`] — eNB sites (CSV or synthetic), Voronoi coverage cells,
//!    tracking-area maps (imported labels or k-means), TA adjacency.
//! 2. [`mobility`] — per-UE position timelines at 5-second ticks and their
//!    resolution to eNB attachment timelines.
//! 3. [`paging`] — discrete-event paging simulation under conventional TAs or
//!    per-UE tracking-area lists, plus capacity estimation and paging-log
//!    analysis.
//! 4. [`anonymity`] — degree-of-anonymity and broadcast-area metrics over
//!    simulation reports.
//! 5. [`aka`] — sequence-number behavior of the LTE attach procedure when
//!    many devices share one IMSI.
//!
//! Everything is deterministic under a master seed; see [`rng`].

pub mod aka;
pub mod anonymity;
pub mod geo;
pub mod kmeans;
pub mod mobility;
pub mod paging;
pub mod rng;
pub mod topology;
pub mod voronoi;

pub use geo::{LocalProjection, Point, Rect};
pub use topology::{EnbIdx, EnbSite, TaIdx, Topology, TrackingAreaMap};
