//! Exact computation with finitely generated groups acting on rooted trees.
//!
//! The crate covers finite-state tree automorphisms and their arithmetic,
//! Schreier, orbital and germ graphs with growth and cut-set analysis,
//! confining sets and displacement configurations together with the
//! commutator engine that extracts witness subgroups, finite-level
//! fingerprints of closed sets and subgroups, and Bratteli path spaces.

pub mod actions;
pub mod automaton;
pub mod bratteli;
pub mod confinement;
pub mod contracting;
pub mod error;
pub mod export;
pub mod geometry;
pub mod graph;
pub mod group;
pub mod oracle;
pub mod registry;
pub mod scenario;
pub mod tree;
pub mod urs;

pub use automaton::{Automorphism, Portrait, State, SupportCover};
pub use bratteli::{BratteliDiagram, BoundedTypeHomeo, Path, PrefixReplacement};
pub use confinement::{Confinement, DisplacementConfig, EngineReport, Named};
pub use error::{Error, Result};
pub use export::{Export, Format};
pub use graph::LabeledGraph;
pub use group::{Ball, GroupSpec, Label, Word};
pub use oracle::{OracleSpec, SubgroupOracle};
pub use registry::{load_group, RegistryEntry};
pub use scenario::Scenario;
pub use urs::{ClosedSetSpec, Fingerprint};
pub use tree::{complement_antichain, cylinder_relation, Antichain, CylinderRelation, Letter, Ray, TreeSpec, Vertex};
