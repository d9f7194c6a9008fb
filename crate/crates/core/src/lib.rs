//! Causal classification from observational data.
//!
//! The pipeline finds the parents of the outcome with a local structure
//! learner (MMPC with a G² test), checks on a known graph that the parent
//! set licenses uplift estimation, and fits one outcome model per treatment
//! arm over those parents. The difference of the two predicted
//! probabilities estimates the conditional causal effect of each row.
//!
//! ```
//! use causal_classify::graph::{fixtures, verify_uplift_conditions};
//!
//! let g = fixtures::pretreatment_example();
//! let report = verify_uplift_conditions(&g, "T", "Y").unwrap();
//! assert!(report.all_hold());
//! assert_eq!(report.parents_excl_t, vec!["P8", "P9"]);
//! ```

pub mod classify;
pub mod datagen;
pub mod dataset;
pub mod discovery;
pub mod error;
pub mod eval;
pub mod graph;
pub mod special;
pub mod stats;

pub use classify::{predict_cctm, rank_by_effect, train_cctm, ClassifierSpec, TwoModelPair, UpliftPrediction};
pub use dataset::{Column, ColumnKind, Dataset, Role, Schema};
pub use discovery::{discover, mmpc, DiscoveryConfig, ParentSet};
pub use error::{Error, Result};
pub use graph::Dag;
