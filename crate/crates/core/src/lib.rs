//! Attributed graph clustering with symmetric non-negative matrix
//! factorization.
//!
//! The model factors a symmetric adjacency matrix `S ≈ UUᵀ` and an attribute
//! matrix `X ≈ f(UH) Vᵀ`, where `f` is the logistic sigmoid and `U` holds
//! the soft vertex-cluster memberships shared by both views. Observed edges
//! and unobserved pairs are weighted by `ρ` and `1 - ρ` respectively, so an
//! absent edge is treated as unlabeled rather than as a negative.
//!
//! ```
//! use nagc::data::{generate_planted, PlantedConfig};
//! use nagc::model::{assign_clusters, fit, Hyperparams};
//!
//! let ds = generate_planted(&PlantedConfig { n: 40, k: 2, m: 10, ..Default::default() }).unwrap();
//! let hp = Hyperparams { k1: 2, k2: 2, iters: 20, ..Default::default() };
//! let out = fit(&ds.graph, &ds.attributes, &hp).unwrap();
//! assert_eq!(assign_clusters(&out.model).len(), 40);
//! ```

pub mod baselines;
pub mod data;
pub mod error;
pub mod exec;
pub mod kernels;
pub mod metrics;
pub mod model;

pub use error::{NagcError, Result};
pub use exec::Exec;
pub use kernels::{DenseMatrix, SparseSymGraph};
pub use model::{FactorModel, Hyperparams, InitScheme, LossBreakdown};
