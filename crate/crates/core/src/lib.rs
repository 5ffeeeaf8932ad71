//! Variable screening for high-dimensional data by random subspace
//! ensembles.
//!
//! A screener draws many small feature subsets, scores each with a model
//! selection criterion, keeps the best subset in every group and ranks
//! features by how often they appear among the winners. Features that only
//! matter jointly with others, and which marginal screeners therefore miss,
//! are picked up whenever a sampled subset contains them together.
//!
//! ```
//! use rase::{screen, CriterionSpec, ExampleId, ExampleSpec, RaseConfig};
//!
//! let mut spec = ExampleSpec::new(ExampleId::Ex1, 7);
//! spec.p = Some(30);
//! let sample = spec.generate().unwrap();
//! let mut cfg = RaseConfig::new(CriterionSpec::linear_ebic());
//! cfg.b1 = 50;
//! cfg.b2 = Some(200);
//! cfg.iterations = 1;
//! let result = screen(&sample.data, &cfg).unwrap();
//! assert_eq!(result.ranking.len(), 30);
//! ```

pub mod baselines;
pub mod bench;
mod clock;
pub mod criteria;
pub mod data;
pub mod datagen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod rng;
pub mod screening;
pub mod subspace;
pub mod sumtree;

pub use baselines::{sis_rank, BaselineRanking};
pub use bench::{compute_mms, quantile, run_bench, run_grid, BenchConfig, MethodEntry, MethodKind, MmsTable};
pub use clock::Stopwatch;
pub use criteria::{CriterionSpec, Evaluator};
pub use data::{Dataset, Response, Task};
pub use datagen::{ExampleId, ExampleSpec, LabeledDataset};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use screening::{rase_screen, rase_screen_iterative, screen, RaseConfig, ScreeningResult, Warning};
pub use subspace::{inclusion_probability, Subspace, SubspaceDistribution};
