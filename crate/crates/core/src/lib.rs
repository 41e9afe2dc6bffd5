//! Reputation-aware ranking of items on bipartite user–item rating networks.
//!
//! * [`graph`]: the rating network, dataset ingestion and benchmark lists
//! * [`projection`]: the `(p1, p2)` remap of ratings 2 and 4
//! * [`ranking`]: Mean, IR, CR and RR on a shared fixed-point engine
//! * [`metrics`]: ranking score and reputation–error correlation
//! * [`synth`]: preferential-attachment networks with known ground truth
//! * [`sweep`]: `(p1, p2)` grid experiments over several realizations
//! * [`cli`]: the `rankproj` command line

pub mod cli;
pub mod graph;
pub mod metrics;
pub mod projection;
pub mod ranking;
pub mod sweep;
pub mod synth;

pub use graph::{BenchmarkSet, Dataset, IdMap, InputFormat, Link, RatingGraph};
pub use projection::ProjectionParams;
pub use ranking::{Algorithm, RankingConfig, RankingResult};
pub use sweep::{DataSource, GridSpec, Metric, SweepGrid, SweepPlan};
pub use synth::{DiscretizationCase, SynthSpec, SynthTruth};
