//! Scores review comments on the utility aspects through a pluggable
//! completion backend.

pub mod backend;
pub mod config;
pub mod parse;
pub mod score;

pub use backend::{Backend, BackendError, HttpBackend, StubBackend, StubFixture, StubRule};
pub use config::{ApiStyle, BackendConfig, RetryPolicy};
pub use parse::{parse_claim_output, parse_scored_output, ParseStatus, ParsedOutput};
pub use score::{
    invalid_ok_items, AspectScore, BatchResult, BatchSummary, JobConfig, RawOutput, ScoreError,
    ScoredComment, Scorer, ScoringPath,
};
