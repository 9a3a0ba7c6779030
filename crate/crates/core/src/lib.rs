//! Peer-review comment utility toolkit: segmentation of reviews into
//! weakness comments, aspect rubrics and prompts, and agreement statistics.

pub mod analysis;
pub mod metrics;
pub mod model;
pub mod rubric;
pub mod segmenter;

pub use model::{
    classify_agreement, validate_label, AgreementClass, AnnotationDataset, AnnotationMode,
    AnnotationRecord, Aspect, AspectLabel, Ordinal, ReviewComment,
};
