//! The scoring protocol: prompt construction, backend calls, parsing and
//! batch bookkeeping.

use std::collections::BTreeMap;
use std::sync::Arc;

use futures::{StreamExt, TryStreamExt};
use revutil_core::rubric::{
    build_claim_detection_prompt, build_multi_aspect_prompt, build_single_aspect_prompt,
    sample_incontext_examples, ClaimLabel, ExamplePool, PromptBundle, PromptTask, RubricError,
    RubricSet, ScoreMode,
};
use revutil_core::{Aspect, AspectLabel, ReviewComment};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError};
use crate::parse::{parse_claim_output, parse_scored_output, ParseStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringPath {
    /// One call per aspect with in-context examples; two-step Verifiability.
    SingleAspect,
    /// One instruction-prompt call covering all four aspects.
    #[default]
    MultiAspect,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Rubric(#[from] RubricError),
    #[error("no example pool for {0}; single-aspect scoring needs one per aspect")]
    MissingPool(Aspect),
    #[error("nothing to score")]
    EmptyBatch,
    #[error("no aspects requested")]
    NoAspects,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectScore {
    pub label: AspectLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

/// Text returned by one backend call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOutput {
    pub task: PromptTask,
    pub aspects: Vec<Aspect>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredComment {
    pub comment_id: String,
    pub scores: BTreeMap<Aspect, AspectScore>,
    pub parse_status: ParseStatus,
    pub raw_outputs: Vec<RawOutput>,
}

impl ScoredComment {
    pub fn label(&self, aspect: Aspect) -> Option<AspectLabel> {
        self.scores.get(&aspect).map(|s| s.label)
    }

    fn failed(comment_id: &str, reason: String) -> Self {
        Self {
            comment_id: comment_id.to_string(),
            scores: BTreeMap::new(),
            parse_status: ParseStatus::Failed { reason },
            raw_outputs: Vec::new(),
        }
    }
}

/// Everything a scoring run needs besides the comments.
#[derive(Clone)]
pub struct Scorer {
    pub backend: Arc<dyn Backend>,
    pub rubrics: RubricSet,
    pub pools: BTreeMap<Aspect, ExamplePool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JobConfig {
    pub aspects: Vec<Aspect>,
    pub path: ScoringPath,
    pub score_mode: ScoreMode,
    /// Seeds in-context example sampling; every comment gets the same draw.
    pub rng_seed: u64,
    pub max_concurrency: usize,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            aspects: Aspect::ALL.to_vec(),
            path: ScoringPath::default(),
            score_mode: ScoreMode::default(),
            rng_seed: 0,
            max_concurrency: 4,
        }
    }
}

fn merge_status(missing: Vec<String>, any_label: bool, failures: Vec<String>) -> ParseStatus {
    if missing.is_empty() {
        ParseStatus::Ok
    } else if !any_label && !failures.is_empty() {
        ParseStatus::Failed {
            reason: failures.join("; "),
        }
    } else {
        ParseStatus::PartialParse { missing }
    }
}

impl Scorer {
    pub fn new(backend: Arc<dyn Backend>, rubrics: RubricSet) -> Self {
        Self {
            backend,
            rubrics,
            pools: BTreeMap::new(),
        }
    }

    pub fn with_pool(mut self, pool: ExamplePool) -> Self {
        self.pools.insert(pool.aspect, pool);
        self
    }

    async fn call(
        &self,
        prompt: &PromptBundle,
        raw: &mut Vec<RawOutput>,
    ) -> Result<String, BackendError> {
        let text = self.backend.complete(prompt).await?;
        raw.push(RawOutput {
            task: prompt.task,
            aspects: prompt.aspects.clone(),
            text: text.clone(),
        });
        Ok(text)
    }

    fn pool(&self, aspect: Aspect) -> Result<&ExamplePool, ScoreError> {
        self.pools
            .get(&aspect)
            .ok_or(ScoreError::MissingPool(aspect))
    }

    /// Scores one comment on `aspects`.
    ///
    /// Multi-aspect makes one call. Single-aspect makes one call per aspect,
    /// except Verifiability, which first asks whether the comment contains a
    /// claim and only scores it 1-5 when it does. Parse problems are recorded
    /// in `parse_status`; backend errors are returned.
    pub async fn score_comment(
        &self,
        comment: &ReviewComment,
        aspects: &[Aspect],
        path: ScoringPath,
        score_mode: ScoreMode,
        rng_seed: u64,
    ) -> Result<ScoredComment, ScoreError> {
        if aspects.is_empty() {
            return Err(ScoreError::NoAspects);
        }
        let mut raw = Vec::new();
        let mut scores = BTreeMap::new();
        let parse_status = match path {
            ScoringPath::MultiAspect => {
                let prompt = build_multi_aspect_prompt(&self.rubrics, comment, score_mode)?;
                let schema: Vec<String> = prompt
                    .expected_output_schema
                    .iter()
                    .filter(|k| {
                        aspects
                            .iter()
                            .any(|a| **k == a.label_key() || **k == a.rationale_key())
                    })
                    .cloned()
                    .collect();
                let text = self.call(&prompt, &mut raw).await?;
                let parsed = parse_scored_output(&text, &schema, aspects);
                for (aspect, label) in parsed.labels {
                    scores.insert(
                        aspect,
                        AspectScore {
                            label,
                            rationale: parsed.rationales.get(&aspect).cloned(),
                        },
                    );
                }
                parsed.status
            }
            ScoringPath::SingleAspect => {
                let mut missing = Vec::new();
                let mut failures = Vec::new();
                for &aspect in aspects {
                    let (score, miss, failure) = self
                        .single_aspect(comment, aspect, score_mode, rng_seed, &mut raw)
                        .await?;
                    if let Some(s) = score {
                        scores.insert(aspect, s);
                    }
                    missing.extend(miss);
                    failures.extend(failure);
                }
                merge_status(missing, !scores.is_empty(), failures)
            }
        };
        Ok(ScoredComment {
            comment_id: comment.id.clone(),
            scores,
            parse_status,
            raw_outputs: raw,
        })
    }

    async fn single_aspect(
        &self,
        comment: &ReviewComment,
        aspect: Aspect,
        score_mode: ScoreMode,
        rng_seed: u64,
        raw: &mut Vec<RawOutput>,
    ) -> Result<(Option<AspectScore>, Vec<String>, Option<String>), ScoreError> {
        let pool = self.pool(aspect)?;
        if aspect == Aspect::Verifiability {
            let examples = sample_incontext_examples(pool, rng_seed, PromptTask::ClaimDetection)?;
            let prompt =
                build_claim_detection_prompt(&self.rubrics, comment, &examples, score_mode)?;
            let text = self.call(&prompt, raw).await?;
            match parse_claim_output(&text) {
                None => {
                    return Ok((
                        None,
                        vec![aspect.label_key()],
                        Some("claim detection output not understood".into()),
                    ))
                }
                Some((ClaimLabel::NoClaim, rationale)) => {
                    let missing = if score_mode.with_rationale() && rationale.is_none() {
                        vec![aspect.rationale_key()]
                    } else {
                        Vec::new()
                    };
                    let score = AspectScore {
                        label: AspectLabel::NoClaim,
                        rationale,
                    };
                    return Ok((Some(score), missing, None));
                }
                Some((ClaimLabel::Claim, _)) => {}
            }
        }
        let examples = sample_incontext_examples(pool, rng_seed, PromptTask::Scoring)?;
        let prompt =
            build_single_aspect_prompt(&self.rubrics, aspect, comment, &examples, score_mode)?;
        let text = self.call(&prompt, raw).await?;
        let parsed = parse_scored_output(&text, &prompt.expected_output_schema, &[aspect]);
        let score = parsed.labels.get(&aspect).map(|&label| AspectScore {
            label,
            rationale: parsed.rationales.get(&aspect).cloned(),
        });
        Ok(match parsed.status {
            ParseStatus::Ok => (score, Vec::new(), None),
            ParseStatus::PartialParse { missing } => (score, missing, None),
            ParseStatus::Failed { reason } => {
                (score, prompt.expected_output_schema.clone(), Some(reason))
            }
        })
    }

    /// Scores `comments` with at most `job.max_concurrency` comments in
    /// flight; results keep input order. An authentication failure aborts
    /// the batch; other backend errors mark the item `Failed`.
    pub async fn score_batch(
        &self,
        comments: &[ReviewComment],
        job: &JobConfig,
    ) -> Result<BatchResult, ScoreError> {
        if comments.is_empty() {
            return Err(ScoreError::EmptyBatch);
        }
        if job.aspects.is_empty() {
            return Err(ScoreError::NoAspects);
        }
        let items: Vec<ScoredComment> = futures::stream::iter(0..comments.len())
            .map(|i| async move {
                let c = &comments[i];
                match self
                    .score_comment(c, &job.aspects, job.path, job.score_mode, job.rng_seed)
                    .await
                {
                    Ok(s) => Ok(s),
                    Err(ScoreError::Backend(e)) if !e.is_fatal() => {
                        Ok(ScoredComment::failed(&c.id, e.to_string()))
                    }
                    Err(e) => Err(e),
                }
            })
            .buffered(job.max_concurrency.max(1))
            .try_collect()
            .await?;
        let summary = BatchSummary::of(&items);
        Ok(BatchResult { items, summary })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BatchSummary {
    pub ok: usize,
    pub partial: usize,
    pub failed: usize,
    /// Label counts per aspect over every item that produced a label.
    pub histogram: BTreeMap<Aspect, BTreeMap<String, usize>>,
}

impl BatchSummary {
    pub fn of(items: &[ScoredComment]) -> Self {
        let mut s = BatchSummary::default();
        for item in items {
            match item.parse_status {
                ParseStatus::Ok => s.ok += 1,
                ParseStatus::PartialParse { .. } => s.partial += 1,
                ParseStatus::Failed { .. } => s.failed += 1,
            }
            for (aspect, score) in &item.scores {
                *s.histogram
                    .entry(*aspect)
                    .or_default()
                    .entry(score.label.to_string())
                    .or_default() += 1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchResult {
    pub items: Vec<ScoredComment>,
    pub summary: BatchSummary,
}

/// Items whose status is `Ok` but carry a label invalid for its aspect, or
/// lack a requested aspect. Empty for well-formed results.
pub fn invalid_ok_items(items: &[ScoredComment], aspects: &[Aspect]) -> Vec<(String, Aspect)> {
    let mut bad = Vec::new();
    for item in items.iter().filter(|i| i.parse_status.is_ok()) {
        for &a in aspects {
            if !item.label(a).is_some_and(|l| l.valid_for(a)) {
                bad.push((item.comment_id.clone(), a));
            }
        }
    }
    bad
}
