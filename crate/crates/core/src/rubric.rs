//! Aspect rubrics, in-context example pools and prompt rendering.
//!
//! Rubric text lives in `resources/rubrics/<aspect>/` as one file per label
//! plus a `preamble.txt`; the bundled copy is compiled in, and
//! [`RubricSet::load_dir`] reads an on-disk copy with the same layout.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{read_jsonl, Aspect, AspectLabel, LoadError, ReviewComment};

pub const RUBRIC_VERSION: &str = include_str!("../resources/rubrics/VERSION");

/// Opening paragraph shared by the single-aspect and claim-detection prompts.
pub const UTILITY_PREAMBLE: &str = "This aspect is aimed to maximize the utilization of the review comments for the authors. The primary purpose of the review is to help/guide authors in improving their drafts. Keep this in mind while evaluating the review point. Whenever you encounter a borderline case, think: “Will this review point help authors improve their draft?”. There is no correlation between the aspect score and the length of the review point.";

const TASK_DESCRIPTION: &str = "You are an expert in evaluating peer review comments with respect to different aspects. These aspects are aimed to maximize the utilization of the review comments for the authors. The primary purpose of the review is to help/guide authors in improving their drafts. Keep this in mind while evaluating the review point. Whenever you encounter a borderline case, think: “Will this review point help authors improve their draft?”. There is no correlation between the aspect score and the length of the review point.";

/// Examples drawn per label for each task.
pub const EXAMPLES_PER_LABEL: usize = 5;

pub const CLAIM_RATIONALE_KEY: &str = "claim_rationale";
pub const CLAIM_LABEL_KEY: &str = "claim_label";

#[derive(Debug, Error)]
pub enum RubricError {
    #[error("no rubric loaded for aspect {0}")]
    MissingRubric(Aspect),
    #[error("rubric for {aspect}: {detail}")]
    InvalidRubric { aspect: Aspect, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{path}:{line}: {message}")]
    InvalidSeed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("example pool for {aspect} has {available} seeds labelled {label}, need {needed}")]
    PoolTooSmall {
        aspect: Aspect,
        label: SeedLabel,
        available: usize,
        needed: usize,
    },
    #[error("example labelled {label} cannot be used for {aspect} {task:?} prompts")]
    AspectMismatch {
        aspect: Aspect,
        task: PromptTask,
        label: SeedLabel,
    },
}

/// Definition and per-label descriptors of one aspect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RubricText {
    pub aspect: Aspect,
    pub preamble: String,
    pub label_descriptors: BTreeMap<AspectLabel, String>,
}

impl RubricText {
    pub fn new(
        aspect: Aspect,
        preamble: impl Into<String>,
        label_descriptors: BTreeMap<AspectLabel, String>,
    ) -> Result<Self, RubricError> {
        let expected = AspectLabel::all_for(aspect);
        let got: Vec<_> = label_descriptors.keys().copied().collect();
        let mut sorted = expected.clone();
        sorted.sort();
        if got != sorted {
            return Err(RubricError::InvalidRubric {
                aspect,
                detail: format!(
                    "expected {} descriptors, found labels {:?}",
                    expected.len(),
                    got
                ),
            });
        }
        if let Some((label, _)) = label_descriptors.iter().find(|(_, d)| d.trim().is_empty()) {
            return Err(RubricError::InvalidRubric {
                aspect,
                detail: format!("descriptor for {label} is empty"),
            });
        }
        Ok(Self {
            aspect,
            preamble: preamble.into(),
            label_descriptors,
        })
    }

    /// Descriptors in scale order: 1..5, then X.
    pub fn descriptors(&self) -> impl Iterator<Item = (AspectLabel, &str)> + '_ {
        AspectLabel::all_for(self.aspect)
            .into_iter()
            .map(move |l| (l, self.label_descriptors[&l].as_str()))
    }

    /// Preamble followed by every descriptor, as embedded in prompts.
    pub fn description(&self) -> String {
        let mut out = self.preamble.trim_end().to_string();
        for (_, d) in self.descriptors() {
            out.push_str("\n\n");
            out.push_str(d.trim_end());
        }
        out
    }
}

fn label_file(label: AspectLabel) -> String {
    match label {
        AspectLabel::NoClaim => "x.txt".into(),
        AspectLabel::Score(o) => format!("{}.txt", o.get()),
    }
}

macro_rules! bundled_aspect {
    ($dir:literal) => {
        [
            include_str!(concat!("../resources/rubrics/", $dir, "/preamble.txt")),
            include_str!(concat!("../resources/rubrics/", $dir, "/1.txt")),
            include_str!(concat!("../resources/rubrics/", $dir, "/2.txt")),
            include_str!(concat!("../resources/rubrics/", $dir, "/3.txt")),
            include_str!(concat!("../resources/rubrics/", $dir, "/4.txt")),
            include_str!(concat!("../resources/rubrics/", $dir, "/5.txt")),
        ]
    };
}

const BUNDLED_NO_CLAIM: &str = include_str!("../resources/rubrics/verifiability/x.txt");
const BUNDLED_CLAIM_DETECTION: &str =
    include_str!("../resources/rubrics/verifiability/claim_detection.txt");

/// Rubrics for some or all aspects, plus the claim-detection instructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RubricSet {
    rubrics: BTreeMap<Aspect, RubricText>,
    claim_detection: String,
}

impl RubricSet {
    /// The rubric texts compiled into the crate.
    pub fn bundled() -> Self {
        let files = [
            (Aspect::Actionability, bundled_aspect!("actionability")),
            (
                Aspect::GroundingSpecificity,
                bundled_aspect!("grounding_specificity"),
            ),
            (Aspect::Verifiability, bundled_aspect!("verifiability")),
            (Aspect::Helpfulness, bundled_aspect!("helpfulness")),
        ];
        let mut rubrics = BTreeMap::new();
        for (aspect, texts) in files {
            let mut descriptors: BTreeMap<_, _> = (1..=5u8)
                .map(|v| {
                    (
                        AspectLabel::score(v),
                        texts[v as usize].trim_end().to_string(),
                    )
                })
                .collect();
            if aspect.allows_no_claim() {
                descriptors.insert(
                    AspectLabel::NoClaim,
                    BUNDLED_NO_CLAIM.trim_end().to_string(),
                );
            }
            let rubric = RubricText::new(aspect, texts[0].trim_end(), descriptors)
                .expect("bundled rubric is complete");
            rubrics.insert(aspect, rubric);
        }
        Self {
            rubrics,
            claim_detection: BUNDLED_CLAIM_DETECTION.trim_end().to_string(),
        }
    }

    /// Reads `<dir>/<aspect>/{preamble,1..5[,x]}.txt`. Aspect directories that
    /// do not exist are left out (prompts needing them fail with
    /// `MissingRubric`); a partially populated directory is an error.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, RubricError> {
        let dir = dir.as_ref();
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| RubricError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let mut rubrics = BTreeMap::new();
        for aspect in Aspect::ALL {
            let adir = dir.join(aspect.key());
            if !adir.is_dir() {
                continue;
            }
            let preamble = read(&adir.join("preamble.txt"))?;
            let mut descriptors = BTreeMap::new();
            for label in AspectLabel::all_for(aspect) {
                let text = read(&adir.join(label_file(label)))?;
                descriptors.insert(label, text.trim_end().to_string());
            }
            rubrics.insert(
                aspect,
                RubricText::new(aspect, preamble.trim_end(), descriptors)?,
            );
        }
        let claim_path = dir.join("verifiability").join("claim_detection.txt");
        let claim_detection = if claim_path.is_file() {
            read(&claim_path)?.trim_end().to_string()
        } else {
            BUNDLED_CLAIM_DETECTION.trim_end().to_string()
        };
        Ok(Self {
            rubrics,
            claim_detection,
        })
    }

    pub fn get(&self, aspect: Aspect) -> Result<&RubricText, RubricError> {
        self.rubrics
            .get(&aspect)
            .ok_or(RubricError::MissingRubric(aspect))
    }

    pub fn aspects(&self) -> impl Iterator<Item = Aspect> + '_ {
        self.rubrics.keys().copied()
    }

    pub fn claim_detection_text(&self) -> &str {
        &self.claim_detection
    }
}

impl Default for RubricSet {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Binary label of the claim-detection step. `Claim` sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimLabel {
    Claim,
    NoClaim,
}

impl ClaimLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimLabel::Claim => "Claim",
            ClaimLabel::NoClaim => "No Claim",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        let norm: String = raw
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect();
        match norm.as_str() {
            "claim" | "yes" => Some(ClaimLabel::Claim),
            "noclaim" | "no" | "x" => Some(ClaimLabel::NoClaim),
            _ => None,
        }
    }
}

/// Label of a seed example: an aspect label for scoring pools or a binary
/// claim label for claim-detection pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeedLabel {
    Aspect(AspectLabel),
    Claim(ClaimLabel),
}

impl fmt::Display for SeedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedLabel::Aspect(l) => l.fmt(f),
            SeedLabel::Claim(c) => f.write_str(c.as_str()),
        }
    }
}

impl SeedLabel {
    fn parse(raw: &str) -> Option<Self> {
        AspectLabel::parse_token(raw)
            .filter(|l| !l.is_no_claim())
            .map(SeedLabel::Aspect)
            .or_else(|| ClaimLabel::parse(raw).map(SeedLabel::Claim))
    }
}

impl Serialize for SeedLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeedLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "invalid seed label {other}"
                )))
            }
        };
        SeedLabel::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid seed label {raw:?}")))
    }
}

/// One hand-labelled example used as an in-context demonstration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedExample {
    pub text: String,
    pub label: SeedLabel,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTask {
    Scoring,
    ClaimDetection,
}

impl PromptTask {
    /// Labels sampled for this task, in prompt order.
    pub fn labels(self) -> Vec<SeedLabel> {
        match self {
            PromptTask::Scoring => (1..=5)
                .map(|v| SeedLabel::Aspect(AspectLabel::score(v)))
                .collect(),
            PromptTask::ClaimDetection => vec![
                SeedLabel::Claim(ClaimLabel::Claim),
                SeedLabel::Claim(ClaimLabel::NoClaim),
            ],
        }
    }

    fn accepts(self, aspect: Aspect, label: SeedLabel) -> bool {
        match (self, label) {
            (PromptTask::Scoring, SeedLabel::Aspect(l)) => l.valid_for(aspect) && !l.is_no_claim(),
            (PromptTask::ClaimDetection, SeedLabel::Claim(_)) => aspect == Aspect::Verifiability,
            _ => false,
        }
    }
}

/// Seed examples for one aspect. A Verifiability pool may mix scored seeds
/// and claim-detection seeds; each task samples only its own labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamplePool {
    pub aspect: Aspect,
    seeds: Vec<SeedExample>,
}

impl ExamplePool {
    pub fn new(aspect: Aspect, seeds: Vec<SeedExample>) -> Result<Self, RubricError> {
        for (i, s) in seeds.iter().enumerate() {
            let ok = match s.label {
                SeedLabel::Aspect(l) => l.valid_for(aspect),
                SeedLabel::Claim(_) => aspect == Aspect::Verifiability,
            };
            let message = if !ok {
                Some(format!("label {} is not valid for {aspect}", s.label))
            } else if s.rationale.trim().is_empty() {
                Some("empty rationale".to_string())
            } else if s.text.trim().is_empty() {
                Some("empty text".to_string())
            } else {
                None
            };
            if let Some(message) = message {
                return Err(RubricError::InvalidSeed {
                    path: format!("<{aspect} pool>"),
                    line: i + 1,
                    message,
                });
            }
        }
        Ok(Self { aspect, seeds })
    }

    pub fn read<R: BufRead>(aspect: Aspect, reader: R, path: &str) -> Result<Self, RubricError> {
        let seeds: Vec<SeedExample> = read_jsonl(reader, path)?;
        Self::new(aspect, seeds).map_err(|e| match e {
            RubricError::InvalidSeed { line, message, .. } => RubricError::InvalidSeed {
                path: path.to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn load(aspect: Aspect, path: impl AsRef<Path>) -> Result<Self, RubricError> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| RubricError::Io {
            path: name.clone(),
            source,
        })?;
        Self::read(aspect, std::io::BufReader::new(file), &name)
    }

    pub fn seeds(&self) -> &[SeedExample] {
        &self.seeds
    }
}

/// Draws [`EXAMPLES_PER_LABEL`] seeds per task label without replacement.
///
/// Labels come in ascending order (scores 1..5, or Claim then No Claim) and
/// each label's draws keep the order they were sampled in. Sampling is a
/// partial Fisher-Yates shuffle over the label's seeds in pool order, driven
/// by a single `ChaCha8Rng` seeded with `rng_seed` and shared across labels.
pub fn sample_incontext_examples(
    pool: &ExamplePool,
    rng_seed: u64,
    task: PromptTask,
) -> Result<Vec<SeedExample>, RubricError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(task.labels().len() * EXAMPLES_PER_LABEL);
    for label in task.labels() {
        let mut candidates: Vec<&SeedExample> =
            pool.seeds.iter().filter(|s| s.label == label).collect();
        if candidates.len() < EXAMPLES_PER_LABEL {
            return Err(RubricError::PoolTooSmall {
                aspect: pool.aspect,
                label,
                available: candidates.len(),
                needed: EXAMPLES_PER_LABEL,
            });
        }
        for i in 0..EXAMPLES_PER_LABEL {
            let j = rng.gen_range(i..candidates.len());
            candidates.swap(i, j);
        }
        out.extend(
            candidates[..EXAMPLES_PER_LABEL]
                .iter()
                .map(|s| (*s).clone()),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    SingleAspect,
    MultiAspect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ScoreMode {
    #[serde(rename = "score")]
    ScoreOnly,
    #[default]
    #[serde(rename = "score_rationale")]
    ScoreWithRationale,
}

impl ScoreMode {
    pub fn with_rationale(self) -> bool {
        self == ScoreMode::ScoreWithRationale
    }
}

/// A rendered prompt plus what its answer should contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub mode: PromptMode,
    pub task: PromptTask,
    pub score_mode: ScoreMode,
    pub aspects: Vec<Aspect>,
    pub rendered_text: String,
    /// JSON keys the answer must carry, in skeleton order.
    pub expected_output_schema: Vec<String>,
    /// The answer template with placeholder values.
    pub output_skeleton: String,
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// `{"k": "v", ...}` on one line, keys in the given order.
fn inline_object(pairs: &[(String, String)]) -> String {
    let body: Vec<String> = pairs
        .iter()
        .map(|(k, v)| format!("{}: {}", json_str(k), json_str(v)))
        .collect();
    format!("{{{}}}", body.join(", "))
}

fn aspect_keys(aspect: Aspect, mode: ScoreMode) -> Vec<String> {
    if mode.with_rationale() {
        vec![aspect.rationale_key(), aspect.label_key()]
    } else {
        vec![aspect.label_key()]
    }
}

fn claim_keys(mode: ScoreMode) -> Vec<String> {
    if mode.with_rationale() {
        vec![CLAIM_RATIONALE_KEY.to_string(), CLAIM_LABEL_KEY.to_string()]
    } else {
        vec![CLAIM_LABEL_KEY.to_string()]
    }
}

fn placeholder(key: &str) -> String {
    format!("[{}]", key.replace('_', " ").to_uppercase())
}

fn skeleton(keys: &[String]) -> String {
    let lines: Vec<String> = keys
        .iter()
        .map(|k| format!("  {}: {}", json_str(k), json_str(&placeholder(k))))
        .collect();
    format!("{{\n{}\n}}", lines.join(",\n"))
}

fn format_instruction(keys: &[String], mode: ScoreMode) -> String {
    let quoted: Vec<String> = keys.iter().map(|k| json_str(k)).collect();
    let mut s = match quoted.as_slice() {
        [one] => format!("Output a JSON object with the key {one}."),
        many => format!("Output a JSON object with the keys {}.", many.join(" and ")),
    };
    if mode.with_rationale() {
        s.push_str(" Escape the double quotes inside the rationale.");
    }
    s
}

fn render_example(example: &SeedExample, keys: &[String], mode: ScoreMode) -> String {
    let mut pairs = Vec::new();
    if mode.with_rationale() {
        pairs.push((keys[0].clone(), example.rationale.clone()));
    }
    pairs.push((keys[keys.len() - 1].clone(), example.label.to_string()));
    format!(
        "Review Point: {}\nOutput: {}",
        example.text,
        inline_object(&pairs)
    )
}

fn single_prompt(
    heading: &str,
    description: &str,
    examples: &[SeedExample],
    keys: &[String],
    comment: &ReviewComment,
    score_mode: ScoreMode,
    target: &str,
) -> String {
    let mut out = String::new();
    out.push_str(UTILITY_PREAMBLE);
    out.push_str(
        "\n\nEvaluate the review point based on the aspect description provided next.\n\n",
    );
    out.push_str(heading);
    out.push_str("\n\n");
    out.push_str(description);
    out.push_str("\n\n");
    if score_mode.with_rationale() {
        out.push_str(&format!(
            "Generate a rationale and use it to output the {target}. "
        ));
    } else {
        out.push_str(&format!("Output only the {target}. "));
    }
    out.push_str(&format_instruction(keys, score_mode));
    out.push_str("\n\n");
    for ex in examples {
        out.push_str(&render_example(ex, keys, score_mode));
        out.push_str("\n\n");
    }
    out.push_str("Review Point: ");
    out.push_str(&comment.text);
    out
}

fn check_examples(
    aspect: Aspect,
    task: PromptTask,
    examples: &[SeedExample],
) -> Result<(), RubricError> {
    match examples.iter().find(|e| !task.accepts(aspect, e.label)) {
        Some(e) => Err(RubricError::AspectMismatch {
            aspect,
            task,
            label: e.label,
        }),
        None => Ok(()),
    }
}

/// Single-aspect scoring prompt: utility preamble, aspect definition,
/// rationale instruction, in-context examples, then the review point.
pub fn build_single_aspect_prompt(
    rubrics: &RubricSet,
    aspect: Aspect,
    comment: &ReviewComment,
    examples: &[SeedExample],
    score_mode: ScoreMode,
) -> Result<PromptBundle, RubricError> {
    let rubric = rubrics.get(aspect)?;
    check_examples(aspect, PromptTask::Scoring, examples)?;
    let keys = aspect_keys(aspect, score_mode);
    let heading = format!("Aspect: {}", aspect.display_name());
    let rendered_text = single_prompt(
        &heading,
        &rubric.description(),
        examples,
        &keys,
        comment,
        score_mode,
        "score",
    );
    Ok(PromptBundle {
        mode: PromptMode::SingleAspect,
        task: PromptTask::Scoring,
        score_mode,
        aspects: vec![aspect],
        rendered_text,
        output_skeleton: skeleton(&keys),
        expected_output_schema: keys,
    })
}

/// First step of two-step Verifiability: does the comment contain a claim?
///
/// The wording of this prompt is a reconstruction in the style of the
/// scoring prompt; it carries the full Verifiability definition followed by
/// the claim-detection instructions.
pub fn build_claim_detection_prompt(
    rubrics: &RubricSet,
    comment: &ReviewComment,
    examples: &[SeedExample],
    score_mode: ScoreMode,
) -> Result<PromptBundle, RubricError> {
    let aspect = Aspect::Verifiability;
    let rubric = rubrics.get(aspect)?;
    check_examples(aspect, PromptTask::ClaimDetection, examples)?;
    let keys = claim_keys(score_mode);
    let heading = format!("Aspect: {} (claim detection)", aspect.display_name());
    let description = format!(
        "{}\n\n{}",
        rubric.description(),
        rubrics.claim_detection_text()
    );
    let rendered_text = single_prompt(
        &heading,
        &description,
        examples,
        &keys,
        comment,
        score_mode,
        "label (\"Claim\" or \"No Claim\")",
    );
    Ok(PromptBundle {
        mode: PromptMode::SingleAspect,
        task: PromptTask::ClaimDetection,
        score_mode,
        aspects: vec![aspect],
        rendered_text,
        output_skeleton: skeleton(&keys),
        expected_output_schema: keys,
    })
}

fn multi_heading(aspect: Aspect) -> &'static str {
    match aspect {
        Aspect::Actionability => "actionability",
        Aspect::GroundingSpecificity => "Grounding & Specificity",
        Aspect::Verifiability => "Verifiability",
        Aspect::Helpfulness => "Helpfulness",
    }
}

/// Alpaca-style instruction prompt covering all four aspects.
///
/// `rendered_text` ends with `###Output: ` so a fine-tuned model continues
/// with the JSON answer; the answer template is in `output_skeleton`.
pub fn build_multi_aspect_prompt(
    rubrics: &RubricSet,
    comment: &ReviewComment,
    score_mode: ScoreMode,
) -> Result<PromptBundle, RubricError> {
    let mut out = String::from("###Task Description:\n");
    out.push_str(TASK_DESCRIPTION);
    out.push_str("\n\n");
    let mut keys = Vec::new();
    for aspect in Aspect::ALL {
        let rubric = rubrics.get(aspect)?;
        out.push_str(&format!(
            "Aspect: {}\n\n{}\n\n",
            multi_heading(aspect),
            rubric.description()
        ));
        keys.extend(aspect_keys(aspect, score_mode));
    }
    out.push_str("###Instruction:\n\n");
    out.push_str("Evaluate the review based on the given definitions of the aspect(s) above. ");
    if score_mode.with_rationale() {
        // "qoutes" is kept as written in the original template.
        out.push_str("Generate a rationale and use it to output the score. Escape the double qoutes inside the rationale.");
    } else {
        out.push_str("Output only the scores.");
    }
    out.push_str("\n\n###Review Point: ");
    out.push_str(&comment.text);
    out.push_str("\n\n###Output: ");
    Ok(PromptBundle {
        mode: PromptMode::MultiAspect,
        task: PromptTask::Scoring,
        score_mode,
        aspects: Aspect::ALL.to_vec(),
        rendered_text: out,
        output_skeleton: skeleton(&keys),
        expected_output_schema: keys,
    })
}
