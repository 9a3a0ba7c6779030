//! Domain types shared by every stage: aspects, labels, comments and
//! annotation records, plus JSONL ingestion.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The four author-utility aspects a review comment is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Actionability,
    GroundingSpecificity,
    Verifiability,
    Helpfulness,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [
        Aspect::Actionability,
        Aspect::GroundingSpecificity,
        Aspect::Verifiability,
        Aspect::Helpfulness,
    ];

    /// Snake-case key used in file formats and model output keys.
    pub fn key(self) -> &'static str {
        match self {
            Aspect::Actionability => "actionability",
            Aspect::GroundingSpecificity => "grounding_specificity",
            Aspect::Verifiability => "verifiability",
            Aspect::Helpfulness => "helpfulness",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Aspect::Actionability => "Actionability",
            Aspect::GroundingSpecificity => "Grounding & Specificity",
            Aspect::Verifiability => "Verifiability",
            Aspect::Helpfulness => "Helpfulness",
        }
    }

    /// Only Verifiability carries the extra "X" (No Claim) category.
    pub fn allows_no_claim(self) -> bool {
        self == Aspect::Verifiability
    }

    pub fn label_key(self) -> String {
        format!("{}_label", self.key())
    }

    pub fn rationale_key(self) -> String {
        format!("{}_rationale", self.key())
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown aspect {0:?}")]
pub struct UnknownAspect(pub String);

impl FromStr for Aspect {
    type Err = UnknownAspect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match norm.as_str() {
            "actionability" => Ok(Aspect::Actionability),
            "grounding_specificity" | "grounding_&_specificity" | "grounding" => {
                Ok(Aspect::GroundingSpecificity)
            }
            "verifiability" => Ok(Aspect::Verifiability),
            "helpfulness" => Ok(Aspect::Helpfulness),
            _ => Err(UnknownAspect(s.to_string())),
        }
    }
}

/// An ordinal score in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ordinal(u8);

impl Ordinal {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(value: u8) -> Option<Self> {
        (Self::MIN..=Self::MAX)
            .contains(&value)
            .then_some(Self(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

/// A label for one aspect: an ordinal score or the No Claim sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspectLabel {
    Score(Ordinal),
    NoClaim,
}

impl AspectLabel {
    /// Panics when `value` is outside `1..=5`; intended for literals.
    pub fn score(value: u8) -> Self {
        AspectLabel::Score(Ordinal::new(value).expect("ordinal label must be in 1..=5"))
    }

    pub fn ordinal(self) -> Option<u8> {
        match self {
            AspectLabel::Score(o) => Some(o.get()),
            AspectLabel::NoClaim => None,
        }
    }

    pub fn is_no_claim(self) -> bool {
        matches!(self, AspectLabel::NoClaim)
    }

    /// Every label valid for `aspect`, ascending, with X last.
    pub fn all_for(aspect: Aspect) -> Vec<AspectLabel> {
        let mut out: Vec<_> = (1..=5).map(AspectLabel::score).collect();
        if aspect.allows_no_claim() {
            out.push(AspectLabel::NoClaim);
        }
        out
    }

    /// Parses a token without aspect context.
    pub fn parse_token(raw: &str) -> Option<AspectLabel> {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case("x") {
            return Some(AspectLabel::NoClaim);
        }
        raw.parse::<u8>()
            .ok()
            .and_then(Ordinal::new)
            .map(AspectLabel::Score)
    }

    pub fn valid_for(self, aspect: Aspect) -> bool {
        !self.is_no_claim() || aspect.allows_no_claim()
    }
}

impl fmt::Display for AspectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AspectLabel::Score(o) => write!(f, "{}", o.get()),
            AspectLabel::NoClaim => f.write_str("X"),
        }
    }
}

impl Serialize for AspectLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AspectLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        let token = match Raw::deserialize(d)? {
            Raw::Str(s) => s,
            Raw::Int(i) => i.to_string(),
        };
        AspectLabel::parse_token(&token)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid label {token:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("rejected label {raw:?} for aspect {aspect}")]
    Rejected { aspect: Aspect, raw: String },
}

/// Validates a raw label token for a given aspect.
pub fn validate_label(aspect: Aspect, raw: &str) -> Result<AspectLabel, LabelError> {
    AspectLabel::parse_token(raw)
        .filter(|l| l.valid_for(aspect))
        .ok_or_else(|| LabelError::Rejected {
            aspect,
            raw: raw.to_string(),
        })
}

/// Whitespace-token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// One segmented weakness/discussion point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReviewComment {
    pub id: String,
    pub review_id: String,
    pub venue: String,
    pub year: i32,
    pub position: usize,
    pub text: String,
    pub word_count: usize,
}

impl ReviewComment {
    pub fn new(
        id: impl Into<String>,
        review_id: impl Into<String>,
        venue: impl Into<String>,
        year: i32,
        position: usize,
        text: impl Into<String>,
    ) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            review_id: review_id.into(),
            venue: venue.into(),
            year,
            position,
            word_count: word_count(&text),
            text,
        }
    }

    /// Ad-hoc comment with no provenance, e.g. pasted text.
    pub fn standalone(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(id, "", "", 0, 0, text)
    }
}

impl<'de> Deserialize<'de> for ReviewComment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            id: String,
            #[serde(default)]
            review_id: String,
            #[serde(default)]
            venue: String,
            #[serde(default)]
            year: i32,
            #[serde(default)]
            position: usize,
            text: String,
        }
        let r = Raw::deserialize(d)?;
        Ok(ReviewComment::new(
            r.id,
            r.review_id,
            r.venue,
            r.year,
            r.position,
            r.text,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnotationMode {
    #[serde(rename = "score")]
    ScoreOnly,
    #[serde(rename = "score_rationale")]
    ScoreWithRationale,
    #[serde(rename = "human")]
    Human,
}

/// One label from one annotator (human or model) for one comment and aspect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub comment_id: String,
    pub annotator_id: String,
    pub aspect: Aspect,
    pub label: AspectLabel,
    #[serde(default)]
    pub rationale: Option<String>,
    pub mode: AnnotationMode,
}

impl AnnotationRecord {
    pub fn key(&self) -> (&str, &str, Aspect) {
        (&self.comment_id, &self.annotator_id, self.aspect)
    }
}

/// Agreement class of a triple-annotated item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", content = "majority_label", rename_all = "snake_case")]
pub enum AgreementClass {
    Full(AspectLabel),
    Majority(AspectLabel),
    Low,
}

impl AgreementClass {
    pub fn majority_label(self) -> Option<AspectLabel> {
        match self {
            AgreementClass::Full(l) | AgreementClass::Majority(l) => Some(l),
            AgreementClass::Low => None,
        }
    }

    pub fn has_majority(self) -> bool {
        !matches!(self, AgreementClass::Low)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("agreement classification needs exactly 3 labels, got {0}")]
pub struct ArityError(pub usize);

/// Partitions three labels into Full / Majority / Low agreement.
/// No Claim is an ordinary category for equality.
pub fn classify_agreement(labels: &[AspectLabel]) -> Result<AgreementClass, ArityError> {
    let [a, b, c] = labels else {
        return Err(ArityError(labels.len()));
    };
    Ok(if a == b && b == c {
        AgreementClass::Full(*a)
    } else if a == b || a == c {
        AgreementClass::Majority(*a)
    } else if b == c {
        AgreementClass::Majority(*b)
    } else {
        AgreementClass::Low
    })
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate record for (comment {comment_id:?}, annotator {annotator_id:?}, aspect {aspect})")]
    DuplicateKey {
        path: String,
        line: usize,
        comment_id: String,
        annotator_id: String,
        aspect: Aspect,
    },
}

/// Per-aspect and per-annotator record counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetCounts {
    pub per_aspect: BTreeMap<Aspect, usize>,
    pub per_annotator: BTreeMap<String, usize>,
}

/// Validated annotation records plus (optionally) the comments they label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationDataset {
    pub records: Vec<AnnotationRecord>,
    pub comments: Vec<ReviewComment>,
}

impl AnnotationDataset {
    /// Builds a dataset, rejecting duplicate (comment, annotator, aspect) keys
    /// and labels invalid for their aspect.
    pub fn from_records(records: Vec<AnnotationRecord>) -> Result<Self, LoadError> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            check_record(r, &mut seen, "<memory>", i + 1)?;
        }
        Ok(Self {
            records,
            comments: Vec::new(),
        })
    }

    pub fn counts(&self) -> DatasetCounts {
        let mut counts = DatasetCounts::default();
        for r in &self.records {
            *counts.per_aspect.entry(r.aspect).or_default() += 1;
            *counts
                .per_annotator
                .entry(r.annotator_id.clone())
                .or_default() += 1;
        }
        counts
    }

    pub fn annotators(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<_> = self
            .records
            .iter()
            .map(|r| r.annotator_id.clone())
            .collect();
        set.into_iter().collect()
    }

    /// Labels for one aspect keyed by comment id then annotator id.
    pub fn labels_by_comment(
        &self,
        aspect: Aspect,
    ) -> BTreeMap<String, BTreeMap<String, AspectLabel>> {
        let mut out: BTreeMap<String, BTreeMap<String, AspectLabel>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.aspect == aspect) {
            out.entry(r.comment_id.clone())
                .or_default()
                .insert(r.annotator_id.clone(), r.label);
        }
        out
    }

    /// Records restricted to one annotator, keyed by (comment id, aspect).
    pub fn by_annotator(&self, annotator: &str) -> BTreeMap<(String, Aspect), &AnnotationRecord> {
        self.records
            .iter()
            .filter(|r| r.annotator_id == annotator)
            .map(|r| ((r.comment_id.clone(), r.aspect), r))
            .collect()
    }
}

fn check_record<'a>(
    r: &'a AnnotationRecord,
    seen: &mut HashSet<(&'a str, &'a str, Aspect)>,
    path: &str,
    line: usize,
) -> Result<(), LoadError> {
    if !r.label.valid_for(r.aspect) {
        return Err(LoadError::Parse {
            path: path.to_string(),
            line,
            message: LabelError::Rejected {
                aspect: r.aspect,
                raw: r.label.to_string(),
            }
            .to_string(),
        });
    }
    if !seen.insert(r.key()) {
        return Err(LoadError::DuplicateKey {
            path: path.to_string(),
            line,
            comment_id: r.comment_id.clone(),
            annotator_id: r.annotator_id.clone(),
            aspect: r.aspect,
        });
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawRecord {
    comment_id: String,
    annotator_id: String,
    aspect: String,
    label: serde_json::Value,
    #[serde(default)]
    rationale: Option<String>,
    mode: AnnotationMode,
}

fn parse_record_line(line: &str) -> Result<AnnotationRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let aspect: Aspect = raw
        .aspect
        .parse()
        .map_err(|e: UnknownAspect| e.to_string())?;
    let token = match &raw.label {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(format!("label must be a string, got {other}")),
    };
    let label = validate_label(aspect, &token).map_err(|e| e.to_string())?;
    Ok(AnnotationRecord {
        comment_id: raw.comment_id,
        annotator_id: raw.annotator_id,
        aspect,
        label,
        rationale: raw.rationale,
        mode: raw.mode,
    })
}

/// Reads annotation JSONL from any reader. `path` is only used in errors.
pub fn read_annotations<R: BufRead>(reader: R, path: &str) -> Result<AnnotationDataset, LoadError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| LoadError::Io {
            path: path.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record_line(&line).map_err(|message| LoadError::Parse {
            path: path.to_string(),
            line: line_no,
            message,
        })?;
        records.push((line_no, record));
    }
    let mut seen = HashSet::new();
    for (line_no, r) in &records {
        check_record(r, &mut seen, path, *line_no)?;
    }
    Ok(AnnotationDataset {
        records: records.into_iter().map(|(_, r)| r).collect(),
        comments: Vec::new(),
    })
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationDataset, LoadError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    read_annotations(std::io::BufReader::new(file), &display)
}

/// Generic JSONL reader: one `T` per non-blank line.
pub fn read_jsonl<T, R>(reader: R, path: &str) -> Result<Vec<T>, LoadError>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| LoadError::Io {
            path: path.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| LoadError::Parse {
            path: path.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_jsonl<T: serde::de::DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<Vec<T>, LoadError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    read_jsonl(std::io::BufReader::new(file), &display)
}

/// Comments JSONL; positions must be unique within a review.
pub fn load_comments(path: impl AsRef<Path>) -> Result<Vec<ReviewComment>, LoadError> {
    let path = path.as_ref();
    let comments: Vec<ReviewComment> = load_jsonl(path)?;
    let mut seen = HashSet::new();
    for (i, c) in comments.iter().enumerate() {
        if !seen.insert((c.review_id.as_str(), c.position)) {
            return Err(LoadError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: format!(
                    "position {} repeated within review {:?}",
                    c.position, c.review_id
                ),
            });
        }
    }
    Ok(comments)
}
