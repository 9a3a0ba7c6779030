//! Extraction of labels and rationales from raw model output.

use std::collections::BTreeMap;

use revutil_core::rubric::{ClaimLabel, CLAIM_LABEL_KEY, CLAIM_RATIONALE_KEY};
use revutil_core::{validate_label, Aspect, AspectLabel};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    PartialParse { missing: Vec<String> },
    Failed { reason: String },
}

impl ParseStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ParseStatus::Ok)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedOutput {
    pub labels: BTreeMap<Aspect, AspectLabel>,
    pub rationales: BTreeMap<Aspect, String>,
    pub status: ParseStatus,
}

/// The first JSON object in `raw`, skipping prose and code fences.
pub fn first_json_object(raw: &str) -> Option<Map<String, Value>> {
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

/// Label text as written by a model: `"3"`, `3`, `"X"`, or a descriptor
/// such as `"3 - Somewhat Actionable"`.
fn label_token(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => {
            let s = s.trim();
            let head: String = s
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            let rest = &s[head.len()..];
            let lead = rest.is_empty() || !rest.starts_with(|c: char| c.is_ascii_alphanumeric());
            Some(if lead && !head.is_empty() {
                head
            } else {
                s.to_string()
            })
        }
        _ => None,
    }
}

fn parse_label(aspect: Aspect, v: &Value) -> Option<AspectLabel> {
    validate_label(aspect, &label_token(v)?).ok()
}

/// A reply consisting of nothing but a label, e.g. `4` or `"X".`
fn bare_label(aspect: Aspect, raw: &str) -> Option<AspectLabel> {
    let t = raw
        .trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c == '`')
        .trim();
    validate_label(aspect, t).ok()
}

/// Reads `schema` keys for `aspects` out of the first JSON object of `raw`.
///
/// Missing or invalid keys give `PartialParse` listing them; no object gives
/// `Failed`. A single-aspect reply that is just a label is accepted.
pub fn parse_scored_output(raw: &str, schema: &[String], aspects: &[Aspect]) -> ParsedOutput {
    let mut labels = BTreeMap::new();
    let mut rationales = BTreeMap::new();
    let Some(obj) = first_json_object(raw) else {
        if let ([aspect], Some(label)) =
            (aspects, aspects.first().and_then(|&a| bare_label(a, raw)))
        {
            let missing: Vec<String> = schema
                .iter()
                .filter(|k| **k != aspect.label_key())
                .cloned()
                .collect();
            labels.insert(*aspect, label);
            let status = if missing.is_empty() {
                ParseStatus::Ok
            } else {
                ParseStatus::PartialParse { missing }
            };
            return ParsedOutput {
                labels,
                rationales,
                status,
            };
        }
        return ParsedOutput {
            labels,
            rationales,
            status: ParseStatus::Failed {
                reason: "no JSON object in output".into(),
            },
        };
    };
    let mut missing = Vec::new();
    for &aspect in aspects {
        let lk = aspect.label_key();
        if schema.contains(&lk) {
            match obj.get(&lk).and_then(|v| parse_label(aspect, v)) {
                Some(l) => {
                    labels.insert(aspect, l);
                }
                None => missing.push(lk),
            }
        }
        let rk = aspect.rationale_key();
        if schema.contains(&rk) {
            match obj.get(&rk).and_then(Value::as_str) {
                Some(r) => {
                    rationales.insert(aspect, r.to_string());
                }
                None => missing.push(rk),
            }
        }
    }
    let status = if missing.is_empty() {
        ParseStatus::Ok
    } else {
        ParseStatus::PartialParse { missing }
    };
    ParsedOutput {
        labels,
        rationales,
        status,
    }
}

/// Reads the claim-detection answer. Falls back to plain text: a reply
/// mentioning "no claim" is No Claim, one mentioning "claim" otherwise is
/// Claim.
pub fn parse_claim_output(raw: &str) -> Option<(ClaimLabel, Option<String>)> {
    if let Some(obj) = first_json_object(raw) {
        let label = obj
            .get(CLAIM_LABEL_KEY)
            .and_then(Value::as_str)
            .and_then(ClaimLabel::parse)?;
        let rationale = obj
            .get(CLAIM_RATIONALE_KEY)
            .and_then(Value::as_str)
            .map(str::to_string);
        return Some((label, rationale));
    }
    if let Some(l) = ClaimLabel::parse(raw) {
        return Some((l, None));
    }
    let lower = raw.to_lowercase();
    if lower.contains("no claim") {
        Some((ClaimLabel::NoClaim, None))
    } else if lower.contains("claim") {
        Some((ClaimLabel::Claim, None))
    } else {
        None
    }
}
