//! Dataset-level reports built from the metrics: inter-annotator agreement,
//! model-vs-human agreement, human-vs-LLM review comparison, rationale
//! similarity and aspect correlations.
//!
//! Every report is `Serialize` for JSON output and has a `to_text` method
//! producing an aligned table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{
    binary_f1, krippendorff_alpha, pearson_r, quadratic_weighted_kappa, rouge_l_text, spearman_rho,
    welch_t_test, Definedness, DegenerateReason, Distance, MetricError, MetricValue, RatingVector,
};
use crate::model::{classify_agreement, AgreementClass, AnnotationDataset, Aspect, AspectLabel};

/// Labels keyed by comment id, then aspect.
pub type LabelTable = BTreeMap<String, BTreeMap<Aspect, AspectLabel>>;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{aspect}: comments without exactly three annotations: {}", comment_ids.join(", "))]
    IncompleteTriples {
        aspect: Aspect,
        comment_ids: Vec<String>,
    },
    #[error("model labels share no comments with the human annotations")]
    NoOverlap,
    #[error("{0} source has no scored comments")]
    EmptySource(&'static str),
    #[error("generated and reference rationales share no items")]
    NoSharedItems,
    #[error("{context}: {source}")]
    Metric {
        context: String,
        #[source]
        source: MetricError,
    },
}

fn metric_err(context: impl Into<String>) -> impl FnOnce(MetricError) -> AnalysisError {
    let context = context.into();
    move |source| AnalysisError::Metric { context, source }
}

/// Which comments enter a report, by their agreement class per aspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    FullMajority,
    Full,
    Majority,
    Low,
}

impl Subset {
    pub fn admits(self, class: AgreementClass) -> bool {
        match (self, class) {
            (Subset::All, _) => true,
            (Subset::FullMajority, c) => c.has_majority(),
            (Subset::Full, AgreementClass::Full(_)) => true,
            (Subset::Majority, AgreementClass::Majority(_)) => true,
            (Subset::Low, AgreementClass::Low) => true,
            _ => false,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subset::All => "All",
            Subset::FullMajority => "Full+Majority",
            Subset::Full => "Full",
            Subset::Majority => "Majority",
            Subset::Low => "Low",
        }
    }
}

/// Positive class for claim-detection F1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimPositive {
    #[default]
    NoClaim,
    Claim,
}

impl ClaimPositive {
    fn is_positive(self, label: AspectLabel) -> bool {
        match self {
            ClaimPositive::NoClaim => label.is_no_claim(),
            ClaimPositive::Claim => !label.is_no_claim(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementOptions {
    pub alpha_distance: Distance,
    pub f1_positive: ClaimPositive,
}

/// A pairwise-averaged statistic with its per-pair values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseStat {
    /// `None` when every pair was degenerate.
    pub mean: Option<f64>,
    /// Per pair in (0,1), (0,2), (1,2) slot order; `None` for degenerate pairs.
    pub pairs: Vec<Option<f64>>,
    pub skipped: usize,
}

impl PairwiseStat {
    fn from_values(values: Vec<MetricValue>) -> Self {
        let pairs: Vec<Option<f64>> = values.iter().map(MetricValue::get).collect();
        let defined: Vec<f64> = pairs.iter().flatten().copied().collect();
        let mean =
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        Self {
            mean,
            skipped: pairs.len() - defined.len(),
            pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AspectAgreement {
    pub aspect: Aspect,
    pub subset: Subset,
    pub n_items: usize,
    pub kappa: PairwiseStat,
    pub spearman: PairwiseStat,
    pub alpha: Option<f64>,
    /// Claim-detection F1 (Verifiability only).
    pub f1: Option<PairwiseStat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubsetCounts {
    pub all: usize,
    pub full: usize,
    pub majority: usize,
    pub low: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub options: AgreementOptions,
    pub counts: BTreeMap<Aspect, SubsetCounts>,
    pub rows: Vec<AspectAgreement>,
}

impl AgreementReport {
    pub fn get(&self, aspect: Aspect, subset: Subset) -> Option<&AspectAgreement> {
        self.rows
            .iter()
            .find(|r| r.aspect == aspect && r.subset == subset)
    }
}

/// One comment's three labels, in annotator-id order.
struct Triple {
    labels: [AspectLabel; 3],
    class: AgreementClass,
}

fn triples(dataset: &AnnotationDataset, aspect: Aspect) -> Result<Vec<Triple>, AnalysisError> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (comment, by_annotator) in dataset.labels_by_comment(aspect) {
        let labels: Vec<AspectLabel> = by_annotator.into_values().collect();
        match <[AspectLabel; 3]>::try_from(labels) {
            Ok(labels) => {
                let class = classify_agreement(&labels).expect("three labels");
                out.push(Triple { labels, class });
            }
            Err(_) => bad.push(comment),
        }
    }
    if !bad.is_empty() {
        return Err(AnalysisError::IncompleteTriples {
            aspect,
            comment_ids: bad,
        });
    }
    Ok(out)
}

/// Quadratic-weighted kappa and Spearman rho between two label vectors,
/// dropping items where either side is No Claim. Fewer than two remaining
/// items give a degenerate value.
fn ordinal_pair(
    a: &[AspectLabel],
    b: &[AspectLabel],
) -> Result<(MetricValue, MetricValue), MetricError> {
    let (x, y): (Vec<u8>, Vec<u8>) = a
        .iter()
        .zip(b)
        .filter_map(|(p, q)| Some((p.ordinal()?, q.ordinal()?)))
        .unzip();
    if x.len() < 2 {
        let d = MetricValue::degenerate(DegenerateReason::TooFewItems, x.len());
        return Ok((d, d));
    }
    let kappa = quadratic_weighted_kappa(
        &RatingVector::new(x.clone())?,
        &RatingVector::new(y.clone())?,
    )?;
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    Ok((kappa, spearman_rho(&xf, &yf)?))
}

fn claim_f1(
    a: &[AspectLabel],
    b: &[AspectLabel],
    positive: ClaimPositive,
) -> Result<MetricValue, MetricError> {
    let pa: Vec<bool> = a.iter().map(|&l| positive.is_positive(l)).collect();
    let pb: Vec<bool> = b.iter().map(|&l| positive.is_positive(l)).collect();
    binary_f1(&pa, &pb, &true)
}

fn aspect_agreement(
    aspect: Aspect,
    subset: Subset,
    items: &[&Triple],
    options: AgreementOptions,
) -> Result<AspectAgreement, AnalysisError> {
    let ctx = format!("{aspect} / {}", subset.name());
    let raters: Vec<Vec<AspectLabel>> = (0..3)
        .map(|r| items.iter().map(|t| t.labels[r]).collect())
        .collect();

    let f1 = if aspect.allows_no_claim() {
        let values = pairwise_values(&raters, |a, b| claim_f1(a, b, options.f1_positive))
            .map_err(metric_err(&ctx))?;
        Some(PairwiseStat::from_values(values))
    } else {
        None
    };

    let pairs = pairwise_values(&raters, |a, b| ordinal_pair(a, b)).map_err(metric_err(&ctx))?;
    let kappa = PairwiseStat::from_values(pairs.iter().map(|p| p.0).collect());
    let spearman = PairwiseStat::from_values(pairs.iter().map(|p| p.1).collect());

    let matrix: Vec<Vec<Option<f64>>> = items
        .iter()
        .map(|t| {
            t.labels
                .iter()
                .map(|l| l.ordinal().map(f64::from))
                .collect()
        })
        .collect();
    let alpha = match krippendorff_alpha(&matrix, options.alpha_distance) {
        Ok(v) => v.get(),
        Err(MetricError::NoPairableValues) => None,
        Err(e) => return Err(metric_err(ctx)(e)),
    };

    Ok(AspectAgreement {
        aspect,
        subset,
        n_items: items.len(),
        kappa,
        spearman,
        alpha,
        f1,
    })
}

/// Evaluates `f` on every unordered rater pair, in (0,1), (0,2), (1,2) order.
fn pairwise_values<T, R, F>(raters: &[T], mut f: F) -> Result<Vec<R>, MetricError>
where
    F: FnMut(&T, &T) -> Result<R, MetricError>,
{
    let mut out = Vec::new();
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            out.push(f(&raters[i], &raters[j])?);
        }
    }
    Ok(out)
}

/// Inter-annotator agreement per aspect on the given subsets.
///
/// Each comment must carry exactly three labels per aspect; annotators are
/// paired by sorted annotator id within each comment. For Verifiability, F1
/// is computed on the claim/no-claim split first, then items that either
/// annotator of a pair labelled No Claim are dropped from that pair's kappa
/// and rho; alpha treats No Claim as a missing rating.
pub fn agreement_report(
    dataset: &AnnotationDataset,
    subsets: &[Subset],
    options: AgreementOptions,
) -> Result<AgreementReport, AnalysisError> {
    let mut rows = Vec::new();
    let mut counts = BTreeMap::new();
    for aspect in Aspect::ALL {
        let all = triples(dataset, aspect)?;
        if all.is_empty() {
            continue;
        }
        let mut c = SubsetCounts {
            all: all.len(),
            full: 0,
            majority: 0,
            low: 0,
        };
        for t in &all {
            match t.class {
                AgreementClass::Full(_) => c.full += 1,
                AgreementClass::Majority(_) => c.majority += 1,
                AgreementClass::Low => c.low += 1,
            }
        }
        counts.insert(aspect, c);
        for &subset in subsets {
            let items: Vec<&Triple> = all.iter().filter(|t| subset.admits(t.class)).collect();
            rows.push(aspect_agreement(aspect, subset, &items, options)?);
        }
    }
    Ok(AgreementReport {
        options,
        counts,
        rows,
    })
}

/// Majority labels per comment and aspect for comments in `subset`
/// (comments without a majority are always left out).
pub fn majority_labels(dataset: &AnnotationDataset, subset: Subset) -> LabelTable {
    let mut out = LabelTable::new();
    for aspect in Aspect::ALL {
        for (comment, by_annotator) in dataset.labels_by_comment(aspect) {
            let labels: Vec<AspectLabel> = by_annotator.into_values().collect();
            let Ok(class) = classify_agreement(&labels) else {
                continue;
            };
            if let (true, Some(label)) = (subset.admits(class), class.majority_label()) {
                out.entry(comment).or_default().insert(aspect, label);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorAgreement {
    pub annotator: String,
    pub n_items: usize,
    pub kappa: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelAspectAgreement {
    pub aspect: Aspect,
    /// Items in the subset that the model labelled.
    pub n_items: usize,
    /// Items in the subset the model has no label for.
    pub missing: usize,
    /// Against the majority label.
    pub kappa_majority: Option<f64>,
    pub f1_majority: Option<f64>,
    pub per_annotator: Vec<AnnotatorAgreement>,
    /// Mean of the defined per-annotator kappas.
    pub kappa_avg: Option<f64>,
    pub f1_avg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelAgreementReport {
    pub subset: Subset,
    pub rows: Vec<ModelAspectAgreement>,
}

impl ModelAgreementReport {
    pub fn get(&self, aspect: Aspect) -> Option<&ModelAspectAgreement> {
        self.rows.iter().find(|r| r.aspect == aspect)
    }
}

fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn model_vs(
    model: &[AspectLabel],
    gold: &[AspectLabel],
    aspect: Aspect,
    positive: ClaimPositive,
) -> Result<(Option<f64>, Option<f64>), MetricError> {
    let (kappa, _) = ordinal_pair(model, gold)?;
    let f1 = if aspect.allows_no_claim() {
        claim_f1(model, gold, positive)?.get()
    } else {
        None
    };
    Ok((kappa.get(), f1))
}

/// Agreement of model labels with each human annotator and with the
/// majority label, on comments of `subset`.
///
/// Per-annotator columns use the global annotator ids. Verifiability kappa
/// drops items where either side is No Claim, after F1 on the full set.
pub fn model_vs_human_report(
    model: &LabelTable,
    human: &AnnotationDataset,
    subset: Subset,
    positive: ClaimPositive,
) -> Result<ModelAgreementReport, AnalysisError> {
    let mut rows = Vec::new();
    let mut any_overlap = false;
    for aspect in Aspect::ALL {
        let by_comment = human.labels_by_comment(aspect);
        if by_comment.is_empty() {
            continue;
        }
        let mut annotators: BTreeSet<&str> = BTreeSet::new();
        let mut in_subset = Vec::new();
        for (comment, labels) in &by_comment {
            let l: Vec<AspectLabel> = labels.values().copied().collect();
            let class = classify_agreement(&l).ok();
            let admitted = match class {
                Some(c) => subset.admits(c),
                None => subset == Subset::All,
            };
            if admitted {
                annotators.extend(labels.keys().map(String::as_str));
                in_subset.push((comment, labels, class));
            }
        }
        let labelled: Vec<_> = in_subset
            .iter()
            .filter_map(|(c, labels, class)| {
                Some((model.get(*c)?.get(&aspect).copied()?, *labels, *class))
            })
            .collect();
        let missing = in_subset.len() - labelled.len();
        any_overlap |= !labelled.is_empty();
        let ctx = format!("model vs human / {aspect}");

        let (pm, pg): (Vec<_>, Vec<_>) = labelled
            .iter()
            .filter_map(|(m, _, class)| Some((*m, class.and_then(|c| c.majority_label())?)))
            .unzip();
        let (kappa_majority, f1_majority) = if pm.is_empty() {
            (None, None)
        } else {
            model_vs(&pm, &pg, aspect, positive).map_err(metric_err(&ctx))?
        };

        let mut per_annotator = Vec::new();
        for ann in annotators {
            let (m, g): (Vec<_>, Vec<_>) = labelled
                .iter()
                .filter_map(|(m, labels, _)| Some((*m, *labels.get(ann)?)))
                .unzip();
            let (kappa, f1) = if m.is_empty() {
                (None, None)
            } else {
                model_vs(&m, &g, aspect, positive).map_err(metric_err(&ctx))?
            };
            per_annotator.push(AnnotatorAgreement {
                annotator: ann.to_string(),
                n_items: m.len(),
                kappa,
                f1,
            });
        }
        let kappa_avg = mean_defined(per_annotator.iter().map(|a| a.kappa));
        let f1_avg = if aspect.allows_no_claim() {
            mean_defined(per_annotator.iter().map(|a| a.f1))
        } else {
            None
        };
        rows.push(ModelAspectAgreement {
            aspect,
            n_items: labelled.len(),
            missing,
            kappa_majority,
            f1_majority,
            per_annotator,
            kappa_avg,
            f1_avg,
        });
    }
    if !any_overlap {
        return Err(AnalysisError::NoOverlap);
    }
    Ok(ModelAgreementReport { subset, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
}

impl SourceStats {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { n, mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceComparison {
    pub aspect: Aspect,
    pub human: SourceStats,
    pub llm: SourceStats,
    pub t: f64,
    pub dof: f64,
    pub p_value: f64,
    pub definedness: Definedness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<SourceComparison>,
}

impl ComparisonReport {
    pub fn get(&self, aspect: Aspect) -> Option<&SourceComparison> {
        self.rows.iter().find(|r| r.aspect == aspect)
    }
}

fn scores(table: &LabelTable, aspect: Aspect) -> Vec<f64> {
    table
        .values()
        .filter_map(|m| m.get(&aspect)?.ordinal())
        .map(f64::from)
        .collect()
}

/// Per-aspect mean and sample std of the scores of two review sources and
/// Welch's two-tailed p-value; No Claim labels are left out.
pub fn compare_review_sources(
    human: &LabelTable,
    llm: &LabelTable,
) -> Result<ComparisonReport, AnalysisError> {
    if human.is_empty() {
        return Err(AnalysisError::EmptySource("human"));
    }
    if llm.is_empty() {
        return Err(AnalysisError::EmptySource("llm"));
    }
    let mut rows = Vec::new();
    for aspect in Aspect::ALL {
        let (h, l) = (scores(human, aspect), scores(llm, aspect));
        if h.is_empty() && l.is_empty() {
            continue;
        }
        let w = welch_t_test(&h, &l).map_err(metric_err(format!("welch / {aspect}")))?;
        rows.push(SourceComparison {
            aspect,
            human: SourceStats::of(&h),
            llm: SourceStats::of(&l),
            t: w.t,
            dof: w.dof,
            p_value: w.p_two_tailed,
            definedness: w.definedness,
        });
    }
    Ok(ComparisonReport { rows })
}

/// A label with its rationale, for one comment and aspect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleItem {
    pub comment_id: String,
    pub aspect: Aspect,
    pub label: AspectLabel,
    pub rationale: String,
}

/// Within one score point of the reference; No Claim only matches No Claim.
pub fn within_one(predicted: AspectLabel, reference: AspectLabel) -> bool {
    match (predicted.ordinal(), reference.ordinal()) {
        (Some(p), Some(r)) => p.abs_diff(r) <= 1,
        (None, None) => true,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeBucket {
    pub count: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl RougeBucket {
    fn of(scores: &[crate::metrics::RougeScore]) -> Self {
        let n = scores.len();
        let avg = |f: fn(&crate::metrics::RougeScore) -> f64| {
            (n > 0).then(|| scores.iter().map(f).sum::<f64>() / n as f64)
        };
        Self {
            count: n,
            precision: avg(|s| s.precision),
            recall: avg(|s| s.recall),
            f1: avg(|s| s.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AspectRationaleSimilarity {
    pub aspect: Aspect,
    pub correct: RougeBucket,
    pub wrong: RougeBucket,
    /// Shared items skipped because a rationale was empty.
    pub skipped_empty: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationaleSimilarityReport {
    pub rows: Vec<AspectRationaleSimilarity>,
}

impl RationaleSimilarityReport {
    pub fn get(&self, aspect: Aspect) -> Option<&AspectRationaleSimilarity> {
        self.rows.iter().find(|r| r.aspect == aspect)
    }
}

/// Rouge-L between generated and reference rationales, split by whether the
/// generated label is within one point of the reference label.
pub fn rationale_similarity_report(
    generated: &[RationaleItem],
    reference: &[RationaleItem],
) -> Result<RationaleSimilarityReport, AnalysisError> {
    let refs: BTreeMap<(&str, Aspect), &RationaleItem> = reference
        .iter()
        .map(|r| ((r.comment_id.as_str(), r.aspect), r))
        .collect();
    let mut per_aspect: BTreeMap<Aspect, (Vec<_>, Vec<_>, usize)> = BTreeMap::new();
    let mut shared = 0;
    for g in generated {
        let Some(r) = refs.get(&(g.comment_id.as_str(), g.aspect)) else {
            continue;
        };
        shared += 1;
        let entry = per_aspect.entry(g.aspect).or_default();
        match rouge_l_text(&g.rationale, &r.rationale) {
            Ok(score) if within_one(g.label, r.label) => entry.0.push(score),
            Ok(score) => entry.1.push(score),
            Err(_) => entry.2 += 1,
        }
    }
    if shared == 0 {
        return Err(AnalysisError::NoSharedItems);
    }
    let rows = per_aspect
        .into_iter()
        .map(
            |(aspect, (c, w, skipped_empty))| AspectRationaleSimilarity {
                aspect,
                correct: RougeBucket::of(&c),
                wrong: RougeBucket::of(&w),
                skipped_empty,
            },
        )
        .collect();
    Ok(RationaleSimilarityReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationCell {
    pub r: Option<f64>,
    pub n_items: usize,
    pub degenerate: Option<DegenerateReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub aspects: Vec<Aspect>,
    pub cells: Vec<Vec<CorrelationCell>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: Aspect, b: Aspect) -> Option<&CorrelationCell> {
        let i = self.aspects.iter().position(|&x| x == a)?;
        let j = self.aspects.iter().position(|&x| x == b)?;
        Some(&self.cells[i][j])
    }
}

/// Pearson correlation between every pair of aspects over comments with
/// ordinal labels for both (No Claim items drop out pairwise).
pub fn aspect_correlation_matrix(labels: &LabelTable) -> Result<CorrelationMatrix, AnalysisError> {
    let aspects = Aspect::ALL.to_vec();
    let mut cells = vec![
        vec![
            CorrelationCell {
                r: None,
                n_items: 0,
                degenerate: None
            };
            4
        ];
        4
    ];
    for (i, &a) in aspects.iter().enumerate() {
        for (j, &b) in aspects.iter().enumerate().skip(i) {
            let (x, y): (Vec<f64>, Vec<f64>) = labels
                .values()
                .filter_map(|m| {
                    Some((
                        f64::from(m.get(&a)?.ordinal()?),
                        f64::from(m.get(&b)?.ordinal()?),
                    ))
                })
                .unzip();
            let cell = if x.len() < 2 {
                CorrelationCell {
                    r: None,
                    n_items: x.len(),
                    degenerate: Some(DegenerateReason::TooFewItems),
                }
            } else if i == j {
                CorrelationCell {
                    r: Some(1.0),
                    n_items: x.len(),
                    degenerate: None,
                }
            } else {
                let v = pearson_r(&x, &y).map_err(metric_err(format!("pearson / {a} x {b}")))?;
                CorrelationCell {
                    r: v.get(),
                    n_items: v.n_items,
                    degenerate: match v.definedness {
                        Definedness::Degenerate(reason) => Some(reason),
                        Definedness::Defined => None,
                    },
                }
            };
            cells[i][j] = cell;
            cells[j][i] = cell;
        }
    }
    Ok(CorrelationMatrix { aspects, cells })
}

fn f3(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"))
}

fn f2(v: f64) -> String {
    format!("{v:.2}")
}

/// Left-aligns the first column and right-aligns the rest.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = widths[i] - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

impl AgreementReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.aspect.display_name().to_string(),
                    r.subset.name().to_string(),
                    r.n_items.to_string(),
                    f3(r.kappa.mean),
                    f3(r.spearman.mean),
                    f3(r.alpha),
                    r.f1.as_ref()
                        .map_or_else(|| "-".to_string(), |f| f3(f.mean)),
                ]
            })
            .collect();
        table(
            &["Aspect", "Subset", "n", "kappa2", "rho", "alpha", "F1"],
            &rows,
        )
    }
}

impl ModelAgreementReport {
    pub fn to_text(&self) -> String {
        let annotators: BTreeSet<&str> = self
            .rows
            .iter()
            .flat_map(|r| r.per_annotator.iter().map(|a| a.annotator.as_str()))
            .collect();
        let mut header = vec![
            "Aspect".to_string(),
            "n".into(),
            "missing".into(),
            "kappa2".into(),
        ];
        header.extend(annotators.iter().map(|a| format!("kappa2_{a}")));
        header.push("kappa2_avg".into());
        header.push("F1".into());
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.aspect.display_name().to_string(),
                    r.n_items.to_string(),
                    r.missing.to_string(),
                    f3(r.kappa_majority),
                ];
                for a in &annotators {
                    let k = r
                        .per_annotator
                        .iter()
                        .find(|x| x.annotator == *a)
                        .and_then(|x| x.kappa);
                    row.push(f3(k));
                }
                row.push(f3(r.kappa_avg));
                row.push(if r.aspect.allows_no_claim() {
                    f3(r.f1_majority)
                } else {
                    "-".into()
                });
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        format!("Subset: {}\n{}", self.subset.name(), table(&header, &rows))
    }
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.aspect.display_name().to_string(),
                    format!("{} ± {}", f2(r.human.mean), f2(r.human.std)),
                    format!("{} ± {}", f2(r.llm.mean), f2(r.llm.std)),
                    format!("{:.3}", r.p_value),
                ]
            })
            .collect();
        table(&["Aspect", "Human", "LLM", "p"], &rows)
    }
}

impl RationaleSimilarityReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.aspect.display_name().to_string(),
                    r.correct.count.to_string(),
                    f3(r.correct.f1),
                    r.wrong.count.to_string(),
                    f3(r.wrong.f1),
                ]
            })
            .collect();
        table(&["Aspect", "n_C", "R_C", "n_W", "R_W"], &rows)
    }
}

impl CorrelationMatrix {
    pub fn to_text(&self) -> String {
        let short = |a: Aspect| match a {
            Aspect::Actionability => "A",
            Aspect::GroundingSpecificity => "G&S",
            Aspect::Verifiability => "V",
            Aspect::Helpfulness => "H",
        };
        let mut header = vec![""];
        header.extend(self.aspects.iter().map(|&a| short(a)));
        let rows: Vec<Vec<String>> = self
            .aspects
            .iter()
            .zip(&self.cells)
            .map(|(&a, row)| {
                let mut r = vec![short(a).to_string()];
                r.extend(row.iter().map(|c| f3(c.r)));
                r
            })
            .collect();
        table(&header, &rows)
    }
}
