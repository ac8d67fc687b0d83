//! Detection and localization scoring: ROC/AUC, mAP, P_D at a fixed false
//! alarm rate, MCC and F1 with per-image or per-database thresholds, and the
//! community-naive similarity baselines.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::localize::BinaryMask;
use crate::similarity::SimilarityMatrix;
use crate::spectral::Decision;

/// Mean of the off-diagonal similarity scores (before any edge threshold).
pub fn mean_similarity(s: &SimilarityMatrix) -> Result<f64> {
    if s.n() < 2 {
        return Err(Error::invalid("mean similarity needs at least 2 patches"));
    }
    let pairs = s.n() * (s.n() - 1) / 2;
    Ok(s.pair_scores().sum::<f64>() / pairs as f64)
}

pub fn min_similarity(s: &SimilarityMatrix) -> Result<f64> {
    if s.n() < 2 {
        return Err(Error::invalid("min similarity needs at least 2 patches"));
    }
    Ok(s.pair_scores().fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(pred: &[bool], truth: &[bool]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::invalid(format!(
                "{} predictions for {} ground-truth labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn from_masks(pred: &BinaryMask, truth: &BinaryMask) -> Result<Self> {
        if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
            return Err(Error::invalid("mask dimensions differ"));
        }
        Self::from_predictions(pred.values(), truth.values())
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let [tp, fp, tn, fn_] = [c.tp, c.fp, c.tn, c.fn_].map(|v| v as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return 0.0;
    }
    (tp * tn - fp * fn_) / factors.iter().product::<f64>().sqrt()
}

pub fn f1(c: &ConfusionCounts) -> f64 {
    let tp = c.tp as f64;
    let precision = if c.tp + c.fp == 0 {
        0.0
    } else {
        tp / (c.tp + c.fp) as f64
    };
    let recall = if c.tp + c.fn_ == 0 {
        0.0
    } else {
        tp / (c.tp + c.fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalizationMetric {
    Mcc,
    F1,
}

impl LocalizationMetric {
    pub fn eval(self, c: &ConfusionCounts) -> f64 {
        match self {
            LocalizationMetric::Mcc => mcc(c),
            LocalizationMetric::F1 => f1(c),
        }
    }
}

/// Partitioning does not say which region is the tampered one, so score both
/// the mask and its complement and keep the better.
pub fn best_over_assignments(
    pred: &BinaryMask,
    truth: &BinaryMask,
    metric: LocalizationMetric,
) -> Result<f64> {
    let direct = metric.eval(&ConfusionCounts::from_masks(pred, truth)?);
    let swapped = metric.eval(&ConfusionCounts::from_masks(&pred.complement(), truth)?);
    Ok(direct.max(swapped))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub is_forged: bool,
    /// Whether a larger score indicates a forgery.
    pub larger_is_forged: bool,
}

impl ScoredSample {
    pub fn new(score: f64, is_forged: bool, larger_is_forged: bool) -> Self {
        Self {
            score,
            is_forged,
            larger_is_forged,
        }
    }

    /// Score oriented so that larger means forged.
    pub fn oriented(&self) -> f64 {
        if self.larger_is_forged {
            self.score
        } else {
            -self.score
        }
    }
}

/// Indices sorted by descending oriented score, stable for ties.
fn ranking(samples: &[ScoredSample]) -> Result<Vec<usize>> {
    if let Some(s) = samples.iter().find(|s| s.score.is_nan()) {
        return Err(Error::invalid(format!("NaN score in sample {s:?}")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .oriented()
            .partial_cmp(&samples[a].oriented())
            .unwrap_or(Ordering::Equal)
    });
    Ok(order)
}

fn class_counts(samples: &[ScoredSample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.is_forged).count();
    (pos, samples.len() - pos)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocCurve {
    /// `(P_FA, P_D)` from `(0, 0)` to `(1, 1)`, one point per distinct score.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// `pfa,pd` CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pfa,pd\n");
        for (pfa, pd) in &self.points {
            out.push_str(&format!("{pfa},{pd}\n"));
        }
        out
    }

    /// Largest P_D among points with `P_FA <= pfa`.
    pub fn pd_at(&self, pfa: f64) -> f64 {
        self.points
            .iter()
            .filter(|(f, _)| *f <= pfa)
            .map(|&(_, d)| d)
            .fold(0.0, f64::max)
    }
}

/// ROC by a descending threshold sweep; tied scores move as one step, so the
/// trapezoid area equals the Mann–Whitney statistic with half credit for ties.
pub fn roc_auc(samples: &[ScoredSample]) -> Result<RocCurve> {
    let (pos, neg) = class_counts(samples);
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC needs both classes ({pos} forged, {neg} unaltered)"
        )));
    }
    let order = ranking(samples)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let level = samples[order[i]].oriented();
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && samples[order[i]].oriented() == level {
            if samples[order[i]].is_forged {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: auc / (pos * neg) as f64,
    })
}

/// Average precision over the descending-score ranking.
pub fn mean_average_precision(samples: &[ScoredSample]) -> Result<f64> {
    let (pos, _) = class_counts(samples);
    if pos == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs a positive".into(),
        ));
    }
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &idx) in ranking(samples)?.iter().enumerate() {
        if samples[idx].is_forged {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / pos as f64)
}

pub fn pd_at_pfa(samples: &[ScoredSample], pfa: f64) -> Result<f64> {
    Ok(roc_auc(samples)?.pd_at(pfa))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    PerImage,
    PerDatabase,
}

/// Per-pixel localization scores for one image with its ground truth; a pixel
/// is predicted forged when its score is at least the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationCase {
    pub scores: Vec<f64>,
    pub truth: Vec<bool>,
}

/// Confusion counts of one case as a function of the threshold.
struct Sweep {
    /// Scores sorted descending.
    sorted: Vec<f64>,
    /// Positives among the first `i` sorted scores.
    positives_prefix: Vec<u64>,
}

impl Sweep {
    fn new(case: &LocalizationCase) -> Result<Self> {
        if case.scores.len() != case.truth.len() {
            return Err(Error::invalid("scores and ground truth differ in length"));
        }
        if case.scores.iter().any(|s| s.is_nan()) {
            return Err(Error::invalid("NaN localization score"));
        }
        let mut pairs: Vec<(f64, bool)> = case
            .scores
            .iter()
            .copied()
            .zip(case.truth.iter().copied())
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut positives_prefix = Vec::with_capacity(pairs.len() + 1);
        positives_prefix.push(0);
        for &(_, t) in &pairs {
            positives_prefix.push(positives_prefix.last().unwrap() + t as u64);
        }
        Ok(Self {
            sorted: pairs.into_iter().map(|(s, _)| s).collect(),
            positives_prefix,
        })
    }

    fn counts(&self, threshold: f64) -> ConfusionCounts {
        let predicted = self.sorted.partition_point(|&s| s >= threshold);
        let total_pos = *self.positives_prefix.last().unwrap();
        let tp = self.positives_prefix[predicted];
        let fp = predicted as u64 - tp;
        let fn_ = total_pos - tp;
        let tn = self.sorted.len() as u64 - predicted as u64 - fn_;
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    /// Distinct scores plus `+inf` (predict nothing), descending.
    fn candidates(&self) -> Vec<f64> {
        let mut c = vec![f64::INFINITY];
        for &s in &self.sorted {
            if *c.last().unwrap() != s {
                c.push(s);
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdOutcome {
    pub mode: ThresholdMode,
    pub metric: LocalizationMetric,
    /// Mean metric over the database at the chosen threshold(s).
    pub mean: f64,
    pub per_image: Vec<f64>,
    /// One threshold per image, or a single shared one.
    pub thresholds: Vec<f64>,
}

fn best_threshold(candidates: &[f64], eval: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (candidates[0], eval(candidates[0]));
    for &c in &candidates[1..] {
        let v = eval(c);
        if v > best.1 {
            best = (c, v);
        }
    }
    best
}

/// Chooses localization thresholds per image or once for the whole database,
/// maximizing the (mean) metric, and reports the metric at those thresholds.
pub fn threshold_modes(
    db: &[LocalizationCase],
    metric: LocalizationMetric,
    mode: ThresholdMode,
) -> Result<ThresholdOutcome> {
    if db.is_empty() {
        return Err(Error::invalid("empty localization database"));
    }
    let sweeps = db.iter().map(Sweep::new).collect::<Result<Vec<_>>>()?;
    let (thresholds, per_image): (Vec<f64>, Vec<f64>) = match mode {
        ThresholdMode::PerImage => sweeps
            .iter()
            .map(|s| best_threshold(&s.candidates(), |t| metric.eval(&s.counts(t))))
            .unzip(),
        ThresholdMode::PerDatabase => {
            let mut all: Vec<f64> = sweeps.iter().flat_map(|s| s.candidates()).collect();
            all.sort_by(|a, b| b.partial_cmp(a).unwrap());
            all.dedup();
            let mean_at = |t: f64| {
                sweeps
                    .iter()
                    .map(|s| metric.eval(&s.counts(t)))
                    .sum::<f64>()
                    / sweeps.len() as f64
            };
            let (t, _) = best_threshold(&all, mean_at);
            (
                vec![t],
                sweeps.iter().map(|s| metric.eval(&s.counts(t))).collect(),
            )
        }
    };
    Ok(ThresholdOutcome {
        mode,
        metric,
        mean: per_image.iter().sum::<f64>() / per_image.len() as f64,
        per_image,
        thresholds,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RuntimeBreakdown {
    pub features: f64,
    pub graph: f64,
    pub community: f64,
    pub total: f64,
}

/// Flat JSON report; absent fields are omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_mode: Option<ThresholdMode>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<RuntimeBreakdown>,
}

impl Report {
    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).expect("serializable report field");
        self.extra.insert(key.to_string(), v);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn samples(pos: &[f64], neg: &[f64]) -> Vec<ScoredSample> {
        pos.iter()
            .map(|&s| ScoredSample::new(s, true, true))
            .chain(neg.iter().map(|&s| ScoredSample::new(s, false, true)))
            .collect()
    }

    /// Mann–Whitney pair counting with half credit for ties.
    fn pair_count_auc(pos: &[f64], neg: &[f64]) -> f64 {
        let mut wins = 0.0;
        for &p in pos {
            for &n in neg {
                wins += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        wins / (pos.len() * neg.len()) as f64
    }

    /// Best detection rate over every threshold whose false-alarm rate fits.
    fn brute_pd(pos: &[f64], neg: &[f64], pfa: f64) -> f64 {
        let mut thresholds: Vec<f64> = pos.iter().chain(neg).copied().collect();
        thresholds.push(f64::INFINITY);
        thresholds
            .iter()
            .filter(|&&t| neg.iter().filter(|&&n| n >= t).count() as f64 / neg.len() as f64 <= pfa)
            .map(|&t| pos.iter().filter(|&&p| p >= t).count() as f64 / pos.len() as f64)
            .fold(0.0, f64::max)
    }

    fn counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    #[test]
    fn baselines() {
        let s =
            SimilarityMatrix::new(3, vec![0.0, 0.9, 0.5, 0.9, 0.0, 0.7, 0.5, 0.7, 0.0]).unwrap();
        assert!((mean_similarity(&s).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(min_similarity(&s).unwrap(), 0.5);
        let one = SimilarityMatrix::from_fn(4, |_, _| 1.0).unwrap();
        assert_eq!(mean_similarity(&one).unwrap(), 1.0);
        assert_eq!(min_similarity(&one).unwrap(), 1.0);
        let pair = SimilarityMatrix::new(2, vec![0.0, 0.42, 0.42, 0.0]).unwrap();
        assert_eq!(mean_similarity(&pair).unwrap(), 0.42);
        assert_eq!(min_similarity(&pair).unwrap(), 0.42);
    }

    #[test]
    fn mcc_examples() {
        assert_eq!(mcc(&counts(5, 0, 5, 0)), 1.0);
        assert_eq!(mcc(&counts(0, 0, 7, 3)), 0.0);
        assert_eq!(mcc(&counts(6, 4, 0, 0)), 0.0);
        assert!((mcc(&counts(3, 1, 5, 1)) - 14.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(&counts(4, 0, 9, 0)), 1.0);
        assert!((f1(&counts(3, 1, 0, 1)) - 0.75).abs() < 1e-12);
        assert_eq!(f1(&counts(0, 2, 3, 1)), 0.0);
    }

    #[test]
    fn auc_examples() {
        let s = samples(&[0.9, 0.8, 0.4], &[0.7, 0.3, 0.1]);
        let roc = roc_auc(&s).unwrap();
        assert!((roc.auc - 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
        // enumerated steps: (0,1/3) (0,2/3) (1/3,2/3) (1/3,1) (2/3,1) (1,1)
        assert!((pd_at_pfa(&s, 0.3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(pd_at_pfa(&s, 0.34).unwrap(), 1.0);
        for pfa in [0.0, 0.1, 0.34, 0.5, 0.7, 1.0] {
            assert_eq!(
                pd_at_pfa(&s, pfa).unwrap(),
                brute_pd(&[0.9, 0.8, 0.4], &[0.7, 0.3, 0.1], pfa)
            );
        }

        assert_eq!(
            roc_auc(&samples(&[3.0, 4.0], &[1.0, 2.0])).unwrap().auc,
            1.0
        );
        let tied = samples(&[0.5, 0.5], &[0.5, 0.5, 0.5]);
        assert_eq!(roc_auc(&tied).unwrap().auc, 0.5);
        assert_eq!(pd_at_pfa(&tied, 0.05).unwrap(), 0.0);
        assert_eq!(pd_at_pfa(&samples(&[3.0], &[1.0]), 0.0).unwrap(), 1.0);
        assert!(matches!(
            roc_auc(&samples(&[1.0], &[])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn polarity_applies_before_ranking() {
        // spectral gap: small statistic means forged
        let s = vec![
            ScoredSample::new(0.1, true, false),
            ScoredSample::new(50.0, false, false),
        ];
        assert_eq!(roc_auc(&s).unwrap().auc, 1.0);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(
            mean_average_precision(&samples(&[0.9, 0.8], &[0.1])).unwrap(),
            1.0
        );
        assert_eq!(
            mean_average_precision(&samples(&[0.2], &[0.9])).unwrap(),
            0.5
        );
        let ap = mean_average_precision(&samples(&[0.9, 0.3], &[0.5])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert!(mean_average_precision(&samples(&[], &[0.3])).is_err());
    }

    #[test]
    fn csv_export() {
        let roc = roc_auc(&samples(&[1.0], &[0.0])).unwrap();
        assert_eq!(roc.to_csv(), "pfa,pd\n0,0\n0,1\n1,1\n");
    }

    fn case(scores: &[f64], truth: &[u8]) -> LocalizationCase {
        LocalizationCase {
            scores: scores.to_vec(),
            truth: truth.iter().map(|&t| t == 1).collect(),
        }
    }

    #[test]
    fn threshold_mode_examples() {
        let single = [case(&[0.9, 0.6, 0.2, 0.1], &[1, 0, 1, 0])];
        let a = threshold_modes(&single, LocalizationMetric::F1, ThresholdMode::PerImage).unwrap();
        let b =
            threshold_modes(&single, LocalizationMetric::F1, ThresholdMode::PerDatabase).unwrap();
        assert_eq!(a.mean, b.mean);

        // image 1 is perfectly split at 0.8, image 2 at 0.3; no shared threshold does both
        let db = [case(&[0.9, 0.5], &[1, 0]), case(&[0.4, 0.2], &[1, 0])];
        let img = threshold_modes(&db, LocalizationMetric::Mcc, ThresholdMode::PerImage).unwrap();
        assert_eq!(img.mean, 1.0);
        assert_eq!(img.thresholds, vec![0.9, 0.4]);
        let dbm =
            threshold_modes(&db, LocalizationMetric::Mcc, ThresholdMode::PerDatabase).unwrap();
        // exhaustive: t=0.9 → (1, 0); t=0.5 → (0, 0); t=0.4 → (0, 1); t=0.2 → (0, 0)
        assert_eq!(dbm.mean, 0.5);
        assert_eq!(dbm.thresholds, vec![0.9]);
        assert!(threshold_modes(&[], LocalizationMetric::F1, ThresholdMode::PerImage).is_err());
    }

    #[test]
    fn best_assignment_uses_complement() {
        let truth = BinaryMask::new(4, 1, vec![true, true, false, false]).unwrap();
        let pred = truth.complement();
        assert_eq!(
            best_over_assignments(&pred, &truth, LocalizationMetric::Mcc).unwrap(),
            1.0
        );
        assert_eq!(
            mcc(&ConfusionCounts::from_masks(&pred, &truth).unwrap()),
            -1.0
        );
    }

    #[test]
    fn report_json_omits_missing() {
        let r = Report {
            method: Some("spectral-gap".into()),
            statistic: Some(1.5),
            decision: Some(Decision::Forged),
            ..Default::default()
        }
        .with("n_patches", 49);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["decision"], "Forged");
        assert_eq!(v["n_patches"], 49);
        assert!(v.get("auc").is_none());
    }

    fn score_sets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        // coarse values so ties are frequent
        let s = (0u8..20).prop_map(|v| v as f64 / 4.0);
        (
            prop::collection::vec(s.clone(), 1..50),
            prop::collection::vec(s, 1..50),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn auc_is_mann_whitney((pos, neg) in score_sets()) {
            let auc = roc_auc(&samples(&pos, &neg)).unwrap().auc;
            prop_assert!((auc - pair_count_auc(&pos, &neg)).abs() < 1e-12);
        }

        #[test]
        fn polarity_flip((pos, neg) in score_sets()) {
            let s = samples(&pos, &neg);
            let flipped: Vec<_> = s.iter().map(|x| ScoredSample { larger_is_forged: false, ..*x }).collect();
            let (a, b) = (roc_auc(&s).unwrap().auc, roc_auc(&flipped).unwrap().auc);
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }

        #[test]
        fn confusion_matches_pixel_counting(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
            let (pred, truth): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let c = ConfusionCounts::from_predictions(&pred, &truth).unwrap();
            let count = |p: bool, t: bool| pred.iter().zip(&truth).filter(|&(&a, &b)| a == p && b == t).count() as f64;
            let (tp, fp, tn, fn_) = (count(true, true), count(true, false), count(false, false), count(false, true));
            let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
            let want_mcc = if den == 0.0 { 0.0 } else { (tp * tn - fp * fn_) / den };
            let want_f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
            prop_assert!((mcc(&c) - want_mcc).abs() < 1e-12);
            prop_assert!((f1(&c) - want_f1).abs() < 1e-12);
        }

        #[test]
        fn per_image_dominates(db in prop::collection::vec(
            prop::collection::vec((0u8..8, any::<bool>()), 1..30), 1..6)) {
            let db: Vec<LocalizationCase> = db
                .into_iter()
                .map(|c| LocalizationCase {
                    scores: c.iter().map(|&(s, _)| s as f64 / 8.0).collect(),
                    truth: c.iter().map(|&(_, t)| t).collect(),
                })
                .collect();
            for metric in [LocalizationMetric::Mcc, LocalizationMetric::F1] {
                let img = threshold_modes(&db, metric, ThresholdMode::PerImage).unwrap();
                let all = threshold_modes(&db, metric, ThresholdMode::PerDatabase).unwrap();
                prop_assert!(img.mean >= all.mean - 1e-12);
            }
        }
    }
}
