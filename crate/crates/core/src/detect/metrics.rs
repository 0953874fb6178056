//! Pixel-level accuracy metrics and threshold-sweep curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ChangeMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub oa: f64,
    pub kappa: f64,
    pub f1: f64,
    /// Area under the ROC curve; absent when either class is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aur: Option<f64>,
    /// Area under the precision-recall curve; absent without positives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aup: Option<f64>,
}

impl EvalReport {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion counts and the derived OA, kappa and F1.
pub fn confusion_report(cm: &ChangeMap, truth: &ChangeMap) -> Result<EvalReport> {
    if cm.height != truth.height || cm.width != truth.width {
        return Err(Error::dims(format!(
            "change map is {}x{}, truth is {}x{}",
            cm.height, cm.width, truth.height, truth.width
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &t) in cm.labels.iter().zip(&truth.labels) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let n = (tp + fp + tn + fn_) as f64;
    let oa = (tp + tn) as f64 / n;
    let pe =
        ((tp + fp) as f64 * (tp + fn_) as f64 + (fn_ + tn) as f64 * (fp + tn) as f64) / (n * n);
    let kappa = if pe == 1.0 {
        1.0
    } else {
        (oa - pe) / (1.0 - pe)
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EvalReport {
        tp,
        fp,
        tn,
        fn_,
        oa,
        kappa,
        f1,
        aur: None,
        aup: None,
    })
}

/// One operating point of the descending threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Sweeps every distinct score from high to low, labeling `score >= threshold`
/// as changed. Tied scores enter together.
pub fn threshold_sweep(scores: &[f64], truth: &[u8]) -> Result<Vec<CurvePoint>> {
    if scores.len() != truth.len() {
        return Err(Error::dims("scores and truth differ in length"));
    }
    let pos = truth.iter().filter(|&&t| t == 1).count() as f64;
    let neg = truth.len() as f64 - pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push(CurvePoint {
            threshold,
            fpr: if neg > 0.0 { fp / neg } else { 0.0 },
            tpr: if pos > 0.0 { tp / pos } else { 0.0 },
            precision: tp / (tp + fp),
            recall: if pos > 0.0 { tp / pos } else { 0.0 },
        });
    }
    Ok(points)
}

/// Trapezoidal area under TPR versus FPR, starting from the origin.
pub fn area_under_roc(points: &[CurvePoint]) -> f64 {
    let mut area = 0.0;
    let (mut x0, mut y0) = (0.0, 0.0);
    for p in points {
        area += (p.fpr - x0) * (p.tpr + y0) * 0.5;
        x0 = p.fpr;
        y0 = p.tpr;
    }
    area
}

/// Trapezoidal area under precision versus recall; the curve is extended to
/// recall 0 at the first precision value.
pub fn area_under_pr(points: &[CurvePoint]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut area = 0.0;
    let (mut x0, mut y0) = (0.0, first.precision);
    for p in points {
        area += (p.recall - x0) * (p.precision + y0) * 0.5;
        x0 = p.recall;
        y0 = p.precision;
    }
    area
}

/// `threshold,fpr,tpr,precision,recall`.
pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("threshold,fpr,tpr,precision,recall\n");
    for p in points {
        writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e}",
            p.threshold, p.fpr, p.tpr, p.precision, p.recall
        )
        .unwrap();
    }
    s
}

/// Full report: confusion metrics of `cm` plus AUR/AUP of `scores`.
pub fn evaluate(cm: &ChangeMap, truth: &ChangeMap, scores: &[f64]) -> Result<EvalReport> {
    let mut report = confusion_report(cm, truth)?;
    let points = threshold_sweep(scores, &truth.labels)?;
    let pos = report.tp + report.fn_;
    let neg = report.fp + report.tn;
    if pos > 0 {
        report.aup = Some(area_under_pr(&points));
        if neg > 0 {
            report.aur = Some(area_under_roc(&points));
        }
    }
    Ok(report)
}
