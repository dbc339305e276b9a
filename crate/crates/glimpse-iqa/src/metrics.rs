//! Correlation metrics and the evaluation protocol.
//!
//! Evaluation is deterministic: the initial fixation is the image center
//! and every subsequent fixation is the predicted mean, no sampling.
//! Degenerate inputs (constant prediction vectors) yield an explicit
//! undefined value rather than a silent zero, since a constant predictor
//! usually means training collapsed.

use crate::data::PreparedSample;
use crate::error::Error;
use crate::imgproc::NormalizedLocation;
use crate::model::{forward_episode, EpisodeMode, ModelParams};
use crate::parallel;
use crate::Result;

/// Average ranks (1-based); ties share the mean of their rank range.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average 1-based rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// Pearson linear correlation; `None` when either vector is constant.
pub fn lcc(pred: &[f64], truth: &[f64]) -> Option<f64> {
    assert_eq!(pred.len(), truth.len(), "length mismatch");
    assert!(pred.len() >= 2, "need at least two points");
    pearson(pred, truth)
}

/// Spearman rank-order correlation with average ranks for ties; `None`
/// when either vector is constant.
pub fn srocc(pred: &[f64], truth: &[f64]) -> Option<f64> {
    assert_eq!(pred.len(), truth.len(), "length mismatch");
    assert!(pred.len() >= 2, "need at least two points");
    pearson(&average_ranks(pred), &average_ranks(truth))
}

/// Evaluation summary for one split.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub srocc: Option<f64>,
    pub lcc: Option<f64>,
    pub accuracy: f64,
    /// Per distortion type: (class name, SROCC over that type's samples).
    pub per_type_srocc: Vec<(String, Option<f64>)>,
    /// confusion[true][pred] counts.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
}

impl MetricReport {
    /// Builds the report from per-image (predicted score, predicted class)
    /// against (true score, true class).
    pub fn from_predictions(
        predictions: &[(f64, usize)],
        truths: &[(f64, usize)],
        class_names: &[String],
    ) -> Self {
        assert_eq!(predictions.len(), truths.len());
        let k = class_names.len();
        let mut confusion = vec![vec![0usize; k]; k];
        let mut correct = 0usize;
        for ((_, pc), (_, tc)) in predictions.iter().zip(truths) {
            confusion[*tc][*pc] += 1;
            if pc == tc {
                correct += 1;
            }
        }
        let pred_scores: Vec<f64> = predictions.iter().map(|p| p.0).collect();
        let true_scores: Vec<f64> = truths.iter().map(|t| t.0).collect();
        let mut per_type_srocc = Vec::with_capacity(k);
        for (c, name) in class_names.iter().enumerate() {
            let idx: Vec<usize> =
                (0..truths.len()).filter(|&i| truths[i].1 == c).collect();
            let value = if idx.len() >= 2 {
                let p: Vec<f64> = idx.iter().map(|&i| pred_scores[i]).collect();
                let t: Vec<f64> = idx.iter().map(|&i| true_scores[i]).collect();
                srocc(&p, &t)
            } else {
                None
            };
            per_type_srocc.push((name.clone(), value));
        }
        MetricReport {
            srocc: srocc(&pred_scores, &true_scores),
            lcc: lcc(&pred_scores, &true_scores),
            accuracy: correct as f64 / predictions.len().max(1) as f64,
            per_type_srocc,
            confusion,
            n: predictions.len(),
        }
    }

    fn fmt_metric(v: Option<f64>) -> String {
        match v {
            Some(x) => format!("{x:.4}"),
            None => "undefined".into(),
        }
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("samples: {}\n", self.n));
        out.push_str(&format!("srocc: {}\n", Self::fmt_metric(self.srocc)));
        out.push_str(&format!("lcc: {}\n", Self::fmt_metric(self.lcc)));
        out.push_str(&format!("classification accuracy: {:.4}\n", self.accuracy));
        out.push_str("per-type srocc:\n");
        for (name, v) in &self.per_type_srocc {
            out.push_str(&format!("  {name}: {}\n", Self::fmt_metric(*v)));
        }
        out
    }

    /// Flat CSV of the scalar metrics and the per-type table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        out.push_str(&format!("n,{}\n", self.n));
        out.push_str(&format!("srocc,{}\n", Self::fmt_metric(self.srocc)));
        out.push_str(&format!("lcc,{}\n", Self::fmt_metric(self.lcc)));
        out.push_str(&format!("accuracy,{}\n", self.accuracy));
        for (name, v) in &self.per_type_srocc {
            out.push_str(&format!("srocc_{name},{}\n", Self::fmt_metric(*v)));
        }
        out
    }

    /// Confusion matrix as a CSV grid, rows = true class.
    pub fn confusion_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\pred");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (c, row) in self.confusion.iter().enumerate() {
            out.push_str(&class_names[c]);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Deterministic evaluation of a trained model on one split: center start,
/// locations follow the predicted means, per-image episodes in parallel.
pub fn evaluate(
    params: &ModelParams,
    samples: &[PreparedSample],
    steps: usize,
    class_names: &[String],
    threads: usize,
) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::Dataset("evaluation split is empty".into()));
    }
    let predictions = parallel::map_indexed(samples, threads, |_, s| {
        let ep = forward_episode(params, &s.image, NormalizedLocation::CENTER, steps, EpisodeMode::Eval);
        (ep.trace.score, ep.trace.pred_class)
    });
    let truths: Vec<(f64, usize)> = samples.iter().map(|s| (s.mos, s.class)).collect();
    Ok(MetricReport::from_predictions(&predictions, &truths, class_names))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn median_opt(values: Vec<Option<f64>>) -> Option<f64> {
    let mut v = values.into_iter().collect::<Option<Vec<f64>>>()?;
    Some(median(&mut v))
}

/// Runs the whole pipeline once per seed and reports the elementwise
/// median of the scalar metrics. Any failed split fails the whole
/// procedure; there is no silent fallback to fewer splits.
pub fn median_over_splits(
    seeds: &[u64],
    mut run: impl FnMut(u64) -> Result<MetricReport>,
) -> Result<MetricReport> {
    assert!(seeds.len() % 2 == 1, "median needs an odd number of splits");
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let report = run(seed)
            .map_err(|e| Error::Dataset(format!("split seed {seed} failed: {e}")))?;
        reports.push(report);
    }
    let k = reports[0].confusion.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for r in &reports {
        for (acc_row, row) in confusion.iter_mut().zip(&r.confusion) {
            for (a, v) in acc_row.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    let per_type = (0..reports[0].per_type_srocc.len())
        .map(|i| {
            let name = reports[0].per_type_srocc[i].0.clone();
            let vals = reports.iter().map(|r| r.per_type_srocc[i].1).collect();
            (name, median_opt(vals))
        })
        .collect();
    Ok(MetricReport {
        srocc: median_opt(reports.iter().map(|r| r.srocc).collect()),
        lcc: median_opt(reports.iter().map(|r| r.lcc).collect()),
        accuracy: median(&mut reports.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
        per_type_srocc: per_type,
        confusion,
        n: reports.iter().map(|r| r.n).sum(),
    })
}
