//! Distribution-comparison metrics and dataset-level evaluation reports.
//!
//! Five per-sample metrics: cosine and intersection measure similarity
//! (higher is better), chebyshev, clark and canberra measure distance (lower
//! is better). Clark and canberra divide by coordinate sums, so a coordinate
//! at which both vectors are zero contributes 0 by convention. The report
//! also splits mean relative error by true-degree magnitude, which exposes
//! underfitting of the small degrees.

use crate::error::{Error, Result};
use crate::{Mat, Real};
use ndarray::ArrayView1;
use serde::Serialize;
use std::io::Write;

/// Cosine similarity `p·q / (|p| |q|)`; in `[0, 1]` for simplex inputs.
pub fn cosine<A: Real>(p: ArrayView1<A>, q: ArrayView1<A>) -> A {
    let mut dot = A::zero();
    let mut np = A::zero();
    let mut nq = A::zero();
    for (&a, &b) in p.iter().zip(q.iter()) {
        dot += a * b;
        np += a * a;
        nq += b * b;
    }
    dot / (np.sqrt() * nq.sqrt())
}

/// Intersection `sum_i min(p_i, q_i)`; equals `1 - ||p-q||_1 / 2` on the simplex.
pub fn intersection<A: Real>(p: ArrayView1<A>, q: ArrayView1<A>) -> A {
    p.iter().zip(q.iter()).map(|(&a, &b)| a.min(b)).sum()
}

/// Chebyshev distance `max_i |p_i - q_i|`.
pub fn chebyshev<A: Real>(p: ArrayView1<A>, q: ArrayView1<A>) -> A {
    p.iter()
        .zip(q.iter())
        .map(|(&a, &b)| (a - b).abs())
        .fold(A::zero(), A::max)
}

/// Clark distance `sqrt(sum_i (p_i-q_i)^2 / (p_i+q_i)^2)`, 0/0 terms are 0.
pub fn clark<A: Real>(p: ArrayView1<A>, q: ArrayView1<A>) -> A {
    p.iter()
        .zip(q.iter())
        .map(|(&a, &b)| {
            let denom = a + b;
            if denom == A::zero() {
                A::zero()
            } else {
                let r = (a - b) / denom;
                r * r
            }
        })
        .sum::<A>()
        .sqrt()
}

/// Canberra distance `sum_i |p_i-q_i| / (p_i+q_i)`, 0/0 terms are 0.
pub fn canberra<A: Real>(p: ArrayView1<A>, q: ArrayView1<A>) -> A {
    p.iter()
        .zip(q.iter())
        .map(|(&a, &b)| {
            let denom = a + b;
            if denom == A::zero() {
                A::zero()
            } else {
                (a - b).abs() / denom
            }
        })
        .sum()
}

/// All five metrics for one sample (or an aggregate of samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricVector<A> {
    pub cosine: A,
    pub intersection: A,
    pub chebyshev: A,
    pub clark: A,
    pub canberra: A,
}

impl<A: Real> MetricVector<A> {
    pub fn compute(pred: ArrayView1<A>, truth: ArrayView1<A>) -> Self {
        MetricVector {
            cosine: cosine(pred, truth),
            intersection: intersection(pred, truth),
            chebyshev: chebyshev(pred, truth),
            clark: clark(pred, truth),
            canberra: canberra(pred, truth),
        }
    }

    fn map2(a: &Self, b: &Self, f: impl Fn(A, A) -> A) -> Self {
        MetricVector {
            cosine: f(a.cosine, b.cosine),
            intersection: f(a.intersection, b.intersection),
            chebyshev: f(a.chebyshev, b.chebyshev),
            clark: f(a.clark, b.clark),
            canberra: f(a.canberra, b.canberra),
        }
    }

    fn fill(v: A) -> Self {
        MetricVector {
            cosine: v,
            intersection: v,
            chebyshev: v,
            clark: v,
            canberra: v,
        }
    }

    /// Metric values in the order cosine, intersection, chebyshev, clark,
    /// canberra; matches [`MetricVector::NAMES`].
    pub fn as_array(&self) -> [A; 5] {
        [
            self.cosine,
            self.intersection,
            self.chebyshev,
            self.clark,
            self.canberra,
        ]
    }

    pub const NAMES: [&'static str; 5] =
        ["cosine", "intersection", "chebyshev", "clark", "canberra"];
}

/// Mean relative error split by true-degree magnitude.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MreSplit<A> {
    /// Mean over entries with truth in (0, threshold); NaN if the bucket is empty.
    pub low: A,
    /// Mean over entries with truth >= threshold; NaN if the bucket is empty.
    pub high: A,
    pub low_count: usize,
    pub high_count: usize,
}

/// Per-sample and aggregate evaluation of predictions against the truth.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport<A> {
    pub per_sample: Vec<MetricVector<A>>,
    pub mean: MetricVector<A>,
    /// Population standard deviation over the per-sample values.
    pub std: MetricVector<A>,
    pub mre_low: A,
    pub mre_high: A,
    pub mre_low_count: usize,
    pub mre_high_count: usize,
}

/// Computes the full report. Rows of `pred` and `truth` must be on the simplex.
pub fn evaluate<A: Real>(pred: &Mat<A>, truth: &Mat<A>) -> Result<EvalReport<A>> {
    if pred.dim() != truth.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", truth.dim()),
            actual: format!("{:?}", pred.dim()),
        });
    }
    if pred.nrows() == 0 {
        return Err(Error::invalid("cannot evaluate an empty prediction matrix"));
    }
    let per_sample: Vec<MetricVector<A>> = pred
        .rows()
        .into_iter()
        .zip(truth.rows())
        .map(|(p, t)| MetricVector::compute(p, t))
        .collect();

    let n = A::from_usize(per_sample.len()).unwrap();
    let sum = per_sample
        .iter()
        .fold(MetricVector::fill(A::zero()), |acc, m| {
            MetricVector::map2(&acc, m, |a, b| a + b)
        });
    let mean = MetricVector::map2(&sum, &MetricVector::fill(n), |s, n| s / n);
    let sq_dev = per_sample
        .iter()
        .fold(MetricVector::fill(A::zero()), |acc, m| {
            let dev = MetricVector::map2(m, &mean, |x, mu| (x - mu) * (x - mu));
            MetricVector::map2(&acc, &dev, |a, b| a + b)
        });
    let std = MetricVector::map2(&sq_dev, &MetricVector::fill(n), |s, n| (s / n).sqrt());

    let mre = relative_error_split(pred, truth, A::from_f64_lit(0.5))?;

    Ok(EvalReport {
        per_sample,
        mean,
        std,
        mre_low: mre.low,
        mre_high: mre.high,
        mre_low_count: mre.low_count,
        mre_high_count: mre.high_count,
    })
}

/// Mean relative error `|pred - truth| / truth`, bucketed by whether the true
/// degree is below or at/above `threshold`. Entries with truth exactly 0 are
/// excluded; an empty bucket yields NaN.
pub fn relative_error_split<A: Real>(
    pred: &Mat<A>,
    truth: &Mat<A>,
    threshold: A,
) -> Result<MreSplit<A>> {
    if pred.dim() != truth.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", truth.dim()),
            actual: format!("{:?}", pred.dim()),
        });
    }
    let mut low_sum = A::zero();
    let mut high_sum = A::zero();
    let mut low_count = 0usize;
    let mut high_count = 0usize;
    for (&p, &t) in pred.iter().zip(truth.iter()) {
        if t == A::zero() {
            continue;
        }
        let rel = (p - t).abs() / t;
        if t < threshold {
            low_sum += rel;
            low_count += 1;
        } else {
            high_sum += rel;
            high_count += 1;
        }
    }
    let low = if low_count == 0 {
        A::nan()
    } else {
        low_sum / A::from_usize(low_count).unwrap()
    };
    let high = if high_count == 0 {
        A::nan()
    } else {
        high_sum / A::from_usize(high_count).unwrap()
    };
    Ok(MreSplit {
        low,
        high,
        low_count,
        high_count,
    })
}

impl<A: Real + Serialize> EvalReport<A> {
    /// Serializes the report as pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Writes the header-plus-one-row CSV record of the aggregates.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = Vec::new();
        for name in MetricVector::<A>::NAMES {
            header.push(format!("{name}_mean"));
        }
        for name in MetricVector::<A>::NAMES {
            header.push(format!("{name}_std"));
        }
        header.push("mre_low".into());
        header.push("mre_high".into());
        writeln!(w, "{}", header.join(","))?;
        let mut row = Vec::new();
        for v in self.mean.as_array() {
            row.push(format!("{v}"));
        }
        for v in self.std.as_array() {
            row.push(format!("{v}"));
        }
        row.push(format!("{}", self.mre_low));
        row.push(format!("{}", self.mre_high));
        writeln!(w, "{}", row.join(","))
    }
}
