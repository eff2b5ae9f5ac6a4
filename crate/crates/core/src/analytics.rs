//! Statistics over collections of session measurements: summaries,
//! box-and-whisker decomposition, empirical CDFs, regression through the
//! origin, residual histograms and MOS distributions.
//!
//! Quantiles use linear interpolation between order statistics (the
//! "type 7" rule). Outlier fences are strict: a point exactly on a fence is
//! not an outlier.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{count, lit, Real};
use crate::report_schema::{technology_of, SessionReport, TechnologyGroup};

fn sorted<T: Real>(sample: &[T]) -> Result<Vec<T>> {
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::param("sample", "contains NaN"));
    }
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(v)
}

/// Type-7 quantile of an ascending, non-empty slice.
pub fn quantile_sorted<T: Real>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = count::<T>(n - 1) * p;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(n - 1);
    let j = (i + 1).min(n - 1);
    sorted[i] + (h - lo) * (sorted[j] - sorted[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary<T> {
    pub n: usize,
    pub mean: T,
    pub median: T,
    /// Sample standard deviation (n - 1 denominator; 0 for n = 1).
    pub std: T,
    pub min: T,
    pub max: T,
    /// `std / mean`; absent when the mean is zero.
    pub cv: Option<T>,
}

pub fn summarize<T: Real>(sample: &[T]) -> Result<SampleSummary<T>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = sorted(sample)?;
    let n = s.len();
    let mean = s.iter().copied().sum::<T>() / count(n);
    let std = if n > 1 {
        let ss: T = s.iter().map(|&x| (x - mean) * (x - mean)).sum();
        (ss / count(n - 1)).sqrt()
    } else {
        T::zero()
    };
    Ok(SampleSummary {
        n,
        mean,
        median: quantile_sorted(&s, lit(0.5)),
        std,
        min: s[0],
        max: s[n - 1],
        cv: (mean != T::zero()).then(|| std / mean),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats<T> {
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub iqr: T,
    /// Smallest observation at or above `q1 - 1.5 iqr`.
    pub whisker_low: T,
    /// Largest observation at or below `q3 + 1.5 iqr`.
    pub whisker_high: T,
    /// Observations strictly beyond 1.5 iqr from the box, ascending.
    pub outliers: Vec<T>,
    /// Observations strictly beyond 3 iqr from the box, ascending.
    pub extremes: Vec<T>,
    pub mean: T,
}

impl<T: Real> BoxStats<T> {
    pub fn fences(&self) -> (T, T) {
        let k = lit::<T>(1.5) * self.iqr;
        (self.q1 - k, self.q3 + k)
    }

    pub fn extreme_fences(&self) -> (T, T) {
        let k = lit::<T>(3.0) * self.iqr;
        (self.q1 - k, self.q3 + k)
    }
}

pub const BOX_MIN_SAMPLE: usize = 4;

pub fn box_whisker<T: Real>(sample: &[T]) -> Result<BoxStats<T>> {
    if sample.len() < BOX_MIN_SAMPLE {
        return Err(Error::SampleTooSmall {
            needed: BOX_MIN_SAMPLE,
            got: sample.len(),
        });
    }
    let s = sorted(sample)?;
    let q1 = quantile_sorted(&s, lit(0.25));
    let median = quantile_sorted(&s, lit(0.5));
    let q3 = quantile_sorted(&s, lit(0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - lit::<T>(1.5) * iqr, q3 + lit::<T>(1.5) * iqr);
    let (xlo, xhi) = (q1 - lit::<T>(3.0) * iqr, q3 + lit::<T>(3.0) * iqr);

    let inside = s.iter().copied().filter(|&x| x >= lo && x <= hi);
    let whisker_low = inside.clone().next().unwrap_or(q1);
    let whisker_high = inside.last().unwrap_or(q3);
    Ok(BoxStats {
        q1,
        median,
        q3,
        iqr,
        whisker_low,
        whisker_high,
        outliers: s.iter().copied().filter(|&x| x < lo || x > hi).collect(),
        extremes: s.iter().copied().filter(|&x| x < xlo || x > xhi).collect(),
        mean: s.iter().copied().sum::<T>() / count(s.len()),
    })
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf<T> {
    sorted: Vec<T>,
}

pub fn ecdf<T: Real>(sample: &[T]) -> Result<Ecdf<T>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(Ecdf {
        sorted: sorted(sample)?,
    })
}

impl<T: Real> Ecdf<T> {
    /// Fraction of observations `<= x`.
    pub fn eval(&self, x: T) -> T {
        let k = self.sorted.partition_point(|&v| v <= x);
        count::<T>(k) / count(self.sorted.len())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `(x, F(x))` at each distinct observation.
    pub fn steps(&self) -> Vec<(T, T)> {
        let n = count::<T>(self.sorted.len());
        let mut out: Vec<(T, T)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = count::<T>(i + 1) / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,cdf")?;
        for (x, f) in self.steps() {
            writeln!(w, "{x},{f}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit<T> {
    /// `sum(x y) / sum(x^2)`.
    pub slope: T,
    /// Uncentered: `1 - SS_res / sum(y^2)`.
    pub r_squared: T,
    /// Centered Pearson correlation; absent when either variable is constant.
    pub pearson_r: Option<T>,
    pub n: usize,
}

impl<T: Real> RegressionFit<T> {
    pub fn predict(&self, x: T) -> T {
        self.slope * x
    }
}

/// Least-squares line constrained through the origin.
pub fn fit_through_origin<T: Real>(x: &[T], y: &[T]) -> Result<RegressionFit<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let sxx: T = x.iter().map(|&v| v * v).sum();
    if sxx == T::zero() {
        return Err(Error::DegenerateRegressor);
    }
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
    let syy: T = y.iter().map(|&v| v * v).sum();
    let slope = sxy / sxx;
    let ss_res: T = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - slope * a) * (b - slope * a))
        .sum();
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        T::one() - ss_res / syy
    };
    Ok(RegressionFit {
        slope,
        r_squared,
        pearson_r: pearson(x, y),
        n,
    })
}

fn pearson<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    let n = count::<T>(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > T::zero() && syy > T::zero()).then(|| sxy / (sxx * syy).sqrt())
}

/// Equal-width bins over `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec<T> {
    pub lower: T,
    pub upper: T,
    pub bins: usize,
}

impl<T: Real> Default for HistogramSpec<T> {
    /// 21 bins over `[-4, 4]`, wide enough for any MOS difference.
    fn default() -> Self {
        Self {
            lower: lit(-4.0),
            upper: lit(4.0),
            bins: 21,
        }
    }
}

impl<T: Real> HistogramSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || !(self.lower < self.upper) {
            return Err(Error::param("histogram", "need bins > 0 and lower < upper"));
        }
        Ok(())
    }

    pub fn edges(&self) -> Vec<T> {
        let w = (self.upper - self.lower) / count(self.bins);
        (0..=self.bins)
            .map(|i| {
                if i == self.bins {
                    self.upper
                } else {
                    self.lower + w * count(i)
                }
            })
            .collect()
    }

    /// Bin index; values outside the range land in the edge bins.
    pub fn bin_of(&self, v: T) -> usize {
        let w = (self.upper - self.lower) / count(self.bins);
        let raw = ((v - self.lower) / w).floor();
        if raw < T::zero() {
            0
        } else {
            raw.to_usize().unwrap_or(usize::MAX).min(self.bins - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram<T> {
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
}

impl<T: Real> Histogram<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lower,upper,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[i], self.edges[i + 1], c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    /// Differences `model - reported`.
    pub histogram: Histogram<T>,
    pub n: usize,
    pub mean: T,
    /// Share with `|model - reported| <= 0.5`.
    pub frac_within_half: T,
    /// Share with `model < reported`.
    pub frac_model_below_reported: T,
}

pub fn residuals<T: Real>(
    model_mos: &[T],
    reported_mos: &[T],
    bins: &HistogramSpec<T>,
) -> Result<ResidualReport<T>> {
    if model_mos.len() != reported_mos.len() {
        return Err(Error::LengthMismatch {
            left: model_mos.len(),
            right: reported_mos.len(),
        });
    }
    if model_mos.is_empty() {
        return Err(Error::EmptySample);
    }
    bins.validate()?;
    let n = model_mos.len();
    let mut counts = vec![0usize; bins.bins];
    let (mut within, mut below) = (0usize, 0usize);
    let mut total = T::zero();
    let half = lit::<T>(0.5);
    for (&m, &r) in model_mos.iter().zip(reported_mos) {
        let d = m - r;
        counts[bins.bin_of(d)] += 1;
        if d.abs() <= half {
            within += 1;
        }
        if d < T::zero() {
            below += 1;
        }
        total += d;
    }
    Ok(ResidualReport {
        histogram: Histogram {
            edges: bins.edges(),
            counts,
        },
        n,
        mean: total / count(n),
        frac_within_half: count::<T>(within) / count(n),
        frac_model_below_reported: count::<T>(below) / count(n),
    })
}

/// Reported-MOS breakdown for one group of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosGroupDistribution {
    pub group: String,
    pub n: usize,
    /// Percentage of sessions scoring 1..=5.
    pub percentages: [f64; 5],
    pub average: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosDistribution {
    pub groups: Vec<MosGroupDistribution>,
}

pub const ALL_GROUP: &str = "all";

impl MosDistribution {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "group,n,mos1,mos2,mos3,mos4,mos5,average,std")?;
        for g in &self.groups {
            let p = g.percentages;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                g.group, g.n, p[0], p[1], p[2], p[3], p[4], g.average, g.std
            )?;
        }
        Ok(())
    }
}

fn distribution_of(group: String, scores: &[i64]) -> Result<MosGroupDistribution> {
    let mut counts = [0usize; 5];
    for &s in scores {
        let idx = usize::try_from(s - 1)
            .ok()
            .filter(|&i| i < 5)
            .ok_or_else(|| Error::param("GeneralFeedback", format!("{s} outside 1..=5")))?;
        counts[idx] += 1;
    }
    let values: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
    let summary = summarize(&values)?;
    let n = scores.len() as f64;
    Ok(MosGroupDistribution {
        group,
        n: scores.len(),
        percentages: counts.map(|c| 100.0 * c as f64 / n),
        average: summary.mean,
        std: summary.std,
    })
}

/// Percentage of each reported score, overall or per technology group.
/// Groups without sessions are omitted.
pub fn mos_distribution(
    reports: &[SessionReport],
    group_by_technology: bool,
) -> Result<MosDistribution> {
    let mut groups: BTreeMap<TechnologyGroup, Vec<i64>> = BTreeMap::new();
    let mut pooled = Vec::with_capacity(reports.len());
    for (i, r) in reports.iter().enumerate() {
        let fb = r.general_feedback.ok_or(Error::MissingFeedback(i))?;
        pooled.push(fb);
        groups.entry(technology_of(r)).or_default().push(fb);
    }
    let mut out = Vec::new();
    if group_by_technology {
        for (g, scores) in groups {
            out.push(distribution_of(g.to_string(), &scores)?);
        }
    } else if !pooled.is_empty() {
        out.push(distribution_of(ALL_GROUP.to_owned(), &pooled)?);
    }
    Ok(MosDistribution { groups: out })
}
