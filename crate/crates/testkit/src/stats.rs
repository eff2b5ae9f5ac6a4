//! Textbook statistics computed the long way round.

/// Mean by plain summation.
pub fn mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Sample variance from the two-pass definition.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut ss = 0.0;
    for x in xs {
        ss += (x - m) * (x - m);
    }
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn insertion_sorted(xs: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::with_capacity(xs.len());
    for &x in xs {
        let mut i = v.len();
        while i > 0 && v[i - 1] > x {
            i -= 1;
        }
        v.insert(i, x);
    }
    v
}

/// Type-7 quantile: the piecewise-linear curve through the points
/// `((k - 1) / (n - 1), x_(k))`, found by scanning the segments.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let v = insertion_sorted(xs);
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let step = 1.0 / (n - 1) as f64;
    for k in 0..n - 1 {
        let a = k as f64 * step;
        let b = (k + 1) as f64 * step;
        if p >= a && p <= b {
            let w = (p - a) / (b - a);
            return v[k] * (1.0 - w) + v[k + 1] * w;
        }
    }
    v[n - 1]
}

/// Fraction of observations at or below `x`, by counting.
pub fn ecdf(xs: &[f64], x: f64) -> f64 {
    xs.iter().filter(|&&v| v <= x).count() as f64 / xs.len() as f64
}

/// `(outliers, extremes)` by direct comparison with the fences, ascending.
pub fn tukey_outliers(xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let q1 = quantile(xs, 0.25);
    let q3 = quantile(xs, 0.75);
    let iqr = q3 - q1;
    let sorted = insertion_sorted(xs);
    let out = sorted
        .iter()
        .copied()
        .filter(|&x| x < q1 - 1.5 * iqr || x > q3 + 1.5 * iqr)
        .collect();
    let ext = sorted
        .iter()
        .copied()
        .filter(|&x| x < q1 - 3.0 * iqr || x > q3 + 3.0 * iqr)
        .collect();
    (out, ext)
}

/// Through-origin slope by minimizing squared error over a fine grid, then
/// refining; independent of the closed form.
pub fn origin_slope_by_search(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let sse = |b: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &c)| (c - b * a) * (c - b * a))
            .sum()
    };
    let (mut lo, mut hi) = (lo, hi);
    // Golden-section search on a convex parabola.
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if sse(m1) < sse(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    (lo + hi) / 2.0
}
