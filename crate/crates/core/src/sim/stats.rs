//! Small descriptive statistics used by the experiment runners.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

/// Type 7 quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let i = (h.floor() as usize).min(n - 2);
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Trapezoid rule for `y` sampled at increasing `x`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.retain(|v| !v.is_nan());
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Jump points and the CDF level just after each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let level = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = level,
                _ => out.push((v, level)),
            }
        }
        out
    }
}

/// Exact `integral (F(x) - G(x))^2 dx` for two empirical CDFs.
pub fn ecdf_l2_distance(f: &Ecdf, g: &Ecdf) -> f64 {
    if f.is_empty() || g.is_empty() {
        return f64::NAN;
    }
    let mut knots: Vec<f64> = f.values().iter().chain(g.values()).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
        .windows(2)
        .map(|w| {
            let d = f.eval(w[0]) - g.eval(w[0]);
            d * d * (w[1] - w[0])
        })
        .sum()
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_matches_textbook_values() {
        let x = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert!((median(&x) - 2.5).abs() < 1e-15);
        assert!((quantile(&x, 0.025) - 1.075).abs() < 1e-12);
        assert!((quantile(&x, 0.75) - 3.25).abs() < 1e-12);
    }

    #[test]
    fn ecdf_distance_of_shifted_points() {
        let f = Ecdf::new(vec![0.0]);
        let g = Ecdf::new(vec![0.5]);
        assert!((ecdf_l2_distance(&f, &g) - 0.5).abs() < 1e-15);
        assert_eq!(ecdf_l2_distance(&f, &f), 0.0);
        let f = Ecdf::new(vec![0.0, 1.0]);
        let g = Ecdf::new(vec![0.0, 2.0]);
        assert!((ecdf_l2_distance(&f, &g) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let x = [0.0, 0.3, 1.0];
        let y = [1.0, 1.6, 3.0];
        assert!((trapezoid(&x, &y) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn steps_merge_ties() {
        let e = Ecdf::new(vec![1.0, 1.0, 2.0, 3.0]);
        assert_eq!(e.steps(), vec![(1.0, 0.5), (2.0, 0.75), (3.0, 1.0)]);
    }
}
