//! Pool-adjacent-violators for nondecreasing least-squares fits.

/// Nondecreasing sequence closest to `y` in weighted least squares.
///
/// Already monotone inputs are returned unchanged.
pub fn pava(y: &[f64], weights: Option<&[f64]>) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return Vec::new();
    }
    // blocks of (mean, weight, length)
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut wts: Vec<f64> = Vec::with_capacity(n);
    let mut lens: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        means.push(y[i]);
        wts.push(w);
        lens.push(1);
        while means.len() > 1 {
            let k = means.len() - 1;
            if means[k - 1] <= means[k] {
                break;
            }
            let w = wts[k - 1] + wts[k];
            let m = (means[k - 1] * wts[k - 1] + means[k] * wts[k]) / w;
            let len = lens[k - 1] + lens[k];
            means.truncate(k);
            wts.truncate(k);
            lens.truncate(k);
            means[k - 1] = m;
            wts[k - 1] = w;
            lens[k - 1] = len;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (m, len) in means.iter().zip(&lens) {
        out.extend(std::iter::repeat_n(*m, *len));
    }
    out
}
