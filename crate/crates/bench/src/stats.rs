/// Median; `NaN` for an empty slice. Infinite values sort last.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else if v[mid - 1].is_infinite() || v[mid].is_infinite() {
        v[mid].max(v[mid - 1])
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares `y ≈ slope·x + intercept`. `None` for fewer than two points
/// or constant `x`. `r_squared` is 1 when `y` is constant.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// Fit of `ln e_k` against `k` over the positive entries.
pub fn log_linear_fit(iters: &[usize], errors: &[f64]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = iters
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(k, e)| (*k as f64, e.ln()))
        .collect();
    linear_fit(&pts)
}
