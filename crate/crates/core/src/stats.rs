//! Small statistics helpers: least squares, quantiles, normal and Student
//! critical values.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub rss: f64,
    pub max_abs_residual: f64,
    pub n: usize,
}

/// Ordinary least squares `y = a + b x`. `None` with fewer than two points
/// or constant `x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    let mut max_abs_residual: f64 = 0.0;
    for i in 0..n {
        let e = ys[i] - intercept - slope * xs[i];
        rss += e * e;
        max_abs_residual = max_abs_residual.max(e.abs());
    }
    let slope_stderr = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        rss,
        max_abs_residual,
        n,
    })
}

/// Slopes of every run of `width` consecutive points.
pub fn window_slopes(xs: &[f64], ys: &[f64], width: usize) -> Vec<f64> {
    let n = xs.len().min(ys.len());
    if width < 2 || width > n {
        return Vec::new();
    }
    (0..=n - width)
        .filter_map(|s| fit_line(&xs[s..s + width], &ys[s..s + width]).map(|f| f.slope))
        .collect()
}

/// Two-sided normal critical value, e.g. 1.96 for `level = 0.95`.
pub fn normal_quantile(level: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Two-sided Student-t critical value with `dof` degrees of freedom.
pub fn student_quantile(level: f64, dof: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, dof).expect("positive dof");
    t.inverse_cdf(0.5 + level / 2.0)
}

/// Linear-interpolated quantile of unsorted data; NaN for empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 3.0).abs() < 1e-12);
        assert!(f.rss < 1e-20);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        assert_eq!(window_slopes(&xs, &ys, 3).len(), 2);
    }

    #[test]
    fn critical_values() {
        assert!((normal_quantile(0.95) - 1.959964).abs() < 1e-5);
        assert!((student_quantile(0.95, 10.0) - 2.228139).abs() < 1e-5);
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
