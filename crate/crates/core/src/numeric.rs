//! Small numerical kernels shared across modules: compensated summation,
//! ordinary least squares and bracketed root finding.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<KahanSum>().total()
}

/// Result of a straight-line least-squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope estimate; zero for fewer than three points.
    pub slope_stderr: f64,
    pub n: usize,
}

/// Ordinary least squares. Returns `None` when fewer than two points are
/// given or all abscissae coincide.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = compensated_sum(points.iter().map(|p| p.0)) / nf;
    let mean_y = compensated_sum(points.iter().map(|p| p.1)) / nf;
    let sxx = compensated_sum(points.iter().map(|p| (p.0 - mean_x).powi(2)));
    let sxy = compensated_sum(points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)));
    let syy = compensated_sum(points.iter().map(|p| (p.1 - mean_y).powi(2)));
    let x_scale = points.iter().fold(0.0_f64, |m, p| m.max(p.0.abs())).max(1.0);
    if sxx <= (f64::EPSILON * x_scale).powi(2) * nf {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = compensated_sum(
        points
            .iter()
            .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2)),
    );
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        n,
    })
}

/// Bisection on a bracket where `f(lo)` and `f(hi)` have opposite signs.
///
/// Stops when `|f(mid)| <= f_tol` or the bracket is narrower than `x_tol`.
/// Returns `None` if the endpoints do not bracket a sign change.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, f_tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= f_tol || (hi - lo).abs() <= x_tol {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0e16];
        values.extend(std::iter::repeat_n(1.0, 1000));
        values.push(-1.0e16);
        assert_eq!(compensated_sum(values), 1000.0);
    }

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 3.0 * i as f64 - 2.0)).collect();
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 2.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn degenerate_abscissae() {
        assert!(fit_line(&[(2.0, 1.0), (2.0, 3.0)]).is_none());
        assert!(fit_line(&[(2.0, 1.0)]).is_none());
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14, 0.0).is_none());
    }
}
