//! Least-squares power laws on log-log data.

/// Values at or below this are treated as numerical zero and not fitted.
pub const FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    /// Exponent `s` in `y ~ C x^s`.
    pub slope: f64,
    /// `ln C`.
    pub intercept: f64,
    /// Root-mean-square residual in natural log.
    pub residual: f64,
    /// `y` is strictly monotone in `x`.
    pub monotone: bool,
}

/// Fit `ln y = ln C + s ln x`. Returns `None` when fewer than two points are
/// given or some value sits at the floor.
pub fn power_law(xs: &[f64], ys: &[f64]) -> Option<PowerFit> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|y| !(*y > FLOOR)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let inc = order.windows(2).all(|w| ys[w[1]] > ys[w[0]]);
    let dec = order.windows(2).all(|w| ys[w[1]] < ys[w[0]]);
    Some(PowerFit { slope, intercept, residual, monotone: inc || dec })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cubic() {
        let h = [0.1, 0.05, 0.025];
        let y: Vec<f64> = h.iter().map(|v| 3.0 * v * v * v).collect();
        let f = power_law(&h, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(f.monotone);
    }

    #[test]
    fn floor_skips() {
        assert!(power_law(&[0.1, 0.05], &[1e-15, 1e-16]).is_none());
    }
}
