//! Geometric sampling grids and log-log slope fits.

use serde::Serialize;

/// At least `count` distinct integers spread geometrically over `[lo, hi]`
/// (fewer only if the interval itself has fewer integers).
pub fn geometric_grid(lo: i64, hi: i64, count: usize) -> Vec<i64> {
    assert!(lo >= 1 && hi >= lo, "invalid grid [{lo}, {hi}]");
    let available = (hi - lo + 1) as usize;
    if available <= count {
        return (lo..=hi).collect();
    }
    let (l, h) = ((lo as f64).ln(), (hi as f64).ln());
    let mut points = count.max(2);
    loop {
        let mut grid: Vec<i64> = (0..points)
            .map(|i| {
                let t = i as f64 / (points - 1) as f64;
                ((l + t * (h - l)).exp().round() as i64).clamp(lo, hi)
            })
            .collect();
        grid.dedup();
        if grid.len() >= count {
            return grid;
        }
        if points > 4 * available {
            return (lo..=hi).collect();
        }
        points += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    /// Fitted `e` in `value ~ c n^e`.
    pub exponent: f64,
    /// Fitted `ln c`.
    pub log_coefficient: f64,
    pub points: usize,
}

/// Least squares of `ln |value|` against `ln n`. Takes `ln |value|` directly
/// so values far outside the `f64` range can be fitted.
pub fn power_fit(ns: &[i64], ln_values: &[f64]) -> PowerFit {
    assert_eq!(ns.len(), ln_values.len());
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(ln_values)
        .filter(|(_, y)| y.is_finite())
        .map(|(&n, &y)| ((n as f64).ln(), y))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return PowerFit {
            exponent: f64::NAN,
            log_coefficient: f64::NAN,
            points: pts.len(),
        };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    PowerFit {
        exponent: slope,
        log_coefficient: my - slope * mx,
        points: pts.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric_and_distinct() {
        let g = geometric_grid(100, 10_000, 20);
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[19]), (100, 10_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let small = geometric_grid(2, 25, 20);
        assert!(small.len() >= 20);
        assert_eq!(geometric_grid(3, 7, 20), vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn recovers_power_law() {
        let ns = geometric_grid(10, 1000, 20);
        let ys: Vec<f64> = ns.iter().map(|&n| (3.0 * (n as f64).powf(-1.6)).ln()).collect();
        let f = power_fit(&ns, &ys);
        assert!((f.exponent + 1.6).abs() < 1e-12);
        assert!((f.log_coefficient - 3f64.ln()).abs() < 1e-10);
    }
}
