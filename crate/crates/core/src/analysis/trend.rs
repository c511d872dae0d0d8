use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;
use thiserror::Error;

use super::RoundLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TrendError {
    #[error("need at least two distinct x values to fit a line")]
    DegenerateInput,
    #[error("log ratio undefined: a round pays zero for proposing or voting")]
    ZeroPayoff,
}

/// Ordinary least squares fit of `y` on `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendReport {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// `1 - SSres/SStot`, reported as 0 when `y` has no variance.
    pub r_squared: f64,
}

/// Proposals per round against `x = ln(nu/pi)`, one point per round.
pub fn proposal_trend(logs: &[RoundLog]) -> Result<TrendReport, TrendError> {
    let points = logs
        .iter()
        .map(|log| {
            let p = log.payoffs();
            let (pi, nu) = (p.propose.get(), p.vote.get());
            if pi == 0 || nu == 0 {
                return Err(TrendError::ZeroPayoff);
            }
            Ok((libm::log(nu as f64 / pi as f64), f64::from(log.proposals())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    fit_trend(points)
}

pub fn fit_trend(points: Vec<(f64, f64)>) -> Result<TrendReport, TrendError> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(TrendError::DegenerateInput);
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return Err(TrendError::DegenerateInput);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        0.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(TrendReport {
        points,
        slope,
        intercept,
        r_squared,
    })
}

impl fmt::Display for TrendReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x=ln(nu/pi)\tproposals")?;
        for (x, y) in &self.points {
            writeln!(f, "{x:.6}\t{y}")?;
        }
        writeln!(
            f,
            "slope\t{:.6}\nintercept\t{:.6}\nr_squared\t{:.6}",
            self.slope, self.intercept, self.r_squared
        )
    }
}

/// 1-based ranks, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation. `None` for mismatched lengths, fewer than two
/// points, or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / libm::sqrt(sxx * syy))
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::*;
    use crate::PayoffStructure;

    #[test]
    fn perfect_line() {
        let pts = (0..6).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let t = fit_trend(pts).unwrap();
        assert!((t.slope + 0.5).abs() < 1e-12);
        assert!((t.intercept - 3.0).abs() < 1e-12);
        assert!((t.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_y() {
        let t = fit_trend(alloc::vec![(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)]).unwrap();
        assert_eq!((t.slope, t.r_squared), (0.0, 0.0));
    }

    #[test]
    fn identical_x_rejected() {
        assert_eq!(fit_trend(alloc::vec![(1.0, 2.0), (1.0, 3.0)]), Err(TrendError::DegenerateInput));
        assert_eq!(fit_trend(alloc::vec![(1.0, 2.0)]), Err(TrendError::DegenerateInput));
    }

    /// Closed-form slope and R² via the correlation coefficient.
    fn reference(points: &[(f64, f64)]) -> (f64, f64) {
        let n = points.len() as f64;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y) in points {
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let r = (n * sxy - sx * sy) / libm::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
        (slope, r * r)
    }

    #[test]
    fn five_structure_points() {
        let ln = |a: f64, b: f64| libm::log(a / b);
        let pts = alloc::vec![
            (ln(4.0, 20.0), 8.0),
            (ln(5.0, 12.0), 8.2),
            (0.0, 2.6),
            (ln(12.0, 5.0), 2.6),
            (ln(20.0, 4.0), 2.6),
        ];
        let (slope, r2) = reference(&pts);
        let t = fit_trend(pts).unwrap();
        assert!(t.slope < 0.0);
        assert!((t.slope - slope).abs() < 1e-9);
        assert!((t.r_squared - r2).abs() < 1e-9);
    }

    #[test]
    fn trend_from_logs_is_scale_free() {
        let items = [
            (PayoffStructure::new(20, 4, 2), "P P P V0"),
            (PayoffStructure::new(8, 8, 2), "P P V0"),
            (PayoffStructure::new(4, 20, 2), "P V0"),
        ];
        let a = proposal_trend(&logs(&items)).unwrap();
        let scaled: alloc::vec::Vec<_> = items.iter().map(|(p, s)| (p.scaled(3), *s)).collect();
        let b = proposal_trend(&logs(&scaled)).unwrap();
        assert!(a.slope < 0.0);
        assert!((a.slope - b.slope).abs() < 1e-12);
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), None);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 3.0, 4.0]).unwrap();
        assert!(r > 0.9 && r < 1.0);
    }
}
