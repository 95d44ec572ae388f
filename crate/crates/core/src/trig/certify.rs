use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poly::TrigPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `P > threshold` on the region.
    Min,
    /// `P < threshold` on the region.
    Max,
    /// `|P| < threshold` on the region.
    AbsMax,
}

/// A bound on a trigonometric polynomial over an arc `[a, b]`, certified by
/// evaluating `P` and its first `TAYLOR_ORDER` derivatives at the centres of
/// `cells` equal cells of width `step`. Inside a cell of half-width `h` the
/// variation is at most `Σ_{j<=r} |P^(j)(c)| h^j/j! + M_{r+1} h^{r+1}/(r+1)!`
/// for every `r`, with `M_j = Σ |2πk|^j |c_k|`; the smallest of these is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub region: (f64, f64),
    pub kind: BoundKind,
    pub threshold: f64,
    /// Certified lower bound of `P` (`Min`) or upper bound of `P`/`|P|`.
    pub certified: f64,
    /// Extreme value seen at the cell centres.
    pub grid_extreme: f64,
    pub cells: usize,
    pub step: f64,
    /// `M_1` and the remainder bound `M_{TAYLOR_ORDER+1}`.
    pub first_derivative_bound: f64,
    pub remainder_bound: f64,
    pub passed: bool,
}

impl BoundCertificate {
    /// Certified distance to the threshold, negative when failed.
    pub fn margin(&self) -> f64 {
        match self.kind {
            BoundKind::Min => self.certified - self.threshold,
            BoundKind::Max | BoundKind::AbsMax => self.threshold - self.certified,
        }
    }
}

/// Largest number of cells any single certificate will use.
pub const MAX_CELLS: usize = 1 << 22;

/// Number of derivatives evaluated at each cell centre.
pub const TAYLOR_ORDER: usize = 6;

/// Per-cell certified `(lower, upper)` bounds of `P` on the arc `[a, b]` cut into `cells`.
fn cell_bounds(p: &TrigPoly, a: f64, b: f64, cells: usize, m: &[f64]) -> (Vec<(f64, f64)>, f64) {
    let h = (b - a) / cells as f64;
    // widen for the rounding in the centre coordinates
    let half = 0.5 * h * (1.0 + 1e-12) + 4.0 * f64::EPSILON * (a.abs() + b.abs() + 1.0);
    let e = p.eval_error();
    let errs: Vec<f64> = (1..=TAYLOR_ORDER as i32).map(|j| p.derivative_eval_error_of(j)).collect();
    let bounds = (0..cells)
        .into_par_iter()
        .map(|i| {
            let c = a + (i as f64 + 0.5) * h;
            let d = p.eval_derivs(c, TAYLOR_ORDER);
            let mut var = m[1] * half;
            let (mut partial, mut pow, mut fact) = (0.0, 1.0, 1.0);
            for j in 1..=TAYLOR_ORDER {
                pow *= half;
                fact *= j as f64;
                partial += (d[j].abs() + errs[j - 1]) * pow / fact;
                var = var.min(partial + m[j + 1] * pow * half / (fact * (j + 1) as f64));
            }
            let slop = var * (1.0 + 1e-12) + e;
            (d[0] - slop, d[0] + slop)
        })
        .collect();
    (bounds, h)
}

/// Certifies `kind` against `threshold` on `[a, b]`, doubling the grid
/// until it succeeds, the grid itself refutes it, or `max_cells` is reached.
pub fn certify(p: &TrigPoly, a: f64, b: f64, kind: BoundKind, threshold: f64, max_cells: usize) -> BoundCertificate {
    let m: Vec<f64> = (0..=TAYLOR_ORDER as i32 + 1).map(|j| p.derivative_bound(j)).collect();
    let mut cells = (8 * p.degree()).clamp(64, max_cells.max(64));
    loop {
        let (bounds, h) = cell_bounds(p, a, b, cells, &m);
        let (certified, grid_extreme) = match kind {
            BoundKind::Min => (
                bounds.iter().map(|x| x.0).fold(f64::INFINITY, f64::min),
                bounds.iter().map(|x| 0.5 * (x.0 + x.1)).fold(f64::INFINITY, f64::min),
            ),
            BoundKind::Max => (
                bounds.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
                bounds.iter().map(|x| 0.5 * (x.0 + x.1)).fold(f64::NEG_INFINITY, f64::max),
            ),
            BoundKind::AbsMax => (
                bounds.iter().map(|x| x.1.abs().max(x.0.abs())).fold(0.0, f64::max),
                bounds.iter().map(|x| (0.5 * (x.0 + x.1)).abs()).fold(0.0, f64::max),
            ),
        };
        let passed = match kind {
            BoundKind::Min => certified > threshold,
            BoundKind::Max | BoundKind::AbsMax => certified < threshold,
        };
        let hopeless = match kind {
            BoundKind::Min => grid_extreme <= threshold,
            BoundKind::Max | BoundKind::AbsMax => grid_extreme >= threshold,
        };
        if passed || hopeless || cells >= max_cells {
            return BoundCertificate {
                region: (a, b),
                kind,
                threshold,
                certified,
                grid_extreme,
                cells,
                step: h,
                first_derivative_bound: m[1],
                remainder_bound: m[TAYLOR_ORDER + 1],
                passed,
            };
        }
        cells = (cells * 2).min(max_cells);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::poly::{fejer, smoothed_indicator};

    #[test]
    fn fejer_is_nonnegative_but_not_positive() {
        let f = fejer(4).unwrap();
        // Fejér kernels vanish at j/(M+1), so "> 0" cannot be certified but "> −1e-9" can
        let c = certify(&f, 0.0, 1.0, BoundKind::Min, -1e-9, MAX_CELLS);
        assert!(c.passed, "{c:?}");
        let c = certify(&f, 0.0, 1.0, BoundKind::Min, 1e-9, 1 << 14);
        assert!(!c.passed);
        let c = certify(&f, 0.0, 1.0, BoundKind::Max, 5.0 + 1e-6, MAX_CELLS);
        assert!(c.passed && c.margin() > 0.0);
    }

    #[test]
    fn refinement_never_flips_a_certified_bound() {
        let s = smoothed_indicator(-0.2, 0.2, 32).unwrap();
        let coarse = certify(&s, -0.1, 0.1, BoundKind::Min, 0.5, 1 << 12);
        assert!(coarse.passed);
        let fine = certify(&s, -0.1, 0.1, BoundKind::Min, 0.5, 1 << 16);
        assert!(fine.passed && fine.certified >= coarse.certified - 1e-12);
        let dense_min = (0..=100_000)
            .map(|i| s.eval(-0.1 + 0.2 * i as f64 / 100_000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(dense_min >= fine.certified);
    }
}
