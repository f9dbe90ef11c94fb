//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
pub struct NoConvergence {
    pub estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Quadrature {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Quadrature { value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

struct Segment {
    a: f64,
    b: f64,
    q: Quadrature,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.q.error == other.q.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.error.total_cmp(&other.q.error)
    }
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `max(abs_tol, rel_tol·|value|)`, bisecting the worst segment each step.
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are tolerated (convergence is slower there).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature, NoConvergence> {
    const MAX_SEGMENTS: usize = 2000;
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, a, b);
    let mut total = first;
    heap.push(Segment { a, b, q: first });
    loop {
        let tol = abs_tol.max(rel_tol * total.value.abs());
        if !total.value.is_finite() {
            return Err(NoConvergence { estimate: total.value, error: total.error });
        }
        if total.error <= tol {
            return Ok(total);
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(NoConvergence { estimate: total.value, error: total.error });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // segment below floating-point resolution
            return Err(NoConvergence { estimate: total.value, error: total.error });
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total.value += left.value + right.value - worst.q.value;
        total.error += left.error + right.error - worst.q.error;
        heap.push(Segment { a: worst.a, b: mid, q: left });
        heap.push(Segment { a: mid, b: worst.b, q: right });
        // re-sum to stop drift from the incremental updates
        if heap.len() % 64 == 0 {
            total = heap.iter().fold(Quadrature { value: 0.0, error: 0.0 }, |acc, s| Quadrature {
                value: acc.value + s.q.value,
                error: acc.error + s.q.error,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-12, 0.0).unwrap();
        assert_relative_eq!(q.value, 64.0 / 6.0 - 8.0, max_relative = 1e-13);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let q = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn oscillatory() {
        let q = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-10, 1e-14).unwrap();
        assert!(q.value.abs() < 1e-10);
        let q = integrate(f64::exp, -1.0, 1.0, 1e-12, 0.0).unwrap();
        assert_relative_eq!(q.value, 1f64.exp() - (-1f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10, 0.0).unwrap_err();
        assert!(err.estimate > 10.0);
    }
}
