use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};
use crate::scalar::{dist, Real};

use super::{check_dims, EmpiricalMeasure};

pub type TestFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBound<T> {
    /// `max_f |(f, a) - (f, b)|`, a lower bound on `W_1(a, b)`.
    pub value: T,
    /// Index of the maximising test function.
    pub best: usize,
}

/// Largest pair count audited exhaustively; beyond it pairs are sampled.
const EXHAUSTIVE_AUDIT: usize = 2_000_000;

fn audit_lipschitz<T: Real>(f: &TestFn<T>, pts: &[&[T]], index: usize) -> Result<()> {
    let n = pts.len();
    let vals: Vec<T> = pts.iter().map(|x| f(x)).collect();
    let slack = T::of(1e-9);
    let check = |i: usize, j: usize| -> Result<()> {
        let d = dist(pts[i], pts[j]);
        if (vals[i] - vals[j]).abs() > d * (T::one() + slack) + slack {
            return Err(Error::RejectedFunction(format!(
                "test function {index} is not 1-Lipschitz between points {i} and {j}"
            )));
        }
        Ok(())
    };
    if n * n / 2 <= EXHAUSTIVE_AUDIT {
        for i in 0..n {
            for j in 0..i {
                check(i, j)?;
            }
        }
    } else {
        let mut rng = Stream::from_seed(index as u64, Purpose::Audit);
        for _ in 0..EXHAUSTIVE_AUDIT {
            let i = (rng.uniform_open() * n as f64) as usize % n;
            let j = (rng.uniform_open() * n as f64) as usize % n;
            check(i, j)?;
        }
    }
    Ok(())
}

/// Kantorovich-Rubinstein lower bound on `W_1` from a finite family of test
/// functions, each audited for the 1-Lipschitz property on the union of the
/// two supports.
pub fn w1_dual_lower_bound<T: Real>(
    a: &EmpiricalMeasure<T>,
    b: &EmpiricalMeasure<T>,
    test_fns: &[TestFn<T>],
) -> Result<DualBound<T>> {
    check_dims(a, b)?;
    let pts: Vec<&[T]> = (0..a.len())
        .map(|i| a.point(i))
        .chain((0..b.len()).map(|j| b.point(j)))
        .collect();
    let mut best = DualBound {
        value: T::zero(),
        best: 0,
    };
    for (k, f) in test_fns.iter().enumerate() {
        audit_lipschitz(f, &pts, k)?;
        let gap = (a.expect(f) - b.expect(f)).abs();
        if gap > best.value {
            best = DualBound { value: gap, best: k };
        }
    }
    Ok(best)
}

/// `±x_k` for every coordinate.
pub fn coordinate_family<T: Real>(dim: usize) -> Vec<TestFn<T>> {
    let mut out: Vec<TestFn<T>> = Vec::new();
    for k in 0..dim {
        out.push(Box::new(move |x: &[T]| x[k]));
        out.push(Box::new(move |x: &[T]| -x[k]));
    }
    out
}

/// `min(|x - c|, r)` for each centre and radius.
pub fn clipped_norm_family<T: Real>(centres: &[Vec<T>], radii: &[T]) -> Vec<TestFn<T>> {
    let mut out: Vec<TestFn<T>> = Vec::new();
    for c in centres {
        for &r in radii {
            let c = c.clone();
            out.push(Box::new(move |x: &[T]| dist(x, &c).min(r)));
        }
    }
    out
}
