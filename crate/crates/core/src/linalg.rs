//! Small dense linear-algebra helpers shared by the synthesis and analysis code.
//!
//! Everything here works on `nalgebra` dynamic matrices; the systems in this
//! crate have at most a handful of states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Relative singular-value threshold used for numeric rank, scaled by the
/// matrix dimension.
pub const RANK_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of a real square matrix, in no particular order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Characteristic polynomial `det(sI - A)` by the Faddeev-LeVerrier recursion.
///
/// Coefficients are ascending and the result is monic.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Polynomial {
    assert!(a.is_square(), "characteristic polynomial of a non-square matrix");
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let identity = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &identity * coeffs[n - k + 1];
        coeffs[n - k] = -(a * &m).trace() / k as f64;
    }
    Polynomial::new(coeffs).expect("monic characteristic polynomial is nonzero")
}

/// `[B, AB, A²B, …, Aⁿ⁻¹B]`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "state matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "input matrix has {} rows, state matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = DMatrix::<f64>::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        ctrb.columns_mut(k * m, m).copy_from(&block);
        block = a * block;
    }
    Ok(ctrb)
}

/// Numeric rank: singular values above `σ_max · 1e-9 · max(rows, cols)`.
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let threshold = smax * RANK_RELATIVE_TOLERANCE * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > threshold).count()
}

/// 2-norm condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// True when every non-real value has a conjugate partner (multiset match).
pub fn is_conjugate_closed(values: &[Complex64], rel_tol: f64) -> bool {
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = rel_tol * scale;
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        let z = values[i];
        if z.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..values.len())
            .filter(|&j| j != i && !used[j])
            .find(|&j| (values[j] - z.conj()).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// Best-assignment comparison of two pole sets.
///
/// Returns the smallest achievable maximum of `|found − target| / |target|`
/// over all pairings (exhaustive for the small sets used here; falls back to
/// greedy nearest matching above 8 values).
pub fn max_relative_pole_error(found: &[Complex64], target: &[Complex64]) -> f64 {
    assert_eq!(found.len(), target.len(), "pole sets of different size");
    let rel = |f: Complex64, t: Complex64| {
        let d = (f - t).norm();
        if t.norm() > 0.0 {
            d / t.norm()
        } else {
            d
        }
    };
    let n = target.len();
    if n > 8 {
        let mut used = vec![false; n];
        let mut worst = 0.0_f64;
        for &t in target {
            let (j, e) = (0..n)
                .filter(|&j| !used[j])
                .map(|j| (j, rel(found[j], t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("sets have equal length");
            used[j] = true;
            worst = worst.max(e);
        }
        return worst;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let worst = p
            .iter()
            .enumerate()
            .map(|(i, &j)| rel(found[j], target[i]))
            .fold(0.0, f64::max);
        best = best.min(worst);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Unit-norm eigenvector for each supplied eigenvalue, as matrix columns.
///
/// Each column is the right singular vector of `A − λI` belonging to its
/// smallest singular value.
pub fn eigenvector_matrix(a: &DMatrix<f64>, eigenvalues: &[Complex64]) -> DMatrix<Complex64> {
    let n = a.nrows();
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let mut vecs = DMatrix::<Complex64>::zeros(n, eigenvalues.len());
    for (col, &lambda) in eigenvalues.iter().enumerate() {
        let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested V^H");
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty matrix");
        let v: DVector<Complex64> = v_t.row(idx).transpose().map(|z| z.conj());
        let norm = v.norm();
        vecs.set_column(col, &(v / Complex64::new(norm, 0.0)));
    }
    vecs
}

/// Spectral condition number of a complex matrix.
pub fn complex_condition_number(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}
