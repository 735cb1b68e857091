//! Small dense complex linear-algebra helpers over nalgebra.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

/// `e^{A}` by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    a.exp()
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = a
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Linalg("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = a.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_columns(
        &idx.iter()
            .map(|&i| eig.eigenvectors.column(i).clone_owned())
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .collect()
}

pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}
