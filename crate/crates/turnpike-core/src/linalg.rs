//! Dense linear-algebra helpers: ordered real Schur form, rank via
//! column-pivoted QR, symmetric inverse square roots.
//!
//! Everything here targets the small matrices of this crate (a handful of
//! rows); clarity and robustness win over scalability.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Extreme eigenvalues of a symmetric matrix. Empty matrices yield (0, 0).
pub fn sym_eig_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in eig.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    (lo, hi)
}

/// Inverse symmetric square root V diag(1/sqrt(lambda)) V^T.
///
/// Fails when an eigenvalue sits below `floor`.
pub fn sym_inv_sqrt(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let mut min_eig = f64::INFINITY;
    for &l in eig.eigenvalues.iter() {
        min_eig = min_eig.min(l);
    }
    if min_eig < floor {
        return Err(Error::AssumptionViolated {
            matrix: "symmetric square root argument",
            min_eig,
        });
    }
    let mut d = DMatrix::zeros(m.nrows(), m.nrows());
    for i in 0..m.nrows() {
        d[(i, i)] = 1.0 / eig.eigenvalues[i].sqrt();
    }
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..m.nrows() {
        let mut row = 0.0;
        for j in 0..m.ncols() {
            row += m[(i, j)].abs();
        }
        best = best.max(row);
    }
    best
}

pub fn vec_inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Rank from a column-pivoted QR: diagonal entries of R above `threshold`.
pub fn qr_rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let k = m.nrows().min(m.ncols());
    (0..k).filter(|&i| r[(i, i)].abs() > threshold).count()
}

/// Infinity-norm condition estimate via the explicit inverse (small systems).
pub fn cond_inf(m: &DMatrix<f64>) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) => inf_norm(m) * inf_norm(&inv),
        None => f64::INFINITY,
    }
}

/// Real Schur form with selected eigenvalues ordered first.
pub struct OrderedSchur {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// Dimension of the leading invariant subspace (sum of selected block sizes).
    pub n_selected: usize,
}

/// Computes the real Schur form M = Q T Q^T and reorders the quasi-triangular
/// T so that every diagonal block whose eigenvalues satisfy the selection
/// (Re < 0 when `stable_first`, Re > 0 otherwise) comes first. Adjacent blocks
/// are swapped with the direct method: solve the small Sylvester equation
/// A11 X - X A22 = A12, orthonormalize [-X; I], and apply the rotation.
pub fn ordered_schur(m: &DMatrix<f64>, stable_first: bool) -> Result<OrderedSchur> {
    let k = m.nrows();
    if k != m.ncols() {
        return Err(Error::InternalContractViolation("ordered_schur needs a square matrix"));
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::SingularM)?;
    let (mut q, mut t) = schur.unpack();
    let scale = inf_norm(m).max(1.0);

    split_real_pair_blocks(&mut q, &mut t, scale)?;

    // Block partition of the quasi-triangular T.
    let mut blocks = partition_blocks(&t, scale);

    // Bubble selected blocks to the front.
    loop {
        let mut swapped = false;
        for b in 0..blocks.len().saturating_sub(1) {
            let (i1, s1) = blocks[b];
            let (_i2, s2) = blocks[b + 1];
            let left_sel = select(&t, i1, s1, stable_first);
            let right_sel = select(&t, i1 + s1, s2, stable_first);
            if right_sel && !left_sel {
                swap_adjacent(&mut q, &mut t, i1, s1, s2, scale)?;
                blocks[b] = (i1, s2);
                blocks[b + 1] = (i1 + s2, s1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }

    let mut n_selected = 0;
    for &(i, s) in &blocks {
        if select(&t, i, s, stable_first) {
            n_selected += s;
        } else {
            break;
        }
    }

    // The rotations are orthogonal, but guard against drift anyway.
    let residual = inf_norm(&(&q * &t * q.transpose() - m));
    if residual > 1e-9 * scale {
        return Err(Error::SubspaceDegenerate);
    }
    Ok(OrderedSchur { q, t, n_selected })
}

fn partition_blocks(t: &DMatrix<f64>, scale: f64) -> Vec<(usize, usize)> {
    let k = t.nrows();
    let tiny = 1e-13 * scale;
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < k {
        if i + 1 < k && t[(i + 1, i)].abs() > tiny {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn select(t: &DMatrix<f64>, i: usize, s: usize, stable: bool) -> bool {
    let re = if s == 1 {
        t[(i, i)]
    } else {
        0.5 * (t[(i, i)] + t[(i + 1, i + 1)])
    };
    if stable {
        re < 0.0
    } else {
        re > 0.0
    }
}

/// A 2x2 diagonal block of a converged real Schur form normally encodes a
/// complex pair. If its eigenvalues turn out real, rotate it upper-triangular
/// so the sorting logic can treat the two eigenvalues independently.
fn split_real_pair_blocks(q: &mut DMatrix<f64>, t: &mut DMatrix<f64>, scale: f64) -> Result<()> {
    let k = t.nrows();
    let tiny = 1e-13 * scale;
    let mut i = 0;
    while i + 1 < k {
        if t[(i + 1, i)].abs() <= tiny {
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc < 0.0 {
            i += 2;
            continue;
        }
        // Real eigenvalues: Givens rotation aligning the first column with an
        // eigenvector of the larger eigenvalue.
        let lambda = 0.5 * (a + d) + disc.sqrt().copysign(0.5 * (a + d));
        // Eigenvector of [[a,b],[c,d]] for lambda.
        let (vx, vy) = if c.abs() > b.abs() {
            (lambda - d, c)
        } else {
            (b, lambda - a)
        };
        let nrm = (vx * vx + vy * vy).sqrt();
        if nrm <= tiny {
            i += 2;
            continue;
        }
        let (cs, sn) = (vx / nrm, vy / nrm);
        let g = DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
        apply_rotation(q, t, i, &g);
        t[(i + 1, i)] = 0.0;
        i += 2;
    }
    Ok(())
}

fn swap_adjacent(
    q: &mut DMatrix<f64>,
    t: &mut DMatrix<f64>,
    i: usize,
    s1: usize,
    s2: usize,
    scale: f64,
) -> Result<()> {
    let s = s1 + s2;
    let a11 = t.view((i, i), (s1, s1)).into_owned();
    let a12 = t.view((i, i + s1), (s1, s2)).into_owned();
    let a22 = t.view((i + s1, i + s1), (s2, s2)).into_owned();

    // Sylvester A11 X - X A22 = A12 via the Kronecker form.
    let mut kron = DMatrix::zeros(s1 * s2, s1 * s2);
    for col in 0..s2 {
        for row in 0..s1 {
            let eq = col * s1 + row;
            for r2 in 0..s1 {
                kron[(eq, col * s1 + r2)] += a11[(row, r2)];
            }
            for c2 in 0..s2 {
                kron[(eq, c2 * s1 + row)] -= a22[(c2, col)];
            }
        }
    }
    let rhs = DVector::from_fn(s1 * s2, |e, _| a12[(e % s1, e / s1)]);
    let x = kron.lu().solve(&rhs).ok_or(Error::SubspaceDegenerate)?;

    // Orthonormal basis of span([-X; I]) completed to a full rotation.
    let mut z = DMatrix::zeros(s, s2);
    for col in 0..s2 {
        for row in 0..s1 {
            z[(row, col)] = -x[col * s1 + row];
        }
        z[(s1 + col, col)] = 1.0;
    }
    let g = complete_orthonormal(&z)?;

    let block = t.view((i, i), (s, s)).into_owned();
    let rotated = g.transpose() * &block * &g;
    let spill = rotated.view((s2, 0), (s1, s2)).amax();
    if spill > 1e-7 * scale {
        return Err(Error::SubspaceDegenerate);
    }
    apply_rotation(q, t, i, &g);
    for r in s2..s {
        for c in 0..s2 {
            t[(i + r, i + c)] = 0.0;
        }
    }
    Ok(())
}

/// Applies the orthogonal `g` acting on rows/columns i..i+g.len of T and the
/// matching columns of Q.
fn apply_rotation(q: &mut DMatrix<f64>, t: &mut DMatrix<f64>, i: usize, g: &DMatrix<f64>) {
    let s = g.nrows();
    let k = t.nrows();
    let rows = t.view((i, 0), (s, k)).into_owned();
    t.view_mut((i, 0), (s, k)).copy_from(&(g.transpose() * rows));
    let cols = t.view((0, i), (k, s)).into_owned();
    t.view_mut((0, i), (k, s)).copy_from(&(cols * g));
    let qc = q.view((0, i), (k, s)).into_owned();
    q.view_mut((0, i), (k, s)).copy_from(&(qc * g));
}

/// Orthonormalizes the (full column rank) columns of `z` and completes them
/// with unit vectors to an orthogonal square matrix.
fn complete_orthonormal(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (s, s2) = (z.nrows(), z.ncols());
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(s);
    for c in 0..s2 {
        let mut v = z.column(c).into_owned();
        for u in &cols {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        // Re-orthogonalize once; plenty at these sizes.
        for u in &cols {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let nrm = v.norm();
        if nrm < 1e-12 {
            return Err(Error::SubspaceDegenerate);
        }
        cols.push(v / nrm);
    }
    while cols.len() < s {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for e in 0..s {
            let mut v = DVector::zeros(s);
            v[e] = 1.0;
            for u in &cols {
                let proj = u.dot(&v);
                v -= u * proj;
            }
            let nrm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, v));
            }
        }
        let (nrm, v) = best.ok_or(Error::SubspaceDegenerate)?;
        if nrm < 1e-12 {
            return Err(Error::SubspaceDegenerate);
        }
        cols.push(v / nrm);
    }
    let mut g = DMatrix::zeros(s, s);
    for (c, v) in cols.iter().enumerate() {
        g.set_column(c, v);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ordered_schur_saddle() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let os = ordered_schur(&m, true).unwrap();
        assert_eq!(os.n_selected, 1);
        assert_relative_eq!(os.t[(0, 0)], -1.0, epsilon = 1e-12);
        assert_relative_eq!(os.t[(1, 1)], 1.0, epsilon = 1e-12);
        let os = ordered_schur(&m, false).unwrap();
        assert_eq!(os.n_selected, 1);
        assert_relative_eq!(os.t[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ordered_schur_random_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let k = rng.random_range(2..=8);
            let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
            let os = match ordered_schur(&m, true) {
                Ok(os) => os,
                // Eigenvalues straddling the axis with Re ~ 0 are fine to skip.
                Err(_) => continue,
            };
            let rec = &os.q * &os.t * os.q.transpose();
            assert!(inf_norm(&(rec - &m)) < 1e-9 * inf_norm(&m).max(1.0));
            // Leading block must carry exactly the stable eigenvalues.
            let stable_true = m
                .clone()
                .complex_eigenvalues()
                .iter()
                .filter(|l| l.re < 0.0)
                .count();
            assert_eq!(os.n_selected, stable_true);
            // Orthogonality of Q.
            let qtq = os.q.transpose() * &os.q;
            assert!(inf_norm(&(qtq - DMatrix::identity(k, k))) < 1e-11);
        }
    }

    #[test]
    fn qr_rank_detects_deficiency() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        assert_eq!(qr_rank(&m, 1e-10 * m.norm()), 2);
        assert_eq!(qr_rank(&DMatrix::zeros(2, 2), 1e-10), 0);
    }

    #[test]
    fn sym_inv_sqrt_roundtrip() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = sym_inv_sqrt(&a, 1e-12).unwrap();
        let ident = &s * &a * &s;
        assert!(inf_norm(&(ident - DMatrix::identity(2, 2))) < 1e-12);
    }
}
