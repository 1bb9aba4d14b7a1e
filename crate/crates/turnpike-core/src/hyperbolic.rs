//! Linearization at the steady state, algebraic Riccati solutions via the
//! ordered Schur form of the Hamiltonian matrix M, the hyperbolic splitting
//! (E-, E+, P), and the p x p matrix R that pins down the constant adjoint
//! of the monotone block.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix};
use num_traits::Float;

use crate::calculus::{dyn_jacobians, hamiltonian_hessians, FdScheme};
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, ordered_schur, qr_rank, sym_eig_bounds, sym_inv_sqrt, symmetrize};
use crate::problem::ProblemDef;
use crate::statics::SteadyState;

pub const RICCATI_TOL: f64 = 1e-8;
const HYPERBOLIC_TOL: f64 = 1e-9;

/// Second-order data at a steady state.
///
/// `a1t` and `a2t` are the control-eliminated drift matrices
/// A_i + B_i U^{-1} H_ux; `m`, `v`, `l` assemble the linearized extremal
/// system z' = M z - V dp_y, dy' = L z + B2 U^{-1} B2^T dp_y; and
/// `r = L M^{-1} V + B2 U^{-1} B2^T`.
pub struct LinearizationBundle {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub hux: DMatrix<f64>,
    pub u_bar: DMatrix<f64>,
    pub w_bar: DMatrix<f64>,
    pub a1t: DMatrix<f64>,
    pub a2t: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl LinearizationBundle {
    pub fn n(&self) -> usize {
        self.a1.nrows()
    }

    pub fn p(&self) -> usize {
        self.a2.nrows()
    }

    pub fn m_dim(&self) -> usize {
        self.b1.ncols()
    }

    /// Assembles and validates a bundle from raw derivative blocks. `u_bar`
    /// and `w_bar` must be symmetric positive definite (assumptions (v)/(vi)
    /// of the underlying theory); violations are hard errors.
    pub fn from_parts(
        a1: DMatrix<f64>,
        a2: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        hux: DMatrix<f64>,
        u_bar: DMatrix<f64>,
        w_bar: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a1.nrows();
        let m = b1.ncols();
        let p = a2.nrows();
        if a1.ncols() != n
            || b1.nrows() != n
            || a2.ncols() != n
            || b2.nrows() != p
            || b2.ncols() != m
            || hux.nrows() != m
            || hux.ncols() != n
            || u_bar.nrows() != m
            || w_bar.nrows() != n
        {
            return Err(Error::InternalContractViolation("bundle block dimensions disagree"));
        }
        let u_bar = symmetrize(&u_bar);
        let w_bar = symmetrize(&w_bar);
        let (u_min, _) = sym_eig_bounds(&u_bar);
        if u_min <= 1e-10 * (1.0 + inf_norm(&u_bar)) {
            return Err(Error::AssumptionViolated { matrix: "U", min_eig: u_min });
        }
        let (w_min, _) = sym_eig_bounds(&w_bar);
        if w_min <= 1e-10 * (1.0 + inf_norm(&w_bar)) {
            return Err(Error::AssumptionViolated { matrix: "W", min_eig: w_min });
        }

        let u_lu = u_bar.clone().lu();
        let uinv_hux = u_lu.solve(&hux).ok_or(Error::AssumptionViolated {
            matrix: "U",
            min_eig: u_min,
        })?;
        let uinv_b1t = u_lu.solve(&b1.transpose()).ok_or(Error::SingularM)?;
        let uinv_b2t = u_lu.solve(&b2.transpose()).ok_or(Error::SingularM)?;
        let a1t = &a1 + &b1 * &uinv_hux;
        let a2t = &a2 + &b2 * &uinv_hux;

        let mut m_mat = DMatrix::zeros(2 * n, 2 * n);
        m_mat.view_mut((0, 0), (n, n)).copy_from(&a1t);
        m_mat.view_mut((0, n), (n, n)).copy_from(&(&b1 * &uinv_b1t));
        m_mat.view_mut((n, 0), (n, n)).copy_from(&w_bar);
        m_mat.view_mut((n, n), (n, n)).copy_from(&(-a1t.transpose()));

        let mut v_mat = DMatrix::zeros(2 * n, p);
        v_mat.view_mut((0, 0), (n, p)).copy_from(&(-(&b1 * &uinv_b2t)));
        v_mat.view_mut((n, 0), (n, p)).copy_from(&a2t.transpose());

        let mut l_mat = DMatrix::zeros(p, 2 * n);
        l_mat.view_mut((0, 0), (p, n)).copy_from(&a2t);
        l_mat.view_mut((0, n), (p, n)).copy_from(&(&b2 * &uinv_b1t));

        let m_lu = m_mat.clone().lu();
        let minv_v = m_lu.solve(&v_mat).ok_or(Error::SingularM)?;
        let r_raw = &l_mat * &minv_v + &b2 * &uinv_b2t;
        let r_norm = inf_norm(&r_raw);
        let asym = inf_norm(&(&r_raw - &r_raw.transpose()));
        if asym > (1e-12 * r_norm).max(1e-12) {
            return Err(Error::InternalContractViolation("R is not symmetric"));
        }
        let r = symmetrize(&r_raw);

        Ok(LinearizationBundle {
            a1,
            a2,
            b1,
            b2,
            hux,
            u_bar,
            w_bar,
            a1t,
            a2t,
            m: m_mat,
            v: v_mat,
            l: l_mat,
            r,
        })
    }
}

/// Builds the bundle from finite-difference derivatives of H at the steady
/// state.
pub fn linearize(
    problem: &ProblemDef,
    steady: &SteadyState,
    scheme: &FdScheme,
) -> Result<LinearizationBundle> {
    let jac = dyn_jacobians(problem, &steady.x, &steady.u, scheme)?;
    let hes = hamiltonian_hessians(problem, &steady.x, &steady.px, &steady.py, &steady.u)?;
    let u_bar = -&hes.huu;
    let (u_min, _) = sym_eig_bounds(&u_bar);
    if u_min <= 1e-10 * (1.0 + inf_norm(&u_bar)) {
        return Err(Error::AssumptionViolated { matrix: "U", min_eig: u_min });
    }
    let uinv_hux = u_bar.clone().lu().solve(&hes.hux).ok_or(Error::SingularM)?;
    let w_bar = -&hes.hxx - &hes.hxu * &uinv_hux;
    LinearizationBundle::from_parts(jac.fx, jac.gx, jac.fu, jac.gu, hes.hux, u_bar, w_bar)
}

/// Hyperbolic splitting of M built from the minimal/maximal Riccati
/// solutions.
pub struct RiccatiSplit {
    pub e_minus: DMatrix<f64>,
    pub e_plus: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub p_inv: DMatrix<f64>,
    pub m_minus: DMatrix<f64>,
    pub m_plus: DMatrix<f64>,
    /// Spectral abscissa of the stable block: min over spec(M-) of -Re.
    pub nu: f64,
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    pub h3: DMatrix<f64>,
    pub h4: DMatrix<f64>,
    /// Copy of the bundle's R, kept here so shooting initialization needs
    /// only the split.
    pub r: DMatrix<f64>,
}

/// Stable/antistable invariant subspaces of M via the ordered real Schur
/// form; E- and E+ are recovered as X2 X1^{-1} from the leading subspace
/// bases and validated against all splitting identities.
pub fn solve_are(bundle: &LinearizationBundle) -> Result<RiccatiSplit> {
    let n = bundle.n();
    let p = bundle.p();
    let (rank, controllable) = check_kalman(&bundle.a1t, &bundle.b1);
    if !controllable {
        return Err(Error::AssumptionViolated {
            matrix: "Kalman pair (A1, B1)",
            min_eig: rank as f64 - n as f64,
        });
    }

    let eigs = bundle.m.clone().complex_eigenvalues();
    let min_abs_re = eigs.iter().fold(f64::INFINITY, |a, l| a.min(l.re.abs()));
    if min_abs_re < HYPERBOLIC_TOL {
        return Err(Error::NotHyperbolic { min_abs_re });
    }

    let e_minus = graph_subspace_solution(&bundle.m, n, true)?;
    let e_plus = graph_subspace_solution(&bundle.m, n, false)?;

    let s_mat = bundle.m.view((0, n), (n, n)).into_owned();
    for (x, name) in [(&e_minus, "E-"), (&e_plus, "E+")] {
        let res = x * &bundle.a1t + bundle.a1t.transpose() * x + x * &s_mat * x - &bundle.w_bar;
        let residual = inf_norm(&res);
        if residual > RICCATI_TOL {
            let _ = name;
            return Err(Error::RiccatiResidualTooLarge { residual });
        }
    }
    let (_, e_minus_max) = sym_eig_bounds(&e_minus);
    let (e_plus_min, _) = sym_eig_bounds(&e_plus);
    if e_minus_max >= 0.0 || e_plus_min <= 0.0 {
        return Err(Error::SubspaceDegenerate);
    }

    let mut p_mat = DMatrix::zeros(2 * n, 2 * n);
    p_mat.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    p_mat.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    p_mat.view_mut((n, 0), (n, n)).copy_from(&e_minus);
    p_mat.view_mut((n, n), (n, n)).copy_from(&e_plus);
    let p_inv = p_mat.clone().try_inverse().ok_or(Error::SubspaceDegenerate)?;
    if inf_norm(&(&p_mat * &p_inv - DMatrix::identity(2 * n, 2 * n))) > 1e-10 {
        return Err(Error::SubspaceDegenerate);
    }
    // Closed-form inverse in terms of E- and E+.
    let gap = &e_plus - &e_minus;
    let gap_inv = gap.clone().try_inverse().ok_or(Error::SubspaceDegenerate)?;
    let e_minus_inv = e_minus.clone().try_inverse().ok_or(Error::SubspaceDegenerate)?;
    let mut p_inv_cf = DMatrix::zeros(2 * n, 2 * n);
    p_inv_cf
        .view_mut((0, 0), (n, n))
        .copy_from(&(&e_minus_inv * &e_plus * &gap_inv * &e_minus));
    p_inv_cf.view_mut((0, n), (n, n)).copy_from(&(-&gap_inv));
    p_inv_cf.view_mut((n, 0), (n, n)).copy_from(&(-(&gap_inv * &e_minus)));
    p_inv_cf.view_mut((n, n), (n, n)).copy_from(&gap_inv);
    if inf_norm(&(&p_inv - &p_inv_cf)) > 1e-8 * (1.0 + inf_norm(&p_inv)) {
        return Err(Error::SubspaceDegenerate);
    }

    let m_minus = &bundle.a1t + &s_mat * &e_minus;
    let m_plus = &bundle.a1t + &s_mat * &e_plus;

    // P^{-1} M P must be block-diagonal(M-, M+).
    let similar = &p_inv * &bundle.m * &p_mat;
    let tol_blk = 1e-8 * (1.0 + inf_norm(&bundle.m));
    if inf_norm(&(similar.view((0, 0), (n, n)).into_owned() - &m_minus)) > tol_blk
        || inf_norm(&(similar.view((n, n), (n, n)).into_owned() - &m_plus)) > tol_blk
        || inf_norm(&similar.view((0, n), (n, n)).into_owned()) > tol_blk
        || inf_norm(&similar.view((n, 0), (n, n)).into_owned()) > tol_blk
    {
        return Err(Error::SubspaceDegenerate);
    }

    // Mirror spectrum: spec(M+) = -spec(M-).
    let mut neg_minus: Vec<Complex<f64>> =
        m_minus.clone().complex_eigenvalues().iter().map(|l| -l).collect();
    let mut plus: Vec<Complex<f64>> = m_plus.clone().complex_eigenvalues().iter().copied().collect();
    let key = |c: &Complex<f64>| (c.re, c.im);
    neg_minus.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    plus.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    for (a, b) in neg_minus.iter().zip(plus.iter()) {
        if (a - b).norm_sqr().sqrt() > 1e-6 * (1.0 + a.norm_sqr().sqrt()) {
            return Err(Error::SubspaceDegenerate);
        }
    }

    // Lyapunov identity (E+ - E-) M+ + M-^T (E+ - E-) = 0.
    let lyap = &gap * &m_plus + m_minus.transpose() * &gap;
    if inf_norm(&lyap) > 1e-8 * (1.0 + inf_norm(&gap)) {
        return Err(Error::SubspaceDegenerate);
    }

    let nu = m_minus
        .clone()
        .complex_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, l| a.min(-l.re));
    if !(nu > 0.0) {
        return Err(Error::NotHyperbolic { min_abs_re: nu });
    }

    let minv_v = bundle.m.clone().lu().solve(&bundle.v).ok_or(Error::SingularM)?;
    let pinv_minv_v = &p_inv * &minv_v;
    let h1 = minv_v.view((0, 0), (n, p)).into_owned();
    let h2 = minv_v.view((n, 0), (n, p)).into_owned();
    let h3 = pinv_minv_v.view((0, 0), (n, p)).into_owned();
    let h4 = pinv_minv_v.view((n, 0), (n, p)).into_owned();

    Ok(RiccatiSplit {
        e_minus,
        e_plus,
        p: p_mat,
        p_inv,
        m_minus,
        m_plus,
        nu,
        h1,
        h2,
        h3,
        h4,
        r: bundle.r.clone(),
    })
}

/// Leading invariant subspace of M as a graph subspace [I; X]: returns the
/// symmetrized X = X2 X1^{-1}.
fn graph_subspace_solution(m: &DMatrix<f64>, n: usize, stable: bool) -> Result<DMatrix<f64>> {
    let os = ordered_schur(m, stable)?;
    if os.n_selected != n {
        return Err(Error::NotHyperbolic { min_abs_re: 0.0 });
    }
    let x1 = os.q.view((0, 0), (n, n)).into_owned();
    let x2 = os.q.view((n, 0), (n, n)).into_owned();
    let x1_inv = x1.clone().try_inverse().ok_or(Error::SubspaceDegenerate)?;
    if inf_norm(&x1_inv) * inf_norm(&x1) > 1e12 {
        return Err(Error::SubspaceDegenerate);
    }
    Ok(symmetrize(&(x2 * x1_inv)))
}

/// Rank of [B, AB, ..., A^{k-1}B] via column-pivoted QR; controllable iff
/// the rank is full.
pub fn check_kalman(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (usize, bool) {
    let k = a.nrows();
    let m = b.ncols();
    if k == 0 || m == 0 {
        return (0, k == 0);
    }
    let mut kal = DMatrix::zeros(k, k * m);
    let mut block = b.clone();
    for j in 0..k {
        kal.view_mut((0, j * m), (k, m)).copy_from(&block);
        block = a * &block;
    }
    let rank = qr_rank(&kal, 1e-10 * kal.norm());
    (rank, rank == k)
}

/// Checks B^T (A A^T + B B^T)^{-1} B <= I (the contraction bound used to
/// prove R positive definite), returning its largest eigenvalue.
pub fn contraction_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, bool)> {
    let s = a * a.transpose() + b * b.transpose();
    let (s_min, s_max) = sym_eig_bounds(&s);
    if s_min <= 1e-12 * (1.0 + s_max) {
        return Err(Error::KernelOverlap);
    }
    let sol = s.clone().lu().solve(b).ok_or(Error::KernelOverlap)?;
    let gram = symmetrize(&(b.transpose() * sol));
    let (_, max_eig) = sym_eig_bounds(&gram);
    Ok((max_eig, max_eig <= 1.0 + 1e-10))
}

/// Recomputes R through the explicit two-term decomposition (whitened by
/// W^{-1/2} and U^{-1/2}), cross-checks it against the Schur-type formula in
/// the bundle, and returns its minimal eigenvalue together with the explicit
/// matrix.
pub fn verify_r_spd(bundle: &LinearizationBundle) -> Result<(f64, DMatrix<f64>)> {
    let p = bundle.p();
    if p == 0 {
        return Err(Error::InvalidParams("R verification needs p >= 1".into()));
    }
    let w_is = sym_inv_sqrt(&bundle.w_bar, 1e-12)?;
    let u_is = sym_inv_sqrt(&bundle.u_bar, 1e-12)?;
    let a1 = &bundle.a1t * &w_is;
    let a2 = &bundle.a2t * &w_is;
    let b1 = &bundle.b1 * &u_is;
    let b2 = &bundle.b2 * &u_is;

    let n = bundle.n();
    let m = bundle.m_dim();
    let s = &a1 * a1.transpose() + &b1 * b1.transpose();
    let s_lu = s.clone().lu();
    let sa = s_lu.solve(&a1).ok_or(Error::KernelOverlap)?;
    let sb = s_lu.solve(&b1).ok_or(Error::KernelOverlap)?;
    let term_a = &a2 * (DMatrix::identity(n, n) - a1.transpose() * sa) * a2.transpose();
    let term_b = &b2 * (DMatrix::identity(m, m) - b1.transpose() * sb) * b2.transpose();
    let explicit = symmetrize(&(term_a + term_b));

    let mismatch = inf_norm(&(&explicit - &bundle.r)) / inf_norm(&bundle.r).max(1.0);
    if mismatch > 1e-8 {
        return Err(Error::FormulaMismatch { mismatch });
    }
    let (min_eig, _) = sym_eig_bounds(&explicit);
    if min_eig <= 0.0 {
        return Err(Error::RNotPositive { min_eig });
    }
    Ok((min_eig, explicit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_problem, Params};
    use crate::statics::solve_static;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn steady(name: &str, d: &[f64]) -> (ProblemDef, SteadyState) {
        let pb = make_problem(name, &Params::new()).unwrap();
        let d = DVector::from_row_slice(d);
        let s = solve_static(&pb, &d, &pb.static_guess).unwrap();
        (pb, s)
    }

    #[test]
    fn toy_bundle_matrices() {
        let (pb, s) = steady("toy", &[0.5]);
        let b = linearize(&pb, &s, &FdScheme::first()).unwrap();
        assert_relative_eq!(b.a1[(0, 0)], 0.0, epsilon = 1e-9);
        assert_relative_eq!(b.b1[(0, 0)], 1.0, epsilon = 1e-9);
        assert_relative_eq!(b.hux[(0, 0)], 0.0, epsilon = 1e-9);
        assert_relative_eq!(b.u_bar[(0, 0)], 1.0, epsilon = 1e-9);
        assert_relative_eq!(b.w_bar[(0, 0)], 1.0, epsilon = 1e-9);
        let m_expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(inf_norm(&(&b.m - &m_expect)) < 1e-8);
        assert_relative_eq!(b.v[(0, 0)], 0.0, epsilon = 1e-8);
        assert_relative_eq!(b.v[(1, 0)], 1.0, epsilon = 1e-8);
        assert_relative_eq!(b.l[(0, 0)], 1.0, epsilon = 1e-8);
        assert_relative_eq!(b.l[(0, 1)], 0.0, epsilon = 1e-8);
        assert_relative_eq!(b.r[(0, 0)], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn toy_noy_bundle_empty_y_blocks() {
        let (pb, s) = steady("toy_noy", &[]);
        let b = linearize(&pb, &s, &FdScheme::first()).unwrap();
        assert_eq!(b.p(), 0);
        assert_eq!(b.v.ncols(), 0);
        assert_eq!(b.l.nrows(), 0);
        assert_eq!(b.r.nrows(), 0);
        let m_expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(inf_norm(&(&b.m - &m_expect)) < 1e-8);
    }

    #[test]
    fn zermelo_assumption_matrices() {
        let (pb, s) = steady("zermelo", &[5.0]);
        let b = linearize(&pb, &s, &FdScheme::first()).unwrap();
        // d2H/du2 at the steady point is -diag(2, 2).
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!(inf_norm(&(&b.u_bar - &expect)) < 1e-6);
        assert_relative_eq!(b.w_bar[(0, 0)], 4.0, epsilon = 1e-6);
        let (min_eig, _) = sym_eig_bounds(&b.u_bar);
        assert!(min_eig > 1.9);
    }

    #[test]
    fn toy_riccati_split() {
        let (pb, s) = steady("toy", &[0.5]);
        let b = linearize(&pb, &s, &FdScheme::first()).unwrap();
        let split = solve_are(&b).unwrap();
        assert_relative_eq!(split.e_minus[(0, 0)], -1.0, epsilon = 1e-8);
        assert_relative_eq!(split.e_plus[(0, 0)], 1.0, epsilon = 1e-8);
        assert_relative_eq!(split.m_minus[(0, 0)], -1.0, epsilon = 1e-8);
        assert_relative_eq!(split.m_plus[(0, 0)], 1.0, epsilon = 1e-8);
        assert_relative_eq!(split.nu, 1.0, epsilon = 1e-8);
        assert_relative_eq!(split.h1[(0, 0)], 1.0, epsilon = 1e-8);
        assert_relative_eq!(split.h2[(0, 0)], 0.0, epsilon = 1e-8);
        assert_relative_eq!(split.h3[(0, 0)], 0.5, epsilon = 1e-8);
        assert_relative_eq!(split.h4[(0, 0)], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn kalman_examples() {
        // toy stacked pair.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(check_kalman(&a, &b), (2, true));

        let z = DMatrix::zeros(2, 2);
        assert_eq!(check_kalman(&z, &DMatrix::zeros(2, 1)), (0, false));

        // zermelo stacked pair at the steady state: A = 0, B = I.
        let (pb, s) = steady("zermelo", &[5.0]);
        let bundle = linearize(&pb, &s, &FdScheme::first()).unwrap();
        let n = bundle.n();
        let p = bundle.p();
        let mut a_st = DMatrix::zeros(n + p, n + p);
        a_st.view_mut((0, 0), (n, n)).copy_from(&bundle.a1t);
        a_st.view_mut((n, 0), (p, n)).copy_from(&bundle.a2t);
        let mut b_st = DMatrix::zeros(n + p, bundle.m_dim());
        b_st.view_mut((0, 0), (n, bundle.m_dim())).copy_from(&bundle.b1);
        b_st.view_mut((n, 0), (p, bundle.m_dim())).copy_from(&bundle.b2);
        assert_eq!(check_kalman(&a_st, &b_st), (2, true));
    }

    #[test]
    fn contraction_examples() {
        let i2 = DMatrix::identity(2, 2);
        let (max_eig, holds) = contraction_check(&i2, &i2).unwrap();
        assert_relative_eq!(max_eig, 0.5, epsilon = 1e-12);
        assert!(holds);

        // A = 0, B invertible: the bound is attained.
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let (max_eig, holds) = contraction_check(&DMatrix::zeros(2, 2), &b).unwrap();
        assert_relative_eq!(max_eig, 1.0, epsilon = 1e-10);
        assert!(holds);

        assert!(matches!(
            contraction_check(&DMatrix::zeros(2, 2), &DMatrix::zeros(2, 1)),
            Err(Error::KernelOverlap)
        ));
    }

    #[test]
    fn r_verification_toy_and_zermelo() {
        let (pb, s) = steady("toy", &[0.5]);
        let b = linearize(&pb, &s, &FdScheme::first()).unwrap();
        let (min_eig, explicit) = verify_r_spd(&b).unwrap();
        assert_relative_eq!(min_eig, 1.0, epsilon = 1e-7);
        assert_relative_eq!(explicit[(0, 0)], 1.0, epsilon = 1e-7);

        let (pb, s) = steady("zermelo", &[5.0]);
        let b = linearize(&pb, &s, &FdScheme::first()).unwrap();
        let (min_eig, _) = verify_r_spd(&b).unwrap();
        assert!(min_eig > 0.0);
        // For zermelo R = B2 U^{-1} B2^T = 1/2.
        assert_relative_eq!(b.r[(0, 0)], 0.5, epsilon = 1e-6);
    }
}
