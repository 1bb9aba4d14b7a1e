//! Finite-difference derivatives, Hamiltonian evaluation and pointwise
//! Hamiltonian maximization over the control box.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, sym_eig_bounds, symmetrize, vec_inf_norm};
use crate::problem::ProblemDef;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    FirstCentral,
    SecondCentral,
}

/// Step rule h_i = base_step * max(1, |z_i|); the defaults balance
/// truncation against rounding for first and second derivatives.
#[derive(Debug, Clone, Copy)]
pub struct FdScheme {
    pub order: FdOrder,
    pub base_step: f64,
}

impl FdScheme {
    pub fn first() -> Self {
        FdScheme { order: FdOrder::FirstCentral, base_step: f64::EPSILON.cbrt() }
    }

    pub fn second() -> Self {
        FdScheme { order: FdOrder::SecondCentral, base_step: f64::EPSILON.powf(0.25) }
    }

    pub fn step(&self, z_i: f64) -> f64 {
        self.base_step * z_i.abs().max(1.0)
    }
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme::first()
    }
}

/// Central-difference Jacobian; exact for affine maps up to rounding.
pub fn fd_jacobian<F>(func: F, z: &DVector<f64>, scheme: &FdScheme) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k = z.len();
    let probe = func(z);
    let l = probe.len();
    let mut jac = DMatrix::zeros(l, k);
    let mut zp = z.clone();
    for j in 0..k {
        let h = scheme.step(z[j]);
        zp[j] = z[j] + h;
        let fp = func(&zp);
        zp[j] = z[j] - h;
        let fm = func(&zp);
        zp[j] = z[j];
        for i in 0..l {
            let d = (fp[i] - fm[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFiniteDerivative);
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

pub fn fd_gradient<F>(func: F, z: &DVector<f64>, scheme: &FdScheme) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let jac = fd_jacobian(|w| DVector::from_element(1, func(w)), z, scheme)?;
    Ok(jac.row(0).transpose())
}

/// Symmetric finite-difference Hessian (four-point cross rule off the
/// diagonal); exact for cubics along each coordinate.
pub fn fd_hessian<F>(func: F, z: &DVector<f64>, scheme: &FdScheme) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let k = z.len();
    let mut hess = DMatrix::zeros(k, k);
    let f0 = func(z);
    let mut zp = z.clone();
    for i in 0..k {
        let hi = scheme.step(z[i]);
        zp[i] = z[i] + hi;
        let fp = func(&zp);
        zp[i] = z[i] - hi;
        let fm = func(&zp);
        zp[i] = z[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..k {
            let hj = scheme.step(z[j]);
            zp[i] = z[i] + hi;
            zp[j] = z[j] + hj;
            let fpp = func(&zp);
            zp[j] = z[j] - hj;
            let fpm = func(&zp);
            zp[i] = z[i] - hi;
            let fmm = func(&zp);
            zp[j] = z[j] + hj;
            let fmp = func(&zp);
            zp[i] = z[i];
            zp[j] = z[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDerivative);
    }
    Ok(hess)
}

/// H(x, px, py, u) = <px, f> + <py, g> - f0, with the cost multiplier fixed
/// at -1.
pub fn hamiltonian(
    problem: &ProblemDef,
    x: &DVector<f64>,
    px: &DVector<f64>,
    py: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    let (dx, dy) = problem.eval_rhs(x, u)?;
    let h = px.dot(&dx) + py.dot(&dy) - problem.f0(x, u);
    if !h.is_finite() {
        return Err(Error::NonFiniteDynamics);
    }
    Ok(h)
}

/// First derivatives of f, g, f0 at (x, u), as used by the static KKT system
/// and the linearization.
pub struct DynJacobians {
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    pub gx: DMatrix<f64>,
    pub gu: DMatrix<f64>,
    pub f0x: DVector<f64>,
    pub f0u: DVector<f64>,
}

pub fn dyn_jacobians(
    problem: &ProblemDef,
    x: &DVector<f64>,
    u: &DVector<f64>,
    scheme: &FdScheme,
) -> Result<DynJacobians> {
    let fx = fd_jacobian(|w| problem.f(w, u), x, scheme)?;
    let fu = fd_jacobian(|w| problem.f(x, w), u, scheme)?;
    let gx = fd_jacobian(|w| problem.g(w, u), x, scheme)?;
    let gu = fd_jacobian(|w| problem.g(x, w), u, scheme)?;
    let f0x = fd_gradient(|w| problem.f0(w, u), x, scheme)?;
    let f0u = fd_gradient(|w| problem.f0(x, w), u, scheme)?;
    Ok(DynJacobians { fx, fu, gx, gu, f0x, f0u })
}

/// Second derivatives of H with respect to (x, u) at fixed (px, py).
pub struct HamiltonianHessians {
    pub hxx: DMatrix<f64>,
    pub hxu: DMatrix<f64>,
    pub hux: DMatrix<f64>,
    pub huu: DMatrix<f64>,
}

pub fn hamiltonian_hessians(
    problem: &ProblemDef,
    x: &DVector<f64>,
    px: &DVector<f64>,
    py: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<HamiltonianHessians> {
    let (n, m) = (problem.n, problem.m);
    let mut z = DVector::zeros(n + m);
    z.rows_mut(0, n).copy_from(x);
    z.rows_mut(n, m).copy_from(u);
    let scheme = FdScheme::second();
    let full = fd_hessian(
        |w| {
            let xw = w.rows(0, n).into_owned();
            let uw = w.rows(n, m).into_owned();
            let (dx, dy) = (problem.f(&xw, &uw), problem.g(&xw, &uw));
            px.dot(&dx) + py.dot(&dy) - problem.f0(&xw, &uw)
        },
        &z,
        &scheme,
    )?;
    let full = symmetrize(&full);
    Ok(HamiltonianHessians {
        hxx: full.view((0, 0), (n, n)).into_owned(),
        hxu: full.view((0, n), (n, m)).into_owned(),
        hux: full.view((n, 0), (m, n)).into_owned(),
        huu: full.view((n, n), (m, m)).into_owned(),
    })
}

const MAX_H_ITER: usize = 50;
const PG_TOL: f64 = 1e-10;

/// Local maximizer of u -> H(x, px, py, u) over the control box, by projected
/// Newton warm-started from `u_init`. Falls back to projected gradient steps
/// while the Hessian is not usable, but requires strict concavity on the
/// free directions at the accepted point.
pub fn maximize_hamiltonian(
    problem: &ProblemDef,
    x: &DVector<f64>,
    px: &DVector<f64>,
    py: &DVector<f64>,
    u_init: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = problem.m;
    let mut u = u_init.clone();
    problem.clamp_control(&mut u);
    let first = FdScheme::first();
    let second = FdScheme::second();
    let mut last_pg = f64::INFINITY;

    for _iter in 0..MAX_H_ITER {
        let h_now = hamiltonian(problem, x, px, py, &u)?;
        let grad = fd_gradient(|w| hamiltonian(problem, x, px, py, w).unwrap_or(f64::NAN), &u, &first)?;
        let hess = symmetrize(&fd_hessian(
            |w| hamiltonian(problem, x, px, py, w).unwrap_or(f64::NAN),
            &u,
            &second,
        )?);

        let free: Vec<usize> = (0..m)
            .filter(|&i| {
                let at_lo = u[i] <= problem.control_lo[i] + 1e-12 * (1.0 + u[i].abs());
                let at_hi = u[i] >= problem.control_hi[i] - 1e-12 * (1.0 + u[i].abs());
                !(at_lo && grad[i] < 0.0) && !(at_hi && grad[i] > 0.0)
            })
            .collect();
        let mut pg = DVector::zeros(m);
        for &i in &free {
            pg[i] = grad[i];
        }
        let pg_norm = vec_inf_norm(&pg);
        last_pg = pg_norm;
        if pg_norm <= PG_TOL {
            if !free.is_empty() {
                let sub = gather(&hess, &free);
                let (_, max_eig) = sym_eig_bounds(&sub);
                if max_eig > 1e-9 * (1.0 + inf_norm(&hess)) {
                    return Err(Error::NonConcaveHamiltonian { max_eig });
                }
            }
            return Ok(u);
        }

        // Newton on the free block when concave there, else plain ascent.
        let mut dir = pg.clone();
        if !free.is_empty() {
            let sub = gather(&hess, &free);
            let (_, max_eig) = sym_eig_bounds(&sub);
            if max_eig < -1e-12 {
                let gsub = DVector::from_fn(free.len(), |r, _| grad[free[r]]);
                if let Some(step) = sub.lu().solve(&(-&gsub)) {
                    dir = DVector::zeros(m);
                    for (r, &i) in free.iter().enumerate() {
                        dir[i] = step[r];
                    }
                }
            }
        }

        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let mut trial = &u + &dir * alpha;
            problem.clamp_control(&mut trial);
            let gain = grad.dot(&(&trial - &u));
            match hamiltonian(problem, x, px, py, &trial) {
                Ok(h_new) if h_new >= h_now + 1e-4 * gain && gain > 0.0 => {
                    u = trial;
                    moved = true;
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        if !moved {
            break;
        }
    }
    if last_pg <= PG_TOL {
        return Ok(u);
    }
    Err(Error::MaximizationStalled { iterations: MAX_H_ITER, pg: last_pg })
}

fn gather(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_problem, Params};
    use approx::assert_relative_eq;

    fn problem(name: &str) -> ProblemDef {
        make_problem(name, &Params::new()).unwrap()
    }

    #[test]
    fn jacobian_identity_and_affine() {
        let scheme = FdScheme::first();
        let id = fd_jacobian(|z| z.clone(), &DVector::from_vec(vec![0.3, -2.0, 5.0]), &scheme).unwrap();
        assert!(inf_norm(&(id - DMatrix::identity(3, 3))) < 1e-10);

        // toy f(x,u) = u: rows [df/dx, df/du] = [0, 1].
        let toy = problem("toy");
        let z = DVector::from_vec(vec![0.7, -1.3]);
        let jac = fd_jacobian(
            |w| toy.f(&w.rows(0, 1).into_owned(), &w.rows(1, 1).into_owned()),
            &z,
            &scheme,
        )
        .unwrap();
        assert!((jac[(0, 0)]).abs() < 1e-9);
        assert!((jac[(0, 1)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jacobian_cubic_matches_symbolic() {
        let cubic = problem("cubic");
        let scheme = FdScheme::first();
        let u = DVector::zeros(1);
        for &xv in &[1.0, -0.5, 2.0] {
            let x = DVector::from_element(1, xv);
            let jac = fd_jacobian(|w| cubic.f(w, &u), &x, &scheme).unwrap();
            let exact = -3.0 + 9.0 * xv * xv;
            assert_relative_eq!(jac[(0, 0)], exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn fd_f0_gradient_matches_symbolic_cubic() {
        let cubic = problem("cubic");
        let scheme = FdScheme::first();
        for &(xv, uv) in &[(0.3, 1.0), (-1.2, 4.0), (2.0, -3.0)] {
            let x = DVector::from_element(1, xv);
            let u = DVector::from_element(1, uv);
            let gx = fd_gradient(|w| cubic.f0(w, &u), &x, &scheme).unwrap();
            let gu = fd_gradient(|w| cubic.f0(&x, w), &u, &scheme).unwrap();
            assert_relative_eq!(gx[0], 2.0 * (xv - 1.0), max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(gu[0], 2.0 * (uv - 3.47197), max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn hamiltonian_hand_values() {
        let toy = problem("toy");
        let z = DVector::zeros(1);
        assert_eq!(hamiltonian(&toy, &z, &z, &z, &z).unwrap(), 0.0);
        // H = py*x - x^2/2 at u = 0: 0.5*1 - 0.5 = 0.
        let x = DVector::from_element(1, 1.0);
        let py = DVector::from_element(1, 0.5);
        assert_relative_eq!(hamiltonian(&toy, &x, &z, &py, &z).unwrap(), 0.0);

        let zermelo = problem("zermelo");
        let x = DVector::from_element(1, 1.0);
        let px = DVector::zeros(1);
        let py = DVector::from_element(1, 2.0);
        let u = DVector::from_vec(vec![0.0, 1.0]);
        // <py, g> - v^2 = 2*5 - 1 = 9.
        assert_relative_eq!(hamiltonian(&zermelo, &x, &px, &py, &u).unwrap(), 9.0);
    }

    #[test]
    fn maximize_toy_quadratic() {
        let toy = problem("toy");
        let x = DVector::zeros(1);
        let px = DVector::from_element(1, 0.4);
        let py = DVector::zeros(1);
        let u = maximize_hamiltonian(&toy, &x, &px, &py, &DVector::zeros(1)).unwrap();
        assert_relative_eq!(u[0], 0.4, epsilon = 1e-9);
    }

    #[test]
    fn maximize_zermelo_interior_and_clipped() {
        let zermelo = problem("zermelo");
        let x = DVector::from_element(1, 1.0);
        let px = DVector::zeros(1);
        let u0 = DVector::from_vec(vec![0.1, 0.9]);

        let py = DVector::from_element(1, 2.0);
        let u = maximize_hamiltonian(&zermelo, &x, &px, &py, &u0).unwrap();
        assert_relative_eq!(u[0], 0.0, epsilon = 1e-8);
        assert_relative_eq!(u[1], 1.0, epsilon = 1e-8);

        // py = 3 pushes the unconstrained speed to 1.5; the box clips at 1.1.
        let py = DVector::from_element(1, 3.0);
        let u = maximize_hamiltonian(&zermelo, &x, &px, &py, &u0).unwrap();
        assert_relative_eq!(u[1], 1.1, epsilon = 1e-12);
        // Grid-search oracle over (angle, speed).
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let steps = 2000;
        for ia in 0..steps {
            let ang = -core::f64::consts::PI + 2.0 * core::f64::consts::PI * ia as f64 / steps as f64;
            for iv in 0..=1100 {
                let v = iv as f64 * 1e-3;
                let cand = DVector::from_vec(vec![ang, v]);
                let h = hamiltonian(&zermelo, &x, &px, &py, &cand).unwrap();
                if h > best.0 {
                    best = (h, ang, v);
                }
            }
        }
        let h_found = hamiltonian(&zermelo, &x, &px, &py, &u).unwrap();
        assert!(h_found >= best.0 - 1e-5);
        assert!((best.2 - 1.1).abs() < 1e-2);
    }

    #[test]
    fn maximize_improves_and_stationary() {
        let zermelo = problem("zermelo");
        let x = DVector::from_element(1, 0.7);
        let px = DVector::from_element(1, 0.3);
        let py = DVector::from_element(1, 1.8);
        let u0 = DVector::from_vec(vec![0.4, 0.5]);
        let h0 = hamiltonian(&zermelo, &x, &px, &py, &u0).unwrap();
        let u = maximize_hamiltonian(&zermelo, &x, &px, &py, &u0).unwrap();
        let h1 = hamiltonian(&zermelo, &x, &px, &py, &u).unwrap();
        assert!(h1 >= h0);
        let g = fd_gradient(
            |w| hamiltonian(&zermelo, &x, &px, &py, w).unwrap(),
            &u,
            &FdScheme::first(),
        )
        .unwrap();
        // Interior maximizer: plain gradient must vanish.
        assert!(vec_inf_norm(&g) <= 1e-8);
    }

    #[test]
    fn warm_start_continuity_along_path() {
        let toy = problem("toy");
        let x = DVector::zeros(1);
        let py = DVector::from_element(1, 0.5);
        let mut u = DVector::zeros(1);
        let mut prev = 0.0;
        for k in 0..=100 {
            let pxv = -1.0 + 2.0 * k as f64 / 100.0;
            let px = DVector::from_element(1, pxv);
            u = maximize_hamiltonian(&toy, &x, &px, &py, &u).unwrap();
            if k > 0 {
                // u* = px moves by 0.02 per step; allow a small Lipschitz slack.
                assert!((u[0] - prev).abs() < 0.05);
            }
            prev = u[0];
        }
    }
}
