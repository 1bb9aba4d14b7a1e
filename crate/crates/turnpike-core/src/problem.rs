//! Problem definitions: steady x-block dynamics `f`, monotone y-block rate
//! `g`, running cost `f0`, control/state boxes and terminal data.
//!
//! `g` and `f0` never see the y coordinate; that structural property is what
//! the whole toolkit rests on, and the function signatures enforce it.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use nalgebra::DVector;
use num_traits::Float;

use crate::error::{Error, Result};

pub type Params = BTreeMap<String, f64>;

type VecFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;
type ScalarFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync;
type TargetFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalSpec {
    Fixed(f64),
    Free,
}

impl TerminalSpec {
    pub fn is_fixed(&self) -> bool {
        matches!(self, TerminalSpec::Fixed(_))
    }
}

/// An optimal control instance with dynamics x' = f(x,u), y' = g(x,u) and
/// running cost f0(x,u). Immutable after construction; evaluation maps are
/// pure, so instances can be shared across concurrent solves.
pub struct ProblemDef {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    f: Box<VecFn>,
    g: Box<VecFn>,
    f0: Box<ScalarFn>,
    pub control_lo: DVector<f64>,
    pub control_hi: DVector<f64>,
    pub x0_spec: Vec<TerminalSpec>,
    pub x1_spec: Vec<TerminalSpec>,
    pub y0: DVector<f64>,
    y1_of_t: Box<TargetFn>,
    /// Optional box on the stacked state (x, y), length n + p.
    pub state_lo: Option<DVector<f64>>,
    pub state_hi: Option<DVector<f64>>,
    pub params: Params,
    /// False for problems whose optimal control saturates the box (bang
    /// arcs); those route to the direct solver.
    pub shooting_suitable: bool,
    /// Default Newton guess (x, u, px, py) for the turnpike-static problem.
    pub static_guess: (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>),
}

impl ProblemDef {
    pub fn f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(u.len(), self.m);
        (self.f)(x, u)
    }

    pub fn g(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(u.len(), self.m);
        (self.g)(x, u)
    }

    pub fn f0(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.f0)(x, u)
    }

    /// Final y target as a function of the horizon.
    pub fn y1_of_t(&self, t_final: f64) -> DVector<f64> {
        (self.y1_of_t)(t_final)
    }

    /// Prescribed y-rate (y1 - y0) / T of the turnpike-static problem.
    pub fn y_rate(&self, t_final: f64) -> DVector<f64> {
        (self.y1_of_t(t_final) - &self.y0) / t_final
    }

    /// Evaluates (f, g) with a finiteness check.
    pub fn eval_rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let dx = self.f(x, u);
        let dy = self.g(x, u);
        if dx.iter().chain(dy.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDynamics);
        }
        Ok((dx, dy))
    }

    pub fn clamp_control(&self, u: &mut DVector<f64>) {
        for i in 0..self.m {
            u[i] = u[i].clamp(self.control_lo[i], self.control_hi[i]);
        }
    }

    pub fn fixed_x1_count(&self) -> usize {
        self.x1_spec.iter().filter(|s| s.is_fixed()).count()
    }
}

fn merge_params(defaults: &[(&str, f64)], overrides: &Params) -> Result<Params> {
    let mut out: Params = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !out.contains_key(k) {
            return Err(Error::InvalidParams(format!("unknown parameter `{k}`")));
        }
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("parameter `{k}` must be finite")));
        }
        out.insert(k.clone(), *v);
    }
    Ok(out)
}

fn require_positive(params: &Params, keys: &[&str]) -> Result<()> {
    for k in keys {
        if params[*k] <= 0.0 {
            return Err(Error::InvalidParams(format!("parameter `{k}` must be positive")));
        }
    }
    Ok(())
}

fn require_flag(params: &Params, key: &str) -> Result<bool> {
    let v = params[key];
    if v == 0.0 {
        Ok(false)
    } else if v == 1.0 {
        Ok(true)
    } else {
        Err(Error::InvalidParams(format!("parameter `{key}` must be 0 or 1")))
    }
}

pub const PROBLEM_NAMES: [&str; 5] = ["toy", "toy_noy", "zermelo", "runner", "cubic"];

/// Builds one of the registered instances, with `params` overriding the
/// documented defaults.
///
/// | name     | defaults |
/// |----------|----------|
/// | toy      | alpha=0.5, osc=0 |
/// | toy_noy  | (none) |
/// | zermelo  | l=2, vmax=1.1, rate=5 |
/// | runner   | d=1500, tau=0.932, sigma=22, alpha=1e-5, fmax=8, gamma=0.0025, e0=4651, u_bound=10, v0=3, v_min=0.1 |
/// | cubic    | xd=1, ud=3.47197, x0=-2, xf=-1, xf_free=0 |
pub fn make_problem(name: &str, params: &Params) -> Result<ProblemDef> {
    match name {
        "toy" => make_toy(params),
        "toy_noy" => make_toy_noy(params),
        "zermelo" => make_zermelo(params),
        "runner" => make_runner(params),
        "cubic" => make_cubic(params),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

fn make_toy(overrides: &Params) -> Result<ProblemDef> {
    let params = merge_params(&[("alpha", 0.5), ("osc", 0.0)], overrides)?;
    let alpha = params["alpha"];
    let osc = require_flag(&params, "osc")?;
    Ok(ProblemDef {
        name: "toy".into(),
        n: 1,
        p: 1,
        m: 1,
        f: Box::new(|_x, u| DVector::from_element(1, u[0])),
        g: Box::new(|x, _u| DVector::from_element(1, x[0])),
        f0: Box::new(|x, u| 0.5 * (x[0] * x[0] + u[0] * u[0])),
        control_lo: DVector::from_element(1, f64::NEG_INFINITY),
        control_hi: DVector::from_element(1, f64::INFINITY),
        x0_spec: alloc::vec![TerminalSpec::Fixed(1.0)],
        x1_spec: alloc::vec![TerminalSpec::Fixed(2.0)],
        y0: DVector::zeros(1),
        y1_of_t: Box::new(move |t| {
            let v = if osc { alpha * t * t.sin() } else { alpha * t };
            DVector::from_element(1, v)
        }),
        state_lo: None,
        state_hi: None,
        params,
        shooting_suitable: true,
        static_guess: (
            DVector::zeros(1),
            DVector::zeros(1),
            DVector::zeros(1),
            DVector::zeros(1),
        ),
    })
}

fn make_toy_noy(overrides: &Params) -> Result<ProblemDef> {
    let params = merge_params(&[], overrides)?;
    Ok(ProblemDef {
        name: "toy_noy".into(),
        n: 1,
        p: 0,
        m: 1,
        f: Box::new(|_x, u| DVector::from_element(1, u[0])),
        g: Box::new(|_x, _u| DVector::zeros(0)),
        f0: Box::new(|x, u| 0.5 * (x[0] * x[0] + u[0] * u[0])),
        control_lo: DVector::from_element(1, f64::NEG_INFINITY),
        control_hi: DVector::from_element(1, f64::INFINITY),
        x0_spec: alloc::vec![TerminalSpec::Fixed(1.0)],
        x1_spec: alloc::vec![TerminalSpec::Fixed(2.0)],
        y0: DVector::zeros(0),
        y1_of_t: Box::new(|_t| DVector::zeros(0)),
        state_lo: None,
        state_hi: None,
        params,
        shooting_suitable: true,
        static_guess: (
            DVector::zeros(1),
            DVector::zeros(1),
            DVector::zeros(1),
            DVector::zeros(0),
        ),
    })
}

/// Boat crossing a river of width `l` against a current c(x) = 3 + x(l - x).
/// Controls are (heading angle, speed); cost is the integrated squared speed.
fn make_zermelo(overrides: &Params) -> Result<ProblemDef> {
    let params = merge_params(&[("l", 2.0), ("vmax", 1.1), ("rate", 5.0)], overrides)?;
    require_positive(&params, &["l", "vmax", "rate"])?;
    let l = params["l"];
    let rate = params["rate"];
    Ok(ProblemDef {
        name: "zermelo".into(),
        n: 1,
        p: 1,
        m: 2,
        f: Box::new(|_x, u| DVector::from_element(1, u[1] * u[0].sin())),
        g: Box::new(move |x, u| {
            DVector::from_element(1, u[1] * u[0].cos() + 3.0 + x[0] * (l - x[0]))
        }),
        f0: Box::new(|_x, u| u[1] * u[1]),
        control_lo: DVector::from_vec(alloc::vec![f64::NEG_INFINITY, 0.0]),
        control_hi: DVector::from_vec(alloc::vec![f64::INFINITY, params["vmax"]]),
        x0_spec: alloc::vec![TerminalSpec::Fixed(0.0)],
        x1_spec: alloc::vec![TerminalSpec::Fixed(l)],
        y0: DVector::zeros(1),
        y1_of_t: Box::new(move |t| DVector::from_element(1, rate * t)),
        state_lo: None,
        state_hi: None,
        params,
        shooting_suitable: false,
        static_guess: (
            DVector::from_element(1, 1.0),
            DVector::from_vec(alloc::vec![0.0, 1.0]),
            DVector::zeros(1),
            DVector::from_element(1, 1.0),
        ),
    })
}

/// Runner model reparametrized by distance s in [0, d]: states (v, f_force),
/// energy e as the monotone block, neural drive u as control.
fn make_runner(overrides: &Params) -> Result<ProblemDef> {
    let params = merge_params(
        &[
            ("d", 1500.0),
            ("tau", 0.932),
            ("sigma", 22.0),
            ("alpha", 1e-5),
            ("fmax", 8.0),
            ("gamma", 0.0025),
            ("e0", 4651.0),
            ("u_bound", 10.0),
            ("v0", 3.0),
            ("v_min", 0.1),
        ],
        overrides,
    )?;
    require_positive(
        &params,
        &["d", "tau", "sigma", "fmax", "gamma", "e0", "u_bound", "v0", "v_min"],
    )?;
    if params["alpha"] < 0.0 {
        return Err(Error::InvalidParams("parameter `alpha` must be nonnegative".into()));
    }
    let (tau, sigma, fmax, gamma, alpha) =
        (params["tau"], params["sigma"], params["fmax"], params["gamma"], params["alpha"]);
    let e0 = params["e0"];
    Ok(ProblemDef {
        name: "runner".into(),
        n: 2,
        p: 1,
        m: 1,
        f: Box::new(move |x, u| {
            let (v, ff) = (x[0], x[1]);
            DVector::from_vec(alloc::vec![
                -1.0 / tau + ff / v,
                gamma / v * (u[0] * (fmax - ff) - ff),
            ])
        }),
        g: Box::new(move |x, _u| DVector::from_element(1, sigma / x[0] - x[1])),
        f0: Box::new(move |x, u| (1.0 + 0.5 * alpha * u[0] * u[0]) / x[0]),
        control_lo: DVector::from_element(1, -params["u_bound"]),
        control_hi: DVector::from_element(1, params["u_bound"]),
        x0_spec: alloc::vec![TerminalSpec::Fixed(params["v0"]), TerminalSpec::Free],
        x1_spec: alloc::vec![TerminalSpec::Free, TerminalSpec::Free],
        y0: DVector::from_element(1, e0),
        y1_of_t: Box::new(|_t| DVector::zeros(1)),
        // v is kept away from the 1/v singularity; f_force and e carry the
        // model's own bounds.
        state_lo: Some(DVector::from_vec(alloc::vec![params["v_min"], 0.0, 0.0])),
        state_hi: Some(DVector::from_vec(alloc::vec![
            f64::INFINITY,
            fmax,
            f64::INFINITY,
        ])),
        params,
        shooting_suitable: false,
        static_guess: (
            DVector::from_vec(alloc::vec![5.0, 5.0]),
            DVector::from_element(1, 3.0),
            DVector::zeros(2),
            DVector::zeros(1),
        ),
    })
}

/// Scalar double-well example: x' = -3x + 3x^3 + u with a quadratic tracking
/// cost; its static problem can have several local minima.
fn make_cubic(overrides: &Params) -> Result<ProblemDef> {
    let params = merge_params(
        &[("xd", 1.0), ("ud", 3.47197), ("x0", -2.0), ("xf", -1.0), ("xf_free", 0.0)],
        overrides,
    )?;
    let xf_free = require_flag(&params, "xf_free")?;
    let (xd, ud) = (params["xd"], params["ud"]);
    let x1_spec = if xf_free {
        alloc::vec![TerminalSpec::Free]
    } else {
        alloc::vec![TerminalSpec::Fixed(params["xf"])]
    };
    Ok(ProblemDef {
        name: "cubic".into(),
        n: 1,
        p: 0,
        m: 1,
        f: Box::new(|x, u| DVector::from_element(1, -3.0 * x[0] + 3.0 * x[0] * x[0] * x[0] + u[0])),
        g: Box::new(|_x, _u| DVector::zeros(0)),
        f0: Box::new(move |x, u| {
            let (dx, du) = (x[0] - xd, u[0] - ud);
            dx * dx + du * du
        }),
        control_lo: DVector::from_element(1, f64::NEG_INFINITY),
        control_hi: DVector::from_element(1, f64::INFINITY),
        x0_spec: alloc::vec![TerminalSpec::Fixed(params["x0"])],
        x1_spec,
        y0: DVector::zeros(0),
        y1_of_t: Box::new(|_t| DVector::zeros(0)),
        state_lo: None,
        state_hi: None,
        params,
        shooting_suitable: true,
        static_guess: (
            DVector::zeros(1),
            DVector::from_element(1, 1.0),
            DVector::zeros(1),
            DVector::zeros(0),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_params() -> Params {
        Params::new()
    }

    #[test]
    fn zermelo_current_and_rate() {
        let pb = make_problem("zermelo", &no_params()).unwrap();
        // c(1) = 3 + 1*(2-1) = 4, and g(1, (0,1)) = 1 + 4 = 5.
        let x = DVector::from_element(1, 1.0);
        let u = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(pb.g(&x, &u)[0], 5.0);
        let (dx, dy) = pb.eval_rhs(&x, &u).unwrap();
        assert_eq!(dx[0], 0.0);
        assert_eq!(dy[0], 5.0);
    }

    #[test]
    fn toy_zero_input() {
        let pb = make_problem("toy", &no_params()).unwrap();
        let z = DVector::zeros(1);
        assert_eq!(pb.f(&z, &z)[0], 0.0);
        assert_eq!(pb.g(&z, &z)[0], 0.0);
        assert_eq!(pb.f0(&z, &z), 0.0);
    }

    #[test]
    fn runner_energy_rate() {
        let pb = make_problem("runner", &no_params()).unwrap();
        let x = DVector::from_vec(vec![6.198, 6.65]);
        let u = DVector::zeros(1);
        // sigma/v - f at the printed steady values, cross-checked against the
        // required mean rate -e0/d.
        let rate = pb.g(&x, &u)[0];
        let by_hand = 22.0 / 6.198 - 6.65;
        assert!((rate - by_hand).abs() < 1e-12);
        assert!((rate - (-4651.0 / 1500.0)).abs() < 2e-3);
    }

    #[test]
    fn cubic_equilibrium_at_one() {
        let pb = make_problem("cubic", &no_params()).unwrap();
        let x = DVector::from_element(1, 1.0);
        let u = DVector::zeros(1);
        assert_eq!(pb.f(&x, &u)[0], 0.0);
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(
            make_problem("nope", &no_params()),
            Err(Error::UnknownProblem(_))
        ));
        let mut p = Params::new();
        p.insert("vmax".into(), -1.0);
        assert!(matches!(make_problem("zermelo", &p), Err(Error::InvalidParams(_))));
        let mut p = Params::new();
        p.insert("typo".into(), 1.0);
        assert!(matches!(make_problem("toy", &p), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn eval_rhs_deterministic_and_sized() {
        let pb = make_problem("runner", &no_params()).unwrap();
        let x = DVector::from_vec(vec![4.0, 3.0]);
        let u = DVector::from_element(1, 2.0);
        let (a1, b1) = pb.eval_rhs(&x, &u).unwrap();
        let (a2, b2) = pb.eval_rhs(&x, &u).unwrap();
        // Pure maps: bitwise identical on identical inputs.
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_eq!(a1.len(), pb.n);
        assert_eq!(b1.len(), pb.p);
    }

    #[test]
    fn oscillating_target() {
        let mut p = Params::new();
        p.insert("alpha".into(), 1.0);
        p.insert("osc".into(), 1.0);
        let pb = make_problem("toy", &p).unwrap();
        let t = 20.0;
        assert!((pb.y1_of_t(t)[0] - t * t.sin()).abs() < 1e-15);
    }
}
