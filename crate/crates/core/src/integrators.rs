//! Fixed-step discretizations that turn the flows into iterative optimizers.
//!
//! Time stamps are exactly `k · step`. A run stops on the gradient tolerance, on
//! the step budget, or when the iterate stops being finite (or the objective
//! exceeds [`DIVERGENCE_LIMIT`]); divergence is reported through
//! [`Trajectory::terminated_by`], never as an error.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::flows::{saddle_dynamics_field_into, Flow, FlowParams};
use crate::math::norm2;
use crate::problems::{MinimaxProblem, Problem};

pub const DIVERGENCE_LIMIT: f64 = 1e15;
pub const DEFAULT_GRAD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Euler,
    Rk4,
    /// Two-step `(β, η)` update of the momentum flow.
    MomentumDiscrete,
}

/// Sign convention of the co-state update in [`integrate_momentum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MomentumUpdate {
    /// `v ← β (v - η N(v)) + (1 - β) ∇f`: the co-state is damped as in the
    /// continuous flow, then blended with the fresh gradient.
    #[default]
    Damped,
    /// `v ← β N(v) + (1 - β) ∇f`, the update written term by term. Unstable once
    /// `N` is super-linear in `|v|`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub momentum_beta: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub record_stride: usize,
    pub scheme: Scheme,
    /// Cap on the per-step displacement norm; `None` disables the clamp.
    pub max_displacement: Option<f64>,
    pub momentum_update: MomentumUpdate,
}

impl IntegratorConfig {
    pub fn euler(step: f64) -> Self {
        IntegratorConfig {
            step,
            momentum_beta: 0.9,
            max_steps: 1_000_000,
            grad_tol: DEFAULT_GRAD_TOL,
            record_stride: 1,
            scheme: Scheme::Euler,
            max_displacement: None,
            momentum_update: MomentumUpdate::Damped,
        }
    }

    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::Rk4,
            ..Self::euler(step)
        }
    }

    pub fn momentum(step: f64, beta: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::MomentumDiscrete,
            momentum_beta: beta,
            ..Self::euler(step)
        }
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_max_displacement(mut self, cap: Option<f64>) -> Self {
        self.max_displacement = cap;
        self
    }

    pub fn with_momentum_update(mut self, update: MomentumUpdate) -> Self {
        self.momentum_update = update;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::param("step", "must be positive"));
        }
        if !(self.momentum_beta > 0.0 && self.momentum_beta < 1.0) {
            return Err(Error::param("momentum_beta", "must lie in (0, 1)"));
        }
        if self.max_steps == 0 {
            return Err(Error::param("max_steps", "must be positive"));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", "must be positive"));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be at least 1"));
        }
        if let Some(cap) = self.max_displacement {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::param("max_displacement", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    GradTol,
    MaxSteps,
    Divergence,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::MaxSteps => "max_steps",
            Termination::Divergence => "divergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Option<Vec<f64>>,
    pub f: f64,
    pub grad_norm: f64,
    pub lyapunov: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    terminated_by: Termination,
    steps: usize,
}

impl Trajectory {
    pub fn from_parts(samples: Vec<Sample>, terminated_by: Termination, steps: usize) -> Self {
        Trajectory {
            samples,
            terminated_by,
            steps,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn terminated_by(&self) -> Termination {
        self.terminated_by
    }

    /// Number of update steps taken.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }
}

struct Recorder {
    samples: Vec<Sample>,
    stride: usize,
    step: f64,
    last_k: Option<usize>,
}

impl Recorder {
    fn new(cfg: &IntegratorConfig) -> Self {
        Recorder {
            samples: Vec::new(),
            stride: cfg.record_stride,
            step: cfg.step,
            last_k: None,
        }
    }

    fn push(&mut self, k: usize, force: bool, make: impl FnOnce(f64) -> Sample) {
        if self.last_k == Some(k) || !(force || k.is_multiple_of(self.stride)) {
            return;
        }
        self.last_k = Some(k);
        self.samples.push(make(k as f64 * self.step));
    }

    fn finish(self, term: Termination, steps: usize) -> Trajectory {
        Trajectory::from_parts(self.samples, term, steps)
    }
}

/// Scale `d` down to norm `cap` when it is longer.
fn clamp(d: &mut [f64], cap: Option<f64>) {
    if let Some(cap) = cap {
        let n = norm2(d);
        if n > cap {
            let s = cap / n;
            d.iter_mut().for_each(|x| *x *= s);
        }
    }
}

/// One explicit step of `ż = F(z)`, written into `disp` as `z_{k+1} - z_k`.
fn displacement<F>(scheme: Scheme, step: f64, z: &[f64], field: &mut F, disp: &mut [f64])
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = z.len();
    match scheme {
        Scheme::Rk4 => {
            let mut k1 = vec![0.0; n];
            let mut k2 = vec![0.0; n];
            let mut k3 = vec![0.0; n];
            let mut k4 = vec![0.0; n];
            let mut probe = vec![0.0; n];
            field(z, &mut k1);
            for i in 0..n {
                probe[i] = z[i] + 0.5 * step * k1[i];
            }
            field(&probe, &mut k2);
            for i in 0..n {
                probe[i] = z[i] + 0.5 * step * k2[i];
            }
            field(&probe, &mut k3);
            for i in 0..n {
                probe[i] = z[i] + step * k3[i];
            }
            field(&probe, &mut k4);
            for i in 0..n {
                disp[i] = step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        _ => {
            field(z, disp);
            disp.iter_mut().for_each(|d| *d *= step);
        }
    }
}

fn diverged(x: &[f64], f: f64, grad_norm: f64) -> bool {
    !(f.is_finite() && grad_norm.is_finite() && x.iter().all(|v| v.is_finite())) || f > DIVERGENCE_LIMIT
}

/// Integrate `flow` on `problem` from `x0` with the Euler or RK4 scheme.
///
/// Records `f`, `‖∇f‖` and, when `f*` is known, `V = f - f*`.
pub fn integrate<P>(problem: &P, flow: Flow, params: &FlowParams, cfg: &IntegratorConfig, x0: &[f64]) -> Result<Trajectory>
where
    P: Problem + ?Sized,
{
    cfg.validate()?;
    if cfg.scheme == Scheme::MomentumDiscrete {
        return Err(Error::param("scheme", "use integrate_momentum for the momentum scheme"));
    }
    ensure_dim(problem.dim(), x0.len())?;
    ensure_finite(x0, "initial state")?;

    let n = x0.len();
    let f_star = problem.f_star();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut disp = vec![0.0; n];
    let mut rec = Recorder::new(cfg);
    let mut field = |z: &[f64], out: &mut [f64]| {
        let mut g = vec![0.0; z.len()];
        problem.gradient_into(z, &mut g);
        flow.eval_into(&g, params, out);
    };

    let mut k = 0usize;
    loop {
        problem.gradient_into(&x, &mut grad);
        let f = problem.value(&x);
        let gn = norm2(&grad);
        let sample = |t: f64| Sample {
            t,
            x: x.clone(),
            v: None,
            f,
            grad_norm: gn,
            lyapunov: f_star.map(|fs| f - fs),
        };
        let term = if diverged(&x, f, gn) {
            Some(Termination::Divergence)
        } else if gn <= cfg.grad_tol {
            Some(Termination::GradTol)
        } else if k >= cfg.max_steps {
            Some(Termination::MaxSteps)
        } else {
            None
        };
        if let Some(term) = term {
            rec.push(k, true, sample);
            return Ok(rec.finish(term, k));
        }
        rec.push(k, false, sample);

        if cfg.scheme == Scheme::Euler {
            flow.eval_into(&grad, params, &mut disp);
            disp.iter_mut().for_each(|d| *d *= cfg.step);
        } else {
            displacement(cfg.scheme, cfg.step, &x, &mut field, &mut disp);
        }
        clamp(&mut disp, cfg.max_displacement);
        for (xi, d) in x.iter_mut().zip(&disp) {
            *xi += d;
        }
        k += 1;
    }
}

/// Discrete momentum flow with momentum parameter `β` and step `η`:
///
/// ```text
/// v_{k+1} = β (v_k - η N(v_k)) + (1 - β) ∇f(x_k)      (MomentumUpdate::Damped)
/// v_{k+1} = β N(v_k) + (1 - β) ∇f(x_k)                (MomentumUpdate::Literal)
/// x_{k+1} = x_k - η (v_{k+1} + N(∇f(x_k)))
/// ```
///
/// `N` is the per-coordinate normalization of [`FlowParams::normalize`]. The run
/// stops once both `‖∇f‖` and `‖v‖` are within `grad_tol`, i.e. at the
/// equilibrium `(x*, 0)`. Records `V = f - f* + ½‖v‖²` when `f*` is known.
pub fn integrate_momentum<P>(
    problem: &P,
    params: &FlowParams,
    cfg: &IntegratorConfig,
    x0: &[f64],
    v0: Option<&[f64]>,
) -> Result<Trajectory>
where
    P: Problem + ?Sized,
{
    cfg.validate()?;
    if cfg.scheme != Scheme::MomentumDiscrete {
        return Err(Error::param("scheme", "integrate_momentum requires the momentum scheme"));
    }
    let n = problem.dim();
    ensure_dim(n, x0.len())?;
    ensure_finite(x0, "initial state")?;
    let mut v = match v0 {
        Some(v0) => {
            ensure_dim(n, v0.len())?;
            ensure_finite(v0, "initial momentum")?;
            v0.to_vec()
        }
        None => vec![0.0; n],
    };

    let beta = cfg.momentum_beta;
    let eta = cfg.step;
    let f_star = problem.f_star();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut disp = vec![0.0; n];
    let mut rec = Recorder::new(cfg);

    let mut k = 0usize;
    loop {
        problem.gradient_into(&x, &mut grad);
        let f = problem.value(&x);
        let gn = norm2(&grad);
        let vn = norm2(&v);
        let sample = |t: f64| Sample {
            t,
            x: x.clone(),
            v: Some(v.clone()),
            f,
            grad_norm: gn,
            lyapunov: f_star.map(|fs| f - fs + 0.5 * vn * vn),
        };
        let term = if diverged(&x, f, gn) || !vn.is_finite() {
            Some(Termination::Divergence)
        } else if gn <= cfg.grad_tol && vn <= cfg.grad_tol {
            Some(Termination::GradTol)
        } else if k >= cfg.max_steps {
            Some(Termination::MaxSteps)
        } else {
            None
        };
        if let Some(term) = term {
            rec.push(k, true, sample);
            return Ok(rec.finish(term, k));
        }
        rec.push(k, false, sample);

        for i in 0..n {
            let carried = match cfg.momentum_update {
                MomentumUpdate::Damped => v[i] - eta * params.normalize(v[i]),
                MomentumUpdate::Literal => params.normalize(v[i]),
            };
            v[i] = beta * carried + (1.0 - beta) * grad[i];
            disp[i] = -eta * (v[i] + params.normalize(grad[i]));
        }
        clamp(&mut disp, cfg.max_displacement);
        for (xi, d) in x.iter_mut().zip(&disp) {
            *xi += d;
        }
        k += 1;
    }
}

/// Saddle-point dynamics on a min-max problem, Euler or RK4.
///
/// The trajectory stores the concatenation `(x, y)` as its state, `g(x, y)` as
/// `f`, `‖∇G‖` as the gradient norm and `½‖∇G‖²` as the Lyapunov value.
pub fn integrate_minimax<M>(
    problem: &M,
    params: &FlowParams,
    cfg: &IntegratorConfig,
    x0: &[f64],
    y0: &[f64],
) -> Result<Trajectory>
where
    M: MinimaxProblem + ?Sized,
{
    cfg.validate()?;
    if cfg.scheme == Scheme::MomentumDiscrete {
        return Err(Error::param("scheme", "min-max dynamics support euler and rk4 only"));
    }
    let (n, m) = problem.dims();
    ensure_dim(n, x0.len())?;
    ensure_dim(m, y0.len())?;
    ensure_finite(x0, "initial x")?;
    ensure_finite(y0, "initial y")?;

    let mut z: Vec<f64> = x0.iter().chain(y0).copied().collect();
    let mut gz = vec![0.0; n + m];
    let mut disp = vec![0.0; n + m];
    let mut rec = Recorder::new(cfg);
    let mut field = |state: &[f64], out: &mut [f64]| {
        let (xs, ys) = state.split_at(n);
        let mut g = vec![0.0; n + m];
        let (gx, gy) = g.split_at_mut(n);
        problem.grad_x_into(xs, ys, gx);
        problem.grad_y_into(xs, ys, gy);
        let (ox, oy) = out.split_at_mut(n);
        saddle_dynamics_field_into(gx, gy, params, ox, oy);
    };

    let mut k = 0usize;
    loop {
        let (xs, ys) = z.split_at(n);
        {
            let (gx, gy) = gz.split_at_mut(n);
            problem.grad_x_into(xs, ys, gx);
            problem.grad_y_into(xs, ys, gy);
        }
        let f = problem.value(xs, ys);
        let gn = norm2(&gz);
        let sample = |t: f64| Sample {
            t,
            x: z.clone(),
            v: None,
            f,
            grad_norm: gn,
            lyapunov: Some(0.5 * gn * gn),
        };
        let term = if diverged(&z, f.abs(), gn) {
            Some(Termination::Divergence)
        } else if gn <= cfg.grad_tol {
            Some(Termination::GradTol)
        } else if k >= cfg.max_steps {
            Some(Termination::MaxSteps)
        } else {
            None
        };
        if let Some(term) = term {
            rec.push(k, true, sample);
            return Ok(rec.finish(term, k));
        }
        rec.push(k, false, sample);

        displacement(cfg.scheme, cfg.step, &z, &mut field, &mut disp);
        clamp(&mut disp, cfg.max_displacement);
        for (zi, d) in z.iter_mut().zip(&disp) {
            *zi += d;
        }
        k += 1;
    }
}
