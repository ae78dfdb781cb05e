//! Time-t maps of Hamiltonian vector fields.
//!
//! Trajectories are advanced with a fixed uniform step. The default scheme
//! is the implicit midpoint rule, which is symplectic for every (time
//! dependent) Hamiltonian; classical RK4 is kept for cross-checks. The
//! Jacobian of the flow is propagated with the same scheme applied to the
//! variational equations, so for implicit midpoint each step multiplies it
//! by the Cayley transform `(I − A)⁻¹(I + A)`, `A = (dt/2)·Ω·∇²H`.

use std::str::FromStr;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field::{ConcatMode, Concatenation, SharedField, TimeDepField, ZeroField};
use crate::geometry::{liouville, sharp, BoxRegion, LiouvilleKind, Point};
use crate::linalg::{self, Coords, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImplicitMidpoint,
    Rk4,
}

impl Scheme {
    pub fn order(self) -> i32 {
        match self {
            Scheme::ImplicitMidpoint => 2,
            Scheme::Rk4 => 4,
        }
    }
}

impl FromStr for Scheme {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit_midpoint" | "midpoint" => Ok(Scheme::ImplicitMidpoint),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(LabError::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Uniform steps over `[0, t_final]`.
    pub steps: usize,
    /// Relative tolerance on the Newton update of each implicit step.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImplicitMidpoint,
            steps: 200,
            newton_tol: 1e-13,
            newton_max_iter: 50,
        }
    }
}

impl IntegratorConfig {
    pub fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(LabError::InvalidParameter("integrator needs at least one step".into()));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(LabError::InvalidParameter(format!(
                "Newton tolerance {} / max iterations {} must be positive",
                self.newton_tol, self.newton_max_iter
            )));
        }
        Ok(())
    }
}

/// Result of following one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub end: Point<T>,
    /// `Dφ(x)` when requested.
    pub jacobian: Option<Matrix<T>>,
    /// `∫₀ᵗ (λ(X_H) + H) ∘ φ^s ds` per requested primitive.
    pub potentials: Vec<(LiouvilleKind, T)>,
}

/// Integrand of the potential: `⟨λ(p), X_H(t, p)⟩ + H(t, p)`.
fn potential_rate<T: Real>(
    field: &dyn TimeDepField<T>,
    kind: LiouvilleKind,
    t: T,
    p: &[T],
    velocity: &[T],
) -> T {
    linalg::dot(&liouville(kind, p), velocity) + field.value(t, p)
}

/// `s · Ω · M`: row `i` of `Ω M` is row `i + n` of `M` for `i < n` and
/// minus row `i − n` otherwise.
fn omega_times<T: Real>(m: &Matrix<T>, s: T) -> Matrix<T> {
    let d = m.size();
    let n = d / 2;
    Matrix::from_fn(d, |r, c| if r < n { s * m[(r + n, c)] } else { -s * m[(r - n, c)] })
}

struct Stepper<'a, T: Real> {
    field: &'a dyn TimeDepField<T>,
    cfg: &'a IntegratorConfig,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn run(&self, x0: &[T], t_final: T, kinds: &[LiouvilleKind], with_jacobian: bool) -> Result<Trajectory<T>> {
        let d = x0.len();
        if let Some(tr) = self.stationary(x0, t_final, kinds, with_jacobian) {
            return Ok(tr);
        }
        let mut x: Point<T> = linalg::from_slice(x0);
        let mut jac = with_jacobian.then(|| Matrix::identity(d));
        let mut potentials: Vec<T> = vec![T::zero(); kinds.len()];
        let dt = t_final / T::from_usize_lossy(self.cfg.steps);
        let mut hint = None;
        for i in 0..self.cfg.steps {
            let t = dt * T::from_usize_lossy(i);
            match self.cfg.scheme {
                Scheme::ImplicitMidpoint => {
                    self.midpoint_step(&mut x, jac.as_mut(), &mut potentials, kinds, t, dt, &mut hint)?
                }
                Scheme::Rk4 => self.rk4_step(&mut x, jac.as_mut(), &mut potentials, kinds, t, dt),
            }
        }
        Ok(Trajectory {
            end: x,
            jacobian: jac,
            potentials: kinds.iter().copied().zip(potentials).collect(),
        })
    }

    /// Critical points of an autonomous field are fixed by both schemes
    /// exactly, so the steps can be skipped. With a Jacobian this needs a
    /// vanishing Hessian as well.
    fn stationary(&self, x0: &[T], t_final: T, kinds: &[LiouvilleKind], with_jacobian: bool) -> Option<Trajectory<T>> {
        if !self.field.is_autonomous() {
            return None;
        }
        let (grad, hess) = if with_jacobian {
            self.field.derivatives(T::zero(), x0)
        } else {
            (self.field.gradient(T::zero(), x0), Matrix::zeros(x0.len()))
        };
        let flat = |m: &Matrix<T>| (0..m.size()).all(|r| (0..m.size()).all(|c| m[(r, c)] == T::zero()));
        if grad.iter().any(|g| *g != T::zero()) || !flat(&hess) {
            return None;
        }
        let h = self.field.value(T::zero(), x0);
        Some(Trajectory {
            end: linalg::from_slice(x0),
            jacobian: with_jacobian.then(|| Matrix::identity(x0.len())),
            potentials: kinds.iter().map(|&k| (k, t_final * h)).collect(),
        })
    }

    fn midpoint_step(
        &self,
        x: &mut Point<T>,
        jac: Option<&mut Matrix<T>>,
        potentials: &mut [T],
        kinds: &[LiouvilleKind],
        t: T,
        dt: T,
        hint: &mut Option<Coords<T>>,
    ) -> Result<()> {
        let d = x.len();
        let half = T::lit(0.5);
        let t_mid = t + half * dt;
        let tol = T::lit(self.cfg.newton_tol);
        // predictor: the previous step's midpoint velocity, else explicit Euler
        let guess = match hint.take() {
            Some(v) => v,
            None => sharp(&self.field.gradient(t_mid, x)),
        };
        let mut z = linalg::axpy(x, dt, &guess);
        let mut converged = false;
        let mut last_residual = T::zero();
        let mut hess_at_mid = Matrix::zeros(d);
        for _ in 0..self.cfg.newton_max_iter {
            let mid: Point<T> = x.iter().zip(&z).map(|(&a, &b)| half * (a + b)).collect();
            let (grad, hess) = self.field.derivatives(t_mid, &mid);
            let velocity = sharp(&grad);
            let residual: Coords<T> = (0..d).map(|k| z[k] - x[k] - dt * velocity[k]).collect();
            last_residual = linalg::max_abs(&residual);
            hess_at_mid = hess;
            *hint = Some(velocity);
            if last_residual == T::zero() {
                converged = true;
                break;
            }
            let dg = Matrix::identity(d).sub(&omega_times(&hess_at_mid, half * dt));
            let delta = dg.solve(&residual)?;
            for k in 0..d {
                z[k] = z[k] - delta[k];
            }
            if linalg::max_abs(&delta) <= tol * (T::one() + linalg::max_abs(&z)) {
                converged = true;
                if jac.is_some() {
                    let mid: Point<T> = x.iter().zip(&z).map(|(&a, &b)| half * (a + b)).collect();
                    hess_at_mid = self.field.hessian(t_mid, &mid);
                }
                break;
            }
        }
        if !converged {
            return Err(LabError::NewtonFailed {
                context: "implicit midpoint step",
                iterations: self.cfg.newton_max_iter,
                residual: last_residual.as_f64(),
            });
        }
        let mid: Point<T> = x.iter().zip(&z).map(|(&a, &b)| half * (a + b)).collect();
        if !kinds.is_empty() {
            let velocity = sharp(&self.field.gradient(t_mid, &mid));
            for (acc, &kind) in potentials.iter_mut().zip(kinds) {
                *acc = *acc + dt * potential_rate(self.field, kind, t_mid, &mid, &velocity);
            }
        }
        if let Some(jac) = jac {
            let a = omega_times(&hess_at_mid, half * dt);
            let id = Matrix::identity(d);
            let step = id.sub(&a).solve_matrix(&id.add(&a))?;
            *jac = step.mul(jac);
        }
        *x = z;
        Ok(())
    }

    fn rk4_step(
        &self,
        x: &mut Point<T>,
        jac: Option<&mut Matrix<T>>,
        potentials: &mut [T],
        kinds: &[LiouvilleKind],
        t: T,
        dt: T,
    ) {
        let half = T::lit(0.5);
        let sixth = T::lit(1.0 / 6.0);
        let two = T::lit(2.0);
        let want_jac = jac.is_some();
        // one stage: velocity, variational matrix, potential rates
        let stage = |p: &[T], s: T| -> (Coords<T>, Option<Matrix<T>>, Vec<T>) {
            let (grad, hess) = if want_jac {
                let (g, h) = self.field.derivatives(s, p);
                (g, Some(h))
            } else {
                (self.field.gradient(s, p), None)
            };
            let v = sharp(&grad);
            let rates = kinds
                .iter()
                .map(|&k| potential_rate(self.field, k, s, p, &v))
                .collect();
            (v, hess.map(|h| omega_times(&h, T::one())), rates)
        };
        let (k1, a1, r1) = stage(x, t);
        let x2 = linalg::axpy(x, half * dt, &k1);
        let (k2, a2, r2) = stage(&x2, t + half * dt);
        let x3 = linalg::axpy(x, half * dt, &k2);
        let (k3, a3, r3) = stage(&x3, t + half * dt);
        let x4 = linalg::axpy(x, dt, &k3);
        let (k4, a4, r4) = stage(&x4, t + dt);
        for k in 0..x.len() {
            x[k] = x[k] + dt * sixth * (k1[k] + two * k2[k] + two * k3[k] + k4[k]);
        }
        for (i, acc) in potentials.iter_mut().enumerate() {
            *acc = *acc + dt * sixth * (r1[i] + two * r2[i] + two * r3[i] + r4[i]);
        }
        if let (Some(jac), Some(a1), Some(a2), Some(a3), Some(a4)) = (jac, a1, a2, a3, a4) {
            let y = jac.clone();
            let j1 = a1.mul(&y);
            let j2 = a2.mul(&y.add(&j1.scaled(half * dt)));
            let j3 = a3.mul(&y.add(&j2.scaled(half * dt)));
            let j4 = a4.mul(&y.add(&j3.scaled(dt)));
            let incr = j1.add(&j2.scaled(two)).add(&j3.scaled(two)).add(&j4);
            *jac = y.add(&incr.scaled(dt * sixth));
        }
    }
}

fn check_time<T: Real>(t_final: T) -> Result<()> {
    if !(t_final >= T::zero() && t_final <= T::one()) {
        return Err(LabError::InvalidParameter(format!("t_final {t_final} outside [0, 1]")));
    }
    Ok(())
}

/// Follows one trajectory of `X_H` from `x0` up to `t_final`, optionally
/// carrying the Jacobian and the potential integrals along.
pub fn trace<T: Real>(
    field: &dyn TimeDepField<T>,
    x0: &[T],
    cfg: &IntegratorConfig,
    t_final: T,
    kinds: &[LiouvilleKind],
    with_jacobian: bool,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    check_time(t_final)?;
    field.dim().check(x0)?;
    let stepper = Stepper { field, cfg };
    stepper.run(x0, t_final, kinds, with_jacobian)
}

/// `φ_H^{t_final}(x0)`.
pub fn integrate_flow<T: Real>(
    field: &dyn TimeDepField<T>,
    x0: &[T],
    cfg: &IntegratorConfig,
    t_final: T,
) -> Result<Point<T>> {
    Ok(trace(field, x0, cfg, t_final, &[], false)?.end)
}

/// A realized Hamiltonian diffeomorphism `φ_H^{t_final}`.
#[derive(Debug, Clone)]
pub struct FlowMap<T: Real> {
    field: SharedField<T>,
    cfg: IntegratorConfig,
    t_final: T,
}

impl<T: Real> FlowMap<T> {
    pub fn new(field: SharedField<T>, cfg: IntegratorConfig, t_final: T) -> Result<Self> {
        cfg.validate()?;
        check_time(t_final)?;
        Ok(Self { field, cfg, t_final })
    }

    /// The identity, realized by `H ≡ 0` on `support`.
    pub fn identity(support: BoxRegion<T>) -> Result<Self> {
        Self::new(Arc::new(ZeroField::new(support)?), IntegratorConfig::default(), T::one())
    }

    pub fn field(&self) -> &SharedField<T> {
        &self.field
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn support(&self) -> &BoxRegion<T> {
        self.field.support()
    }

    /// Full trajectory data; points outside the support are fixed and skip
    /// integration.
    pub fn trace(&self, x: &[T], kinds: &[LiouvilleKind], with_jacobian: bool) -> Result<Trajectory<T>> {
        self.field.dim().check(x)?;
        if !self.support().contains_interior(x) {
            return Ok(Trajectory {
                end: linalg::from_slice(x),
                jacobian: with_jacobian.then(|| Matrix::identity(x.len())),
                potentials: kinds.iter().map(|&k| (k, T::zero())).collect(),
            });
        }
        trace(self.field.as_ref(), x, &self.cfg, self.t_final, kinds, with_jacobian)
    }

    pub fn forward(&self, x: &[T]) -> Result<Point<T>> {
        Ok(self.trace(x, &[], false)?.end)
    }

    pub fn jacobian(&self, x: &[T]) -> Result<Matrix<T>> {
        Ok(self.forward_with_jacobian(x)?.1)
    }

    pub fn forward_with_jacobian(&self, x: &[T]) -> Result<(Point<T>, Matrix<T>)> {
        let tr = self.trace(x, &[], true)?;
        Ok((tr.end, tr.jacobian.expect("jacobian requested")))
    }

    /// Same map with a different number of steps.
    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            field: self.field.clone(),
            cfg: self.cfg.with_steps(steps),
            t_final: self.t_final,
        }
    }
}

/// `φ_H¹` with its Jacobian obtained from the variational equations.
pub fn realize_time_one<T: Real>(field: SharedField<T>, cfg: &IntegratorConfig) -> Result<FlowMap<T>> {
    FlowMap::new(field, *cfg, T::one())
}

/// Grid estimate of `sup |φ(x) − x|` over the support box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C0Estimate<T> {
    pub value: T,
    /// Largest grid spacing; the true supremum may exceed `value`.
    pub spacing: T,
    pub resolution: usize,
}

pub fn c0_distance_to_identity<T: Real>(map: &FlowMap<T>, resolution: usize) -> Result<C0Estimate<T>> {
    if resolution < 2 {
        return Err(LabError::InvalidParameter(format!(
            "C0 grid needs at least 2 points per axis, got {resolution}"
        )));
    }
    let support = map.support();
    let mut value = T::zero();
    for x in support.grid(resolution) {
        let y = map.forward(&x)?;
        value = value.max(linalg::norm(&linalg::sub(&y, &x)));
    }
    Ok(C0Estimate {
        value,
        spacing: support.grid_spacing(resolution),
        resolution,
    })
}

/// Max-entry residual `‖DφᵀΩDφ − Ω‖` over the probes.
pub fn symplecticity_residual<T: Real>(map: &FlowMap<T>, probes: &[Point<T>]) -> Result<T> {
    let omega = crate::geometry::omega_matrix::<T>(map.field().dim());
    let mut worst = T::zero();
    for x in probes {
        let j = map.jacobian(x)?;
        worst = worst.max(j.transpose().mul(&omega).mul(&j).sub(&omega).max_abs());
    }
    Ok(worst)
}

/// Time-concatenation generating `φ_H¹ ∘ φ_K¹`: `K` runs first.
pub fn concatenate<T: Real>(h: SharedField<T>, k: SharedField<T>) -> Result<Concatenation<T>> {
    Concatenation::new(k, h, ConcatMode::Kink)
}

pub fn concatenate_with<T: Real>(
    h: SharedField<T>,
    k: SharedField<T>,
    mode: ConcatMode,
) -> Result<Concatenation<T>> {
    Concatenation::new(k, h, mode)
}

/// Richardson estimate of the trajectory error at `x`:
/// `|φ_m(x) − φ_{2m}(x)| · 2^p / (2^p − 1)` for a scheme of order `p`.
pub fn richardson_error<T: Real>(map: &FlowMap<T>, x: &[T]) -> Result<T> {
    let coarse = map.forward(x)?;
    let fine = map.with_steps(2 * map.config().steps).forward(x)?;
    let gain = T::lit(2f64.powi(map.config().scheme.order()));
    Ok(linalg::norm(&linalg::sub(&coarse, &fine)) * gain / (gain - T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::PlateauBump;
    use crate::field::{ShapedBump, Steady};
    use approx::assert_abs_diff_eq;

    fn rotation_field(rate: f64) -> SharedField<f64> {
        let bump = PlateauBump::new(BoxRegion::cube(2, -3.0, 3.0).unwrap(), 0.6, 1.0, 0.01).unwrap();
        Arc::new(Steady(ShapedBump::rotation(bump, rate).unwrap()))
    }

    #[test]
    fn zero_field_is_identity() {
        let zero: SharedField<f64> = Arc::new(ZeroField::new(BoxRegion::cube(2, -1.0, 1.0).unwrap()).unwrap());
        let x = [0.3, -0.2];
        let y = integrate_flow(zero.as_ref(), &x, &IntegratorConfig::default(), 1.0).unwrap();
        assert_eq!(y.as_slice(), &x);
        let map = realize_time_one(zero, &IntegratorConfig::default()).unwrap();
        let (y, j) = map.forward_with_jacobian(&x).unwrap();
        assert_eq!(y.as_slice(), &x);
        assert_eq!(j, Matrix::identity(2));
    }

    #[test]
    fn plateau_rotation_is_clockwise_by_rate() {
        let field = rotation_field(1.0);
        let r = 0.8;
        for scheme in [Scheme::ImplicitMidpoint, Scheme::Rk4] {
            let cfg = IntegratorConfig {
                scheme,
                steps: 400,
                ..Default::default()
            };
            let y = integrate_flow(field.as_ref(), &[r, 0.0], &cfg, 1.0).unwrap();
            assert_abs_diff_eq!(y[0], r * 1f64.cos(), epsilon = 1e-5);
            assert_abs_diff_eq!(y[1], -r * 1f64.sin(), epsilon = 1e-5);
        }
    }

    #[test]
    fn rejects_time_outside_unit_interval() {
        let field = rotation_field(1.0);
        assert!(integrate_flow(field.as_ref(), &[0.0, 0.0], &IntegratorConfig::default(), 1.5).is_err());
        assert!(integrate_flow(field.as_ref(), &[0.0], &IntegratorConfig::default(), 0.5).is_err());
    }

    #[test]
    fn newton_failure_carries_residual() {
        let field = rotation_field(1.0);
        let cfg = IntegratorConfig {
            newton_max_iter: 1,
            newton_tol: 1e-300,
            ..Default::default()
        };
        match integrate_flow(field.as_ref(), &[0.5, 0.5], &cfg, 1.0) {
            Err(LabError::NewtonFailed { residual, .. }) => assert!(residual.is_finite()),
            other => panic!("expected Newton failure, got {other:?}"),
        }
    }

    #[test]
    fn rotation_jacobian_on_plateau() {
        let map = realize_time_one(rotation_field(1.0), &IntegratorConfig::default()).unwrap();
        let j = map.jacobian(&[0.4, -0.3]).unwrap();
        let (c, s) = (1f64.cos(), 1f64.sin());
        let expected = Matrix::from_fn(2, |r, col| [[c, s], [-s, c]][r][col]);
        assert!(j.sub(&expected).max_abs() < 1e-5);
    }
}
