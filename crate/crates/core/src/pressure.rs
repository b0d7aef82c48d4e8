//! The implicit pressure function `P(u)`, asymptotic-cycle vectors
//! `Ξ = ∇P`, the rate function `H` and probes of the cycle domain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FlowModel;
use crate::transfer::{build_operator, leading_triple, GibbsData};

/// Right-hand side of `ln λ(-P r + <u, f>) = rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureConfig {
    pub rhs: f64,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self { rhs: 1.0 }
    }
}

impl PressureConfig {
    pub fn with_rhs(rhs: f64) -> Self {
        Self { rhs }
    }
}

pub const BRACKET_BOUND: f64 = 1e3;
pub const RESIDUAL_MAX: f64 = 1e-10;
pub const GRADIENT_STEP: f64 = 1e-4;
pub const HESSIAN_STEP: f64 = 1e-3;
pub const LEGENDRE_ESCAPE: f64 = 1e3;

/// Root of the pressure equation at `u` together with Gibbs statistics.
#[derive(Debug, Clone)]
pub struct PressurePoint {
    pub u: Vec<f64>,
    pub p: f64,
    /// Eigendata of the operator with `(s, u) = (-P, u)`.
    pub gibbs: GibbsData,
    pub int_r: f64,
    pub int_f: Vec<f64>,
    /// `int_f / int_r`.
    pub xi: Vec<f64>,
    /// `|ln λ - rhs|` at the returned root.
    pub residual: f64,
}

struct Eval {
    value: f64,
    gibbs: GibbsData,
}

fn eval_at(m: &FlowModel, p: f64, u: &[f64], rhs: f64) -> Result<Eval> {
    let gibbs = leading_triple(&build_operator(m, -p, u)?)?;
    Ok(Eval {
        value: gibbs.log_lambda - rhs,
        gibbs,
    })
}

fn int_r(m: &FlowModel, g: &GibbsData) -> f64 {
    g.integrate(|w| m.r().eval(w))
}

/// Solves `ln λ(-P r + <u, f>) = rhs` for `P` by bracketing bisection
/// followed by Newton steps using `d ln λ / dP = -∫ r dμ`.
pub fn solve_pressure(m: &FlowModel, u: &[f64], cfg: &PressureConfig) -> Result<PressurePoint> {
    if u.len() != m.d() {
        return Err(Error::InvalidParameter(format!(
            "u has dimension {}, model has d = {}",
            u.len(),
            m.d()
        )));
    }
    let rhs = cfg.rhs;
    // F(P) is strictly decreasing; expand from 0 until the sign changes
    let f0 = eval_at(m, 0.0, u, rhs)?.value;
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut step = 1.0;
    if f0 > 0.0 {
        loop {
            hi = lo + step;
            if hi > BRACKET_BOUND {
                return Err(Error::BracketFailure { bound: BRACKET_BOUND });
            }
            if eval_at(m, hi, u, rhs)?.value <= 0.0 {
                break;
            }
            lo = hi;
            step *= 2.0;
        }
    } else if f0 < 0.0 {
        loop {
            lo = hi - step;
            if lo < -BRACKET_BOUND {
                return Err(Error::BracketFailure { bound: BRACKET_BOUND });
            }
            if eval_at(m, lo, u, rhs)?.value >= 0.0 {
                break;
            }
            hi = lo;
            step *= 2.0;
        }
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if eval_at(m, mid, u, rhs)?.value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut p = 0.5 * (lo + hi);
    let mut ev = eval_at(m, p, u, rhs)?;
    for _ in 0..50 {
        let slope = -int_r(m, &ev.gibbs);
        let next = (p - ev.value / slope).clamp(lo, hi);
        let next_ev = eval_at(m, next, u, rhs)?;
        let done = (next - p).abs() <= 1e-15 * p.abs().max(1.0) || next_ev.value == 0.0;
        let improved = next_ev.value.abs() <= ev.value.abs();
        if improved {
            p = next;
            ev = next_ev;
        }
        if done || !improved {
            break;
        }
    }
    let residual = ev.value.abs();
    if residual > RESIDUAL_MAX {
        return Err(Error::NoConvergence { iterations: 50, residual });
    }
    let gibbs = ev.gibbs;
    let int_r = int_r(m, &gibbs);
    let d = m.d();
    let int_f: Vec<f64> = (0..d)
        .map(|i| gibbs.integrate(|w| m.f().eval(w)[i] as f64))
        .collect();
    let xi = int_f.iter().map(|x| x / int_r).collect();
    Ok(PressurePoint {
        u: u.to_vec(),
        p,
        gibbs,
        int_r,
        int_f,
        xi,
        residual,
    })
}

/// `Ξ = ∫ f dμ / ∫ r dμ`.
pub fn cycle_vector(pp: &PressurePoint) -> Vec<f64> {
    pp.xi.clone()
}

/// Central finite-difference gradient of `u ↦ P(u)`.
pub fn pressure_gradient_fd(m: &FlowModel, u: &[f64], step: f64, cfg: &PressureConfig) -> Result<Vec<f64>> {
    (0..u.len())
        .map(|i| {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[i] += step;
            dn[i] -= step;
            Ok((solve_pressure(m, &up, cfg)?.p - solve_pressure(m, &dn, cfg)?.p) / (2.0 * step))
        })
        .collect()
}

/// Central finite-difference Hessian of `u ↦ P(u)`.
pub fn pressure_hessian_fd(m: &FlowModel, u: &[f64], step: f64, cfg: &PressureConfig) -> Result<Vec<Vec<f64>>> {
    let d = u.len();
    let p = |v: &[f64]| solve_pressure(m, v, cfg).map(|pp| pp.p);
    let p0 = p(u)?;
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let shifted = |si: f64, sj: f64| {
                let mut v = u.to_vec();
                v[i] += si;
                v[j] += sj;
                p(&v)
            };
            let h = if i == j {
                (shifted(step, 0.0)? - 2.0 * p0 + shifted(-step, 0.0)?) / (step * step)
            } else {
                (shifted(step, step)? - shifted(step, -step)? - shifted(-step, step)?
                    + shifted(-step, -step)?)
                    / (4.0 * step * step)
            };
            hess[i][j] = h;
            hess[j][i] = h;
        }
    }
    Ok(hess)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let d = a.len();
    let mat = DMatrix::from_fn(d, d, |i, j| a[i][j]);
    let mut ev: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Value of the rate function `H(Ξ) = inf_u {P(u) - <u, Ξ>}` and its
/// minimizer.
#[derive(Debug, Clone)]
pub struct RateValue {
    pub xi: Vec<f64>,
    pub h: f64,
    pub u_star: Vec<f64>,
    /// `‖∇P(u_star) - Ξ‖_∞`.
    pub gradient_error: f64,
    pub iterations: usize,
}

fn jacobian_of_xi(m: &FlowModel, u: &[f64], cfg: &PressureConfig) -> Result<DMatrix<f64>> {
    let d = u.len();
    let h = GRADIENT_STEP;
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[j] += h;
        dn[j] -= h;
        let xp = solve_pressure(m, &up, cfg)?.xi;
        let xm = solve_pressure(m, &dn, cfg)?.xi;
        for i in 0..d {
            jac[(i, j)] = (xp[i] - xm[i]) / (2.0 * h);
        }
    }
    // symmetrize: it is the Hessian of P
    Ok((&jac + jac.transpose()) * 0.5)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Solves `∇P(u) = Ξ` by damped Newton with a finite-difference Hessian.
pub fn legendre_h(m: &FlowModel, xi: &[f64], cfg: &PressureConfig) -> Result<RateValue> {
    legendre_h_from(m, xi, &vec![0.0; m.d()], cfg)
}

/// As [`legendre_h`], starting the Newton iteration at `u0`.
pub fn legendre_h_from(m: &FlowModel, xi: &[f64], u0: &[f64], cfg: &PressureConfig) -> Result<RateValue> {
    let d = m.d();
    if xi.len() != d || u0.len() != d {
        return Err(Error::InvalidParameter(format!("Ξ must have dimension {d}")));
    }
    if xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite Ξ".into()));
    }
    let outside = |why: String| Error::OutsideCycleDomain(format!("Ξ = {xi:?}: {why}"));
    let mut u = u0.to_vec();
    let mut pp = solve_pressure(m, &u, cfg)?;
    let mut err = max_abs_diff(&pp.xi, xi);
    for it in 0..200 {
        if err <= 1e-12 {
            let h = pp.p - u.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            return Ok(RateValue {
                xi: xi.to_vec(),
                h,
                u_star: u,
                gradient_error: err,
                iterations: it,
            });
        }
        let jac = jacobian_of_xi(m, &u, cfg)?;
        let rhs = DVector::from_iterator(d, xi.iter().zip(&pp.xi).map(|(a, b)| a - b));
        let step = jac
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or_else(|| outside("singular Hessian".into()))?;
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > LEGENDRE_ESCAPE {
                return Err(outside(format!("iterate escaped to ‖u‖ = {norm:.3e}")));
            }
            let cand_pp = match solve_pressure(m, &cand, cfg) {
                Ok(pp) => pp,
                Err(Error::BracketFailure { .. }) => return Err(outside("pressure bracket failed".into())),
                Err(e) => return Err(e),
            };
            let cand_err = max_abs_diff(&cand_pp.xi, xi);
            if cand_err < err || t < 1e-6 {
                u = cand;
                pp = cand_pp;
                err = cand_err;
                break;
            }
            t *= 0.5;
        }
        if err.is_nan() {
            return Err(outside("Newton produced NaN".into()));
        }
    }
    Err(outside("Newton iteration did not converge".into()))
}

/// Central finite-difference gradient of `Ξ ↦ H(Ξ)`.
pub fn legendre_gradient_fd(m: &FlowModel, xi: &[f64], step: f64, cfg: &PressureConfig) -> Result<Vec<f64>> {
    let center = legendre_h(m, xi, cfg)?;
    (0..xi.len())
        .map(|i| {
            let mut up = xi.to_vec();
            let mut dn = xi.to_vec();
            up[i] += step;
            dn[i] -= step;
            let hp = legendre_h_from(m, &up, &center.u_star, cfg)?.h;
            let hm = legendre_h_from(m, &dn, &center.u_star, cfg)?.h;
            Ok((hp - hm) / (2.0 * step))
        })
        .collect()
}

/// Samples of `Ξ(t e)` along one probe direction.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeSeries {
    pub direction: Vec<f64>,
    pub t: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    /// `⟨Ξ, e⟩` is non-decreasing along the grid.
    pub monotone: bool,
    /// Last sampled value, an inner estimate of the domain boundary.
    pub boundary_estimate: Vec<f64>,
}

pub const PROBE_T_MAX: f64 = 50.0;
pub const PROBE_POINTS: usize = 12;

/// Evaluates `Ξ(t e)` for `t` on a geometric grid ending at `t_max`.
pub fn cycle_domain_probe(
    m: &FlowModel,
    directions: &[Vec<f64>],
    t_max: f64,
    cfg: &PressureConfig,
) -> Result<Vec<ProbeSeries>> {
    if !(t_max > 0.0 && t_max <= PROBE_T_MAX) {
        return Err(Error::InvalidParameter(format!("t_max must lie in (0, {PROBE_T_MAX}]")));
    }
    let grid: Vec<f64> = (0..PROBE_POINTS)
        .map(|k| t_max * 2f64.powi(k as i32 - (PROBE_POINTS as i32 - 1)))
        .collect();
    directions
        .iter()
        .map(|e| {
            if e.len() != m.d() {
                return Err(Error::InvalidParameter(format!("direction must have dimension {}", m.d())));
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidParameter("zero probe direction".into()));
            }
            let unit: Vec<f64> = e.iter().map(|x| x / norm).collect();
            let xi = grid
                .iter()
                .map(|&t| {
                    let u: Vec<f64> = unit.iter().map(|x| x * t).collect();
                    Ok(solve_pressure(m, &u, cfg)?.xi)
                })
                .collect::<Result<Vec<_>>>()?;
            let proj: Vec<f64> = xi.iter().map(|v| v.iter().zip(&unit).map(|(a, b)| a * b).sum()).collect();
            let monotone = proj.windows(2).all(|w| w[1] >= w[0] - 1e-9);
            Ok(ProbeSeries {
                direction: unit,
                t: grid.clone(),
                boundary_estimate: xi.last().cloned().unwrap_or_default(),
                xi,
                monotone,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refs;

    #[test]
    fn f2_closed_forms() {
        let m = refs::f2_unit();
        let cfg = PressureConfig::default();
        let pp = solve_pressure(&m, &[0.0], &cfg).unwrap();
        assert!((pp.p - (2f64.ln() - 1.0)).abs() < 1e-10);
        assert!(pp.xi[0].abs() < 1e-12);
        let pp = solve_pressure(&m, &[1.0], &cfg).unwrap();
        assert!((pp.p - 0.126_928_011_0).abs() < 1e-10);
        assert!((pp.xi[0] - 1f64.tanh()).abs() < 1e-10);
        assert!((pp.int_r - 1.0).abs() < 1e-12);
        assert!(pp.residual <= RESIDUAL_MAX);
    }

    #[test]
    fn rhs_switch_shifts_unit_roof_pressure() {
        let m = refs::f2_unit();
        let p1 = solve_pressure(&m, &[0.4], &PressureConfig::with_rhs(1.0)).unwrap().p;
        let p0 = solve_pressure(&m, &[0.4], &PressureConfig::with_rhs(0.0)).unwrap().p;
        assert!((p0 - p1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_examples() {
        let m = refs::f2_unit();
        let cfg = PressureConfig::default();
        let rv = legendre_h(&m, &[0.0], &cfg).unwrap();
        assert!(rv.u_star[0].abs() < 1e-8);
        assert!((rv.h - (2f64.ln() - 1.0)).abs() < 1e-10);
        let rv = legendre_h(&m, &[1f64.tanh()], &cfg).unwrap();
        assert!((rv.u_star[0] - 1.0).abs() < 1e-8);
        assert!((rv.h + 0.634_666_145_0).abs() < 1e-9);
        assert!(matches!(legendre_h(&m, &[1.5], &cfg), Err(Error::OutsideCycleDomain(_))));
    }

    #[test]
    fn probe_f2() {
        let m = refs::f2_unit();
        let cfg = PressureConfig::default();
        let series = cycle_domain_probe(&m, &[vec![1.0], vec![-1.0]], 20.0, &cfg).unwrap();
        let (pos, neg) = (&series[0], &series[1]);
        assert!(pos.monotone && neg.monotone);
        for (t, x) in pos.t.iter().zip(&pos.xi) {
            assert!((x[0] - t.tanh()).abs() < 1e-9);
        }
        for (a, b) in pos.xi.iter().zip(&neg.xi) {
            assert!((a[0] + b[0]).abs() < 1e-10);
        }
        assert!(pos.boundary_estimate[0] > 0.999);
        assert!(cycle_domain_probe(&m, &[vec![1.0]], 60.0, &cfg).is_err());
    }
}
