//! Preimage sums `J_{T*}(ω*, E)` over the one-sided shift, evaluated
//! exactly by a roof-coordinate dynamic program or by importance sampling,
//! and the ratio, local-limit and block-violation experiments built on them.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{BasicSet, BlMeasure, Density};
use crate::model::FlowModel;
use crate::pressure::{legendre_h, solve_pressure, PressureConfig};
use crate::sft::{birkhoff_sum, Word};
use crate::transfer::{sample_discrete, GibbsData};

/// A single preimage sum.
#[derive(Debug, Clone, PartialEq)]
pub struct JQuery {
    /// Target window; at least as long as the operator depth and as `E.a`.
    pub x_star: Word,
    /// Displacement of the reference point.
    pub xi0: Vec<i64>,
    pub xi_star: Vec<i64>,
    pub t_sharp: f64,
    pub e: BasicSet,
    pub n_max: usize,
}

impl JQuery {
    /// Validates the query against the model and the operator depth `k`.
    pub fn validate(&self, m: &FlowModel, k: usize) -> Result<()> {
        self.e.validate(m)?;
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if self.xi0.len() != m.d() || self.xi_star.len() != m.d() {
            return Err(Error::InvalidParameter(format!("ξ vectors must have dimension {}", m.d())));
        }
        if !self.t_sharp.is_finite() {
            return Err(Error::InvalidParameter("T# must be finite".into()));
        }
        let need = k.max(self.e.a.len());
        if self.x_star.len() < need {
            return Err(Error::InsufficientWindow {
                needed: need,
                available: self.x_star.len(),
            });
        }
        if !m.ts().is_admissible(&self.x_star)? {
            return Err(Error::InvalidWord(format!("{} is not admissible", m.ts().render(&self.x_star))));
        }
        Ok(())
    }

    /// Target displacement `ξ* - ξ0`.
    pub fn displacement(&self) -> Vec<i64> {
        self.xi_star.iter().zip(&self.xi0).map(|(a, b)| a - b).collect()
    }

    /// The window `[α, β]` is read as empty when `α = β`, matching the zero
    /// mass of such a basic set.
    fn in_window(&self, r_n: f64) -> bool {
        let s = r_n - self.t_sharp;
        self.e.alpha < self.e.beta && self.e.alpha <= s && s <= self.e.beta
    }
}

/// Largest number of distinct roof values the exact evaluator handles.
pub const MAX_ROOF_LEVELS: usize = 4;
/// Largest cocycle dimension the exact evaluator handles.
pub const MAX_EXACT_DIM: usize = 2;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct DpKey {
    head: usize,
    counts: [u16; MAX_ROOF_LEVELS],
    xi: [i64; MAX_EXACT_DIM],
}

/// Exact value of the preimage sum, summing `ψ(y)` over every admissible
/// `y = c_{n-1} … c_0 x*` with `0 <= n <= n_max`, `r_n(y) - T# ∈ [α, β]`,
/// `ξ0 + f_n(y) = ξ*` and `y ∈ [a]`.
///
/// Roof sums are tracked as occurrence counts of each distinct value of
/// `r`, so level sets are evaluated without binning.
pub fn j_sum_exact(m: &FlowModel, blm: &BlMeasure, q: &JQuery) -> Result<f64> {
    let k = blm.depth();
    q.validate(m, k)?;
    let ts = m.ts();
    let d = m.d();
    if d > MAX_EXACT_DIM {
        return Err(Error::UnsupportedExact(format!("cocycle dimension {d} exceeds {MAX_EXACT_DIM}")));
    }
    let levels = m.r().distinct_values(ts);
    if levels.len() > MAX_ROOF_LEVELS {
        return Err(Error::UnsupportedExact(format!(
            "{} distinct roof values exceed {MAX_ROOF_LEVELS}",
            levels.len()
        )));
    }
    if q.e.alpha >= q.e.beta {
        return Ok(0.0);
    }
    let level_of = |v: f64| levels.iter().position(|&l| l == v).expect("tabulated value");
    let roof_nonneg = levels[0] >= 0.0;
    let fmax = m.f().max_norm(ts);
    let target = q.displacement();
    let width = q.x_star.len();
    let n = ts.n_states();
    let a = &q.e.a;

    let r_of = |counts: &[u16; MAX_ROOF_LEVELS]| -> f64 {
        counts.iter().zip(&levels).map(|(&c, &v)| c as f64 * v).sum()
    };
    let contribution = |head: &[usize], key: &DpKey, paths: u128| -> f64 {
        let r_n = r_of(&key.counts);
        if !q.in_window(r_n) || key.xi[..d] != target[..] || head[..a.len()] != a[..] {
            return 0.0;
        }
        paths as f64 * blm.psi(head)
    };

    let mut layer: HashMap<DpKey, u128> = HashMap::new();
    let start = DpKey {
        head: ts.code(&q.x_star),
        counts: [0; MAX_ROOF_LEVELS],
        xi: [0; MAX_EXACT_DIM],
    };
    layer.insert(start, 1);
    let mut per_step = Vec::with_capacity(q.n_max + 1);
    let mut head = vec![0usize; width];
    let mut ext = vec![0usize; width + 1];
    for step in 0..=q.n_max {
        let mut keys: Vec<(&DpKey, &u128)> = layer.iter().collect();
        keys.sort_unstable_by(|x, y| x.0.cmp(y.0));
        let mut total = 0.0;
        for (key, &paths) in &keys {
            decode_into(key.head, n, &mut head);
            total += contribution(&head, key, paths);
        }
        per_step.push(total);
        if step == q.n_max {
            break;
        }
        let remaining = (q.n_max - step - 1) as i64;
        let mut next: HashMap<DpKey, u128> = HashMap::with_capacity(layer.len() * 2);
        for (key, &paths) in keys {
            decode_into(key.head, n, &mut head);
            ext[1..].copy_from_slice(&head);
            for c in ts.predecessors(head[0]) {
                ext[0] = c;
                let mut nk = *key;
                nk.counts[level_of(m.r().eval(&ext))] += 1;
                for (i, v) in m.f().eval(&ext).iter().enumerate() {
                    nk.xi[i] += v;
                }
                // paths that can no longer reach the target displacement or
                // the roof window contribute nothing at any later step
                if (0..d).any(|i| (target[i] - nk.xi[i]).abs() > remaining * fmax) {
                    continue;
                }
                if roof_nonneg && r_of(&nk.counts) - q.t_sharp > q.e.beta {
                    continue;
                }
                nk.head = ts.code(&ext[..width]);
                *next.entry(nk).or_insert(0) += paths;
            }
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    Ok(per_step.iter().sum())
}

fn decode_into(mut code: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Backward paths from a target window under the kernel of a tilted
/// operator, with the exact likelihood ratio against counting measure.
struct BackwardSampler<'a> {
    m: &'a FlowModel,
    tilt: &'a GibbsData,
    psi0: &'a GibbsData,
}

struct PathStep {
    n: usize,
    r_n: f64,
    f_n: Vec<i64>,
    /// `ψ(head) / P(path)`: the counting weight of the path carrying the
    /// length density, divided by its sampling probability.
    weight: f64,
}

impl<'a> BackwardSampler<'a> {
    /// Walks backward from `x_star` for at most `n_max` steps, calling
    /// `visit` on the path after each step (including the empty path)
    /// until it returns `false`.
    fn walk<R: Rng>(
        &self,
        x_star: &[usize],
        n_max: usize,
        rng: &mut R,
        mut visit: impl FnMut(&VecDeque<usize>, &PathStep) -> bool,
    ) {
        let g = self.tilt;
        let k = g.depth();
        let potential = g.operator().potential();
        let mut y: VecDeque<usize> = x_star.iter().copied().collect();
        let mut idx = g.index_of(&x_star[..k]).expect("admissible window");
        let psi_start = g.psi[idx];
        let mut log_w: f64 = 0.0;
        let mut step = PathStep {
            n: 0,
            r_n: 0.0,
            f_n: vec![0; self.m.d()],
            weight: 0.0,
        };
        loop {
            let head: Vec<usize> = y.iter().take(k).copied().collect();
            step.weight = log_w.exp() * psi_start / g.psi[idx] * self.psi0.psi_at(&head).expect("window");
            if !visit(&y, &step) || step.n == n_max {
                return;
            }
            idx = g.kernel.sample(idx, rng);
            let window = &g.windows()[idx];
            y.push_front(window[0]);
            log_w += g.log_lambda - potential[idx];
            step.n += 1;
            step.r_n += self.m.r().eval(window);
            for (a, b) in step.f_n.iter_mut().zip(self.m.f().eval(window)) {
                *a += b;
            }
        }
    }
}

/// Importance-sampling estimate of the preimage sum, with backward paths
/// drawn from the Gibbs kernel at the tilt `u` minimizing
/// `P(u) - <u, (ξ* - ξ0) / T#>`.
pub fn j_sum_mc(
    m: &FlowModel,
    blm: &BlMeasure,
    q: &JQuery,
    samples: usize,
    seed: u64,
    cfg: &PressureConfig,
) -> Result<McEstimate> {
    let k = blm.depth();
    q.validate(m, k)?;
    if samples < 1000 {
        return Err(Error::InvalidParameter("at least 1000 samples are required".into()));
    }
    if q.e.alpha >= q.e.beta {
        return Ok(McEstimate {
            estimate: 0.0,
            stderr: 0.0,
        });
    }
    if !(q.t_sharp > 0.0) {
        return Err(Error::InvalidParameter("importance sampling needs T# > 0".into()));
    }
    let target = q.displacement();
    let slope: Vec<f64> = target.iter().map(|&x| x as f64 / q.t_sharp).collect();
    let tilt_u = legendre_h(m, &slope, cfg)?.u_star;
    let tilt = solve_pressure(m, &tilt_u, cfg)?.gibbs;
    let sampler = BackwardSampler {
        m,
        tilt: &tilt,
        psi0: &blm.psi0,
    };
    let roof_nonneg = m.r().min(m.ts()) >= 0.0;
    let fmax = m.f().max_norm(m.ts());
    let a = &q.e.a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut totals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut total = 0.0;
        sampler.walk(&q.x_star, q.n_max, &mut rng, |y, st| {
            if q.in_window(st.r_n) && st.f_n == target && y.iter().take(a.len()).eq(a.iter()) {
                total += st.weight;
            }
            let left = (q.n_max - st.n) as i64;
            let reachable = st.f_n.iter().zip(&target).all(|(f, t)| (t - f).abs() <= left * fmax);
            reachable && !(roof_nonneg && st.r_n - q.t_sharp > q.e.beta)
        });
        totals.push(total);
    }
    Ok(mean_and_stderr(&totals))
}

fn mean_and_stderr(xs: &[f64]) -> McEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    McEstimate {
        estimate: mean,
        stderr: (var / n).sqrt(),
    }
}

/// Number of steps after which every path has `r_n > T# + β`.
pub fn default_n_max(m: &FlowModel, t_sharp: f64, beta: f64) -> Result<usize> {
    let rmin = m.r().min(m.ts());
    if !(rmin > 0.0) {
        return Err(Error::InvalidParameter(
            "roof is not strictly positive; pass n_max explicitly".into(),
        ));
    }
    Ok(((t_sharp + beta).max(0.0) / rmin).floor() as usize + 1)
}

/// Draws a window of length `len` from the Gibbs measure of `g`.
pub fn sample_gibbs_window<R: Rng>(g: &GibbsData, len: usize, rng: &mut R) -> Word {
    let k = g.depth();
    let mut idx = sample_discrete(&g.stationary(), rng);
    let mut w = g.windows()[idx].0.clone();
    let fwd = g.forward_kernel();
    while w.len() < len {
        idx = fwd.sample(idx, rng);
        w.push(g.windows()[idx][k - 1]);
    }
    w.truncate(len.max(k));
    Word(w)
}

fn round_vec(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| v.round() as i64).collect()
}

/// Outcome of comparing preimage-sum ratios with basic-set mass ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTest {
    pub lhs: f64,
    pub rhs: f64,
    pub log_discrepancy: f64,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    pub xi_star: Vec<Vec<i64>>,
}

/// Compares `Σ_i J(ω_i*, E1) / Σ_i J(ω_i*, E2)` with `m(E1) / m(E2)`,
/// drawing the target windows from the Gibbs measure at `u` and anchoring
/// `ξ_i* = E1.ξ + round(Ξ(u) T#)`.
#[allow(clippy::too_many_arguments)]
pub fn i_ratio_test(
    m: &FlowModel,
    u: &[f64],
    e1: &BasicSet,
    e2: &BasicSet,
    t_sharp: f64,
    n_manifolds: usize,
    seed: u64,
    cfg: &PressureConfig,
) -> Result<RatioTest> {
    if n_manifolds == 0 {
        return Err(Error::InvalidParameter("need at least one target manifold".into()));
    }
    e1.validate(m)?;
    e2.validate(m)?;
    let blm = BlMeasure::new(m, u, cfg, Density::Psi0)?;
    let k = blm.depth();
    let xi_u = blm.pp.xi.clone();
    let shift = round_vec(&xi_u.iter().map(|x| x * t_sharp).collect::<Vec<_>>());
    let xi_star: Vec<i64> = e1.xi.iter().zip(&shift).map(|(a, b)| a + b).collect();
    let len = k.max(e1.a.len()).max(e2.a.len());
    let n_max = default_n_max(m, t_sharp, e1.beta.max(e2.beta))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut j1, mut j2, mut stars) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n_manifolds {
        let x_star = sample_gibbs_window(&blm.pp.gibbs, len, &mut rng);
        let eval = |e: &BasicSet| -> Result<f64> {
            let q = JQuery {
                x_star: x_star.clone(),
                xi0: e.xi.clone(),
                xi_star: xi_star.clone(),
                t_sharp,
                e: e.clone(),
                n_max,
            };
            match j_sum_exact(m, &blm, &q) {
                Err(Error::UnsupportedExact(_)) => {
                    Ok(j_sum_mc(m, &blm, &q, 10_000, seed.wrapping_add(i as u64), cfg)?.estimate)
                }
                other => other,
            }
        };
        j1.push(eval(e1)?);
        j2.push(eval(e2)?);
        stars.push(xi_star.clone());
    }
    let s1: f64 = j1.iter().sum();
    let s2: f64 = j2.iter().sum();
    if s2 == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let mass2 = blm.basic_set_mass(e2)?;
    if mass2 == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let lhs = s1 / s2;
    let rhs = blm.basic_set_mass(e1)? / mass2;
    let log_discrepancy = if lhs > 0.0 && rhs > 0.0 {
        (lhs / rhs).ln().abs()
    } else {
        f64::INFINITY
    };
    Ok(RatioTest {
        lhs,
        rhs,
        log_discrepancy,
        j1,
        j2,
        xi_star: stars,
    })
}

/// One grid point of a growth fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub t_sharp: f64,
    pub xi_star: Vec<i64>,
    pub j: f64,
    pub h_ref: f64,
    pub fit_residual: f64,
}

/// Least-squares fit of `ln J - T# H(Ξ)` on `1, T#, ln T#`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLimitFit {
    /// `H(Ξ(u))` plus the fitted linear coefficient.
    pub h_hat: f64,
    pub h_ref: f64,
    /// Coefficient of `ln T#`.
    pub poly_exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<GridPoint>,
}

/// Lattice points ordered by distance from `target`, within `radius` in
/// each coordinate.
fn lattice_candidates(target: &[f64], radius: i64) -> Vec<Vec<i64>> {
    let base = round_vec(target);
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for &b in &base {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-radius..=radius).map(move |o| {
                    let mut q = p.clone();
                    q.push(b + o);
                    q
                })
            })
            .collect();
    }
    let dist = |p: &Vec<i64>| -> f64 { p.iter().zip(target).map(|(&a, b)| (a as f64 - b).powi(2)).sum() };
    out.sort_by(|a, b| dist(a).total_cmp(&dist(b)).then_with(|| a.cmp(b)));
    out
}

/// Evaluates `J` along `grid` with `ξ*` tracking `E.ξ + Ξ(u) T#` (the
/// nearest lattice point carrying a positive sum), and fits the growth.
pub fn local_limit_fit(
    m: &FlowModel,
    u: &[f64],
    x_star: &Word,
    grid: &[f64],
    e: &BasicSet,
    cfg: &PressureConfig,
) -> Result<LocalLimitFit> {
    if grid.len() < 4 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 1.0) {
        return Err(Error::InvalidParameter(
            "need at least four strictly increasing grid times above 1".into(),
        ));
    }
    let blm = BlMeasure::new(m, u, cfg, Density::Psi0)?;
    let xi_u = blm.pp.xi.clone();
    let h_ref = legendre_h(m, &xi_u, cfg)?.h;
    let fmax = m.f().max_norm(m.ts()).max(1);
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        let target: Vec<f64> = e.xi.iter().zip(&xi_u).map(|(&a, x)| a as f64 + x * t).collect();
        let n_max = default_n_max(m, t, e.beta)?;
        let mut found = None;
        for cand in lattice_candidates(&target, 2 * fmax) {
            let q = JQuery {
                x_star: x_star.clone(),
                xi0: e.xi.clone(),
                xi_star: cand.clone(),
                t_sharp: t,
                e: e.clone(),
                n_max,
            };
            let j = j_sum_exact(m, &blm, &q)?;
            if j > 0.0 {
                found = Some((cand, j));
                break;
            }
        }
        let (cand, j) = found.ok_or(Error::InsufficientGrowthWindow { t_sharp: t })?;
        // first-order Legendre correction for the rounding of ξ*
        let delta: f64 = cand
            .iter()
            .zip(&target)
            .zip(u)
            .map(|((&c, x), ui)| ui * (c as f64 - x))
            .sum();
        rows.push((t, cand, j, j.ln() - t * h_ref + delta));
    }
    let n = rows.len();
    let design = DMatrix::from_fn(n, 3, |i, c| match c {
        0 => 1.0,
        1 => rows[i].0,
        _ => rows[i].0.ln(),
    });
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.3));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let fitted = &design * &coef;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let points = rows
        .into_iter()
        .zip(fitted.iter())
        .map(|((t, xi_star, j, yv), fv)| GridPoint {
            t_sharp: t,
            xi_star,
            j,
            h_ref,
            fit_residual: yv - fv,
        })
        .collect();
    Ok(LocalLimitFit {
        h_hat: h_ref + coef[1],
        h_ref,
        poly_exponent: coef[2],
        intercept: coef[0],
        r2: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        points,
    })
}

/// Parameters of the block-violation statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLemmaParams {
    pub big_n: usize,
    pub eps0: f64,
    pub n: usize,
    pub t_sharp: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Result of the block-violation statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLemmaStatistic {
    pub fraction: f64,
    pub accepted: usize,
}

/// Among backward paths from Gibbs-distributed targets that end with
/// `r_j(y) ∈ [T#, T# + max r)` and `f_j(y) = round(Ξ(u) T#)`, the
/// `ψ`-weighted fraction whose `n`-th block of length `N` has
/// `‖f_N / r*_N - Ξ(u)‖ >= eps0`.
pub fn key_lemma_statistic(
    m: &FlowModel,
    u: &[f64],
    params: &KeyLemmaParams,
    cfg: &PressureConfig,
) -> Result<KeyLemmaStatistic> {
    let KeyLemmaParams {
        big_n,
        eps0,
        n,
        t_sharp,
        samples,
        seed,
    } = *params;
    if big_n == 0 || !(eps0 > 0.0) || samples == 0 || !(t_sharp > 0.0) {
        return Err(Error::InvalidParameter("need N >= 1, eps0 > 0, samples > 0, T# > 0".into()));
    }
    let blm = BlMeasure::new(m, u, cfg, Density::Psi0)?;
    let g = &blm.pp.gibbs;
    let k = g.depth();
    let xi_u = blm.pp.xi.clone();
    let target = round_vec(&xi_u.iter().map(|x| x * t_sharp).collect::<Vec<_>>());
    let rmax = m.r().max(m.ts());
    let n_max = default_n_max(m, t_sharp, rmax)?;
    let look = m.r_star().depth().max(m.f().depth());
    let block_end = (n + 1) * big_n + look - 1;
    if block_end > n_max + k {
        return Err(Error::InvalidParameter(format!(
            "block {n} of length {big_n} lies beyond the paths reachable under T# = {t_sharp}"
        )));
    }
    let sampler = BackwardSampler {
        m,
        tilt: g,
        psi0: &blm.psi0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut total, mut bad, mut accepted) = (0.0, 0.0, 0usize);
    for _ in 0..samples {
        let x_star = sample_gibbs_window(g, k, &mut rng);
        sampler.walk(&x_star, n_max, &mut rng, |y, st| {
            if st.r_n < t_sharp {
                return true;
            }
            if st.r_n < t_sharp + rmax && st.f_n == target && y.len() >= block_end {
                let path: Vec<usize> = y.iter().copied().collect();
                let block = &path[n * big_n..];
                let f_n = birkhoff_sum(m.f(), block, big_n).expect("window checked");
                let r_n = birkhoff_sum(m.r_star(), block, big_n).expect("window checked");
                let dist = f_n
                    .iter()
                    .zip(&xi_u)
                    .map(|(&a, x)| (a as f64 / r_n - x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                total += st.weight;
                accepted += 1;
                if dist >= eps0 {
                    bad += st.weight;
                }
            }
            false
        });
    }
    if accepted == 0 || total == 0.0 {
        return Err(Error::DegenerateSample);
    }
    Ok(KeyLemmaStatistic {
        fraction: bad / total,
        accepted,
    })
}
