//! Ruelle transfer operator on depth-`k` cylinders, its leading eigendata and
//! the induced Markov kernels.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::FlowModel;
use crate::sft::Word;

/// Sparse row-stochastic matrix over cylinder indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Kernel {
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().find(|(j, _)| *j == to).map_or(0.0, |(_, p)| *p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let row = &self.rows[from];
        let mut u: f64 = rng.gen();
        for &(j, p) in row {
            if u < p {
                return j;
            }
            u -= p;
        }
        row.last().expect("kernel rows are non-empty").0
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Draws an index from a discrete distribution given by non-negative weights
/// summing to one.
pub fn sample_discrete<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.gen();
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

/// `(L F)(x) = sum_{σy = x} exp(s r(y) + <u, f(y)>) F(y)` on depth-`k`
/// cylinder functions.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    depth: usize,
    n_states: usize,
    s: f64,
    u: Vec<f64>,
    windows: Vec<Word>,
    index: Vec<usize>,
    /// log-weight `s r(y) + <u, f(y)>` per window
    potential: Vec<f64>,
    /// stored weights are `exp(potential - log_scale)`
    log_scale: f64,
    /// row `x`: the pre-images `y` with their scaled weights
    rows: Vec<Vec<(usize, f64)>>,
    mixing: bool,
    irreducible: bool,
}

const NO_INDEX: usize = usize::MAX;

impl TransferMatrix {
    /// Builds the operator on cylinders of the given depth (at least the
    /// depth of `r` and `f`).
    pub fn build(m: &FlowModel, s: f64, u: &[f64], depth: usize) -> Result<Self> {
        if u.len() != m.d() {
            return Err(Error::InvalidParameter(format!(
                "u has dimension {}, model has d = {}",
                u.len(),
                m.d()
            )));
        }
        if depth < m.potential_depth() {
            return Err(Error::InvalidParameter(format!(
                "operator depth {depth} below potential depth {}",
                m.potential_depth()
            )));
        }
        if !s.is_finite() || u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite operator parameter".into()));
        }
        let ts = m.ts();
        let n = ts.n_states();
        let windows = ts.enumerate_cylinders(depth);
        let mut index = vec![NO_INDEX; n.pow(depth as u32)];
        for (i, w) in windows.iter().enumerate() {
            index[ts.code(w)] = i;
        }
        let potential: Vec<f64> = windows
            .iter()
            .map(|y| {
                let fy = m.f().eval(y);
                s * m.r().eval(y) + u.iter().zip(fy).map(|(a, &b)| a * b as f64).sum::<f64>()
            })
            .collect();
        let log_scale = potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rows = windows
            .iter()
            .map(|x| {
                ts.predecessors(x[0])
                    .map(|c| {
                        let mut y = Vec::with_capacity(depth);
                        y.push(c);
                        y.extend_from_slice(&x[..depth - 1]);
                        let j = index[ts.code(&y)];
                        debug_assert_ne!(j, NO_INDEX);
                        (j, (potential[j] - log_scale).exp())
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            depth,
            n_states: n,
            s,
            u: u.to_vec(),
            windows,
            index,
            potential,
            log_scale,
            rows,
            mixing: ts.mixing_exponent().is_ok(),
            irreducible: ts.is_irreducible(),
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn windows(&self) -> &[Word] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Index of the cylinder spelled by the first `depth` symbols of `w`.
    pub fn index_of(&self, w: &[usize]) -> Option<usize> {
        if w.len() < self.depth || w[..self.depth].iter().any(|&s| s >= self.n_states) {
            return None;
        }
        let code = w[..self.depth].iter().fold(0, |acc, &s| acc * self.n_states + s);
        let i = self.index[code];
        (i != NO_INDEX).then_some(i)
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Rows of pre-images with weights divided by `exp(log_scale)`.
    pub fn scaled_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Dense copy, `M[x][y]`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let scale = self.log_scale.exp();
        let mut out = vec![vec![0.0; n]; n];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, w) in row {
                out[x][y] += w * scale;
            }
        }
        out
    }

    /// Applies the scaled operator `exp(-log_scale) L`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(y, w)| w * v[y]).sum();
        }
    }

    /// Applies the transpose of the scaled operator.
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, w) in row {
                out[y] += w * v[x];
            }
        }
    }
}

/// Leading eigendata of a transfer matrix.
#[derive(Debug, Clone)]
pub struct GibbsData {
    pub lambda: f64,
    pub log_lambda: f64,
    /// Positive right eigenvector, normalized so that `sum psi * nu = 1`.
    pub psi: Vec<f64>,
    /// Non-negative left eigenvector of total mass one.
    pub nu: Vec<f64>,
    /// Backward (pre-image) kernel `q(x -> y) = M[x][y] psi(y) / (λ psi(x))`.
    pub kernel: Kernel,
    pub iterations: usize,
    lambda_scaled: f64,
    operator: TransferMatrix,
}

pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Iterations between updates of the adaptive shift.
const SHIFT_UPDATE: usize = 256;

/// Power iteration on `M + cI`. The shift starts at `initial_shift` and is
/// reset to the running eigenvalue estimate every `SHIFT_UPDATE` iterations,
/// which keeps the Perron root strictly dominant and damps eigenvalues near
/// `-λ` (nearly periodic operators). Returns `(λ, v, iterations)` for `M`.
fn power_iteration(
    n: usize,
    initial_shift: f64,
    apply: impl Fn(&[f64], &mut [f64]),
) -> Result<(f64, Vec<f64>, usize)> {
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut shift = initial_shift;
    let mut last_residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        apply(&v, &mut w);
        let lambda = w.iter().sum::<f64>() / v.iter().sum::<f64>();
        let vmax = v.iter().copied().fold(0.0, f64::max);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max)
            / (vmax * lambda.abs().max(f64::MIN_POSITIVE));
        last_residual = residual;
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::NoConvergence { iterations: it, residual });
        }
        if residual <= RESIDUAL_TOL * 0.1 && it > 1 {
            return Ok((lambda, v, it));
        }
        if it % SHIFT_UPDATE == 0 {
            shift = lambda;
        }
        let scale = w
            .iter()
            .zip(&v)
            .map(|(a, b)| a + shift * b)
            .fold(0.0, f64::max);
        for (a, b) in v.iter_mut().zip(&w) {
            *a = (b + shift * *a) / scale;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: last_residual,
    })
}

/// Power iteration on the operator and its transpose. Irreducible but
/// periodic operators start from a positive shift; see `power_iteration`.
pub fn leading_triple(op: &TransferMatrix) -> Result<GibbsData> {
    if !op.irreducible {
        return Err(Error::NotPrimitive);
    }
    let n = op.len();
    let shift = if op.mixing {
        0.0
    } else {
        op.rows.iter().map(|r| r.iter().map(|x| x.1).sum::<f64>()).sum::<f64>() / n as f64
    };
    let (lambda_scaled, mut psi, it_r) = power_iteration(n, shift, |v, out| op.apply(v, out))?;
    let (_, mut nu, it_l) = power_iteration(n, shift, |v, out| op.apply_transpose(v, out))?;
    let total: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= total);
    let pairing: f64 = psi.iter().zip(&nu).map(|(a, b)| a * b).sum();
    psi.iter_mut().for_each(|x| *x /= pairing);

    let kernel = Kernel {
        rows: op
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let mut probs: Vec<(usize, f64)> = row
                    .iter()
                    .map(|&(y, w)| (y, w * psi[y] / (lambda_scaled * psi[x])))
                    .collect();
                let total: f64 = probs.iter().map(|p| p.1).sum();
                probs.iter_mut().for_each(|p| p.1 /= total);
                probs
            })
            .collect(),
    };
    let log_lambda = lambda_scaled.ln() + op.log_scale;
    Ok(GibbsData {
        lambda: log_lambda.exp(),
        log_lambda,
        lambda_scaled,
        psi,
        nu,
        kernel,
        iterations: it_r.max(it_l),
        operator: op.clone(),
    })
}

/// `ln λ` of the operator with coefficients `(s, u)` at the minimal depth.
pub fn topological_pressure(m: &FlowModel, s: f64, u: &[f64]) -> Result<f64> {
    let op = build_operator(m, s, u)?;
    Ok(leading_triple(&op)?.log_lambda)
}

/// Operator at the minimal depth on which `r` and `f` are locally constant.
pub fn build_operator(m: &FlowModel, s: f64, u: &[f64]) -> Result<TransferMatrix> {
    TransferMatrix::build(m, s, u, m.potential_depth())
}

impl GibbsData {
    pub fn operator(&self) -> &TransferMatrix {
        &self.operator
    }

    pub fn depth(&self) -> usize {
        self.operator.depth
    }

    pub fn windows(&self) -> &[Word] {
        &self.operator.windows
    }

    pub fn index_of(&self, w: &[usize]) -> Option<usize> {
        self.operator.index_of(w)
    }

    /// `psi` on the cylinder spelled by the first `depth` symbols of `w`.
    pub fn psi_at(&self, w: &[usize]) -> Option<f64> {
        self.index_of(w).map(|i| self.psi[i])
    }

    /// Stationary law of the kernel, `psi * nu`.
    pub fn stationary(&self) -> Vec<f64> {
        self.psi.iter().zip(&self.nu).map(|(a, b)| a * b).collect()
    }

    /// `∫ g dμ` for a function of the depth-`k` cylinder.
    pub fn integrate(&self, g: impl Fn(&[usize]) -> f64) -> f64 {
        self.windows()
            .iter()
            .zip(self.stationary())
            .map(|(w, p)| g(w) * p)
            .sum()
    }

    /// Time reversal of the backward kernel: the law of the next window when
    /// reading a Gibbs-distributed sequence left to right.
    pub fn forward_kernel(&self) -> Kernel {
        let pi = self.stationary();
        let n = pi.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (x, row) in self.kernel.rows.iter().enumerate() {
            for &(y, q) in row {
                rows[y].push((x, pi[x] * q / pi[y]));
            }
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|p| p.0);
            let total: f64 = row.iter().map(|p| p.1).sum();
            row.iter_mut().for_each(|p| p.1 /= total);
        }
        Kernel { rows }
    }

    /// `‖L psi - λ psi‖_∞ / ‖psi‖_∞`.
    pub fn right_residual(&self) -> f64 {
        let mut out = vec![0.0; self.psi.len()];
        self.operator.apply(&self.psi, &mut out);
        let max = self.psi.iter().copied().fold(0.0, f64::max);
        out.iter()
            .zip(&self.psi)
            .map(|(a, b)| (a - self.lambda_scaled * b).abs())
            .fold(0.0, f64::max)
            / max
            * self.operator.log_scale.exp()
    }

    /// `‖νᵀL - λ νᵀ‖_1`.
    pub fn left_residual(&self) -> f64 {
        let mut out = vec![0.0; self.nu.len()];
        self.operator.apply_transpose(&self.nu, &mut out);
        out.iter().zip(&self.nu).map(|(a, b)| (a - self.lambda_scaled * b).abs()).sum::<f64>()
            * self.operator.log_scale.exp()
    }
}
