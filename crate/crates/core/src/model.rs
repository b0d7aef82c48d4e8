//! Roof function, transfer term and cocycle over a subshift of finite type,
//! with validation of the standing hypotheses and the roof refinement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{birkhoff_sum, TransitionStructure, WindowFunction, Word};

/// Real-valued function of the first `depth` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFn {
    depth: usize,
    n_states: usize,
    values: Vec<f64>,
}

/// `Z^d`-valued function of the first `depth` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleFn {
    depth: usize,
    n_states: usize,
    dim: usize,
    values: Vec<i64>,
}

#[inline]
fn window_code(n: usize, w: &[usize]) -> usize {
    w.iter().fold(0, |acc, &s| acc * n + s)
}

impl RealFn {
    /// Tabulates `value` on every admissible word of length `depth`.
    pub fn from_fn(ts: &TransitionStructure, depth: usize, mut value: impl FnMut(&[usize]) -> f64) -> Self {
        assert!(depth >= 1, "depth must be positive");
        let n = ts.n_states();
        let mut values = vec![0.0; n.pow(depth as u32)];
        for w in ts.enumerate_cylinders(depth) {
            values[ts.code(&w)] = value(&w);
        }
        Self { depth, n_states: n, values }
    }

    pub fn constant(ts: &TransitionStructure, c: f64) -> Self {
        Self::from_fn(ts, 1, |_| c)
    }

    /// Builds a function from an explicit table, which must cover every
    /// admissible word of length `depth`.
    pub fn from_table(ts: &TransitionStructure, depth: usize, table: &[(Word, f64)]) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidModel("function depth must be at least 1".into()));
        }
        let n = ts.n_states();
        let mut values = vec![f64::NAN; n.pow(depth as u32)];
        for (w, v) in table {
            if w.len() != depth || !ts.is_admissible(w)? {
                return Err(Error::InvalidModel(format!(
                    "table key {} is not an admissible word of length {depth}",
                    ts.render(w)
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite value on {}", ts.render(w))));
            }
            values[ts.code(w)] = *v;
        }
        for w in ts.enumerate_cylinders(depth) {
            if values[ts.code(&w)].is_nan() {
                return Err(Error::InvalidModel(format!("missing value for {}", ts.render(&w))));
            }
        }
        for v in values.iter_mut().filter(|v| v.is_nan()) {
            *v = 0.0;
        }
        Ok(Self { depth, n_states: n, values })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn eval(&self, w: &[usize]) -> f64 {
        self.values[window_code(self.n_states, &w[..self.depth])]
    }

    /// The same function presented at a larger depth.
    pub fn lift(&self, ts: &TransitionStructure, depth: usize) -> Self {
        assert!(depth >= self.depth);
        Self::from_fn(ts, depth, |w| self.eval(w))
    }

    /// Drops trailing coordinates the function does not depend on.
    pub fn minimize_depth(&self, ts: &TransitionStructure) -> Self {
        let mut f = self.clone();
        while f.depth > 1 {
            let shorter = f.depth - 1;
            let mut reduced = BTreeMap::new();
            let mut ok = true;
            for w in ts.enumerate_cylinders(f.depth) {
                let v = f.eval(&w);
                let key = w[..shorter].to_vec();
                match reduced.get(&key) {
                    Some(&u) if u != v => {
                        ok = false;
                        break;
                    }
                    _ => {
                        reduced.insert(key, v);
                    }
                }
            }
            if !ok {
                break;
            }
            f = Self::from_fn(ts, shorter, |w| reduced[w]);
        }
        f
    }

    /// Values on admissible windows, in lexicographic window order.
    pub fn table(&self, ts: &TransitionStructure) -> Vec<(Word, f64)> {
        ts.enumerate_cylinders(self.depth)
            .into_iter()
            .map(|w| {
                let v = self.eval(&w);
                (w, v)
            })
            .collect()
    }

    pub fn min(&self, ts: &TransitionStructure) -> f64 {
        self.table(ts).iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self, ts: &TransitionStructure) -> f64 {
        self.table(ts).iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Distinct values taken on admissible windows, ascending.
    pub fn distinct_values(&self, ts: &TransitionStructure) -> Vec<f64> {
        let mut vals: Vec<f64> = self.table(ts).into_iter().map(|(_, v)| v).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }

    /// Total variation `sum_n var_n`.
    pub fn total_variation(&self, ts: &TransitionStructure) -> f64 {
        variation_profile(ts, self, self.depth).iter().sum()
    }
}

impl WindowFunction for RealFn {
    type Value = f64;

    fn depth(&self) -> usize {
        self.depth
    }

    fn zero(&self) -> f64 {
        0.0
    }

    fn accumulate(&self, acc: &mut f64, window: &[usize]) {
        *acc += self.eval(window);
    }
}

impl CocycleFn {
    pub fn from_fn(
        ts: &TransitionStructure,
        depth: usize,
        dim: usize,
        mut value: impl FnMut(&[usize]) -> Vec<i64>,
    ) -> Self {
        assert!(depth >= 1, "depth must be positive");
        let n = ts.n_states();
        let mut values = vec![0; n.pow(depth as u32) * dim];
        for w in ts.enumerate_cylinders(depth) {
            let v = value(&w);
            assert_eq!(v.len(), dim, "cocycle value has wrong dimension");
            let c = ts.code(&w);
            values[c * dim..(c + 1) * dim].copy_from_slice(&v);
        }
        Self { depth, n_states: n, dim, values }
    }

    pub fn zero_fn(ts: &TransitionStructure, dim: usize) -> Self {
        Self::from_fn(ts, 1, dim, |_| vec![0; dim])
    }

    pub fn from_table(
        ts: &TransitionStructure,
        depth: usize,
        dim: usize,
        table: &[(Word, Vec<i64>)],
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidModel("function depth must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for (w, v) in table {
            if w.len() != depth || !ts.is_admissible(w)? {
                return Err(Error::InvalidModel(format!(
                    "table key {} is not an admissible word of length {depth}",
                    ts.render(w)
                )));
            }
            if v.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "value on {} has dimension {}, expected {dim}",
                    ts.render(w),
                    v.len()
                )));
            }
            map.insert(w.0.clone(), v.clone());
        }
        for w in ts.enumerate_cylinders(depth) {
            if !map.contains_key(&w.0) {
                return Err(Error::InvalidModel(format!("missing value for {}", ts.render(&w))));
            }
        }
        Ok(Self::from_fn(ts, depth, dim, |w| map[w].clone()))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, w: &[usize]) -> &[i64] {
        let c = window_code(self.n_states, &w[..self.depth]);
        &self.values[c * self.dim..(c + 1) * self.dim]
    }

    pub fn lift(&self, ts: &TransitionStructure, depth: usize) -> Self {
        assert!(depth >= self.depth);
        Self::from_fn(ts, depth, self.dim, |w| self.eval(w).to_vec())
    }

    pub fn minimize_depth(&self, ts: &TransitionStructure) -> Self {
        let mut f = self.clone();
        while f.depth > 1 {
            let shorter = f.depth - 1;
            let mut reduced: BTreeMap<Vec<usize>, Vec<i64>> = BTreeMap::new();
            let consistent = ts.enumerate_cylinders(f.depth).iter().all(|w| {
                let v = f.eval(w).to_vec();
                match reduced.get(&w[..shorter]) {
                    Some(u) => *u == v,
                    None => {
                        reduced.insert(w[..shorter].to_vec(), v);
                        true
                    }
                }
            });
            if !consistent {
                break;
            }
            f = Self::from_fn(ts, shorter, f.dim, |w| reduced[w].clone());
        }
        f
    }

    pub fn table(&self, ts: &TransitionStructure) -> Vec<(Word, Vec<i64>)> {
        ts.enumerate_cylinders(self.depth)
            .into_iter()
            .map(|w| {
                let v = self.eval(&w).to_vec();
                (w, v)
            })
            .collect()
    }

    /// `max ||f||_inf` over admissible windows.
    pub fn max_norm(&self, ts: &TransitionStructure) -> i64 {
        self.table(ts)
            .iter()
            .flat_map(|(_, v)| v.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }
}

impl WindowFunction for CocycleFn {
    type Value = Vec<i64>;

    fn depth(&self) -> usize {
        self.depth
    }

    fn zero(&self) -> Vec<i64> {
        vec![0; self.dim]
    }

    fn accumulate(&self, acc: &mut Vec<i64>, window: &[usize]) {
        for (a, v) in acc.iter_mut().zip(self.eval(window)) {
            *a += v;
        }
    }
}

/// `var_n = sup |F(x) - F(y)|` over admissible `x, y` agreeing on their
/// first `n` symbols, for `n = 1..=n_max`.
pub fn variation_profile(ts: &TransitionStructure, f: &RealFn, n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .map(|n| {
            if n >= f.depth() {
                return 0.0;
            }
            let mut spread: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
            for w in ts.enumerate_cylinders(f.depth()) {
                let v = f.eval(&w);
                let e = spread.entry(w[..n].to_vec()).or_insert((v, v));
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
            }
            spread.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
        })
        .collect()
}

/// Result of checking roof positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    /// Least `n0` with `min r*_{n0} > 0`.
    pub n0: usize,
    /// `min r*_{n0}` over admissible windows.
    pub min_roof: f64,
    /// Smallest single-step value of `r*`.
    pub min_r_star: f64,
    pub r_star_nonnegative: bool,
}

pub const MAX_N0: usize = 64;

/// The bundle `(Σ, r, h, f, d)` defining the skew-product suspension flow.
#[derive(Debug, Clone)]
pub struct FlowModel {
    ts: TransitionStructure,
    r: RealFn,
    h: RealFn,
    f: CocycleFn,
    r_star: RealFn,
    validation: Validation,
}

impl FlowModel {
    /// Assembles and validates a model. `h` defaults to zero.
    pub fn new(ts: TransitionStructure, r: RealFn, h: Option<RealFn>, f: CocycleFn) -> Result<Self> {
        let h = h.unwrap_or_else(|| RealFn::constant(&ts, 0.0));
        if f.depth() > 2 {
            return Err(Error::InvalidModel(format!(
                "cocycle must depend on at most two coordinates (depth {})",
                f.depth()
            )));
        }
        if f.dim() == 0 {
            return Err(Error::InvalidModel("cocycle dimension must be positive".into()));
        }
        let n = ts.n_states();
        for (name, depth) in [("r", r.depth()), ("h", h.depth()), ("f", f.depth())] {
            if n.checked_pow(depth as u32 + 1).is_none() {
                return Err(Error::InvalidModel(format!("{name} depth {depth} too large")));
            }
        }
        let r_star = if h.is_zero() {
            r.clone()
        } else {
            let k = r.depth().max(h.depth() + 1);
            RealFn::from_fn(&ts, k, |w| r.eval(w) + h.eval(w) - h.eval(&w[1..]))
                .minimize_depth(&ts)
        };
        let validation = check_roof(&ts, &r_star)?;
        Ok(Self { ts, r, h, f, r_star, validation })
    }

    pub fn ts(&self) -> &TransitionStructure {
        &self.ts
    }

    pub fn r(&self) -> &RealFn {
        &self.r
    }

    pub fn h(&self) -> &RealFn {
        &self.h
    }

    pub fn f(&self) -> &CocycleFn {
        &self.f
    }

    pub fn r_star(&self) -> &RealFn {
        &self.r_star
    }

    pub fn d(&self) -> usize {
        self.f.dim()
    }

    pub fn n_states(&self) -> usize {
        self.ts.n_states()
    }

    pub fn validation(&self) -> Validation {
        self.validation
    }

    /// Depth at which `r` and `f` are both locally constant.
    pub fn potential_depth(&self) -> usize {
        self.r.depth().max(self.f.depth()).max(1)
    }

    /// Smallest value of `r*` on any cylinder of `a`, taken over admissible
    /// extensions when `a` is shorter than the depth of `r*`.
    pub fn roof_lower_bound(&self, a: &[usize]) -> f64 {
        let k = self.r_star.depth();
        self.ts
            .extensions(a, a.len().max(k))
            .iter()
            .map(|w| self.r_star.eval(w))
            .fold(f64::INFINITY, f64::min)
    }

    /// Presentation of the same model on the alphabet of admissible
    /// `k`-words, so that functions of depth `<= k` become depth one.
    pub fn higher_block(&self, k: usize) -> Result<FlowModel> {
        if k <= 1 {
            return Ok(self.clone());
        }
        let words = self.ts.enumerate_cylinders(k);
        let index: BTreeMap<&[usize], usize> = words.iter().enumerate().map(|(i, w)| (&w[..], i)).collect();
        let sep = if self.ts.labels().iter().all(|s| s.chars().count() == 1) { "" } else { "_" };
        let labels: Vec<String> = words
            .iter()
            .map(|w| w.iter().map(|&s| self.ts.label(s)).collect::<Vec<_>>().join(sep))
            .collect();
        let m = words.len();
        let mut matrix = vec![vec![false; m]; m];
        for (i, w) in words.iter().enumerate() {
            for c in self.ts.successors(*w.last().unwrap()) {
                let mut next = w[1..].to_vec();
                next.push(c);
                matrix[i][index[&next[..]]] = true;
            }
        }
        let ts = TransitionStructure::new(labels, &matrix)?;
        // a window of j+1 block symbols spells a base word of length k + j
        let spell = |w: &[usize]| -> Vec<usize> {
            let mut out = words[w[0]].0.clone();
            out.extend(w[1..].iter().map(|&b| *words[b].last().unwrap()));
            out
        };
        let block_depth = |d: usize| 1 + d.saturating_sub(k);
        let r = RealFn::from_fn(&ts, block_depth(self.r.depth()), |w| self.r.eval(&spell(w)));
        let h = RealFn::from_fn(&ts, block_depth(self.h.depth()), |w| self.h.eval(&spell(w)));
        let f = CocycleFn::from_fn(&ts, block_depth(self.f.depth()), self.d(), |w| {
            self.f.eval(&spell(w)).to_vec()
        });
        FlowModel::new(ts, r, Some(h), f)
    }
}

fn check_roof(ts: &TransitionStructure, r_star: &RealFn) -> Result<Validation> {
    let k = r_star.depth();
    let windows = ts.enumerate_cylinders(k);
    let index: BTreeMap<&[usize], usize> = windows.iter().enumerate().map(|(i, w)| (&w[..], i)).collect();
    // predecessors of window w' are p . w'[..k-1]
    let preds: Vec<Vec<usize>> = windows
        .iter()
        .map(|w| {
            ts.predecessors(w[0])
                .filter_map(|p| {
                    let mut cand = vec![p];
                    cand.extend_from_slice(&w[..k - 1]);
                    index.get(&cand[..]).copied()
                })
                .collect()
        })
        .collect();
    let step: Vec<f64> = windows.iter().map(|w| r_star.eval(w)).collect();
    let min_r_star = step.iter().copied().fold(f64::INFINITY, f64::min);
    let mut dp = step.clone();
    for n0 in 1..=MAX_N0 {
        let min_sum = dp.iter().copied().fold(f64::INFINITY, f64::min);
        if min_sum > 0.0 {
            return Ok(Validation {
                n0,
                min_roof: min_sum,
                min_r_star,
                r_star_nonnegative: min_r_star >= 0.0,
            });
        }
        dp = (0..windows.len())
            .map(|i| {
                step[i]
                    + preds[i]
                        .iter()
                        .map(|&j| dp[j])
                        .fold(f64::INFINITY, f64::min)
            })
            .collect();
    }
    Err(Error::RoofNotEventuallyPositive { max_n0: MAX_N0 })
}

/// Re-runs the roof positivity check.
pub fn validate_model(m: &FlowModel) -> Result<Validation> {
    check_roof(m.ts(), m.r_star())
}

/// Splits every state into a chain of `ceil(r*(a) / eps_star)` states of
/// equal roof, so that the refined roof never exceeds `eps_star`. The cocycle
/// is carried by the edge leaving the last state of each chain.
pub fn refine_roof(m: &FlowModel, eps_star: f64) -> Result<FlowModel> {
    if !(eps_star > 0.0) || !eps_star.is_finite() {
        return Err(Error::InvalidParameter(format!("eps_star must be positive, got {eps_star}")));
    }
    let base = if m.r_star().depth() > 1 {
        m.higher_block(m.r_star().depth())?
    } else {
        m.clone()
    };
    let ts = base.ts();
    let n = ts.n_states();
    let roof: Vec<f64> = (0..n).map(|a| base.r_star().eval(&[a])).collect();
    if let Some(a) = (0..n).find(|&a| roof[a] <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "roof refinement needs a positive depth-one roof; r*({}) = {}",
            ts.label(a),
            roof[a]
        )));
    }
    let pieces: Vec<usize> = roof.iter().map(|&r| ((r / eps_star).ceil() as usize).max(1)).collect();
    let mut first = Vec::with_capacity(n);
    let mut origin = Vec::new(); // refined state -> (base state, piece index)
    for a in 0..n {
        first.push(origin.len());
        for i in 0..pieces[a] {
            origin.push((a, i));
        }
    }
    let m_states = origin.len();
    let labels: Vec<String> = origin
        .iter()
        .map(|&(a, i)| {
            if pieces[a] == 1 {
                ts.label(a).to_string()
            } else {
                format!("{}.{}", ts.label(a), i + 1)
            }
        })
        .collect();
    let mut matrix = vec![vec![false; m_states]; m_states];
    for (s, &(a, i)) in origin.iter().enumerate() {
        if i + 1 < pieces[a] {
            matrix[s][s + 1] = true;
        } else {
            for b in ts.successors(a) {
                matrix[s][first[b]] = true;
            }
        }
    }
    let rts = TransitionStructure::new(labels, &matrix)?;
    let r = RealFn::from_fn(&rts, 1, |w| {
        let (a, _) = origin[w[0]];
        roof[a] / pieces[a] as f64
    });
    let d = base.d();
    let bf = base.f();
    let f = CocycleFn::from_fn(&rts, 2, d, |w| {
        let (a, i) = origin[w[0]];
        if i + 1 < pieces[a] {
            vec![0; d]
        } else {
            let (b, _) = origin[w[1]];
            bf.eval(&[a, b][..bf.depth()]).to_vec()
        }
    })
    .minimize_depth(&rts);
    FlowModel::new(rts, r, None, f)
}

/// Diagnostic on periodic-orbit data `(r_n, f_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonarithmeticityReport {
    pub max_period: usize,
    pub periodic_words: usize,
    /// Rank over Q of the differences of cocycle period sums.
    pub f_rank: usize,
    pub f_full_rank: bool,
    /// Two roof period-sum differences with irrational ratio were found
    /// (continued-fraction test at tolerance 1e-9; heuristic).
    pub irrational_ratio: bool,
    /// All roof period-sum differences are rationally related.
    pub lattice: bool,
    /// For `d = 1`: roof sums of integer combinations of periodic orbits with
    /// zero cocycle displacement contain an irrational ratio (heuristic).
    /// `None` when `d > 1` or no such combinations exist.
    pub fiber_irrational: Option<bool>,
    pub heuristic: bool,
}

const RATIO_TOL: f64 = 1e-9;
const MAX_DENOM: i64 = 100_000;

/// True if `x` is within `RATIO_TOL` of a rational with small denominator.
fn looks_rational(x: f64) -> bool {
    if !x.is_finite() {
        return false;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.saturating_mul(h1).saturating_add(h0);
        let k2 = a.saturating_mul(k1).saturating_add(k0);
        if k2 > MAX_DENOM {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        // an irrational number's convergents satisfy |x - p/q| ~ 1/q^2, so
        // accept only approximations far better than that
        let err = (x - h1 as f64 / k1 as f64).abs();
        let q2 = (k1 as f64) * (k1 as f64);
        if err <= RATIO_TOL * x.abs().max(1.0) && err * q2 <= 1e-4 {
            return true;
        }
        let frac = y - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    false
}

fn any_irrational_pair(values: &[f64]) -> bool {
    let nz: Vec<f64> = values.iter().copied().filter(|v| v.abs() > RATIO_TOL).collect();
    for i in 0..nz.len() {
        for j in i + 1..nz.len() {
            if !looks_rational(nz[i] / nz[j]) {
                return true;
            }
        }
    }
    false
}

fn rational_rank(vectors: &[Vec<i64>]) -> usize {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .filter(|v| v.iter().any(|&x| x != 0))
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[c] != 0 {
                let f = row[c];
                for j in 0..cols {
                    row[j] = row[j] * pivot[c] - pivot[j] * f;
                }
                let g = row.iter().fold(0i128, |g, &x| gcd(g, x.abs()));
                if g > 1 {
                    row.iter_mut().for_each(|x| *x /= g);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period sums `(r_p, f_p)` of the closed word `w` read cyclically.
pub fn period_sums(m: &FlowModel, w: &[usize]) -> (f64, Vec<i64>) {
    let depth = m.r().depth().max(m.f().depth());
    let cyc: Vec<usize> = w.iter().chain(w.iter().cycle().take(depth)).copied().collect();
    let r = birkhoff_sum(m.r(), &cyc, w.len()).expect("cyclic window is long enough");
    let f = birkhoff_sum(m.f(), &cyc, w.len()).expect("cyclic window is long enough");
    (r, f)
}

/// Enumerates periodic words of period `<= max_period` and reports rank and
/// ratio diagnostics of their period sums.
pub fn nonarithmeticity_report(m: &FlowModel, max_period: usize) -> Result<NonarithmeticityReport> {
    if max_period == 0 || max_period > 14 {
        return Err(Error::InvalidParameter(format!(
            "period bound must lie in 1..=14, got {max_period}"
        )));
    }
    let mut sums = Vec::new();
    for p in 1..=max_period {
        for w in m.ts().periodic_words(p) {
            sums.push(period_sums(m, &w));
        }
    }
    let base_f = sums[0].1.clone();
    let f_diffs: Vec<Vec<i64>> = sums
        .iter()
        .map(|(_, f)| f.iter().zip(&base_f).map(|(a, b)| a - b).collect())
        .collect();
    let f_rank = rational_rank(&f_diffs);

    let mut r_vals: Vec<f64> = sums.iter().map(|(r, _)| *r).collect();
    r_vals.sort_by(f64::total_cmp);
    r_vals.dedup_by(|a, b| (*a - *b).abs() <= RATIO_TOL);
    let r_diffs: Vec<f64> = r_vals.iter().map(|v| v - r_vals[0]).collect();
    let irrational_ratio = any_irrational_pair(&r_diffs);

    let fiber_irrational = if m.d() == 1 {
        // distinct primitive (r, f) generators, then pairwise f-cancelling combinations
        let mut gens: Vec<(f64, i64)> = sums.iter().map(|(r, f)| (*r, f[0])).collect();
        gens.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
        gens.dedup_by(|a, b| a.1 == b.1 && (a.0 - b.0).abs() <= RATIO_TOL);
        let mut fiber = Vec::new();
        for (i, &(ri, fi)) in gens.iter().enumerate() {
            if fi == 0 {
                fiber.push(ri);
            }
            for &(rj, fj) in &gens[i + 1..] {
                if fi != 0 && fj != 0 {
                    let g = gcd(fi.abs() as i128, fj.abs() as i128) as i64;
                    fiber.push((fj / g) as f64 * ri - (fi / g) as f64 * rj);
                }
            }
            if fiber.len() > 400 {
                break;
            }
        }
        (!fiber.is_empty()).then(|| any_irrational_pair(&fiber))
    } else {
        None
    };

    Ok(NonarithmeticityReport {
        max_period,
        periodic_words: sums.len(),
        f_rank,
        f_full_rank: f_rank == m.d(),
        irrational_ratio,
        lattice: !irrational_ratio,
        fiber_irrational,
        heuristic: true,
    })
}

/// A depth plus a table keyed by word strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RealTable {
    pub depth: usize,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CocycleTable {
    pub depth: usize,
    pub values: BTreeMap<String, Vec<i64>>,
}

/// On-disk JSON model description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub transitions: Vec<Vec<u8>>,
    pub d: usize,
    pub r: RealTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<RealTable>,
    pub f: CocycleTable,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn build(&self) -> Result<FlowModel> {
        let matrix: Vec<Vec<bool>> = self
            .transitions
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| match x {
                        0 => Ok(false),
                        1 => Ok(true),
                        _ => Err(Error::ModelFormat(format!("transition entry {x} is not 0/1"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let ts = TransitionStructure::new(self.states.clone(), &matrix)?;
        let real = |t: &RealTable| -> Result<RealFn> {
            let entries = t
                .values
                .iter()
                .map(|(k, v)| Ok((ts.parse_word(k)?, *v)))
                .collect::<Result<Vec<_>>>()?;
            RealFn::from_table(&ts, t.depth, &entries)
        };
        let r = real(&self.r)?;
        let h = self.h.as_ref().map(real).transpose()?;
        let entries = self
            .f
            .values
            .iter()
            .map(|(k, v)| Ok((ts.parse_word(k)?, v.clone())))
            .collect::<Result<Vec<_>>>()?;
        let f = CocycleFn::from_table(&ts, self.f.depth, self.d, &entries)?;
        FlowModel::new(ts, r, h, f)
    }

    pub fn from_model(m: &FlowModel) -> Self {
        let ts = m.ts();
        let real = |f: &RealFn| RealTable {
            depth: f.depth(),
            values: f.table(ts).into_iter().map(|(w, v)| (ts.render(&w), v)).collect(),
        };
        ModelFile {
            states: ts.labels().to_vec(),
            transitions: ts
                .matrix()
                .iter()
                .map(|row| row.iter().map(|&b| b as u8).collect())
                .collect(),
            d: m.d(),
            r: real(m.r()),
            h: (!m.h().is_zero()).then(|| real(m.h())),
            f: CocycleTable {
                depth: m.f().depth(),
                values: m.f().table(ts).into_iter().map(|(w, v)| (ts.render(&w), v)).collect(),
            },
        }
    }
}
