//! Orbits of the skew-product suspension flow in symbolic coordinates
//! `(x, ξ, t)`, asymptotic-cycle estimates, and the word surgeries used to
//! build holonomies between stable leaves.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::BlMeasure;
use crate::model::FlowModel;
use crate::sft::{birkhoff_sum, BridgeTable, TransitionStructure, Word};
use crate::transfer::{sample_discrete, GibbsData, Kernel};

#[derive(Debug, Clone)]
enum Source {
    Gibbs {
        windows: Vec<Word>,
        kernel: Kernel,
        current: usize,
        rng: ChaCha8Rng,
    },
    Periodic {
        word: Word,
        pos: usize,
    },
    Explicit,
    Alternator {
        patterns: [Word; 2],
        bridges: Option<BridgeTable>,
        ts: TransitionStructure,
        block: u32,
        last: Option<usize>,
    },
}

/// Lazily extends a one-sided symbol sequence.
#[derive(Debug, Clone)]
pub struct SymbolGenerator {
    source: Source,
    pending: VecDeque<usize>,
    emitted: usize,
}

fn cyclically_admissible(ts: &TransitionStructure, w: &[usize]) -> Result<bool> {
    if w.is_empty() {
        return Ok(false);
    }
    let mut twice = w.to_vec();
    twice.extend_from_slice(w);
    ts.is_admissible(&twice)
}

impl SymbolGenerator {
    /// Markov chain of depth-`k` windows under the Gibbs measure of `gibbs`,
    /// started from its stationary law.
    pub fn gibbs_chain(gibbs: &GibbsData, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current = sample_discrete(&gibbs.stationary(), &mut rng);
        let windows = gibbs.windows().to_vec();
        let pending = windows[current].iter().copied().collect();
        Self {
            source: Source::Gibbs {
                windows,
                kernel: gibbs.forward_kernel(),
                current,
                rng,
            },
            pending,
            emitted: 0,
        }
    }

    /// `w w w ...`; `w w` must be admissible.
    pub fn periodic(ts: &TransitionStructure, word: Word) -> Result<Self> {
        if !cyclically_admissible(ts, &word)? {
            return Err(Error::InvalidWord(format!("{} is not a periodic admissible word", ts.render(&word))));
        }
        Ok(Self {
            source: Source::Periodic { word, pos: 0 },
            pending: VecDeque::new(),
            emitted: 0,
        })
    }

    /// Emits exactly the symbols of `word`, then runs dry.
    pub fn explicit(ts: &TransitionStructure, word: Word) -> Result<Self> {
        if !ts.is_admissible(&word)? {
            return Err(Error::InvalidWord(format!("{} is not admissible", ts.render(&word))));
        }
        Ok(Self {
            source: Source::Explicit,
            pending: word.0.into_iter().collect(),
            emitted: 0,
        })
    }

    /// Blocks of length `1, 2, 4, 8, ...` alternating between the periodic
    /// patterns `first^∞` and `second^∞`, joined by bridge words where the
    /// junction is forbidden.
    pub fn block_alternator(ts: &TransitionStructure, first: Word, second: Word) -> Result<Self> {
        for w in [&first, &second] {
            if !cyclically_admissible(ts, w)? {
                return Err(Error::InvalidWord(format!("{} is not a periodic admissible word", ts.render(w))));
            }
        }
        Ok(Self {
            source: Source::Alternator {
                patterns: [first, second],
                bridges: ts.bridge_words().ok(),
                ts: ts.clone(),
                block: 0,
                last: None,
            },
            pending: VecDeque::new(),
            emitted: 0,
        })
    }

    /// Number of symbols handed out so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    fn refill(&mut self) {
        match &mut self.source {
            Source::Gibbs {
                windows,
                kernel,
                current,
                rng,
            } => {
                let next = kernel.sample(*current, rng);
                *current = next;
                self.pending.push_back(*windows[next].last().expect("non-empty window"));
            }
            Source::Periodic { word, pos } => {
                self.pending.push_back(word[*pos]);
                *pos = (*pos + 1) % word.len();
            }
            Source::Explicit => {}
            Source::Alternator {
                patterns,
                bridges,
                ts,
                block,
                last,
            } => {
                let pattern = &patterns[(*block % 2) as usize];
                let first = pattern[0];
                if let Some(prev) = *last {
                    if !ts.allowed(prev, first) {
                        match bridges {
                            Some(bt) => self.pending.extend(bt.bridge(prev, first).iter().copied()),
                            None => return,
                        }
                    }
                }
                let len = 1usize << (*block).min(40);
                self.pending.extend((0..len).map(|i| pattern[i % pattern.len()]));
                *last = self.pending.back().copied();
                *block += 1;
            }
        }
    }

    pub fn next_symbol(&mut self) -> Option<usize> {
        if self.pending.is_empty() {
            self.refill();
        }
        let s = self.pending.pop_front()?;
        self.emitted += 1;
        Some(s)
    }
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum - self.carry
    }
}

const REBASE_EVERY: u64 = 1000;
const TRIM_AT: usize = 1 << 16;

/// A point `(x, ξ, t)` of the suspension together with the generator that
/// supplies the future of `x`.
#[derive(Debug, Clone)]
pub struct SymbolicState {
    buf: Vec<usize>,
    cursor: usize,
    offset: usize,
    gen: SymbolGenerator,
    xi: Vec<i64>,
    t_base: f64,
    clock: Kahan,
    roof: Kahan,
    crossings: u64,
    elapsed_rebased: f64,
}

impl SymbolicState {
    /// Requires `0 <= t < r*(x)`.
    pub fn new(m: &FlowModel, gen: SymbolGenerator, xi: Vec<i64>, t: f64) -> Result<Self> {
        if xi.len() != m.d() {
            return Err(Error::InvalidParameter(format!("ξ must have dimension {}", m.d())));
        }
        let mut st = Self {
            buf: Vec::new(),
            cursor: 0,
            offset: 0,
            gen,
            xi,
            t_base: t,
            clock: Kahan::default(),
            roof: Kahan::default(),
            crossings: 0,
            elapsed_rebased: 0.0,
        };
        st.ensure(Self::lookahead(m))?;
        let rs = m.r_star().eval(st.current());
        if !(t >= 0.0 && t < rs) {
            return Err(Error::InvalidParameter(format!("need 0 <= t < r*(x) = {rs}, got t = {t}")));
        }
        Ok(st)
    }

    fn lookahead(m: &FlowModel) -> usize {
        m.r_star().depth().max(m.f().depth())
    }

    /// Makes at least `n` symbols available from the cursor on.
    fn ensure(&mut self, n: usize) -> Result<()> {
        while self.buf.len() < self.cursor + n {
            match self.gen.next_symbol() {
                Some(s) => self.buf.push(s),
                None => {
                    return Err(Error::OrbitTruncated {
                        emitted: self.gen.emitted(),
                    })
                }
            }
        }
        Ok(())
    }

    fn current(&self) -> &[usize] {
        &self.buf[self.cursor..]
    }

    /// Symbols from the current position on, as far as generated.
    pub fn window(&self) -> &[usize] {
        self.current()
    }

    /// Number of section crossings since the start of the orbit.
    pub fn position(&self) -> usize {
        self.offset + self.cursor
    }

    pub fn xi(&self) -> &[i64] {
        &self.xi
    }

    pub fn t(&self) -> f64 {
        self.t_base + (self.clock.value() - self.roof.value())
    }

    /// Total flow time elapsed since construction.
    pub fn elapsed(&self) -> f64 {
        self.clock.value() + self.elapsed_rebased
    }

    /// Flows for time `dt >= 0`.
    pub fn advance(&mut self, m: &FlowModel, dt: f64) -> Result<()> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("flow time must be finite and >= 0, got {dt}")));
        }
        self.clock.add(dt);
        let look = Self::lookahead(m);
        loop {
            self.ensure(look)?;
            let x = &self.buf[self.cursor..];
            let rs = m.r_star().eval(x);
            if self.t_base + (self.clock.value() - self.roof.value()) < rs {
                return Ok(());
            }
            for (a, b) in self.xi.iter_mut().zip(m.f().eval(x)) {
                *a += b;
            }
            self.roof.add(rs);
            self.cursor += 1;
            self.crossings += 1;
            if self.crossings % REBASE_EVERY == 0 {
                self.rebase();
            }
        }
    }

    fn rebase(&mut self) {
        self.elapsed_rebased += self.clock.value();
        self.t_base = self.t();
        self.clock = Kahan::default();
        self.roof = Kahan::default();
        if self.cursor >= TRIM_AT {
            self.buf.drain(..self.cursor);
            self.offset += self.cursor;
            self.cursor = 0;
        }
    }
}

/// The state reached after flowing `st` for time `dt`.
pub fn advance_geodesic(st: &SymbolicState, m: &FlowModel, dt: f64) -> Result<SymbolicState> {
    let mut next = st.clone();
    next.advance(m, dt)?;
    Ok(next)
}

/// `ξ_T` sampled along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub times: Vec<f64>,
    pub xi_values: Vec<Vec<i64>>,
    pub slopes: Vec<Vec<f64>>,
}

impl OrbitRecord {
    pub fn dim(&self) -> usize {
        self.xi_values.first().map_or(0, Vec::len)
    }

    /// `max - min` of the `i`-th slope over grid times `>= t_min`.
    pub fn slope_spread(&self, i: usize, t_min: f64) -> f64 {
        let vals = self
            .times
            .iter()
            .zip(&self.slopes)
            .filter(|(t, _)| **t >= t_min)
            .map(|(_, s)| s[i]);
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi < lo {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Flows `st` along the grid (times measured from the current state),
/// recording `ξ_T` and `ξ_T / T`.
pub fn xi_series(st: &SymbolicState, m: &FlowModel, grid: &[f64]) -> Result<OrbitRecord> {
    if grid.is_empty() || !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be positive and strictly increasing".into()));
    }
    let mut st = st.clone();
    let start = st.elapsed();
    let mut rec = OrbitRecord {
        times: Vec::with_capacity(grid.len()),
        xi_values: Vec::with_capacity(grid.len()),
        slopes: Vec::with_capacity(grid.len()),
    };
    for &big_t in grid {
        let dt = (start + big_t - st.elapsed()).max(0.0);
        st.advance(m, dt)?;
        rec.times.push(big_t);
        rec.slopes.push(st.xi.iter().map(|&x| x as f64 / big_t).collect());
        rec.xi_values.push(st.xi.clone());
    }
    Ok(rec)
}

/// Geometric grid of `points` times from `t_min` to `t_max`.
pub fn geometric_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![t_max];
    }
    let ratio = (t_max / t_min).ln() / (points - 1) as f64;
    (0..points).map(|i| t_min * (ratio * i as f64).exp()).collect()
}

/// The pair `(R⁺, F)` comparing two words with a common tail.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleDelta {
    pub r_plus: f64,
    pub f: Vec<i64>,
}

/// `R⁺ = r_q(y) - r_p(x)` and `F = f_p(x) - f_q(y)` for words whose
/// shifted tails `σ^p x` and `σ^q y` agree.
pub fn cocycles_rf(x: &[usize], y: &[usize], p: usize, q: usize, m: &FlowModel) -> Result<CocycleDelta> {
    let need = m.r().depth() + m.f().depth();
    let (xt, yt) = (x.get(p..).unwrap_or(&[]), y.get(q..).unwrap_or(&[]));
    let common = xt.len().min(yt.len());
    if common < need {
        return Err(Error::InsufficientWindow {
            needed: need,
            available: common,
        });
    }
    if xt[..common] != yt[..common] {
        return Err(Error::NotEquivalent(format!(
            "σ^{p} x and σ^{q} y differ within the first {common} symbols"
        )));
    }
    let rp = birkhoff_sum(m.r(), x, p)?;
    let rq = birkhoff_sum(m.r(), y, q)?;
    let fp = birkhoff_sum(m.f(), x, p)?;
    let fq = birkhoff_sum(m.f(), y, q)?;
    Ok(CocycleDelta {
        r_plus: rq - rp,
        f: fp.iter().zip(&fq).map(|(a, b)| a - b).collect(),
    })
}

/// Result of exchanging the blocks `[0, N)` and `[nN, (n+1)N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockExchange {
    pub old_word: Word,
    pub word: Word,
    /// Index of `x_0` in both words.
    pub origin: usize,
    /// Where the common tail starts, measured from `origin`, in the old and
    /// new words.
    pub p: usize,
    pub q: usize,
    pub delta_r: f64,
    pub delta_f: Vec<i64>,
}

/// Swaps the blocks `x_0 … x_{N-1}` and `x_{nN} … x_{(n+1)N-1}` of the
/// sequence whose `x_0` sits at `w[origin]`, inserting a bridge word at each
/// of the four junctions.
pub fn kappa_block_exchange(
    w: &[usize],
    origin: usize,
    n: usize,
    big_n: usize,
    bt: &BridgeTable,
    m: &FlowModel,
) -> Result<BlockExchange> {
    if n < 1 || big_n < 1 {
        return Err(Error::InvalidParameter("need n >= 1 and N >= 1".into()));
    }
    let ts = m.ts();
    if !ts.is_admissible(w)? {
        return Err(Error::InvalidWord(format!("{} is not admissible", ts.render(w))));
    }
    let p = (n + 1) * big_n;
    let right = m.r().depth() + m.f().depth();
    let needed = origin.max(1) + p + right;
    if origin < 1 || w.len() < needed {
        return Err(Error::InsufficientWindow {
            needed,
            available: w.len(),
        });
    }
    let x = |i: usize| w[origin + i];
    let block = |a: usize, b: usize| &w[origin + a..origin + b];
    let pieces: [&[usize]; 9] = [
        &w[..origin],
        bt.bridge(w[origin - 1], x(n * big_n)),
        block(n * big_n, p),
        bt.bridge(x(p - 1), x(big_n)),
        block(big_n, n * big_n),
        bt.bridge(x(n * big_n - 1), x(0)),
        block(0, big_n),
        bt.bridge(x(big_n - 1), x(p)),
        &w[origin + p..],
    ];
    let new = Word::concat(&pieces);
    debug_assert_eq!(new.len(), w.len() + 4 * bt.bridge_length());
    if !ts.is_admissible(&new)? {
        return Err(Error::InadmissibleSurgery(format!(
            "exchange with n = {n}, N = {big_n} gives {}",
            ts.render(&new)
        )));
    }
    let q = p + 4 * bt.bridge_length();
    let delta = cocycles_rf(&w[origin..], &new[origin..], p, q, m)?;
    Ok(BlockExchange {
        old_word: Word::from(w),
        word: new,
        origin,
        p,
        q,
        delta_r: delta.r_plus,
        delta_f: delta.f,
    })
}

/// A distortion ratio together with the two-sided bound it must obey.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionCheck {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

impl DistortionCheck {
    pub fn within(&self) -> bool {
        let slack = 1e-12 * self.upper;
        self.ratio <= self.upper + slack && self.ratio >= self.lower * (1.0 - 1e-12)
    }
}

fn psi_spread(blm0: &BlMeasure) -> f64 {
    let psi = &blm0.psi0.psi;
    let max = psi.iter().copied().fold(0.0, f64::max);
    let min = psi.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// `exp[r_L(old) - r_{L'}(new)] ψ(new) / ψ(old)` where the sums run up to
/// the start of the common tail, with `old` and `new` preceded by
/// `w_prefix`.
fn length_ratio(
    blm0: &BlMeasure,
    old: &[usize],
    new: &[usize],
    len_old: usize,
    len_new: usize,
) -> Result<f64> {
    let m = blm0.model();
    let k = blm0.depth();
    if old.len() < k || new.len() < k {
        return Err(Error::InsufficientWindow {
            needed: k,
            available: old.len().min(new.len()),
        });
    }
    let r_old = birkhoff_sum(m.r(), old, len_old)?;
    let r_new = birkhoff_sum(m.r(), new, len_new)?;
    Ok((r_old - r_new).exp() * blm0.psi(new) / blm0.psi(old))
}

/// Distortion of hyperbolic length under a block exchange, read on the
/// cylinder of `w_prefix` followed by the exchanged sequence.
pub fn distortion_ratio_kappa(blm0: &BlMeasure, w_prefix: &[usize], kb: &BlockExchange) -> Result<DistortionCheck> {
    let m = blm0.model();
    let old = Word::concat(&[w_prefix, &kb.old_word]);
    let new = Word::concat(&[w_prefix, &kb.word]);
    if !m.ts().is_admissible(&old)? {
        return Err(Error::InvalidWord("prefix does not precede the word".into()));
    }
    let lead = w_prefix.len() + kb.origin;
    let ratio = length_ratio(blm0, &old, &new, lead + kb.p, lead + kb.q)?;
    let bound = psi_spread(blm0) * (kb.delta_r.abs() + m.r().total_variation(m.ts())).exp();
    Ok(DistortionCheck {
        ratio,
        lower: 1.0 / bound,
        upper: bound,
    })
}

/// Result of replacing the future of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffixExchange {
    pub word: Word,
    pub check: DistortionCheck,
    pub ratio_bound_ok: bool,
}

/// `max |r_M(β y)|` over bridges `β` of length `M` and admissible
/// continuations `y`.
pub fn bridge_roof_bound(m: &FlowModel, bt: &BridgeTable) -> Result<f64> {
    let len = bt.bridge_length();
    if len == 0 {
        return Ok(0.0);
    }
    let depth = m.r().depth();
    let mut best: f64 = 0.0;
    for ((_, b), beta) in bt.iter() {
        let stem = Word::concat(&[beta, &[b]]);
        let full_len = stem.len().max(len + depth - 1);
        for w in m.ts().extensions(&stem, full_len) {
            best = best.max(birkhoff_sum(m.r(), &w, len)?.abs());
        }
    }
    Ok(best)
}

/// Keeps `w[..origin]`, then appends `bridge(w[origin-1] → new_tail[0])`
/// and `new_tail`.
pub fn vartheta_suffix_exchange(
    w: &[usize],
    origin: usize,
    new_tail: &[usize],
    bt: &BridgeTable,
    blm0: &BlMeasure,
) -> Result<SuffixExchange> {
    let m = blm0.model();
    let ts = m.ts();
    let depth = m.r().depth();
    if origin < 1 || w.len() < origin + depth - 1 || new_tail.len() < depth.max(1) {
        return Err(Error::InsufficientWindow {
            needed: origin.max(1) + depth,
            available: w.len().min(origin + new_tail.len()),
        });
    }
    for word in [w, new_tail] {
        if !ts.is_admissible(word)? {
            return Err(Error::InvalidWord(format!("{} is not admissible", ts.render(word))));
        }
    }
    let bridge = bt.bridge(w[origin - 1], new_tail[0]);
    let new = Word::concat(&[&w[..origin], bridge, new_tail]);
    debug_assert!(ts.admissible_unchecked(&new));
    let ratio = length_ratio(blm0, w, &new, origin, origin + bt.bridge_length())?;
    let bound = psi_spread(blm0)
        * m.r().total_variation(ts).exp()
        * bridge_roof_bound(m, bt)?.exp();
    let check = DistortionCheck {
        ratio,
        lower: 1.0 / bound,
        upper: bound,
    };
    Ok(SuffixExchange {
        word: new,
        ratio_bound_ok: check.within(),
        check,
    })
}

/// Whether the `n`-th block of length `N` read from the current position
/// has displacement-per-length within `eps0` of `xi_target`.
pub fn lambda_n_membership(
    st: &mut SymbolicState,
    n: usize,
    big_n: usize,
    eps0: f64,
    xi_target: &[f64],
    m: &FlowModel,
) -> Result<bool> {
    if big_n == 0 || xi_target.len() != m.d() {
        return Err(Error::InvalidParameter("need N >= 1 and a target of dimension d".into()));
    }
    let depth = SymbolicState::lookahead(m);
    st.ensure((n + 1) * big_n + depth)?;
    let block = &st.current()[n * big_n..];
    let f_n = birkhoff_sum(m.f(), block, big_n)?;
    let r_n = birkhoff_sum(m.r_star(), block, big_n)?;
    let dist = f_n
        .iter()
        .zip(xi_target)
        .map(|(&a, b)| (a as f64 / r_n - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(dist < eps0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::PressureConfig;
    use crate::refs;
    use crate::measure::Density;

    fn periodic_state(m: &FlowModel, word: &[usize]) -> SymbolicState {
        let gen = SymbolGenerator::periodic(m.ts(), Word::from(word)).unwrap();
        SymbolicState::new(m, gen, vec![0; m.d()], 0.0).unwrap()
    }

    #[test]
    fn advance_examples() {
        let m = refs::f2_unit();
        let st = periodic_state(&m, &[0, 1]);
        let same = advance_geodesic(&st, &m, 0.0).unwrap();
        assert_eq!(same.position(), 0);
        let two = advance_geodesic(&st, &m, 2.0).unwrap();
        assert_eq!(two.position(), 2);
        assert_eq!(two.xi(), &[0]);
        assert_eq!(two.t(), 0.0);

        let gm = refs::gm_irr();
        let st = periodic_state(&gm, &[0, 1]);
        let st = advance_geodesic(&st, &gm, 1.5).unwrap();
        assert_eq!(st.position(), 1);
        assert_eq!(st.xi(), &[1]);
        assert!((st.t() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn initial_time_must_lie_under_the_roof() {
        let m = refs::gm_irr();
        let gen = SymbolGenerator::periodic(m.ts(), Word::from(vec![1, 0])).unwrap();
        assert!(SymbolicState::new(&m, gen.clone(), vec![0], 0.8).is_err());
        assert!(SymbolicState::new(&m, gen, vec![0], 0.7).is_ok());
        assert!(SymbolGenerator::periodic(m.ts(), Word::from(vec![1])).is_err());
    }

    #[test]
    fn explicit_generator_runs_dry() {
        let m = refs::f2_unit();
        let gen = SymbolGenerator::explicit(m.ts(), Word::from(vec![0, 0, 1])).unwrap();
        let mut st = SymbolicState::new(&m, gen, vec![0], 0.0).unwrap();
        assert!(matches!(st.advance(&m, 5.0), Err(Error::OrbitTruncated { emitted: 3 })));
    }

    #[test]
    fn periodic_slope() {
        let m = refs::gm_irr();
        let st = periodic_state(&m, &[0, 0, 1]);
        let period = 2.0 + std::f64::consts::FRAC_1_SQRT_2;
        let grid: Vec<f64> = (1..=5).map(|j| j as f64 * period + 1e-9).collect();
        let rec = xi_series(&st, &m, &grid).unwrap();
        for (j, xi) in rec.xi_values.iter().enumerate() {
            assert_eq!(xi[0], (j as i64 + 1) * 1);
        }
        assert!((rec.slopes[4][0] - 1.0 / period).abs() < 1e-9);
    }

    #[test]
    fn block_alternator_oscillates() {
        let m = refs::f2_unit();
        let gen = SymbolGenerator::block_alternator(m.ts(), Word::from(vec![0]), Word::from(vec![1])).unwrap();
        let st = SymbolicState::new(&m, gen, vec![0], 0.0).unwrap();
        let rec = xi_series(&st, &m, &geometric_grid(1e3, 1e5, 400)).unwrap();
        assert!(rec.slope_spread(0, 1e3) >= 0.5);
        // golden mean: bb is forbidden, so "b" blocks become "ab"
        let gm = refs::golden_mean();
        let gen = SymbolGenerator::block_alternator(gm.ts(), Word::from(vec![0]), Word::from(vec![0, 1])).unwrap();
        let mut st = SymbolicState::new(&gm, gen, vec![0], 0.0).unwrap();
        st.advance(&gm, 500.0).unwrap();
        assert!(gm.ts().is_admissible(st.window()).unwrap());
    }

    #[test]
    fn additivity() {
        let m = refs::gm_irr();
        let blm = BlMeasure::new(&m, &[0.2], &PressureConfig::default(), Density::Psi0).unwrap();
        let gen = SymbolGenerator::gibbs_chain(&blm.pp.gibbs, 7);
        let st = SymbolicState::new(&m, gen, vec![0], 0.0).unwrap();
        let a = advance_geodesic(&advance_geodesic(&st, &m, 1234.5).unwrap(), &m, 987.25).unwrap();
        let b = advance_geodesic(&st, &m, 1234.5 + 987.25).unwrap();
        assert_eq!(a.xi(), b.xi());
        assert_eq!(a.position(), b.position());
        assert!((a.t() - b.t()).abs() < 1e-9);
    }

    #[test]
    fn cocycle_examples() {
        let gm = refs::gm_irr();
        let x = [0, 1, 0, 0, 1, 0];
        let d = cocycles_rf(&x, &x, 0, 0, &gm).unwrap();
        assert_eq!(d, CocycleDelta { r_plus: 0.0, f: vec![0] });
        let d = cocycles_rf(&x, &x[1..], 1, 0, &gm).unwrap();
        assert_eq!(d.r_plus, -1.0);
        assert_eq!(d.f, vec![1]);
        let y = [1, 0, 0, 0, 1, 0];
        let d = cocycles_rf(&x, &y, 2, 2, &gm).unwrap();
        assert!(d.r_plus.abs() < 1e-15);
        assert_eq!(d.f, vec![0]);
        let z = [1, 0, 1, 0, 1, 0];
        assert!(matches!(cocycles_rf(&x, &z, 2, 2, &gm), Err(Error::NotEquivalent(_))));
    }

    #[test]
    fn kappa_examples() {
        let f2 = refs::f2_unit();
        let bt = f2.ts().bridge_words().unwrap();
        let w: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let kb = kappa_block_exchange(&w, 1, 2, 4, &bt, &f2).unwrap();
        assert_eq!(kb.word.0, w);
        assert_eq!((kb.delta_r, kb.delta_f.clone()), (0.0, vec![0]));

        let w = vec![1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 0, 1];
        let kb = kappa_block_exchange(&w, 1, 2, 3, &bt, &f2).unwrap();
        assert_eq!(kb.word.len(), w.len());
        let back = kappa_block_exchange(&kb.word, 1, 2, 3, &bt, &f2).unwrap();
        assert_eq!(back.word.0, w);

        let gm = refs::golden_mean();
        let bt = gm.ts().bridge_words().unwrap();
        assert_eq!(bt.bridge_length(), 1);
        let w = vec![0, 1, 0, 0, 1, 0, 1, 0, 0, 0];
        let kb = kappa_block_exchange(&w, 1, 2, 2, &bt, &gm).unwrap();
        assert_eq!(kb.word.len(), w.len() + 4);
        assert!(gm.ts().is_admissible(&kb.word).unwrap());
        assert!(matches!(
            kappa_block_exchange(&w, 0, 2, 2, &bt, &gm),
            Err(Error::InsufficientWindow { .. })
        ));
    }

    #[test]
    fn distortion_examples() {
        let f2 = refs::f2_unit();
        let blm0 = BlMeasure::new(&f2, &[0.0], &PressureConfig::default(), Density::Psi0).unwrap();
        let bt = f2.ts().bridge_words().unwrap();
        let w = vec![1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 0, 1];
        let kb = kappa_block_exchange(&w, 1, 2, 3, &bt, &f2).unwrap();
        let c = distortion_ratio_kappa(&blm0, &[0, 1], &kb).unwrap();
        assert!((c.ratio - 1.0).abs() < 1e-12);

        let gm = refs::gm_irr();
        let blm0 = BlMeasure::new(&gm, &[0.0], &PressureConfig::default(), Density::Psi0).unwrap();
        let bt = gm.ts().bridge_words().unwrap();
        let w = vec![0, 1, 0, 0, 1, 0, 1, 0, 0, 0];
        let kb = kappa_block_exchange(&w, 1, 2, 2, &bt, &gm).unwrap();
        assert!(distortion_ratio_kappa(&blm0, &[1], &kb).unwrap().within());
    }

    #[test]
    fn vartheta_examples() {
        let f2 = refs::f2_unit();
        let blm0 = BlMeasure::new(&f2, &[0.0], &PressureConfig::default(), Density::Psi0).unwrap();
        let bt = f2.ts().bridge_words().unwrap();
        let w = [0, 1, 1, 0, 1];
        let out = vartheta_suffix_exchange(&w, 2, &w[2..], &bt, &blm0).unwrap();
        assert_eq!(out.word.0, w);
        assert!(out.ratio_bound_ok);

        let gm = refs::gm_irr();
        let blm0 = BlMeasure::new(&gm, &[0.0], &PressureConfig::default(), Density::Psi0).unwrap();
        let bt = gm.ts().bridge_words().unwrap();
        let w = [0, 0, 1, 0, 0];
        let out = vartheta_suffix_exchange(&w, 3, &[1, 0, 1], &bt, &blm0).unwrap();
        assert_eq!(out.word.0, vec![0, 0, 1, 0, 1, 0, 1]);
        assert!(gm.ts().is_admissible(&out.word).unwrap());
        assert!(out.ratio_bound_ok);
    }

    #[test]
    fn membership_examples() {
        let f2 = refs::f2_unit();
        let mut st = periodic_state(&f2, &[0, 1]);
        for n in 0..5 {
            assert!(lambda_n_membership(&mut st, n, 4, 1e-9, &[0.0], &f2).unwrap());
            assert!(lambda_n_membership(&mut st, n, 3, 1e6, &[0.0], &f2).unwrap());
        }
        let mut st = periodic_state(&f2, &[0]);
        assert!(!lambda_n_membership(&mut st, 1, 5, 0.5, &[0.0], &f2).unwrap());
    }
}
