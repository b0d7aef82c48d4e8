//! Combinatorics of a subshift of finite type: admissible words, cylinders,
//! mixing, Markovian bridges and Birkhoff sums of locally constant functions.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Alphabet plus allowed-transition relation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStructure {
    states: Vec<String>,
    allowed: Vec<bool>,
}

/// A finite word over the alphabet, stored as state indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    /// The word with its first `n` symbols removed (saturating).
    pub fn shift(&self, n: usize) -> Word {
        Word(self.0[n.min(self.0.len())..].to_vec())
    }

    pub fn concat(parts: &[&[usize]]) -> Word {
        Word(parts.iter().flat_map(|p| p.iter().copied()).collect())
    }
}

impl Deref for Word {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl From<&[usize]> for Word {
    fn from(v: &[usize]) -> Self {
        Word(v.to_vec())
    }
}

/// Fixed collection of connecting words `w_ab` of common length.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeTable {
    n_states: usize,
    bridge_length: usize,
    bridges: Vec<Word>,
}

impl BridgeTable {
    pub fn bridge_length(&self) -> usize {
        self.bridge_length
    }

    /// Connecting word for the ordered pair `(a, b)`.
    pub fn bridge(&self, a: usize, b: usize) -> &Word {
        &self.bridges[a * self.n_states + b]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &Word)> {
        let n = self.n_states;
        self.bridges
            .iter()
            .enumerate()
            .map(move |(i, w)| ((i / n, i % n), w))
    }
}

impl TransitionStructure {
    /// Builds a structure from labels and a 0/1 matrix, checking that labels
    /// are unique and every state has a successor and a predecessor.
    pub fn new(states: Vec<String>, matrix: &[Vec<bool>]) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidModel(format!(
                "transition matrix must be {n}x{n}"
            )));
        }
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidModel(format!("bad state label {s:?}")));
            }
            if states[..i].contains(s) {
                return Err(Error::InvalidModel(format!("duplicate state label {s:?}")));
            }
        }
        let allowed: Vec<bool> = matrix.iter().flatten().copied().collect();
        for i in 0..n {
            if !(0..n).any(|j| allowed[i * n + j]) {
                return Err(Error::InvalidModel(format!("state {} has no successor", states[i])));
            }
            if !(0..n).any(|j| allowed[j * n + i]) {
                return Err(Error::InvalidModel(format!("state {} has no predecessor", states[i])));
            }
        }
        Ok(Self { states, allowed })
    }

    /// Full shift on the given labels.
    pub fn full_shift(labels: &[&str]) -> Self {
        let n = labels.len();
        Self::new(
            labels.iter().map(|s| s.to_string()).collect(),
            &vec![vec![true; n]; n],
        )
        .expect("full shift is valid")
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    #[inline]
    pub fn allowed(&self, a: usize, b: usize) -> bool {
        self.allowed[a * self.states.len() + b]
    }

    pub fn matrix(&self) -> Vec<Vec<bool>> {
        let n = self.n_states();
        (0..n).map(|i| (0..n).map(|j| self.allowed(i, j)).collect()).collect()
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states()).filter(move |&b| self.allowed(a, b))
    }

    pub fn predecessors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states()).filter(move |&a| self.allowed(a, b))
    }

    fn check_symbols(&self, w: &[usize]) -> Result<()> {
        let n = self.n_states();
        match w.iter().find(|&&s| s >= n) {
            Some(&index) => Err(Error::InvalidSymbol { index, n_states: n }),
            None => Ok(()),
        }
    }

    /// True iff every consecutive pair of `w` is an allowed transition.
    pub fn is_admissible(&self, w: &[usize]) -> Result<bool> {
        self.check_symbols(w)?;
        Ok(self.admissible_unchecked(w))
    }

    pub(crate) fn admissible_unchecked(&self, w: &[usize]) -> bool {
        w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Least `m` with `A^m` entrywise positive, searched up to `|S|^2 + 1`.
    pub fn mixing_exponent(&self) -> Result<usize> {
        let n = self.n_states();
        let cap = n * n + 1;
        let mut power = self.allowed.clone();
        for m in 1..=cap {
            if power.iter().all(|&x| x) {
                return Ok(m);
            }
            power = bool_mul(&power, &self.allowed, n);
        }
        Err(Error::NotMixing { cap })
    }

    /// True iff the transition graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n_states();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(a) = stack.pop() {
                for b in 0..n {
                    let edge = if forward { self.allowed(a, b) } else { self.allowed(b, a) };
                    if edge && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Bridge words of length `mixing_exponent - 1`, each the
    /// lexicographically smallest connector for its pair.
    pub fn bridge_words(&self) -> Result<BridgeTable> {
        let n = self.n_states();
        let m = self.mixing_exponent()?;
        let len = m - 1;
        // reach[j][x * n + b]: a path with exactly j edges from x to b
        let mut reach = vec![self.allowed.clone()];
        for _ in 1..m {
            let next = bool_mul(reach.last().unwrap(), &self.allowed, n);
            reach.push(next);
        }
        let mut bridges = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut word = Vec::with_capacity(len);
                let mut cur = a;
                for i in 0..len {
                    let edges_left = len - i; // edges from the chosen symbol to b
                    let c = (0..n)
                        .find(|&c| self.allowed(cur, c) && reach[edges_left - 1][c * n + b])
                        .expect("mixing guarantees a connector");
                    word.push(c);
                    cur = c;
                }
                debug_assert!(self.allowed(cur, b));
                bridges.push(Word(word));
            }
        }
        Ok(BridgeTable {
            n_states: n,
            bridge_length: len,
            bridges,
        })
    }

    /// All admissible words of length `k`, in lexicographic order.
    pub fn enumerate_cylinders(&self, k: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if k == 0 {
            return out;
        }
        let mut buf = Vec::with_capacity(k);
        for s in 0..self.n_states() {
            buf.push(s);
            self.extend_words(&mut buf, k, &mut out);
            buf.pop();
        }
        out
    }

    fn extend_words(&self, buf: &mut Vec<usize>, k: usize, out: &mut Vec<Word>) {
        if buf.len() == k {
            out.push(Word(buf.clone()));
            return;
        }
        let last = *buf.last().unwrap();
        for s in 0..self.n_states() {
            if self.allowed(last, s) {
                buf.push(s);
                self.extend_words(buf, k, out);
                buf.pop();
            }
        }
    }

    /// All admissible words of length `k` that begin with `prefix`
    /// (or the prefix truncated to `k` if it is longer).
    pub fn extensions(&self, prefix: &[usize], k: usize) -> Vec<Word> {
        if prefix.len() >= k {
            return vec![Word(prefix[..k].to_vec())];
        }
        let mut out = Vec::new();
        let mut buf = prefix.to_vec();
        if buf.is_empty() {
            return self.enumerate_cylinders(k);
        }
        self.extend_words(&mut buf, k, &mut out);
        out
    }

    /// Base-`|S|` code of a word; used to index dense cylinder tables.
    #[inline]
    pub fn code(&self, w: &[usize]) -> usize {
        let n = self.n_states();
        w.iter().fold(0, |acc, &s| acc * n + s)
    }

    pub fn decode(&self, mut code: usize, len: usize) -> Word {
        let n = self.n_states();
        let mut w = vec![0; len];
        for slot in w.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        Word(w)
    }

    /// Parses a word written either as concatenated single-character labels
    /// (`"aba"`) or as whitespace-separated labels (`"a1 a2"`).
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let tokens: Vec<String> = if text.split_whitespace().count() > 1
            || self.states.iter().any(|s| s.chars().count() > 1)
        {
            text.split_whitespace().map(str::to_string).collect()
        } else {
            text.chars().filter(|c| !c.is_whitespace()).map(|c| c.to_string()).collect()
        };
        tokens
            .iter()
            .map(|t| {
                self.index_of(t)
                    .ok_or_else(|| Error::InvalidWord(format!("unknown state label {t:?} in {text:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn render(&self, w: &[usize]) -> String {
        if self.states.iter().all(|s| s.chars().count() == 1) {
            w.iter().map(|&s| self.states[s].as_str()).collect()
        } else {
            w.iter().map(|&s| self.states[s].as_str()).collect::<Vec<_>>().join(" ")
        }
    }

    /// Closed admissible words of exact length `period`: `w` admissible and
    /// the last symbol may be followed by the first.
    pub fn periodic_words(&self, period: usize) -> Vec<Word> {
        self.enumerate_cylinders(period)
            .into_iter()
            .filter(|w| self.allowed(*w.last().unwrap(), w[0]))
            .collect()
    }
}

impl fmt::Display for TransitionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states.join(" "))?;
        for i in 0..self.n_states() {
            let row: Vec<&str> = (0..self.n_states())
                .map(|j| if self.allowed(i, j) { "1" } else { "0" })
                .collect();
            writeln!(f, "{} {}", self.states[i], row.join(" "))?;
        }
        Ok(())
    }
}

fn bool_mul(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= b[k * n + j];
                }
            }
        }
    }
    out
}

/// A function of the first `depth` coordinates of a sequence.
pub trait WindowFunction {
    type Value: Clone;

    fn depth(&self) -> usize;

    fn zero(&self) -> Self::Value;

    /// Adds the value on `window[..depth]` into `acc`.
    fn accumulate(&self, acc: &mut Self::Value, window: &[usize]);
}

/// `F(w) + F(σw) + ... + F(σ^{n-1} w)` evaluated on the finite window `w`.
pub fn birkhoff_sum<F: WindowFunction>(f: &F, w: &[usize], n: usize) -> Result<F::Value> {
    let mut acc = f.zero();
    if n == 0 {
        return Ok(acc);
    }
    let needed = n + f.depth() - 1;
    if w.len() < needed {
        return Err(Error::InsufficientWindow {
            needed,
            available: w.len(),
        });
    }
    for j in 0..n {
        f.accumulate(&mut acc, &w[j..j + f.depth()]);
    }
    Ok(acc)
}
