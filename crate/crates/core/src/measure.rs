//! Cylinder and basic-set masses of the horocycle-invariant measures in
//! symbolic coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FlowModel;
use crate::pressure::{solve_pressure, PressureConfig, PressurePoint};
use crate::sft::Word;
use crate::transfer::GibbsData;

/// Which eigenfunction weights the cylinder mass of a basic set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// The length density `ψ = Ψ₀`.
    #[default]
    Psi0,
    /// The eigenfunction `Ψ_u` of the tilted operator.
    PsiU,
}

impl std::str::FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi0" => Ok(Self::Psi0),
            "psi_u" => Ok(Self::PsiU),
            other => Err(Error::InvalidParameter(format!("unknown density '{other}'"))),
        }
    }
}

/// A set `{(x, ξ, s) : x ∈ [a], α ≤ s ≤ β}` at a fixed `Z^d` coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicSet {
    pub a: Word,
    pub xi: Vec<i64>,
    pub alpha: f64,
    pub beta: f64,
}

impl BasicSet {
    pub fn new(m: &FlowModel, a: Word, xi: Vec<i64>, alpha: f64, beta: f64) -> Result<Self> {
        let set = Self { a, xi, alpha, beta };
        set.validate(m)?;
        Ok(set)
    }

    pub fn validate(&self, m: &FlowModel) -> Result<()> {
        if self.a.is_empty() || !m.ts().is_admissible(&self.a)? {
            return Err(Error::InvalidWord(format!("base word {} is not admissible", m.ts().render(&self.a))));
        }
        if self.xi.len() != m.d() {
            return Err(Error::InvalidParameter(format!("ξ must have dimension {}", m.d())));
        }
        let bound = m.roof_lower_bound(&self.a);
        if !(0.0 <= self.alpha && self.alpha <= self.beta && self.beta <= bound + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= α <= β <= {bound}, got α = {}, β = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    fn with_window(&self, alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            ..self.clone()
        }
    }
}

/// Eigendata at `u` together with the length density.
#[derive(Debug, Clone)]
pub struct BlMeasure {
    pub pp: PressurePoint,
    /// Eigendata at `(s, u) = (-P(0), 0)`; its `psi` is the length density.
    pub psi0: GibbsData,
    pub density: Density,
    model: FlowModel,
}

impl BlMeasure {
    pub fn new(m: &FlowModel, u: &[f64], cfg: &PressureConfig, density: Density) -> Result<Self> {
        let pp = solve_pressure(m, u, cfg)?;
        let psi0 = if u.iter().all(|&x| x == 0.0) {
            pp.gibbs.clone()
        } else {
            solve_pressure(m, &vec![0.0; m.d()], cfg)?.gibbs
        };
        if psi0.psi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidModel("length density is not strictly positive".into()));
        }
        Ok(Self {
            pp,
            psi0,
            density,
            model: m.clone(),
        })
    }

    pub fn model(&self) -> &FlowModel {
        &self.model
    }

    pub fn depth(&self) -> usize {
        self.pp.gibbs.depth()
    }

    pub fn p(&self) -> f64 {
        self.pp.p
    }

    /// Length density `ψ` on the depth-`k` cylinder of `w`.
    pub fn psi(&self, w: &[usize]) -> f64 {
        self.psi0.psi_at(w).expect("admissible window")
    }

    fn weight(&self, w: &[usize]) -> f64 {
        match self.density {
            Density::Psi0 => self.psi(w),
            Density::PsiU => self.pp.gibbs.psi_at(w).expect("admissible window"),
        }
    }

    fn check_word(&self, w: &[usize]) -> Result<()> {
        if w.is_empty() || !self.model.ts().is_admissible(w).map_err(|e| Error::InvalidWord(e.to_string()))? {
            return Err(Error::InvalidWord(format!("{} is not admissible", self.model.ts().render(w))));
        }
        Ok(())
    }

    /// Eigenmeasure `ν_φ[w]` of the cylinder spelled by `w`.
    ///
    /// Words shorter than the operator depth are measured as the union of
    /// their admissible extensions.
    pub fn cylinder_nu(&self, w: &[usize]) -> Result<f64> {
        self.check_word(w)?;
        let k = self.depth();
        if w.len() < k {
            return Ok(self
                .model
                .ts()
                .extensions(w, k)
                .iter()
                .map(|x| self.nu_unchecked(x))
                .sum());
        }
        Ok(self.nu_unchecked(w))
    }

    fn nu_unchecked(&self, w: &[usize]) -> f64 {
        let g = &self.pp.gibbs;
        let k = g.depth();
        let phi = g.operator().potential();
        let j = w.len() - k;
        let mut log_factor = 0.0;
        for i in 0..j {
            let idx = g.index_of(&w[i..i + k]).expect("admissible window");
            log_factor += phi[idx] - g.log_lambda;
        }
        let tail = g.index_of(&w[j..]).expect("admissible window");
        g.nu[tail] * log_factor.exp()
    }

    /// `∫_[a] ψ dν_φ`, evaluated on the admissible words of length
    /// `max(|a|, k)` extending `a`.
    pub fn weighted_cylinder(&self, a: &[usize]) -> Result<f64> {
        self.check_word(a)?;
        let k = self.depth();
        Ok(self
            .model
            .ts()
            .extensions(a, a.len().max(k))
            .iter()
            .map(|w| self.weight(w) * self.nu_unchecked(w))
            .sum())
    }

    /// Mass of a basic set, with the global normalizing constant set to one.
    pub fn basic_set_mass(&self, e: &BasicSet) -> Result<f64> {
        let deck: f64 = self.pp.u.iter().zip(&e.xi).map(|(u, &x)| u * x as f64).sum();
        let interval = interval_factor(self.p(), e.alpha, e.beta);
        if interval == 0.0 {
            return Ok(0.0);
        }
        Ok(deck.exp() * interval * self.weighted_cylinder(&e.a)?)
    }

    /// Hyperbolic length of the stable set of `w` pushed by time `s`.
    pub fn stable_length(&self, w: &[usize], s: f64) -> Result<f64> {
        if w.len() < self.depth() {
            return Err(Error::InsufficientWindow {
                needed: self.depth(),
                available: w.len(),
            });
        }
        self.check_word(w)?;
        Ok((-s).exp() * self.psi(w))
    }

    /// Compares the mass of `E` shifted by `s` along the flow with `e^{-P s}`.
    pub fn geodesic_scaling_check(&self, e: &BasicSet, s: f64) -> Result<ScalingCheck> {
        let (alpha, beta) = (e.alpha + s, e.beta + s);
        let bound = self.model.roof_lower_bound(&e.a);
        if !(alpha >= 0.0 && beta <= bound + 1e-12) {
            return Err(Error::InvalidShift(format!(
                "window [{alpha}, {beta}] leaves [0, {bound}]"
            )));
        }
        let base = self.basic_set_mass(e)?;
        if base == 0.0 {
            return Err(Error::DegenerateDenominator);
        }
        let shifted = self.basic_set_mass(&e.with_window(alpha, beta))?;
        Ok(ScalingCheck {
            ratio: shifted / base,
            expected: (-self.p() * s).exp(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    pub ratio: f64,
    pub expected: f64,
}

/// `∫_α^β e^{-P s} ds`.
pub fn interval_factor(p: f64, alpha: f64, beta: f64) -> f64 {
    if beta <= alpha {
        return 0.0;
    }
    if p == 0.0 {
        return beta - alpha;
    }
    -(-p * alpha).exp() * (-p * (beta - alpha)).exp_m1() / p
}
