//! Layered lossy interferometers, their transfer matrices and loss
//! decompositions, and the depth thresholds that decide which sampler runs.
//!
//! Conventions:
//! - A layer first applies its per-mode phases `e^{iθ}`, then its couplers.
//!   Modes untouched by a coupler still pass through the layer and are
//!   attenuated by the layer's idle transmission.
//! - Layers are listed in the order light traverses them, so the transfer
//!   matrix is `A = L_D ⋯ L_2 L_1` and output amplitudes are `β = A α`.
//! - A coupler with intensity transmission `τ` contributes `√τ · B` where
//!   `B = [[cos θ, e^{iφ} sin θ], [−e^{−iφ} sin θ, cos θ]]`.
//! - All logarithms are natural; every threshold is a ratio of logarithms and
//!   therefore base-invariant.

use std::f64::consts::LN_2;

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::numerics::{check_finite, haar_unitary, svd, ComplexMatrix};
use crate::rng::RandomStream;

/// Singular values in `(1, 1 + SINGULAR_CLIP]` are rounding and get clipped.
pub const SINGULAR_CLIP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerGate {
    /// Acts on modes `mode` and `mode + 1`.
    pub mode: usize,
    pub theta: f64,
    pub phi: f64,
    /// Intensity transmission.
    pub tau: f64,
}

impl CouplerGate {
    pub fn lossless(mode: usize, theta: f64, phi: f64) -> Self {
        Self { mode, theta, phi, tau: 1.0 }
    }

    /// Balanced (50/50) coupler.
    pub fn balanced(mode: usize) -> Self {
        Self::lossless(mode, std::f64::consts::FRAC_PI_4, 0.0)
    }

    /// The unitary 2×2 block, without loss.
    pub fn block(&self) -> Matrix2<C64> {
        let (s, c) = self.theta.sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        Matrix2::new(C64::new(c, 0.0), e * s, -e.conj() * s, C64::new(c, 0.0))
    }
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub phases: Vec<f64>,
    pub couplers: Vec<CouplerGate>,
    /// Transmission of modes not covered by any coupler in this layer.
    #[serde(rename = "tau", default = "one", skip_serializing_if = "is_one")]
    pub idle_tau: f64,
}

impl Layer {
    pub fn new(modes: usize) -> Self {
        Self { phases: vec![0.0; modes], couplers: Vec::new(), idle_tau: 1.0 }
    }

    /// Per-mode transmission if every mode sees the same one in this layer.
    fn uniform_tau(&self, modes: usize) -> Option<f64> {
        let idle = (self.couplers.len() * 2 < modes).then_some(self.idle_tau);
        let mut taus = self.couplers.iter().map(|g| g.tau).chain(idle);
        let first = taus.next().unwrap_or(self.idle_tau);
        taus.all(|t| t == first).then_some(first)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    pub modes: usize,
    pub layers: Vec<Layer>,
}

impl LayeredCircuit {
    pub fn empty(modes: usize) -> Self {
        Self { modes, layers: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return input("circuit needs at least one mode");
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.phases.len() != self.modes {
                return input(format!(
                    "layer {l}: {} phases for {} modes",
                    layer.phases.len(),
                    self.modes
                ));
            }
            if layer.phases.iter().any(|p| !p.is_finite()) {
                return input(format!("layer {l}: non-finite phase"));
            }
            if !(layer.idle_tau > 0.0 && layer.idle_tau <= 1.0) {
                return input(format!("layer {l}: idle transmission {} outside (0,1]", layer.idle_tau));
            }
            let mut used = vec![false; self.modes];
            for g in &layer.couplers {
                if g.mode + 1 >= self.modes {
                    return input(format!("layer {l}: coupler on mode {} out of range", g.mode));
                }
                if !(g.tau > 0.0 && g.tau <= 1.0) {
                    return input(format!("layer {l}: coupler transmission {} outside (0,1]", g.tau));
                }
                if !g.theta.is_finite() || !g.phi.is_finite() {
                    return input(format!("layer {l}: non-finite coupler angle"));
                }
                if used[g.mode] || used[g.mode + 1] {
                    return input(format!("layer {l}: overlapping couplers at mode {}", g.mode));
                }
                used[g.mode] = true;
                used[g.mode + 1] = true;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Input(format!("circuit JSON: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    /// Same circuit with every transmission set to one.
    pub fn lossless(&self) -> Self {
        let mut c = self.clone();
        for layer in &mut c.layers {
            layer.idle_tau = 1.0;
            for g in &mut layer.couplers {
                g.tau = 1.0;
            }
        }
        c
    }

    /// `∏ τ_layer` when every layer attenuates all modes equally; loss then
    /// commutes through the whole circuit.
    pub fn uniform_transmission(&self) -> Option<f64> {
        self.layers.iter().map(|l| l.uniform_tau(self.modes)).product()
    }
}

fn layer_matrix(layer: &Layer, modes: usize) -> ComplexMatrix {
    let idle = layer.idle_tau.sqrt();
    let mut coupling = ComplexMatrix::from_diagonal_element(modes, modes, C64::new(idle, 0.0));
    for g in &layer.couplers {
        let b = g.block() * C64::new(g.tau.sqrt(), 0.0);
        let k = g.mode;
        for i in 0..2 {
            for j in 0..2 {
                coupling[(k + i, k + j)] = b[(i, j)];
            }
        }
    }
    let phases = DVector::from_iterator(modes, layer.phases.iter().map(|&t| C64::from_polar(1.0, t)));
    for j in 0..modes {
        let p = phases[j];
        coupling.column_mut(j).iter_mut().for_each(|z| *z *= p);
    }
    coupling
}

/// `A = L_D ⋯ L_1`.
pub fn transfer_matrix(c: &LayeredCircuit) -> Result<ComplexMatrix> {
    c.validate()?;
    let mut a = ComplexMatrix::identity(c.modes, c.modes);
    for layer in &c.layers {
        a = layer_matrix(layer, c.modes) * a;
    }
    Ok(a)
}

/// `A = v · diag(√μ) · w`.
#[derive(Clone, Debug)]
pub struct LossDecomposition {
    pub v: ComplexMatrix,
    pub w: ComplexMatrix,
    pub mu: Vec<f64>,
}

impl LossDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.v.clone();
        for (j, m) in self.mu.iter().enumerate() {
            scaled.column_mut(j).scale_mut(m.sqrt());
        }
        scaled * &self.w
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }
}

pub fn decompose_losses(a: &ComplexMatrix) -> Result<LossDecomposition> {
    if !a.is_square() {
        return input("transfer matrix must be square");
    }
    check_finite(a, "transfer matrix")?;
    let s = svd(a)?;
    let mut mu = Vec::with_capacity(s.singulars.len());
    for &sv in &s.singulars {
        if sv > 1.0 + SINGULAR_CLIP {
            return Err(Error::Model(format!("singular value {sv} exceeds 1: gain is not a loss")));
        }
        mu.push(sv.min(1.0).powi(2));
    }
    Ok(LossDecomposition { v: s.left, w: s.right, mu })
}

/// Pulls the strongest transmission out as a uniform loss; the residual
/// channels have `μ̃ᵢ = μᵢ / μ_max`.
pub fn factor_nonuniform(d: &LossDecomposition) -> Result<(f64, LossDecomposition)> {
    let mu_max = d.mu_max();
    if mu_max <= 0.0 {
        return Err(Error::Degenerate("every transmission is zero".into()));
    }
    let residual = LossDecomposition {
        v: d.v.clone(),
        w: d.w.clone(),
        mu: d.mu.iter().map(|m| (m / mu_max).min(1.0)).collect(),
    };
    Ok((mu_max, residual))
}

/// Brick-pattern circuit with Haar-random U(2) couplers. Even layers start at
/// mode 0, odd layers at mode 1; every gate and idle mode has transmission `tau`.
pub fn random_brickwork(m: usize, depth: usize, tau: f64, rng: &mut RandomStream) -> Result<LayeredCircuit> {
    if m < 2 || depth < 1 {
        return input(format!("brickwork needs m >= 2 and depth >= 1 (got {m}, {depth})"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return input(format!("transmission {tau} outside (0,1]"));
    }
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut layer = Layer::new(m);
        layer.idle_tau = tau;
        let mut k = l % 2;
        while k + 1 < m {
            // U = B(θ, φ) · diag(e^{iψ₁}, e^{iψ₂}) reproduces any U(2) exactly
            let u = haar_unitary(2, rng)?;
            let psi1 = u[(0, 0)].arg();
            let psi2 = u[(1, 1)].arg();
            let theta = u[(0, 0)].norm().clamp(0.0, 1.0).acos();
            let phi = u[(0, 1)].arg() - psi2;
            layer.phases[k] = psi1;
            layer.phases[k + 1] = psi2;
            layer.couplers.push(CouplerGate { mode: k, theta, phi, tau });
            k += 2;
        }
        layers.push(layer);
    }
    Ok(LayeredCircuit { modes: m, layers })
}

/// A depth that may be infinite (no finite depth reaches the regime).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    Finite(f64),
    Unbounded,
}

impl Depth {
    pub fn finite(self) -> Option<f64> {
        match self {
            Depth::Finite(d) => Some(d),
            Depth::Unbounded => None,
        }
    }

    /// Whether an integer depth `d` reaches this threshold (inclusive).
    pub fn reached_by(self, d: f64) -> bool {
        match self {
            Depth::Finite(t) => d >= t,
            Depth::Unbounded => false,
        }
    }
}

/// `μ ≤ √(ε/N)`, tested as `N μ² ≤ ε`.
pub fn simulability_condition(mu: f64, n: usize, eps: f64) -> bool {
    n as f64 * mu * mu <= eps
}

/// `μ ≤ √(ε/(2N))`: half the budget goes to thermalization, half to sampling.
pub fn end_to_end_condition(mu: f64, n: usize, eps: f64) -> bool {
    2.0 * n as f64 * mu * mu <= eps
}

/// Depth above which `N` lossy photons are ε-close to thermal noise, for
/// per-coupler loss `x = 1 − τ`.
pub fn thermalization_depth(n: usize, eps: f64, x: f64) -> Result<Depth> {
    if n == 0 || !(eps > 0.0 && eps < 1.0) || !(0.0..1.0).contains(&x) {
        return input(format!("thermalization_depth(n={n}, eps={eps}, x={x}) outside domain"));
    }
    if x == 0.0 {
        return Ok(Depth::Unbounded);
    }
    Ok(Depth::Finite((n as f64 / eps).ln() / (2.0 * (1.0 / (1.0 - x)).ln())))
}

/// Scaling regime `N = k·M^γ`, error budget and uniform per-layer loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanParameters {
    pub photons: usize,
    pub modes: usize,
    pub density: f64,
    pub exponent: f64,
    pub eps: f64,
    pub tau: f64,
    pub depth: usize,
}

impl PlanParameters {
    /// Photon number `round(k·M^γ)`.
    pub fn photons_for(density: f64, modes: usize, exponent: f64) -> usize {
        (density * (modes as f64).powf(exponent)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.photons == 0 || self.modes == 0 {
            return input("photons and modes must be positive");
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return input(format!("density k = {} must be positive", self.density));
        }
        if !(self.exponent > 0.0 && self.exponent <= 1.0) {
            return input(format!("exponent gamma = {} outside (0,1]", self.exponent));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return input(format!("eps = {} outside (0,1)", self.eps));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return input(format!("tau = {} outside (0,1]", self.tau));
        }
        Ok(())
    }

    pub fn mu_effective(&self) -> f64 {
        self.tau.powi(self.depth as i32)
    }
}

/// Exponential-decay threshold `D*`; `τ = 1` never thermalizes.
pub fn depth_threshold_exponential(p: &PlanParameters) -> Result<Depth> {
    p.validate()?;
    if p.tau == 1.0 {
        return Ok(Depth::Unbounded);
    }
    let numerator = p.exponent * (p.modes as f64).ln() + (p.density / p.eps).ln() + LN_2;
    Ok(Depth::Finite(numerator / (2.0 * (1.0 / p.tau).ln())))
}

/// Transmission `μ(D) = (1 + D/d)^{−β}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicLossParams {
    pub scale: f64,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraicThreshold {
    pub depth: f64,
    /// `γ / β`.
    pub exponent_ratio: f64,
    /// `γ / β < 2`: the threshold grows sub-linearly in `M`.
    pub asymptotically_simulable: bool,
}

pub fn depth_threshold_algebraic(p: &PlanParameters, a: &AlgebraicLossParams) -> Result<AlgebraicThreshold> {
    p.validate()?;
    if !(a.scale > 0.0 && a.exponent > 0.0) {
        return input("algebraic loss parameters must be positive");
    }
    let base = (2.0 * p.density / p.eps).powf(1.0 / (2.0 * a.exponent))
        * (p.modes as f64).powf(p.exponent / (2.0 * a.exponent));
    let ratio = p.exponent / a.exponent;
    Ok(AlgebraicThreshold {
        depth: a.scale * (base - 1.0),
        exponent_ratio: ratio,
        asymptotically_simulable: ratio < 2.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Thermal,
    #[serde(rename = "mps")]
    TensorNetwork,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationPlan {
    pub regime: Regime,
    pub d_star: Depth,
    pub mu_effective: f64,
    pub rationale: String,
}

/// Thermal sampling at depth `D ≥ D*`, exact tensor networks below.
pub fn plan(p: &PlanParameters) -> Result<SimulationPlan> {
    let d_star = depth_threshold_exponential(p)?;
    let depth = p.depth as f64;
    let mu = p.mu_effective();
    let regime = if d_star.reached_by(depth) { Regime::Thermal } else { Regime::TensorNetwork };
    let threshold = match d_star {
        Depth::Finite(t) => format!("D* = {t:.4}"),
        Depth::Unbounded => "D* unbounded (lossless layers): thermal regime unreachable".to_string(),
    };
    let rationale = format!(
        "D = {} vs {threshold}; mu = tau^D = {mu:.6e}; mu <= sqrt(eps/N) ({:.6e}): {}; \
         mu <= sqrt(eps/(2N)) ({:.6e}): {}",
        p.depth,
        (p.eps / p.photons as f64).sqrt(),
        simulability_condition(mu, p.photons, p.eps),
        (p.eps / (2.0 * p.photons as f64)).sqrt(),
        end_to_end_condition(mu, p.photons, p.eps),
    );
    Ok(SimulationPlan { regime, d_star, mu_effective: mu, rationale })
}
