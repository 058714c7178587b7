//! Exact matrix-product-state simulation of lossless linear-optical circuits
//! on Fock space truncated at `d` photons per mode.
//!
//! The state is kept in canonical form, storing for every site the
//! right-normalized tensors `B^[i]_n = Γ^[i]_n λ^[i]` together with the
//! Schmidt vectors `λ^[i]` of every bond:
//!
//! ```text
//!  B[0] -- B[1] -- B[2] -- ... -- B[M-1]
//!   |       |       |               |
//!   n0      n1      n2              n(M-1)
//! ```
//!
//! `Σ_n B_n B_n† = I` on every site, so marginals can be read off left to
//! right without contracting the remainder of the chain. Loss is not
//! represented in the network: photons are thinned at the input instead.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::circuit::LayeredCircuit;
use crate::error::{input, Error, Result};
use crate::numerics::{log_factorials, svd, ComplexMatrix, FockSample};
use crate::rng::RandomStream;

/// Schmidt values below this fraction of the largest are exact zeros.
pub const ZERO_SCHMIDT: f64 = 1e-12;
pub const MAX_LOCAL_PHOTONS: usize = 30;
pub const DEFAULT_MAX_BOND: usize = 4096;
/// Prefix probabilities below this abort a chain-rule draw.
pub const UNDERFLOW: f64 = 1e-300;

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

#[derive(Clone, Debug)]
pub struct MpsState {
    /// `sites[i][n]` is the `χ_{i−1} × χ_i` matrix `Γ^[i]_n λ^[i]`.
    sites: Vec<Vec<ComplexMatrix>>,
    /// Schmidt values of the bond between sites `i` and `i + 1`.
    schmidts: Vec<Vec<f64>>,
    local_dim: usize,
}

/// `N` input photons as a product state; `d` is the per-mode photon cutoff.
pub fn init_input(pattern: &[usize], d: usize) -> Result<MpsState> {
    if d < 1 {
        return input("local photon cutoff d must be >= 1");
    }
    if d > MAX_LOCAL_PHOTONS {
        return Err(Error::Capacity(format!("local cutoff {d} exceeds {MAX_LOCAL_PHOTONS}")));
    }
    if pattern.is_empty() {
        return input("pattern needs at least one mode");
    }
    if let Some(&n) = pattern.iter().find(|&&n| n > d) {
        return input(format!("{n} photons in one mode exceed cutoff {d}"));
    }
    let sites = pattern
        .iter()
        .map(|&k| {
            (0..=d)
                .map(|n| ComplexMatrix::from_element(1, 1, C64::new(if n == k { 1.0 } else { 0.0 }, 0.0)))
                .collect()
        })
        .collect();
    Ok(MpsState { sites, schmidts: vec![vec![1.0]; pattern.len() - 1], local_dim: d + 1 })
}

impl MpsState {
    pub fn modes(&self) -> usize {
        self.sites.len()
    }

    /// `d + 1`.
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.schmidts.iter().map(Vec::len).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn schmidt(&self, bond: usize) -> &[f64] {
        &self.schmidts[bond]
    }

    /// Right-normalized site tensor `Γ^[i]_n λ^[i]`.
    pub fn site(&self, i: usize, n: usize) -> &ComplexMatrix {
        &self.sites[i][n]
    }

    /// Vidal tensor `Γ^[i]_n`, recovered by dividing out `λ^[i]`.
    pub fn gamma(&self, i: usize, n: usize) -> ComplexMatrix {
        let mut g = self.sites[i][n].clone();
        if let Some(l) = self.schmidts.get(i) {
            for (c, &s) in l.iter().enumerate() {
                g.column_mut(c).unscale_mut(s);
            }
        }
        g
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sites[0].iter().map(|b| b.norm_squared()).sum()
    }

    /// Largest deviation from canonical form: `Σ_n B_n B_n† = I` per site
    /// and `Σ λ² = ‖ψ‖²` per bond.
    pub fn canonical_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for site in &self.sites[1..] {
            let rows = site[0].nrows();
            let mut acc = ComplexMatrix::zeros(rows, rows);
            for b in site {
                acc += b * b.adjoint();
            }
            acc -= ComplexMatrix::identity(rows, rows);
            worst = worst.max(acc.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        let norm = self.norm_sqr();
        for l in &self.schmidts {
            worst = worst.max((l.iter().map(|s| s * s).sum::<f64>() - norm).abs());
            worst = worst.max(if l.windows(2).all(|w| w[0] >= w[1]) { 0.0 } else { 1.0 });
        }
        worst
    }

    /// Mean photon number per mode.
    pub fn mean_photons(&self) -> Vec<f64> {
        // left environment for site i is ρ = diag(λ_{i−1}²) in canonical form
        (0..self.modes())
            .map(|i| {
                let weights: Vec<f64> = match i {
                    0 => vec![1.0],
                    _ => self.schmidts[i - 1].iter().map(|s| s * s).collect(),
                };
                self.sites[i]
                    .iter()
                    .enumerate()
                    .map(|(n, b)| {
                        let mass: f64 = b
                            .row_iter()
                            .zip(&weights)
                            .map(|(row, w)| w * row.iter().map(|z| z.norm_sqr()).sum::<f64>())
                            .sum();
                        n as f64 * mass
                    })
                    .sum()
            })
            .collect()
    }

    /// Multiplies mode `mode` by `e^{iθ n}`; Schmidt values are untouched.
    pub fn apply_phase(&mut self, mode: usize, theta: f64) -> Result<()> {
        if mode >= self.modes() {
            return input(format!("phase on mode {mode} of {}", self.modes()));
        }
        for (n, b) in self.sites[mode].iter_mut().enumerate() {
            let p = C64::from_polar(1.0, theta * n as f64);
            b.iter_mut().for_each(|z| *z *= p);
        }
        Ok(())
    }

    /// Applies a coupler on modes `k, k+1` through its MPO factors, then
    /// restores canonical form on bond `k` with one SVD. Returns the merged
    /// bond dimension `χ_k · χ_BS` before exact zeros were dropped.
    pub fn apply_coupler(&mut self, k: usize, mpo: &CouplerMpo) -> Result<usize> {
        if k + 1 >= self.modes() {
            return input(format!("coupler on modes {k},{} of {}", k + 1, self.modes()));
        }
        if mpo.local_dim != self.local_dim {
            return input(format!("MPO built for local dimension {}, state has {}", mpo.local_dim, self.local_dim));
        }
        let dim = self.local_dim;
        let chi_l = self.sites[k][0].nrows();
        let chi = self.sites[k][0].ncols();
        let chi_r = self.sites[k + 1][0].ncols();
        let rank = mpo.rank();
        let merged = chi * rank;

        // X^[k] on site k: columns (γ, β) ↦ γ·χ + β
        let left: Vec<ComplexMatrix> = (0..dim)
            .map(|n| {
                let mut out = ComplexMatrix::zeros(chi_l, merged);
                for g in 0..rank {
                    let mut block = out.columns_mut(g * chi, chi);
                    for np in 0..dim {
                        let x = mpo.x_left[g][n * dim + np];
                        if x != c0() {
                            block += &self.sites[k][np] * x;
                        }
                    }
                }
                out
            })
            .collect();
        // σ X^[k+1] on site k+1: rows (γ, β) ↦ γ·χ + β
        let right: Vec<ComplexMatrix> = (0..dim)
            .map(|n| {
                let mut out = ComplexMatrix::zeros(merged, chi_r);
                for g in 0..rank {
                    let mut block = out.rows_mut(g * chi, chi);
                    for np in 0..dim {
                        let x = mpo.x_right[g][n * dim + np] * mpo.sigmas[g];
                        if x != c0() {
                            block += &self.sites[k + 1][np] * x;
                        }
                    }
                }
                out
            })
            .collect();

        // two-site block Θ with rows (n₁, a) and columns (n₂, c)
        let mut theta = ComplexMatrix::zeros(dim * chi_l, dim * chi_r);
        for n1 in 0..dim {
            for n2 in 0..dim {
                let t = &left[n1] * &right[n2];
                theta.view_mut((n1 * chi_l, n2 * chi_r), (chi_l, chi_r)).copy_from(&t);
            }
        }
        let weights: Vec<f64> = if k == 0 { vec![1.0] } else { self.schmidts[k - 1].clone() };
        let mut weighted = theta.clone();
        for n1 in 0..dim {
            for (a, &w) in weights.iter().enumerate() {
                weighted.row_mut(n1 * chi_l + a).scale_mut(w);
            }
        }
        let dec = svd(&weighted)?;
        let top = dec.singulars.first().copied().unwrap_or(0.0);
        let keep = dec.singulars.iter().take_while(|&&s| s > ZERO_SCHMIDT * top).count().max(1);
        let vt = dec.right.rows(0, keep).into_owned();
        let new_left = &theta * vt.adjoint();

        self.sites[k] = (0..dim).map(|n| new_left.rows(n * chi_l, chi_l).into_owned()).collect();
        self.sites[k + 1] = (0..dim).map(|n| vt.columns(n * chi_r, chi_r).into_owned()).collect();
        self.schmidts[k] = dec.singulars[..keep].to_vec();
        Ok(merged)
    }

    /// Full two-sweep re-canonicalization (left-to-right QR, right-to-left
    /// SVD). Drops exact-zero Schmidt values and renormalizes.
    pub fn canonicalize(&mut self) -> Result<()> {
        let dim = self.local_dim;
        let m = self.modes();
        // left-normalize: site matrix rows (n, a), columns c
        for i in 0..m - 1 {
            let rows = self.sites[i][0].nrows();
            let cols = self.sites[i][0].ncols();
            let mut stacked = ComplexMatrix::zeros(dim * rows, cols);
            for n in 0..dim {
                stacked.rows_mut(n * rows, rows).copy_from(&self.sites[i][n]);
            }
            let qr = stacked.qr();
            let q = qr.q();
            let r = qr.r();
            let width = q.ncols();
            self.sites[i] = (0..dim).map(|n| q.view((n * rows, 0), (rows, width)).into_owned()).collect();
            for b in &mut self.sites[i + 1] {
                *b = &r * &*b;
            }
        }
        // right-normalize with SVDs: site matrix rows a, columns (n, c)
        for i in (1..m).rev() {
            let rows = self.sites[i][0].nrows();
            let cols = self.sites[i][0].ncols();
            let mut wide = ComplexMatrix::zeros(rows, dim * cols);
            for n in 0..dim {
                wide.columns_mut(n * cols, cols).copy_from(&self.sites[i][n]);
            }
            let dec = svd(&wide)?;
            let top = dec.singulars.first().copied().unwrap_or(0.0);
            let keep = dec.singulars.iter().take_while(|&&s| s > ZERO_SCHMIDT * top).count().max(1);
            let vt = dec.right.rows(0, keep).into_owned();
            let mut us = dec.left.columns(0, keep).into_owned();
            for (j, s) in dec.singulars[..keep].iter().enumerate() {
                us.column_mut(j).scale_mut(*s);
            }
            self.sites[i] = (0..dim).map(|n| vt.columns(n * cols, cols).into_owned()).collect();
            for b in &mut self.sites[i - 1] {
                *b = &*b * &us;
            }
            self.schmidts[i - 1] = dec.singulars[..keep].to_vec();
        }
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("state has zero norm".into()));
        }
        for b in &mut self.sites[0] {
            b.unscale_mut(norm);
        }
        for l in &mut self.schmidts {
            l.iter_mut().for_each(|s| *s /= norm);
        }
        Ok(())
    }
}

/// Fock-space amplitudes of a two-mode coupler, truncated at `d` photons per
/// mode. Index order is `(n₁, n₂, n₁′, n₂′)`: outputs first, then inputs.
#[derive(Clone, Debug)]
pub struct CouplerTensor {
    dim: usize,
    data: Vec<C64>,
}

impl CouplerTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, n1: usize, n2: usize, in1: usize, in2: usize) -> C64 {
        let d = self.dim;
        self.data[((n1 * d + n2) * d + in1) * d + in2]
    }
}

/// `|n₁′, n₂′⟩ ↦ (a a₁† + c a₂†)^{n₁′} (b a₁† + d a₂†)^{n₂′} |0⟩ / √(n₁′! n₂′!)`
/// for the block `[[a, b], [c, d]]`, expanded binomially. Magnitudes are
/// assembled from log-factorials.
pub fn coupler_fock_amplitudes(block: &nalgebra::Matrix2<C64>, d: usize) -> Result<CouplerTensor> {
    if d > MAX_LOCAL_PHOTONS {
        return Err(Error::Capacity(format!("local cutoff {d} exceeds {MAX_LOCAL_PHOTONS}")));
    }
    let defect = (block.adjoint() * block - nalgebra::Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(defect < 1e-10) {
        return input(format!("coupler block is not unitary (defect {defect:e})"));
    }
    let (a, b, c, dd) = (block[(0, 0)], block[(0, 1)], block[(1, 0)], block[(1, 1)]);
    let lf = log_factorials(2 * d);
    let ln_binom = |n: usize, k: usize| lf[n] - lf[k] - lf[n - k];
    let dim = d + 1;
    let mut data = vec![c0(); dim.pow(4)];
    for in1 in 0..dim {
        for in2 in 0..dim {
            let total = in1 + in2;
            for j in 0..=in1 {
                for l in 0..=in2 {
                    let p = j + l;
                    let q = total - p;
                    if p > d || q > d {
                        continue;
                    }
                    let mag = (ln_binom(in1, j) + ln_binom(in2, l) + 0.5 * (lf[p] + lf[q] - lf[in1] - lf[in2])).exp();
                    let phase = a.powu(j as u32) * c.powu((in1 - j) as u32) * b.powu(l as u32) * dd.powu((in2 - l) as u32);
                    data[((p * dim + q) * dim + in1) * dim + in2] += phase * mag;
                }
            }
        }
    }
    Ok(CouplerTensor { dim, data })
}

/// Coupler tensor factored across the two modes,
/// `C[(n₁,n₁′),(n₂,n₂′)] = Σ_γ X^[k]_{n₁n₁′γ} σ_γ X^[k+1]_{n₂n₂′γ}`.
#[derive(Clone, Debug)]
pub struct CouplerMpo {
    /// `x_left[γ][n₁·(d+1) + n₁′]`.
    pub x_left: Vec<Vec<C64>>,
    pub x_right: Vec<Vec<C64>>,
    pub sigmas: Vec<f64>,
    local_dim: usize,
}

impl CouplerMpo {
    pub fn new(t: &CouplerTensor) -> Result<Self> {
        let dim = t.dim;
        let pairs = dim * dim;
        let reshaped = ComplexMatrix::from_fn(pairs, pairs, |r, c| t.get(r / dim, c / dim, r % dim, c % dim));
        let dec = svd(&reshaped)?;
        let top = dec.singulars.first().copied().unwrap_or(0.0);
        let rank = dec.singulars.iter().take_while(|&&s| s > ZERO_SCHMIDT * top).count();
        Ok(Self {
            x_left: (0..rank).map(|g| dec.left.column(g).iter().copied().collect()).collect(),
            x_right: (0..rank).map(|g| dec.right.row(g).iter().copied().collect()).collect(),
            sigmas: dec.singulars[..rank].to_vec(),
            local_dim: dim,
        })
    }

    pub fn for_block(block: &nalgebra::Matrix2<C64>, d: usize) -> Result<Self> {
        Self::new(&coupler_fock_amplitudes(block, d)?)
    }

    /// `χ_BS`.
    pub fn rank(&self) -> usize {
        self.sigmas.len()
    }

    /// Recombined four-index tensor, for checking the factorization.
    pub fn recombine(&self, n1: usize, n2: usize, in1: usize, in2: usize) -> C64 {
        let d = self.local_dim;
        (0..self.rank())
            .map(|g| self.x_left[g][n1 * d + in1] * self.sigmas[g] * self.x_right[g][n2 * d + in2])
            .sum()
    }
}

/// `|⟨n̄|ψ⟩|²`.
pub fn outcome_probability(s: &MpsState, nbar: &FockSample) -> Result<f64> {
    if nbar.len() != s.modes() {
        return input(format!("outcome has {} modes, state {}", nbar.len(), s.modes()));
    }
    let mut env = ComplexMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for (i, &n) in nbar.iter().enumerate() {
        if n >= s.local_dim {
            return Ok(0.0);
        }
        env *= &s.sites[i][n];
    }
    Ok(env[(0, 0)].norm_sqr())
}

/// One exact draw by the chain rule: the marginal of mode `i` given the drawn
/// prefix is `‖v B^[i]_n‖²`, where `v` is the projected, renormalized prefix.
/// Assumes canonical form (see [`MpsState::canonicalize`]).
pub fn sample(s: &MpsState, rng: &mut RandomStream) -> Result<FockSample> {
    let mut env = ComplexMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let mut prefix = 1.0;
    let mut out = Vec::with_capacity(s.modes());
    for site in &s.sites {
        let candidates: Vec<ComplexMatrix> = site.iter().map(|b| &env * b).collect();
        let probs: Vec<f64> = candidates.iter().map(|v| v.norm_squared()).collect();
        let total: f64 = probs.iter().sum();
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (n, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = n;
                break;
            }
        }
        prefix *= probs[pick] / total;
        if !(prefix >= UNDERFLOW) {
            return Err(Error::Resample(prefix));
        }
        env = candidates[pick].unscale(probs[pick].sqrt());
        out.push(pick);
    }
    Ok(FockSample(out))
}

/// Each of the `n` input photons survives independently with probability `μ`.
pub fn lossy_input_sample(n: usize, mu: f64, rng: &mut RandomStream) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&mu) {
        return input(format!("survival probability {mu} outside [0,1]"));
    }
    Ok((0..n).map(|_| usize::from(rng.gen::<f64>() < mu)).collect())
}

#[derive(Clone, Debug)]
pub struct MpsOptions {
    /// Per-mode photon cutoff; defaults to the input photon number.
    pub local_photons: Option<usize>,
    /// Bond dimension at which the simulation stops with a capacity error.
    pub max_bond: usize,
}

impl Default for MpsOptions {
    fn default() -> Self {
        Self { local_photons: None, max_bond: DEFAULT_MAX_BOND }
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub state: MpsState,
    pub peak_bond: usize,
    /// Largest `χ_k · χ_BS` formed before zero-dropping.
    pub peak_merged_bond: usize,
    pub peak_mpo_rank: usize,
    /// `(d+1)^{2D}`, saturating.
    pub bond_ceiling: usize,
}

impl Simulation {
    pub fn within_ceiling(&self) -> bool {
        self.peak_bond <= self.bond_ceiling
    }
}

/// Evolves `pattern` through the unitary blocks and phases of `c`.
/// Transmissions are ignored; apply loss with [`lossy_input_sample`].
pub fn simulate_circuit(c: &LayeredCircuit, pattern: &[usize]) -> Result<Simulation> {
    simulate_circuit_with(c, pattern, &MpsOptions::default())
}

pub fn simulate_circuit_with(c: &LayeredCircuit, pattern: &[usize], opts: &MpsOptions) -> Result<Simulation> {
    c.validate()?;
    if pattern.len() != c.modes {
        return input(format!("pattern has {} modes, circuit {}", pattern.len(), c.modes));
    }
    let total: usize = pattern.iter().sum();
    let d = opts.local_photons.unwrap_or(total).max(1);
    let mut state = init_input(pattern, d)?;
    let bond_ceiling = (d + 1).checked_pow(2 * c.depth() as u32).unwrap_or(usize::MAX);
    let mut peak_merged = 1;
    let mut peak_rank = 0;
    let mut mpos: HashMap<(u64, u64), CouplerMpo> = HashMap::new();
    for layer in &c.layers {
        for (mode, &theta) in layer.phases.iter().enumerate() {
            if theta != 0.0 {
                state.apply_phase(mode, theta)?;
            }
        }
        for g in &layer.couplers {
            let key = (g.theta.to_bits(), g.phi.to_bits());
            if let std::collections::hash_map::Entry::Vacant(e) = mpos.entry(key) {
                e.insert(CouplerMpo::for_block(&g.block(), d)?);
            }
            let mpo = &mpos[&key];
            peak_rank = peak_rank.max(mpo.rank());
            let merged = state.apply_coupler(g.mode, mpo)?;
            peak_merged = peak_merged.max(merged);
            let bond = state.schmidts[g.mode].len();
            if bond > opts.max_bond {
                return Err(Error::Capacity(format!(
                    "bond dimension {bond} exceeds ceiling {} at mode {}",
                    opts.max_bond, g.mode
                )));
            }
        }
    }
    let peak_bond = state.max_bond();
    Ok(Simulation { state, peak_bond, peak_merged_bond: peak_merged, peak_mpo_rank: peak_rank, bond_ceiling })
}

/// Samples a circuit with uniform transmission `μ`: thin the `N` input photons,
/// simulate the surviving pattern exactly, draw by the chain rule. States are
/// cached per surviving pattern (at most `2^N`).
#[derive(Debug)]
pub struct ThinnedMpsSampler {
    circuit: LayeredCircuit,
    photons: usize,
    mu: f64,
    opts: MpsOptions,
    cache: HashMap<Vec<usize>, MpsState>,
    peak_bond: usize,
}

impl ThinnedMpsSampler {
    pub fn new(circuit: &LayeredCircuit, photons: usize, mu: f64, opts: MpsOptions) -> Result<Self> {
        circuit.validate()?;
        if photons > circuit.modes {
            return input(format!("{photons} photons do not fit in {} modes", circuit.modes));
        }
        if !(0.0..=1.0).contains(&mu) {
            return input(format!("transmission {mu} outside [0,1]"));
        }
        Ok(Self { circuit: circuit.lossless(), photons, mu, opts, cache: HashMap::new(), peak_bond: 1 })
    }

    pub fn peak_bond(&self) -> usize {
        self.peak_bond
    }

    pub fn modes(&self) -> usize {
        self.circuit.modes
    }

    /// Same circuit and loss with an empty state cache.
    pub fn fresh(&self) -> Self {
        Self {
            circuit: self.circuit.clone(),
            photons: self.photons,
            mu: self.mu,
            opts: self.opts.clone(),
            cache: HashMap::new(),
            peak_bond: 1,
        }
    }

    /// Prepared state for an input pattern over all modes.
    pub fn state_for(&mut self, pattern: &[usize]) -> Result<&MpsState> {
        if !self.cache.contains_key(pattern) {
            let mut sim = simulate_circuit_with(&self.circuit, pattern, &self.opts)?;
            sim.state.canonicalize()?;
            self.peak_bond = self.peak_bond.max(sim.peak_bond);
            self.cache.insert(pattern.to_vec(), sim.state);
        }
        Ok(&self.cache[pattern])
    }

    pub fn sample(&mut self, rng: &mut RandomStream) -> Result<FockSample> {
        let mut pattern = lossy_input_sample(self.photons, self.mu, rng)?;
        pattern.resize(self.circuit.modes, 0);
        self.sample_surviving(pattern, rng)
    }

    /// Samples with single photons in the occupied modes of `herald`
    /// instead of the first `N` modes.
    pub fn sample_pattern(&mut self, herald: &[usize], rng: &mut RandomStream) -> Result<FockSample> {
        if herald.len() != self.circuit.modes {
            return input(format!("herald has {} modes, circuit {}", herald.len(), self.circuit.modes));
        }
        let mut pattern = vec![0; herald.len()];
        for (slot, &h) in pattern.iter_mut().zip(herald) {
            *slot = lossy_input_sample(h, self.mu, rng)?.iter().sum();
        }
        self.sample_surviving(pattern, rng)
    }

    fn sample_surviving(&mut self, pattern: Vec<usize>, rng: &mut RandomStream) -> Result<FockSample> {
        loop {
            let state = self.state_for(&pattern)?;
            match sample(state, rng) {
                Err(Error::Resample(_)) => continue,
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_brickwork, transfer_matrix, CouplerGate, Layer};
    use crate::numerics::{total_variation, Distribution};
    use crate::oracle::{compositions, fock_output_distribution, InputPattern};

    fn fs(v: &[usize]) -> FockSample {
        FockSample(v.to_vec())
    }

    fn distribution(s: &MpsState, photons: usize) -> Distribution {
        Distribution::from_pairs(
            compositions(photons, s.modes()).into_iter().map(|o| {
                let p = outcome_probability(s, &o).unwrap();
                (o, p)
            }),
        )
    }

    fn hom_state() -> MpsState {
        let mut s = init_input(&[1, 1], 2).unwrap();
        let mpo = CouplerMpo::for_block(&CouplerGate::balanced(0).block(), 2).unwrap();
        s.apply_coupler(0, &mpo).unwrap();
        s
    }

    #[test]
    fn product_inputs() {
        let s = init_input(&[1, 0, 0, 0], 1).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(outcome_probability(&s, &fs(&[1, 0, 0, 0])).unwrap(), 1.0);
        let v = init_input(&[0, 0, 0], 1).unwrap();
        assert_eq!(outcome_probability(&v, &fs(&[0, 0, 0])).unwrap(), 1.0);
        let two = init_input(&[1, 1], 2).unwrap();
        assert_eq!(outcome_probability(&two, &fs(&[1, 1])).unwrap(), 1.0);
        assert_eq!(two.bond_dims(), vec![1]);
        assert!(matches!(init_input(&[1, 0], 0), Err(Error::Input(_))));
    }

    #[test]
    fn identity_block_amplitudes() {
        let t = coupler_fock_amplitudes(&nalgebra::Matrix2::identity(), 3).unwrap();
        for n1 in 0..4 {
            for n2 in 0..4 {
                for i1 in 0..4 {
                    for i2 in 0..4 {
                        let expect = if n1 == i1 && n2 == i2 { 1.0 } else { 0.0 };
                        assert!((t.get(n1, n2, i1, i2) - expect).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn balanced_block_gives_hom_amplitudes() {
        let t = coupler_fock_amplitudes(&CouplerGate::balanced(0).block(), 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(t.get(1, 1, 1, 1).norm() < 1e-15);
        assert!((t.get(2, 0, 1, 1).norm() - h).abs() < 1e-15);
        assert!((t.get(0, 2, 1, 1).norm() - h).abs() < 1e-15);
        assert!((t.get(2, 0, 1, 1) + t.get(0, 2, 1, 1)).norm() < 1e-15);
    }

    #[test]
    fn amplitudes_are_unitary_per_photon_sector() {
        let blocks = [
            CouplerGate::lossless(0, 0.37, 1.1).block(),
            CouplerGate::lossless(0, 1.2, -2.5).block(),
            CouplerGate::balanced(0).block(),
        ];
        let d = 3;
        for block in &blocks {
            let t = coupler_fock_amplitudes(block, d).unwrap();
            for total in 0..=d {
                let basis: Vec<(usize, usize)> = (0..=total).map(|p| (p, total - p)).collect();
                let u = ComplexMatrix::from_fn(basis.len(), basis.len(), |r, c| {
                    t.get(basis[r].0, basis[r].1, basis[c].0, basis[c].1)
                });
                let defect = crate::numerics::unitarity_defect(&u);
                assert!(defect < 1e-12, "sector {total}: {defect}");
            }
            // conservation: no amplitude between different totals
            for n1 in 0..=d {
                for n2 in 0..=d {
                    for i1 in 0..=d {
                        for i2 in 0..=d {
                            if n1 + n2 != i1 + i2 {
                                assert_eq!(t.get(n1, n2, i1, i2), C64::new(0.0, 0.0));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn non_unitary_block_rejected() {
        let b = CouplerGate::balanced(0).block() * C64::new(0.9, 0.0);
        assert!(matches!(coupler_fock_amplitudes(&b, 2), Err(Error::Input(_))));
    }

    #[test]
    fn mpo_rank_and_recombination() {
        for d in 1..=4 {
            let t = coupler_fock_amplitudes(&CouplerGate::lossless(0, 0.6, 0.3).block(), d).unwrap();
            let mpo = CouplerMpo::new(&t).unwrap();
            assert!(mpo.rank() <= (d + 1) * (d + 1));
            for n1 in 0..=d {
                for n2 in 0..=d {
                    for i1 in 0..=d {
                        for i2 in 0..=d {
                            assert!((mpo.recombine(n1, n2, i1, i2) - t.get(n1, n2, i1, i2)).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phase_gate() {
        let mut rng = RandomStream::new(1);
        let c = random_brickwork(3, 2, 1.0, &mut rng).unwrap();
        let s = simulate_circuit(&c, &[1, 1, 0]).unwrap().state;
        let before = distribution(&s, 2);
        let mut t = s.clone();
        t.apply_phase(1, 0.0).unwrap();
        assert_eq!(t.site(1, 1), s.site(1, 1));
        t.apply_phase(1, 1.234).unwrap();
        assert_eq!(t.schmidt(0), s.schmidt(0));
        assert_eq!(t.schmidt(1), s.schmidt(1));
        assert!(total_variation(&before, &distribution(&t, 2)).unwrap() < 1e-14);
        let mut v = init_input(&[0, 0], 1).unwrap();
        let orig = v.clone();
        v.apply_phase(0, std::f64::consts::PI).unwrap();
        assert_eq!(v.site(0, 0), orig.site(0, 0));
    }

    #[test]
    fn identity_mpo_changes_nothing() {
        let mut rng = RandomStream::new(2);
        let c = random_brickwork(4, 2, 1.0, &mut rng).unwrap();
        let s = simulate_circuit(&c, &[1, 0, 1, 0]).unwrap().state;
        let mut t = s.clone();
        let mpo = CouplerMpo::for_block(&nalgebra::Matrix2::identity(), 2).unwrap();
        assert_eq!(mpo.rank(), 1);
        t.apply_coupler(1, &mpo).unwrap();
        assert!(total_variation(&distribution(&s, 2), &distribution(&t, 2)).unwrap() < 1e-13);
        assert_eq!(t.bond_dims(), s.bond_dims());
    }

    #[test]
    fn single_photon_path_entanglement() {
        let mut s = init_input(&[1, 0], 1).unwrap();
        let mpo = CouplerMpo::for_block(&CouplerGate::balanced(0).block(), 1).unwrap();
        s.apply_coupler(0, &mpo).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s.schmidt(0).len(), 2);
        assert!(s.schmidt(0).iter().all(|&x| (x - h).abs() < 1e-12));
    }

    #[test]
    fn coupler_then_inverse_restores_product() {
        let g = CouplerGate::lossless(0, 0.9, 0.4);
        let inv = g.block().adjoint();
        let mut s = init_input(&[1, 1, 0], 2).unwrap();
        let fwd = CouplerMpo::for_block(&g.block(), 2).unwrap();
        let back = CouplerMpo::for_block(&inv, 2).unwrap();
        s.apply_coupler(0, &fwd).unwrap();
        assert!(s.schmidt(0).len() > 1);
        s.apply_coupler(0, &back).unwrap();
        assert_eq!(s.bond_dims(), vec![1, 1]);
        assert!((outcome_probability(&s, &fs(&[1, 1, 0])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hom_probabilities() {
        let s = hom_state();
        assert!(outcome_probability(&s, &fs(&[1, 1])).unwrap() < 1e-12);
        assert!((outcome_probability(&s, &fs(&[2, 0])).unwrap() - 0.5).abs() < 1e-12);
        assert!((outcome_probability(&s, &fs(&[0, 2])).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn norm_and_canonical_form_after_every_gate() {
        let mut rng = RandomStream::new(3);
        let c = random_brickwork(5, 4, 1.0, &mut rng).unwrap();
        let d = 3;
        let mut s = init_input(&[1, 0, 1, 1, 0], d).unwrap();
        let mut photons = s.mean_photons().iter().sum::<f64>();
        assert!((photons - 3.0).abs() < 1e-12);
        for layer in &c.layers {
            for (m, &t) in layer.phases.iter().enumerate() {
                s.apply_phase(m, t).unwrap();
            }
            for g in &layer.couplers {
                let before = s.schmidt(g.mode).len();
                let mpo = CouplerMpo::for_block(&g.block(), d).unwrap();
                s.apply_coupler(g.mode, &mpo).unwrap();
                assert!(s.schmidt(g.mode).len() <= before * (d + 1) * (d + 1));
                assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
                assert!(s.canonical_defect() < 1e-10, "{}", s.canonical_defect());
            }
            photons = s.mean_photons().iter().sum::<f64>();
            assert!((photons - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn simulation_matches_permanents() {
        let mut rng = RandomStream::new(4);
        for (m, depth, pattern) in [(4, 3, vec![1, 1, 0, 0]), (5, 4, vec![0, 1, 1, 1, 0]), (3, 2, vec![1, 0, 1])] {
            let c = random_brickwork(m, depth, 1.0, &mut rng).unwrap();
            let sim = simulate_circuit(&c, &pattern).unwrap();
            assert!(sim.within_ceiling());
            let n: usize = pattern.iter().sum();
            let u = transfer_matrix(&c).unwrap();
            let exact = fock_output_distribution(&u, &InputPattern(pattern.clone())).unwrap();
            let mps = distribution(&sim.state, n);
            for (o, p) in exact.iter() {
                assert!((mps.get(o) - p).abs() < 1e-10, "{o}");
            }
            assert!(total_variation(&exact, &mps).unwrap() < 1e-10);
        }
    }

    #[test]
    fn single_photon_follows_matrix_column() {
        let mut rng = RandomStream::new(5);
        let c = random_brickwork(5, 3, 1.0, &mut rng).unwrap();
        let u = transfer_matrix(&c).unwrap();
        let s = simulate_circuit(&c, &[0, 0, 1, 0, 0]).unwrap().state;
        for i in 0..5 {
            let mut o = vec![0; 5];
            o[i] = 1;
            assert!((outcome_probability(&s, &FockSample(o)).unwrap() - u[(i, 2)].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_zero_is_the_input() {
        let c = LayeredCircuit::empty(3);
        let sim = simulate_circuit(&c, &[1, 0, 1]).unwrap();
        assert_eq!(sim.state.bond_dims(), vec![1, 1]);
        assert_eq!(outcome_probability(&sim.state, &fs(&[1, 0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn bond_cap_is_a_capacity_error() {
        let mut rng = RandomStream::new(6);
        let c = random_brickwork(6, 4, 1.0, &mut rng).unwrap();
        let opts = MpsOptions { local_photons: None, max_bond: 2 };
        let r = simulate_circuit_with(&c, &[1, 1, 1, 0, 0, 0], &opts);
        assert!(matches!(r, Err(Error::Capacity(_))));
    }

    #[test]
    fn canonicalize_preserves_the_state() {
        let mut rng = RandomStream::new(7);
        let c = random_brickwork(4, 3, 1.0, &mut rng).unwrap();
        let s = simulate_circuit(&c, &[1, 1, 0, 0]).unwrap().state;
        let mut t = s.clone();
        t.canonicalize().unwrap();
        assert!(t.canonical_defect() < 1e-12);
        assert!(total_variation(&distribution(&s, 2), &distribution(&t, 2)).unwrap() < 1e-12);
        for (a, b) in s.schmidts.iter().zip(&t.schmidts) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_times_schmidt_is_site() {
        let s = hom_state();
        let g = s.gamma(0, 2);
        let mut back = g.clone();
        for (c, &l) in s.schmidt(0).iter().enumerate() {
            back.column_mut(c).scale_mut(l);
        }
        assert!((back - s.site(0, 2)).norm() < 1e-14);
    }

    #[test]
    fn sampling_product_and_superpositions() {
        let mut rng = RandomStream::new(8);
        let s = init_input(&[0, 1, 1, 0], 2).unwrap();
        for _ in 0..50 {
            assert_eq!(sample(&s, &mut rng).unwrap(), fs(&[0, 1, 1, 0]));
        }
        let draws = 100_000;
        let hom = hom_state();
        let mut counts = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample(&hom, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.get(&fs(&[1, 1])), None);
        let sigma = (0.25f64 / draws as f64).sqrt();
        for o in [fs(&[2, 0]), fs(&[0, 2])] {
            let f = counts[&o] as f64 / draws as f64;
            assert!((f - 0.5).abs() < 3.0 * sigma, "{o}: {f}");
        }
        let mut single = init_input(&[1, 0], 1).unwrap();
        single.apply_coupler(0, &CouplerMpo::for_block(&CouplerGate::balanced(0).block(), 1).unwrap()).unwrap();
        let ones = (0..draws).filter(|_| sample(&single, &mut rng).unwrap() == fs(&[1, 0])).count();
        let f = ones as f64 / draws as f64;
        assert!((f - 0.5).abs() < 3.0 * sigma, "{f}");
    }

    #[test]
    fn thinning_statistics() {
        let mut rng = RandomStream::new(9);
        assert_eq!(lossy_input_sample(5, 1.0, &mut rng).unwrap(), vec![1; 5]);
        assert_eq!(lossy_input_sample(5, 0.0, &mut rng).unwrap(), vec![0; 5]);
        let draws = 100_000;
        let mean = (0..draws).map(|_| lossy_input_sample(10, 0.3, &mut rng).unwrap().iter().sum::<usize>()).sum::<usize>()
            as f64
            / draws as f64;
        let sigma = (10.0 * 0.3 * 0.7 / draws as f64).sqrt();
        assert!((mean - 3.0).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn thinned_sampler_handles_total_loss() {
        let mut rng = RandomStream::new(10);
        let mut c = LayeredCircuit::empty(2);
        let mut layer = Layer::new(2);
        layer.couplers.push(CouplerGate::balanced(0));
        c.layers.push(layer);
        let mut sampler = ThinnedMpsSampler::new(&c, 2, 0.0, MpsOptions::default()).unwrap();
        for _ in 0..10 {
            assert_eq!(sampler.sample(&mut rng).unwrap(), fs(&[0, 0]));
        }
    }
}
