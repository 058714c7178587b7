//! Invariant suite run by `lossy-boson validate`: every sampler and threshold
//! checked against closed forms and the brute-force oracles.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::app::{sample_circuit, Mode, ParamsConfig, RunConfig};
use crate::circuit::{
    decompose_losses, depth_threshold_algebraic, factor_nonuniform, random_brickwork, simulability_condition,
    thermalization_depth, transfer_matrix, AlgebraicLossParams, CouplerGate, Layer, LayeredCircuit,
    LossDecomposition, PlanParameters,
};
use crate::error::{Error, Result};
use crate::mps::{outcome_probability, simulate_circuit_with, MpsOptions, ThinnedMpsSampler};
use crate::numerics::{haar_unitary, log_factorials, total_variation, Distribution, FockSample};
use crate::oracle::{
    chi2_constellation, compositions, erasure_thermal_distance_by_levels, fock_output_distribution,
    lossy_exact_distribution, thermal_exact_distribution, InputPattern, MAX_LOSSY_PHOTONS, MAX_ORACLE_PHOTONS,
};
use crate::rng::RandomStream;
use crate::thermal::{gauss_hermite_constellation, thermal_erasure_distance, ThermalParams, ThermalSampler, TWO_KAPPA_SQ};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Samples drawn by each statistical check.
    pub samples: usize,
    /// Random circuits compared against the permanent oracle.
    pub circuits: usize,
    /// Largest photon number in the MPS/oracle comparison.
    pub oracle_photons: usize,
    /// Photons in the lossy-input comparison.
    pub lossy_photons: usize,
    /// `2κ²` in the χ² budget; anything but the default is a deliberate mutation.
    pub two_kappa_sq: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            samples: 100_000,
            circuits: 50,
            oracle_photons: 3,
            lossy_photons: 2,
            two_kappa_sq: TWO_KAPPA_SQ,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One check: passes when `measured ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub status: Status,
    pub detail: String,
}

impl CheckResult {
    pub fn compare(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.into(), measured, tolerance, status, detail: detail.into() }
    }

    fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), measured: f64::NAN, tolerance: f64::NAN, status: Status::Skipped, detail: detail.into() }
    }

    fn errored(name: &str, e: &Error) -> Self {
        match e {
            Error::Capacity(msg) => Self::skipped(name, format!("capacity: {msg}")),
            other => Self {
                name: name.into(),
                measured: f64::NAN,
                tolerance: f64::NAN,
                status: Status::Fail,
                detail: other.to_string(),
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// `PASS name: measured ≤ tolerance (detail)`.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        format!("{tag} {}: measured {:.6e} tolerance {:.6e} ({})", self.name, self.measured, self.tolerance, self.detail)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// `max` that keeps NaN, so a broken measurement cannot hide.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn settle(name: &str, r: Result<CheckResult>) -> CheckResult {
    r.unwrap_or_else(|e| CheckResult::errored(name, &e))
}

pub fn run_suite(opts: &ValidateOptions) -> ValidationReport {
    let checks = vec![
        settle("thermalization_depth", check_thermalization_depth()),
        settle("thermal_erasure_identity", check_thermal_identity()),
        settle("mps_vs_permanent", check_mps_oracle(opts)),
        settle("hong_ou_mandel", check_hom(opts)),
        settle("thermal_end_to_end", check_thermal_sampler(opts)),
        settle("lossy_input_equivalence", check_lossy_input(opts)),
        settle("quadrature_exactness", check_quadrature()),
        settle("binomial_poisson_bound", check_binomial_poisson()),
        settle("chi2_budget", check_chi2(opts.two_kappa_sq)),
        settle("bond_growth", check_bond_growth(opts)),
        settle("loss_model", check_loss_model(opts)),
        settle("algebraic_threshold", check_algebraic()),
        settle("determinism", check_determinism(opts)),
    ];
    let all_passed = checks.iter().all(|c| c.status != Status::Fail);
    ValidationReport { checks, all_passed }
}

pub fn check_thermalization_depth() -> Result<CheckResult> {
    let d = thermalization_depth(100, 1e-6, 1e-3)?
        .finite()
        .ok_or_else(|| Error::Degenerate("threshold unbounded".into()))?;
    Ok(CheckResult::compare("thermalization_depth", (d - 9205.7).abs(), 0.1, format!("D = {d:.4}")))
}

/// With `λ = μ` the thermal/erasure distance is `μ²`, and `N μ² ≤ ε` matches
/// the simulability predicate.
pub fn check_thermal_identity() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for i in 1..=30 {
        let mu = i as f64 / 100.0;
        for d in [thermal_erasure_distance(mu, mu), erasure_thermal_distance_by_levels(mu, mu)] {
            worst = worse(worst, (d - mu * mu).abs());
        }
        for n in [1, 2, 5, 10, 50, 100] {
            for eps in [1e-3, 0.01, 0.05, 0.1, 0.5] {
                if (n as f64 * mu * mu <= eps) != simulability_condition(mu, n, eps) {
                    mismatches += 1;
                }
            }
        }
    }
    let measured = if mismatches > 0 { f64::INFINITY } else { worst };
    Ok(CheckResult::compare("thermal_erasure_identity", measured, 1e-14, format!("{mismatches} predicate mismatches")))
}

fn mps_distribution(c: &LayeredCircuit, pattern: &[usize], photons: usize) -> Result<Distribution> {
    let sim = simulate_circuit_with(c, pattern, &MpsOptions::default())?;
    compositions(photons, c.modes)
        .into_iter()
        .map(|o| outcome_probability(&sim.state, &o).map(|p| (o, p)))
        .collect::<Result<Vec<_>>>()
        .map(Distribution::from_pairs)
}

pub fn check_mps_oracle(opts: &ValidateOptions) -> Result<CheckResult> {
    const NAME: &str = "mps_vs_permanent";
    if opts.oracle_photons > MAX_ORACLE_PHOTONS {
        return Ok(CheckResult::skipped(NAME, format!("{} photons beyond oracle cap {MAX_ORACLE_PHOTONS}", opts.oracle_photons)));
    }
    let mut rng = RandomStream::new(opts.seed).split(3);
    let mut worst: f64 = 0.0;
    let max_n = opts.oracle_photons.max(1);
    for _ in 0..opts.circuits {
        let n = 1 + (rng.gen_range(0..max_n as u64) as usize);
        let lo = n.max(2);
        let hi = 6.max(lo);
        let m = lo + rng.gen_range(0..(hi - lo + 1) as u64) as usize;
        let depth = 1 + rng.gen_range(0..4) as usize;
        let c = random_brickwork(m, depth, 1.0, &mut rng)?;
        let input = InputPattern::leading_ones(n, m);
        let oracle = fock_output_distribution(&transfer_matrix(&c)?, &input)?;
        worst = worse(worst, total_variation(&mps_distribution(&c, &input.0, n)?, &oracle)?);
    }
    Ok(CheckResult::compare(NAME, worst, 1e-10, format!("max TVD over {} circuits", opts.circuits)))
}

pub fn hom_circuit() -> LayeredCircuit {
    let mut layer = Layer::new(2);
    layer.couplers.push(CouplerGate::balanced(0));
    LayeredCircuit { modes: 2, layers: vec![layer] }
}

pub fn check_hom(opts: &ValidateOptions) -> Result<CheckResult> {
    let c = hom_circuit();
    let coincidence = FockSample(vec![1, 1]);
    let oracle = fock_output_distribution(&transfer_matrix(&c)?, &InputPattern(vec![1, 1]))?.get(&coincidence);
    let mps = mps_distribution(&c, &[1, 1], 2)?.get(&coincidence);
    let mut sampler = ThinnedMpsSampler::new(&c, 2, 1.0, MpsOptions::default())?;
    let mut rng = RandomStream::new(opts.seed).split(4);
    let mut hits = 0usize;
    for _ in 0..opts.samples {
        if sampler.sample(&mut rng)? == coincidence {
            hits += 1;
        }
    }
    let measured = if hits > 0 { f64::INFINITY } else { oracle.max(mps) };
    Ok(CheckResult::compare(
        "hong_ou_mandel",
        measured,
        1e-12,
        format!("P_oracle = {oracle:.1e}, P_mps = {mps:.1e}, {hits}/{} sampled coincidences", opts.samples),
    ))
}

/// `3·√(K / 4n)`: three times the Cauchy–Schwarz bound on the expected TVD
/// of an `n`-sample empirical distribution over `K` outcomes.
pub fn sampling_allowance(support: usize, samples: usize) -> f64 {
    3.0 * (support as f64 / (4.0 * samples as f64)).sqrt()
}

pub fn check_thermal_sampler(opts: &ValidateOptions) -> Result<CheckResult> {
    let (lambda, eps) = (0.1, 0.05);
    let mut rng = RandomStream::new(opts.seed).split(5);
    let u = haar_unitary(2, &mut rng)?;
    let reference = thermal_exact_distribution(&u, lambda, 2, 8)?;
    let sampler = ThermalSampler::new(&u, ThermalParams::new(lambda)?, 2, eps)?;
    let samples = (0..opts.samples).map(|_| sampler.sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    let tvd = total_variation(&Distribution::empirical(samples.iter()), &reference.distribution)?;
    let k = reference.distribution.support_size(0.0);
    let tol = eps + sampling_allowance(k, opts.samples) + reference.truncation;
    Ok(CheckResult::compare("thermal_end_to_end", tvd, tol, format!("K = {k}, n = {}", opts.samples)))
}

pub fn check_lossy_input(opts: &ValidateOptions) -> Result<CheckResult> {
    const NAME: &str = "lossy_input_equivalence";
    let n = opts.lossy_photons;
    if n > MAX_LOSSY_PHOTONS {
        return Ok(CheckResult::skipped(NAME, format!("{n} photons beyond lossy oracle cap {MAX_LOSSY_PHOTONS}")));
    }
    let mu = 0.5;
    let mut rng = RandomStream::new(opts.seed).split(6);
    let c = random_brickwork(n.max(2) + 1, 3, 1.0, &mut rng)?;
    let exact = lossy_exact_distribution(&transfer_matrix(&c)?, mu, n)?;
    let mut sampler = ThinnedMpsSampler::new(&c, n, mu, MpsOptions::default())?;
    let samples = (0..opts.samples).map(|_| sampler.sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    let tvd = total_variation(&Distribution::empirical(samples.iter()), &exact)?;
    let k = exact.support_size(0.0);
    Ok(CheckResult::compare(NAME, tvd, sampling_allowance(k, opts.samples), format!("K = {k}, n = {}", opts.samples)))
}

/// Probabilists' Hermite polynomial by recurrence.
fn hermite(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn check_quadrature() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for m in 1..=10 {
        let c = gauss_hermite_constellation(m)?;
        for k in 1..2 * m {
            worst = worse(worst, c.hermite_moment(k).abs());
        }
    }
    // He_k(x) evaluated in f64 at the stored nodes, as an independent path
    let mut plain: f64 = 0.0;
    for m in 1..=10 {
        let c = gauss_hermite_constellation(m)?;
        for k in 1..2 * m {
            let s: f64 = c.points.iter().zip(&c.weights).map(|(x, w)| w * hermite(k, *x)).sum();
            plain = worse(plain, s.abs());
        }
    }
    let s3 = 3f64.sqrt();
    let closed: [(&[f64], &[f64]); 2] = [(&[-1.0, 1.0], &[0.5, 0.5]), (&[-s3, 0.0, s3], &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])];
    let mut closed_err: f64 = 0.0;
    for (m, (nodes, weights)) in [2, 3].into_iter().zip(closed) {
        let c = gauss_hermite_constellation(m)?;
        for (a, b) in c.points.iter().zip(nodes).chain(c.weights.iter().zip(weights)) {
            closed_err = worse(closed_err, (a - b).abs());
        }
    }
    let measured = if closed_err < 1e-12 { worst } else { f64::INFINITY };
    Ok(CheckResult::compare(
        "quadrature_exactness",
        measured,
        1e-10,
        format!("closed-form error {closed_err:.1e}, f64 evaluation {plain:.1e}"),
    ))
}

/// Exact `TVD(Binomial(t, x/t), Poisson(x))` by enumerating both pmfs.
pub fn binomial_poisson_tvd(x: f64, t: usize) -> f64 {
    let lf = log_factorials(t);
    let p = x / t as f64;
    let mut diff = 0.0;
    let mut poisson_mass = 0.0;
    for k in 0..=t {
        let ln_binom = lf[t] - lf[k] - lf[t - k] + k as f64 * p.ln() + (t - k) as f64 * (1.0 - p).ln();
        let pois = (k as f64 * x.ln() - x - lf[k]).exp();
        poisson_mass += pois;
        diff += (ln_binom.exp() - pois).abs();
    }
    0.5 * (diff + (1.0 - poisson_mass).max(0.0))
}

pub fn check_binomial_poisson() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for x in [0.5f64, 1.0, 2.0] {
        for t in [10, 100, 1000] {
            let bound = (1.0 - (-x).exp()) * x / t as f64;
            worst = worse(worst, binomial_poisson_tvd(x, t) / bound);
        }
    }
    Ok(CheckResult::compare("binomial_poisson_bound", worst, 1.0, "max TVD / bound"))
}

/// Worst `χ² / (λᵐ/(1−λ))` over the grid, against the budget `2κ²`.
pub fn check_chi2(two_kappa_sq: f64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for m in 2..=8 {
        for lambda in [0.1, 0.3, 0.5] {
            let chi2 = chi2_constellation(m, lambda, 200)?;
            worst = worse(worst, chi2 / (lambda.powi(m as i32) / (1.0 - lambda)));
        }
    }
    Ok(CheckResult::compare("chi2_budget", worst, two_kappa_sq, "max chi2 / (lambda^m / (1 - lambda))"))
}

pub fn check_bond_growth(opts: &ValidateOptions) -> Result<CheckResult> {
    let d = 2;
    let mut rng = RandomStream::new(opts.seed).split(10);
    let mut worst: f64 = 0.0;
    let mut peak_rank = 0;
    for depth in 1..=4 {
        for _ in 0..5 {
            let c = random_brickwork(8, depth, 1.0, &mut rng)?;
            let mut pattern = vec![0; 8];
            pattern[0] = 1;
            pattern[1] = 1;
            let sim = simulate_circuit_with(&c, &pattern, &MpsOptions { local_photons: Some(d), ..MpsOptions::default() })?;
            worst = worse(worst, sim.peak_bond as f64 / sim.bond_ceiling as f64);
            peak_rank = peak_rank.max(sim.peak_mpo_rank);
        }
    }
    let rank_ratio = peak_rank as f64 / ((d + 1) * (d + 1)) as f64;
    Ok(CheckResult::compare(
        "bond_growth",
        worst.max(rank_ratio),
        1.0,
        format!("max bond / ceiling {worst:.3}, MPO rank {peak_rank}"),
    ))
}

pub fn check_loss_model(opts: &ValidateOptions) -> Result<CheckResult> {
    let tau: f64 = 0.9;
    let mut rng = RandomStream::new(opts.seed).split(11);
    let mut uniform: f64 = 0.0;
    for depth in 1..=5 {
        let c = random_brickwork(6, depth, tau, &mut rng)?;
        let dec = decompose_losses(&transfer_matrix(&c)?)?;
        let target = tau.powi(depth as i32);
        for mu in &dec.mu {
            uniform = worse(uniform, (mu - target).abs());
        }
    }
    let mut c = random_brickwork(6, 4, 1.0, &mut rng)?;
    for layer in &mut c.layers {
        layer.idle_tau = 0.5 + 0.5 * rng.gen::<f64>();
        for g in &mut layer.couplers {
            g.tau = 0.5 + 0.5 * rng.gen::<f64>();
        }
    }
    let a = transfer_matrix(&c)?;
    let (mu_max, residual) = factor_nonuniform(&decompose_losses(&a)?)?;
    let recombined = LossDecomposition { mu: residual.mu.iter().map(|m| m * mu_max).collect(), ..residual };
    let diff = (recombined.reconstruct() - &a).iter().map(|z: &C64| z.norm()).fold(0.0, f64::max);
    Ok(CheckResult::compare(
        "loss_model",
        uniform.max(diff),
        1e-10,
        format!("uniform error {uniform:.1e}, non-uniform recombination {diff:.1e}"),
    ))
}

pub fn check_algebraic() -> Result<CheckResult> {
    let p = PlanParameters { photons: 100, modes: 10_000, density: 1.0, exponent: 0.5, eps: 0.02, tau: 0.5, depth: 1 };
    let t = depth_threshold_algebraic(&p, &AlgebraicLossParams { scale: 1.0, exponent: 2.0 })?;
    let measured = if t.asymptotically_simulable { (t.depth - 9.0).abs() } else { f64::INFINITY };
    Ok(CheckResult::compare(
        "algebraic_threshold",
        measured,
        1e-9,
        format!("D* = {}, gamma/beta = {}", t.depth, t.exponent_ratio),
    ))
}

pub fn check_determinism(opts: &ValidateOptions) -> Result<CheckResult> {
    let mut rng = RandomStream::new(opts.seed).split(13);
    let c = random_brickwork(4, 3, 0.8, &mut rng)?;
    let mut differing = 0usize;
    for mode in [Mode::Thermal, Mode::Mps] {
        let cfg = RunConfig {
            params: ParamsConfig { photons: Some(2), eps: Some(0.05), ..ParamsConfig::default() },
            samples: Some(opts.samples.min(2000)),
            seed: Some(opts.seed),
            mode: Some(mode),
            ..RunConfig::default()
        };
        let run = || -> Result<Vec<u8>> {
            let mut buf = Vec::new();
            sample_circuit(&cfg, &c, &mut buf)?;
            Ok(buf)
        };
        let (a, b) = (run()?, run()?);
        differing += a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    }
    Ok(CheckResult::compare("determinism", differing as f64, 0.0, "differing bytes across two runs"))
}
