//! Thermal-noise sampler for deep lossy circuits.
//!
//! Lossy single photons are replaced by thermal light, whose P-function is a
//! Gaussian; the Gaussian is replaced by a Gauss–Hermite constellation of
//! coherent states. A coherent input stays coherent through the transfer
//! matrix, and a coherent state's photon counts are independent Poisson
//! variables, approximated here by sums of Bernoulli trials.
//!
//! The error budget `ε` is split evenly between the constellation, the
//! matrix-vector product and the Poisson stage.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Binomial, Distribution as _};

use crate::dd::Dd;
use crate::error::{input, Error, Result};
use crate::numerics::{check_finite, ComplexMatrix, FockSample};
use crate::rng::RandomStream;

/// `2κ²` in the constellation χ² bound.
pub const TWO_KAPPA_SQ: f64 = 2.36;
pub const MAX_CONSTELLATION: usize = 64;
/// Transmissions this close to one make the constellation size diverge.
pub const MAX_LAMBDA: f64 = 1.0 - 1e-6;

/// `κ = √1.18`.
pub fn kappa() -> f64 {
    (TWO_KAPPA_SQ / 2.0).sqrt()
}

/// Bose–Einstein parameter `λ`: `P(n) = (1−λ)λⁿ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalParams {
    lambda: f64,
}

impl ThermalParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return input(format!("thermal lambda {lambda} outside [0,1)"));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean photon number `z = λ/(1−λ)`.
    pub fn mean(&self) -> f64 {
        self.lambda / (1.0 - self.lambda)
    }

    /// Variance of the Gaussian P-function; equal to the mean.
    pub fn variance(&self) -> f64 {
        self.mean()
    }
}

/// Discrete stand-in for `N(0,1)`.
///
/// `points` and `weights` are the `f64` roundings used for sampling; the rule
/// itself is held in double-double precision so that its moment identities
/// can be checked beyond `f64` resolution.
#[derive(Clone, Debug)]
pub struct Constellation {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    points_dd: Vec<Dd>,
    weights_dd: Vec<Dd>,
    cumulative: Vec<f64>,
}

impl Constellation {
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn draw(&self, rng: &mut RandomStream) -> f64 {
        let u: f64 = rng.gen();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.points[i.min(self.points.len() - 1)]
    }

    /// `E[He_k(X_m)]` for the probabilists' Hermite polynomial `He_k`.
    pub fn hermite_moment(&self, k: usize) -> f64 {
        let mut total = Dd::ZERO;
        for (&x, &w) in self.points_dd.iter().zip(&self.weights_dd) {
            let (mut prev, mut cur) = (Dd::ZERO, Dd::ONE);
            for j in 0..k {
                let next = x * cur - Dd::new(j as f64) * prev;
                prev = cur;
                cur = next;
            }
            total = total + w * cur;
        }
        total.to_f64()
    }

    /// `E[He_k(X_m)] / √(k!)` for `k = 0..=k_max`.
    pub fn normalized_hermite_moments(&self, k_max: usize) -> Vec<f64> {
        let mut moments = vec![Dd::ZERO; k_max + 1];
        for (&x, &w) in self.points_dd.iter().zip(&self.weights_dd) {
            for (k, h) in normalized_hermite(x, k_max).into_iter().enumerate() {
                moments[k] = moments[k] + w * h;
            }
        }
        moments.into_iter().map(Dd::to_f64).collect()
    }
}

/// `hₖ = Heₖ/√k!` for `k = 0..=k_max`:
/// `h₀ = 1`, `hₖ₊₁ = (x hₖ − √k hₖ₋₁)/√(k+1)`.
fn normalized_hermite(x: Dd, k_max: usize) -> Vec<Dd> {
    let mut out = Vec::with_capacity(k_max + 1);
    let (mut prev, mut cur) = (Dd::ZERO, Dd::ONE);
    for k in 0..=k_max {
        out.push(cur);
        let next = (x * cur - Dd::new(k as f64).sqrt() * prev) / Dd::new((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    out
}

/// Nodes and weights of `m`-point Gauss–Hermite quadrature against the
/// standard normal. Golub–Welsch (eigenvalues of the Jacobi matrix of the
/// probabilists' Hermite recurrence) seeds the nodes; Newton steps on
/// `h_m` polish them in double-double, and the weights follow from
/// `w = 1 / (m h_{m−1}(x)²)`.
pub fn gauss_hermite_constellation(m: usize) -> Result<Constellation> {
    if !(1..=MAX_CONSTELLATION).contains(&m) {
        return input(format!("constellation size {m} outside 1..={MAX_CONSTELLATION}"));
    }
    let jacobi = DMatrix::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut seeds: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    seeds.sort_by(f64::total_cmp);

    let sqrt_m = Dd::new(m as f64).sqrt();
    let polish = |seed: f64| -> (Dd, Dd) {
        let mut x = Dd::new(seed);
        for _ in 0..4 {
            let h = normalized_hermite(x, m);
            let step = h[m] / (sqrt_m * h[m - 1]);
            x = x - step;
        }
        let h = normalized_hermite(x, m);
        (x, Dd::ONE / (Dd::new(m as f64) * h[m - 1] * h[m - 1]))
    };
    // the rule is symmetric about 0: polish the upper half and mirror it
    let mut nodes = vec![(Dd::ZERO, Dd::ZERO); m];
    for j in m / 2..m {
        let (x, w) = if m % 2 == 1 && j == m / 2 { polish(0.0) } else { polish(seeds[j].abs()) };
        let x = if m % 2 == 1 && j == m / 2 { Dd::ZERO } else { x };
        nodes[j] = (x, w);
        nodes[m - 1 - j] = (-x, w);
    }
    let total = nodes.iter().fold(Dd::ZERO, |acc, n| acc + n.1);
    let points_dd: Vec<Dd> = nodes.iter().map(|n| n.0).collect();
    let weights_dd: Vec<Dd> = nodes.iter().map(|n| n.1 / total).collect();
    let points: Vec<f64> = points_dd.iter().map(|x| x.to_f64()).collect();
    let weights: Vec<f64> = weights_dd.iter().map(|w| w.to_f64()).collect();
    let mut acc = 0.0;
    let cumulative = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    Ok(Constellation { points, weights, points_dd, weights_dd, cumulative })
}

/// Unrounded constellation size
/// `[ln N + ln(1/ε) + ln(1/(1−μ)) + 2 ln(3κ)] / ln(1/μ)`.
pub fn constellation_size_bound(n: usize, eps: f64, mu: f64) -> Result<f64> {
    if n == 0 || !(eps > 0.0) {
        return input(format!("constellation size needs N >= 1 and eps > 0 (N = {n}, eps = {eps})"));
    }
    if !(0.0..MAX_LAMBDA).contains(&mu) {
        return input(format!("mu {mu} outside [0, 1 - 1e-6)"));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let numerator =
        (n as f64).ln() + (1.0 / eps).ln() + (1.0 / (1.0 - mu)).ln() + 2.0 * (3.0 * kappa()).ln();
    Ok(numerator / (1.0 / mu).ln())
}

/// Smallest constellation meeting the `ε` budget for `N` thermal modes.
pub fn constellation_size(n: usize, eps: f64, mu: f64) -> Result<usize> {
    let bound = constellation_size_bound(n, eps, mu)?;
    let m = (bound.ceil() as usize).max(1);
    if m > MAX_CONSTELLATION {
        return Err(Error::Capacity(format!("constellation size {m} exceeds {MAX_CONSTELLATION}")));
    }
    Ok(m)
}

/// Complex field amplitudes, one per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentVector(pub DVector<C64>);

impl CoherentVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Extends with vacuum modes up to `modes`.
    pub fn padded(&self, modes: usize) -> Self {
        let mut v = DVector::zeros(modes.max(self.len()));
        v.rows_mut(0, self.len()).copy_from(&self.0);
        Self(v)
    }
}

/// `N` coherent amplitudes `αᵢ = √(V/2)(x + i x′)` with `x, x′` independent
/// constellation draws.
pub fn sample_thermal_coherent(c: &Constellation, t: ThermalParams, n: usize, rng: &mut RandomStream) -> CoherentVector {
    let scale = (t.variance() / 2.0).sqrt();
    CoherentVector(DVector::from_fn(n, |_, _| {
        let re = c.draw(rng);
        let im = c.draw(rng);
        C64::new(re, im) * scale
    }))
}

/// `β = A α`.
pub fn propagate(a: &ComplexMatrix, alpha: &CoherentVector) -> Result<CoherentVector> {
    if a.ncols() != alpha.len() {
        return input(format!("matrix has {} columns, amplitude vector {} entries", a.ncols(), alpha.len()));
    }
    Ok(CoherentVector(a * &alpha.0))
}

/// Bernoulli trials per mode, `⌈6 M N² m² / ε⌉`.
pub fn bernoulli_trials_count(m_modes: usize, n: usize, eps: f64, m_const: usize) -> Result<u64> {
    if m_modes == 0 || n == 0 || m_const == 0 || !(eps > 0.0) {
        return input("bernoulli_trials_count needs positive arguments");
    }
    let numerator = 6.0 * m_modes as f64 * (n * n) as f64 * (m_const * m_const) as f64;
    let q = numerator / eps;
    // a decimal ε such as 0.01 must not push an exact quotient over the integer
    let r = q.round();
    let t = if (q - r).abs() <= 1e-9 * r.max(1.0) { r } else { q.ceil() };
    if t > u64::MAX as f64 {
        return Err(Error::Capacity(format!("{t:e} Bernoulli trials")));
    }
    Ok(t as u64)
}

/// Photon count from `t` Bernoulli trials of success probability `|β|²/t`,
/// i.e. one `Binomial(t, |β|²/t)` draw.
pub fn sample_poisson_bernoulli(beta: C64, t: u64, rng: &mut RandomStream) -> Result<u64> {
    let x = beta.norm_sqr();
    if !x.is_finite() || x > t as f64 {
        return input(format!("{t} trials cannot carry mean {x}"));
    }
    if x == 0.0 {
        return Ok(0);
    }
    let binomial = Binomial::new(t, x / t as f64).map_err(|e| Error::Input(e.to_string()))?;
    Ok(binomial.sample(rng))
}

/// Exact Poisson draw by CDF inversion; a reference for the Bernoulli path.
pub fn sample_poisson_direct(x: f64, rng: &mut RandomStream) -> Result<u64> {
    if !(0.0..700.0).contains(&x) {
        return input(format!("direct Poisson sampler needs 0 <= mean < 700 (got {x})"));
    }
    let u: f64 = rng.gen();
    let mut k = 0u64;
    let mut p = (-x).exp();
    let mut cdf = p;
    while u >= cdf && p > 0.0 {
        k += 1;
        p *= x / k as f64;
        cdf += p;
    }
    Ok(k)
}

/// Thermal light in the first `photons` modes of a lossy circuit with
/// transfer matrix `a`, prepared once and sampled repeatedly.
#[derive(Clone, Debug)]
pub struct ThermalSampler {
    transfer: ComplexMatrix,
    params: ThermalParams,
    photons: usize,
    constellation: Constellation,
    trials: u64,
}

impl ThermalSampler {
    pub fn new(a: &ComplexMatrix, params: ThermalParams, photons: usize, eps: f64) -> Result<Self> {
        check_finite(a, "transfer matrix")?;
        if !a.is_square() {
            return input("transfer matrix must be square");
        }
        let modes = a.nrows();
        if photons == 0 || photons > modes {
            return input(format!("{photons} thermal inputs for {modes} modes"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return input(format!("eps {eps} outside (0,1)"));
        }
        if params.lambda() >= MAX_LAMBDA {
            return input(format!("lambda {} too close to 1", params.lambda()));
        }
        let stage = eps / 3.0;
        let m = constellation_size(photons, stage, params.lambda())?;
        let constellation = gauss_hermite_constellation(m)?;
        let trials = bernoulli_trials_count(modes, photons, stage, m)?;
        Ok(Self { transfer: a.clone(), params, photons, constellation, trials })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<FockSample> {
        let modes = self.transfer.nrows();
        if self.params.lambda() == 0.0 {
            return Ok(FockSample::vacuum(modes));
        }
        let alpha = sample_thermal_coherent(&self.constellation, self.params, self.photons, rng).padded(modes);
        let beta = propagate(&self.transfer, &alpha)?;
        let counts = beta
            .0
            .iter()
            .map(|&b| sample_poisson_bernoulli(b, self.trials, rng).map(|k| k as usize))
            .collect::<Result<Vec<_>>>()?;
        Ok(FockSample(counts))
    }
}

/// One outcome of thermal light through `a`; see [`ThermalSampler`].
pub fn sample_output(a: &ComplexMatrix, t: ThermalParams, n: usize, eps: f64, rng: &mut RandomStream) -> Result<FockSample> {
    ThermalSampler::new(a, t, n, eps)?.sample(rng)
}

/// Herald counts of `m_modes` two-mode squeezed sources, each `(1−λ)λⁿ`.
pub fn scattershot_herald(m_modes: usize, lambda: f64, rng: &mut RandomStream) -> Result<Vec<usize>> {
    ThermalParams::new(lambda)?;
    Ok((0..m_modes)
        .map(|_| {
            let mut n = 0;
            while rng.gen::<f64>() < lambda {
                n += 1;
            }
            n
        })
        .collect())
}

/// Trace distance between thermal light and an erased single photon,
/// `½(λ² + |μ−λ| + |λ(1−λ)−μ|)`.
pub fn thermal_erasure_distance(lambda: f64, mu: f64) -> f64 {
    0.5 * (lambda * lambda + (mu - lambda).abs() + (lambda * (1.0 - lambda) - mu).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::haar_unitary;

    #[test]
    fn constellation_closed_forms() {
        let c = gauss_hermite_constellation(1).unwrap();
        assert_eq!(c.points, vec![0.0]);
        assert_eq!(c.weights, vec![1.0]);
        let c = gauss_hermite_constellation(2).unwrap();
        assert!((c.points[0] + 1.0).abs() < 1e-12 && (c.points[1] - 1.0).abs() < 1e-12);
        assert!(c.weights.iter().all(|w| (w - 0.5).abs() < 1e-12));
        let c = gauss_hermite_constellation(3).unwrap();
        let r3 = 3f64.sqrt();
        for (p, e) in c.points.iter().zip([-r3, 0.0, r3]) {
            assert!((p - e).abs() < 1e-12);
        }
        for (w, e) in c.weights.iter().zip([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]) {
            assert!((w - e).abs() < 1e-12);
        }
        assert!(gauss_hermite_constellation(0).is_err());
        assert!(gauss_hermite_constellation(65).is_err());
    }

    #[test]
    fn constellation_is_exact_to_degree_2m_minus_1() {
        for m in 1..=10 {
            let c = gauss_hermite_constellation(m).unwrap();
            for k in 1..2 * m {
                let e = c.hermite_moment(k);
                assert!(e.abs() < 1e-10, "m={m} k={k} {e}");
            }
            // first surviving moment: E[He_2m(X_m)] = −m!
            let factorial: f64 = (1..=m).map(|i| i as f64).product();
            assert!((c.hermite_moment(2 * m) + factorial).abs() < 1e-12 * factorial);
        }
    }

    #[test]
    fn f64_rule_is_exact_for_low_degree() {
        // the rounded rule alone still integrates low-degree polynomials to f64 accuracy
        for m in 1..=6 {
            let c = gauss_hermite_constellation(m).unwrap();
            for k in 1..2 * m {
                let e: f64 = c
                    .points
                    .iter()
                    .zip(&c.weights)
                    .map(|(&x, &w)| {
                        let (mut a, mut b) = (0.0, 1.0);
                        for j in 0..k {
                            let next = x * b - j as f64 * a;
                            a = b;
                            b = next;
                        }
                        w * b
                    })
                    .sum();
                assert!(e.abs() < 1e-12, "m={m} k={k} {e}");
            }
        }
    }

    #[test]
    fn constellation_moments_and_symmetry() {
        for m in [2, 5, 17, 40, 64] {
            let c = gauss_hermite_constellation(m).unwrap();
            assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let second: f64 = c.points.iter().zip(&c.weights).map(|(x, w)| w * x * x).sum();
            assert!((second - 1.0).abs() < 1e-12, "m={m} {second}");
            for j in 0..m {
                assert_eq!(c.points[j], -c.points[m - 1 - j]);
            }
        }
    }

    #[test]
    fn constellation_size_examples() {
        assert_eq!(constellation_size(10, 0.01, 0.1).unwrap(), 5);
        let raw = constellation_size_bound(10, 0.01, 0.1).unwrap();
        assert!((raw - 4.072).abs() < 1e-3, "{raw}");
        assert_eq!(constellation_size(10, 0.01, 1e-300).unwrap(), 1);
        let halved = constellation_size_bound(10, 0.005, 0.1).unwrap();
        assert!((halved - raw - 2f64.ln() / 10f64.ln()).abs() < 1e-12);
        assert!(constellation_size(10, 0.01, 1.0).is_err());
        assert!(constellation_size(10, 0.01, 1.0 - 1e-7).is_err());
    }

    #[test]
    fn coherent_draws() {
        let mut rng = RandomStream::new(1);
        let c5 = gauss_hermite_constellation(5).unwrap();
        let a = sample_thermal_coherent(&c5, ThermalParams::new(0.0).unwrap(), 4, &mut rng);
        assert!(a.0.iter().all(|z| *z == C64::new(0.0, 0.0)));
        let c1 = gauss_hermite_constellation(1).unwrap();
        let a = sample_thermal_coherent(&c1, ThermalParams::new(0.7).unwrap(), 4, &mut rng);
        assert!(a.0.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn coherent_second_moment_matches_variance() {
        let mut rng = RandomStream::new(2);
        let t = ThermalParams::new(0.5).unwrap();
        let c = gauss_hermite_constellation(5).unwrap();
        let draws = 100_000;
        let samples: Vec<f64> =
            (0..draws).map(|_| sample_thermal_coherent(&c, t, 1, &mut rng).0[0].norm_sqr()).collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let sigma = (var / draws as f64).sqrt();
        assert!((mean - t.variance()).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn propagate_examples() {
        let mut rng = RandomStream::new(3);
        let alpha = CoherentVector(DVector::from_fn(3, |i, _| C64::new(i as f64 + 0.5, -0.3)));
        let id = ComplexMatrix::identity(3, 3);
        assert_eq!(propagate(&id, &alpha).unwrap(), alpha);
        let u = haar_unitary(3, &mut rng).unwrap();
        let beta = propagate(&u, &alpha).unwrap();
        assert!((beta.norm_sqr() - alpha.norm_sqr()).abs() < 1e-12);
        let mu: f64 = 0.37;
        let lossy = &u * C64::new(mu.sqrt(), 0.0);
        let beta = propagate(&lossy, &alpha).unwrap();
        assert!((beta.norm_sqr() - mu * alpha.norm_sqr()).abs() < 1e-12);
        let c = C64::new(-0.4, 2.0);
        let scaled = CoherentVector(&alpha.0 * c);
        let lhs = propagate(&u, &scaled).unwrap();
        let rhs = propagate(&u, &alpha).unwrap().0 * c;
        assert!((lhs.0 - rhs).norm() < 1e-12);
        assert!(propagate(&ComplexMatrix::identity(2, 2), &alpha).is_err());
    }

    #[test]
    fn trials_count_examples() {
        assert_eq!(bernoulli_trials_count(4, 2, 0.01, 5).unwrap(), 240_000);
        assert_eq!(bernoulli_trials_count(1, 1, 6.0, 1).unwrap(), 1);
        assert_eq!(
            bernoulli_trials_count(3, 4, 0.1, 2).unwrap() * 4,
            bernoulli_trials_count(3, 8, 0.1, 2).unwrap()
        );
        assert_eq!(bernoulli_trials_count(1, 1, 7.0, 1).unwrap(), 1);
    }

    #[test]
    fn bernoulli_poisson_samples() {
        let mut rng = RandomStream::new(4);
        for _ in 0..100 {
            assert_eq!(sample_poisson_bernoulli(C64::new(0.0, 0.0), 10, &mut rng).unwrap(), 0);
        }
        assert!(sample_poisson_bernoulli(C64::new(2.0, 0.0), 3, &mut rng).is_err());
        let draws = 100_000;
        let beta = C64::new(2f64.sqrt(), 0.0);
        let mean = (0..draws).map(|_| sample_poisson_bernoulli(beta, 1_000_000, &mut rng).unwrap()).sum::<u64>()
            as f64
            / draws as f64;
        let sigma = (2.0 / draws as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sigma, "{mean}");
        let mean = (0..draws).map(|_| sample_poisson_direct(2.0, &mut rng).unwrap()).sum::<u64>() as f64
            / draws as f64;
        assert!((mean - 2.0).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn vacuum_in_vacuum_out() {
        let mut rng = RandomStream::new(5);
        let u = haar_unitary(3, &mut rng).unwrap();
        for _ in 0..20 {
            let s = sample_output(&u, ThermalParams::new(0.0).unwrap(), 2, 0.1, &mut rng).unwrap();
            assert_eq!(s, FockSample(vec![0, 0, 0]));
        }
    }

    #[test]
    fn single_mode_output_is_geometric() {
        let mut rng = RandomStream::new(6);
        let a = ComplexMatrix::identity(1, 1);
        let lambda = 0.2;
        let eps = 0.05;
        let sampler = ThermalSampler::new(&a, ThermalParams::new(lambda).unwrap(), 1, eps).unwrap();
        let draws = 100_000;
        let samples: Vec<FockSample> = (0..draws).map(|_| sampler.sample(&mut rng).unwrap()).collect();
        let emp = crate::numerics::Distribution::empirical(samples.iter());
        let exact = crate::numerics::Distribution::from_pairs(
            (0..40).map(|k| (FockSample(vec![k]), (1.0 - lambda) * lambda.powi(k as i32))),
        );
        let k = exact.support_size(1e-6) as f64;
        let tvd = crate::numerics::total_variation(&emp, &exact).unwrap();
        assert!(tvd < eps + 3.0 * (k / (4.0 * draws as f64)).sqrt(), "{tvd}");
    }

    #[test]
    fn herald_statistics() {
        let mut rng = RandomStream::new(7);
        assert!(scattershot_herald(5, 0.0, &mut rng).unwrap().iter().all(|&n| n == 0));
        let draws = 100_000;
        let mut hist = [0u64; 3];
        for _ in 0..draws {
            let n = scattershot_herald(1, 0.5, &mut rng).unwrap()[0];
            if n < 2 {
                hist[n] += 1;
            }
        }
        for (k, p) in [(0usize, 0.5f64), (1, 0.25)] {
            let f = hist[k] as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() < 3.0 * sigma, "P({k}) = {f}");
        }
    }

    #[test]
    fn herald_collision_free_rate() {
        // P(all sources <= 1) = ∏ (P(0) + P(1)) = ((1−λ)(1+λ))^M, by enumeration of the product pmf
        let (m, lambda) = (4usize, 0.1f64);
        let pmf = |n: usize| (1.0 - lambda) * lambda.powi(n as i32);
        let mut exact = 0.0;
        for pattern in 0..(1u32 << m) {
            exact += (0..m).map(|i| pmf((pattern >> i & 1) as usize)).product::<f64>();
        }
        let mut rng = RandomStream::new(8);
        let draws = 100_000;
        let accepted = (0..draws)
            .filter(|_| scattershot_herald(m, lambda, &mut rng).unwrap().iter().all(|&n| n <= 1))
            .count() as f64
            / draws as f64;
        let sigma = (exact * (1.0 - exact) / draws as f64).sqrt();
        assert!((accepted - exact).abs() < 3.0 * sigma, "{accepted} vs {exact}");
    }

    #[test]
    fn erasure_distance_at_lambda_equal_mu() {
        for mu in [0.01, 0.1, 0.2, 0.3] {
            assert!((thermal_erasure_distance(mu, mu) - mu * mu).abs() < 1e-15);
        }
    }
}
