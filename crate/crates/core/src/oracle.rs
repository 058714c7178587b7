//! Brute-force reference distributions. Everything here is exponential in the
//! photon number and capped accordingly; samplers are validated against it.

use crate::error::{input, Error, Result};
use crate::numerics::{log_factorials, permanent, unitarity_defect, ComplexMatrix, Distribution, FockSample};
use crate::thermal::{gauss_hermite_constellation, ThermalParams};

pub const MAX_ORACLE_PHOTONS: usize = 8;
pub const MAX_ORACLE_MODES: usize = 8;
/// Largest photon number accepted by [`lossy_exact_distribution`].
pub const MAX_LOSSY_PHOTONS: usize = 6;

const UNITARY_TOL: f64 = 1e-9;

/// Photons per input mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputPattern(pub Vec<usize>);

impl InputPattern {
    /// `N` single photons in the first `N` of `modes` modes.
    pub fn leading_ones(n: usize, modes: usize) -> Self {
        Self((0..modes).map(|i| usize::from(i < n)).collect())
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// All ways to place `n` photons in `modes` modes, in lexicographic order.
pub fn compositions(n: usize, modes: usize) -> Vec<FockSample> {
    fn rec(n: usize, modes: usize, prefix: &mut Vec<usize>, out: &mut Vec<FockSample>) {
        if modes == 1 {
            prefix.push(n);
            out.push(FockSample(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in 0..=n {
            prefix.push(k);
            rec(n - k, modes - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes > 0 {
        rec(n, modes, &mut Vec::with_capacity(modes), &mut out);
    }
    out
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return input(format!("oracle needs a unitary matrix (defect {defect:e})"));
    }
    Ok(())
}

fn check_caps(n: usize, modes: usize, max_n: usize) -> Result<()> {
    if n > max_n || modes > MAX_ORACLE_MODES {
        return Err(Error::Capacity(format!(
            "oracle limited to N <= {max_n}, M <= {MAX_ORACLE_MODES} (got N = {n}, M = {modes})"
        )));
    }
    Ok(())
}

/// Unchecked core of [`fock_output_distribution`]; adds `scale · p(n̄)` into `out`.
fn accumulate_fock(u: &ComplexMatrix, input: &[usize], scale: f64, lf: &[f64], out: &mut Distribution) -> Result<()> {
    let m = u.nrows();
    let n: usize = input.iter().sum();
    let cols: Vec<usize> = input.iter().enumerate().flat_map(|(j, &s)| std::iter::repeat_n(j, s)).collect();
    let in_norm: f64 = input.iter().map(|&s| lf[s]).sum();
    for outcome in compositions(n, m) {
        let rows: Vec<usize> =
            outcome.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect();
        let sub = ComplexMatrix::from_fn(n, n, |r, c| u[(rows[r], cols[c])]);
        let out_norm: f64 = outcome.iter().map(|&k| lf[k]).sum();
        let p = permanent(&sub)?.norm_sqr() * (-(in_norm + out_norm)).exp();
        out.add(outcome, scale * p);
    }
    Ok(())
}

/// `p(n̄) = |Perm(U_{n̄,s̄})|² / (∏ sᵢ! ∏ nⱼ!)` over every outcome with the
/// input's photon number.
pub fn fock_output_distribution(u: &ComplexMatrix, input: &InputPattern) -> Result<Distribution> {
    check_unitary(u)?;
    if input.0.len() != u.ncols() {
        return crate::error::input(format!("input pattern has {} modes, matrix {}", input.0.len(), u.ncols()));
    }
    let n = input.total();
    check_caps(n, u.nrows(), MAX_ORACLE_PHOTONS)?;
    let lf = log_factorials(n);
    let mut d = Distribution::new();
    accumulate_fock(u, &input.0, 1.0, &lf, &mut d)?;
    Ok(d)
}

/// `N` single photons in the first modes, each surviving a uniform loss with
/// probability `μ`, then interfering on `u`.
pub fn lossy_exact_distribution(u: &ComplexMatrix, mu: f64, n: usize) -> Result<Distribution> {
    check_unitary(u)?;
    if !(0.0..=1.0).contains(&mu) {
        return input(format!("transmission {mu} outside [0,1]"));
    }
    let m = u.nrows();
    if n > m {
        return input(format!("{n} photons do not fit in {m} modes"));
    }
    check_caps(n, m, MAX_LOSSY_PHOTONS)?;
    let lf = log_factorials(n);
    let mut d = Distribution::new();
    for subset in 0u32..(1 << n) {
        let kept = subset.count_ones() as i32;
        let weight = mu.powi(kept) * (1.0 - mu).powi(n as i32 - kept);
        if weight == 0.0 {
            continue;
        }
        let pattern: Vec<usize> = (0..m).map(|i| usize::from(i < n && subset >> i & 1 == 1)).collect();
        accumulate_fock(u, &pattern, weight, &lf, &mut d)?;
    }
    Ok(d)
}

#[derive(Clone, Debug)]
pub struct ThermalReference {
    pub distribution: Distribution,
    /// Input mass dropped by the photon-number cutoff; bounds the TVD to the
    /// untruncated distribution.
    pub truncation: f64,
}

/// Thermal light of parameter `λ` in the first `n` modes of `u`, enumerated
/// over Fock inputs with at most `cutoff` photons in total.
pub fn thermal_exact_distribution(u: &ComplexMatrix, lambda: f64, n: usize, cutoff: usize) -> Result<ThermalReference> {
    check_unitary(u)?;
    ThermalParams::new(lambda)?;
    if cutoff < 1 {
        return input("thermal oracle cutoff must be >= 1");
    }
    let m = u.nrows();
    if n == 0 || n > m {
        return input(format!("thermal inputs need 1 <= n <= M (n = {n}, M = {m})"));
    }
    check_caps(cutoff, m, MAX_ORACLE_PHOTONS)?;
    let lf = log_factorials(cutoff + n);
    let mut d = Distribution::new();
    let mut kept = 0.0;
    for total in 0..=cutoff {
        let level = (1.0 - lambda).powi(n as i32) * lambda.powi(total as i32);
        for occupied in compositions(total, n) {
            let mut pattern = occupied.0.clone();
            pattern.resize(m, 0);
            kept += level;
            accumulate_fock(u, &pattern, level, &lf, &mut d)?;
        }
    }
    Ok(ThermalReference { distribution: d, truncation: (1.0 - kept).max(0.0) })
}

/// `s/(1+s)` with `s = V / (√(V(V+1)) − V)` and `V = λ/(1−λ)`; equals `√λ`.
pub fn series_ratio(lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let v = lambda / (1.0 - lambda);
    let s = v / ((v * (v + 1.0)).sqrt() - v);
    s / (1.0 + s)
}

/// `E[He_k(X_m)] / √(k!)` for `k = 0..=k_max` under the Gauss–Hermite constellation.
pub fn normalized_hermite_moments(m: usize, k_max: usize) -> Result<Vec<f64>> {
    Ok(gauss_hermite_constellation(m)?.normalized_hermite_moments(k_max))
}

/// `χ²(P_{X_m}, N(0,1))` from the Hermite series truncated at `k_max`.
pub fn chi2_constellation(m: usize, lambda: f64, k_max: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return input(format!("lambda {lambda} outside [0,1)"));
    }
    if k_max < 2 * m {
        return input(format!("k_max {k_max} below 2m = {}", 2 * m));
    }
    let ratio = series_ratio(lambda);
    let moments = normalized_hermite_moments(m, k_max)?;
    Ok(moments
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, h)| ratio.powi(k as i32) * h * h)
        .sum())
}

/// Trace distance between thermal light `λ` and the erased photon
/// `(1−μ)|0⟩⟨0| + μ|1⟩⟨1|`, summed level by level over the Fock basis (both
/// states are diagonal). Levels `≥ 2` are accumulated explicitly up to where
/// the geometric tail underflows.
pub fn erasure_thermal_distance_by_levels(lambda: f64, mu: f64) -> f64 {
    let mut sum = ((1.0 - lambda) - (1.0 - mu)).abs() + ((1.0 - lambda) * lambda - mu).abs();
    let mut level = (1.0 - lambda) * lambda * lambda;
    while level > 1e-300 {
        sum += level;
        level *= lambda;
    }
    0.5 * sum
}
