//! Dense complex linear algebra, Haar-random unitaries, permanents and
//! distances between discrete distributions.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rng::RandomStream;

/// Row/column-major agnostic dense complex matrix; entries are field amplitudes.
pub type ComplexMatrix = DMatrix<C64>;

/// Largest matrix order accepted by [`permanent`].
pub const MAX_PERMANENT_ORDER: usize = 20;

/// One detected photon-count pattern, one entry per mode.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockSample(pub Vec<usize>);

impl FockSample {
    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl Deref for FockSample {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for FockSample {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl fmt::Display for FockSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// `left · diag(singulars) · right`, singular values non-increasing.
#[derive(Clone, Debug)]
pub struct SingularSystem {
    pub left: ComplexMatrix,
    pub singulars: Vec<f64>,
    pub right: ComplexMatrix,
}

impl SingularSystem {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.left.clone();
        for (j, s) in self.singulars.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * &self.right
    }
}

pub fn check_finite(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        input(format!("{what} has non-finite entries"))
    }
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |U†U − I|` over entries.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - ComplexMatrix::identity(n, n)))
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
/// Returns the thin factorization, `left` is `rows × k` and `right` is
/// `k × cols` with `k = min(rows, cols)`; for square input both factors are
/// unitary, including when singular values vanish.
pub fn svd(a: &ComplexMatrix) -> Result<SingularSystem> {
    check_finite(a, "matrix")?;
    if a.nrows() < a.ncols() {
        let t = jacobi_svd(a.adjoint());
        return Ok(SingularSystem { left: t.right.adjoint(), singulars: t.singulars, right: t.left.adjoint() });
    }
    Ok(jacobi_svd(a.clone()))
}

const JACOBI_MAX_SWEEPS: usize = 80;

// tall or square input only
fn jacobi_svd(mut work: ComplexMatrix) -> SingularSystem {
    let (m, n) = work.shape();
    let mut v = ComplexMatrix::identity(n, n);
    let tol = f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = work.column(p).norm_squared();
                let beta = work.column(q).norm_squared();
                let gamma = work.column(p).dotc(&work.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate column q into phase so that ⟨a_p, a_q⟩ is real and positive
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut work, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| work.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let top = norms.iter().copied().fold(0.0, f64::max);
    let mut left = ComplexMatrix::zeros(m, n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut singulars = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let sv = norms[j];
        singulars.push(sv);
        right.row_mut(k).copy_from(&v.column(j).adjoint());
        if sv > top * f64::EPSILON * m as f64 && sv > 0.0 {
            left.column_mut(k).copy_from(&work.column(j).unscale(sv));
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut left, &missing);
    SingularSystem { left, singulars, right }
}

/// Fills columns `missing` of `q` with unit vectors orthogonal to all others.
fn complete_orthonormal(q: &mut ComplexMatrix, missing: &[usize]) {
    let m = q.nrows();
    let mut filled: Vec<usize> = (0..q.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &k in missing {
        while candidate < m {
            let mut e = nalgebra::DVector::<C64>::zeros(m);
            e[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            // two passes of Gram–Schmidt
            for _ in 0..2 {
                for &j in &filled {
                    let proj = q.column(j).dotc(&e);
                    e -= q.column(j) * proj;
                }
            }
            let norm = e.norm();
            if norm > 1e-8 {
                q.column_mut(k).copy_from(&e.unscale(norm));
                filled.push(k);
                break;
            }
        }
    }
}

/// Haar-distributed `m × m` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal pushed into `Q`.
pub fn haar_unitary(m: usize, rng: &mut RandomStream) -> Result<ComplexMatrix> {
    if m == 0 {
        return input("haar_unitary needs m >= 1");
    }
    let g = ComplexMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Permanent by Glynn's formula with Gray-code ordering, `O(2ⁿ n)`.
pub fn permanent(a: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() {
        return input(format!("permanent of non-square {}x{} matrix", a.nrows(), a.ncols()));
    }
    let n = a.nrows();
    if n > MAX_PERMANENT_ORDER {
        return Err(Error::Capacity(format!(
            "permanent order {n} exceeds {MAX_PERMANENT_ORDER}"
        )));
    }
    check_finite(a, "matrix")?;
    match n {
        0 => return Ok(C64::new(1.0, 0.0)),
        1 => return Ok(a[(0, 0)]),
        _ => {}
    }
    // column sums of δᵢ aᵢⱼ, starting from δ = (+1, …, +1)
    let mut sums: Vec<C64> = (0..n).map(|j| a.column(j).sum()).collect();
    let mut delta = vec![1.0f64; n];
    let mut sign = 1.0;
    let mut total: C64 = sums.iter().product();
    let steps: u64 = 1 << (n - 1);
    for k in 1..steps {
        let row = k.trailing_zeros() as usize + 1;
        delta[row] = -delta[row];
        sign = -sign;
        let f = 2.0 * delta[row];
        for (j, s) in sums.iter_mut().enumerate() {
            *s += a[(row, j)] * f;
        }
        total += sums.iter().product::<C64>() * sign;
    }
    Ok(total / steps as f64)
}

/// Discrete distribution over photon-count outcomes (or integer labels
/// wrapped as one-entry outcomes), kept in lexicographic outcome order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Distribution {
    weights: BTreeMap<FockSample, f64>,
}

impl Distribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulates weight on an outcome; repeated outcomes merge.
    pub fn add(&mut self, outcome: FockSample, weight: f64) {
        *self.weights.entry(outcome).or_insert(0.0) += weight;
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (FockSample, f64)>,
    {
        let mut d = Self::new();
        for (o, w) in pairs {
            d.add(o, w);
        }
        d
    }

    /// Integer-labelled distribution, label `i` carrying `weights[i]`.
    pub fn from_labels(weights: &[f64]) -> Self {
        Self::from_pairs(weights.iter().enumerate().map(|(i, &w)| (FockSample(vec![i]), w)))
    }

    /// Empirical distribution of a sample set.
    pub fn empirical<'a, I>(samples: I) -> Self
    where
        I: IntoIterator<Item = &'a FockSample>,
    {
        let mut counts: BTreeMap<FockSample, u64> = BTreeMap::new();
        let mut n = 0u64;
        for s in samples {
            *counts.entry(s.clone()).or_insert(0) += 1;
            n += 1;
        }
        let inv = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        Self { weights: counts.into_iter().map(|(k, c)| (k, c as f64 * inv)).collect() }
    }

    pub fn get(&self, outcome: &FockSample) -> f64 {
        self.weights.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockSample, f64)> {
        self.weights.iter().map(|(k, &w)| (k, w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Number of outcomes with weight above `floor`.
    pub fn support_size(&self, floor: f64) -> usize {
        self.weights.values().filter(|&&w| w > floor).count()
    }

    pub fn normalized(mut self) -> Self {
        let t = self.total();
        if t > 0.0 {
            self.weights.values_mut().for_each(|w| *w /= t);
        }
        self
    }

    /// Inverse-CDF draw in outcome order.
    pub fn sample(&self, rng: &mut RandomStream) -> Option<FockSample> {
        use rand::Rng;
        let u: f64 = rng.gen::<f64>() * self.total();
        let mut acc = 0.0;
        let mut last = None;
        for (k, &w) in &self.weights {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(k);
            if u < acc {
                return Some(k.clone());
            }
        }
        last.cloned()
    }
}

/// `½ Σ |pᵢ − qᵢ|` over the union of supports.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.iter().chain(q.iter()).any(|(_, w)| w < 0.0 || !w.is_finite()) {
        return input("distribution has negative or non-finite weight");
    }
    let mut sum = 0.0;
    for (k, w) in p.iter() {
        sum += (w - q.get(k)).abs();
    }
    for (k, w) in q.iter() {
        if !p.weights.contains_key(k) {
            sum += w;
        }
    }
    Ok(0.5 * sum)
}

/// Natural log of `n!` for `n = 0..=max`.
pub fn log_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}
