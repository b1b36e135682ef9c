//! Probability machinery for the a-contrario tests.
//!
//! Distributions live on a fixed lattice `k * step`. The point mass at zero
//! is carried separately from the binned continuous part; bin `i` holds the
//! continuous mass of `[c_i - step/2, c_i + step/2)` around its center `c_i`.

mod fft;
mod null;
pub mod quad;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

pub use fft::{convolve as convolve_sequences, convolve_direct};
pub use null::{
    elementary, elementary_density, elementary_pdf, modified, modified_density, modified_pdf, NullModel,
    ELEMENTARY_MEAN, ELEMENTARY_VARIANCE, MODIFIED_VARIANCE,
};

/// Lattice spacing on the normalized statistic scale.
pub const BIN_WIDTH: f64 = 1e-3;

/// Largest self-convolution count computed exactly; beyond it the sum is
/// replaced by its Gaussian approximation.
pub const EXACT_CONVOLUTION_LIMIT: usize = 64;

/// Bins below this after an FFT convolution are round-off, not mass.
const CONVOLUTION_FLOOR: f64 = 1e-18;

/// Tails below this are ranked with a Gaussian extrapolation instead.
const RELIABLE_TAIL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct TabulatedDistribution {
    step: f64,
    first: i64,
    mass: Vec<f64>,
    atom: f64,
    mean: f64,
    variance: f64,
    suffix: Vec<f64>,
}

impl TabulatedDistribution {
    /// `mass[i]` sits at `(first + i) * step`; `atom` is the point mass at 0.
    pub fn from_lattice(step: f64, first: i64, mass: Vec<f64>, atom: f64) -> Self {
        let mut d = Self {
            step,
            first,
            mass,
            atom,
            mean: 0.0,
            variance: 0.0,
            suffix: Vec::new(),
        };
        d.refresh();
        d
    }

    fn refresh(&mut self) {
        let mut suffix = Vec::with_capacity(self.mass.len() + 1);
        suffix.push(0.0);
        let mut acc = 0.0;
        for &m in self.mass.iter().rev() {
            acc += m;
            suffix.push(acc);
        }
        suffix.reverse();
        self.suffix = suffix;
        let (mean, variance) = self.recompute_moments();
        self.mean = mean;
        self.variance = variance;
    }

    /// First two moments recomputed from the table (atom included).
    pub fn recompute_moments(&self) -> (f64, f64) {
        let total = self.total_mass();
        let mut mean = 0.0;
        for (i, &m) in self.mass.iter().enumerate() {
            mean += m * self.bin_center(i);
        }
        mean /= total;
        let mut var = self.atom * mean * mean;
        for (i, &m) in self.mass.iter().enumerate() {
            let d = self.bin_center(i) - mean;
            var += m * d * d;
        }
        (mean, var / total)
    }

    pub fn grid_step(&self) -> f64 {
        self.step
    }

    /// Value of bin 0.
    pub fn origin(&self) -> f64 {
        self.first as f64 * self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    #[inline]
    pub fn bin_center(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.step
    }

    pub fn total_mass(&self) -> f64 {
        self.atom + self.suffix.first().copied().unwrap_or(0.0)
    }

    /// Largest value carrying mass.
    pub fn support_max(&self) -> f64 {
        let cont = if self.mass.is_empty() {
            f64::NEG_INFINITY
        } else {
            self.bin_center(self.mass.len() - 1) + 0.5 * self.step
        };
        if self.atom > 0.0 {
            cont.max(0.0)
        } else {
            cont
        }
    }

    /// `P{X >= t}`: atom included when `0 >= t`, linear within the bin that
    /// contains `t`.
    pub fn tail_probability(&self, t: f64) -> f64 {
        let mut tail = if t <= 0.0 { self.atom } else { 0.0 };
        if self.first == 0 && !self.mass.is_empty() && t < 0.5 * self.step {
            // a lattice starting at zero carries a one-sided support: bin 0
            // only covers [0, h/2)
            let half = 0.5 * self.step;
            let frac = ((half - t) / half).min(1.0);
            tail += self.suffix.get(1).copied().unwrap_or(0.0) + self.mass[0] * frac;
        } else if !self.mass.is_empty() {
            let lower = self.bin_center(0) - 0.5 * self.step;
            let pos = (t - lower) / self.step;
            if pos <= 0.0 {
                tail += self.suffix[0];
            } else {
                let k = math::floor(pos);
                if (k as usize) < self.mass.len() {
                    let k = k as usize;
                    let frac = 1.0 - (pos - k as f64);
                    tail += self.suffix[k + 1] + self.mass[k] * frac;
                }
            }
        }
        tail.clamp(0.0, 1.0)
    }

    /// `log10` of the tail, extended smoothly by a Gaussian approximation
    /// once the tabulated value drops below the reliable range. Only meant
    /// for ranking detections whose tail underflows the table.
    pub fn log10_tail(&self, t: f64) -> f64 {
        let tail = self.tail_probability(t);
        if tail >= RELIABLE_TAIL {
            return math::log10(tail);
        }
        let z = (t - self.mean) / math::sqrt(self.variance);
        math::log10_normal_sf(z).min(math::log10(RELIABLE_TAIL))
    }

    /// Lattice-aligned Gaussian `N(mean, variance)` plus an atom at zero.
    pub fn gaussian(step: f64, mean: f64, variance: f64, atom: f64) -> Self {
        let sd = math::sqrt(variance);
        let lo = math::floor((mean - 12.0 * sd) / step) as i64;
        let hi = math::ceil((mean + 12.0 * sd) / step) as i64;
        let upper = |x: f64| math::normal_sf((x - mean) / sd);
        let lower = |x: f64| math::normal_sf((mean - x) / sd);
        let mut mass: Vec<f64> = (lo..=hi)
            .map(|k| {
                let c = k as f64 * step;
                let (a, b) = (c - 0.5 * step, c + 0.5 * step);
                if c >= mean {
                    upper(a) - upper(b)
                } else {
                    lower(b) - lower(a)
                }
            })
            .collect();
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m *= (1.0 - atom) / total);
        Self::from_lattice(step, lo, mass, atom)
    }

    /// Distribution of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &Self) -> Self {
        assert!(
            (self.step - other.step).abs() <= 1e-15 * self.step,
            "convolving distributions on different lattices"
        );
        let (fa, a) = self.embedded();
        let (fb, b) = other.embedded();
        let mut mass = fft::convolve(&a, &b);
        let first = fa + fb;
        let atom = self.atom * other.atom;
        if atom > 0.0 {
            let zero = (-first) as usize;
            mass[zero] -= atom;
        }
        for m in mass.iter_mut() {
            if *m < CONVOLUTION_FLOOR {
                *m = 0.0;
            }
        }
        let (first, mass) = trim(first, mass);
        Self::from_lattice(self.step, first, mass, atom)
    }

    /// Lattice array with the atom merged into the zero bin.
    fn embedded(&self) -> (i64, Vec<f64>) {
        if self.atom == 0.0 {
            return (self.first, self.mass.clone());
        }
        let last = self.first + self.mass.len() as i64 - 1;
        let lo = self.first.min(0);
        let hi = last.max(0);
        let mut out = alloc::vec![0.0; (hi - lo + 1) as usize];
        let offset = (self.first - lo) as usize;
        out[offset..offset + self.mass.len()].copy_from_slice(&self.mass);
        out[(-lo) as usize] += self.atom;
        (lo, out)
    }
}

fn trim(first: i64, mut mass: Vec<f64>) -> (i64, Vec<f64>) {
    let lead = mass.iter().take_while(|&&m| m == 0.0).count();
    if lead == mass.len() {
        return (first, Vec::new());
    }
    let trail = mass.iter().rev().take_while(|&&m| m == 0.0).count();
    mass.truncate(mass.len() - trail);
    mass.drain(..lead);
    (first + lead as i64, mass)
}

/// `times`-fold self-convolution: exact by repeated doubling up to
/// [`EXACT_CONVOLUTION_LIMIT`], Gaussian `N(times μ, times σ²)` above.
pub fn convolve_self(d: &TabulatedDistribution, times: usize) -> TabulatedDistribution {
    assert!(times >= 1, "convolution count must be at least 1");
    if times == 1 {
        return d.clone();
    }
    if times > EXACT_CONVOLUTION_LIMIT {
        let n = times as f64;
        let atom = math::pow(d.atom(), n);
        return TabulatedDistribution::gaussian(d.grid_step(), n * d.mean(), n * d.variance(), atom);
    }
    let mut result: Option<TabulatedDistribution> = None;
    let mut base = d.clone();
    let mut rest = times;
    loop {
        if rest & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.convolve(&base),
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        base = base.convolve(&base);
    }
    result.expect("times >= 1")
}

/// `P{X >= t}` for a tabulated distribution.
pub fn tail_probability(d: &TabulatedDistribution, t: f64) -> f64 {
    d.tail_probability(t)
}

/// One a-contrario test: observed statistic, number of convolved elementary
/// terms, and the number of tests it is corrected for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NfaQuery {
    pub statistic: f64,
    pub conv_count: usize,
    pub n_tests: f64,
}

impl NfaQuery {
    pub fn new(statistic: f64, conv_count: usize, n_tests: f64) -> Result<Self> {
        if conv_count == 0 {
            return Err(Error::InvalidParameter("conv_count must be at least 1".into()));
        }
        if !(n_tests >= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "n_tests must be at least 1, got {n_tests}"
            )));
        }
        Ok(Self {
            statistic,
            conv_count,
            n_tests,
        })
    }

    /// NFA of the statistic under the given null model.
    pub fn evaluate(&self, model: NullModel) -> f64 {
        nfa(self, model.tail(self.conv_count, self.statistic))
    }
}

/// Expected number of false alarms: `n_tests * tail`.
pub fn nfa(q: &NfaQuery, tail: f64) -> f64 {
    q.n_tests * tail
}

/// Mean and variance of the `δ'(r)` boundary term of the radial derivative
/// with `k` radial samples. The mean is negative because `δ'(r) = -τ/r²`.
pub fn derivative_gaussian_params(r: f64, k: usize, tau: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let k = k as f64;
    let r2 = r * r;
    let base = elementary();
    let mean = -(2.0 * tau / r2) * k * base.mean();
    let variance = 2.0 * k * base.variance() * tau * tau / (r2 * r2);
    Ok((mean, variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn dice() -> TabulatedDistribution {
        // uniform on {1..6} with step 1
        TabulatedDistribution::from_lattice(1.0, 1, vec![1.0 / 6.0; 6], 0.0)
    }

    #[test]
    fn tail_edges() {
        let d = dice();
        assert!((d.tail_probability(-100.0) - 1.0).abs() < 1e-15);
        assert_eq!(d.tail_probability(100.0), 0.0);
        // bin 6 spans [5.5, 6.5): half of it lies above 6
        assert!((d.tail_probability(6.0) - 1.0 / 12.0).abs() < 1e-15);
        assert!((d.mean() - 3.5).abs() < 1e-12);
        assert!((d.variance() - 35.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn two_dice() {
        let s = convolve_self(&dice(), 2);
        assert_eq!(s.origin(), 2.0);
        assert_eq!(s.len(), 11);
        assert!((s.masses()[5] - 6.0 / 36.0).abs() < 1e-15);
        assert!((s.mean() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn atom_is_kept_separate() {
        // X = 0 w.p. 1/2, 1 w.p. 1/2 (continuous bin at 1)
        let d = TabulatedDistribution::from_lattice(1.0, 1, vec![0.5], 0.5);
        let s = convolve_self(&d, 3);
        assert!((s.atom() - 0.125).abs() < 1e-15);
        assert_eq!(s.origin(), 1.0);
        let expect = [0.375, 0.375, 0.125];
        for (m, e) in s.masses().iter().zip(expect) {
            assert!((m - e).abs() < 1e-15);
        }
        assert_eq!(s.tail_probability(0.0), 1.0);
        assert!((s.tail_probability(0.5) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn nfa_product() {
        let q = NfaQuery::new(3.0, 4, 100.0).unwrap();
        assert!((nfa(&q, 0.001) - 0.1).abs() < 1e-15);
        assert_eq!(nfa(&q, 0.0), 0.0);
        let q = NfaQuery::new(3.0, 4, (640.0f64 * 480.0).sqrt()).unwrap();
        assert!((nfa(&q, 1e-3) - 0.554_256).abs() < 1e-6);
        assert!(NfaQuery::new(1.0, 0, 10.0).is_err());
        assert!(NfaQuery::new(1.0, 1, 0.5).is_err());
    }

    #[test]
    fn derivative_params() {
        let (m, v) = derivative_gaussian_params(4.0, 10, 1.0).unwrap();
        let (mu, var) = (elementary().mean(), elementary().variance());
        assert!((m - (-(2.0 / 16.0) * 10.0 * mu)).abs() < 1e-15);
        assert!((v - 2.0 * 10.0 * var / 256.0).abs() < 1e-15);
        let (m2, v2) = derivative_gaussian_params(8.0, 10, 1.0).unwrap();
        assert!((m2 * 4.0 - m).abs() < 1e-15);
        assert!((v2 * 16.0 - v).abs() < 1e-15);
        let (mf, vf) = derivative_gaussian_params(1e6, 10, 1.0).unwrap();
        assert!(mf.abs() < 1e-10 && vf < 1e-20);
        assert!(derivative_gaussian_params(0.0, 10, 1.0).is_err());
    }
}
