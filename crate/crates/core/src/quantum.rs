//! Two-photon detection statistics of a 2×2 network.
//!
//! For a two-photon input (one photon per port) and a network matrix T, the
//! coincidence probability is
//! `P = |t2|²|t3|² + |t1|²|t4|² + 2·Re{t1·t4·t2*·t3*·I_overlap}`,
//! where the first two terms form the distinguishable-photon baseline and
//! `I_overlap` is the exchange overlap of the two-photon spectral amplitude.
//! (Anti-)coalescence is the fractional dip (peak) of the zero-delay
//! coincidences relative to the baseline. Temporal traces follow from the
//! normalized envelope `g(τ)`: Gaussian `g` gives the closed form with
//! interference factor `e^{-(Δω·δτ)²}`; a sampled real symmetric `g` is
//! handled by trapezoidal quadrature of its autocorrelation.
//!
//! Detector efficiency and `|G(0)|²` prefactors are normalized to 1; every
//! output is a ratio or baseline-normalized.

use crate::network::NetworkMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("baseline {0} too small: coincidence ratios are undefined")]
    VanishingBaseline(f64),
    #[error("joint probability {0} is negative beyond tolerance: upstream matrix is not passive")]
    NegativeProbability(f64),
    #[error("total phase undefined: matrix entry {0} is zero")]
    ZeroEntry(&'static str),
    #[error("overlap integral |I| = {0} exceeds 1")]
    OverlapOutOfRange(f64),
    #[error("spectral amplitude not normalized: double integral of |psi|^2 = {0}")]
    NotNormalized(f64),
    #[error("sampled envelope invalid: {0}")]
    BadEnvelope(String),
    #[error("bandwidth {0} must be positive")]
    BadBandwidth(f64),
}

const BASELINE_FLOOR: f64 = 1e-15;

/// Two-photon spectral weight ψ(ω_a, ω_b).
#[derive(Debug, Clone)]
pub enum SpectralAmplitude {
    /// Degenerate SPDC-like Gaussian: exchange symmetric, implied envelope
    /// `g(τ) = exp(−(Δω·τ)²/2)`.
    Gaussian { pump_frequency: f64, bandwidth: f64 },
    /// ψ sampled on a square frequency grid (same axis for both photons),
    /// normalized so that ∬|ψ|² = 1.
    Sampled {
        omega: Vec<f64>,
        /// Row-major ψ[i·n + j] = ψ(ω_i, ω_j).
        psi: Vec<Complex64>,
    },
}

/// Trapezoid weights for an arbitrary monotone grid.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

impl SpectralAmplitude {
    pub fn sampled(omega: Vec<f64>, psi: Vec<Complex64>) -> Result<Self, QuantumError> {
        let n = omega.len();
        if n < 2 || psi.len() != n * n {
            return Err(QuantumError::BadEnvelope(format!(
                "grid {n} x {n} does not match {} samples",
                psi.len()
            )));
        }
        let s = Self::Sampled { omega, psi };
        let norm = s.norm_squared();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// ∬|ψ|² by 2D trapezoid (1 for the Gaussian kind by construction).
    pub fn norm_squared(&self) -> f64 {
        match self {
            Self::Gaussian { .. } => 1.0,
            Self::Sampled { omega, psi } => {
                let w = trapezoid_weights(omega);
                let n = omega.len();
                let mut total = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        total += w[i] * w[j] * psi[i * n + j].norm_sqr();
                    }
                }
                total
            }
        }
    }
}

/// Exchange overlap `I = ∬ ψ(ω,ω′)·ψ*(ω′,ω) dω dω′`.
///
/// Returned as a complex number; the joint probability consumes it inside
/// `Re{t1·t4·t2*·t3*·I}`. For exchange-symmetric sources it is real.
pub fn overlap_integral(psi: &SpectralAmplitude) -> Result<Complex64, QuantumError> {
    match psi {
        SpectralAmplitude::Gaussian { .. } => Ok(Complex64::new(1.0, 0.0)),
        SpectralAmplitude::Sampled { omega, psi } => {
            let norm = SpectralAmplitude::Sampled {
                omega: omega.clone(),
                psi: psi.clone(),
            }
            .norm_squared();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(QuantumError::NotNormalized(norm));
            }
            let w = trapezoid_weights(omega);
            let n = omega.len();
            let mut total = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    total += w[i] * w[j] * psi[i * n + j] * psi[j * n + i].conj();
                }
            }
            Ok(total)
        }
    }
}

/// Distinguishable-photon coincidence level `|t2|²|t3|² + |t1|²|t4|²`.
pub fn baseline(t: &NetworkMatrix) -> f64 {
    t.t2.norm_sqr() * t.t3.norm_sqr() + t.t1.norm_sqr() * t.t4.norm_sqr()
}

/// The interference product `t1·t4·t2*·t3*`.
fn interference_product(t: &NetworkMatrix) -> Complex64 {
    t.t1 * t.t4 * t.t2.conj() * t.t3.conj()
}

/// Joint detection probability `baseline + 2·Re{t1·t4·t2*·t3*·I}`.
pub fn joint_probability(t: &NetworkMatrix, i_overlap: Complex64) -> Result<f64, QuantumError> {
    if i_overlap.norm() > 1.0 + 1e-12 {
        return Err(QuantumError::OverlapOutOfRange(i_overlap.norm()));
    }
    let p = baseline(t) + 2.0 * (interference_product(t) * i_overlap).re;
    if p < -1e-12 {
        return Err(QuantumError::NegativeProbability(p));
    }
    Ok(p.max(0.0))
}

/// (Anti-)coalescence `(baseline − P|_{I=1}) / baseline`
/// `= −2·Re{t1·t4·t2*·t3*} / baseline` ∈ [−1, 1].
///
/// Positive values are a coincidence dip (bunching), negative a peak.
pub fn coalescence(t: &NetworkMatrix) -> Result<f64, QuantumError> {
    let b = baseline(t);
    if b <= BASELINE_FLOOR {
        return Err(QuantumError::VanishingBaseline(b));
    }
    Ok(-2.0 * interference_product(t).re / b)
}

/// Total network phase `∠t2 + ∠t3 − ∠t1 − ∠t4`, wrapped to (−π, π].
///
/// Gauge-invariant; equals π for every lossless network.
pub fn total_phase(t: &NetworkMatrix) -> Result<f64, QuantumError> {
    for (entry, name) in [(t.t1, "t1"), (t.t2, "t2"), (t.t3, "t3"), (t.t4, "t4")] {
        if entry.norm() == 0.0 {
            return Err(QuantumError::ZeroEntry(name));
        }
    }
    let phase = t.t2.arg() + t.t3.arg() - t.t1.arg() - t.t4.arg();
    Ok(wrap_to_pi(phase))
}

fn wrap_to_pi(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let w = x.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

/// Baseline-normalized HOM coincidence trace vs relative input delay.
#[derive(Debug, Clone)]
pub struct HomTrace {
    pub delays_s: Vec<f64>,
    pub counts: Vec<f64>,
}

/// Gaussian-envelope HOM trace:
/// `counts(δτ) = 1 + (2·Re{t1·t4·t2*·t3*}/baseline)·e^{−(Δω·δτ)²}`.
///
/// Wings tend to 1; the zero-delay value is `1 − coalescence`.
pub fn hom_trace_gaussian(
    t: &NetworkMatrix,
    bandwidth: f64,
    delays_s: &[f64],
) -> Result<HomTrace, QuantumError> {
    if !(bandwidth > 0.0) {
        return Err(QuantumError::BadBandwidth(bandwidth));
    }
    let b = baseline(t);
    if b <= BASELINE_FLOOR {
        return Err(QuantumError::VanishingBaseline(b));
    }
    let ratio = 2.0 * interference_product(t).re / b;
    let counts = delays_s
        .iter()
        .map(|&dt| {
            let x = bandwidth * dt;
            1.0 + ratio * (-x * x).exp()
        })
        .collect();
    Ok(HomTrace {
        delays_s: delays_s.to_vec(),
        counts,
    })
}

/// Real symmetric envelope `g(τ)` sampled on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct SampledEnvelope {
    tau: Vec<f64>,
    g: Vec<f64>,
}

impl SampledEnvelope {
    /// Validates symmetry `g(−τ) = g(τ)` (grid and values) and square
    /// integrability.
    pub fn new(tau: Vec<f64>, g: Vec<f64>) -> Result<Self, QuantumError> {
        let n = tau.len();
        if n < 3 || g.len() != n {
            return Err(QuantumError::BadEnvelope(format!(
                "need >= 3 samples with matching grids, got {} and {}",
                n,
                g.len()
            )));
        }
        for w in tau.windows(2) {
            if w[1] <= w[0] {
                return Err(QuantumError::BadEnvelope(
                    "grid must be strictly increasing".into(),
                ));
            }
        }
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..n {
            let j = n - 1 - i;
            if (tau[i] + tau[j]).abs() > 1e-9 * tau[n - 1].abs().max(1.0) {
                return Err(QuantumError::BadEnvelope(
                    "grid must be symmetric about zero".into(),
                ));
            }
            if (g[i] - g[j]).abs() > 1e-9 * scale {
                return Err(QuantumError::BadEnvelope(format!(
                    "g not symmetric: g({}) = {} vs g({}) = {}",
                    tau[i], g[i], tau[j], g[j]
                )));
            }
        }
        let sq: f64 = {
            let w = trapezoid_weights(&tau);
            g.iter().zip(&w).map(|(v, wi)| v * v * wi).sum()
        };
        if !(sq > 0.0) || !sq.is_finite() {
            return Err(QuantumError::BadEnvelope(format!(
                "g must be square-integrable with positive norm, got {sq}"
            )));
        }
        Ok(Self { tau, g })
    }

    /// Uniformly sampled Gaussian `g(τ) = exp(−(Δω·τ)²/2)`.
    pub fn gaussian(bandwidth: f64, half_width_sigmas: f64, points: usize) -> Self {
        let half = half_width_sigmas / bandwidth;
        let n = points.max(3) | 1; // odd, so τ = 0 is a node
        let tau: Vec<f64> = (0..n)
            .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
            .collect();
        let g = tau
            .iter()
            .map(|&t| (-0.5 * (bandwidth * t).powi(2)).exp())
            .collect();
        Self::new(tau, g).expect("gaussian envelope is valid")
    }

    pub fn grid(&self) -> &[f64] {
        &self.tau
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    /// Linear interpolation, zero outside the sampled support.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.tau.len();
        if t < self.tau[0] || t > self.tau[n - 1] {
            return 0.0;
        }
        let pos = self.tau.partition_point(|&x| x <= t);
        if pos == 0 {
            return self.g[0];
        }
        if pos >= n {
            return self.g[n - 1];
        }
        let (t0, t1) = (self.tau[pos - 1], self.tau[pos]);
        let f = (t - t0) / (t1 - t0);
        self.g[pos - 1] + f * (self.g[pos] - self.g[pos - 1])
    }

    /// `∫ g(τ)·g(τ − shift) dτ / ∫ g²(τ) dτ` by trapezoid on the grid.
    pub fn autocorrelation_ratio(&self, shift: f64) -> f64 {
        let w = trapezoid_weights(&self.tau);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.tau.len() {
            num += w[i] * self.g[i] * self.eval(self.tau[i] - shift);
            den += w[i] * self.g[i] * self.g[i];
        }
        num / den
    }
}

/// Coincidence count (proportional) for a general real symmetric envelope:
/// `baseline + 2·Re{t1·t4·t2*·t3*}·(∫g(τ)g(τ−2δτ)dτ / ∫g²dτ)`.
pub fn coincidence_general(
    t: &NetworkMatrix,
    g: &SampledEnvelope,
    delta_tau: f64,
) -> Result<f64, QuantumError> {
    let ratio = g.autocorrelation_ratio(2.0 * delta_tau);
    Ok(baseline(t) + 2.0 * interference_product(t).re * ratio)
}

/// Time-resolved joint probability at detection-time offset τ (normalized by
/// `|G(0)|²`):
/// `|t2|²|t3|²·g²(2δτ−τ) + |t1|²|t4|²·g²(τ) + 2·Re{t1·t4·t2*·t3*}·g(τ)·g(2δτ−τ)`.
pub fn joint_probability_time(
    t: &NetworkMatrix,
    g: &SampledEnvelope,
    tau: f64,
    delta_tau: f64,
) -> Result<f64, QuantumError> {
    let ga = g.eval(tau);
    let gb = g.eval(2.0 * delta_tau - tau);
    Ok(t.t2.norm_sqr() * t.t3.norm_sqr() * gb * gb
        + t.t1.norm_sqr() * t.t4.norm_sqr() * ga * ga
        + 2.0 * interference_product(t).re * ga * gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matrix(entries: [Complex64; 4]) -> NetworkMatrix {
        NetworkMatrix::new(entries, 810.0, 45.0, "test").unwrap()
    }

    fn identity() -> NetworkMatrix {
        matrix([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    fn splitter_50_50() -> NetworkMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        matrix([c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)])
    }

    /// Haar-style random 2×2 unitary: e^{iφ}·SU(2).
    fn random_unitary(rng: &mut impl Rng) -> NetworkMatrix {
        let theta: f64 = rng.gen_range(0.02..std::f64::consts::FRAC_PI_2 - 0.02);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let b = rng.gen_range(0.0..std::f64::consts::TAU);
        let g = Complex64::from_polar(1.0, phi);
        let ca = Complex64::from_polar(theta.cos(), a);
        let cb = Complex64::from_polar(theta.sin(), b);
        matrix([g * ca, g * cb, -g * cb.conj(), g * ca.conj()])
    }

    /// Random strictly passive matrix (entries scaled under σ_max ≤ 1).
    fn random_passive(rng: &mut impl Rng) -> NetworkMatrix {
        loop {
            let entries: Vec<Complex64> = (0..4)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let trial = NetworkMatrix {
                t1: entries[0],
                t2: entries[1],
                t3: entries[2],
                t4: entries[3],
                wavelength_nm: 810.0,
                angle_deg: 45.0,
                metadata: "test".into(),
            };
            let (sigma_max, _) = trial.singular_values();
            if sigma_max < 1e-6 {
                continue;
            }
            let scale = rng.gen_range(0.05..0.999) / sigma_max;
            if entries.iter().any(|e| (e * scale).norm() < 1e-6) {
                continue;
            }
            return matrix([
                entries[0] * scale,
                entries[1] * scale,
                entries[2] * scale,
                entries[3] * scale,
            ]);
        }
    }

    #[test]
    fn baseline_examples() {
        assert!((baseline(&identity()) - 1.0).abs() < 1e-15);
        assert!((baseline(&splitter_50_50()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coalescence_examples() {
        assert!((coalescence(&splitter_50_50()).unwrap() - 1.0).abs() < 1e-12);
        assert!(coalescence(&identity()).unwrap().abs() < 1e-15);
        // vanishing baseline: zero matrix is passive but has no ratio
        let z = matrix([c(0.0, 0.0); 4]);
        assert!(matches!(
            coalescence(&z),
            Err(QuantumError::VanishingBaseline(_))
        ));
    }

    #[test]
    fn joint_probability_examples() {
        let one = c(1.0, 0.0);
        assert!(joint_probability(&splitter_50_50(), one).unwrap().abs() < 1e-12);
        let m = splitter_50_50();
        assert!((joint_probability(&m, c(0.0, 0.0)).unwrap() - baseline(&m)).abs() < 1e-15);
        assert!((joint_probability(&identity(), one).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn joint_probability_affine_in_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_passive(&mut rng);
            let b = baseline(&m);
            let p1 = joint_probability(&m, c(1.0, 0.0)).unwrap();
            for i in 0..=10 {
                let lam = i as f64 / 10.0;
                let p = joint_probability(&m, c(lam, 0.0)).unwrap();
                let expect = (b + lam * (p1 - b)).max(0.0);
                assert!((p - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn total_phase_examples() {
        assert!((total_phase(&splitter_50_50()).unwrap() - std::f64::consts::PI).abs() < 1e-12);
        assert!(matches!(
            total_phase(&identity()),
            Err(QuantumError::ZeroEntry(_))
        ));
        let rotated = splitter_50_50().gauged(0.3, -1.2, 2.5, 0.9);
        assert!((total_phase(&rotated).unwrap() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn lossless_networks_only_interfere_destructively() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let u = random_unitary(&mut rng);
            let phase = total_phase(&u).unwrap();
            let d = (phase - std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
            let dist = d.min(std::f64::consts::TAU - d);
            assert!(dist < 1e-7);
            assert!(coalescence(&u).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn coalescence_gauge_invariance_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let m = random_passive(&mut rng);
            let value = coalescence(&m).unwrap();
            assert!(value.abs() <= 1.0 + 1e-12);
            let g = m.gauged(
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            assert!((coalescence(&g).unwrap() - value).abs() < 1e-12);
        }
    }

    #[test]
    fn hom_trace_normalization() {
        let m = splitter_50_50();
        let bw = 2.0e12;
        let delays: Vec<f64> = (-300..=300).map(|i| i as f64 * 1e-14).collect();
        let trace = hom_trace_gaussian(&m, bw, &delays).unwrap();
        // zero delay drops to 1 - coalescence = 0
        let mid = trace.counts[300];
        assert!(mid.abs() < 1e-12);
        // wings tend to 1
        assert!((trace.counts[0] - 1.0).abs() < 1e-6);
        // dip depth equals coalescence for random passive matrices
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let m = random_passive(&mut rng);
            let tr = hom_trace_gaussian(&m, bw, &[0.0, 10.0 / bw]).unwrap();
            let value = coalescence(&m).unwrap();
            assert!((tr.counts[0] - (1.0 - value)).abs() < 1e-12);
            assert!((tr.counts[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_symmetric_and_disjoint() {
        // exchange-symmetric sampled psi -> overlap 1
        let n = 41;
        let omega: Vec<f64> = (0..n).map(|i| 0.9 + 0.2 * i as f64 / (n - 1) as f64).collect();
        let sigma = 0.03;
        let mut psi = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let da = omega[i] - 1.0;
                let db = omega[j] - 1.0;
                psi[i * n + j] = c((-((da * da + db * db)) / (2.0 * sigma * sigma)).exp(), 0.0);
            }
        }
        // normalize on the grid
        let raw = SpectralAmplitude::Sampled {
            omega: omega.clone(),
            psi: psi.clone(),
        };
        let norm = raw.norm_squared().sqrt();
        for v in &mut psi {
            *v /= norm;
        }
        let s = SpectralAmplitude::sampled(omega.clone(), psi.clone()).unwrap();
        let i_sym = overlap_integral(&s).unwrap();
        assert!((i_sym - c(1.0, 0.0)).norm() < 1e-9);

        // disjoint bands -> overlap 0
        let mut psi2 = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                if omega[i] < 0.98 && omega[j] > 1.02 {
                    psi2[i * n + j] = c(1.0, 0.0);
                }
            }
        }
        let raw = SpectralAmplitude::Sampled {
            omega: omega.clone(),
            psi: psi2.clone(),
        };
        let norm = raw.norm_squared().sqrt();
        for v in &mut psi2 {
            *v /= norm;
        }
        let s2 = SpectralAmplitude::sampled(omega, psi2).unwrap();
        assert!(overlap_integral(&s2).unwrap().norm() < 1e-12);
    }

    #[test]
    fn overlap_quadrature_matches_monte_carlo() {
        // anticorrelated two-photon Gaussian (energy conservation narrows
        // the sum frequency): psi ~ exp(-(wa+wb-2)^2/4sp^2 - (wa-wb)^2/4sm^2)
        let n = 101;
        let omega: Vec<f64> = (0..n).map(|i| 0.7 + 0.6 * i as f64 / (n - 1) as f64).collect();
        let (sigma_p, sigma_m) = (0.015, 0.08);
        let mut psi = vec![c(0.0, 0.0); n * n];
        let amp = |wa: f64, wb: f64| {
            let sp = (wa + wb - 2.0) / (2.0 * sigma_p);
            let sm = (wa - wb) / (2.0 * sigma_m);
            (-(sp * sp) - sm * sm).exp()
        };
        for i in 0..n {
            for j in 0..n {
                psi[i * n + j] = c(amp(omega[i], omega[j]), 0.0);
            }
        }
        let raw = SpectralAmplitude::Sampled {
            omega: omega.clone(),
            psi: psi.clone(),
        };
        let norm = raw.norm_squared().sqrt();
        for v in &mut psi {
            *v /= norm;
        }
        let s = SpectralAmplitude::sampled(omega.clone(), psi).unwrap();
        let quad = overlap_integral(&s).unwrap();

        // Monte-Carlo oracle over the same domain
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let (lo, hi) = (omega[0], omega[n - 1]);
        let samples = 2_000_000;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let wa = rng.gen_range(lo..hi);
            let wb = rng.gen_range(lo..hi);
            let f = amp(wa, wb);
            num += f * amp(wb, wa);
            den += f * f;
        }
        let mc = num / den;
        assert!(
            (quad.re - mc).abs() < 1e-3,
            "quadrature {} vs MC {}",
            quad.re,
            mc
        );
        assert!(quad.im.abs() < 1e-12);
    }

    #[test]
    fn coincidence_general_matches_gaussian_closed_form() {
        let bw = 3.0e12;
        let g = SampledEnvelope::gaussian(bw, 8.0, 4001);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let m = random_passive(&mut rng);
            for i in -5..=5 {
                let dt = i as f64 * 0.4 / bw;
                let general = coincidence_general(&m, &g, dt).unwrap();
                let closed = baseline(&m)
                    + 2.0 * (m.t1 * m.t4 * m.t2.conj() * m.t3.conj()).re
                        * (-(bw * dt).powi(2)).exp();
                assert!(
                    (general - closed).abs() < 1e-6,
                    "general {general} closed {closed}"
                );
            }
        }
    }

    #[test]
    fn coincidence_zero_delay_is_exact() {
        let g = SampledEnvelope::gaussian(1.0e12, 8.0, 801);
        let m = splitter_50_50();
        let got = coincidence_general(&m, &g, 0.0).unwrap();
        let expect = baseline(&m) + 2.0 * (m.t1 * m.t4 * m.t2.conj() * m.t3.conj()).re;
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn rectangular_envelope_has_triangular_autocorrelation() {
        // rectangle of full width 2a: autocorrelation ratio at shift s is
        // 1 - |s|/(2a) for |s| <= 2a
        let a = 1.0e-12;
        let n = 20001;
        let tau: Vec<f64> = (0..n)
            .map(|i| -2.0 * a + 4.0 * a * i as f64 / (n - 1) as f64)
            .collect();
        let g: Vec<f64> = tau
            .iter()
            .map(|&t| if t.abs() <= a { 1.0 } else { 0.0 })
            .collect();
        let env = SampledEnvelope::new(tau, g).unwrap();
        // delta_tau = a/2 -> shift = a -> ratio 0.5
        let m = splitter_50_50();
        let got = coincidence_general(&m, &env, 0.5 * a).unwrap();
        let expect = baseline(&m) + 2.0 * (m.t1 * m.t4 * m.t2.conj() * m.t3.conj()).re * 0.5;
        assert!((got - expect).abs() < 1e-3, "got {got} expect {expect}");
    }

    #[test]
    fn time_resolved_probability_integrates_to_coincidence() {
        let bw = 2.0e12;
        let g = SampledEnvelope::gaussian(bw, 8.0, 4001);
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..10 {
            let m = random_passive(&mut rng);
            let dt = rng.gen_range(-1.0..1.0) / bw;
            // trapezoid in tau over a window covering both envelopes
            let n = 6001;
            let half = 10.0 / bw;
            let step = 2.0 * half / (n - 1) as f64;
            let mut integral = 0.0;
            let mut g_sq = 0.0;
            for i in 0..n {
                let tau = -half + i as f64 * step;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                integral += w * joint_probability_time(&m, &g, tau, dt).unwrap();
                let gv = g.eval(tau);
                g_sq += w * gv * gv;
            }
            integral *= step;
            g_sq *= step;
            let expect = coincidence_general(&m, &g, dt).unwrap();
            assert!(
                (integral / g_sq - expect).abs() < 1e-5,
                "integral {} vs {}",
                integral / g_sq,
                expect
            );
        }
    }

    #[test]
    fn time_resolved_special_cases() {
        let g = SampledEnvelope::gaussian(2.0e12, 8.0, 2001);
        // 50:50 at zero delay cancels for all tau
        let m = splitter_50_50();
        for i in -10..=10 {
            let tau = i as f64 * 1e-13;
            assert!(joint_probability_time(&m, &g, tau, 0.0).unwrap().abs() < 1e-12);
        }
        // no cross path: reduces to |t1 t4 g(tau)|^2
        let d = matrix([c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.8, 0.0)]);
        let tau = 3.3e-13;
        let gv = g.eval(tau);
        let expect = 0.81 * 0.64 * gv * gv;
        assert!((joint_probability_time(&d, &g, tau, 1.0e-13).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn trace_is_even_in_delay_for_symmetric_envelope() {
        let g = SampledEnvelope::gaussian(2.5e12, 8.0, 3001);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..10 {
            let m = random_passive(&mut rng);
            for i in 1..=6 {
                let dt = i as f64 * 1.0e-13;
                let plus = coincidence_general(&m, &g, dt).unwrap();
                let minus = coincidence_general(&m, &g, -dt).unwrap();
                assert!((plus - minus).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn envelope_validation() {
        assert!(SampledEnvelope::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(SampledEnvelope::new(vec![-1.0, 0.0, 1.0], vec![1.0, 2.0, 1.5]).is_err());
        assert!(SampledEnvelope::new(vec![-1.0, 0.0, 2.0], vec![1.0, 2.0, 1.0]).is_err());
        assert!(SampledEnvelope::new(vec![-1.0, 0.0, 1.0], vec![0.5, 2.0, 0.5]).is_ok());
    }

    #[test]
    fn sampled_amplitude_requires_normalization() {
        let omega = vec![0.9, 1.0, 1.1];
        let psi = vec![c(1.0, 0.0); 9];
        assert!(matches!(
            SpectralAmplitude::sampled(omega, psi),
            Err(QuantumError::NotNormalized(_))
        ));
    }
}
