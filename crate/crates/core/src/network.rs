//! Flux-normalized complex 2×2 network matrix.
//!
//! Port convention: diagonal entries `t1`, `t4` are the two transmissions
//! (top→bottom and bottom→top) and off-diagonals `t2`, `t3` are the
//! reflections for bottom-side and top-side input. Passivity requires the
//! largest singular value to stay ≤ 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PASSIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network matrix is not passive: largest singular value {sigma_max} exceeds 1 + {tol}")]
    NotPassive { sigma_max: f64, tol: f64 },
    #[error("network matrix has non-finite entries")]
    NonFinite,
}

/// Flux-normalized 2×2 transmission matrix at one wavelength and port angle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkMatrix {
    pub t1: Complex64,
    pub t2: Complex64,
    pub t3: Complex64,
    pub t4: Complex64,
    pub wavelength_nm: f64,
    pub angle_deg: f64,
    /// Provenance: solver, geometry, and the port convention in use.
    pub metadata: String,
}

impl NetworkMatrix {
    /// Build and validate (finiteness + passivity within [`PASSIVITY_TOL`]).
    pub fn new(
        entries: [Complex64; 4],
        wavelength_nm: f64,
        angle_deg: f64,
        metadata: impl Into<String>,
    ) -> Result<Self, NetworkError> {
        let m = Self {
            t1: entries[0],
            t2: entries[1],
            t3: entries[2],
            t4: entries[3],
            wavelength_nm,
            angle_deg,
            metadata: metadata.into(),
        };
        if !m.entries().iter().all(|t| t.re.is_finite() && t.im.is_finite()) {
            return Err(NetworkError::NonFinite);
        }
        let (sigma_max, _) = m.singular_values();
        if sigma_max > 1.0 + PASSIVITY_TOL {
            return Err(NetworkError::NotPassive {
                sigma_max,
                tol: PASSIVITY_TOL,
            });
        }
        Ok(m)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }

    /// Closed-form singular values `(σ_max, σ_min)` of [[t1,t2],[t3,t4]].
    pub fn singular_values(&self) -> (f64, f64) {
        // Eigenvalues of the 2×2 Hermitian Gram matrix T†T.
        let a = self.t1.norm_sqr() + self.t3.norm_sqr();
        let d = self.t2.norm_sqr() + self.t4.norm_sqr();
        let b = self.t1.conj() * self.t2 + self.t3.conj() * self.t4;
        let mean = 0.5 * (a + d);
        let disc = (0.5 * (a - d)).hypot(b.norm());
        let hi = (mean + disc).max(0.0);
        let lo = (mean - disc).max(0.0);
        (hi.sqrt(), lo.sqrt())
    }

    pub fn is_lossless(&self, tol: f64) -> bool {
        let (hi, lo) = self.singular_values();
        (hi - 1.0).abs() <= tol && (lo - 1.0).abs() <= tol
    }

    /// Port-gauge transformation `diag(e^{iα}, e^{iβ}) · T · diag(e^{iγ}, e^{iδ})`.
    ///
    /// Physical observables built from `t1·t4·t2*·t3*` are invariant under it.
    pub fn gauged(&self, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        let ea = Complex64::from_polar(1.0, alpha);
        let eb = Complex64::from_polar(1.0, beta);
        let eg = Complex64::from_polar(1.0, gamma);
        let ed = Complex64::from_polar(1.0, delta);
        Self {
            t1: ea * self.t1 * eg,
            t2: ea * self.t2 * ed,
            t3: eb * self.t3 * eg,
            t4: eb * self.t4 * ed,
            wavelength_nm: self.wavelength_nm,
            angle_deg: self.angle_deg,
            metadata: self.metadata.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_is_passive_and_unitary() {
        let m = NetworkMatrix::new(
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            810.0,
            45.0,
            "test",
        )
        .unwrap();
        let (hi, lo) = m.singular_values();
        assert!((hi - 1.0).abs() < 1e-15 && (lo - 1.0).abs() < 1e-15);
        assert!(m.is_lossless(1e-12));
    }

    #[test]
    fn rejects_gain() {
        let err = NetworkMatrix::new(
            [c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            810.0,
            45.0,
            "test",
        );
        assert!(matches!(err, Err(NetworkError::NotPassive { .. })));
    }

    #[test]
    fn singular_values_match_hand_case() {
        // diag(0.8, 0.3): singular values are just the moduli.
        let m = NetworkMatrix::new(
            [c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)],
            810.0,
            45.0,
            "test",
        )
        .unwrap();
        let (hi, lo) = m.singular_values();
        assert!((hi - 0.8).abs() < 1e-15);
        assert!((lo - 0.3).abs() < 1e-15);
    }

    #[test]
    fn beam_splitter_is_lossless() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = NetworkMatrix::new(
            [c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)],
            810.0,
            45.0,
            "test",
        )
        .unwrap();
        assert!(m.is_lossless(1e-15));
    }
}
