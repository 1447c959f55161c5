//! Transfer-matrix solver for planar layer stacks at oblique TE incidence.
//!
//! Amplitude transfer matrices on (forward, backward) field coefficients,
//! one interface matrix and one propagation matrix per layer, with complex
//! transverse wavevector `k_z = k₀·√(ε − n_in²·sin²θ)` on the `Im(k_z) ≥ 0`
//! branch. Transmission amplitudes are rescaled so `|t|²` is power
//! transmittance; reflections stay raw (same medium on both sides).

use crate::materials::{MaterialError, MaterialRegistry};
use crate::network::{NetworkError, NetworkMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TmmError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("incidence angle {0} degrees outside [0, 90)")]
    InvalidAngle(f64),
    #[error("layer {index}: thickness {thickness_nm} nm must be positive and finite")]
    InvalidThickness { index: usize, thickness_nm: f64 },
    #[error("layer {index}: crystallinity {kappa} outside [0, 1]")]
    InvalidKappa { index: usize, kappa: f64 },
    #[error("{role} medium `{id}` must be lossless (k = {k})")]
    LossyAmbient { role: &'static str, id: String, k: f64 },
    #[error("stack file: {0}")]
    Format(String),
}

/// Which side the port illuminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Top,
    Bottom,
}

/// One homogeneous film. Phase-change materials carry a crystallinity κ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub material: String,
    pub thickness_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// Planar stack, layers ordered top to bottom, between two lossless
/// half-spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerStack {
    #[serde(default = "default_medium")]
    pub incidence_medium: String,
    pub layers: Vec<Layer>,
    #[serde(default = "default_medium")]
    pub exit_medium: String,
}

fn default_medium() -> String {
    "vacuum".to_string()
}

impl LayerStack {
    pub fn validate(&self) -> Result<(), TmmError> {
        for (index, layer) in self.layers.iter().enumerate() {
            if !(layer.thickness_nm > 0.0) || !layer.thickness_nm.is_finite() {
                return Err(TmmError::InvalidThickness {
                    index,
                    thickness_nm: layer.thickness_nm,
                });
            }
            if let Some(kappa) = layer.kappa {
                if !(0.0..=1.0).contains(&kappa) {
                    return Err(TmmError::InvalidKappa { index, kappa });
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, TmmError> {
        let stack: LayerStack =
            serde_json::from_str(text).map_err(|e| TmmError::Format(e.to_string()))?;
        stack.validate()?;
        Ok(stack)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stack serializes")
    }

    /// Set κ on every phase-change layer (the crystallinity sweep knob).
    pub fn set_crystallinity(&mut self, registry: &MaterialRegistry, kappa: f64) {
        for layer in &mut self.layers {
            if registry.is_phase_change(&layer.material) {
                layer.kappa = Some(kappa);
            }
        }
    }
}

/// 2×2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy)]
struct Mat2([Complex64; 4]);

impl Mat2 {
    fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

/// Normalized transverse wavevector `q = k_z/k₀ = √(ε − η²)`, branch
/// `Im(q) ≥ 0`, with `Re(q) ≥ 0` on the real axis.
fn q_of(eps: Complex64, eta: f64) -> Complex64 {
    let q = (eps - eta * eta).sqrt();
    if q.im < 0.0 || (q.im == 0.0 && q.re < 0.0) {
        -q
    } else {
        q
    }
}

fn ambient_index(
    registry: &MaterialRegistry,
    id: &str,
    wavelength_nm: f64,
    role: &'static str,
) -> Result<f64, TmmError> {
    let idx = registry.index_of(id, wavelength_nm, None)?;
    if idx.k > 1e-12 {
        return Err(TmmError::LossyAmbient {
            role,
            id: id.to_string(),
            k: idx.k,
        });
    }
    Ok(idx.n)
}

/// Complex reflection and transmission of the stack for a TE plane wave.
///
/// `r` is the raw field amplitude in the incidence medium; `t` is rescaled by
/// `√(Re(q_out)/q_in)` so that `|t|²` is power transmittance. Total internal
/// reflection is a valid output with `t = 0`.
pub fn tmm_coefficients(
    stack: &LayerStack,
    registry: &MaterialRegistry,
    wavelength_nm: f64,
    angle_deg: f64,
    side: Side,
) -> Result<(Complex64, Complex64), TmmError> {
    stack.validate()?;
    if !(0.0..90.0).contains(&angle_deg) {
        return Err(TmmError::InvalidAngle(angle_deg));
    }

    let (in_id, out_id) = match side {
        Side::Top => (&stack.incidence_medium, &stack.exit_medium),
        Side::Bottom => (&stack.exit_medium, &stack.incidence_medium),
    };
    let n_in = ambient_index(registry, in_id, wavelength_nm, "incidence")?;
    let n_out = ambient_index(registry, out_id, wavelength_nm, "exit")?;

    let theta = angle_deg.to_radians();
    let eta = n_in * theta.sin();
    let k0 = 2.0 * std::f64::consts::PI / wavelength_nm;

    let mut q_seq: Vec<(Complex64, f64)> = Vec::with_capacity(stack.layers.len());
    let push = |q_seq: &mut Vec<(Complex64, f64)>, layer: &Layer| -> Result<(), TmmError> {
        let eps = registry.permittivity_of(&layer.material, wavelength_nm, layer.kappa)?;
        q_seq.push((q_of(eps.eps, eta), layer.thickness_nm));
        Ok(())
    };
    match side {
        Side::Top => {
            for layer in &stack.layers {
                push(&mut q_seq, layer)?;
            }
        }
        Side::Bottom => {
            for layer in stack.layers.iter().rev() {
                push(&mut q_seq, layer)?;
            }
        }
    }

    let q_in = Complex64::new(n_in * theta.cos(), 0.0);
    let q_out = q_of(Complex64::new(n_out * n_out, 0.0), eta);

    let interface = |qa: Complex64, qb: Complex64| -> Mat2 {
        // D_a⁻¹ D_b for TE continuity of E and dE/dz.
        let rp = (qa - qb) / (qa + qb);
        let inv_t = (qa + qb) / (2.0 * qa);
        Mat2([inv_t, inv_t * rp, inv_t * rp, inv_t])
    };
    let propagation = |q: Complex64, d_nm: f64| -> Mat2 {
        let phase = Complex64::i() * q * k0 * d_nm;
        Mat2([
            (-phase).exp(),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            phase.exp(),
        ])
    };

    let mut m = match q_seq.first() {
        Some(&(q1, _)) => interface(q_in, q1),
        None => interface(q_in, q_out),
    };
    for (i, &(q, d)) in q_seq.iter().enumerate() {
        m = m.mul(&propagation(q, d));
        let q_next = q_seq.get(i + 1).map(|&(q, _)| q).unwrap_or(q_out);
        m = m.mul(&interface(q, q_next));
    }

    let r = m.0[2] / m.0[0];
    let t_raw = Complex64::new(1.0, 0.0) / m.0[0];
    let flux_scale = (q_out.re.max(0.0) / q_in.re).sqrt();
    Ok((r, t_raw * flux_scale))
}

/// Assemble the 2×2 network matrix of the stack: `t1`/`t4` are the
/// flux-normalized transmissions (top→bottom, bottom→top) and `t3`/`t2` the
/// reflections for top-side and bottom-side input.
pub fn network_matrix_from_stack(
    stack: &LayerStack,
    registry: &MaterialRegistry,
    wavelength_nm: f64,
    angle_deg: f64,
) -> Result<NetworkMatrix, TmmError> {
    let (r_top, t_down) = tmm_coefficients(stack, registry, wavelength_nm, angle_deg, Side::Top)?;
    let (r_bottom, t_up) =
        tmm_coefficients(stack, registry, wavelength_nm, angle_deg, Side::Bottom)?;
    Ok(NetworkMatrix::new(
        [t_down, r_bottom, r_top, t_up],
        wavelength_nm,
        angle_deg,
        "tmm; ports: t1=T(top->bottom) t4=T(bottom->top) t3=R(top) t2=R(bottom); flux-normalized",
    )?)
}
