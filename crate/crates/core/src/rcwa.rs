//! Fourier modal method for 1D lamellar gratings at oblique TE incidence.
//!
//! Fields expand on Floquet harmonics `k_x,m = k₀·n_in·sinθ + 2πm/Λ`. Each
//! layer contributes a modal basis: analytic plane waves for homogeneous
//! layers, eigenvectors of `E − K̂x²` for lamellar ones (direct Laurent
//! factorization of ε(x), which is the correct rule for TE). Layers are
//! joined by scattering-matrix recursion (Redheffer star products), so lossy
//! and evanescent modes never exponentiate.

use crate::materials::{MaterialError, MaterialRegistry};
use crate::network::{NetworkError, NetworkMatrix};
use crate::tmm::Side;
use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RcwaError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("incidence angle {0} degrees outside [0, 90)")]
    InvalidAngle(f64),
    #[error("n_harmonics must be odd and >= 3, got {0}")]
    BadHarmonics(usize),
    #[error("layer {index}: {message}")]
    InvalidLayer { index: usize, message: String },
    #[error("period {0} nm must be positive")]
    BadPeriod(f64),
    #[error("{role} medium `{id}` must be lossless (k = {k})")]
    LossyAmbient { role: &'static str, id: String, k: f64 },
    #[error(
        "single-mode violation: period {period_nm} nm exceeds the zeroth-order cutoff {cutoff_nm} nm at {wavelength_nm} nm, {angle_deg} degrees"
    )]
    SingleModeViolation {
        period_nm: f64,
        cutoff_nm: f64,
        wavelength_nm: f64,
        angle_deg: f64,
    },
    #[error("eigen-decomposition failed in layer {index}")]
    Eigen { index: usize },
    #[error("grating file: {0}")]
    Format(String),
}

/// One grating layer: laterally uniform, or a two-material lamellar profile
/// with `material_a` occupying a centered strip of width `filling_ratio·Λ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GratingLayer {
    Lamellar {
        material_a: String,
        material_b: String,
        filling_ratio: f64,
        thickness_nm: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa_a: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa_b: Option<f64>,
    },
    Homogeneous {
        material: String,
        thickness_nm: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
    },
}

impl GratingLayer {
    pub fn thickness_nm(&self) -> f64 {
        match self {
            Self::Homogeneous { thickness_nm, .. } | Self::Lamellar { thickness_nm, .. } => {
                *thickness_nm
            }
        }
    }
}

/// 1D-periodic grating between two lossless half-spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grating1D {
    pub period_nm: f64,
    #[serde(default = "default_medium")]
    pub incidence_medium: String,
    pub layers: Vec<GratingLayer>,
    #[serde(default = "default_medium")]
    pub exit_medium: String,
}

fn default_medium() -> String {
    "vacuum".to_string()
}

impl Grating1D {
    pub fn validate(&self) -> Result<(), RcwaError> {
        if !(self.period_nm > 0.0) || !self.period_nm.is_finite() {
            return Err(RcwaError::BadPeriod(self.period_nm));
        }
        for (index, layer) in self.layers.iter().enumerate() {
            let d = layer.thickness_nm();
            if !(d > 0.0) || !d.is_finite() {
                return Err(RcwaError::InvalidLayer {
                    index,
                    message: format!("thickness {d} nm must be positive"),
                });
            }
            if let GratingLayer::Lamellar { filling_ratio, .. } = layer {
                if !(0.0..=1.0).contains(filling_ratio) {
                    return Err(RcwaError::InvalidLayer {
                        index,
                        message: format!("filling ratio {filling_ratio} outside [0, 1]"),
                    });
                }
            }
            let kappas: &[Option<f64>] = match layer {
                GratingLayer::Homogeneous { kappa, .. } => &[*kappa],
                GratingLayer::Lamellar { kappa_a, kappa_b, .. } => &[*kappa_a, *kappa_b],
            };
            for kappa in kappas.iter().flatten() {
                if !(0.0..=1.0).contains(kappa) {
                    return Err(RcwaError::InvalidLayer {
                        index,
                        message: format!("crystallinity {kappa} outside [0, 1]"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, RcwaError> {
        let grating: Grating1D =
            serde_json::from_str(text).map_err(|e| RcwaError::Format(e.to_string()))?;
        grating.validate()?;
        Ok(grating)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grating serializes")
    }

    /// Set κ on every slot backed by a phase-change material.
    pub fn set_crystallinity(&mut self, registry: &MaterialRegistry, kappa: f64) {
        for layer in &mut self.layers {
            match layer {
                GratingLayer::Homogeneous { material, kappa: k, .. } => {
                    if registry.is_phase_change(material) {
                        *k = Some(kappa);
                    }
                }
                GratingLayer::Lamellar {
                    material_a,
                    material_b,
                    kappa_a,
                    kappa_b,
                    ..
                } => {
                    if registry.is_phase_change(material_a) {
                        *kappa_a = Some(kappa);
                    }
                    if registry.is_phase_change(material_b) {
                        *kappa_b = Some(kappa);
                    }
                }
            }
        }
    }

    /// Set the filling ratio of every lamellar layer (the sweep knob).
    pub fn set_filling_ratio(&mut self, f: f64) {
        for layer in &mut self.layers {
            if let GratingLayer::Lamellar { filling_ratio, .. } = layer {
                *filling_ratio = f;
            }
        }
    }
}

/// Largest period for which only the zeroth diffracted order propagates in
/// the ambient: `λ / (n·(1 + sinθ))`.
pub fn floquet_max_period(wavelength_nm: f64, angle_deg: f64, n_ambient: f64) -> f64 {
    wavelength_nm / (n_ambient * (1.0 + angle_deg.to_radians().sin()))
}

/// Amplitudes of one diffracted order in the two outer regions.
#[derive(Debug, Clone)]
pub struct OrderAmplitude {
    pub order: i32,
    /// Raw reflected amplitude (incidence region).
    pub r: Complex64,
    /// Raw transmitted amplitude (exit region).
    pub t: Complex64,
    /// Diffraction efficiencies (fraction of incident power).
    pub r_efficiency: f64,
    pub t_efficiency: f64,
}

/// Zeroth-order coefficients plus the full order table.
#[derive(Debug, Clone)]
pub struct RcwaSolution {
    /// Raw zeroth-order reflection amplitude.
    pub r0: Complex64,
    /// Flux-normalized zeroth-order transmission amplitude.
    pub t0: Complex64,
    pub orders: Vec<OrderAmplitude>,
    /// True when only the zeroth order propagates in both outer regions.
    pub single_mode: bool,
    pub n_harmonics: usize,
}

impl RcwaSolution {
    /// Total diffracted power over propagating orders (1 for lossless
    /// gratings).
    pub fn total_efficiency(&self) -> f64 {
        self.orders
            .iter()
            .map(|o| o.r_efficiency + o.t_efficiency)
            .sum()
    }
}

type CMat = Mat<Complex64>;

/// `√z` on the `Im ≥ 0` branch, positive real on the real axis.
fn kz_branch(z: Complex64) -> Complex64 {
    let q = z.sqrt();
    if q.im < 0.0 || (q.im == 0.0 && q.re < 0.0) {
        -q
    } else {
        q
    }
}

/// Modal basis of one layer: eigenvector matrix W (None = identity) and the
/// per-mode normalized propagation constants γ = k_z/k₀.
struct ModalBasis {
    w: Option<CMat>,
    gamma: Vec<Complex64>,
}

impl ModalBasis {
    fn homogeneous(eps: Complex64, kappas: &[f64]) -> Self {
        let gamma = kappas
            .iter()
            .map(|&kx| kz_branch(eps - Complex64::new(kx * kx, 0.0)))
            .collect();
        Self { w: None, gamma }
    }

    fn lamellar(
        eps_a: Complex64,
        eps_b: Complex64,
        filling: f64,
        kappas: &[f64],
        layer_index: usize,
    ) -> Result<Self, RcwaError> {
        let m = kappas.len();
        let half = (m as i32 - 1) / 2;
        // Fourier coefficients of the centered-strip permittivity profile
        let coeff = |p: i32| -> Complex64 {
            if p == 0 {
                filling * eps_a + (1.0 - filling) * eps_b
            } else {
                let x = std::f64::consts::PI * p as f64;
                (eps_a - eps_b) * ((x * filling).sin() / x)
            }
        };
        let a = Mat::from_fn(m, m, |i, j| {
            let p = (i as i32 - half) - (j as i32 - half);
            let mut v = coeff(p);
            if i == j {
                v -= Complex64::new(kappas[i] * kappas[i], 0.0);
            }
            v
        });
        let eig = a.eigen().map_err(|_| RcwaError::Eigen { index: layer_index })?;
        let vals = eig.S();
        let w = eig.U().to_owned();
        let gamma = (0..m).map(|i| kz_branch(vals[i])).collect();
        Ok(Self { w: Some(w), gamma })
    }
}

/// Scattering matrix of a section: `c_bot⁺ = t_down·c_top⁺ + r_up·c_bot⁻`,
/// `c_top⁻ = r_down·c_top⁺ + t_up·c_bot⁻`.
struct SMatrix {
    t_down: CMat,
    r_up: CMat,
    r_down: CMat,
    t_up: CMat,
}

impl SMatrix {
    fn identity(m: usize) -> Self {
        Self {
            t_down: Mat::identity(m, m),
            r_up: Mat::zeros(m, m),
            r_down: Mat::zeros(m, m),
            t_up: Mat::identity(m, m),
        }
    }

    fn propagation(gamma: &[Complex64], k0_d: f64) -> Self {
        let m = gamma.len();
        let phi = Mat::from_fn(m, m, |i, j| {
            if i == j {
                (Complex64::i() * gamma[i] * k0_d).exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self {
            t_down: phi.clone(),
            r_up: Mat::zeros(m, m),
            r_down: Mat::zeros(m, m),
            t_up: phi,
        }
    }

    /// Interface between modal bases a (above) and b (below), from TE
    /// continuity of E and dE/dz.
    fn interface(a: &ModalBasis, b: &ModalBasis) -> Self {
        let m = a.gamma.len();
        let wb_or_identity;
        let wb: &CMat = match &b.w {
            Some(w) => w,
            None => {
                wb_or_identity = Mat::identity(m, m);
                &wb_or_identity
            }
        };
        // F = W_a⁻¹·W_b, G = diag(1/γ_a)·F·diag(γ_b)
        let f: CMat = match &a.w {
            Some(wa) => wa.partial_piv_lu().solve(wb),
            None => wb.clone(),
        };
        let g = Mat::from_fn(m, m, |i, j| f[(i, j)] * b.gamma[j] / a.gamma[i]);
        let sum = &f + &g;
        let diff = &f - &g;
        let sum_lu = sum.partial_piv_lu();
        let sum_inv: CMat = sum_lu.solve(&Mat::<Complex64>::identity(m, m));
        let t_down = Mat::from_fn(m, m, |i, j| 2.0 * sum_inv[(i, j)]);
        let r_up_neg: CMat = &sum_inv * &diff;
        let r_up = Mat::from_fn(m, m, |i, j| -r_up_neg[(i, j)]);
        let r_down: CMat = &diff * &sum_inv;
        let tail: CMat = &diff * &r_up;
        let t_up = Mat::from_fn(m, m, |i, j| 0.5 * (sum[(i, j)] + tail[(i, j)]));
        Self {
            t_down,
            r_up,
            r_down,
            t_up,
        }
    }

    /// Redheffer star product: `self` stacked above `below`.
    fn star(&self, below: &Self) -> Self {
        let m = self.t_down.nrows();
        let prod: CMat = &self.r_up * &below.r_down;
        let x_sys = Mat::from_fn(m, m, |i, j| {
            (if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }) - prod[(i, j)]
        });
        let x: CMat = x_sys.partial_piv_lu().solve(&Mat::<Complex64>::identity(m, m));
        let xa: CMat = &x * &self.t_down;
        let t_down: CMat = &below.t_down * &xa;
        let r_down: CMat = &self.r_down + &(&self.t_up * &(&below.r_down * &xa));
        let xr: CMat = &x * &(&self.r_up * &below.t_up);
        let r_up: CMat = &below.r_up + &(&below.t_down * &xr);
        let t_up: CMat = &self.t_up * &(&below.t_up + &(&below.r_down * &xr));
        Self {
            t_down,
            r_up,
            r_down,
            t_up,
        }
    }
}

fn ambient_index_of(
    registry: &MaterialRegistry,
    id: &str,
    wavelength_nm: f64,
    role: &'static str,
) -> Result<f64, RcwaError> {
    let idx = registry.index_of(id, wavelength_nm, None)?;
    if idx.k > 1e-12 {
        return Err(RcwaError::LossyAmbient {
            role,
            id: id.to_string(),
            k: idx.k,
        });
    }
    Ok(idx.n)
}

struct Solved {
    s: SMatrix,
    gamma_in: Vec<Complex64>,
    gamma_out: Vec<Complex64>,
    single_mode: bool,
    m: usize,
}

fn solve_grating(
    grating: &Grating1D,
    registry: &MaterialRegistry,
    wavelength_nm: f64,
    angle_deg: f64,
    n_harmonics: usize,
) -> Result<Solved, RcwaError> {
    grating.validate()?;
    if !(0.0..90.0).contains(&angle_deg) {
        return Err(RcwaError::InvalidAngle(angle_deg));
    }
    if n_harmonics < 3 || n_harmonics % 2 == 0 {
        return Err(RcwaError::BadHarmonics(n_harmonics));
    }
    let m = n_harmonics;
    let half = (m as i32 - 1) / 2;
    let n_in = ambient_index_of(registry, &grating.incidence_medium, wavelength_nm, "incidence")?;
    let n_out = ambient_index_of(registry, &grating.exit_medium, wavelength_nm, "exit")?;
    let theta = angle_deg.to_radians();
    let k0 = 2.0 * std::f64::consts::PI / wavelength_nm;

    // normalized transverse wavevectors per harmonic
    let kappas: Vec<f64> = (0..m)
        .map(|i| n_in * theta.sin() + (i as i32 - half) as f64 * wavelength_nm / grating.period_nm)
        .collect();

    let ambient = ModalBasis::homogeneous(Complex64::new(n_in * n_in, 0.0), &kappas);
    let exit = ModalBasis::homogeneous(Complex64::new(n_out * n_out, 0.0), &kappas);

    let mut bases: Vec<(ModalBasis, f64)> = Vec::with_capacity(grating.layers.len());
    for (index, layer) in grating.layers.iter().enumerate() {
        let basis = match layer {
            GratingLayer::Homogeneous {
                material,
                thickness_nm: _,
                kappa,
            } => {
                let eps = registry.permittivity_of(material, wavelength_nm, *kappa)?;
                ModalBasis::homogeneous(eps.eps, &kappas)
            }
            GratingLayer::Lamellar {
                material_a,
                material_b,
                filling_ratio,
                thickness_nm: _,
                kappa_a,
                kappa_b,
            } => {
                let eps_a = registry.permittivity_of(material_a, wavelength_nm, *kappa_a)?;
                let eps_b = registry.permittivity_of(material_b, wavelength_nm, *kappa_b)?;
                ModalBasis::lamellar(eps_a.eps, eps_b.eps, *filling_ratio, &kappas, index)?
            }
        };
        bases.push((basis, layer.thickness_nm()));
    }

    let mut s = SMatrix::identity(m);
    let mut prev = &ambient;
    for (basis, thickness) in &bases {
        s = s.star(&SMatrix::interface(prev, basis));
        s = s.star(&SMatrix::propagation(&basis.gamma, k0 * thickness));
        prev = basis;
    }
    s = s.star(&SMatrix::interface(prev, &exit));

    // single-mode condition: every nonzero order evanescent in both regions
    let single_mode = (0..m).all(|i| {
        let is_zero = i as i32 - half == 0;
        is_zero
            || (kappas[i].abs() >= n_in - 1e-12 && kappas[i].abs() >= n_out - 1e-12)
    });

    Ok(Solved {
        s,
        gamma_in: ambient.gamma,
        gamma_out: exit.gamma,
        single_mode,
        m,
    })
}

/// Zeroth-order reflection/transmission of the grating plus the full order
/// table. `side` selects the illuminated face; `t0` is flux-normalized so
/// `|t0|²` is power transmittance.
pub fn rcwa_coefficients(
    grating: &Grating1D,
    registry: &MaterialRegistry,
    wavelength_nm: f64,
    angle_deg: f64,
    n_harmonics: usize,
    side: Side,
) -> Result<RcwaSolution, RcwaError> {
    let solved = solve_grating(grating, registry, wavelength_nm, angle_deg, n_harmonics)?;
    let m = solved.m;
    let center = (m - 1) / 2;

    // illuminate with the zeroth order from the chosen side
    let (r_col, t_col, gamma_r, gamma_t): (Vec<Complex64>, Vec<Complex64>, _, _) = match side {
        Side::Top => (
            (0..m).map(|i| solved.s.r_down[(i, center)]).collect(),
            (0..m).map(|i| solved.s.t_down[(i, center)]).collect(),
            &solved.gamma_in,
            &solved.gamma_out,
        ),
        Side::Bottom => (
            (0..m).map(|i| solved.s.r_up[(i, center)]).collect(),
            (0..m).map(|i| solved.s.t_up[(i, center)]).collect(),
            &solved.gamma_out,
            &solved.gamma_in,
        ),
    };
    let g0 = gamma_r[center].re;
    let orders: Vec<OrderAmplitude> = (0..m)
        .map(|i| OrderAmplitude {
            order: i as i32 - center as i32,
            r: r_col[i],
            t: t_col[i],
            r_efficiency: r_col[i].norm_sqr() * gamma_r[i].re / g0,
            t_efficiency: t_col[i].norm_sqr() * gamma_t[i].re / g0,
        })
        .collect();
    let t0 = t_col[center] * (gamma_t[center].re / g0).max(0.0).sqrt();
    Ok(RcwaSolution {
        r0: r_col[center],
        t0,
        orders,
        single_mode: solved.single_mode,
        n_harmonics,
    })
}

pub const DEFAULT_HARMONICS: usize = 41;

/// Assemble the 2×2 network matrix from the zeroth-order coefficients.
///
/// The single-mode condition is a hard requirement here: higher propagating
/// orders would leak correlated flux outside the two-port model.
pub fn network_matrix_from_grating(
    grating: &Grating1D,
    registry: &MaterialRegistry,
    wavelength_nm: f64,
    angle_deg: f64,
    n_harmonics: usize,
) -> Result<NetworkMatrix, RcwaError> {
    let solved = solve_grating(grating, registry, wavelength_nm, angle_deg, n_harmonics)?;
    if !solved.single_mode {
        let n_in = ambient_index_of(registry, &grating.incidence_medium, wavelength_nm, "incidence")?;
        let n_out = ambient_index_of(registry, &grating.exit_medium, wavelength_nm, "exit")?;
        let theta = angle_deg.to_radians();
        let cutoff = wavelength_nm / (n_in * theta.sin() + n_in.min(n_out)).max(1e-12);
        return Err(RcwaError::SingleModeViolation {
            period_nm: grating.period_nm,
            cutoff_nm: cutoff,
            wavelength_nm,
            angle_deg,
        });
    }
    let m = solved.m;
    let center = (m - 1) / 2;
    let g_in = solved.gamma_in[center].re;
    let g_out = solved.gamma_out[center].re;
    let t1 = solved.s.t_down[(center, center)] * (g_out / g_in).sqrt();
    let t4 = solved.s.t_up[(center, center)] * (g_in / g_out).sqrt();
    let t3 = solved.s.r_down[(center, center)];
    let t2 = solved.s.r_up[(center, center)];
    Ok(NetworkMatrix::new(
        [t1, t2, t3, t4],
        wavelength_nm,
        angle_deg,
        format!(
            "rcwa n_harmonics={n_harmonics}; ports: t1=T(top->bottom) t4=T(bottom->top) t3=R(top) t2=R(bottom); flux-normalized"
        ),
    )?)
}
