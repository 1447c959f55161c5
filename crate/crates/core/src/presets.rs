//! Built-in device geometries and the thermal switching preset.
//!
//! Structure A: alternating GeTe/Au nano-strips (period 450 nm, 15 nm thick,
//! GeTe strip 285 nm wide) on a 190 nm SiO₂ film. Structure B: the layered
//! TiO₂/GeTe/TiO₂/GeTe/SiO₂ stack on a 15 nm TiN heating sheet. Both are
//! free-space 2×2 networks with ports at 45°; incidence and exit media
//! default to vacuum and are overridable through the geometry files.

use crate::rcwa::{Grating1D, GratingLayer};
use crate::thermal::{CurrentPulse, ThermalLayer};
use crate::tmm::{Layer, LayerStack};

pub const DESIGN_WAVELENGTH_NM: f64 = 810.0;
pub const PORT_ANGLE_DEG: f64 = 45.0;

/// Structure A filling ratio: 285 nm GeTe strip in a 450 nm cell.
pub const STRUCTURE_A_FILLING: f64 = 285.0 / 450.0;
pub const STRUCTURE_A_PERIOD_NM: f64 = 450.0;

/// Structure B lower TiO₂ design thickness (the wavelength-tuning layer).
pub const STRUCTURE_B_LOWER_TIO2_NM: f64 = 330.0;

/// Minimum acceptable distinguishable-photon baselines used by the design
/// optimization (1/12 for structure A, 1/16 for structure B).
pub const BASELINE_MIN_A: f64 = 1.0 / 12.0;
pub const BASELINE_MIN_B: f64 = 1.0 / 16.0;

/// GeTe/Au nano-strip grating at crystallinity κ.
pub fn structure_a(kappa: f64) -> Grating1D {
    structure_a_custom(kappa, STRUCTURE_A_FILLING, false)
}

/// Structure A with a free filling ratio and an optional semi-infinite
/// fused-silica substrate instead of the finite 190 nm film.
pub fn structure_a_custom(kappa: f64, filling_ratio: f64, substrate_half_space: bool) -> Grating1D {
    let mut layers = vec![GratingLayer::Lamellar {
        material_a: "gete".into(),
        material_b: "au".into(),
        filling_ratio,
        thickness_nm: 15.0,
        kappa_a: Some(kappa),
        kappa_b: None,
    }];
    let exit_medium = if substrate_half_space {
        "sio2".to_string()
    } else {
        layers.push(GratingLayer::Homogeneous {
            material: "sio2".into(),
            thickness_nm: 190.0,
            kappa: None,
        });
        "vacuum".to_string()
    };
    Grating1D {
        period_nm: STRUCTURE_A_PERIOD_NM,
        incidence_medium: "vacuum".into(),
        layers,
        exit_medium,
    }
}

/// Layered stack at crystallinity κ, top to bottom:
/// TiO₂ 290 / GeTe 13 / TiO₂ 330 / GeTe 21 / SiO₂ 290 / TiN 15.
pub fn structure_b(kappa: f64) -> LayerStack {
    structure_b_custom(kappa, STRUCTURE_B_LOWER_TIO2_NM)
}

/// Structure B with a free lower-TiO₂ thickness (the tuning knob).
pub fn structure_b_custom(kappa: f64, lower_tio2_nm: f64) -> LayerStack {
    let layer = |material: &str, thickness_nm: f64, kappa: Option<f64>| Layer {
        material: material.into(),
        thickness_nm,
        kappa,
    };
    LayerStack {
        incidence_medium: "vacuum".into(),
        layers: vec![
            layer("tio2", 290.0, None),
            layer("gete", 13.0, Some(kappa)),
            layer("tio2", lower_tio2_nm, None),
            layer("gete", 21.0, Some(kappa)),
            layer("sio2", 290.0, None),
            layer("tin", 15.0, None),
        ],
        exit_medium: "vacuum".into(),
    }
}

/// Index of the lower TiO₂ layer inside [`structure_b`] (for thickness
/// sweeps via `layer_thickness:<index>`).
pub const STRUCTURE_B_LOWER_TIO2_INDEX: usize = 2;

pub const AMBIENT_K: f64 = 293.15;

/// Thermal cross-section of structure B, listed bottom to top, with a
/// fused-silica substrate extension below the TiN heater. Constants are
/// bundled from `data/thermal/structure_b_stack.csv`.
pub fn thermal_structure_b() -> Vec<ThermalLayer> {
    crate::thermal::parse_stack_csv(THERMAL_STACK_CSV, "builtin:structure_b_stack")
        .expect("bundled thermal stack is valid")
}

/// Switching pulse: 500 ns trapezoid (50 ns edges), amplitude from
/// `data/thermal/pulse_500ns.csv`.
pub fn thermal_pulse_500ns() -> CurrentPulse {
    crate::thermal::parse_pulse_csv(THERMAL_PULSE_CSV, "builtin:pulse_500ns")
        .expect("bundled pulse is valid")
}

pub const THERMAL_STACK_CSV: &str = include_str!("../data/thermal/structure_b_stack.csv");
pub const THERMAL_PULSE_CSV: &str = include_str!("../data/thermal/pulse_500ns.csv");

/// Depth span of one layer inside the solver output of
/// [`thermal_structure_b`] (measured from the bottom of the substrate).
pub fn thermal_layer_span(material: &str) -> Vec<(f64, f64)> {
    let mut spans = Vec::new();
    let mut z = 0.0;
    for layer in thermal_structure_b() {
        let top = z + layer.thickness_nm;
        if layer.material.eq_ignore_ascii_case(material) {
            spans.push((z, top));
        }
        z = top;
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialRegistry;
    use crate::rcwa::network_matrix_from_grating;
    use crate::tmm::network_matrix_from_stack;

    #[test]
    fn presets_build_valid_networks() {
        let reg = MaterialRegistry::builtin();
        for kappa in [0.0, 0.5, 1.0] {
            let g = structure_a(kappa);
            let m = network_matrix_from_grating(&g, &reg, 810.0, 45.0, 21).unwrap();
            let (sigma, _) = m.singular_values();
            assert!(sigma <= 1.0 + 1e-9);
            let s = structure_b(kappa);
            let m = network_matrix_from_stack(&s, &reg, 810.0, 45.0).unwrap();
            let (sigma, _) = m.singular_values();
            assert!(sigma <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn structure_b_layer_order() {
        let s = structure_b(1.0);
        let ids: Vec<&str> = s.layers.iter().map(|l| l.material.as_str()).collect();
        assert_eq!(ids, ["tio2", "gete", "tio2", "gete", "sio2", "tin"]);
        assert_eq!(s.layers[STRUCTURE_B_LOWER_TIO2_INDEX].thickness_nm, 330.0);
    }

    #[test]
    fn thermal_preset_has_one_heater() {
        let stack = thermal_structure_b();
        let heaters: Vec<&ThermalLayer> = stack.iter().filter(|l| l.is_heater).collect();
        assert_eq!(heaters.len(), 1);
        assert_eq!(heaters[0].material, "tin");
        // GeTe spans exist and are 21 and 13 nm thick
        let spans = thermal_layer_span("gete");
        assert_eq!(spans.len(), 2);
        assert!((spans[0].1 - spans[0].0 - 21.0).abs() < 1e-9);
        assert!((spans[1].1 - spans[1].0 - 13.0).abs() < 1e-9);
    }
}
