//! 1D transient joule heating across the layered stack.
//!
//! Solves `ρc·∂T/∂t = ∂/∂z(k·∂T/∂z) + q(z,t)` with the source confined to
//! the heater layer, by a finite-volume discretization (harmonic-mean
//! interface conductances) and backward-Euler time stepping: unconditionally
//! stable for the stiff nanometer-scale layers. The per-step source is the
//! exact time average of the piecewise-linear pulse, so the injected energy
//! matches `∫P dt` to solver roundoff.
//!
//! Depth is measured upward from the bottom of the first listed layer.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("layer {index}: {message}")]
    InvalidLayer { index: usize, message: String },
    #[error("stack needs exactly one contiguous heater region, found {0}")]
    HeaterRegions(usize),
    #[error("pulse: {0}")]
    BadPulse(String),
    #[error("grid: {0}")]
    BadGrid(String),
    #[error("probe ({depth_nm} nm, {time_s} s) outside the stored field")]
    ProbeOutOfRange { depth_nm: f64, time_s: f64 },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One layer of the thermal cross-section.
#[derive(Debug, Clone)]
pub struct ThermalLayer {
    pub material: String,
    pub thickness_nm: f64,
    /// W/(m·K)
    pub conductivity: f64,
    /// ρ·c in J/(m³·K)
    pub volumetric_heat_capacity: f64,
    pub is_heater: bool,
}

pub fn validate_stack(stack: &[ThermalLayer]) -> Result<(), ThermalError> {
    if stack.is_empty() {
        return Err(ThermalError::HeaterRegions(0));
    }
    for (index, layer) in stack.iter().enumerate() {
        for (value, what) in [
            (layer.thickness_nm, "thickness"),
            (layer.conductivity, "conductivity"),
            (layer.volumetric_heat_capacity, "heat capacity"),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ThermalError::InvalidLayer {
                    index,
                    message: format!("{what} {value} must be positive"),
                });
            }
        }
    }
    let regions = stack
        .windows(2)
        .filter(|w| w[1].is_heater && !w[0].is_heater)
        .count()
        + usize::from(stack[0].is_heater);
    if regions != 1 {
        return Err(ThermalError::HeaterRegions(regions));
    }
    Ok(())
}

/// Electrical pulse as piecewise-linear areal power density samples
/// (W/m² vs seconds); zero outside the sampled support.
#[derive(Debug, Clone)]
pub struct CurrentPulse {
    samples: Vec<(f64, f64)>,
}

impl CurrentPulse {
    pub fn from_power_samples(samples: Vec<(f64, f64)>) -> Result<Self, ThermalError> {
        if samples.len() < 2 {
            return Err(ThermalError::BadPulse(
                "need at least 2 samples".to_string(),
            ));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(ThermalError::BadPulse(
                    "times must be strictly increasing".to_string(),
                ));
            }
        }
        if samples.iter().any(|&(_, p)| p < 0.0 || !p.is_finite()) {
            return Err(ThermalError::BadPulse("power must be >= 0".to_string()));
        }
        Ok(Self { samples })
    }

    /// Convert a sampled current waveform through a heater sheet: areal
    /// power density `P = I²·R_sq / W²` for sheet resistance `R_sq` (Ω/sq)
    /// and current-path width `W` (m).
    pub fn from_current_samples(
        samples_amps: Vec<(f64, f64)>,
        sheet_resistance_ohm_sq: f64,
        width_m: f64,
    ) -> Result<Self, ThermalError> {
        if !(sheet_resistance_ohm_sq > 0.0) || !(width_m > 0.0) {
            return Err(ThermalError::BadPulse(
                "sheet resistance and width must be positive".to_string(),
            ));
        }
        let scale = sheet_resistance_ohm_sq / (width_m * width_m);
        Self::from_power_samples(
            samples_amps
                .into_iter()
                .map(|(t, i)| (t, i * i * scale))
                .collect(),
        )
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn power_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t < s[0].0 || t > s[s.len() - 1].0 {
            return 0.0;
        }
        let pos = s.partition_point(|&(ts, _)| ts <= t);
        if pos == 0 {
            return s[0].1;
        }
        if pos >= s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, p0) = s[pos - 1];
        let (t1, p1) = s[pos];
        p0 + (p1 - p0) * (t - t0) / (t1 - t0)
    }

    /// Exact `∫P dt` over `[a, b]` for the piecewise-linear interpolant.
    pub fn energy_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut knots: Vec<f64> = vec![a, b];
        for &(t, _) in &self.samples {
            if t > a && t < b {
                knots.push(t);
            }
        }
        knots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += 0.5 * (self.power_at(w[0]) + self.power_at(w[1])) * (w[1] - w[0]);
        }
        total
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Temperature pinned to ambient at the face.
    FixedAmbient,
    /// Zero flux through the face.
    Insulated,
}

/// Spatial/temporal resolution of the solve.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub max_dz_nm: f64,
    pub dt_s: f64,
    /// Keep every n-th time step in the output field (1 = all).
    pub store_every: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            max_dz_nm: 5.0,
            dt_s: 1.0e-9,
            store_every: 5,
        }
    }
}

/// Temperature vs depth and time.
#[derive(Debug, Clone)]
pub struct TemperatureField {
    pub depth_nm: Vec<f64>,
    pub time_s: Vec<f64>,
    /// Row-major: `temperature[ti][zi]`, kelvin.
    pub temperature: Vec<Vec<f64>>,
    pub ambient_k: f64,
}

impl TemperatureField {
    /// Bilinear interpolation on the stored grid.
    pub fn probe(&self, depth_nm: f64, time_s: f64) -> Result<f64, ThermalError> {
        let out = ThermalError::ProbeOutOfRange { depth_nm, time_s };
        let (z, t) = (&self.depth_nm, &self.time_s);
        if depth_nm < z[0] || depth_nm > z[z.len() - 1] || time_s < t[0] || time_s > t[t.len() - 1]
        {
            return Err(out);
        }
        let zi = z.partition_point(|&v| v <= depth_nm).clamp(1, z.len() - 1);
        let ti = t.partition_point(|&v| v <= time_s).clamp(1, t.len() - 1);
        let fz = (depth_nm - z[zi - 1]) / (z[zi] - z[zi - 1]);
        let ft = (time_s - t[ti - 1]) / (t[ti] - t[ti - 1]);
        let v00 = self.temperature[ti - 1][zi - 1];
        let v01 = self.temperature[ti - 1][zi];
        let v10 = self.temperature[ti][zi - 1];
        let v11 = self.temperature[ti][zi];
        Ok(v00 * (1.0 - fz) * (1.0 - ft) + v01 * fz * (1.0 - ft) + v10 * (1.0 - fz) * ft
            + v11 * fz * ft)
    }

    /// Maximum temperature inside a depth window over a time window.
    pub fn max_in(&self, depth_range_nm: (f64, f64), time_range_s: (f64, f64)) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (ti, &t) in self.time_s.iter().enumerate() {
            if t < time_range_s.0 || t > time_range_s.1 {
                continue;
            }
            for (zi, &z) in self.depth_nm.iter().enumerate() {
                if z < depth_range_nm.0 || z > depth_range_nm.1 {
                    continue;
                }
                best = best.max(self.temperature[ti][zi]);
            }
        }
        best
    }

    /// CSV matrix: first row `depth_nm` header, then one row per stored time.
    pub fn write_csv(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        write!(out, "time_s\\depth_nm")?;
        for z in &self.depth_nm {
            write!(out, ",{z:.6}")?;
        }
        writeln!(out)?;
        for (ti, t) in self.time_s.iter().enumerate() {
            write!(out, "{t:.9e}")?;
            for v in &self.temperature[ti] {
                write!(out, ",{v:.6}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Backward-Euler finite-volume solve of the stack under the pulse.
///
/// `boundary` is (bottom, top); depth runs upward from the bottom of the
/// first layer. Initial condition is ambient everywhere.
pub fn solve_heat_1d(
    stack: &[ThermalLayer],
    pulse: &CurrentPulse,
    duration_s: f64,
    boundary: (BoundaryCondition, BoundaryCondition),
    grid: GridSpec,
    ambient_k: f64,
) -> Result<TemperatureField, ThermalError> {
    validate_stack(stack)?;
    if !(grid.max_dz_nm > 0.0) || !(grid.dt_s > 0.0) || grid.store_every == 0 {
        return Err(ThermalError::BadGrid(format!(
            "max_dz {} nm, dt {} s, store_every {}",
            grid.max_dz_nm, grid.dt_s, grid.store_every
        )));
    }
    if !(duration_s > 0.0) {
        return Err(ThermalError::BadGrid(format!(
            "duration {duration_s} s must be positive"
        )));
    }

    // Build cells: per-layer uniform subdivision capped at max_dz.
    let mut dz: Vec<f64> = Vec::new(); // meters
    let mut center: Vec<f64> = Vec::new(); // nm, from bottom
    let mut cond: Vec<f64> = Vec::new();
    let mut cap: Vec<f64> = Vec::new();
    let mut heater: Vec<bool> = Vec::new();
    let mut z0 = 0.0;
    let mut heater_thickness_m = 0.0;
    for layer in stack {
        let n = (layer.thickness_nm / grid.max_dz_nm).ceil().max(1.0) as usize;
        let h_nm = layer.thickness_nm / n as f64;
        for i in 0..n {
            dz.push(h_nm * 1e-9);
            center.push(z0 + (i as f64 + 0.5) * h_nm);
            cond.push(layer.conductivity);
            cap.push(layer.volumetric_heat_capacity);
            heater.push(layer.is_heater);
        }
        if layer.is_heater {
            heater_thickness_m += layer.thickness_nm * 1e-9;
        }
        z0 += layer.thickness_nm;
    }
    let n = dz.len();

    // Interface conductances (W/m²K): series of the two half-cells.
    let mut g = vec![0.0; n + 1];
    for i in 1..n {
        g[i] = 1.0 / (0.5 * dz[i - 1] / cond[i - 1] + 0.5 * dz[i] / cond[i]);
    }
    g[0] = match boundary.0 {
        BoundaryCondition::FixedAmbient => cond[0] / (0.5 * dz[0]),
        BoundaryCondition::Insulated => 0.0,
    };
    g[n] = match boundary.1 {
        BoundaryCondition::FixedAmbient => cond[n - 1] / (0.5 * dz[n - 1]),
        BoundaryCondition::Insulated => 0.0,
    };

    let steps = (duration_s / grid.dt_s).ceil() as usize;
    let dt = duration_s / steps as f64;

    let mut temp = vec![ambient_k; n];
    let mut times = vec![0.0];
    let mut frames = vec![temp.clone()];

    // Thomas algorithm workspaces
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * dt;
        let t_next = step as f64 * dt;
        let p_avg = pulse.energy_between(t_prev, t_next) / dt; // W/m²
        for i in 0..n {
            let c = cap[i] * dz[i] / dt;
            lower[i] = -g[i];
            upper[i] = -g[i + 1];
            diag[i] = c + g[i] + g[i + 1];
            let mut r = c * temp[i];
            if heater[i] {
                r += p_avg / heater_thickness_m * dz[i];
            }
            if i == 0 && matches!(boundary.0, BoundaryCondition::FixedAmbient) {
                r += g[0] * ambient_k;
            }
            if i == n - 1 && matches!(boundary.1, BoundaryCondition::FixedAmbient) {
                r += g[n] * ambient_k;
            }
            rhs[i] = r;
        }
        // forward sweep
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        temp[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            temp[i] = (rhs[i] - upper[i] * temp[i + 1]) / diag[i];
        }
        if step % grid.store_every == 0 || step == steps {
            times.push(t_next);
            frames.push(temp.clone());
        }
    }

    Ok(TemperatureField {
        depth_nm: center,
        time_s: times,
        temperature: frames,
        ambient_k,
    })
}

/// Parse the thermal stack CSV:
/// `material,thickness_nm,k_W_mK,rho_c_J_m3K,is_heater` (bottom to top).
pub fn parse_stack_csv(text: &str, path_label: &str) -> Result<Vec<ThermalLayer>, ThermalError> {
    let mut layers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(ThermalError::Parse {
                path: path_label.to_string(),
                line: i + 1,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64, ThermalError> {
            s.parse::<f64>().map_err(|_| ThermalError::Parse {
                path: path_label.to_string(),
                line: i + 1,
                message: format!("cannot parse {what} `{s}`"),
            })
        };
        layers.push(ThermalLayer {
            material: fields[0].to_string(),
            thickness_nm: num(fields[1], "thickness")?,
            conductivity: num(fields[2], "conductivity")?,
            volumetric_heat_capacity: num(fields[3], "heat capacity")?,
            is_heater: matches!(fields[4], "1" | "true" | "yes"),
        });
    }
    validate_stack(&layers)?;
    Ok(layers)
}

/// Parse the pulse CSV: `time_s,power_W_m2` rows.
pub fn parse_pulse_csv(text: &str, path_label: &str) -> Result<CurrentPulse, ThermalError> {
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(ThermalError::Parse {
                path: path_label.to_string(),
                line: i + 1,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64, ThermalError> {
            s.parse::<f64>().map_err(|_| ThermalError::Parse {
                path: path_label.to_string(),
                line: i + 1,
                message: format!("cannot parse `{s}`"),
            })
        };
        samples.push((num(fields[0])?, num(fields[1])?));
    }
    CurrentPulse::from_power_samples(samples)
}

pub fn load_stack_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<ThermalLayer>, ThermalError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ThermalError::Io {
        path: label.clone(),
        source,
    })?;
    parse_stack_csv(&text, &label)
}

pub fn load_pulse_csv(path: impl AsRef<std::path::Path>) -> Result<CurrentPulse, ThermalError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ThermalError::Io {
        path: label.clone(),
        source,
    })?;
    parse_pulse_csv(&text, &label)
}
