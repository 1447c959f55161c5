//! Tabulated optical constants and the crystallinity mixing model.
//!
//! Materials are dispersion tables of `(λ, n, k)` samples loaded from CSV
//! files (`# material=<id> source=<...>` header, then `wavelength_nm,n,k`
//! rows in ascending wavelength). Interpolation is linear in `(n, k)`.
//! Phase-change materials are registered as a pair of tables (crystalline,
//! amorphous); partial crystallization blends the two *permittivities*
//! linearly: `ε(κ) = κ·ε_c + (1 − κ)·ε_a`.

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: wavelengths must be strictly increasing (non-monotone at {wavelength_nm} nm)")]
    NonMonotone {
        path: String,
        line: usize,
        wavelength_nm: f64,
    },
    #[error("invalid refractive index n={n}, k={k}: require n > 0 and k >= 0")]
    InvalidIndex { n: f64, k: f64 },
    #[error("dispersion table `{material_id}` needs at least 2 samples, got {count}")]
    TooFewSamples { material_id: String, count: usize },
    #[error("wavelength {wavelength_nm} nm outside table `{material_id}` range [{min}, {max}] nm")]
    OutOfRange {
        material_id: String,
        wavelength_nm: f64,
        min: f64,
        max: f64,
    },
    #[error("material not found: {0}")]
    NotFound(String),
    #[error("permittivity {eps} has no passive square root (needs a branch with n > 0, k >= 0)")]
    NonPassiveRoot { eps: Complex64 },
    #[error("crystallinity {0} outside [0, 1]")]
    KappaOutOfRange(f64),
    #[error("material `{0}` is phase-change: a crystallinity value is required")]
    KappaRequired(String),
    #[error("material `{0}` is not phase-change but a crystallinity value was given")]
    KappaNotApplicable(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Complex refractive index `n + ik` of a passive medium (`n > 0`, `k ≥ 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexIndex {
    pub n: f64,
    pub k: f64,
}

impl ComplexIndex {
    pub fn new(n: f64, k: f64) -> Result<Self, MaterialError> {
        if !(n > 0.0) || !(k >= 0.0) || !n.is_finite() || !k.is_finite() {
            return Err(MaterialError::InvalidIndex { n, k });
        }
        Ok(Self { n, k })
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.n, self.k)
    }
}

/// Complex relative permittivity under the `e^{-iωt}` convention
/// (`Im(ε) ≥ 0` for passive media).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPermittivity {
    pub eps: Complex64,
}

/// ε = (n + ik)².
pub fn permittivity(idx: ComplexIndex) -> ComplexPermittivity {
    let nc = idx.as_complex();
    ComplexPermittivity { eps: nc * nc }
}

/// Principal square root of ε on the passive branch (`k ≥ 0`).
///
/// Rejects inputs whose roots are non-passive on both branches, e.g. real
/// negative ε (pure imaginary index): no such medium occurs in these stacks.
pub fn index_from_permittivity(eps: ComplexPermittivity) -> Result<ComplexIndex, MaterialError> {
    let root = eps.eps.sqrt();
    // sqrt() returns the principal root with Re >= 0; the other branch is -root.
    let candidate = if root.im >= 0.0 { root } else { -root };
    if candidate.re > 0.0 && candidate.im >= 0.0 {
        ComplexIndex::new(candidate.re, candidate.im)
    } else {
        Err(MaterialError::NonPassiveRoot { eps: eps.eps })
    }
}

/// Crystallinity mixing: `ε(κ) = κ·ε_c + (1 − κ)·ε_a`.
pub fn mix_crystallinity(
    eps_c: ComplexPermittivity,
    eps_a: ComplexPermittivity,
    kappa: f64,
) -> Result<ComplexPermittivity, MaterialError> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(MaterialError::KappaOutOfRange(kappa));
    }
    Ok(ComplexPermittivity {
        eps: kappa * eps_c.eps + (1.0 - kappa) * eps_a.eps,
    })
}

/// Sorted `(λ_nm, n, k)` samples for one material in one phase.
#[derive(Debug, Clone)]
pub struct DispersionTable {
    material_id: String,
    source: String,
    /// SHA-256 of the CSV text the table was parsed from.
    content_hash: String,
    samples: Vec<(f64, ComplexIndex)>,
}

impl DispersionTable {
    pub fn from_samples(
        material_id: impl Into<String>,
        source: impl Into<String>,
        samples: Vec<(f64, ComplexIndex)>,
    ) -> Result<Self, MaterialError> {
        let material_id = material_id.into();
        if samples.len() < 2 {
            return Err(MaterialError::TooFewSamples {
                material_id,
                count: samples.len(),
            });
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(MaterialError::NonMonotone {
                    path: material_id.clone(),
                    line: 0,
                    wavelength_nm: w[1].0,
                });
            }
        }
        let mut text = String::new();
        for (w, idx) in &samples {
            let _ = writeln!(text, "{w},{},{}", idx.n, idx.k);
        }
        let content_hash = sha256_hex(text.as_bytes());
        Ok(Self {
            material_id,
            source: source.into(),
            content_hash,
            samples,
        })
    }

    /// Parse the CSV format: `# material=<id> source=<...>` header, then
    /// `wavelength_nm,n,k` rows in ascending wavelength.
    pub fn parse_csv(text: &str, path_label: &str) -> Result<Self, MaterialError> {
        let mut material_id = String::new();
        let mut source = String::new();
        let mut samples: Vec<(f64, ComplexIndex)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(pos) = rest.find("material=") {
                    let tail = &rest[pos + "material=".len()..];
                    material_id = tail.split_whitespace().next().unwrap_or("").to_string();
                }
                if let Some(pos) = rest.find("source=") {
                    source = rest[pos + "source=".len()..].to_string();
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(MaterialError::Parse {
                    path: path_label.to_string(),
                    line: line_no,
                    message: format!("expected 3 fields `wavelength_nm,n,k`, got {}", fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<f64, MaterialError> {
                s.parse::<f64>().map_err(|_| MaterialError::Parse {
                    path: path_label.to_string(),
                    line: line_no,
                    message: format!("cannot parse {what} `{s}`"),
                })
            };
            let w = parse(fields[0], "wavelength")?;
            let n = parse(fields[1], "n")?;
            let k = parse(fields[2], "k")?;
            let idx = ComplexIndex::new(n, k).map_err(|e| MaterialError::Parse {
                path: path_label.to_string(),
                line: line_no,
                message: e.to_string(),
            })?;
            if let Some(&(prev, _)) = samples.last() {
                if w <= prev {
                    return Err(MaterialError::NonMonotone {
                        path: path_label.to_string(),
                        line: line_no,
                        wavelength_nm: w,
                    });
                }
            }
            samples.push((w, idx));
        }
        if material_id.is_empty() {
            material_id = path_label.to_string();
        }
        let mut table = Self::from_samples(material_id, source, samples)?;
        table.content_hash = sha256_hex(text.as_bytes());
        Ok(table)
    }

    pub fn material_id(&self) -> &str {
        &self.material_id
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn wavelength_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn samples(&self) -> &[(f64, ComplexIndex)] {
        &self.samples
    }

    /// Linear interpolation of n and k between the bracketing samples.
    pub fn index_at(&self, wavelength_nm: f64) -> Result<ComplexIndex, MaterialError> {
        let (min, max) = self.wavelength_range();
        if !(wavelength_nm >= min && wavelength_nm <= max) {
            return Err(MaterialError::OutOfRange {
                material_id: self.material_id.clone(),
                wavelength_nm,
                min,
                max,
            });
        }
        let pos = self
            .samples
            .partition_point(|&(w, _)| w <= wavelength_nm);
        if pos == 0 {
            return Ok(self.samples[0].1);
        }
        if pos == self.samples.len() {
            return Ok(self.samples[pos - 1].1);
        }
        let (w0, i0) = self.samples[pos - 1];
        let (w1, i1) = self.samples[pos];
        if wavelength_nm == w0 {
            return Ok(i0);
        }
        let f = (wavelength_nm - w0) / (w1 - w0);
        ComplexIndex::new(i0.n + f * (i1.n - i0.n), i0.k + f * (i1.k - i0.k))
    }
}

/// `load_dispersion`: read and validate a dispersion CSV from disk.
pub fn load_dispersion(
    path: impl AsRef<Path>,
    material_id: &str,
) -> Result<DispersionTable, MaterialError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| MaterialError::Io {
        path: label.clone(),
        source,
    })?;
    let mut table = DispersionTable::parse_csv(&text, &label)?;
    if !material_id.is_empty() {
        table.material_id = material_id.to_string();
    }
    Ok(table)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

const GETE_AMORPHOUS_CSV: &str = include_str!("../data/materials/gete_amorphous.csv");
const GETE_CRYSTALLINE_CSV: &str = include_str!("../data/materials/gete_crystalline.csv");
const AU_CSV: &str = include_str!("../data/materials/au.csv");
const SIO2_CSV: &str = include_str!("../data/materials/sio2.csv");
const TIO2_CSV: &str = include_str!("../data/materials/tio2.csv");
const TIN_CSV: &str = include_str!("../data/materials/tin.csv");

/// Resolves material ids to permittivities at a wavelength.
///
/// Regular materials map to one table. Phase-change materials map to a
/// (crystalline, amorphous) table pair and require a crystallinity κ.
/// `vacuum` is built in as a constant n = 1.
#[derive(Debug, Clone)]
pub struct MaterialRegistry {
    tables: HashMap<String, DispersionTable>,
    phase_change: HashMap<String, (String, String)>,
}

impl MaterialRegistry {
    pub fn empty() -> Self {
        Self {
            tables: HashMap::new(),
            phase_change: HashMap::new(),
        }
    }

    /// Registry with the bundled tables: `gete` (phase-change pair
    /// `gete_crystalline`/`gete_amorphous`), `au`, `sio2`, `tio2`, `tin`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        for (text, label) in [
            (GETE_AMORPHOUS_CSV, "builtin:gete_amorphous"),
            (GETE_CRYSTALLINE_CSV, "builtin:gete_crystalline"),
            (AU_CSV, "builtin:au"),
            (SIO2_CSV, "builtin:sio2"),
            (TIO2_CSV, "builtin:tio2"),
            (TIN_CSV, "builtin:tin"),
        ] {
            let table = DispersionTable::parse_csv(text, label)
                .unwrap_or_else(|e| panic!("bundled table {label} invalid: {e}"));
            reg.insert(table);
        }
        reg.register_phase_change("gete", "gete_crystalline", "gete_amorphous")
            .expect("bundled gete pair");
        reg
    }

    pub fn insert(&mut self, table: DispersionTable) {
        self.tables
            .insert(table.material_id.to_ascii_lowercase(), table);
    }

    /// Register `logical_id` as a phase-change material backed by two tables.
    pub fn register_phase_change(
        &mut self,
        logical_id: &str,
        crystalline_id: &str,
        amorphous_id: &str,
    ) -> Result<(), MaterialError> {
        for id in [crystalline_id, amorphous_id] {
            if !self.tables.contains_key(&id.to_ascii_lowercase()) {
                return Err(MaterialError::NotFound(id.to_string()));
            }
        }
        self.phase_change.insert(
            logical_id.to_ascii_lowercase(),
            (
                crystalline_id.to_ascii_lowercase(),
                amorphous_id.to_ascii_lowercase(),
            ),
        );
        Ok(())
    }

    pub fn table(&self, id: &str) -> Result<&DispersionTable, MaterialError> {
        self.tables
            .get(&id.to_ascii_lowercase())
            .ok_or_else(|| MaterialError::NotFound(id.to_string()))
    }

    pub fn is_phase_change(&self, id: &str) -> bool {
        self.phase_change.contains_key(&id.to_ascii_lowercase())
    }

    /// Permittivity of `id` at `wavelength_nm`. Phase-change ids require κ;
    /// fixed materials reject an explicit κ.
    pub fn permittivity_of(
        &self,
        id: &str,
        wavelength_nm: f64,
        kappa: Option<f64>,
    ) -> Result<ComplexPermittivity, MaterialError> {
        let key = id.to_ascii_lowercase();
        if key == "vacuum" || key == "air" {
            return match kappa {
                Some(_) => Err(MaterialError::KappaNotApplicable(id.to_string())),
                None => Ok(ComplexPermittivity {
                    eps: Complex64::new(1.0, 0.0),
                }),
            };
        }
        if let Some((c_id, a_id)) = self.phase_change.get(&key) {
            let kappa = kappa.ok_or_else(|| MaterialError::KappaRequired(id.to_string()))?;
            let eps_c = permittivity(self.table(c_id)?.index_at(wavelength_nm)?);
            let eps_a = permittivity(self.table(a_id)?.index_at(wavelength_nm)?);
            return mix_crystallinity(eps_c, eps_a, kappa);
        }
        if kappa.is_some() {
            return Err(MaterialError::KappaNotApplicable(id.to_string()));
        }
        Ok(permittivity(self.table(&key)?.index_at(wavelength_nm)?))
    }

    /// Refractive index of `id` at `wavelength_nm` (through the permittivity
    /// path so κ blending is honored).
    pub fn index_of(
        &self,
        id: &str,
        wavelength_nm: f64,
        kappa: Option<f64>,
    ) -> Result<ComplexIndex, MaterialError> {
        index_from_permittivity(self.permittivity_of(id, wavelength_nm, kappa)?)
    }

    /// Stable provenance digest over all registered tables (sorted by id).
    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut entries: Vec<(String, String)> = self
            .tables
            .iter()
            .map(|(id, t)| (id.clone(), t.content_hash.clone()))
            .collect();
        entries.sort();
        entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: f64, k: f64) -> ComplexIndex {
        ComplexIndex::new(n, k).unwrap()
    }

    #[test]
    fn permittivity_examples() {
        assert_eq!(permittivity(idx(1.0, 0.0)).eps, Complex64::new(1.0, 0.0));
        assert_eq!(permittivity(idx(2.0, 0.0)).eps, Complex64::new(4.0, 0.0));
        // (1+i)^2 = 2i
        let eps = permittivity(idx(1.0, 1.0)).eps;
        assert!((eps - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn index_from_permittivity_examples() {
        let i = index_from_permittivity(ComplexPermittivity {
            eps: Complex64::new(4.0, 0.0),
        })
        .unwrap();
        assert!((i.n - 2.0).abs() < 1e-15 && i.k.abs() < 1e-15);

        let i = index_from_permittivity(ComplexPermittivity {
            eps: Complex64::new(0.0, 2.0),
        })
        .unwrap();
        assert!((i.n - 1.0).abs() < 1e-12 && (i.k - 1.0).abs() < 1e-12);

        // Real negative permittivity has no passive root with n > 0.
        assert!(index_from_permittivity(ComplexPermittivity {
            eps: Complex64::new(-1.0, 0.0),
        })
        .is_err());
    }

    #[test]
    fn index_permittivity_round_trip() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let x = idx(0.05 + 8.0 * next(), 8.0 * next());
            let back = index_from_permittivity(permittivity(x)).unwrap();
            assert!((back.n - x.n).abs() / x.n < 1e-12);
            assert!((back.k - x.k).abs() <= 1e-12 * x.k.max(1.0));
        }
    }

    #[test]
    fn mixing_endpoints_and_midpoint() {
        let eps_c = ComplexPermittivity {
            eps: Complex64::new(16.0, 2.0),
        };
        let eps_a = ComplexPermittivity {
            eps: Complex64::new(20.0, 0.4),
        };
        assert_eq!(mix_crystallinity(eps_c, eps_a, 0.0).unwrap().eps, eps_a.eps);
        assert_eq!(mix_crystallinity(eps_c, eps_a, 1.0).unwrap().eps, eps_c.eps);
        let mid = mix_crystallinity(eps_c, eps_a, 0.5).unwrap().eps;
        assert!((mid - Complex64::new(18.0, 1.2)).norm() < 1e-14);
        assert!(mix_crystallinity(eps_c, eps_a, 1.5).is_err());
    }

    #[test]
    fn mixing_is_affine_in_kappa() {
        let eps_c = ComplexPermittivity {
            eps: Complex64::new(27.0, 32.0),
        };
        let eps_a = ComplexPermittivity {
            eps: Complex64::new(17.0, 7.5),
        };
        for i in 0..=20 {
            let kappa = i as f64 / 20.0;
            let got = mix_crystallinity(eps_c, eps_a, kappa).unwrap().eps;
            let want = eps_a.eps + kappa * (eps_c.eps - eps_a.eps);
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn parse_and_interpolate() {
        let csv = "# material=demo source=test\n800,1.5,0\n820,1.5,0\n";
        let t = DispersionTable::parse_csv(csv, "demo.csv").unwrap();
        assert_eq!(t.samples().len(), 2);
        assert_eq!(t.material_id(), "demo");
        // node exactness
        let i = t.index_at(800.0).unwrap();
        assert_eq!((i.n, i.k), (1.5, 0.0));
        // out of range
        assert!(t.index_at(799.0).is_err());
        assert!(t.index_at(821.0).is_err());
    }

    #[test]
    fn interpolation_is_linear() {
        let t = DispersionTable::from_samples(
            "lin",
            "test",
            vec![(800.0, idx(2.0, 0.2)), (820.0, idx(4.0, 0.6))],
        )
        .unwrap();
        let i = t.index_at(810.0).unwrap();
        assert!((i.n - 3.0).abs() < 1e-14);
        assert!((i.k - 0.4).abs() < 1e-14);
    }

    #[test]
    fn interpolated_k_stays_nonnegative() {
        let t = DispersionTable::from_samples(
            "pos",
            "test",
            vec![(700.0, idx(2.0, 0.0)), (800.0, idx(2.0, 1.0)), (900.0, idx(2.0, 0.0))],
        )
        .unwrap();
        for i in 0..=200 {
            let w = 700.0 + i as f64;
            assert!(t.index_at(w).unwrap().k >= 0.0);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad_order = "# material=x source=y\n820,1,0\n800,1,0\n";
        match DispersionTable::parse_csv(bad_order, "x.csv") {
            Err(MaterialError::NonMonotone { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected NonMonotone, got {other:?}"),
        }
        let bad_k = "# material=x source=y\n800,1,-0.5\n";
        match DispersionTable::parse_csv(bad_k, "x.csv") {
            Err(MaterialError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected Parse, got {other:?}"),
        }
        let bad_field = "# material=x source=y\n800,1\n";
        assert!(DispersionTable::parse_csv(bad_field, "x.csv").is_err());
    }

    #[test]
    fn builtin_gete_tables_span_band() {
        let reg = MaterialRegistry::builtin();
        for id in ["gete_crystalline", "gete_amorphous"] {
            let (lo, hi) = reg.table(id).unwrap().wavelength_range();
            assert!(lo <= 770.0 && hi >= 900.0, "{id} spans [{lo}, {hi}]");
        }
    }

    #[test]
    fn registry_kappa_rules() {
        let reg = MaterialRegistry::builtin();
        assert!(reg.permittivity_of("gete", 810.0, None).is_err());
        assert!(reg.permittivity_of("sio2", 810.0, Some(0.5)).is_err());
        assert!(reg.permittivity_of("gete", 810.0, Some(0.3)).is_ok());
        // endpoints match the phase tables
        let c = reg.permittivity_of("gete", 810.0, Some(1.0)).unwrap().eps;
        let c_direct = reg.permittivity_of("gete_crystalline", 810.0, None).unwrap().eps;
        assert!((c - c_direct).norm() < 1e-12);
        assert!(reg.permittivity_of("vacuum", 1.0e6, None).is_ok());
        assert!(reg.permittivity_of("unobtainium", 810.0, None).is_err());
    }
}
