//! Shared CLI plumbing: registry loading, output/manifest writing, exit
//! codes.

use homsim::design::DesignError;
use homsim::materials::{load_dispersion, MaterialError, MaterialRegistry};
use homsim::network::NetworkError;
use homsim::quantum::QuantumError;
use homsim::rcwa::RcwaError;
use homsim::thermal::ThermalError;
use homsim::tmm::TmmError;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Exit code 2: invalid input. Exit code 3: numerical solver failure.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Solver(_) => 3,
            Self::Io(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Validation(m) | Self::Solver(m) | Self::Io(m) => m,
        }
    }
}

impl From<MaterialError> for CliError {
    fn from(e: MaterialError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<TmmError> for CliError {
    fn from(e: TmmError) -> Self {
        match e {
            TmmError::Network(n) => n.into(),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<RcwaError> for CliError {
    fn from(e: RcwaError) -> Self {
        match e {
            RcwaError::Eigen { .. } => Self::Solver(e.to_string()),
            RcwaError::Network(n) => n.into(),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        // a non-passive or non-finite matrix out of a solver is a numerical
        // failure, not an input problem
        Self::Solver(e.to_string())
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        match e {
            QuantumError::NegativeProbability(_) => Self::Solver(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<ThermalError> for CliError {
    fn from(e: ThermalError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Tmm(t) => t.into(),
            DesignError::Rcwa(r) => r.into(),
            DesignError::Quantum(q) => q.into(),
            DesignError::Material(m) => m.into(),
            DesignError::Network(n) => n.into(),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let mut out = String::with_capacity(64);
    for b in hasher.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Builtin registry, optionally extended/overridden by every `*.csv` in a
/// directory (flag or `HOMSIM_MATERIAL_DIR`).
pub fn load_registry(material_dir: Option<&Path>) -> Result<MaterialRegistry, CliError> {
    let mut registry = MaterialRegistry::builtin();
    let dir = material_dir
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOMSIM_MATERIAL_DIR").map(PathBuf::from));
    if let Some(dir) = dir {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for path in paths {
            let table = load_dispersion(&path, "")?;
            registry.insert(table);
        }
        // rebind the phase-change pair in case either table was overridden
        registry
            .register_phase_change("gete", "gete_crystalline", "gete_amorphous")
            .map_err(CliError::from)?;
    }
    Ok(registry)
}

/// Record of one invocation, written next to file outputs.
#[derive(serde::Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub tool_version: String,
    pub timestamp_utc: String,
    pub inputs: Vec<ManifestInput>,
    pub outputs: Vec<String>,
}

#[derive(serde::Serialize)]
pub struct ManifestInput {
    pub path: String,
    pub sha256: String,
}

pub fn manifest_input(path: &Path) -> Result<ManifestInput, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(ManifestInput {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Write `data` to `--out` (plus a manifest sidecar) or stdout.
pub fn emit(
    out: Option<&Path>,
    data: &[u8],
    inputs: Vec<ManifestInput>,
    extra_outputs: Vec<String>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, data)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut outputs = vec![path.display().to_string()];
            outputs.extend(extra_outputs);
            let manifest = RunManifest {
                command_line: std::env::args().collect(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp_utc: chrono::Utc::now().to_rfc3339(),
                inputs,
                outputs,
            };
            let manifest_path = path.with_extension(format!(
                "{}manifest.json",
                path.extension()
                    .map(|e| format!("{}.", e.to_string_lossy()))
                    .unwrap_or_default()
            ));
            std::fs::write(
                &manifest_path,
                serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
            )
            .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
            Ok(())
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(data)?;
            Ok(())
        }
    }
}

/// 12 significant digits, the numeric format for all columnar output.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}
