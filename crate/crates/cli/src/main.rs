//! Command-line front end: every solver operation as a subcommand emitting
//! plot-ready CSV or JSON.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical solver error.

mod common;

use clap::{Args, Parser, Subcommand, ValueEnum};
use common::{emit, load_registry, manifest_input, sig12, CliError, ManifestInput};
use homsim::design::{self, FreeParameter, Geometry, ParamSet, Parameter, SweepAxis, SweepSpec};
use homsim::network::NetworkMatrix;
use homsim::presets;
use homsim::quantum;
use homsim::rcwa::Grating1D;
use homsim::thermal::{self, BoundaryCondition, GridSpec};
use homsim::tmm::LayerStack;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "homsim",
    version,
    about = "Two-photon interference at phase-change metasurfaces: solvers, sweeps, and thermal transients"
)]
struct Cli {
    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write output to this file (a .manifest.json sidecar is added)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory with extra material CSVs (env: HOMSIM_MATERIAL_DIR)
    #[arg(long, global = true)]
    material_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GeometryArgs {
    /// Built-in geometry: structure-A or structure-B
    #[arg(long, conflicts_with_all = ["stack", "grating"])]
    preset: Option<String>,
    /// Layer-stack JSON file
    #[arg(long, conflicts_with = "grating")]
    stack: Option<PathBuf>,
    /// Grating JSON file
    #[arg(long)]
    grating: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    /// Wavelength in nm
    #[arg(long, default_value_t = presets::DESIGN_WAVELENGTH_NM)]
    wavelength: f64,
    /// Port angle in degrees
    #[arg(long, default_value_t = presets::PORT_ANGLE_DEG)]
    angle: f64,
    /// GeTe crystallinity (0 = amorphous, 1 = crystalline)
    #[arg(long)]
    kappa: Option<f64>,
    /// Fourier harmonics for grating solves (odd)
    #[arg(long, default_value_t = homsim::rcwa::DEFAULT_HARMONICS)]
    harmonics: usize,
    /// Override the grating period in nm
    #[arg(long)]
    period: Option<f64>,
    /// Override the lamellar filling ratio
    #[arg(long)]
    filling_ratio: Option<f64>,
}

impl PointArgs {
    fn params(&self) -> ParamSet {
        let mut p = ParamSet {
            wavelength_nm: self.wavelength,
            angle_deg: self.angle,
            n_harmonics: self.harmonics,
            ..ParamSet::default()
        };
        p.crystallinity = self.kappa;
        p.filling_ratio = self.filling_ratio;
        p
    }
}

#[derive(Subcommand)]
enum Command {
    /// Interpolate material optical constants
    Material {
        /// Material id (e.g. gete, gete_amorphous, au, sio2, tio2, tin)
        #[arg(long)]
        id: String,
        /// Single wavelength in nm
        #[arg(long)]
        wavelength: Option<f64>,
        #[arg(long, default_value_t = 770.0)]
        min: f64,
        #[arg(long, default_value_t = 900.0)]
        max: f64,
        #[arg(long, default_value_t = 131)]
        points: usize,
        /// Crystallinity for phase-change ids
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Compute the 2x2 network matrix of a geometry
    Network {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Coalescence / baseline of a geometry or a saved matrix
    Coalescence {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        point: PointArgs,
        /// NetworkMatrix JSON file (as emitted by `network`)
        #[arg(long, conflicts_with_all = ["preset", "stack", "grating"])]
        matrix: Option<PathBuf>,
    },
    /// HOM coincidence trace vs relative input delay
    Hom {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, conflicts_with_all = ["preset", "stack", "grating"])]
        matrix: Option<PathBuf>,
        /// Envelope bandwidth Δω/2π in THz
        #[arg(long, default_value_t = 2.0)]
        bandwidth_thz: f64,
        /// Delay range: trace spans ±range
        #[arg(long, default_value_t = 3.0)]
        range_ps: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        /// fig5a / fig5b: preset trace families over crystallinity
        #[arg(long)]
        replica: Option<String>,
    },
    /// Dense 2D parameter sweep (CSV + JSON metadata sidecar)
    Sweep {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// fig2a/fig2b/fig3a/fig3b/fig4a/fig4b
        #[arg(long)]
        replica: Option<String>,
        /// axis as `parameter:min:max:steps`
        #[arg(long)]
        axis1: Option<String>,
        #[arg(long)]
        axis2: Option<String>,
        /// Fixed parameters `name=value,name=value`
        #[arg(long)]
        fixed: Option<String>,
        #[arg(long, default_value_t = homsim::rcwa::DEFAULT_HARMONICS)]
        harmonics: usize,
    },
    /// Maximize switching contrast under a baseline constraint
    Optimize {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Free parameter as `parameter:lo:hi` (repeatable)
        #[arg(long, required = true)]
        free: Vec<String>,
        /// Minimum acceptable baseline in both phases
        /// (default 1/12 for structure-A, 1/16 for structure-B)
        #[arg(long)]
        baseline_min: Option<f64>,
    },
    /// 1D transient joule-heating solve (CSV temperature field)
    Thermal {
        /// Built-in thermal preset: structure-B (alias: --replica fig6)
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        replica: Option<String>,
        /// Thermal stack CSV (material,thickness_nm,k_W_mK,rho_c_J_m3K,is_heater)
        #[arg(long)]
        stack_csv: Option<PathBuf>,
        /// Pulse CSV (time_s,power_W_m2)
        #[arg(long)]
        pulse_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        duration_us: f64,
        #[arg(long, default_value_t = 4.0)]
        max_dz_nm: f64,
        #[arg(long, default_value_t = 1.0)]
        dt_ns: f64,
        #[arg(long, default_value_t = 2)]
        store_every: usize,
        /// bottom boundary: fixed | insulated
        #[arg(long, default_value = "fixed")]
        boundary_bottom: String,
        /// top boundary: fixed | insulated
        #[arg(long, default_value = "insulated")]
        boundary_top: String,
        #[arg(long, default_value_t = presets::AMBIENT_K)]
        ambient_k: f64,
        /// Probe one point `depth_nm:time_s` instead of the full field
        #[arg(long)]
        probe: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

fn resolve_geometry(
    args: &GeometryArgs,
    point: &PointArgs,
) -> Result<(Geometry, Vec<ManifestInput>), CliError> {
    let mut inputs = Vec::new();
    let mut geometry = if let Some(name) = &args.preset {
        Geometry::from_name(name)
            .ok_or_else(|| CliError::Validation(format!("unknown preset `{name}`")))?
    } else if let Some(path) = &args.stack {
        inputs.push(manifest_input(path)?);
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Geometry::Stack(LayerStack::from_json(&text)?)
    } else if let Some(path) = &args.grating {
        inputs.push(manifest_input(path)?);
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Geometry::Grating(Grating1D::from_json(&text)?)
    } else {
        return Err(CliError::Validation(
            "specify a geometry: --preset, --stack, or --grating".into(),
        ));
    };
    if let Some(period) = point.period {
        geometry = match geometry {
            Geometry::StructureA => {
                let mut g = presets::structure_a(point.kappa.unwrap_or(1.0));
                g.period_nm = period;
                Geometry::Grating(g)
            }
            Geometry::Grating(mut g) => {
                g.period_nm = period;
                Geometry::Grating(g)
            }
            _ => {
                return Err(CliError::Validation(
                    "--period only applies to grating geometries".into(),
                ))
            }
        };
    }
    Ok((geometry, inputs))
}

fn network_json(matrix: &NetworkMatrix) -> serde_json::Value {
    let mut value = serde_json::to_value(matrix).expect("matrix serializes");
    let (sigma_max, sigma_min) = matrix.singular_values();
    let map = value.as_object_mut().expect("object");
    map.insert("passive".into(), serde_json::json!(sigma_max <= 1.0 + 1e-9));
    map.insert("sigma_max".into(), serde_json::json!(sigma_max));
    map.insert("sigma_min".into(), serde_json::json!(sigma_min));
    value
}

fn matrix_from_file(path: &PathBuf) -> Result<(NetworkMatrix, ManifestInput), CliError> {
    let input = manifest_input(path)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let parsed: NetworkMatrix = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    // files are untrusted: re-validate passivity and finiteness
    let matrix = NetworkMatrix::new(
        parsed.entries(),
        parsed.wavelength_nm,
        parsed.angle_deg,
        parsed.metadata.clone(),
    )?;
    Ok((matrix, input))
}

fn parse_axis(text: &str) -> Result<SweepAxis, CliError> {
    // parameter may itself contain a colon (layer_thickness:<i>), so split
    // the three numeric fields off the right
    let parts: Vec<&str> = text.rsplitn(4, ':').collect();
    if parts.len() != 4 {
        return Err(CliError::Validation(format!(
            "axis `{text}` must be parameter:min:max:steps"
        )));
    }
    let parameter =
        Parameter::from_str(parts[3]).map_err(|e| CliError::Validation(e.to_string()))?;
    let num = |s: &str| -> Result<f64, CliError> {
        s.parse()
            .map_err(|_| CliError::Validation(format!("axis `{text}`: bad number `{s}`")))
    };
    let steps: usize = parts[0]
        .parse()
        .map_err(|_| CliError::Validation(format!("axis `{text}`: bad step count")))?;
    Ok(SweepAxis {
        parameter,
        min: num(parts[2])?,
        max: num(parts[1])?,
        steps,
    })
}

fn parse_fixed(text: &str) -> Result<Vec<(Parameter, f64)>, CliError> {
    let mut out = Vec::new();
    for piece in text.split(',').filter(|s| !s.is_empty()) {
        let (name, value) = piece
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("fixed `{piece}` must be name=value")))?;
        let parameter =
            Parameter::from_str(name.trim()).map_err(|e| CliError::Validation(e.to_string()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("fixed `{piece}`: bad number")))?;
        out.push((parameter, value));
    }
    Ok(out)
}

fn boundary_of(text: &str) -> Result<BoundaryCondition, CliError> {
    match text {
        "fixed" | "fixed-ambient" => Ok(BoundaryCondition::FixedAmbient),
        "insulated" => Ok(BoundaryCondition::Insulated),
        other => Err(CliError::Validation(format!(
            "boundary `{other}` must be fixed or insulated"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let registry = load_registry(cli.material_dir.as_deref())?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Material {
            id,
            wavelength,
            min,
            max,
            points,
            kappa,
            format,
        } => {
            let rows: Vec<f64> = match wavelength {
                Some(w) => vec![w],
                None => {
                    if points < 2 || !(min < max) {
                        return Err(CliError::Validation(
                            "need points >= 2 and min < max".into(),
                        ));
                    }
                    (0..points)
                        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
                        .collect()
                }
            };
            let mut table = Vec::new();
            for w in rows {
                let idx = registry.index_of(&id, w, kappa)?;
                let eps = registry.permittivity_of(&id, w, kappa)?;
                table.push((w, idx.n, idx.k, eps.eps.re, eps.eps.im));
            }
            let data = match format {
                Format::Csv => {
                    let mut s = String::from("wavelength_nm,n,k,eps_re,eps_im\n");
                    for (w, n, k, er, ei) in &table {
                        s += &format!(
                            "{},{},{},{},{}\n",
                            sig12(*w),
                            sig12(*n),
                            sig12(*k),
                            sig12(*er),
                            sig12(*ei)
                        );
                    }
                    s
                }
                Format::Json => {
                    let items: Vec<serde_json::Value> = table
                        .iter()
                        .map(|(w, n, k, er, ei)| {
                            serde_json::json!({
                                "wavelength_nm": w, "n": n, "k": k,
                                "eps_re": er, "eps_im": ei
                            })
                        })
                        .collect();
                    format!("{}\n", serde_json::to_string_pretty(&items).expect("json"))
                }
            };
            emit(out, data.as_bytes(), vec![], vec![])
        }

        Command::Network { geometry, point } => {
            let (geometry, inputs) = resolve_geometry(&geometry, &point)?;
            let matrix = design::evaluate(&geometry, &registry, &point.params())?;
            let value = network_json(&matrix);
            let data = format!("{}\n", serde_json::to_string_pretty(&value).expect("json"));
            emit(out, data.as_bytes(), inputs, vec![])
        }

        Command::Coalescence {
            geometry,
            point,
            matrix,
        } => {
            let (matrix, inputs) = match matrix {
                Some(path) => {
                    let (m, input) = matrix_from_file(&path)?;
                    (m, vec![input])
                }
                None => {
                    let (geometry, inputs) = resolve_geometry(&geometry, &point)?;
                    (
                        design::evaluate(&geometry, &registry, &point.params())?,
                        inputs,
                    )
                }
            };
            let coalescence = quantum::coalescence(&matrix)?;
            let baseline = quantum::baseline(&matrix);
            let total_phase = quantum::total_phase(&matrix).ok();
            let value = serde_json::json!({
                "coalescence": coalescence,
                "baseline": baseline,
                "total_phase": total_phase,
                "wavelength_nm": matrix.wavelength_nm,
                "angle_deg": matrix.angle_deg,
            });
            let data = format!("{}\n", serde_json::to_string_pretty(&value).expect("json"));
            emit(out, data.as_bytes(), inputs, vec![])
        }

        Command::Hom {
            geometry,
            point,
            matrix,
            bandwidth_thz,
            range_ps,
            points,
            replica,
        } => {
            if !(bandwidth_thz > 0.0) || !(range_ps > 0.0) || points < 2 {
                return Err(CliError::Validation(
                    "need bandwidth > 0, range > 0, points >= 2".into(),
                ));
            }
            let bandwidth = 2.0 * std::f64::consts::PI * bandwidth_thz * 1e12;
            let delays: Vec<f64> = (0..points)
                .map(|i| (-range_ps + 2.0 * range_ps * i as f64 / (points - 1) as f64) * 1e-12)
                .collect();
            let (columns, inputs): (Vec<(String, NetworkMatrix)>, Vec<ManifestInput>) =
                if let Some(name) = replica {
                    let geometry = match name.to_ascii_lowercase().as_str() {
                        "fig5a" => Geometry::StructureA,
                        "fig5b" => Geometry::StructureB,
                        other => {
                            return Err(CliError::Validation(format!(
                                "unknown hom replica `{other}` (fig5a, fig5b)"
                            )))
                        }
                    };
                    let mut cols = Vec::new();
                    for kappa in [0.0, 0.25, 0.5, 0.75, 1.0] {
                        let mut p = point.params();
                        p.crystallinity = Some(kappa);
                        cols.push((
                            format!("kappa_{kappa:.2}"),
                            design::evaluate(&geometry, &registry, &p)?,
                        ));
                    }
                    (cols, vec![])
                } else if let Some(path) = matrix {
                    let (m, input) = matrix_from_file(&path)?;
                    (vec![("counts".to_string(), m)], vec![input])
                } else {
                    let (geometry, inputs) = resolve_geometry(&geometry, &point)?;
                    let m = design::evaluate(&geometry, &registry, &point.params())?;
                    (vec![("counts".to_string(), m)], inputs)
                };
            let traces: Vec<(String, quantum::HomTrace)> = columns
                .iter()
                .map(|(name, m)| {
                    quantum::hom_trace_gaussian(m, bandwidth, &delays).map(|t| (name.clone(), t))
                })
                .collect::<Result<_, _>>()?;
            let mut data = String::from("delay_ps");
            for (name, _) in &traces {
                data += &format!(",{name}");
            }
            data += "\n";
            for (i, &d) in delays.iter().enumerate() {
                data += &sig12(d * 1e12);
                for (_, trace) in &traces {
                    data += &format!(",{}", sig12(trace.counts[i]));
                }
                data += "\n";
            }
            emit(out, data.as_bytes(), inputs, vec![])
        }

        Command::Sweep {
            geometry,
            replica,
            axis1,
            axis2,
            fixed,
            harmonics,
        } => {
            let (spec, inputs) = if let Some(name) = replica {
                let spec = design::replica_sweep(&name).ok_or_else(|| {
                    CliError::Validation(format!("unknown sweep replica `{name}` (fig2a..fig4b)"))
                })?;
                (spec, vec![])
            } else {
                let point = PointArgs {
                    wavelength: presets::DESIGN_WAVELENGTH_NM,
                    angle: presets::PORT_ANGLE_DEG,
                    kappa: None,
                    harmonics,
                    period: None,
                    filling_ratio: None,
                };
                let (geometry, inputs) = resolve_geometry(&geometry, &point)?;
                let axis1 = parse_axis(&axis1.ok_or_else(|| {
                    CliError::Validation("need --axis1 (or --replica)".into())
                })?)?;
                let axis2 = parse_axis(&axis2.ok_or_else(|| {
                    CliError::Validation("need --axis2 (or --replica)".into())
                })?)?;
                let fixed = fixed
                    .as_deref()
                    .map(parse_fixed)
                    .transpose()?
                    .unwrap_or_default();
                (
                    SweepSpec {
                        geometry,
                        axis1,
                        axis2,
                        fixed,
                        n_harmonics: harmonics,
                    },
                    inputs,
                )
            };
            let result = design::run_sweep(&spec, &registry)?;
            let mut data = Vec::new();
            result.write_csv(&mut data)?;
            let mut extra = Vec::new();
            if let Some(path) = out {
                let meta_path = format!("{}.meta.json", path.display());
                std::fs::write(&meta_path, result.metadata_json())
                    .map_err(|e| CliError::Io(format!("{meta_path}: {e}")))?;
                extra.push(meta_path);
            }
            emit(out, &data, inputs, extra)
        }

        Command::Optimize {
            geometry,
            point,
            free,
            baseline_min,
        } => {
            let (geometry, inputs) = resolve_geometry(&geometry, &point)?;
            let baseline_min = baseline_min.unwrap_or(match geometry {
                Geometry::StructureA => presets::BASELINE_MIN_A,
                Geometry::StructureB => presets::BASELINE_MIN_B,
                _ => 0.0,
            });
            let free: Vec<FreeParameter> = free
                .iter()
                .map(|text| {
                    let parts: Vec<&str> = text.rsplitn(3, ':').collect();
                    if parts.len() != 3 {
                        return Err(CliError::Validation(format!(
                            "free `{text}` must be parameter:lo:hi"
                        )));
                    }
                    let parameter = Parameter::from_str(parts[2])
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    let num = |s: &str| -> Result<f64, CliError> {
                        s.parse()
                            .map_err(|_| CliError::Validation(format!("free `{text}`: bad number")))
                    };
                    Ok(FreeParameter {
                        parameter,
                        lo: num(parts[1])?,
                        hi: num(parts[0])?,
                    })
                })
                .collect::<Result<_, _>>()?;
            let result = design::optimize_contrast(
                &geometry,
                &registry,
                &free,
                &point.params(),
                baseline_min,
            )?;
            let data = format!("{}\n", serde_json::to_string_pretty(&result).expect("json"));
            emit(out, data.as_bytes(), inputs, vec![])
        }

        Command::Thermal {
            preset,
            replica,
            stack_csv,
            pulse_csv,
            duration_us,
            max_dz_nm,
            dt_ns,
            store_every,
            boundary_bottom,
            boundary_top,
            ambient_k,
            probe,
        } => {
            let mut inputs = Vec::new();
            let use_preset = match (&preset, &replica) {
                (Some(name), _) => {
                    if !name.eq_ignore_ascii_case("structure-b")
                        && !name.eq_ignore_ascii_case("structure_b")
                    {
                        return Err(CliError::Validation(format!(
                            "unknown thermal preset `{name}` (structure-B)"
                        )));
                    }
                    true
                }
                (None, Some(name)) => {
                    if !name.eq_ignore_ascii_case("fig6") {
                        return Err(CliError::Validation(format!(
                            "unknown thermal replica `{name}` (fig6)"
                        )));
                    }
                    true
                }
                (None, None) => false,
            };
            let (stack, pulse) = if use_preset {
                (
                    presets::thermal_structure_b(),
                    presets::thermal_pulse_500ns(),
                )
            } else {
                let stack_path = stack_csv.ok_or_else(|| {
                    CliError::Validation("need --stack-csv and --pulse-csv (or --preset)".into())
                })?;
                let pulse_path = pulse_csv
                    .ok_or_else(|| CliError::Validation("need --pulse-csv".into()))?;
                inputs.push(manifest_input(&stack_path)?);
                inputs.push(manifest_input(&pulse_path)?);
                (
                    thermal::load_stack_csv(&stack_path)?,
                    thermal::load_pulse_csv(&pulse_path)?,
                )
            };
            let grid = GridSpec {
                max_dz_nm,
                dt_s: dt_ns * 1e-9,
                store_every,
            };
            let field = thermal::solve_heat_1d(
                &stack,
                &pulse,
                duration_us * 1e-6,
                (boundary_of(&boundary_bottom)?, boundary_of(&boundary_top)?),
                grid,
                ambient_k,
            )?;
            if let Some(spec) = probe {
                let (depth, time) = spec.split_once(':').ok_or_else(|| {
                    CliError::Validation("--probe must be depth_nm:time_s".into())
                })?;
                let depth: f64 = depth
                    .parse()
                    .map_err(|_| CliError::Validation("bad probe depth".into()))?;
                let time: f64 = time
                    .parse()
                    .map_err(|_| CliError::Validation("bad probe time".into()))?;
                let value = field.probe(depth, time)?;
                let data = format!(
                    "{}\n",
                    serde_json::json!({
                        "depth_nm": depth,
                        "time_s": time,
                        "temperature_k": value,
                    })
                );
                return emit(out, data.as_bytes(), inputs, vec![]);
            }
            let mut data = Vec::new();
            field.write_csv(&mut data)?;
            emit(out, &data, inputs, vec![])
        }
    }
}
