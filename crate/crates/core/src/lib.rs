//! Simulation library for tunable two-photon Hong-Ou-Mandel interference at
//! phase-change metasurfaces.
//!
//! The library is organized around a flux-normalized complex 2×2 network
//! matrix ([`network::NetworkMatrix`]) that couples two free-space ports at
//! oblique incidence:
//!
//! * [`materials`] — tabulated complex optical constants and the GeTe
//!   crystallinity mixing model,
//! * [`tmm`] — transfer-matrix solver for planar layer stacks (structure B),
//! * [`rcwa`] — Fourier modal solver for 1D lamellar gratings (structure A),
//! * [`quantum`] — two-photon coincidence statistics: baseline, overlap
//!   integral, (anti-)coalescence, and temporal HOM traces,
//! * [`design`] — parameter sweeps and constrained contrast optimization,
//! * [`thermal`] — 1D transient joule-heating solve across the layered stack,
//! * [`presets`] — the two device geometries and the thermal switching pulse.
//!
//! Sign conventions: time dependence is `e^{-iωt}` throughout, so passive
//! media have `Im(ε) ≥ 0` and `k ≥ 0`.

pub mod design;
pub mod materials;
pub mod network;
pub mod presets;
pub mod quantum;
pub mod rcwa;
pub mod thermal;
pub mod tmm;

pub use materials::MaterialRegistry;
pub use network::NetworkMatrix;
