//! Persistence formats: flat little-endian binaries with JSON/text sidecars,
//! CSV study outputs, and the run manifest.

use crate::config::RunConfig;
use crate::error::Result;
use crate::experiments::RateReport;
use crate::field::DistributionField;
use crate::fluid::FluidTrajectory;
use crate::grids::VelocityGrid;
use crate::linearized::OperatorMatrix;
use crate::species::Species;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes a distribution pair as a flat little-endian f64 binary (all A
/// nodes, then all B nodes) plus a JSON sidecar with grid metadata. Round
/// trips are bit-exact.
pub fn write_field_snapshot(
    base: &Path,
    field: &DistributionField<f64>,
    grid: &VelocityGrid<f64>,
) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 * field.nodes());
    for s in Species::BOTH {
        for &x in field.species(s) {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(base.with_extension("f64"), &bytes)?;
    let sidecar = serde_json::json!({
        "format": "flat little-endian f64, species-major (A nodes then B nodes)",
        "frame": field.frame().name(),
        "grid": {"extent": grid.extent(), "points_per_axis": grid.points_per_axis()},
        "values_per_species": field.nodes(),
    });
    fs::write(base.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_field_snapshot(base: &Path, frame: crate::field::Frame) -> Result<DistributionField<f64>> {
    let bytes = fs::read(base.with_extension("f64"))?;
    let mut values = Vec::with_capacity(bytes.len() / 8);
    for chunk in bytes.chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok(DistributionField::from_flat(frame, &values))
}

/// Exports an operator matrix as a flat little-endian f64 binary (row major)
/// with a text sidecar describing dimensions, frame, and state.
pub fn write_operator(base: &Path, matrix: &OperatorMatrix<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * matrix.data().len());
    for &x in matrix.data() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(base.with_extension("f64"), &bytes)?;
    let side = format!(
        "rows {size}\ncols {size}\nlayout row-major little-endian f64, species-major indexing (A nodes then B nodes)\n\
         frame {frame}\ngrid_extent {r}\ngrid_points_per_axis {n}\n\
         state n_a {na}\nstate n_b {nb}\nstate u {u0} {u1} {u2}\nstate theta {th}\n\
         raw_asymmetry {asym:e}\n",
        size = matrix.size(),
        frame = matrix.frame_name,
        r = matrix.grid_extent,
        n = matrix.grid_points,
        na = matrix.state.n_a,
        nb = matrix.state.n_b,
        u0 = matrix.state.bulk_velocity[0],
        u1 = matrix.state.bulk_velocity[1],
        u2 = matrix.state.bulk_velocity[2],
        th = matrix.state.temperature,
        asym = matrix.raw_asymmetry,
    );
    fs::write(base.with_extension("txt"), side)?;
    Ok(())
}

/// Rate reports as the study CSV: `study,param,error_L2,error_sup,runtime_s`.
pub fn write_rate_csv(path: &Path, reports: &[&RateReport]) -> Result<()> {
    let mut out = String::from("study,param,error_L2,error_sup,runtime_s\n");
    for rep in reports {
        for (i, p) in rep.params.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.3}\n",
                rep.study, p, rep.errors_l2[i], rep.errors_sup[i], rep.runtimes_s[i]
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Trajectory CSV: `t,x,n_A,n_B,u1,u2,u3,theta` (slab states; x is the cell
/// center along the varying axis).
pub fn write_trajectory_csv(path: &Path, traj: &FluidTrajectory<f64>) -> Result<()> {
    let mut out = String::from("t,x,n_A,n_B,u1,u2,u3,theta\n");
    for (t, state) in traj.times.iter().zip(&traj.states) {
        for c in 0..state.grid.len() {
            let x = crate::fluid::cell_coord(&state.grid, c);
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                t, x[0], state.n_a[c], state.n_b[c], state.u[0][c], state.u[1][c], state.u[2][c],
                state.theta[c]
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `manifest.json`: the configuration hash, the fully resolved
/// configuration (defaults echoed), and the crate version.
pub fn write_manifest(dir: &Path, config: &RunConfig, subcommand: &str) -> Result<()> {
    let resolved = config.resolved_json()?;
    let canonical = serde_json::to_string(&resolved)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let hash = hasher.finalize();
    let manifest = serde_json::json!({
        "subcommand": subcommand,
        "config_sha256": format!("{hash:x}"),
        "resolved_config": resolved,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
    });
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join("manifest.json"))?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
