//! Command-line surface: configuration, subcommands, and report emission.

use boltzmix::collision::{entropy_production, weak_invariant_pairings};
use boltzmix::config::RunConfig;
use boltzmix::error::Result;
use boltzmix::experiments::{
    acoustic_limit_proxy_rate, acoustic_linearization_rate, default_fluctuations,
    hydrodynamic_residual_rate, k0_flatness, maxwellian_taylor_rate,
};
use boltzmix::field::{DistributionField, Frame};
use boltzmix::fluid::{
    acoustic_energy, acoustic_solve, euler_solve, symmetrizer_check, vorticity, AcousticState,
    FluidState,
};
use boltzmix::io;
use boltzmix::kernels::{
    degeneration_sweep, jacobian_cross, verify_cross_bound, verify_equal_bound,
    verify_folded_bound, verify_integrated_decay, verify_k_m1_bound, verify_singular_scaling,
    verify_translated_bound, verify_typical_bound, BoundReport, CutoffSpec, KernelFrame,
};
use boltzmix::linearized::{
    assemble_l, coercivity, kernel_basis, nu_field, pair_norm, OperatorFrame,
};
use boltzmix::species::{maxwellian, BiMaxwellParams};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "boltzmix", about = "Two-species unequal-mass Boltzmann machinery")]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Worker-thread cap (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Conservation and H-theorem diagnostics of the collision operator.
    Collide,
    /// Linearized-operator assembly: kernel annihilation, symmetry, coercivity.
    Spectrum,
    /// Integral-kernel decay-bound reports.
    Kernels,
    /// Compressible Euler run with trajectory export and invariants.
    Euler,
    /// Acoustic run with energy/vorticity invariants.
    Acoustic,
    /// All four convergence-rate studies.
    Limits,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool");
    }
    let code = match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let payload = serde_json::json!({
                "error": format!("{e}"),
                "exit_code": e.exit_code(),
            });
            let _ = std::fs::create_dir_all(&cli.out);
            let _ = io::write_json(&cli.out.join("error.json"), &payload);
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<bool> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    let name = match cli.command {
        Command::Collide => "collide",
        Command::Spectrum => "spectrum",
        Command::Kernels => "kernels",
        Command::Euler => "euler",
        Command::Acoustic => "acoustic",
        Command::Limits => "limits",
    };
    io::write_manifest(&cli.out, &config, name)?;
    match cli.command {
        Command::Collide => run_collide(&config, &cli.out),
        Command::Spectrum => run_spectrum(&config, &cli.out),
        Command::Kernels => run_kernels(&config, &cli.out),
        Command::Euler => run_euler(&config, &cli.out),
        Command::Acoustic => run_acoustic(&config, &cli.out),
        Command::Limits => run_limits(&config, &cli.out),
    }
}

/// Deterministic smooth positive test state for collision diagnostics.
fn perturbed_state(
    config: &RunConfig,
    grid: &boltzmix::grids::VelocityGrid<f64>,
    amplitude: f64,
    phase: f64,
) -> Result<DistributionField<f64>> {
    let species = config.species()?;
    let params = BiMaxwellParams::new(1.0, 1.0, [0.0; 3], 1.0)?;
    Ok(DistributionField::sample(Frame::Raw, grid, |s, v| {
        let m = species.mass(s);
        let base = maxwellian(&params.params(s), m, v);
        base * (1.0 + amplitude * (1.7 * v[0] + 0.9 * v[1] - 1.3 * v[2] + phase).sin())
    }))
}

fn run_collide(config: &RunConfig, out: &std::path::Path) -> Result<bool> {
    let species = config.species()?;
    let grid = config.velocity_grid()?;
    let angular = config.angular_rule()?;
    let state = perturbed_state(config, &grid, 0.2, 0.3)?;
    let conservation = weak_invariant_pairings(&state, &species, &grid, &angular)?;
    let max_defect = conservation
        .relative_defect
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));

    let equilibrium = BiMaxwellParams::new(1.0, 0.8, [0.1, 0.0, 0.0], 1.05)?.sample(&species, &grid);
    let s_eq = entropy_production(&equilibrium, &species, &grid, &angular)?;
    let mut s_perturbed = Vec::new();
    for k in 0..3 {
        let f = perturbed_state(config, &grid, 0.25, 0.8 * k as f64 + config.seed as f64)?;
        s_perturbed.push(entropy_production(&f, &species, &grid, &angular)?);
    }
    let pass = max_defect <= 1e-6 && s_eq <= 1e-8 && s_perturbed.iter().all(|&s| s < -1e-4);
    let report = serde_json::json!({
        "conservation": {
            "weak_pairings": conservation.weak_pairing.to_vec(),
            "relative_defects": conservation.relative_defect.to_vec(),
            "max_relative_defect": max_defect,
            "tolerance": 1e-6,
        },
        "h_theorem": {
            "equilibrium_production": s_eq,
            "perturbed_production": s_perturbed,
        },
        "pass": pass,
    });
    io::write_json(&out.join("collide_report.json"), &report)?;
    Ok(pass)
}

fn run_spectrum(config: &RunConfig, out: &std::path::Path) -> Result<bool> {
    let species = config.species()?;
    let grid = config.velocity_grid()?;
    let angular = config.angular_rule()?;
    let params = BiMaxwellParams::new(1.0, 1.0, [0.0; 3], 1.0)?;
    let matrix = assemble_l(&params, OperatorFrame::Local, &species, &grid, &angular)?;
    let basis = kernel_basis(&params, &species, &grid)?;

    let mut lx_ratios = Vec::new();
    for x in &basis.vectors {
        let lx = matrix.apply(x)?;
        lx_ratios.push(pair_norm(&lx, &grid)? / pair_norm(x, &grid)?);
    }
    let mut gram_defect = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((basis.gram[i][j] - target).abs());
        }
    }
    let nu = nu_field(&params, &species, &grid);
    let c0 = coercivity(&matrix, &basis, &nu, &grid)?;
    io::write_operator(&out.join("operator_local"), &matrix)?;
    let max_lx = lx_ratios.iter().fold(0.0f64, |a, &b| a.max(b));
    let pass = matrix.symmetry_defect() <= 1e-8 && c0 > 0.0 && max_lx <= 0.05;
    let report = serde_json::json!({
        "grid": {"extent": grid.extent(), "points_per_axis": grid.points_per_axis()},
        "lx_over_x_norms": lx_ratios,
        "gram_defect": gram_defect,
        "symmetry_defect": matrix.symmetry_defect(),
        "raw_assembly_asymmetry": matrix.raw_asymmetry,
        "coercivity": c0,
        "pass": pass,
    });
    io::write_json(&out.join("spectrum_report.json"), &report)?;
    Ok(pass)
}

fn run_kernels(config: &RunConfig, out: &std::path::Path) -> Result<bool> {
    let species = config.species()?;
    let cutoff = CutoffSpec::new(config.cutoff_m)?;
    let global = config.global_frame(1.0)?;
    let local = BiMaxwellParams::new(1.0, 1.1, [0.02, 0.0, 0.0], 1.05)?;
    let frame = KernelFrame::new(&species, global, local)?;
    let grid = config.velocity_grid()?;
    let angular = config.angular_rule()?;

    let mut reports: Vec<BoundReport> = Vec::new();
    reports.push(verify_k_m1_bound(&frame, &cutoff, 100_000));
    reports.push(verify_typical_bound(&frame, &cutoff, 10_000)?);
    let equal_masses = (species.m_a - species.m_b).abs() < 1e-12;
    if equal_masses {
        let note = serde_json::json!({
            "note": "equal masses: cross Hybrid study skipped (kernel degenerates to the equal-mass part)",
        });
        io::write_json(&out.join("cross_hybrid_skipped.json"), &note)?;
    } else {
        reports.push(verify_cross_bound(&frame, &cutoff, 100_000)?);
        reports.push(verify_folded_bound(&frame, &cutoff, 50_000)?);
    }
    reports.push(verify_equal_bound(&frame, &cutoff, 10_000)?);
    reports.push(verify_translated_bound(&frame, &cutoff, 10_000)?);
    reports.push(verify_integrated_decay(&frame, &cutoff, 0.3)?);
    reports.push(verify_singular_scaling(
        &frame,
        &grid,
        &angular,
        &[0.05, 0.1, 0.2, 0.4],
        0.2,
    )?);

    // Cross-species Jacobian finite-difference oracle.
    let mut jac_ok = true;
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let expected = (species.m_b - species.m_a) / species.mass_sum();
        for _ in 0..100 {
            let raw: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt().max(1e-9);
            let omega = [raw[0] / n, raw[1] / n, raw[2] / n];
            let det = jacobian_cross(omega, species.m_a, species.m_b)?;
            if (det - expected).abs() > 1e-12 {
                jac_ok = false;
            }
        }
    }

    let degeneration = degeneration_sweep(species.gamma, &cutoff, &[2.0, 1.5, 1.2, 1.05])?;
    let pass = reports.iter().all(|r| r.pass) && jac_ok;
    let summary = serde_json::json!({
        "bounds": reports,
        "jacobian_matches_closed_form": jac_ok,
        "degeneration_sweep_mass_to_vdecay": degeneration,
        "pass": pass,
    });
    io::write_json(&out.join("kernel_bounds.json"), &summary)?;
    Ok(pass)
}

fn run_euler(config: &RunConfig, out: &std::path::Path) -> Result<bool> {
    let species = config.species()?;
    let grid = config.spatial()?;
    let delta = config.study.delta_list[0];
    let fluct = default_fluctuations::<f64>();
    let init = FluidState::sample(&grid, |x| {
        let (sa, sb, u, th) = fluct(x);
        (
            1.0 + delta * sa,
            1.0 + delta * sb,
            [delta * u[0], delta * u[1], delta * u[2]],
            1.0 + delta * th,
        )
    });
    let traj = euler_solve(&init, &species, config.study.t_end, config.study.cfl, 8)?;
    io::write_trajectory_csv(&out.join("euler_trajectory.csv"), &traj)?;

    // Invariants: species masses conserved, deviation bounded linearly in δ.
    let dx = grid.spacing();
    let mass0 = (
        traj.states[0].n_a.iter().sum::<f64>() * dx,
        traj.states[0].n_b.iter().sum::<f64>() * dx,
    );
    let mass1 = (
        traj.final_state().n_a.iter().sum::<f64>() * dx,
        traj.final_state().n_b.iter().sum::<f64>() * dx,
    );
    let mass_drift =
        ((mass1.0 - mass0.0) / mass0.0).abs().max(((mass1.1 - mass0.1) / mass0.1).abs());
    let sym = symmetrizer_check(traj.final_state(), &species, 100, config.seed)?;
    let pass = mass_drift <= 1e-10 && sym.max_asymmetry <= 1e-12 && sym.min_eigenvalue_a0 > 0.0;
    let report = serde_json::json!({
        "delta": delta,
        "mass_drift": mass_drift,
        "max_deviation_over_delta": traj.max_deviation / delta,
        "symmetrizer": {
            "max_asymmetry": sym.max_asymmetry,
            "min_eigenvalue_a0": sym.min_eigenvalue_a0,
        },
        "pass": pass,
    });
    io::write_json(&out.join("euler_report.json"), &report)?;
    Ok(pass)
}

fn run_acoustic(config: &RunConfig, out: &std::path::Path) -> Result<bool> {
    let species = config.species()?;
    let grid = config.spatial()?;
    let fluct = default_fluctuations::<f64>();
    let init = AcousticState::sample(&grid, fluct);
    let e0 = acoustic_energy(&init, &species, 0);
    let e1_0 = acoustic_energy(&init, &species, 1);
    let w0 = vorticity(&init);
    let mut max_energy_drift = 0.0f64;
    let mut max_vorticity_drift = 0.0f64;
    let times: Vec<f64> = (1..=10).map(|i| config.study.t_end * i as f64).collect();
    let mut rows = String::from("t,x,sigma_A,sigma_B,u1,u2,u3,theta\n");
    for &t in &times {
        let state = acoustic_solve(&init, &species, t)?;
        let e = acoustic_energy(&state, &species, 0);
        let e1 = acoustic_energy(&state, &species, 1);
        max_energy_drift = max_energy_drift
            .max(((e - e0) / e0).abs())
            .max(((e1 - e1_0) / e1_0.max(1e-300)).abs());
        let w = vorticity(&state);
        for k in 0..3 {
            for c in 0..grid.len() {
                max_vorticity_drift = max_vorticity_drift.max((w[k][c] - w0[k][c]).abs());
            }
        }
        for c in 0..grid.len() {
            let x = boltzmix::fluid::cell_coord(&grid, c);
            rows.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                t,
                x[0],
                state.sigma_a[c],
                state.sigma_b[c],
                state.u[0][c],
                state.u[1][c],
                state.u[2][c],
                state.theta[c]
            ));
        }
    }
    std::fs::write(out.join("acoustic_trajectory.csv"), rows)?;
    let pass = max_energy_drift <= 1e-10 && max_vorticity_drift <= 1e-10;
    let report = serde_json::json!({
        "energy_order0_initial": e0,
        "max_relative_energy_drift": max_energy_drift,
        "max_vorticity_drift": max_vorticity_drift,
        "wave_speed_squared": boltzmix::fluid::acoustic_speed_sq(&species),
        "pass": pass,
    });
    io::write_json(&out.join("acoustic_report.json"), &report)?;
    Ok(pass)
}

fn run_limits(config: &RunConfig, out: &std::path::Path) -> Result<bool> {
    let species = config.species()?;
    let t_end = config.study.t_end;
    let cfl = config.study.cfl;
    let deltas = &config.study.delta_list;
    let eps = &config.study.epsilon_list;

    let lin = acoustic_linearization_rate(deltas, &species, config.spatial_grid.cells, t_end, cfl)?;
    let vgrid_norms = boltzmix::grids::VelocityGrid::new(config.resolved_extent(), 16)?;
    let taylor = maxwellian_taylor_rate(
        deltas,
        &species,
        config.spatial_grid.cells,
        (config.spatial_grid.cells / 16).max(1),
        &vgrid_norms,
        t_end,
        cfl,
    )?;

    // Kinetic pipelines run at reduced desk resolution.
    let vgrid = boltzmix::grids::VelocityGrid::new(6.0, 12)?;
    let angular = boltzmix::grids::lebedev_like_rule(4)?;
    let proxy_eps = [0.04, 0.01, 0.0025];
    let proxy = acoustic_limit_proxy_rate(
        &proxy_eps,
        0.01,
        &[0.4, 0.2, 0.1, 0.05, 0.02],
        &species,
        128,
        16,
        &vgrid,
        &angular,
        t_end,
        cfl,
    )?;
    let residual = hydrodynamic_residual_rate(
        eps,
        deltas[0],
        &species,
        128,
        16,
        &vgrid,
        &angular,
        0.2,
        cfl,
    )?;

    let reports = [&lin, &taylor, &proxy.report, &residual.report];
    io::write_rate_csv(&out.join("rate_studies.csv"), &reports)?;
    let pass = reports.iter().all(|r| r.pass)
        && proxy.minimum_near_sqrt_eps
        && residual.order_separation > 10.0
        && k0_flatness(&residual.residuals).abs() < 0.2;
    let summary = serde_json::json!({
        "acoustic_linearization": lin,
        "maxwellian_taylor": taylor,
        "acoustic_limit_proxy": proxy.report,
        "proxy_delta_sweep": proxy.delta_sweep,
        "proxy_argmin_delta": proxy.argmin_delta,
        "proxy_minimum_near_sqrt_eps": proxy.minimum_near_sqrt_eps,
        "hydrodynamic_residual": residual.report,
        "residual_triples_eps_k0_k1": residual.residuals,
        "residual_order_separation": residual.order_separation,
        "pass": pass,
    });
    io::write_json(&out.join("limits_summary.json"), &summary)?;
    Ok(pass)
}
