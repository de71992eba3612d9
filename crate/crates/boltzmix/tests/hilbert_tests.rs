//! Hilbert-expansion oracles: compatibility ⇔ Euler, the controlled-violation
//! check, corrector orthogonality, weighted frames, and the residual ladder
//! at toy resolution.

use boltzmix::field::{DistributionField, Frame};
use boltzmix::fluid::{euler_rhs_inviscid, euler_solve, FluidState};
use boltzmix::grids::{lebedev_like_rule, SpatialGrid, VelocityGrid};
use boltzmix::hilbert::*;
use boltzmix::linearized::{kernel_basis, pair_inner, pair_norm};
use boltzmix::species::{maxwellian, BiMaxwellParams, GlobalFrame, Species, SpeciesPair};

fn species_12() -> SpeciesPair<f64> {
    SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap()
}

fn slab_state(grid: &SpatialGrid<f64>, delta: f64) -> FluidState<f64> {
    FluidState::sample(grid, |x| {
        let s = x[0];
        (
            1.0 + delta * 0.4 * s.cos(),
            1.0 + delta * 0.3 * s.sin(),
            [delta * 0.3 * s.sin(), delta * 0.1 * s.cos(), 0.0],
            1.0 + delta * 0.3 * (s + 0.5).cos(),
        )
    })
}

#[test]
fn f0_recovers_fluid_moments_and_positivity() {
    let species = species_12();
    let sgrid = SpatialGrid::new(2.0 * std::f64::consts::PI, 8, 1).unwrap();
    let vgrid = VelocityGrid::new(7.0, 24).unwrap();
    let state = slab_state(&sgrid, 0.1);
    let f0 = build_f0(&state, &species, &vgrid).unwrap();
    for (c, field) in f0.iter().enumerate() {
        field.validate_raw().unwrap();
        let m = boltzmix::species::moments(field, &species, &vgrid).unwrap();
        assert!((m.number_density[0] - state.n_a[c]).abs() < 1e-6);
        assert!((m.number_density[1] - state.n_b[c]).abs() < 1e-6);
        assert!((m.temperature - state.theta[c]).abs() < 1e-5);
        assert!((m.bulk_velocity[0] - state.u[0][c]).abs() < 1e-7);
    }
}

#[test]
fn r0_vanishes_at_constant_equilibrium() {
    let species = species_12();
    let sgrid = SpatialGrid::new(2.0 * std::f64::consts::PI, 8, 1).unwrap();
    let vgrid = VelocityGrid::new(5.0, 10).unwrap();
    let state = FluidState::constant(&sgrid, 1.0, 1.0, [0.0; 3], 1.0);
    let r0 = build_r0(&state, &species, &vgrid).unwrap();
    for field in &r0 {
        assert!(field.sup_norm() < 1e-14);
    }
}

#[test]
fn compatibility_holds_on_euler_states_and_breaks_under_violation() {
    let species = species_12();
    let sgrid = SpatialGrid::new(2.0 * std::f64::consts::PI, 16, 1).unwrap();
    // R and N sized so the Gaussian moment quadrature is converged.
    let vgrid = VelocityGrid::new(7.0, 18).unwrap();
    let state = slab_state(&sgrid, 0.1);
    let defects = compatibility_defects(&state, &species, &vgrid).unwrap();
    let r0 = build_r0(&state, &species, &vgrid).unwrap();
    let mut max_rel: f64 = 0.0;
    for (c, d) in defects.iter().enumerate() {
        let scale = pair_norm(&r0[c], &vgrid).unwrap().max(1e-30);
        for k in 0..6 {
            max_rel = max_rel.max(d[k].abs() / scale);
        }
    }
    assert!(max_rel < 1e-5, "compatibility defect {max_rel}");

    // Violate only the temperature equation: the energy compatibility breaks
    // by O(perturbation) while the others stay at the quadrature floor.
    let mut rhs = euler_rhs_inviscid(&state, &species).unwrap();
    let bump = 0.05;
    for c in 0..sgrid.len() {
        rhs.theta[c] += bump;
    }
    let r0_bad = build_r0_with_rhs(&state, &rhs, &species, &vgrid).unwrap();
    let c = 3usize;
    let params = state.bi_maxwell_at(c).unwrap();
    let basis = kernel_basis(&params, &species, &vgrid).unwrap();
    let mut defads = [0.0f64; 6];
    for (k, e) in basis.ortho.iter().enumerate() {
        defads[k] = pair_inner(&r0_bad[c], e, &vgrid).unwrap().abs();
    }
    // Momentum compatibilities stay tiny; the energy one moves by O(bump).
    assert!(defads[5] > 1e-3, "energy defect should appear: {defads:?}");
    assert!(defads[2] < 1e-6 && defads[3] < 1e-6, "{defads:?}");
}

#[test]
fn compatibility_defect_shrinks_under_refinement() {
    let species = species_12();
    let sgrid = SpatialGrid::new(2.0 * std::f64::consts::PI, 16, 1).unwrap();
    let state = slab_state(&sgrid, 0.1);
    let mut floors = Vec::new();
    for n in [10usize, 14] {
        let vgrid = VelocityGrid::new(6.0, n).unwrap();
        let defects = compatibility_defects(&state, &species, &vgrid).unwrap();
        let r0 = build_r0(&state, &species, &vgrid).unwrap();
        let mut max_rel: f64 = 0.0;
        for (c, d) in defects.iter().enumerate() {
            let scale = pair_norm(&r0[c], &vgrid).unwrap().max(1e-30);
            for k in 0..6 {
                max_rel = max_rel.max(d[k].abs() / scale);
            }
        }
        floors.push(max_rel);
    }
    assert!(
        floors[1] < 0.5 * floors[0],
        "defect should at least halve: {floors:?}"
    );
}

#[test]
fn macro_fluctuation_reproduces_coefficients() {
    let species = species_12();
    let vgrid = VelocityGrid::new(7.0, 20).unwrap();
    let params = BiMaxwellParams::new(1.1, 0.9, [0.05, 0.0, 0.0], 1.05).unwrap();
    let n1 = [0.3, -0.2];
    let u1 = [0.1, 0.05, -0.2];
    let th1 = 0.15;
    let f = macro_fluctuation(&params, &species, &vgrid, n1, u1, th1);
    // Moments of sqrt(μ) f recover the coefficients through the linear maps.
    let mut raw = DistributionField::zeros(Frame::Raw, vgrid.len());
    for s in Species::BOTH {
        let m = species.mass(s);
        let p = params.params(s);
        let src = f.species(s);
        let dst = raw.species_mut(s);
        for (i, v) in vgrid.nodes().enumerate() {
            dst[i] = src[i] * maxwellian(&p, m, v).sqrt();
        }
    }
    // n_k^α = ∫ F_k; n_δ^α u_k = ∫ (v - u_δ) F_k; n_δ^α θ_k + ... trace form.
    let na = boltzmix::grids::quad_v(raw.species(Species::A), &vgrid).unwrap();
    let nb = boltzmix::grids::quad_v(raw.species(Species::B), &vgrid).unwrap();
    assert!((na - n1[0]).abs() < 1e-6, "n1A moment {na}");
    assert!((nb - n1[1]).abs() < 1e-6, "n1B moment {nb}");
    let vals: Vec<f64> = vgrid
        .nodes()
        .zip(raw.species(Species::A).iter())
        .map(|(v, &f)| (v[0] - params.bulk_velocity[0]) * f)
        .collect();
    let mom = boltzmix::grids::quad_v(&vals, &vgrid).unwrap();
    assert!((mom - params.n_a * u1[0]).abs() < 1e-6, "u1 moment {mom}");
    // The macro field is its own projection.
    let basis = kernel_basis(&params, &species, &vgrid).unwrap();
    let frac = micro_fraction(&f, &params, &species, &vgrid).unwrap();
    assert!(frac < 1e-6, "macro part leaked micro {frac}");
    let _ = basis;
}

#[test]
fn weighted_remainder_frames() {
    let species = species_12();
    let vgrid = VelocityGrid::new(5.0, 10).unwrap();
    let frame = GlobalFrame::new(1.0, 0.9, 25.0 / 4.0, &species).unwrap();
    // F = sqrt(μ_M)/w gives h ≡ 1.
    let f = DistributionField::sample(Frame::Raw, &vgrid, |s, v| {
        let m = species.mass(s);
        maxwellian(&frame.global_params(), m, v).sqrt() / frame.weight(v)
    });
    let h = weighted_remainder(&f, &frame, &species, &vgrid).unwrap();
    for s in Species::BOTH {
        for &x in h.species(s) {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }
    // Linearity.
    let h2 = weighted_remainder(&f.scaled(3.0), &frame, &species, &vgrid).unwrap();
    for s in Species::BOTH {
        for (a, b) in h2.species(s).iter().zip(h.species(s)) {
            assert!((a - 3.0 * b).abs() < 1e-12);
        }
    }
    // μ_δ stays finite in the weighted frame under the sandwich bounds.
    let state = BiMaxwellParams::new(1.0, 1.0, [0.05, 0.0, 0.0], 1.2).unwrap();
    let mu = state.sample(&species, &vgrid);
    let h3 = weighted_remainder(&mu, &frame, &species, &vgrid).unwrap();
    assert!(h3.sup_norm().is_finite());
}

#[test]
fn first_order_build_orthogonality_and_decay() {
    let species = species_12();
    let sgrid = SpatialGrid::new(2.0 * std::f64::consts::PI, 8, 1).unwrap();
    let vgrid = VelocityGrid::new(6.0, 10).unwrap();
    let angular = lebedev_like_rule(3).unwrap();
    let state = slab_state(&sgrid, 0.1);
    let traj = euler_solve(&state, &species, 0.05, 0.4, 2).unwrap();
    let opts = FirstOrderOptions { tol_compat: 5e-2, ..Default::default() };
    let build =
        first_order_build(&traj, &species, &vgrid, &angular, 0.05, 1, None, &opts).unwrap();
    // With zero macro data the corrector is pure micro: 𝒫 f₁ ≈ 0.
    for (k, &c) in build.eval_cells.iter().enumerate() {
        let params = build.state.bi_maxwell_at(c).unwrap();
        let frac = micro_fraction(&build.f1[k], &params, &species, &vgrid).unwrap();
        assert!(frac > 1.0 - 1e-6, "micro fraction {frac}");
        // Weighted decay sup stays finite for admissible (p, b).
        let sups = weighted_decay_sup(&build.f1[k], &params, &species, &vgrid, 4.0, 0.45).unwrap();
        assert!(sups[0].is_finite() && sups[1].is_finite());
    }
    // Zero forcing ⇒ zero corrector: a constant state.
    let flat = FluidState::constant(&sgrid, 1.0, 1.0, [0.0; 3], 1.0);
    let ftraj = euler_solve(&flat, &species, 0.05, 0.4, 2).unwrap();
    let fbuild =
        first_order_build(&ftraj, &species, &vgrid, &angular, 0.05, 1, None, &opts).unwrap();
    for f in &fbuild.f1 {
        assert!(pair_norm(f, &vgrid).unwrap() < 1e-12);
    }
}

#[test]
fn residual_ladder_toy_scale() {
    // K=0 residual is ε-independent; K=1 drops roughly linearly in ε.
    let species = species_12();
    let sgrid = SpatialGrid::new(2.0 * std::f64::consts::PI, 16, 1).unwrap();
    let vgrid = VelocityGrid::new(6.0, 10).unwrap();
    let angular = lebedev_like_rule(3).unwrap();
    let init = slab_state(&sgrid, 0.1);
    let traj = euler_solve(&init, &species, 0.12, 0.4, 8).unwrap();
    let opts = FirstOrderOptions {
        tol_compat: 5e-2,
        with_time_derivative: true,
        dt_fd: 0.002,
        macro_source_levels: 2,
        cfl: 0.4,
    };
    let build =
        first_order_build(&traj, &species, &vgrid, &angular, 0.1, 2, None, &opts).unwrap();
    let frame = GlobalFrame::new(0.9, 0.9, 25.0 / 4.0, &species).unwrap();
    let res0 = truncation_residual(&build, &species, &vgrid, &angular, 0).unwrap();
    let res1 = truncation_residual(&build, &species, &vgrid, &angular, 1).unwrap();
    let eps = [0.04, 0.02, 0.01];
    let k0: Vec<f64> =
        eps.iter().map(|&e| residual_norms(&res0, e, &frame, &species, &vgrid).0).collect();
    let k1: Vec<f64> =
        eps.iter().map(|&e| residual_norms(&res1, e, &frame, &species, &vgrid).0).collect();
    // K=0 is flat.
    assert!((k0[0] / k0[2] - 1.0).abs() < 1e-12);
    // K=1 decreases and sits well below K=0.
    assert!(k1[0] > k1[2], "K=1 should shrink with ε: {k1:?}");
    assert!(k0[2] / k1[2] > 5.0, "order separation {}", k0[2] / k1[2]);
}
