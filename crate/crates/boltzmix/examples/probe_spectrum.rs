//! Scratch probe: linearized-operator diagnostics at the acceptance configs.
use boltzmix::field::Frame;
use boltzmix::grids::{lebedev_like_rule, VelocityGrid};
use boltzmix::linearized::*;
use boltzmix::species::{BiMaxwellParams, SpeciesPair};
use std::time::Instant;

fn main() {
    let species = SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap();
    let angular = lebedev_like_rule(6).unwrap();
    let params = BiMaxwellParams::equilibrium();

    for n in [12usize, 16] {
        let grid = VelocityGrid::new(6.0, n).unwrap();
        let t0 = Instant::now();
        let matrix = assemble_l(&params, OperatorFrame::Local, &species, &grid, &angular).unwrap();
        let t_asm = t0.elapsed().as_secs_f64();
        let basis = kernel_basis(&params, &species, &grid).unwrap();
        let mut lx = Vec::new();
        for x in &basis.vectors {
            let l = matrix.apply(x).unwrap();
            lx.push(pair_norm(&l, &grid).unwrap() / pair_norm(x, &grid).unwrap());
        }
        let t1 = Instant::now();
        let nu = nu_field(&params, &species, &grid);
        let c0 = coercivity(&matrix, &basis, &nu, &grid).unwrap();
        let t_c0 = t1.elapsed().as_secs_f64();
        // round-trip micro solve
        let g = {
            use boltzmix::field::DistributionField;
            let raw = DistributionField::sample(Frame::Fluctuation, &grid, |s, v: [f64; 3]| {
                let m = species.mass(s);
                ((v[0] * 1.3).sin() + 0.2 * v[1] * v[2]) * (-(m) * (v[0]*v[0]+v[1]*v[1]+v[2]*v[2]) / 4.0).exp()
                    * if s == boltzmix::species::Species::A { 1.0 } else { 0.7 }
            });
            let macro_part = project_macro(&raw, &basis, &grid).unwrap();
            let mut micro = raw.clone();
            micro.axpy(-1.0, &macro_part).unwrap();
            micro
        };
        let rhs = matrix.apply(&g).unwrap();
        let solve = solve_micro(&matrix, &rhs, &basis, &grid, 1e-2).unwrap();
        let mut diff = solve.solution.clone();
        diff.axpy(-1.0, &g).unwrap();
        let rt = pair_norm(&diff, &grid).unwrap() / pair_norm(&g, &grid).unwrap();
        println!(
            "N={n}: asm {t_asm:.1}s asym {:.2e} lx {:?} c0 {c0:.4} ({t_c0:.1}s) roundtrip {rt:.2e} iters {}",
            matrix.raw_asymmetry,
            lx.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            solve.iterations
        );
    }
    // N=24 matrix-free LX
    let grid = VelocityGrid::new(6.0, 24).unwrap();
    let basis = kernel_basis(&params, &species, &grid).unwrap();
    let t0 = Instant::now();
    let inputs: Vec<_> = basis.vectors.to_vec();
    let outs = apply_linearized_batch(&params, OperatorFrame::Local, &species, &grid, &angular, &inputs).unwrap();
    let mut lx = Vec::new();
    for (x, l) in inputs.iter().zip(&outs) {
        lx.push(pair_norm(l, &grid).unwrap() / pair_norm(x, &grid).unwrap());
    }
    println!(
        "N=24 matrix-free ({:.0}s): lx {:?}",
        t0.elapsed().as_secs_f64(),
        lx.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
    );
}
