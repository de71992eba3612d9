//! Scratch probe: entropy-production floor vs genuine production.
use boltzmix::collision::entropy_production;
use boltzmix::field::{DistributionField, Frame};
use boltzmix::grids::{lebedev_like_rule, VelocityGrid};
use boltzmix::species::{maxwellian, BiMaxwellParams, SpeciesPair};
use std::time::Instant;

fn main() {
    let angular = lebedev_like_rule(4).unwrap();
    for (n, r, mb) in [(12usize, 5.0, 2.0), (12, 4.5, 2.0), (16, 5.0, 2.0), (12, 4.5, 1.5)] {
        let species = SpeciesPair::with_masses(1.0, mb, 1.0).unwrap();
        let grid = VelocityGrid::new(r, n).unwrap();
        let eq = BiMaxwellParams::new(1.0, 0.8, [0.1, 0.0, 0.0], 1.05).unwrap();
        let mu = eq.sample(&species, &grid);
        let t0 = Instant::now();
        let s_eq = entropy_production(&mu, &species, &grid, &angular).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let pert = DistributionField::sample(Frame::Raw, &grid, |s, v: [f64; 3]| {
            let m = species.mass(s);
            let p = eq.params(s);
            maxwellian(&p, m, v) * (1.0 + 0.25 * (1.7 * v[0] + 0.9 * v[1] - 1.3 * v[2]).sin())
        });
        let s_p = entropy_production(&pert, &species, &grid, &angular).unwrap();
        println!("N={n} R={r} mB={mb}: s_eq {s_eq:.4e}  s_pert {s_p:.4e}  ratio {:.1}  ({dt:.1}s/state)", s_p / s_eq);
    }
}
