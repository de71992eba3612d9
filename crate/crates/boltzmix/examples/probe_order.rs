//! Scratch probe: equilibrium annihilation order between N=12 and N=24.
use boltzmix::collision::q_bilinear_at_points;
use boltzmix::grids::{lebedev_like_rule, VelocityGrid};
use boltzmix::species::{BiMaxwellParams, Species, SpeciesPair};

fn halton(i: usize, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut n = i as u64 + 1;
    while n > 0 {
        f /= base as f64;
        r += f * (n % base) as f64;
        n /= base;
    }
    r
}

fn main() {
    let species = SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap();
    let angular = lebedev_like_rule(4).unwrap();
    for (r_ext, theta, pbox) in [
        (6.0, 1.0, 3.0),
        (5.0, 1.0, 3.0),
        (4.5, 1.0, 3.0),
        (6.0, 1.3, 3.0),
        (5.0, 1.3, 2.0),
        (6.0, 1.0, 2.0),
    ] {
        let params = BiMaxwellParams::new(1.0, 1.0, [0.0; 3], theta).unwrap();
        let probes: Vec<[f64; 3]> = (0..300)
            .map(|i| {
                [
                    2.0 * pbox * halton(i, 2) - pbox,
                    2.0 * pbox * halton(i, 3) - pbox,
                    2.0 * pbox * halton(i, 5) - pbox,
                ]
            })
            .collect();
        print!("R={r_ext} theta={theta} box={pbox}:");
        for (a, b) in [(Species::A, Species::B), (Species::B, Species::B)] {
            let mut sups = Vec::new();
            for n in [12usize, 24] {
                let grid = VelocityGrid::new(r_ext, n).unwrap();
                let mu = params.sample(&species, &grid);
                let q = q_bilinear_at_points(&mu, &mu, a, b, &species, &grid, &angular, &probes).unwrap();
                sups.push(q.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
            }
            print!("  {:?}{:?} order {:.3}", a, b, (sups[0] / sups[1]).log2());
        }
        println!();
    }
}
