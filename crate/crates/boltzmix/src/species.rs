//! Species parameters, local/global bi-Maxwellians, moments, and collision
//! invariants.

use crate::error::{Error, Result};
use crate::field::{DistributionField, Frame};
use crate::grids::{quad_v, VelocityGrid};
use crate::real::{norm_sq, sub, Real, Vec3};

/// Species tag for the two-component mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    A,
    B,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::A, Species::B];

    pub fn index(self) -> usize {
        match self {
            Species::A => 0,
            Species::B => 1,
        }
    }

    pub fn other(self) -> Species {
        match self {
            Species::A => Species::B,
            Species::B => Species::A,
        }
    }
}

/// Concrete angular part of the collision kernel.
///
/// The default saturates Grad's cutoff bound: `b(cos θ) = C_b |cos θ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularForm {
    /// `b(c) = C_b |c|`.
    CosCutoff,
    /// `b(c) = C_b c^2` (also within the cutoff bound).
    CosSquared,
}

/// Masses and collision-kernel data for the two species.
#[derive(Debug, Clone)]
pub struct SpeciesPair<T: Real> {
    pub m_a: T,
    pub m_b: T,
    /// Kinetic-part exponent, in `(-3, 1]`.
    pub gamma: T,
    /// Kinetic-part constants, symmetric in the species pair.
    pub c_phi: [[T; 2]; 2],
    /// Grad angular bound constant.
    pub c_b: T,
    pub b_form: AngularForm,
}

impl<T: Real> SpeciesPair<T> {
    pub fn new(m_a: T, m_b: T, gamma: T, c_phi: [[T; 2]; 2], c_b: T, b_form: AngularForm) -> Result<Self> {
        if m_a <= T::zero() || m_b <= T::zero() {
            return Err(Error::Domain("particle masses must be positive".into()));
        }
        if gamma <= T::of(-3.0) || gamma > T::one() {
            return Err(Error::Domain(format!("gamma must lie in (-3, 1], got {gamma}")));
        }
        if c_b <= T::zero() {
            return Err(Error::Domain("C_b must be positive".into()));
        }
        for row in &c_phi {
            for &c in row {
                if c <= T::zero() {
                    return Err(Error::Domain("kernel constants must be positive".into()));
                }
            }
        }
        if (c_phi[0][1] - c_phi[1][0]).abs() > T::of(1e-14) * c_phi[0][1].abs() {
            return Err(Error::Domain("kernel constants must be symmetric: C[A][B] = C[B][A]".into()));
        }
        let pair = Self { m_a, m_b, gamma, c_phi, c_b, b_form };
        pair.check_angular_bound()?;
        Ok(pair)
    }

    /// Hard-sphere-free default: unit kernel constants and `b = |cos θ|`.
    pub fn with_masses(m_a: T, m_b: T, gamma: T) -> Result<Self> {
        let one = T::one();
        Self::new(m_a, m_b, gamma, [[one, one], [one, one]], one, AngularForm::CosCutoff)
    }

    /// Grad cutoff check `0 <= b(c) <= C_b |c|` on sampled angles.
    fn check_angular_bound(&self) -> Result<()> {
        let n = 10_000;
        for i in 0..n {
            let c = T::of(-1.0) + T::of(2.0) * T::of_usize(i) / T::of_usize(n - 1);
            let b = self.angular(c);
            if b < T::zero() || b > self.c_b * c.abs() + T::of(1e-14) {
                return Err(Error::Domain(format!(
                    "angular function violates Grad cutoff bound at cos θ = {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn mass(&self, s: Species) -> T {
        match s {
            Species::A => self.m_a,
            Species::B => self.m_b,
        }
    }

    pub fn max_mass(&self) -> T {
        self.m_a.max(self.m_b)
    }

    pub fn min_mass(&self) -> T {
        self.m_a.min(self.m_b)
    }

    pub fn mass_sum(&self) -> T {
        self.m_a + self.m_b
    }

    /// Angular kernel `b(cos θ)`.
    pub fn angular(&self, cos_theta: T) -> T {
        match self.b_form {
            AngularForm::CosCutoff => self.c_b * cos_theta.abs(),
            AngularForm::CosSquared => self.c_b * cos_theta * cos_theta,
        }
    }

    /// `∫_{S²} b(cos θ) dω = 2π ∫_{-1}^{1} b(c) dc`, exact for the built-in forms.
    pub fn angular_sphere_integral(&self) -> T {
        let two_pi = T::of(2.0) * T::PI();
        match self.b_form {
            AngularForm::CosCutoff => two_pi * self.c_b,
            AngularForm::CosSquared => two_pi * self.c_b * T::of(2.0 / 3.0),
        }
    }

    pub fn c_phi_of(&self, alpha: Species, beta: Species) -> T {
        self.c_phi[alpha.index()][beta.index()]
    }

    /// Admissible upper bound for the global-frame temperature ratio,
    /// `(m^A + m^B) / max(m^A, m^B)`.
    pub fn mass_ratio_bound(&self) -> T {
        self.mass_sum() / self.max_mass()
    }
}

/// Parameters of a single-species Maxwellian.
#[derive(Debug, Clone, Copy)]
pub struct MaxwellParams<T: Real> {
    pub density: T,
    pub bulk_velocity: Vec3<T>,
    pub temperature: T,
}

impl<T: Real> MaxwellParams<T> {
    pub fn new(density: T, bulk_velocity: Vec3<T>, temperature: T) -> Result<Self> {
        if density <= T::zero() {
            return Err(Error::Domain(format!("density must be positive, got {density}")));
        }
        if temperature <= T::zero() {
            return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
        }
        Ok(Self { density, bulk_velocity, temperature })
    }

    pub fn equilibrium() -> Self {
        Self { density: T::one(), bulk_velocity: [T::zero(); 3], temperature: T::one() }
    }
}

/// `n (m / 2πθ)^{3/2} exp(-m|v-u|²/(2θ))`.
pub fn maxwellian<T: Real>(p: &MaxwellParams<T>, mass: T, v: Vec3<T>) -> T {
    let two_pi = T::of(2.0) * T::PI();
    let norm = (mass / (two_pi * p.temperature)).powf(T::of(1.5));
    let r2 = norm_sq(sub(v, p.bulk_velocity));
    p.density * norm * (-mass * r2 / (T::of(2.0) * p.temperature)).exp()
}

/// `log` of the Maxwellian, used where products of Maxwellian factors must be
/// combined into a single exponential.
pub fn log_maxwellian<T: Real>(p: &MaxwellParams<T>, mass: T, v: Vec3<T>) -> T {
    let two_pi = T::of(2.0) * T::PI();
    let r2 = norm_sq(sub(v, p.bulk_velocity));
    p.density.ln() + T::of(1.5) * (mass / (two_pi * p.temperature)).ln()
        - mass * r2 / (T::of(2.0) * p.temperature)
}

/// Per-species parameter pair sharing bulk velocity and temperature: the
/// state `(n^A, n^B, u, θ)` of a bi-Maxwellian.
#[derive(Debug, Clone, Copy)]
pub struct BiMaxwellParams<T: Real> {
    pub n_a: T,
    pub n_b: T,
    pub bulk_velocity: Vec3<T>,
    pub temperature: T,
}

impl<T: Real> BiMaxwellParams<T> {
    pub fn new(n_a: T, n_b: T, bulk_velocity: Vec3<T>, temperature: T) -> Result<Self> {
        if n_a <= T::zero() || n_b <= T::zero() || temperature <= T::zero() {
            return Err(Error::Domain("bi-Maxwellian needs positive densities and temperature".into()));
        }
        Ok(Self { n_a, n_b, bulk_velocity, temperature })
    }

    pub fn equilibrium() -> Self {
        Self { n_a: T::one(), n_b: T::one(), bulk_velocity: [T::zero(); 3], temperature: T::one() }
    }

    pub fn params(&self, s: Species) -> MaxwellParams<T> {
        MaxwellParams {
            density: match s {
                Species::A => self.n_a,
                Species::B => self.n_b,
            },
            bulk_velocity: self.bulk_velocity,
            temperature: self.temperature,
        }
    }

    pub fn total_density(&self) -> T {
        self.n_a + self.n_b
    }

    pub fn mass_density(&self, species: &SpeciesPair<T>) -> T {
        species.m_a * self.n_a + species.m_b * self.n_b
    }

    /// Samples the raw bi-Maxwellian pair on the velocity grid.
    pub fn sample(&self, species: &SpeciesPair<T>, grid: &VelocityGrid<T>) -> DistributionField<T> {
        let a = grid.sample(|v| maxwellian(&self.params(Species::A), species.m_a, v));
        let b = grid.sample(|v| maxwellian(&self.params(Species::B), species.m_b, v));
        DistributionField::from_parts(Frame::Raw, a, b)
    }
}

/// Global reference frame for the weighted remainder: temperature `θ_M`,
/// comparison exponent `q̃`, and polynomial weight exponent `l`.
#[derive(Debug, Clone, Copy)]
pub struct GlobalFrame<T: Real> {
    pub theta_m: T,
    pub q_tilde: T,
    pub weight_exponent: T,
    pub mass_ratio_bound: T,
}

impl<T: Real> GlobalFrame<T> {
    pub fn new(theta_m: T, q_tilde: T, weight_exponent: T, species: &SpeciesPair<T>) -> Result<Self> {
        if theta_m <= T::zero() {
            return Err(Error::Domain("θ_M must be positive".into()));
        }
        let q_lo = species.max_mass() / species.mass_sum();
        if q_tilde <= q_lo || q_tilde > T::one() {
            return Err(Error::Domain(format!(
                "q̃ must lie in (max(m)/Σm, 1] = ({q_lo}, 1], got {q_tilde}"
            )));
        }
        if weight_exponent < T::of(25.0 / 4.0) {
            return Err(Error::Domain("weight exponent l must satisfy l >= 25/4".into()));
        }
        Ok(Self {
            theta_m,
            q_tilde,
            weight_exponent,
            mass_ratio_bound: species.mass_ratio_bound(),
        })
    }

    /// Midpoint of the admissible `q̃` interval.
    pub fn default_q_tilde(species: &SpeciesPair<T>) -> T {
        let q_lo = species.max_mass() / species.mass_sum();
        (q_lo + T::one()) * T::of(0.5)
    }

    /// Global Maxwellian `μ_M^α` with unit density and zero bulk velocity.
    pub fn global_params(&self) -> MaxwellParams<T> {
        MaxwellParams { density: T::one(), bulk_velocity: [T::zero(); 3], temperature: self.theta_m }
    }

    /// Polynomial weight `w(v) = (1 + |v|)^l`.
    pub fn weight(&self, v: Vec3<T>) -> T {
        (T::one() + norm_sq(v).sqrt()).powf(self.weight_exponent)
    }
}

/// Chooses `θ_M = min θ` and validates the ratio constraint
/// `max θ <= (m^A + m^B)/max(m^A, m^B) · θ_M`. `q̃` defaults to the interval
/// midpoint and `l` to 25/4.
pub fn select_theta_m<T: Real>(theta_field: &[T], species: &SpeciesPair<T>) -> Result<GlobalFrame<T>> {
    if theta_field.is_empty() {
        return Err(Error::Shape("temperature field is empty".into()));
    }
    let mut lo = theta_field[0];
    let mut hi = theta_field[0];
    for &t in theta_field {
        if t <= T::zero() {
            return Err(Error::Domain("temperature field must be strictly positive".into()));
        }
        lo = lo.min(t);
        hi = hi.max(t);
    }
    let bound = species.mass_ratio_bound();
    if hi > bound * lo {
        return Err(Error::FrameInfeasible(format!(
            "max θ / min θ = {} exceeds (m^A+m^B)/max(m) = {}; δ too large for the global frame",
            (hi / lo),
            bound
        )));
    }
    GlobalFrame::new(lo, GlobalFrame::default_q_tilde(species), T::of(25.0 / 4.0), species)
}

/// Per-species and mixture moments of a raw distribution pair.
#[derive(Debug, Clone)]
pub struct Moments<T: Real> {
    /// Number densities `∫ F^α dv`.
    pub number_density: [T; 2],
    /// First moments `∫ v F^α dv`.
    pub momentum_moment: [Vec3<T>; 2],
    /// Energy moments `∫ m^α |v - u|² F^α dv` about the mixture velocity.
    pub energy_moment: [T; 2],
    pub total_density: T,
    pub mass_density: T,
    pub bulk_velocity: Vec3<T>,
    /// Mixture temperature from `3 n θ = Σ_α ∫ m^α |v-u|² F^α dv`.
    pub temperature: T,
}

/// Quadrature moments of a raw pair: densities, first moments, and the
/// mixture `(n, ρ, u, θ)`.
pub fn moments<T: Real>(
    field: &DistributionField<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> Result<Moments<T>> {
    field.expect_frame(Frame::Raw)?;
    let mut number_density = [T::zero(); 2];
    let mut momentum_moment = [[T::zero(); 3]; 2];
    for s in Species::BOTH {
        let vals = field.species(s);
        number_density[s.index()] = quad_v(vals, grid)?;
        for k in 0..3 {
            let weighted: Vec<T> = grid
                .nodes()
                .zip(vals.iter())
                .map(|(v, &f)| v[k] * f)
                .collect();
            momentum_moment[s.index()][k] = quad_v(&weighted, grid)?;
        }
    }
    let total_density = number_density[0] + number_density[1];
    let mass_density = species.m_a * number_density[0] + species.m_b * number_density[1];
    if mass_density <= T::zero() || total_density <= T::zero() {
        return Err(Error::DegenerateState("zero total mass".into()));
    }
    let mut bulk_velocity = [T::zero(); 3];
    for k in 0..3 {
        bulk_velocity[k] = (species.m_a * momentum_moment[0][k] + species.m_b * momentum_moment[1][k])
            / mass_density;
    }
    let mut energy_moment = [T::zero(); 2];
    for s in Species::BOTH {
        let m = species.mass(s);
        let vals = field.species(s);
        let weighted: Vec<T> = grid
            .nodes()
            .zip(vals.iter())
            .map(|(v, &f)| m * norm_sq(sub(v, bulk_velocity)) * f)
            .collect();
        energy_moment[s.index()] = quad_v(&weighted, grid)?;
    }
    let temperature = (energy_moment[0] + energy_moment[1]) / (T::of(3.0) * total_density);
    Ok(Moments {
        number_density,
        momentum_moment,
        energy_moment,
        total_density,
        mass_density,
        bulk_velocity,
        temperature,
    })
}

/// The six discretized collision invariants, in the order
/// `e₁, e₂, v₁m, v₂m, v₃m, |v|²m` with `m = (m^A, m^B)`.
pub fn collision_invariant_vectors<T: Real>(
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> [DistributionField<T>; 6] {
    let zero = vec![T::zero(); grid.len()];
    let one = vec![T::one(); grid.len()];
    let e1 = DistributionField::from_parts(Frame::Raw, one.clone(), zero.clone());
    let e2 = DistributionField::from_parts(Frame::Raw, zero, one);
    let mom = |k: usize| {
        let a = grid.sample(|v| species.m_a * v[k]);
        let b = grid.sample(|v| species.m_b * v[k]);
        DistributionField::from_parts(Frame::Raw, a, b)
    };
    let ea = grid.sample(|v| species.m_a * norm_sq(v));
    let eb = grid.sample(|v| species.m_b * norm_sq(v));
    let energy = DistributionField::from_parts(Frame::Raw, ea, eb);
    [e1, e2, mom(0), mom(1), mom(2), energy]
}

/// Pointwise value of the six invariants at a velocity, species-resolved.
/// `invariant_value(k, s, v)` matches `collision_invariant_vectors` order.
pub fn invariant_value<T: Real>(k: usize, s: Species, species: &SpeciesPair<T>, v: Vec3<T>) -> T {
    let m = species.mass(s);
    match k {
        0 => {
            if s == Species::A {
                T::one()
            } else {
                T::zero()
            }
        }
        1 => {
            if s == Species::B {
                T::one()
            } else {
                T::zero()
            }
        }
        2 | 3 | 4 => m * v[k - 2],
        5 => m * norm_sq(v),
        _ => panic!("invariant index out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_peak_value() {
        let p = MaxwellParams::<f64>::equilibrium();
        let peak = maxwellian(&p, 1.0, [0.0; 3]);
        // (2π)^{-3/2}
        assert!((peak - 0.06349363593424097).abs() < 1e-15);
    }

    #[test]
    fn maxwellian_radial_symmetry_and_density_linearity() {
        let p = MaxwellParams::<f64>::new(1.0, [0.3, -0.2, 0.1], 1.4).unwrap();
        let w = [0.5, 0.7, -0.9];
        let vp = [p.bulk_velocity[0] + w[0], p.bulk_velocity[1] + w[1], p.bulk_velocity[2] + w[2]];
        let vm = [p.bulk_velocity[0] - w[0], p.bulk_velocity[1] - w[1], p.bulk_velocity[2] - w[2]];
        assert_eq!(maxwellian(&p, 2.0, vp), maxwellian(&p, 2.0, vm));

        let p2 = MaxwellParams::new(2.0, p.bulk_velocity, 1.4).unwrap();
        assert!((maxwellian(&p2, 2.0, vp) - 2.0 * maxwellian(&p, 2.0, vp)).abs() < 1e-15);
    }

    #[test]
    fn maxwellian_rejects_bad_params() {
        assert!(MaxwellParams::<f64>::new(0.0, [0.0; 3], 1.0).is_err());
        assert!(MaxwellParams::<f64>::new(1.0, [0.0; 3], -1.0).is_err());
    }

    #[test]
    fn species_pair_validation() {
        assert!(SpeciesPair::<f64>::with_masses(1.0, 2.0, 1.0).is_ok());
        assert!(SpeciesPair::<f64>::with_masses(1.0, 2.0, 1.5).is_err());
        assert!(SpeciesPair::<f64>::with_masses(1.0, 2.0, -3.0).is_err());
        assert!(SpeciesPair::<f64>::with_masses(-1.0, 2.0, 1.0).is_err());
        let asym = SpeciesPair::<f64>::new(
            1.0,
            2.0,
            1.0,
            [[1.0, 2.0], [1.0, 1.0]],
            1.0,
            AngularForm::CosCutoff,
        );
        assert!(asym.is_err());
    }

    #[test]
    fn moments_recover_bi_maxwellian_parameters() {
        let species = SpeciesPair::<f64>::with_masses(1.0, 2.0, 1.0).unwrap();
        let grid = VelocityGrid::new(8.0, 32).unwrap();
        let params = BiMaxwellParams::new(1.0, 1.0, [0.0; 3], 1.0).unwrap();
        let field = params.sample(&species, &grid);
        let m = moments(&field, &species, &grid).unwrap();
        assert!((m.number_density[0] - 1.0).abs() < 1e-6);
        assert!((m.number_density[1] - 1.0).abs() < 1e-6);
        for k in 0..3 {
            assert!(m.bulk_velocity[k].abs() < 1e-12);
        }
        assert!((m.temperature - 1.0).abs() < 1e-5);
    }

    #[test]
    fn moments_zero_field_is_degenerate() {
        let species = SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap();
        let grid = VelocityGrid::new(4.0, 8).unwrap();
        let field = DistributionField::zeros(Frame::Raw, grid.len());
        assert!(matches!(
            moments(&field, &species, &grid),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn moments_galilean_shift() {
        let species = SpeciesPair::<f64>::with_masses(1.0, 2.0, 1.0).unwrap();
        let grid = VelocityGrid::new(8.0, 32).unwrap();
        let w = [0.4, -0.2, 0.1];
        let p0 = BiMaxwellParams::new(1.0, 0.5, [0.0; 3], 1.0).unwrap();
        let p1 = BiMaxwellParams::new(1.0, 0.5, w, 1.0).unwrap();
        let m0 = moments(&p0.sample(&species, &grid), &species, &grid).unwrap();
        let m1 = moments(&p1.sample(&species, &grid), &species, &grid).unwrap();
        for s in 0..2 {
            let n = m0.number_density[s];
            for k in 0..3 {
                let shift = m1.momentum_moment[s][k] - m0.momentum_moment[s][k];
                assert!(
                    (shift - n * w[k]).abs() < 1e-6,
                    "species {s} component {k}: shift {shift} vs {}",
                    n * w[k]
                );
            }
        }
    }

    #[test]
    fn invariant_vectors_structure() {
        let species = SpeciesPair::<f64>::with_masses(1.0, 2.0, 1.0).unwrap();
        let grid = VelocityGrid::new(4.0, 8).unwrap();
        let inv = collision_invariant_vectors(&species, &grid);
        assert!(inv[0].species(Species::B).iter().all(|&x| x == 0.0));
        assert!(inv[1].species(Species::A).iter().all(|&x| x == 0.0));
        // Momentum invariants scale linearly with masses.
        for (i, v) in grid.nodes().enumerate() {
            assert_eq!(inv[2].species(Species::A)[i], 1.0 * v[0]);
            assert_eq!(inv[2].species(Species::B)[i], 2.0 * v[0]);
        }
    }

    #[test]
    fn select_theta_m_cases() {
        let s12 = SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap();
        // Constant θ ≡ 1.
        let f = select_theta_m(&[1.0, 1.0, 1.0], &s12).unwrap();
        assert_eq!(f.theta_m, 1.0);
        // θ in [1, 1.1] with bound 3/2: feasible, θ_M = 1.
        let f = select_theta_m(&[1.0, 1.05, 1.1], &s12).unwrap();
        assert_eq!(f.theta_m, 1.0);
        // θ in [1, 2] with masses (1, 3): bound 4/3 < 2 → infeasible.
        let s13 = SpeciesPair::with_masses(1.0, 3.0, 1.0).unwrap();
        assert!(matches!(
            select_theta_m(&[1.0, 1.5, 2.0], &s13),
            Err(Error::FrameInfeasible(_))
        ));
    }

    #[test]
    fn global_frame_sandwich_bounds_hold_pointwise() {
        // (2.17)-style check: C^{-1} μ_M <= μ_δ <= C (μ_M)^{q̃} with fitted C
        // finite over a sample of states and velocities.
        let species = SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap();
        let thetas = [1.0, 1.02, 1.05, 1.1];
        let frame = select_theta_m(&thetas, &species).unwrap();
        let mu_m = frame.global_params();
        let mut max_lower = 0.0f64;
        let mut max_upper = 0.0f64;
        for s in Species::BOTH {
            let m = species.mass(s);
            for &theta in &thetas {
                let local = MaxwellParams::new(1.0, [0.05, 0.0, 0.0], theta).unwrap();
                for i in 0..100_000 {
                    let t = i as f64 / 99_999.0;
                    let v = [12.0 * t - 6.0, 3.0 * (7.0 * t).sin(), 3.0 * (11.0 * t).cos()];
                    let md = maxwellian(&local, m, v);
                    let mm = maxwellian(&mu_m, m, v);
                    max_lower = max_lower.max(mm / md);
                    max_upper = max_upper.max(md / mm.powf(frame.q_tilde));
                }
            }
        }
        assert!(max_lower.is_finite() && max_upper.is_finite());
        assert!(max_lower < 1e3 && max_upper < 1e3, "C bounds {max_lower} {max_upper}");
    }

    #[test]
    fn weight_function_matches_definition() {
        let species = SpeciesPair::with_masses(1.0, 2.0, 1.0).unwrap();
        let frame = GlobalFrame::new(1.0, 0.9, 25.0 / 4.0, &species).unwrap();
        let v = [3.0, 0.0, 4.0];
        assert!((frame.weight(v) - 6.0f64.powf(6.25)).abs() < 1e-9);
    }
}
