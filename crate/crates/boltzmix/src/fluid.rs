//! Mixture fluid hierarchy: the compressible Euler system, its linearization
//! with Burnett-function sources, the acoustic system solved spectrally in
//! time, and the symmetrizer diagnostics.

use crate::error::{Error, Result};
use crate::field::{DistributionField, Frame};
use crate::grids::{SpatialGrid, VelocityGrid};
use crate::linearized::pair_inner;
use crate::real::{norm_sq, sub, Real, Vec3};
use crate::species::{maxwellian, BiMaxwellParams, Species, SpeciesPair};
use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

/// Fourth-difference dissipation coefficient for the central scheme.
const DISSIPATION: f64 = 1.0 / 64.0;

/// Fluid fields `(n^A, n^B, u, θ)` on a periodic spatial grid. The same
/// layout serves the nonlinear Euler state (positive densities and
/// temperature) and the linearized systems (no sign constraint).
#[derive(Debug, Clone)]
pub struct FluidState<T: Real> {
    pub grid: SpatialGrid<T>,
    pub n_a: Vec<T>,
    pub n_b: Vec<T>,
    pub u: [Vec<T>; 3],
    pub theta: Vec<T>,
}

impl<T: Real> FluidState<T> {
    pub fn constant(grid: &SpatialGrid<T>, n_a: T, n_b: T, u: Vec3<T>, theta: T) -> Self {
        let len = grid.len();
        Self {
            grid: grid.clone(),
            n_a: vec![n_a; len],
            n_b: vec![n_b; len],
            u: [vec![u[0]; len], vec![u[1]; len], vec![u[2]; len]],
            theta: vec![theta; len],
        }
    }

    /// Samples fields from closures of the cell-center coordinate (d = 1 uses
    /// the x₁ coordinate; d = 3 passes the full position).
    pub fn sample(
        grid: &SpatialGrid<T>,
        f: impl Fn(Vec3<T>) -> (T, T, Vec3<T>, T),
    ) -> Self {
        let len = grid.len();
        let mut out = Self::constant(grid, T::one(), T::one(), [T::zero(); 3], T::one());
        for c in 0..len {
            let x = cell_coord(grid, c);
            let (na, nb, u, th) = f(x);
            out.n_a[c] = na;
            out.n_b[c] = nb;
            for k in 0..3 {
                out.u[k][c] = u[k];
            }
            out.theta[c] = th;
        }
        out
    }

    pub fn validate_positive(&self) -> Result<()> {
        for c in 0..self.grid.len() {
            if self.n_a[c] <= T::zero() || self.n_b[c] <= T::zero() || self.theta[c] <= T::zero() {
                return Err(Error::Numerical(format!("positivity lost at cell {c}")));
            }
        }
        Ok(())
    }

    pub fn bi_maxwell_at(&self, cell: usize) -> Result<BiMaxwellParams<T>> {
        BiMaxwellParams::new(
            self.n_a[cell],
            self.n_b[cell],
            [self.u[0][cell], self.u[1][cell], self.u[2][cell]],
            self.theta[cell],
        )
    }

    pub fn total_density(&self, cell: usize) -> T {
        self.n_a[cell] + self.n_b[cell]
    }

    pub fn mass_density(&self, species: &SpeciesPair<T>, cell: usize) -> T {
        species.m_a * self.n_a[cell] + species.m_b * self.n_b[cell]
    }

    /// Sup deviation from the uniform equilibrium `(1, 1, 0, 1)`.
    pub fn deviation_sup(&self) -> T {
        let mut m = T::zero();
        for c in 0..self.grid.len() {
            m = m.max((self.n_a[c] - T::one()).abs());
            m = m.max((self.n_b[c] - T::one()).abs());
            for k in 0..3 {
                m = m.max(self.u[k][c].abs());
            }
            m = m.max((self.theta[c] - T::one()).abs());
        }
        m
    }

    fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let mut out = self.clone();
        let apply = |a: &mut Vec<T>, b: &[T]| {
            for (x, y) in a.iter_mut().zip(b) {
                *x = f(*x, *y);
            }
        };
        apply(&mut out.n_a, &other.n_a);
        apply(&mut out.n_b, &other.n_b);
        for k in 0..3 {
            apply(&mut out.u[k], &other.u[k]);
        }
        apply(&mut out.theta, &other.theta);
        out
    }
}

/// Cell-center coordinate embedded in 3-space (slab states vary along x₁).
pub fn cell_coord<T: Real>(grid: &SpatialGrid<T>, cell: usize) -> Vec3<T> {
    match grid.dimension() {
        1 => [grid.axis_coord(cell), T::zero(), T::zero()],
        _ => {
            let m = grid.cells_per_axis();
            let iz = cell % m;
            let iy = (cell / m) % m;
            let ix = cell / (m * m);
            [grid.axis_coord(ix), grid.axis_coord(iy), grid.axis_coord(iz)]
        }
    }
}

fn neighbor<T: Real>(grid: &SpatialGrid<T>, cell: usize, axis: usize, offset: isize) -> usize {
    let m = grid.cells_per_axis();
    match grid.dimension() {
        1 => grid.wrap(cell as isize + offset),
        _ => {
            let iz = cell % m;
            let iy = (cell / m) % m;
            let ix = cell / (m * m);
            let (ix, iy, iz) = match axis {
                0 => (grid.wrap(ix as isize + offset), iy, iz),
                1 => (ix, grid.wrap(iy as isize + offset), iz),
                _ => (ix, iy, grid.wrap(iz as isize + offset)),
            };
            (ix * m + iy) * m + iz
        }
    }
}

/// Centered first derivative of a scalar field along one axis.
pub fn d_axis<T: Real>(field: &[T], grid: &SpatialGrid<T>, axis: usize) -> Vec<T> {
    let len = grid.len();
    let two_dx = T::of(2.0) * grid.spacing();
    if axis >= grid.dimension() {
        return vec![T::zero(); len];
    }
    (0..len)
        .map(|c| {
            let p = neighbor(grid, c, axis, 1);
            let m = neighbor(grid, c, axis, -1);
            (field[p] - field[m]) / two_dx
        })
        .collect()
}

fn fourth_difference<T: Real>(field: &[T], grid: &SpatialGrid<T>) -> Vec<T> {
    let len = grid.len();
    let mut out = vec![T::zero(); len];
    for axis in 0..grid.dimension() {
        for c in 0..len {
            let m2 = neighbor(grid, c, axis, -2);
            let m1 = neighbor(grid, c, axis, -1);
            let p1 = neighbor(grid, c, axis, 1);
            let p2 = neighbor(grid, c, axis, 2);
            out[c] += field[m2] - T::of(4.0) * field[m1] + T::of(6.0) * field[c]
                - T::of(4.0) * field[p1]
                + field[p2];
        }
    }
    out
}

/// Maximum characteristic speed `|u| + sqrt((5/3) n θ / ρ)` over cells.
pub fn max_wave_speed<T: Real>(s: &FluidState<T>, species: &SpeciesPair<T>) -> T {
    let mut top = T::zero();
    for c in 0..s.grid.len() {
        let speed = (s.u[0][c] * s.u[0][c] + s.u[1][c] * s.u[1][c] + s.u[2][c] * s.u[2][c]).sqrt();
        let n = s.total_density(c);
        let rho = s.mass_density(species, c);
        let cs = (T::of(5.0 / 3.0) * n * s.theta[c] / rho).sqrt();
        top = top.max(speed + cs);
    }
    top
}

/// Right-hand side of the compressible Euler mixture system:
/// continuity in divergence form, advective momentum with
/// `(n ∇θ + θ ∇n)/ρ`, and the `(2/3) θ div u` temperature equation, with a
/// fourth-difference stabilization term.
pub fn euler_rhs<T: Real>(s: &FluidState<T>, species: &SpeciesPair<T>) -> Result<FluidState<T>> {
    s.validate_positive()?;
    euler_rhs_unchecked(s, species, true)
}

/// Euler right-hand side without the stabilization term; this is the exact
/// discrete realization the expansion compatibility identities refer to.
pub fn euler_rhs_inviscid<T: Real>(
    s: &FluidState<T>,
    species: &SpeciesPair<T>,
) -> Result<FluidState<T>> {
    s.validate_positive()?;
    euler_rhs_unchecked(s, species, false)
}

fn euler_rhs_unchecked<T: Real>(
    s: &FluidState<T>,
    species: &SpeciesPair<T>,
    dissipate: bool,
) -> Result<FluidState<T>> {
    let grid = &s.grid;
    let len = grid.len();
    let dim = grid.dimension();
    let mut rhs = FluidState::constant(grid, T::zero(), T::zero(), [T::zero(); 3], T::zero());
    // Zero the placeholder constants.
    rhs.n_a.iter_mut().for_each(|x| *x = T::zero());
    rhs.n_b.iter_mut().for_each(|x| *x = T::zero());
    rhs.theta.iter_mut().for_each(|x| *x = T::zero());

    // Continuity: ∂_t n^α = -div(n^α u).
    for axis in 0..dim {
        let flux_a: Vec<T> = (0..len).map(|c| s.n_a[c] * s.u[axis][c]).collect();
        let flux_b: Vec<T> = (0..len).map(|c| s.n_b[c] * s.u[axis][c]).collect();
        let da = d_axis(&flux_a, grid, axis);
        let db = d_axis(&flux_b, grid, axis);
        for c in 0..len {
            rhs.n_a[c] -= da[c];
            rhs.n_b[c] -= db[c];
        }
    }

    // Gradients of n = n^A + n^B and θ.
    let n_tot: Vec<T> = (0..len).map(|c| s.total_density(c)).collect();
    let grad_n: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&n_tot, grid, a)).collect();
    let grad_th: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&s.theta, grid, a)).collect();
    let grad_u: Vec<[Vec<T>; 3]> = (0..dim)
        .map(|a| {
            [
                d_axis(&s.u[0], grid, a),
                d_axis(&s.u[1], grid, a),
                d_axis(&s.u[2], grid, a),
            ]
        })
        .collect();

    for c in 0..len {
        let rho = s.mass_density(species, c);
        let mut div_u = T::zero();
        for a in 0..dim {
            div_u += grad_u[a][a][c];
        }
        for k in 0..3 {
            let mut adv = T::zero();
            for a in 0..dim {
                adv += s.u[a][c] * grad_u[a][k][c];
            }
            let pressure = if k < dim {
                (n_tot[c] * grad_th[k][c] + s.theta[c] * grad_n[k][c]) / rho
            } else {
                T::zero()
            };
            rhs.u[k][c] = -adv - pressure;
        }
        let mut th_adv = T::zero();
        for a in 0..dim {
            th_adv += s.u[a][c] * grad_th[a][c];
        }
        rhs.theta[c] = -th_adv - T::of(2.0 / 3.0) * s.theta[c] * div_u;
    }

    if dissipate {
        let lam = max_wave_speed(s, species);
        let coef = T::of(DISSIPATION) * lam / grid.spacing();
        let damp = |f: &mut Vec<T>, src: &[T]| {
            let d4 = fourth_difference(src, grid);
            for c in 0..len {
                f[c] -= coef * d4[c];
            }
        };
        let na = s.n_a.clone();
        let nb = s.n_b.clone();
        let th = s.theta.clone();
        damp(&mut rhs.n_a, &na);
        damp(&mut rhs.n_b, &nb);
        damp(&mut rhs.theta, &th);
        for k in 0..3 {
            let uk = s.u[k].clone();
            damp(&mut rhs.u[k], &uk);
        }
    }
    Ok(rhs)
}

/// A time-sampled trajectory with linear interpolation between snapshots.
#[derive(Debug, Clone)]
pub struct FluidTrajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<FluidState<T>>,
    /// Sup over time of `‖state - (1,1,0,1)‖_∞`.
    pub max_deviation: T,
}

impl<T: Real> FluidTrajectory<T> {
    pub fn final_state(&self) -> &FluidState<T> {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn at(&self, t: T) -> FluidState<T> {
        let times = &self.times;
        if t <= times[0] {
            return self.states[0].clone();
        }
        if t >= *times.last().unwrap() {
            return self.final_state().clone();
        }
        let mut hi = 1;
        while times[hi] < t {
            hi += 1;
        }
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        self.states[lo].zip_map(&self.states[hi], |a, b| a + (b - a) * w)
    }
}

/// Integrates the Euler system with two-stage SSP time stepping under the
/// given CFL number, sampling the trajectory at `n_snapshots` evenly spaced
/// times (plus the initial state).
pub fn euler_solve<T: Real>(
    init: &FluidState<T>,
    species: &SpeciesPair<T>,
    t_end: T,
    cfl: T,
    n_snapshots: usize,
) -> Result<FluidTrajectory<T>> {
    init.validate_positive()?;
    if cfl <= T::zero() || cfl > T::one() {
        return Err(Error::Config(format!("CFL number must lie in (0, 1], got {cfl}")));
    }
    let lam0 = max_wave_speed(init, species);
    let dt_target = cfl * init.grid.spacing() / lam0.max(T::of(1e-12));
    let n_steps = (t_end / dt_target).ceil().to_usize().unwrap_or(1).max(1);
    let dt = t_end / T::of_usize(n_steps);

    let mut times = vec![T::zero()];
    let mut states = vec![init.clone()];
    let mut state = init.clone();
    let mut max_dev = init.deviation_sup();
    let snap_every = (n_steps / n_snapshots.max(1)).max(1);
    for step in 0..n_steps {
        let t = dt * T::of_usize(step);
        // CFL guard against acceleration mid-run.
        let lam = max_wave_speed(&state, species);
        if lam * dt > cfl * state.grid.spacing() * T::of(1.5) {
            return Err(Error::Numerical(format!(
                "CFL violated at t = {}: wave speed grew to {lam}",
                t.to_f64_lossy()
            )));
        }
        let k1 = euler_rhs_unchecked(&state, species, true)?;
        let stage = state.zip_map(&k1, |a, b| a + dt * b);
        stage.validate_positive().map_err(|_| {
            Error::Numerical(format!("positivity lost during step at t = {}", t.to_f64_lossy()))
        })?;
        let k2 = euler_rhs_unchecked(&stage, species, true)?;
        let half = T::of(0.5);
        let mut next = state.clone();
        let upd = |dst: &mut Vec<T>, s0: &[T], s1: &[T], r1: &[T]| {
            for c in 0..dst.len() {
                dst[c] = half * (s0[c] + s1[c] + dt * r1[c]);
            }
        };
        upd(&mut next.n_a, &state.n_a, &stage.n_a, &k2.n_a);
        upd(&mut next.n_b, &state.n_b, &stage.n_b, &k2.n_b);
        for k in 0..3 {
            upd(&mut next.u[k], &state.u[k], &stage.u[k], &k2.u[k]);
        }
        upd(&mut next.theta, &state.theta, &stage.theta, &k2.theta);
        next.validate_positive().map_err(|_| {
            Error::Numerical(format!("positivity lost during step at t = {}", t.to_f64_lossy()))
        })?;
        state = next;
        max_dev = max_dev.max(state.deviation_sup());
        if (step + 1) % snap_every == 0 || step + 1 == n_steps {
            times.push(dt * T::of_usize(step + 1));
            states.push(state.clone());
        }
    }
    Ok(FluidTrajectory { times, states, max_deviation: max_dev })
}

/// Symmetrizer diagnostics: assembles `A₀` and the flux Jacobians `A_j` of
/// the linearized system at sampled cells and reports the worst asymmetry of
/// `A₀ A_j` together with the smallest eigenvalue of `A₀`.
pub struct SymmetrizerReport<T: Real> {
    pub max_asymmetry: T,
    pub min_eigenvalue_a0: T,
}

/// `A₀ = diag(θ/n^A, θ/n^B, ρ I₃, (3/2) n/θ)` at one cell.
pub fn a0_matrix<T: Real>(s: &FluidState<T>, species: &SpeciesPair<T>, cell: usize) -> [[T; 6]; 6] {
    let mut a0 = [[T::zero(); 6]; 6];
    let th = s.theta[cell];
    a0[0][0] = th / s.n_a[cell];
    a0[1][1] = th / s.n_b[cell];
    let rho = s.mass_density(species, cell);
    for k in 0..3 {
        a0[2 + k][2 + k] = rho;
    }
    a0[5][5] = T::of(1.5) * s.total_density(cell) / th;
    a0
}

/// Flux Jacobian `A_j` of the linearized system in the variables
/// `(σ^A, σ^B, u, θ)` at one cell.
pub fn flux_jacobian<T: Real>(
    s: &FluidState<T>,
    species: &SpeciesPair<T>,
    cell: usize,
    j: usize,
) -> [[T; 6]; 6] {
    let mut a = [[T::zero(); 6]; 6];
    let uj = s.u[j][cell];
    let th = s.theta[cell];
    let rho = s.mass_density(species, cell);
    let n = s.total_density(cell);
    a[0][0] = uj;
    a[0][2 + j] = s.n_a[cell];
    a[1][1] = uj;
    a[1][2 + j] = s.n_b[cell];
    for k in 0..3 {
        a[2 + k][2 + k] = uj;
    }
    a[2 + j][0] = th / rho;
    a[2 + j][1] = th / rho;
    a[2 + j][5] = n / rho;
    a[5][2 + j] = T::of(2.0 / 3.0) * th;
    a[5][5] = uj;
    a
}

pub fn a0_aj_matrix<T: Real>(
    s: &FluidState<T>,
    species: &SpeciesPair<T>,
    cell: usize,
    j: usize,
) -> [[T; 6]; 6] {
    let a0 = a0_matrix(s, species, cell);
    let aj = flux_jacobian(s, species, cell, j);
    let mut out = [[T::zero(); 6]; 6];
    for r in 0..6 {
        for c in 0..6 {
            let mut acc = T::zero();
            for k in 0..6 {
                acc += a0[r][k] * aj[k][c];
            }
            out[r][c] = acc;
        }
    }
    out
}

pub fn symmetrizer_check<T: Real>(
    s: &FluidState<T>,
    species: &SpeciesPair<T>,
    n_cells: usize,
    seed: u64,
) -> Result<SymmetrizerReport<T>> {
    use rand::{Rng, SeedableRng};
    s.validate_positive()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_asym = T::zero();
    let mut min_eig = T::max_value();
    for _ in 0..n_cells {
        let cell = rng.gen_range(0..s.grid.len());
        let a0 = a0_matrix(s, species, cell);
        for k in 0..6 {
            min_eig = min_eig.min(a0[k][k]);
        }
        for j in 0..3 {
            let m = a0_aj_matrix(s, species, cell, j);
            for r in 0..6 {
                for c in (r + 1)..6 {
                    max_asym = max_asym.max((m[r][c] - m[c][r]).abs());
                }
            }
        }
    }
    Ok(SymmetrizerReport { max_asymmetry: max_asym, min_eigenvalue_a0: min_eig })
}

/// Acoustic fluctuations `(σ^A, σ^B, u, θ)` around `(1, 1, 0, 1)`.
#[derive(Debug, Clone)]
pub struct AcousticState<T: Real> {
    pub grid: SpatialGrid<T>,
    pub sigma_a: Vec<T>,
    pub sigma_b: Vec<T>,
    pub u: [Vec<T>; 3],
    pub theta: Vec<T>,
}

impl<T: Real> AcousticState<T> {
    pub fn zeros(grid: &SpatialGrid<T>) -> Self {
        let len = grid.len();
        Self {
            grid: grid.clone(),
            sigma_a: vec![T::zero(); len],
            sigma_b: vec![T::zero(); len],
            u: [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]],
            theta: vec![T::zero(); len],
        }
    }

    pub fn sample(grid: &SpatialGrid<T>, f: impl Fn(Vec3<T>) -> (T, T, Vec3<T>, T)) -> Self {
        let mut out = Self::zeros(grid);
        for c in 0..grid.len() {
            let (sa, sb, u, th) = f(cell_coord(grid, c));
            out.sigma_a[c] = sa;
            out.sigma_b[c] = sb;
            for k in 0..3 {
                out.u[k][c] = u[k];
            }
            out.theta[c] = th;
        }
        out
    }
}

/// Acoustic wave speed squared, `10 / (3 (m^A + m^B))`.
pub fn acoustic_speed_sq<T: Real>(species: &SpeciesPair<T>) -> T {
    T::of(10.0 / 3.0) / species.mass_sum()
}

struct SpectralField<T: FftNum> {
    /// Complex coefficients per mode, unnormalized DFT.
    coeffs: Vec<Complex<T>>,
}

fn dft_all<T: Real + FftNum>(grid: &SpatialGrid<T>, fields: &[&[T]]) -> Vec<SpectralField<T>> {
    let len = grid.len();
    let mut planner = FftPlanner::new();
    match grid.dimension() {
        1 => {
            let fft = planner.plan_fft_forward(len);
            fields
                .iter()
                .map(|f| {
                    let mut buf: Vec<Complex<T>> =
                        f.iter().map(|&x| Complex::new(x, T::zero())).collect();
                    fft.process(&mut buf);
                    SpectralField { coeffs: buf }
                })
                .collect()
        }
        _ => {
            let m = grid.cells_per_axis();
            let fft = planner.plan_fft_forward(m);
            fields
                .iter()
                .map(|f| {
                    let mut buf: Vec<Complex<T>> =
                        f.iter().map(|&x| Complex::new(x, T::zero())).collect();
                    // Separable passes along z, y, x.
                    let mut scratch = vec![Complex::new(T::zero(), T::zero()); m];
                    for pass in 0..3 {
                        for outer in 0..m {
                            for inner in 0..m {
                                for (k, s) in scratch.iter_mut().enumerate() {
                                    let idx = match pass {
                                        0 => (outer * m + inner) * m + k,
                                        1 => (outer * m + k) * m + inner,
                                        _ => (k * m + outer) * m + inner,
                                    };
                                    *s = buf[idx];
                                }
                                fft.process(&mut scratch);
                                for (k, s) in scratch.iter().enumerate() {
                                    let idx = match pass {
                                        0 => (outer * m + inner) * m + k,
                                        1 => (outer * m + k) * m + inner,
                                        _ => (k * m + outer) * m + inner,
                                    };
                                    buf[idx] = *s;
                                }
                            }
                        }
                    }
                    SpectralField { coeffs: buf }
                })
                .collect()
        }
    }
}

fn idft_all<T: Real + FftNum>(grid: &SpatialGrid<T>, fields: Vec<SpectralField<T>>) -> Vec<Vec<T>> {
    let len = grid.len();
    let scale = T::one() / T::of_usize(len);
    let mut planner = FftPlanner::new();
    match grid.dimension() {
        1 => {
            let fft = planner.plan_fft_inverse(len);
            fields
                .into_iter()
                .map(|mut f| {
                    fft.process(&mut f.coeffs);
                    f.coeffs.iter().map(|c| c.re * scale).collect()
                })
                .collect()
        }
        _ => {
            let m = grid.cells_per_axis();
            let fft = planner.plan_fft_inverse(m);
            fields
                .into_iter()
                .map(|mut f| {
                    let buf = &mut f.coeffs;
                    let mut scratch = vec![Complex::new(T::zero(), T::zero()); m];
                    for pass in 0..3 {
                        for outer in 0..m {
                            for inner in 0..m {
                                for (k, s) in scratch.iter_mut().enumerate() {
                                    let idx = match pass {
                                        0 => (outer * m + inner) * m + k,
                                        1 => (outer * m + k) * m + inner,
                                        _ => (k * m + outer) * m + inner,
                                    };
                                    *s = buf[idx];
                                }
                                fft.process(&mut scratch);
                                for (k, s) in scratch.iter().enumerate() {
                                    let idx = match pass {
                                        0 => (outer * m + inner) * m + k,
                                        1 => (outer * m + k) * m + inner,
                                        _ => (k * m + outer) * m + inner,
                                    };
                                    buf[idx] = *s;
                                }
                            }
                        }
                    }
                    buf.iter().map(|c| c.re * scale).collect()
                })
                .collect()
        }
    }
}

/// Wavevector of a flat mode index.
fn wavevector<T: Real>(grid: &SpatialGrid<T>, mode: usize) -> Vec3<T> {
    let m = grid.cells_per_axis();
    let two_pi_over_l = T::of(2.0) * T::PI() / grid.period();
    let freq = |idx: usize| -> T {
        let half = m / 2;
        let signed = if idx <= half { idx as isize } else { idx as isize - m as isize };
        T::of(signed as f64)
    };
    match grid.dimension() {
        1 => [two_pi_over_l * freq(mode), T::zero(), T::zero()],
        _ => {
            let iz = mode % m;
            let iy = (mode / m) % m;
            let ix = mode / (m * m);
            [
                two_pi_over_l * freq(ix),
                two_pi_over_l * freq(iy),
                two_pi_over_l * freq(iz),
            ]
        }
    }
}

/// Exact-in-time spectral solution of the acoustic system: vorticity modes
/// are frozen, the compressible part oscillates with `ω² = c² |k|²`, and the
/// scalars are recovered from the velocity time integral.
pub fn acoustic_solve<T: Real + FftNum>(
    init: &AcousticState<T>,
    species: &SpeciesPair<T>,
    t: T,
) -> Result<AcousticState<T>> {
    let grid = &init.grid;
    let c_sq = acoustic_speed_sq(species);
    let msum = species.mass_sum();
    let fields: Vec<&[T]> = vec![
        &init.sigma_a,
        &init.sigma_b,
        &init.u[0],
        &init.u[1],
        &init.u[2],
        &init.theta,
    ];
    let mut spec = dft_all(grid, &fields);
    let len = grid.len();
    for mode in 0..len {
        let k = wavevector(grid, mode);
        let k_sq = norm_sq(k);
        if k_sq == T::zero() {
            continue;
        }
        let k_abs = k_sq.sqrt();
        let khat = [k[0] / k_abs, k[1] / k_abs, k[2] / k_abs];
        let sa0 = spec[0].coeffs[mode];
        let sb0 = spec[1].coeffs[mode];
        let th0 = spec[5].coeffs[mode];
        let u0 = [spec[2].coeffs[mode], spec[3].coeffs[mode], spec[4].coeffs[mode]];
        // Longitudinal component a = û·k̂ (complex).
        let mut a0 = Complex::new(T::zero(), T::zero());
        for kk in 0..3 {
            a0 = a0 + u0[kk] * Complex::new(khat[kk], T::zero());
        }
        // ∂_t a(0) = -i|k| (2θ̂ + n̂)/Σm with n̂ = σ̂^A + σ̂^B.
        let n0 = sa0 + sb0;
        let i_unit = Complex::new(T::zero(), T::one());
        let adot0 = -i_unit * Complex::new(k_abs / msum, T::zero())
            * (Complex::new(T::of(2.0), T::zero()) * th0 + n0);
        let omega = (c_sq * k_sq).sqrt();
        let (s, c) = ((omega * t).sin(), (omega * t).cos());
        let a_t = a0 * Complex::new(c, T::zero()) + adot0 * Complex::new(s / omega, T::zero());
        // ∫₀ᵗ a ds.
        let int_a = a0 * Complex::new(s / omega, T::zero())
            + adot0 * Complex::new((T::one() - c) / (omega * omega), T::zero());
        // Scalars: σ̇^α = -i k·û = -i |k| a; θ̇ = -(2/3) i |k| a.
        let drop = i_unit * Complex::new(k_abs, T::zero()) * int_a;
        spec[0].coeffs[mode] = sa0 - drop;
        spec[1].coeffs[mode] = sb0 - drop;
        spec[5].coeffs[mode] = th0 - Complex::new(T::of(2.0 / 3.0), T::zero()) * drop;
        for kk in 0..3 {
            let transverse = u0[kk] - a0 * Complex::new(khat[kk], T::zero());
            spec[2 + kk].coeffs[mode] = transverse + a_t * Complex::new(khat[kk], T::zero());
        }
    }
    let out = idft_all(grid, spec);
    let mut it = out.into_iter();
    Ok(AcousticState {
        grid: grid.clone(),
        sigma_a: it.next().unwrap(),
        sigma_b: it.next().unwrap(),
        u: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        theta: it.next().unwrap(),
    })
}

/// The conserved acoustic energy at derivative order `ℓ`:
/// `∫ |∂^ℓ u|² + 3 |∂^ℓ θ|²/Σm + |∂^ℓ n|²/(2 Σm) dx` with `n = σ^A + σ^B`,
/// evaluated spectrally.
pub fn acoustic_energy<T: Real + FftNum>(
    state: &AcousticState<T>,
    species: &SpeciesPair<T>,
    deriv_order: usize,
) -> T {
    let grid = &state.grid;
    let msum = species.mass_sum();
    let n_field: Vec<T> = state
        .sigma_a
        .iter()
        .zip(&state.sigma_b)
        .map(|(&a, &b)| a + b)
        .collect();
    let fields: Vec<&[T]> = vec![&state.u[0], &state.u[1], &state.u[2], &n_field, &state.theta];
    let spec = dft_all(grid, &fields);
    let len = grid.len();
    let vol = grid.period().powi(grid.dimension() as i32);
    let norm = vol / T::of_usize(len * len);
    let mut total = T::zero();
    for mode in 0..len {
        let k_sq = norm_sq(wavevector(grid, mode));
        let k_pow = k_sq.powi(deriv_order as i32);
        let mag = |c: Complex<T>| c.re * c.re + c.im * c.im;
        let u2 = mag(spec[0].coeffs[mode]) + mag(spec[1].coeffs[mode]) + mag(spec[2].coeffs[mode]);
        let n2 = mag(spec[3].coeffs[mode]);
        let th2 = mag(spec[4].coeffs[mode]);
        total += k_pow * (u2 + T::of(3.0) * th2 / msum + n2 / (T::of(2.0) * msum));
    }
    total * norm
}

/// Curl of the acoustic velocity field, computed spectrally.
pub fn vorticity<T: Real + FftNum>(state: &AcousticState<T>) -> [Vec<T>; 3] {
    let grid = &state.grid;
    let fields: Vec<&[T]> = vec![&state.u[0], &state.u[1], &state.u[2]];
    let spec = dft_all(grid, &fields);
    let len = grid.len();
    let mut curl_spec: Vec<SpectralField<T>> = (0..3)
        .map(|_| SpectralField { coeffs: vec![Complex::new(T::zero(), T::zero()); len] })
        .collect();
    let i_unit = Complex::new(T::zero(), T::one());
    for mode in 0..len {
        let k = wavevector(grid, mode);
        let u = [spec[0].coeffs[mode], spec[1].coeffs[mode], spec[2].coeffs[mode]];
        curl_spec[0].coeffs[mode] =
            i_unit * (Complex::new(k[1], T::zero()) * u[2] - Complex::new(k[2], T::zero()) * u[1]);
        curl_spec[1].coeffs[mode] =
            i_unit * (Complex::new(k[2], T::zero()) * u[0] - Complex::new(k[0], T::zero()) * u[2]);
        curl_spec[2].coeffs[mode] =
            i_unit * (Complex::new(k[0], T::zero()) * u[1] - Complex::new(k[1], T::zero()) * u[0]);
    }
    let out = idft_all(grid, curl_spec);
    let mut it = out.into_iter();
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// Burnett velocity fields at one fluid state: `A^α_{ij}` (traceless
/// quadratic) and `B^α_i` (cubic), both times `sqrt(μ_δ^α)`.
pub struct BurnettVectors<T: Real> {
    /// Row-major `[i][j]` storage of the nine `A^α_{ij}` pairs.
    pub a: Vec<DistributionField<T>>,
    pub b: [DistributionField<T>; 3],
}

pub fn burnett_vectors<T: Real>(
    params: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> BurnettVectors<T> {
    let theta = params.temperature;
    let u = params.bulk_velocity;
    let sqrt_mu = |s: Species, v: Vec3<T>| -> T {
        maxwellian(&params.params(s), species.mass(s), v).sqrt()
    };
    let mut a = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            a.push(DistributionField::sample(Frame::Fluctuation, grid, |s, v| {
                let m = species.mass(s);
                let w = sub(v, u);
                let quad = m * w[i] * w[j] / theta;
                let trace = if i == j { m * norm_sq(w) / (T::of(3.0) * theta) } else { T::zero() };
                (quad - trace) * sqrt_mu(s, v)
            }));
        }
    }
    let b_field = |i: usize| {
        DistributionField::sample(Frame::Fluctuation, grid, |s, v| {
            let m = species.mass(s);
            let w = sub(v, u);
            w[i] * T::of(0.5)
                * (m / theta).sqrt()
                * (m * norm_sq(w) / theta - T::of(5.0))
                * sqrt_mu(s, v)
        })
    };
    BurnettVectors { a, b: [b_field(0), b_field(1), b_field(2)] }
}

/// Source fields of the linearized Euler system built from the Burnett
/// moments of a fluctuation pair per cell: the momentum source `H` and the
/// `f`-moment part of the temperature source (the `-2 u_k·H` coupling is
/// applied inside the solver where `u_k` is known).
pub struct LinearEulerSources<T: Real> {
    pub h: [Vec<T>; 3],
    pub g_hat: Vec<T>,
}

impl<T: Real> LinearEulerSources<T> {
    pub fn zeros(grid: &SpatialGrid<T>) -> Self {
        let len = grid.len();
        Self {
            h: [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]],
            g_hat: vec![T::zero(); len],
        }
    }
}

/// Assembles `(H, ĝ)` from per-cell fluctuation pairs `f` on the background
/// state: divergence-form Burnett moments with centered differences.
pub fn linear_euler_sources<T: Real>(
    f_cells: &[DistributionField<T>],
    background: &FluidState<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<LinearEulerSources<T>> {
    let sgrid = &background.grid;
    let len = sgrid.len();
    if f_cells.len() != len {
        return Err(Error::Shape("one fluctuation pair per cell required".into()));
    }
    let dim = sgrid.dimension();
    // Burnett moments per cell. In H the species masses cancel against the
    // θ/m^α coefficient, so the species-summed pairing suffices; the B-part of
    // ĝ keeps a 1/sqrt(m^α) factor per species.
    let mut a_mom = vec![[[T::zero(); 3]; 3]; len];
    let mut b_mom = vec![[T::zero(); 3]; len];
    for (c, f) in f_cells.iter().enumerate() {
        f.expect_frame(Frame::Fluctuation)?;
        let params = background.bi_maxwell_at(c)?;
        let burnett = burnett_vectors(&params, species, vgrid);
        for i in 0..3 {
            for j in 0..3 {
                a_mom[c][i][j] = pair_inner(&burnett.a[i * 3 + j], f, vgrid)?;
            }
            let mut acc = T::zero();
            for sp in Species::BOTH {
                acc += crate::grids::inner_v(burnett.b[i].species(sp), f.species(sp), vgrid)?
                    / species.mass(sp).sqrt();
            }
            b_mom[c][i] = acc;
        }
    }
    let mut out = LinearEulerSources::zeros(sgrid);
    // H_i = -Σ_α m^α Σ_j ∂_j (θ/m^α ∫A_{ij} f) — the species sum is already
    // inside the pair inner products, so the mass factors cancel to θ ∫A f.
    for i in 0..3 {
        for j in 0..dim {
            let field: Vec<T> = (0..len)
                .map(|c| background.theta[c] * a_mom[c][i][j])
                .collect();
            let d = d_axis(&field, sgrid, j);
            for c in 0..len {
                out.h[i][c] -= d[c];
            }
        }
    }
    // ĝ = -2 Σ_i ∂_i (θ^{3/2} ∫B_i f + Σ_j u_j θ ∫A_{ij} f).
    for i in 0..dim {
        let field: Vec<T> = (0..len)
            .map(|c| {
                let th = background.theta[c];
                let mut acc = th.powf(T::of(1.5)) * b_mom[c][i];
                for j in 0..3 {
                    acc += background.u[j][c] * th * a_mom[c][i][j];
                }
                acc
            })
            .collect();
        let d = d_axis(&field, sgrid, i);
        for c in 0..len {
            out.g_hat[c] -= T::of(2.0) * d[c];
        }
    }
    Ok(out)
}

/// Linearized-Euler state has the same layout as a fluid state but no
/// positivity constraint.
pub type LinearEulerState<T> = FluidState<T>;

fn linear_euler_rhs<T: Real>(
    w: &LinearEulerState<T>,
    bg: &FluidState<T>,
    sources: &LinearEulerSources<T>,
    species: &SpeciesPair<T>,
) -> LinearEulerState<T> {
    let grid = &w.grid;
    let len = grid.len();
    let dim = grid.dimension();
    let mut rhs = FluidState::constant(grid, T::zero(), T::zero(), [T::zero(); 3], T::zero());
    rhs.n_a.iter_mut().for_each(|x| *x = T::zero());
    rhs.n_b.iter_mut().for_each(|x| *x = T::zero());
    rhs.theta.iter_mut().for_each(|x| *x = T::zero());

    // Continuity: ∂_t n_k^α = -div(n_k^α u_δ + n_δ^α u_k).
    for axis in 0..dim {
        let fa: Vec<T> = (0..len)
            .map(|c| w.n_a[c] * bg.u[axis][c] + bg.n_a[c] * w.u[axis][c])
            .collect();
        let fb: Vec<T> = (0..len)
            .map(|c| w.n_b[c] * bg.u[axis][c] + bg.n_b[c] * w.u[axis][c])
            .collect();
        let da = d_axis(&fa, grid, axis);
        let db = d_axis(&fb, grid, axis);
        for c in 0..len {
            rhs.n_a[c] -= da[c];
            rhs.n_b[c] -= db[c];
        }
    }

    // Pressure-like gradients.
    let pa: Vec<T> = (0..len).map(|c| bg.n_a[c] * bg.theta[c]).collect();
    let pb: Vec<T> = (0..len).map(|c| bg.n_b[c] * bg.theta[c]).collect();
    let qa: Vec<T> = (0..len)
        .map(|c| (bg.n_a[c] * w.theta[c] + T::of(3.0) * bg.theta[c] * w.n_a[c]) / T::of(3.0))
        .collect();
    let qb: Vec<T> = (0..len)
        .map(|c| (bg.n_b[c] * w.theta[c] + T::of(3.0) * bg.theta[c] * w.n_b[c]) / T::of(3.0))
        .collect();
    let grad_pa: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&pa, grid, a)).collect();
    let grad_pb: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&pb, grid, a)).collect();
    let grad_qa: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&qa, grid, a)).collect();
    let grad_qb: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&qb, grid, a)).collect();
    let grad_u_bg: Vec<[Vec<T>; 3]> = (0..dim)
        .map(|a| [d_axis(&bg.u[0], grid, a), d_axis(&bg.u[1], grid, a), d_axis(&bg.u[2], grid, a)])
        .collect();
    let grad_u_w: Vec<[Vec<T>; 3]> = (0..dim)
        .map(|a| [d_axis(&w.u[0], grid, a), d_axis(&w.u[1], grid, a), d_axis(&w.u[2], grid, a)])
        .collect();
    let grad_th_bg: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&bg.theta, grid, a)).collect();
    let grad_th_w: Vec<Vec<T>> = (0..dim).map(|a| d_axis(&w.theta, grid, a)).collect();

    for c in 0..len {
        let rho = bg.mass_density(species, c);
        let n_tot = bg.total_density(c);
        for k in 0..3 {
            let mut adv = T::zero();
            for a in 0..dim {
                adv += w.u[a][c] * grad_u_bg[a][k][c] + bg.u[a][c] * grad_u_w[a][k][c];
            }
            let bracket = if k < dim {
                w.n_a[c] / bg.n_a[c] * grad_pa[k][c] + w.n_b[c] / bg.n_b[c] * grad_pb[k][c]
            } else {
                T::zero()
            };
            let pressure = if k < dim { grad_qa[k][c] + grad_qb[k][c] } else { T::zero() };
            rhs.u[k][c] = (sources.h[k][c] + bracket - pressure) / rho - adv;
        }
        let mut div_u_bg = T::zero();
        let mut div_u_w = T::zero();
        for a in 0..dim {
            div_u_bg += grad_u_bg[a][a][c];
            div_u_w += grad_u_w[a][a][c];
        }
        let mut th_adv = T::zero();
        for a in 0..dim {
            th_adv += bg.u[a][c] * grad_th_w[a][c] + T::of(3.0) * w.u[a][c] * grad_th_bg[a][c];
        }
        let mut u_dot_h = T::zero();
        for k in 0..3 {
            u_dot_h += w.u[k][c] * sources.h[k][c];
        }
        let g = sources.g_hat[c] - T::of(2.0) * u_dot_h;
        rhs.theta[c] = g / n_tot
            - T::of(2.0 / 3.0) * (w.theta[c] * div_u_bg + T::of(3.0) * bg.theta[c] * div_u_w)
            - th_adv;
    }

    // Stabilization, scaled by the background wave speed.
    let lam = max_wave_speed(bg, species);
    let coef = T::of(DISSIPATION) * lam / grid.spacing();
    let damp = |f: &mut Vec<T>, src: &[T]| {
        let d4 = fourth_difference(src, grid);
        for c in 0..len {
            f[c] -= coef * d4[c];
        }
    };
    damp(&mut rhs.n_a, &w.n_a);
    damp(&mut rhs.n_b, &w.n_b);
    damp(&mut rhs.theta, &w.theta);
    for k in 0..3 {
        let uk = w.u[k].clone();
        damp(&mut rhs.u[k], &uk);
    }
    rhs
}

/// Time-interpolated source table for the linearized solve.
pub struct SourceTable<T: Real> {
    pub times: Vec<T>,
    pub sources: Vec<LinearEulerSources<T>>,
}

impl<T: Real> SourceTable<T> {
    pub fn zero(grid: &SpatialGrid<T>) -> Self {
        Self { times: vec![T::zero()], sources: vec![LinearEulerSources::zeros(grid)] }
    }

    fn at(&self, t: T, grid: &SpatialGrid<T>) -> LinearEulerSources<T> {
        if self.sources.is_empty() {
            return LinearEulerSources::zeros(grid);
        }
        if self.sources.len() == 1 || t <= self.times[0] {
            return clone_sources(&self.sources[0]);
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return clone_sources(&self.sources[last]);
        }
        let mut hi = 1;
        while self.times[hi] < t {
            hi += 1;
        }
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        let len = self.sources[lo].g_hat.len();
        let mut out = LinearEulerSources::zeros(grid);
        for c in 0..len {
            for k in 0..3 {
                out.h[k][c] = self.sources[lo].h[k][c]
                    + (self.sources[hi].h[k][c] - self.sources[lo].h[k][c]) * w;
            }
            out.g_hat[c] =
                self.sources[lo].g_hat[c] + (self.sources[hi].g_hat[c] - self.sources[lo].g_hat[c]) * w;
        }
        out
    }
}

fn clone_sources<T: Real>(s: &LinearEulerSources<T>) -> LinearEulerSources<T> {
    LinearEulerSources { h: [s.h[0].clone(), s.h[1].clone(), s.h[2].clone()], g_hat: s.g_hat.clone() }
}

/// Integrates the linearized Euler system over a frozen background
/// trajectory with the same scheme class as [`euler_solve`].
pub fn linear_euler_solve<T: Real>(
    init: &LinearEulerState<T>,
    background: &FluidTrajectory<T>,
    sources: &SourceTable<T>,
    species: &SpeciesPair<T>,
    t_end: T,
    cfl: T,
) -> Result<FluidTrajectory<T>> {
    let grid = init.grid.clone();
    let lam = max_wave_speed(&background.at(T::zero()), species);
    let dt_target = cfl * grid.spacing() / lam.max(T::of(1e-12));
    let n_steps = (t_end / dt_target).ceil().to_usize().unwrap_or(1).max(1);
    let dt = t_end / T::of_usize(n_steps);
    let mut state = init.clone();
    let mut times = vec![T::zero()];
    let mut states = vec![state.clone()];
    for step in 0..n_steps {
        let t = dt * T::of_usize(step);
        let bg0 = background.at(t);
        let src0 = sources.at(t, &grid);
        let k1 = linear_euler_rhs(&state, &bg0, &src0, species);
        let stage = state.zip_map(&k1, |a, b| a + dt * b);
        let bg1 = background.at(t + dt);
        let src1 = sources.at(t + dt, &grid);
        let k2 = linear_euler_rhs(&stage, &bg1, &src1, species);
        let half = T::of(0.5);
        let mut next = state.clone();
        let upd = |dst: &mut Vec<T>, s0: &[T], s1: &[T], r1: &[T]| {
            for c in 0..dst.len() {
                dst[c] = half * (s0[c] + s1[c] + dt * r1[c]);
            }
        };
        upd(&mut next.n_a, &state.n_a, &stage.n_a, &k2.n_a);
        upd(&mut next.n_b, &state.n_b, &stage.n_b, &k2.n_b);
        for k in 0..3 {
            upd(&mut next.u[k], &state.u[k], &stage.u[k], &k2.u[k]);
        }
        upd(&mut next.theta, &state.theta, &stage.theta, &k2.theta);
        for c in 0..grid.len() {
            if !next.n_a[c].is_finite() || !next.theta[c].is_finite() {
                return Err(Error::Numerical(format!(
                    "linear solve blew up at t = {}",
                    (t + dt).to_f64_lossy()
                )));
            }
        }
        state = next;
        times.push(dt * T::of_usize(step + 1));
        states.push(state.clone());
    }
    let max_deviation = states.iter().map(|s| s.deviation_sup()).fold(T::zero(), |a, b| a.max(b));
    Ok(FluidTrajectory { times, states, max_deviation })
}
