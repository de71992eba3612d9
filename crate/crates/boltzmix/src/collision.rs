//! Bilinear unequal-mass collision operators, the post-collision map, entropy
//! production, and conservation diagnostics.
//!
//! Evaluation scheme: the `(v_*, ω)` integral is a lattice × sphere-rule sum
//! with a deterministic loop order (`v` outer, `v_*` middle, `ω` inner).
//! Off-lattice post-collision points are evaluated by trilinear interpolation
//! with zero extension outside the grid box. Pairs with `|v - v_*| > 2R` are
//! skipped; both Maxwellian tails are negligible there.

use crate::error::{Error, Result};
use crate::field::{DistributionField, Frame};
use crate::grids::{AngularRule, VelocityGrid};
use crate::real::{dot, norm_sq, sub, tree_sum, Real, Vec3};
use crate::species::{Species, SpeciesPair};
use rayon::prelude::*;

/// Post-collision velocities for an (α, β) particle pair.
///
/// `v' = v - (2 m^β / (m^α + m^β)) [(v - v_*)·ω] ω` and
/// `v_*' = v_* + (2 m^α / (m^α + m^β)) [(v - v_*)·ω] ω`.
pub fn post_collision<T: Real>(
    v: Vec3<T>,
    v_star: Vec3<T>,
    omega: Vec3<T>,
    m_alpha: T,
    m_beta: T,
) -> Result<(Vec3<T>, Vec3<T>)> {
    let n2 = norm_sq(omega);
    if (n2 - T::one()).abs() > T::of(1e-14) {
        return Err(Error::Domain("ω must be a unit vector".into()));
    }
    let msum = m_alpha + m_beta;
    let proj = dot(sub(v, v_star), omega);
    let c_beta = T::of(2.0) * m_beta / msum;
    let c_alpha = T::of(2.0) * m_alpha / msum;
    let vp = [
        v[0] - c_beta * proj * omega[0],
        v[1] - c_beta * proj * omega[1],
        v[2] - c_beta * proj * omega[2],
    ];
    let vsp = [
        v_star[0] + c_alpha * proj * omega[0],
        v_star[1] + c_alpha * proj * omega[1],
        v_star[2] + c_alpha * proj * omega[2],
    ];
    Ok((vp, vsp))
}

/// Collision kernel `B^{αβ}(r, cos θ) = C_Φ^{αβ} r^γ b(cos θ)`.
pub fn kernel_b<T: Real>(
    r: T,
    cos_theta: T,
    alpha: Species,
    beta: Species,
    species: &SpeciesPair<T>,
) -> Result<T> {
    if r <= T::zero() {
        if species.gamma < T::zero() {
            return Err(Error::Domain("kernel singular at r = 0 for γ < 0".into()));
        }
        if r < T::zero() {
            return Err(Error::Domain("relative speed must be nonnegative".into()));
        }
    }
    let power = if species.gamma == T::zero() {
        T::one()
    } else {
        r.powf(species.gamma)
    };
    Ok(species.c_phi_of(alpha, beta) * power * species.angular(cos_theta))
}

#[derive(Clone, Copy)]
struct PairGeometry<T: Real> {
    /// `2 m^β / (m^α + m^β)` per (α, β) combination, indexed `[α][β]`.
    c_beta: [[T; 2]; 2],
    /// `2 m^α / (m^α + m^β)` per (α, β) combination.
    c_alpha: [[T; 2]; 2],
}

impl<T: Real> PairGeometry<T> {
    fn new(species: &SpeciesPair<T>) -> Self {
        let mut c_beta = [[T::zero(); 2]; 2];
        let mut c_alpha = [[T::zero(); 2]; 2];
        for a in Species::BOTH {
            for b in Species::BOTH {
                let msum = species.mass(a) + species.mass(b);
                c_beta[a.index()][b.index()] = T::of(2.0) * species.mass(b) / msum;
                c_alpha[a.index()][b.index()] = T::of(2.0) * species.mass(a) / msum;
            }
        }
        Self { c_beta, c_alpha }
    }

    #[inline]
    fn post(&self, a: usize, b: usize, v: Vec3<T>, v_star: Vec3<T>, proj_omega: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
        let cb = self.c_beta[a][b];
        let ca = self.c_alpha[a][b];
        (
            [
                v[0] - cb * proj_omega[0],
                v[1] - cb * proj_omega[1],
                v[2] - cb * proj_omega[2],
            ],
            [
                v_star[0] + ca * proj_omega[0],
                v_star[1] + ca * proj_omega[1],
                v_star[2] + ca * proj_omega[2],
            ],
        )
    }
}

/// Node-wise `Q^{αβ}(F, G)` on the lattice. `f` and `g` are single-species
/// node-value slices in the raw frame.
pub fn q_bilinear<T: Real>(
    f: &DistributionField<T>,
    g: &DistributionField<T>,
    alpha: Species,
    beta: Species,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
) -> Result<Vec<T>> {
    f.expect_frame(Frame::Raw)?;
    g.expect_frame(Frame::Raw)?;
    let points: Vec<Vec3<T>> = grid.nodes().collect();
    Ok(q_bilinear_inner(
        f.species(alpha),
        g.species(beta),
        alpha,
        beta,
        species,
        grid,
        angular,
        &points,
        None,
    ))
}

/// `Q^{αβ}(F, G)` evaluated at arbitrary probe points (the loss factor `F(p)`
/// is interpolated like the gain factors, so probe values are consistent with
/// node values).
pub fn q_bilinear_at_points<T: Real>(
    f: &DistributionField<T>,
    g: &DistributionField<T>,
    alpha: Species,
    beta: Species,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    points: &[Vec3<T>],
) -> Result<Vec<T>> {
    f.expect_frame(Frame::Raw)?;
    g.expect_frame(Frame::Raw)?;
    Ok(q_bilinear_inner(
        f.species(alpha),
        g.species(beta),
        alpha,
        beta,
        species,
        grid,
        angular,
        points,
        Some(f.species(alpha)),
    ))
}

#[allow(clippy::too_many_arguments)]
fn q_bilinear_inner<T: Real>(
    f_alpha: &[T],
    g_beta: &[T],
    alpha: Species,
    beta: Species,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    out_points: &[Vec3<T>],
    interpolate_loss: Option<&[T]>,
) -> Vec<T> {
    let nodes: Vec<Vec3<T>> = grid.nodes().collect();
    let geo = PairGeometry::new(species);
    let a = alpha.index();
    let b = beta.index();
    let h3 = grid.node_weight();
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let c_phi = species.c_phi_of(alpha, beta);
    let gamma = species.gamma;

    out_points
        .par_iter()
        .enumerate()
        .map(|(ip, &v)| {
            let f_v = match interpolate_loss {
                Some(vals) => grid.interpolate(vals, v),
                None => f_alpha[ip],
            };
            let mut terms: Vec<T> = Vec::with_capacity(nodes.len());
            for (j, &v_star) in nodes.iter().enumerate() {
                let u = sub(v, v_star);
                let r2 = norm_sq(u);
                if r2 > cutoff_sq {
                    terms.push(T::zero());
                    continue;
                }
                if interpolate_loss.is_none() && j == ip {
                    // Coincident nodes: the bracket vanishes identically.
                    terms.push(T::zero());
                    continue;
                }
                let r = r2.sqrt();
                if r == T::zero() {
                    terms.push(T::zero());
                    continue;
                }
                let g_j = g_beta[j];
                let loss_base = f_v * g_j;
                let r_pow = r.powf(gamma);
                let mut acc = T::zero();
                for (omega, w) in angular.iter() {
                    let proj = dot(u, omega);
                    let cos_theta = proj / r;
                    let b_ang = species.angular(cos_theta);
                    if b_ang == T::zero() {
                        continue;
                    }
                    let kern = c_phi * r_pow * b_ang;
                    let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                    let (vp, vsp) = geo.post(a, b, v, v_star, proj_omega);
                    let gain = grid.interpolate(f_alpha, vp) * grid.interpolate(g_beta, vsp);
                    acc += w * kern * (gain - loss_base);
                }
                terms.push(acc);
            }
            h3 * tree_sum(&terms)
        })
        .collect()
}

/// The full vector collision term `𝒞F` node-wise:
/// `(𝒞F)^α = Σ_β Q^{αβ}(F^α, F^β)`. All four species pairings share one sweep.
pub fn vector_collision_term<T: Real>(
    field: &DistributionField<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
) -> Result<DistributionField<T>> {
    field.expect_frame(Frame::Raw)?;
    let nodes: Vec<Vec3<T>> = grid.nodes().collect();
    let geo = PairGeometry::new(species);
    let h3 = grid.node_weight();
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let gamma = species.gamma;
    let fa = field.species(Species::A);
    let fb = field.species(Species::B);
    let c_phi = species.c_phi;

    let rows: Vec<[T; 2]> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let v = nodes[i];
            let mut terms_a: Vec<T> = Vec::with_capacity(nodes.len());
            let mut terms_b: Vec<T> = Vec::with_capacity(nodes.len());
            for (j, &v_star) in nodes.iter().enumerate() {
                if j == i {
                    terms_a.push(T::zero());
                    terms_b.push(T::zero());
                    continue;
                }
                let u = sub(v, v_star);
                let r2 = norm_sq(u);
                if r2 > cutoff_sq {
                    terms_a.push(T::zero());
                    terms_b.push(T::zero());
                    continue;
                }
                let r = r2.sqrt();
                let r_pow = r.powf(gamma);
                let mut acc = [T::zero(); 2];
                for (omega, w) in angular.iter() {
                    let proj = dot(u, omega);
                    let cos_theta = proj / r;
                    let b_ang = species.angular(cos_theta);
                    if b_ang == T::zero() {
                        continue;
                    }
                    let wk = w * r_pow * b_ang;
                    let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                    for (ai, fi) in [(0usize, fa[i]), (1usize, fb[i])] {
                        let f_alpha = if ai == 0 { fa } else { fb };
                        for (bi, gj) in [(0usize, fa[j]), (1usize, fb[j])] {
                            let g_beta = if bi == 0 { fa } else { fb };
                            let (vp, vsp) = geo.post(ai, bi, v, v_star, proj_omega);
                            let gain =
                                grid.interpolate(f_alpha, vp) * grid.interpolate(g_beta, vsp);
                            acc[ai] += wk * c_phi[ai][bi] * (gain - fi * gj);
                        }
                    }
                }
                terms_a.push(acc[0]);
                terms_b.push(acc[1]);
            }
            [h3 * tree_sum(&terms_a), h3 * tree_sum(&terms_b)]
        })
        .collect();

    let mut out = DistributionField::zeros(Frame::Raw, nodes.len());
    for (i, row) in rows.iter().enumerate() {
        out.species_mut(Species::A)[i] = row[0];
        out.species_mut(Species::B)[i] = row[1];
    }
    Ok(out)
}

/// Conservation diagnostics for the vector collision term of a state.
#[derive(Debug, Clone)]
pub struct ConservationReport<T: Real> {
    /// Weak-form pairings `<𝒞F, Ψ_k>` (quadrature realization of the weak
    /// integral; the change of variables is applied pointwise, so the defect
    /// measures the invariance of the post-collision map plus roundoff).
    pub weak_pairing: [T; 6],
    /// Unsigned activity used to normalize each pairing.
    pub gross: [T; 6],
    /// `|weak_pairing| / gross`.
    pub relative_defect: [T; 6],
}

/// Pairs the vector collision term with the six collision invariants in weak
/// form: `Σ_{αβ} Σ w B F^α(v) F^β(v_*) [ψ^α(v') + ψ^β(v_*') - ψ^α(v) - ψ^β(v_*)]`.
///
/// The species-count invariants are structurally exact here (collisions keep
/// species), so their pairings are identically zero; momentum and energy
/// defects measure the floating-point invariance of the collision map.
pub fn weak_invariant_pairings<T: Real>(
    field: &DistributionField<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
) -> Result<ConservationReport<T>> {
    field.expect_frame(Frame::Raw)?;
    let nodes: Vec<Vec3<T>> = grid.nodes().collect();
    let geo = PairGeometry::new(species);
    let h6 = grid.node_weight() * grid.node_weight();
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let gamma = species.gamma;
    let fa = field.species(Species::A);
    let fb = field.species(Species::B);
    let masses = [species.m_a, species.m_b];
    let c_phi = species.c_phi;
    let sup = field.sup_norm();
    let skip_threshold = sup * sup * T::of(1e-24);

    // Per-row partial sums: [net 2..=5 (4 values), gross 0..=5 (6 values)].
    let partials: Vec<[T; 10]> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let v = nodes[i];
            let mut acc = [T::zero(); 10];
            let f_i = [fa[i], fb[i]];
            let e_i = [masses[0] * norm_sq(v), masses[1] * norm_sq(v)];
            for (j, &v_star) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let g_j = [fa[j], fb[j]];
                let big = f_i[0].max(f_i[1]) * g_j[0].max(g_j[1]);
                if big < skip_threshold {
                    continue;
                }
                let u = sub(v, v_star);
                let r2 = norm_sq(u);
                if r2 > cutoff_sq {
                    continue;
                }
                let r = r2.sqrt();
                let r_pow = r.powf(gamma);
                let e_j = [masses[0] * norm_sq(v_star), masses[1] * norm_sq(v_star)];
                for (omega, w) in angular.iter() {
                    let proj = dot(u, omega);
                    let cos_theta = proj / r;
                    let b_ang = species.angular(cos_theta);
                    if b_ang == T::zero() {
                        continue;
                    }
                    let wk = w * r_pow * b_ang;
                    let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                    for ai in 0..2usize {
                        for bi in 0..2usize {
                            let base = wk * c_phi[ai][bi] * f_i[ai] * g_j[bi];
                            if base == T::zero() {
                                continue;
                            }
                            let (vp, vsp) = geo.post(ai, bi, v, v_star, proj_omega);
                            let abs_base = base.abs();
                            // Momentum components k = 2, 3, 4.
                            for k in 0..3 {
                                let delta = masses[ai] * (vp[k] - v[k])
                                    + masses[bi] * (vsp[k] - v_star[k]);
                                acc[k] += base * delta;
                                acc[4 + 2 + k] += abs_base
                                    * (masses[ai] * (vp[k].abs() + v[k].abs())
                                        + masses[bi] * (vsp[k].abs() + v_star[k].abs()));
                            }
                            // Energy k = 5.
                            let e_post =
                                masses[ai] * norm_sq(vp) + masses[bi] * norm_sq(vsp);
                            let e_pre = e_i[ai] + e_j[bi];
                            acc[3] += base * (e_post - e_pre);
                            acc[4 + 5] += abs_base * (e_post.abs() + e_pre.abs());
                            // Species counts: exactly conserved; gross only.
                            acc[4] += abs_base * T::of(2.0);
                            acc[5] += abs_base * T::of(2.0);
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let mut totals = [T::zero(); 10];
    for k in 0..10 {
        let col: Vec<T> = partials.iter().map(|p| p[k]).collect();
        totals[k] = tree_sum(&col);
    }
    let mut weak_pairing = [T::zero(); 6];
    let mut gross = [T::zero(); 6];
    weak_pairing[2] = h6 * totals[0];
    weak_pairing[3] = h6 * totals[1];
    weak_pairing[4] = h6 * totals[2];
    weak_pairing[5] = h6 * totals[3];
    for k in 0..6 {
        gross[k] = h6 * totals[4 + k];
    }
    let mut relative_defect = [T::zero(); 6];
    for k in 0..6 {
        let denom = gross[k].max(T::min_positive_value());
        relative_defect[k] = weak_pairing[k].abs() / denom;
    }
    Ok(ConservationReport { weak_pairing, gross, relative_defect })
}

/// Entropy production `<𝒞F, log F>`, evaluated in the symmetrized weak form
/// `-(1/2) Σ_{αβ} Σ w B [F'F'_* - F F_*] [log(F'F'_*) - log(F F_*)]`,
/// which is nonpositive term by term and vanishes exactly on node values with
/// the Maxwellian product property.
pub fn entropy_production<T: Real>(
    field: &DistributionField<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
) -> Result<T> {
    field.expect_frame(Frame::Raw)?;
    for s in Species::BOTH {
        if field.species(s).iter().any(|&x| x <= T::zero()) {
            return Err(Error::Domain("entropy production needs strictly positive nodes".into()));
        }
    }
    let nodes: Vec<Vec3<T>> = grid.nodes().collect();
    let geo = PairGeometry::new(species);
    let h6 = grid.node_weight() * grid.node_weight();
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let gamma = species.gamma;
    let fa = field.species(Species::A);
    let fb = field.species(Species::B);
    let c_phi = species.c_phi;
    // Products below this floor contribute nothing measurable; skipping them
    // keeps every retained term finite and nonpositive. Terms are skipped
    // whenever either side of the bracket falls under the floor, so pairs
    // whose loss products are all under it can be skipped outright.
    let sup = field.sup_norm();
    let floor = (T::of(1e-24) * sup * sup).max(T::min_positive_value().sqrt());

    let partials: Vec<T> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let v = nodes[i];
            let f_i = [fa[i], fb[i]];
            let f_i_max = f_i[0].max(f_i[1]);
            let mut acc = T::zero();
            for (j, &v_star) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                if f_i_max * fa[j].max(fb[j]) < floor {
                    continue;
                }
                let u = sub(v, v_star);
                let r2 = norm_sq(u);
                if r2 > cutoff_sq {
                    continue;
                }
                let r = r2.sqrt();
                let r_pow = r.powf(gamma);
                let g_j = [fa[j], fb[j]];
                for (omega, w) in angular.iter() {
                    let proj = dot(u, omega);
                    let cos_theta = proj / r;
                    let b_ang = species.angular(cos_theta);
                    if b_ang == T::zero() {
                        continue;
                    }
                    let wk = w * r_pow * b_ang;
                    let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                    for ai in 0..2usize {
                        let f_alpha = if ai == 0 { fa } else { fb };
                        for bi in 0..2usize {
                            let g_beta = if bi == 0 { fa } else { fb };
                            let loss = f_i[ai] * g_j[bi];
                            let (vp, vsp) = geo.post(ai, bi, v, v_star, proj_omega);
                            let gain =
                                grid.interpolate(f_alpha, vp) * grid.interpolate(g_beta, vsp);
                            if gain < floor || loss < floor {
                                continue;
                            }
                            let diff = gain - loss;
                            acc -= T::of(0.5) * wk * c_phi[ai][bi] * diff * (gain.ln() - loss.ln());
                        }
                    }
                }
            }
            acc
        })
        .collect();

    Ok(h6 * tree_sum(&partials))
}

/// Seeded Monte-Carlo estimator of `Q^{αβ}(F, G)` at selected output nodes,
/// for grids too large for the full pair sweep. Samples `(v_*, ω)` uniformly;
/// returns per-node estimates and standard errors.
pub fn q_bilinear_monte_carlo<T: Real>(
    f: &DistributionField<T>,
    g: &DistributionField<T>,
    alpha: Species,
    beta: Species,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    out_nodes: &[usize],
    samples: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    use rand::{Rng, SeedableRng};
    f.expect_frame(Frame::Raw)?;
    g.expect_frame(Frame::Raw)?;
    if samples == 0 {
        return Err(Error::Domain("need at least one Monte-Carlo sample".into()));
    }
    let geo = PairGeometry::new(species);
    let a = alpha.index();
    let b = beta.index();
    let f_alpha = f.species(alpha);
    let g_beta = g.species(beta);
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let c_phi = species.c_phi_of(alpha, beta);
    let gamma = species.gamma;
    let n_nodes = grid.len();
    // Uniform over (node j, rule direction): the estimator of the lattice sum
    // Σ_j h³ Σ_ω w_ω q is N³ n_ω E[h³ w_ω q], with the rule weight inside the
    // per-sample value.
    let scale = grid.node_weight() * T::of_usize(n_nodes) * T::of_usize(angular.len());

    let mut means = Vec::with_capacity(out_nodes.len());
    let mut errs = Vec::with_capacity(out_nodes.len());
    for (k, &i) in out_nodes.iter().enumerate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9));
        let v = grid.node(i);
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        for _ in 0..samples {
            let j = rng.gen_range(0..n_nodes);
            let iw = rng.gen_range(0..angular.len());
            let mut val = T::zero();
            if j != i {
                let v_star = grid.node(j);
                let u = sub(v, v_star);
                let r2 = norm_sq(u);
                if r2 <= cutoff_sq {
                    let r = r2.sqrt();
                    let omega = angular.directions[iw];
                    let proj = dot(u, omega);
                    let cos_theta = proj / r;
                    let b_ang = species.angular(cos_theta);
                    if b_ang != T::zero() {
                        let kern = c_phi * r.powf(gamma) * b_ang;
                        let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                        let (vp, vsp) = geo.post(a, b, v, v_star, proj_omega);
                        let gain = grid.interpolate(f_alpha, vp) * grid.interpolate(g_beta, vsp);
                        val = angular.weights[iw] * kern * (gain - f_alpha[i] * g_beta[j]);
                    }
                }
            }
            sum += val;
            sum_sq += val * val;
        }
        let n = T::of_usize(samples);
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(T::zero());
        means.push(scale * mean);
        errs.push(scale * (var / n).sqrt());
    }
    Ok((means, errs))
}
