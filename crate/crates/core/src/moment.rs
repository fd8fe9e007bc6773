//! Contact Hamiltonians, the infinitesimal action of strict contact
//! transformations on compatible structures, the formal Kähler structure
//! `(Omega, J)` on that space, and the moment map with its derived
//! functionals (Calabi energy, Futaki invariant, extremal projection).

use serde::Serialize;

use crate::curvature::{christoffel, scalar_curvature, scalar_variation_q_with};
use crate::elliptic::flat_inverse_laplacian;
use crate::error::{KError, Result};
use crate::grid::{Grid, ScalarField, TrigField};
use crate::linalg;
use crate::structure::{derivative_of_matrix_field, polar_retraction, KContactStructure, STRUCTURE_TOL};

/// Pointwise tolerance on `A Phi + Phi A` and `omega A + A^T omega`.
pub const TANGENCY_TOL: f64 = 1e-9;
/// Tangency residual of the action formula above which it is reported as
/// inconsistent rather than merely inaccurate.
pub const ACTION_CONSISTENCY_TOL: f64 = 1e-6;
/// Relative tolerance for membership in the torus algebra.
pub const SPAN_TOL: f64 = 1e-8;
/// Commutation tolerance for torus generators.
pub const COMMUTATION_TOL: f64 = 1e-8;

/// A basic function viewed as the Hamiltonian of a strict contact vector
/// field `X_f`: `eta(X_f) = f`, `d eta(X_f, .) = -df`.
#[derive(Debug, Clone)]
pub struct ContactHamiltonian {
    f: ScalarField,
}

impl ContactHamiltonian {
    pub fn new(f: ScalarField) -> Self {
        Self { f }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { f: ScalarField::constant(grid, c) }
    }

    pub fn function(&self) -> &ScalarField {
        &self.f
    }

    /// `eta(X_f)`.
    pub fn reeb_component(&self) -> &ScalarField {
        &self.f
    }

    /// Transverse components `X^i = (omega^{-1})^{ij} d_j f`.
    pub fn vector_field(&self) -> Vec<ScalarField> {
        hamiltonian_vector_field(&self.f)
    }
}

/// `X^i = (omega^{-1})^{ij} d_j f` for the standard `omega`; the
/// structure does not enter.
pub fn hamiltonian_vector_field(f: &ScalarField) -> Vec<ScalarField> {
    let grid = f.grid();
    let d = grid.dim();
    let winv = linalg::transpose(&crate::structure::standard_omega(d), d);
    let df: Vec<ScalarField> = (0..d).map(|j| f.partial_derivative(j).expect("axis in range")).collect();
    (0..d)
        .map(|i| {
            let mut x = ScalarField::zeros(grid);
            for (j, dj) in df.iter().enumerate() {
                let w = winv[i * d + j];
                if w != 0.0 {
                    x = x.add(&dj.scale(w));
                }
            }
            x
        })
        .collect()
}

/// Recovers the Hamiltonian of a strict contact field from its transverse
/// part (through `df = -i_X d eta`) and its Reeb component (which fixes the
/// constant). Returns the function and the largest disagreement between the
/// two descriptions.
pub fn hamiltonian_of(x: &[ScalarField], reeb: &ScalarField) -> Result<(ScalarField, f64)> {
    let grid = reeb.grid();
    let d = grid.dim();
    if x.len() != d {
        return Err(KError::Precondition("vector field has wrong number of components".into()));
    }
    let omega = crate::structure::standard_omega(d);
    // (df)_j = -X^i omega_{ij}
    let df: Vec<ScalarField> = (0..d)
        .map(|j| {
            let mut v = ScalarField::zeros(grid);
            for (i, xi) in x.iter().enumerate() {
                let w = omega[i * d + j];
                if w != 0.0 {
                    v = v.sub(&xi.scale(w));
                }
            }
            v
        })
        .collect();
    // Delta f = -sum_j d_j (df)_j with the flat positive Laplacian
    let mut div = ScalarField::zeros(grid);
    for (j, c) in df.iter().enumerate() {
        div = div.sub(&c.partial_derivative(j)?);
    }
    let f0 = ScalarField::from_vec(grid, flat_inverse_laplacian(grid, div.values(), 1));
    let f = f0.add(&ScalarField::constant(grid, reeb.mean()));
    Ok((f.clone(), f.sub(reeb).max_abs()))
}

/// A tangent vector to the space of compatible structures at `Phi`: a
/// matrix field anticommuting with `Phi` and lying in `sp(omega)`.
#[derive(Debug, Clone)]
pub struct TangentDeformation {
    grid: Grid,
    a: Vec<f64>,
}

impl TangentDeformation {
    /// Checks both tangency conditions at `TANGENCY_TOL`.
    pub fn new(s: &KContactStructure, a: Vec<f64>) -> Result<Self> {
        let t = Self::unchecked(s.grid(), a);
        t.check(s)?;
        Ok(t)
    }

    pub fn unchecked(grid: &Grid, a: Vec<f64>) -> Self {
        assert_eq!(a.len(), grid.points() * grid.dim() * grid.dim(), "matrix field has wrong length");
        Self { grid: grid.clone(), a }
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::unchecked(grid, vec![0.0; grid.points() * grid.dim() * grid.dim()])
    }

    /// Pointwise projection of an arbitrary matrix field onto the tangent
    /// space: `A -> (A + Phi A Phi) / 2` followed by the `sp(omega)` part.
    pub fn project(s: &KContactStructure, raw: &[f64]) -> Self {
        let d = s.dim();
        let omega = s.omega();
        let omega_inv = s.omega_inv();
        let mut out = Vec::with_capacity(raw.len());
        for (pt, m) in raw.chunks_exact(d * d).enumerate() {
            let phi = s.phi_at(pt);
            let pap = linalg::matmul(phi, &linalg::matmul(m, phi, d), d);
            let anti: Vec<f64> = m.iter().zip(&pap).map(|(x, y)| 0.5 * (x + y)).collect();
            let w = linalg::matmul(omega, &anti, d);
            let sym: Vec<f64> = (0..d * d).map(|k| 0.5 * (w[k] + w[(k % d) * d + k / d])).collect();
            out.extend(linalg::matmul(omega_inv, &sym, d));
        }
        Self::unchecked(s.grid(), out)
    }

    /// Random band-limited tangent vector (projection of a random matrix
    /// field whose entries have sup bound `amplitude`).
    pub fn random(s: &KContactStructure, seed: u64, cutoff: usize, amplitude: f64) -> Result<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = s.dim();
        let grid = s.grid();
        let mut raw = vec![0.0; grid.points() * d * d];
        for c in 0..d * d {
            let f = TrigField::random(d, cutoff, amplitude, false, &mut rng).sample(grid)?;
            for (pt, v) in f.values().iter().enumerate() {
                raw[pt * d * d + c] = *v;
            }
        }
        Ok(Self::project(s, &raw))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Point-major row-major matrices `A^i_j`.
    pub fn matrices(&self) -> &[f64] {
        &self.a
    }

    pub fn at(&self, pt: usize) -> &[f64] {
        let dd = self.grid.dim() * self.grid.dim();
        &self.a[pt * dd..(pt + 1) * dd]
    }

    /// Max over the grid of `|A Phi + Phi A|` and `|omega A + A^T omega|`.
    pub fn tangency_residuals(&self, s: &KContactStructure) -> (f64, f64) {
        let d = s.dim();
        let omega = s.omega();
        let (mut r1, mut r2): (f64, f64) = (0.0, 0.0);
        for (pt, m) in self.a.chunks_exact(d * d).enumerate() {
            let phi = s.phi_at(pt);
            let ap = linalg::matmul(m, phi, d);
            let pa = linalg::matmul(phi, m, d);
            r1 = r1.max(ap.iter().zip(&pa).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max));
            let wa = linalg::matmul(omega, m, d);
            for i in 0..d {
                for j in 0..d {
                    r2 = r2.max((wa[i * d + j] - wa[j * d + i]).abs());
                }
            }
        }
        (r1, r2)
    }

    pub fn check(&self, s: &KContactStructure) -> Result<()> {
        if !self.grid.same_as(s.grid()) {
            return Err(KError::GridMismatch);
        }
        let (r1, r2) = self.tangency_residuals(s);
        if r1 > TANGENCY_TOL {
            return Err(KError::Tangency { what: "A Phi + Phi A = 0", residual: r1 });
        }
        if r2 > TANGENCY_TOL {
            return Err(KError::Tangency { what: "d eta(A., .) + d eta(., A.) = 0", residual: r2 });
        }
        Ok(())
    }

    /// `J A = Phi A`.
    pub fn rotate(&self, s: &KContactStructure) -> Self {
        let d = s.dim();
        let mut out = Vec::with_capacity(self.a.len());
        for (pt, m) in self.a.chunks_exact(d * d).enumerate() {
            out.extend(linalg::matmul(s.phi_at(pt), m, d));
        }
        Self::unchecked(&self.grid, out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::unchecked(&self.grid, self.a.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::unchecked(&self.grid, self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::unchecked(&self.grid, self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect())
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.a)
    }

    /// `L^2` norm with the pointwise metric inner product `trace(A^* A)`.
    pub fn l2_norm(&self, s: &KContactStructure) -> f64 {
        let d = s.dim();
        let vals: Vec<f64> = self
            .a
            .chunks_exact(d * d)
            .enumerate()
            .map(|(pt, m)| {
                let g = s.metric_at(pt);
                let gi = s.metric_inv_at(pt);
                let adj = linalg::matmul(gi, &linalg::matmul(&linalg::transpose(m, d), g, d), d);
                (0..d).map(|i| (0..d).map(|k| adj[i * d + k] * m[k * d + i]).sum::<f64>()).sum()
            })
            .collect();
        ScalarField::from_vec(s.grid(), vals).integral().max(0.0).sqrt()
    }
}

/// Lie derivative `(L_X Phi)^i_j = X^p d_p Phi^i_j - Phi^p_j d_p X^i + Phi^i_p d_j X^p`.
pub fn lie_derivative_phi(s: &KContactStructure, x: &[ScalarField]) -> Vec<f64> {
    let grid = s.grid();
    let d = s.dim();
    // M^i_p = d_p X^i
    let dx: Vec<Vec<ScalarField>> =
        x.iter().map(|xi| (0..d).map(|p| xi.partial_derivative(p).expect("axis")).collect()).collect();
    let mut out = vec![0.0; grid.points() * d * d];
    for pt in 0..grid.points() {
        let phi = s.phi_at(pt);
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for p in 0..d {
                m[i * d + p] = dx[i][p].values()[pt];
            }
        }
        let pm = linalg::matmul(phi, &m, d);
        let mp = linalg::matmul(&m, phi, d);
        let o = &mut out[pt * d * d..(pt + 1) * d * d];
        for c in 0..d * d {
            let mut v = pm[c] - mp[c];
            for (p, xp) in x.iter().enumerate() {
                v += xp.values()[pt] * s.dphi(p)[pt * d * d + c];
            }
            o[c] = v;
        }
    }
    out
}

/// The infinitesimal action `-L_{X_f} Phi`.
pub fn infinitesimal_action(s: &KContactStructure, f: &ContactHamiltonian) -> Result<TangentDeformation> {
    if !f.function().grid().same_as(s.grid()) {
        return Err(KError::GridMismatch);
    }
    let l = lie_derivative_phi(s, &f.vector_field());
    let t = TangentDeformation::unchecked(s.grid(), l.iter().map(|v| -v).collect());
    let (r1, r2) = t.tangency_residuals(s);
    let r = r1.max(r2);
    if r > ACTION_CONSISTENCY_TOL {
        return Err(KError::ActionInconsistency(r));
    }
    Ok(t)
}

/// `Omega(A, B) = int trace(Phi A B) dv`.
pub fn omega_pairing(s: &KContactStructure, a: &TangentDeformation, b: &TangentDeformation) -> Result<f64> {
    a.check(s)?;
    b.check(s)?;
    Ok(omega_pairing_unchecked(s, a, b))
}

fn omega_pairing_unchecked(s: &KContactStructure, a: &TangentDeformation, b: &TangentDeformation) -> f64 {
    let d = s.dim();
    let vals: Vec<f64> = (0..s.grid().points())
        .map(|pt| {
            let pab = linalg::matmul(s.phi_at(pt), &linalg::matmul(a.at(pt), b.at(pt), d), d);
            (0..d).map(|i| pab[i * d + i]).sum()
        })
        .collect();
    integrate(s, &ScalarField::from_vec(s.grid(), vals))
}

fn integrate(s: &KContactStructure, f: &ScalarField) -> f64 {
    f.integrate(s.volume_density()).expect("same grid")
}

/// `mu(Phi)(f) = -int s-bar f dv`.
pub fn moment(s: &KContactStructure, f: &ContactHamiltonian) -> Result<f64> {
    let sbar = scalar_curvature(s)?;
    Ok(moment_with_scalar(s, &sbar, f))
}

pub fn moment_with_scalar(s: &KContactStructure, sbar: &ScalarField, f: &ContactHamiltonian) -> f64 {
    -integrate(s, &sbar.mul(f.function()))
}

/// `int s-bar^2 dv`.
pub fn calabi(s: &KContactStructure) -> Result<f64> {
    let sbar = scalar_curvature(s)?;
    Ok(integrate(s, &sbar.mul(&sbar)))
}

/// The path `Phi_t = Phi exp(-t Phi A)`, which stays exactly compatible and
/// has velocity `A` at `t = 0`.
pub fn deform_path(s: &KContactStructure, a: &TangentDeformation, t: f64) -> Result<KContactStructure> {
    a.check(s)?;
    deform_path_unchecked(s, a, t)
}

pub(crate) fn deform_path_unchecked(s: &KContactStructure, a: &TangentDeformation, t: f64) -> Result<KContactStructure> {
    if t == 0.0 {
        return Ok(s.clone());
    }
    let d = s.dim();
    let mut phi = Vec::with_capacity(s.phi().len());
    for pt in 0..s.grid().points() {
        let p = s.phi_at(pt);
        let gen: Vec<f64> = linalg::matmul(p, a.at(pt), d).iter().map(|v| -t * v).collect();
        phi.extend(linalg::matmul(p, &linalg::expm(&gen, d), d));
    }
    let candidate = KContactStructure::unchecked(s.grid(), phi);
    let res = candidate.residuals();
    if res.phi_squared.max(res.omega_invariance).max(res.metric_symmetry) <= STRUCTURE_TOL {
        candidate.validate(STRUCTURE_TOL)?;
        return Ok(candidate);
    }
    // drift from the exponential: retract onto the compatible cone
    let retracted = polar_retraction(d, candidate.phi())?;
    KContactStructure::new(s.grid(), retracted)
}

/// `Omega(-L_{X_f} Phi, A) = MOMENT_PAIRING_FACTOR * int f Q(A) dv` is what
/// the action, the pairing and the first variation of `s-bar` actually
/// satisfy when `X_f` is defined by `d eta(X_f, .) = -df`: the constant is
/// `+2`, not `-1`. See `MomentResidual`.
pub const MOMENT_PAIRING_FACTOR: f64 = 2.0;

/// Both sides of the moment-map identity.
#[derive(Debug, Clone, Serialize)]
pub struct MomentResidual {
    /// `Omega(-L_{X_f} Phi, A)`.
    pub omega_side: f64,
    /// `int f Q(A) dv`.
    pub q_side: f64,
    /// `int f (d/dt s-bar) dv` along `deform_path`.
    pub fd_side: f64,
    /// `|Omega(-L_X Phi, A) + int f Q(A)|`, the identity as stated.
    pub residual: f64,
    /// Same with `Q(A)` replaced by the finite difference of `s-bar`.
    pub residual_fd: f64,
    /// `|Omega(-L_X Phi, A) - 2 int f Q(A)|`.
    pub residual_measured: f64,
    pub residual_measured_fd: f64,
    /// `||f|| ||Q(A)||`, the natural size of either side.
    pub scale: f64,
}

/// Verification harness for the moment-map identity.
pub fn moment_identity_residual(
    s: &KContactStructure,
    f: &ContactHamiltonian,
    a: &TangentDeformation,
    t_step: f64,
) -> Result<MomentResidual> {
    if !(1e-6..=1e-3).contains(&t_step) {
        return Err(KError::Precondition(format!("finite-difference step {t_step:e} outside [1e-6, 1e-3]")));
    }
    a.check(s)?;
    let action = infinitesimal_action(s, f)?;
    let omega_side = omega_pairing_unchecked(s, &action, a);
    let lc = christoffel(s)?;
    let q = scalar_variation_q_with(s, &lc, a);
    let q_side = integrate(s, &f.function().mul(&q));
    let fd = scalar_derivative_along(s, a, t_step)?;
    let fd_side = integrate(s, &f.function().mul(&fd));
    let fnorm = integrate(s, &f.function().mul(f.function())).sqrt();
    let qnorm = integrate(s, &q.mul(&q)).sqrt();
    Ok(MomentResidual {
        omega_side,
        q_side,
        fd_side,
        residual: (omega_side + q_side).abs(),
        residual_fd: (omega_side + fd_side).abs(),
        residual_measured: (omega_side - MOMENT_PAIRING_FACTOR * q_side).abs(),
        residual_measured_fd: (omega_side - MOMENT_PAIRING_FACTOR * fd_side).abs(),
        scale: fnorm * qnorm,
    })
}

/// Richardson-extrapolated central difference of `s-bar` along
/// `deform_path`.
pub fn scalar_derivative_along(s: &KContactStructure, a: &TangentDeformation, t: f64) -> Result<ScalarField> {
    let central = |h: f64| -> Result<ScalarField> {
        let plus = scalar_curvature(&deform_path(s, a, h)?)?;
        let minus = scalar_curvature(&deform_path(s, a, -h)?)?;
        Ok(plus.sub(&minus).scale(0.5 / h))
    };
    let coarse = central(t)?;
    let fine = central(0.5 * t)?;
    Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
}

/// Hamiltonians of a torus of strict contact transformations containing
/// the Reeb flow.
#[derive(Debug, Clone)]
pub struct TorusAlgebra {
    generators: Vec<ScalarField>,
    /// Inverse Gram matrix in `L^2(dv)`.
    gram_inv: Vec<f64>,
}

impl TorusAlgebra {
    /// The Reeb circle alone, `G = {1}`.
    pub fn reeb(grid: &Grid) -> Self {
        Self::new(vec![ScalarField::constant(grid, 1.0)]).expect("constant generator is valid")
    }

    /// Validates independence, commutation and the presence of the
    /// constants.
    pub fn new(generators: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(KError::InvalidTorus("no generators".into()));
        };
        let grid = first.grid().clone();
        if generators.iter().any(|g| !g.grid().same_as(&grid)) {
            return Err(KError::GridMismatch);
        }
        let m = generators.len();
        let gram: Vec<f64> =
            (0..m * m).map(|k| generators[k / m].mul(&generators[k % m]).integral()).collect();
        let scale = (0..m).map(|i| gram[i * m + i]).fold(0.0, f64::max);
        let min = linalg::min_sym_eigenvalue(&gram, m);
        if !(min > 1e-12 * scale) {
            return Err(KError::SingularGram);
        }
        let gram_inv = linalg::inverse(&gram, m).ok_or(KError::SingularGram)?;
        let torus = Self { generators, gram_inv };
        let one = ScalarField::constant(&grid, 1.0);
        let r = torus.span_residual(&one);
        if r > SPAN_TOL {
            return Err(KError::InvalidTorus(format!("the constants (Reeb field) are not in the span (residual {r:e})")));
        }
        let fields: Vec<Vec<ScalarField>> = torus.generators.iter().map(hamiltonian_vector_field).collect();
        for i in 0..m {
            for j in 0..i {
                let c = bracket_max(&fields[i], &fields[j]);
                if c > COMMUTATION_TOL {
                    return Err(KError::InvalidTorus(format!("generators {i} and {j} do not commute (|[X, Y]| = {c:e})")));
                }
            }
        }
        Ok(torus)
    }

    pub fn generators(&self) -> &[ScalarField] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `L^2(dv)`-orthogonal projection onto the span.
    pub fn project(&self, f: &ScalarField) -> ScalarField {
        let m = self.generators.len();
        let b: Vec<f64> = self.generators.iter().map(|g| g.mul(f).integral()).collect();
        let mut out = ScalarField::zeros(f.grid());
        for i in 0..m {
            let c: f64 = (0..m).map(|j| self.gram_inv[i * m + j] * b[j]).sum();
            out = out.add(&self.generators[i].scale(c));
        }
        out
    }

    /// `||f - Pi f|| / ||f||` (zero for `f = 0`).
    pub fn span_residual(&self, f: &ScalarField) -> f64 {
        let nf = f.mul(f).integral().sqrt();
        if nf == 0.0 {
            return 0.0;
        }
        let r = f.sub(&self.project(f));
        r.mul(&r).integral().sqrt() / nf
    }
}

fn bracket_max(x: &[ScalarField], y: &[ScalarField]) -> f64 {
    let d = x.len();
    let mut m: f64 = 0.0;
    for i in 0..d {
        let mut c = ScalarField::zeros(x[0].grid());
        for p in 0..d {
            c = c.add(&x[p].mul(&y[i].partial_derivative(p).expect("axis")));
            c = c.sub(&y[p].mul(&x[i].partial_derivative(p).expect("axis")));
        }
        m = m.max(c.max_abs());
    }
    m
}

/// `s-bar` minus its mean.
pub fn zero_mean_part(s: &KContactStructure, f: &ScalarField) -> ScalarField {
    let v = s.volume_density().integral();
    let mean = integrate(s, f) / v;
    f.map(|x| x - mean)
}

/// Futaki invariant `int f_X (s-bar - mean) dv` of `X = X_{f_X}` in `Lie(G)`.
pub fn futaki(s: &KContactStructure, g: &TorusAlgebra, f_x: &ContactHamiltonian) -> Result<f64> {
    let r = g.span_residual(f_x.function());
    if r > SPAN_TOL {
        return Err(KError::OutsideTorus(r));
    }
    let sbar = scalar_curvature(s)?;
    Ok(futaki_with_scalar(s, &sbar, f_x))
}

pub fn futaki_with_scalar(s: &KContactStructure, sbar: &ScalarField, f_x: &ContactHamiltonian) -> f64 {
    integrate(s, &f_x.function().mul(&zero_mean_part(s, sbar)))
}

/// The extremal Hamiltonian `z = Pi^G s-bar`.
pub fn extremal_field(s: &KContactStructure, g: &TorusAlgebra) -> Result<ContactHamiltonian> {
    Ok(ContactHamiltonian::new(g.project(&scalar_curvature(s)?)))
}

/// `(||L_{X_s} Phi||, ||s - Pi^G s||)` in `L^2`.
pub fn criticality_residual(s: &KContactStructure, g: &TorusAlgebra) -> Result<(f64, f64)> {
    let sbar = scalar_curvature(s)?;
    Ok(criticality_with_scalar(s, g, &sbar))
}

pub fn criticality_with_scalar(s: &KContactStructure, g: &TorusAlgebra, sbar: &ScalarField) -> (f64, f64) {
    let lie = lie_derivative_phi(s, &hamiltonian_vector_field(sbar));
    let lie_norm = TangentDeformation::unchecked(s.grid(), lie).l2_norm(s);
    let r = sbar.sub(&g.project(sbar));
    (lie_norm, integrate(s, &r.mul(&r)).sqrt())
}

/// `F(Z) + S^2 / V`, a lower bound for the Calabi energy.
pub fn futaki_lower_bound(s: &KContactStructure, g: &TorusAlgebra) -> Result<f64> {
    let sbar = scalar_curvature(s)?;
    Ok(lower_bound_with_scalar(s, g, &sbar))
}

pub fn lower_bound_with_scalar(s: &KContactStructure, g: &TorusAlgebra, sbar: &ScalarField) -> f64 {
    let z = ContactHamiltonian::new(g.project(sbar));
    let total = integrate(s, sbar);
    let vol = s.volume_density().integral();
    futaki_with_scalar(s, sbar, &z) + total * total / vol
}

/// Helper for callers that need `d_p` of a matrix field.
pub fn matrix_field_derivatives(grid: &Grid, field: &[f64]) -> Vec<Vec<f64>> {
    derivative_of_matrix_field(grid, field)
}
