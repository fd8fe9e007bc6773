//! Deformations by a potential, the semi-Sasakian test, the extremal
//! (Calabi) gradient flow on compatible structures, and continuation of
//! extremal structures along a family `Phi_t`.

use serde::Serialize;

use crate::calculus::{d_c, exterior_d, norm, pointwise_inner};
use crate::curvature::{christoffel, scalar_curvature, scalar_variation_q_with};
use crate::elliptic::{flat_inverse_laplacian, harmonic_dims, j_anti_invariant, Hodge, SpectrumReport};
use crate::error::{KError, Result};
use crate::forms::{BasicForm, IndexTables};
use crate::grid::ScalarField;
use crate::linalg;
use crate::moment::{
    criticality_with_scalar, deform_path_unchecked, hamiltonian_vector_field, lie_derivative_phi,
    lower_bound_with_scalar, TangentDeformation, TorusAlgebra,
};
use crate::structure::{polar_retraction, KContactStructure};

/// Tolerance on `int f dv = 0` for a potential (relative to `max(1, |f|)`).
pub const MEAN_ZERO_TOL: f64 = 1e-10;
/// Structure-invariant drift that triggers re-projection during the flow.
pub const DRIFT_TOL: f64 = 1e-7;

/// A basic function with zero integral.
#[derive(Debug, Clone)]
pub struct ContactPotential {
    f: ScalarField,
}

impl ContactPotential {
    pub fn new(s: &KContactStructure, f: ScalarField) -> Result<Self> {
        let m = f.integrate(s.volume_density())?;
        if m.abs() > MEAN_ZERO_TOL * f.max_abs().max(1.0) {
            return Err(KError::Precondition(format!("potential has nonzero integral {m:e}")));
        }
        Ok(Self { f })
    }

    /// Subtracts the `dv`-mean.
    pub fn centered(s: &KContactStructure, f: &ScalarField) -> Result<Self> {
        let v = s.volume_density().integral();
        let m = f.integrate(s.volume_density())? / v;
        Ok(Self { f: f.map(|x| x - m) })
    }

    pub fn zero(s: &KContactStructure) -> Self {
        Self { f: ScalarField::zeros(s.grid()) }
    }

    pub fn function(&self) -> &ScalarField {
        &self.f
    }
}

/// `(omega + d G d^c f, Phi)`: the transverse data of the structure obtained
/// by replacing `eta` with `eta + G d^c f`. `Phi` on the normal bundle is
/// unchanged; only the Reeb component of the full endomorphism moves.
#[derive(Debug, Clone)]
pub struct DeformedStructure {
    pub base: KContactStructure,
    pub potential: ContactPotential,
    /// `G d^c f`.
    pub b: BasicForm,
    /// `omega + d b`.
    pub omega_f: BasicForm,
    /// Symmetrized `omega_f(., Phi .)`, point-major.
    pub metric: Vec<f64>,
    /// `omega_f^n / n!` relative to `omega^n / n!`.
    pub density: ScalarField,
    pub margin: f64,
    /// `max |d omega_f|`.
    pub closedness: f64,
    /// `max |omega_f(Phi., Phi.) - omega_f|`; zero exactly when the
    /// deformed pair is again compatible.
    pub compatibility: f64,
}

impl DeformedStructure {
    /// `int (omega_f - omega) ^ gamma` for each harmonic `(2n-2)`-form of
    /// the base.
    pub fn cohomology_shift(&self) -> Result<Vec<f64>> {
        let hodge = Hodge::new(&self.base);
        let basis = hodge.harmonic_basis(self.base.grid().dim() - 2)?;
        let diff = self.omega_f.sub(&BasicForm::omega(self.base.grid()));
        Ok(basis.iter().map(|gamma| diff.wedge(gamma).component(0).integral()).collect())
    }
}

/// Skew matrix of a 2-form at one point.
fn two_form_matrix(a: &BasicForm, pt: usize) -> Vec<f64> {
    let d = a.grid().dim();
    let t = IndexTables::get(d);
    let mut m = vec![0.0; d * d];
    for (c, idx) in t.index_lists(2).iter().enumerate() {
        let v = a.at(pt)[c];
        m[idx[0] * d + idx[1]] = v;
        m[idx[1] * d + idx[0]] = -v;
    }
    m
}

fn pfaffian(m: &[f64], d: usize) -> f64 {
    match d {
        2 => m[1],
        4 => m[1] * m[2 * 4 + 3] - m[2] * m[4 + 3] + m[3] * m[4 + 2],
        _ => unreachable!("transverse dimension is 2 or 4"),
    }
}

struct Pairing {
    metric: Vec<f64>,
    margin: f64,
    point: usize,
    compatibility: f64,
    density: Vec<f64>,
}

fn pairing(s: &KContactStructure, omega_f: &BasicForm) -> Pairing {
    let d = s.dim();
    let mut metric = Vec::with_capacity(s.grid().points() * d * d);
    let (mut margin, mut point, mut compatibility) = (f64::INFINITY, 0, 0.0f64);
    let mut density = Vec::with_capacity(s.grid().points());
    for pt in 0..s.grid().points() {
        let w = two_form_matrix(omega_f, pt);
        let phi = s.phi_at(pt);
        let wp = linalg::matmul(&w, phi, d);
        let sym: Vec<f64> = (0..d * d).map(|k| 0.5 * (wp[k] + wp[(k % d) * d + k / d])).collect();
        let e = linalg::min_sym_eigenvalue(&sym, d);
        if e < margin {
            margin = e;
            point = pt;
        }
        let pwp = linalg::matmul(&linalg::transpose(phi, d), &wp, d);
        compatibility = compatibility.max(pwp.iter().zip(&w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        density.push(pfaffian(&w, d));
        metric.extend(sym);
    }
    Pairing { metric, margin, point, compatibility, density }
}

fn deformation_form(hodge: &Hodge, f: &ContactPotential) -> Result<BasicForm> {
    let s = hodge.structure();
    hodge.green(&d_c(s, &BasicForm::from_scalar(f.function()))?, false)
}

/// Smallest eigenvalue over the grid of the symmetrized pairing
/// `(omega + d G d^c f)(X, Phi X)`, and where it occurs.
pub fn admissibility(s: &KContactStructure, f: &ContactPotential) -> Result<(bool, f64, usize)> {
    let hodge = Hodge::new(s);
    let b = deformation_form(&hodge, f)?;
    let omega_f = BasicForm::omega(s.grid()).add(&exterior_d(&b));
    let p = pairing(s, &omega_f);
    Ok((p.margin > 0.0, p.margin, p.point))
}

/// The deformation by an admissible potential.
pub fn deform_structure(s: &KContactStructure, f: &ContactPotential) -> Result<DeformedStructure> {
    let hodge = Hodge::new(s);
    let b = deformation_form(&hodge, f)?;
    let omega_f = BasicForm::omega(s.grid()).add(&exterior_d(&b));
    let p = pairing(s, &omega_f);
    if !(p.margin > 0.0) {
        return Err(KError::Inadmissible { point: p.point, margin: p.margin });
    }
    let closedness = exterior_d(&omega_f).max_abs();
    Ok(DeformedStructure {
        base: s.clone(),
        potential: f.clone(),
        b,
        density: ScalarField::from_vec(s.grid(), p.density),
        omega_f,
        metric: p.metric,
        margin: p.margin,
        closedness,
        compatibility: p.compatibility,
    })
}

/// The potential of the printed form `G d^c Delta phi` next to
/// `G Delta d^c phi = d^c phi - (d^c phi)_H`, and their relative distance.
pub fn laplacian_parametrization(s: &KContactStructure, phi: &ScalarField) -> Result<(BasicForm, BasicForm, f64)> {
    let hodge = Hodge::new(s);
    let p0 = BasicForm::from_scalar(phi);
    let lap = crate::calculus::laplacian(s, &p0, false)?;
    let printed = hodge.green(&d_c(s, &lap)?, false)?;
    let dc = d_c(s, &p0)?;
    let commuted = dc.sub(&hodge.harmonic_part(&dc)?);
    let scale = norm(s, &commuted)?.max(f64::MIN_POSITIVE);
    let dist = norm(s, &printed.sub(&commuted))? / scale;
    Ok((printed, commuted, dist))
}

/// `(d G d^c f)^{J,-}` against `1/2 X - 1/4 g(X, omega) omega` with
/// `X = (f_0 omega)_H`; returns `(|LHS - RHS|, |LHS|)` in `L^2`.
pub fn j_invariance_defect(s: &KContactStructure, f: &ScalarField) -> Result<(f64, f64)> {
    if s.n() != 2 {
        return Err(KError::NotFiveDimensional(s.n()));
    }
    let hodge = Hodge::new(s);
    let p = ContactPotential::centered(s, f)?;
    let alpha = exterior_d(&deformation_form(&hodge, &p)?);
    let lhs = j_anti_invariant(s, &alpha)?;
    let omega = BasicForm::omega(s.grid());
    let x = hodge.harmonic_part(&omega.mul_scalar(p.function()))?;
    let gx = pointwise_inner(s, &x, &omega)?;
    let rhs = x.scale(0.5).sub(&omega.mul_scalar(&gx).scale(0.25));
    Ok((norm(s, &lhs.sub(&rhs))?, norm(s, &lhs)?))
}

/// Semi-Sasakian status `h^- = b^+ - 1` with the two-resolution harmonic
/// count.
#[derive(Debug, Clone, Serialize)]
pub struct SemiSasakian {
    pub semi_sasakian: bool,
    pub h_minus: usize,
    pub b_plus: usize,
    pub report: SpectrumReport,
}

pub fn semi_sasakian(s: &KContactStructure) -> Result<SemiSasakian> {
    if s.n() != 2 {
        return Err(KError::NotFiveDimensional(s.n()));
    }
    let report = harmonic_dims(s, 2)?;
    let (Some(h), Some(b)) = (report.h_minus, report.b_plus) else {
        return Err(KError::Precondition("2-form spectrum did not split".into()));
    };
    Ok(SemiSasakian { semi_sasakian: h + 1 == b, h_minus: h, b_plus: b, report })
}

/// `L phi = delta delta ((D d phi)^{J,-})` with the Levi-Civita connection:
/// the linearization of the extremal equation (a diagnostic only).
pub fn lichnerowicz(s: &KContactStructure, phi: &ScalarField) -> Result<ScalarField> {
    let d = s.dim();
    let grid = s.grid();
    let lc = christoffel(s)?;
    let dphi: Vec<ScalarField> = (0..d).map(|i| phi.partial_derivative(i)).collect::<Result<_>>()?;
    let ddphi: Vec<Vec<ScalarField>> =
        dphi.iter().map(|p| (0..d).map(|j| p.partial_derivative(j)).collect::<Result<_>>()).collect::<Result<_>>()?;
    // Hessian H_ij, its J-anti part, raised to T^{ij}
    let mut t = vec![0.0; grid.points() * d * d];
    for pt in 0..grid.points() {
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let gamma: f64 = (0..d).map(|k| lc.at(pt, k, i, j) * dphi[k].values()[pt]).sum();
                h[i * d + j] = ddphi[i][j].values()[pt] - gamma;
            }
        }
        let phi_m = s.phi_at(pt);
        let pthp = linalg::matmul(&linalg::transpose(phi_m, d), &linalg::matmul(&h, phi_m, d), d);
        let anti: Vec<f64> = h.iter().zip(&pthp).map(|(a, b)| 0.5 * (a - b)).collect();
        let gi = s.metric_inv_at(pt);
        let raised = linalg::matmul(gi, &linalg::matmul(&anti, gi, d), d);
        t[pt * d * d..(pt + 1) * d * d].copy_from_slice(&raised);
    }
    // divergence twice: V^i = T^{ij}_{;j}, L = V^i_{;i}; dv = dx
    let dt = crate::structure::derivative_of_matrix_field(grid, &t);
    let mut v = vec![ScalarField::zeros(grid); d];
    for (i, vi) in v.iter_mut().enumerate() {
        let vals: Vec<f64> = (0..grid.points())
            .map(|pt| {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += dt[j][pt * d * d + i * d + j];
                    for m in 0..d {
                        acc += lc.at(pt, i, j, m) * t[pt * d * d + m * d + j] + lc.at(pt, j, j, m) * t[pt * d * d + i * d + m];
                    }
                }
                acc
            })
            .collect();
        *vi = ScalarField::from_vec(grid, vals);
    }
    let mut out = ScalarField::zeros(grid);
    let dv: Vec<ScalarField> = (0..d).map(|i| v[i].partial_derivative(i)).collect::<Result<_>>()?;
    for pt in 0..grid.points() {
        let mut acc = 0.0;
        for i in 0..d {
            acc += dv[i].values()[pt];
            for m in 0..d {
                acc += lc.at(pt, i, i, m) * v[m].values()[pt];
            }
        }
        out.values_mut()[pt] = acc;
    }
    Ok(out)
}

/// Options of the extremal flow.
#[derive(Debug, Clone, Serialize)]
pub struct FlowOptions {
    pub max_iter: usize,
    /// Stop when both criticality residuals are below this.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { max_iter: 60, grad_tol: 1e-6, initial_step: 1.0, backtrack: 0.5, sufficient_decrease: 1e-4, max_backtracks: 30 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowRecord {
    pub iteration: usize,
    pub calabi: f64,
    /// `|| L_{X_{s - Pi s}} Phi ||`.
    pub gradient_norm: f64,
    /// Accepted step (zero on the final record).
    pub step: f64,
    /// Directional derivative of the Calabi energy along the direction.
    pub slope: f64,
    pub admissible: bool,
    pub lie_residual: f64,
    pub projection_residual: f64,
    pub lower_bound_gap: f64,
    pub reprojected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FlowStatus {
    Converged,
    MaxIterations,
    LineSearchFailed(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
    /// Orientation `sigma` of the direction `-sigma Phi L_{X_u} Phi`.
    pub sigma: f64,
    /// Accumulated `-sigma sum alpha_k u_k`: the whole run is approximately
    /// one unit step along `Phi L_{X_U} Phi` with this `U`.
    #[serde(skip)]
    pub accumulated: Option<ScalarField>,
}

impl FlowTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &FlowRecord {
        self.records.last().expect("trace has at least the initial record")
    }

    pub fn converged(&self) -> bool {
        self.status == FlowStatus::Converged
    }

    /// Largest increase of the Calabi energy between consecutive records.
    pub fn max_increase(&self) -> f64 {
        self.records.windows(2).map(|w| w[1].calabi - w[0].calabi).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `u = Delta_0^{-2} (s - Pi s)`: the flat bi-Laplacian inverts the
/// linearization `u -> Q(Phi L_{X_u} Phi) = -Delta^2 u` of the flat model.
fn preconditioned_potential(s: &KContactStructure, r: &ScalarField) -> ScalarField {
    let grid = s.grid();
    let c = r.centered();
    let once = flat_inverse_laplacian(grid, c.values(), 1);
    let twice = flat_inverse_laplacian(grid, &once, 1);
    ScalarField::from_vec(grid, twice).centered()
}

/// `Phi L_{X_u} Phi`, projected onto the tangent space.
pub fn complexified_action(s: &KContactStructure, u: &ScalarField) -> TangentDeformation {
    let l = lie_derivative_phi(s, &hamiltonian_vector_field(u));
    let phil = TangentDeformation::unchecked(s.grid(), l).rotate(s);
    TangentDeformation::project(s, phil.matrices())
}

struct State {
    s: KContactStructure,
    sbar: ScalarField,
    calabi: f64,
}

impl State {
    fn new(s: KContactStructure) -> Result<Self> {
        let sbar = scalar_curvature(&s)?;
        let calabi = sbar.mul(&sbar).integrate(s.volume_density())?;
        Ok(Self { s, sbar, calabi })
    }
}

fn structure_drift(s: &KContactStructure) -> f64 {
    let r = s.residuals();
    r.phi_squared.max(r.omega_invariance).max(r.metric_symmetry)
}

/// Armijo-controlled descent of `int s-bar^2 dv` along
/// `D = -sigma Phi L_{X_u} Phi`, `u = Delta_0^{-2}(s - Pi^G s)`.
pub fn extremal_flow(s: &KContactStructure, g: &TorusAlgebra, opts: &FlowOptions) -> Result<(KContactStructure, FlowTrace)> {
    extremal_flow_with_sigma(s, g, opts, None)
}

pub(crate) fn extremal_flow_with_sigma(
    s: &KContactStructure,
    g: &TorusAlgebra,
    opts: &FlowOptions,
    sigma: Option<f64>,
) -> Result<(KContactStructure, FlowTrace)> {
    if !(opts.grad_tol > 0.0 && opts.initial_step > 0.0 && opts.backtrack > 0.0 && opts.backtrack < 1.0) {
        return Err(KError::Config("flow options must be positive with backtrack in (0, 1)".into()));
    }
    if g.generators().iter().any(|f| !f.grid().same_as(s.grid())) {
        return Err(KError::GridMismatch);
    }
    s.validate(crate::structure::STRUCTURE_TOL)?;
    let mut state = State::new(s.clone())?;
    let mut sigma = sigma;
    let mut records = Vec::new();
    let mut accumulated = ScalarField::zeros(s.grid());
    let mut reprojected = false;
    let status = loop {
        let (lie, proj) = criticality_with_scalar(&state.s, g, &state.sbar);
        let gap = state.calabi - lower_bound_with_scalar(&state.s, g, &state.sbar);
        let r = state.sbar.sub(&g.project(&state.sbar));
        let gradient_norm =
            TangentDeformation::unchecked(state.s.grid(), lie_derivative_phi(&state.s, &hamiltonian_vector_field(&r)))
                .l2_norm(&state.s);
        let mut record = FlowRecord {
            iteration: records.len(),
            calabi: state.calabi,
            gradient_norm,
            step: 0.0,
            slope: 0.0,
            admissible: true,
            lie_residual: lie,
            projection_residual: proj,
            lower_bound_gap: gap,
            reprojected,
        };
        if lie <= opts.grad_tol && proj <= opts.grad_tol {
            records.push(record);
            break FlowStatus::Converged;
        }
        if records.len() >= opts.max_iter {
            records.push(record);
            break FlowStatus::MaxIterations;
        }
        let u = preconditioned_potential(&state.s, &r);
        let base = complexified_action(&state.s, &u);
        let lc = christoffel(&state.s)?;
        let q = scalar_variation_q_with(&state.s, &lc, &base);
        // slope of the energy along +base
        let raw_slope = 2.0 * state.sbar.mul(&q).integrate(state.s.volume_density())?;
        let sg = *sigma.get_or_insert(if raw_slope > 0.0 { 1.0 } else { -1.0 });
        let dir = base.scale(-sg);
        let slope = -sg * raw_slope;
        record.slope = slope;
        if !(slope < 0.0) {
            records.push(record);
            break FlowStatus::LineSearchFailed(format!("direction is not a descent direction (slope {slope:e})"));
        }
        let mut alpha = opts.initial_step;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            match deform_path_unchecked(&state.s, &dir, alpha).and_then(State::new) {
                Ok(trial) if trial.calabi <= state.calabi + opts.sufficient_decrease * alpha * slope => {
                    accepted = Some(trial);
                    break;
                }
                _ => alpha *= opts.backtrack,
            }
        }
        let Some(mut next) = accepted else {
            record.admissible = false;
            records.push(record);
            break FlowStatus::LineSearchFailed(format!("no sufficient decrease down to step {alpha:e}"));
        };
        reprojected = false;
        if structure_drift(&next.s) > DRIFT_TOL {
            let phi = polar_retraction(next.s.dim(), next.s.phi())?;
            next = State::new(KContactStructure::new(next.s.grid(), phi)?)?;
            reprojected = true;
        }
        accumulated = accumulated.add(&u.scale(-sg * alpha));
        record.step = alpha;
        records.push(record);
        state = next;
    };
    state.s.validate(crate::structure::STRUCTURE_TOL)?;
    Ok((state.s, FlowTrace { records, status, sigma: sigma.unwrap_or(0.0), accumulated: Some(accumulated) }))
}

/// One step of a continuation run.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    pub t: f64,
    pub warm_started: bool,
    pub calabi_start: f64,
    pub trace: FlowTrace,
    pub semi_sasakian: Option<bool>,
    pub h_minus: Option<usize>,
    pub b_plus: Option<usize>,
    #[serde(skip)]
    pub structure: KContactStructure,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub steps: Vec<ContinuationStep>,
    /// Diagnostic of the step at which continuation stopped, if any.
    pub halted: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationOptions {
    pub t_max: f64,
    pub steps: usize,
    pub flow: FlowOptions,
    /// Run the semi-Sasakian test on every endpoint.
    pub check_semi_sasakian: bool,
}

/// Warm-started extremal flow along `t_k = k t_max / steps`, `k = 0..=steps`.
/// The previous step's accumulated potential is re-applied to `Phi_{t_k}`
/// when that lowers the starting energy.
pub fn continuation(
    family: &dyn Fn(f64) -> Result<KContactStructure>,
    g: &TorusAlgebra,
    opts: &ContinuationOptions,
) -> ContinuationReport {
    let mut steps: Vec<ContinuationStep> = Vec::new();
    let mut previous: Option<(ScalarField, f64)> = None;
    for k in 0..=opts.steps {
        let t = if opts.steps == 0 { 0.0 } else { opts.t_max * k as f64 / opts.steps as f64 };
        let result = (|| -> Result<ContinuationStep> {
            let cold = family(t)?;
            let mut start = cold.clone();
            let mut warm_started = false;
            if let Some((u, _)) = &previous {
                if u.max_abs() > 0.0 {
                    let dir = complexified_action(&cold, u);
                    if let Ok(warm) = deform_path_unchecked(&cold, &dir, 1.0) {
                        if State::new(warm.clone())?.calabi < State::new(cold.clone())?.calabi {
                            start = warm;
                            warm_started = true;
                        }
                    }
                }
            }
            let calabi_start = State::new(start.clone())?.calabi;
            let sigma = previous.as_ref().map(|p| p.1).filter(|v| *v != 0.0);
            let (end, trace) = extremal_flow_with_sigma(&start, g, &opts.flow, sigma)?;
            let (semi, h, b) = if opts.check_semi_sasakian {
                let r = semi_sasakian(&end)?;
                (Some(r.semi_sasakian), Some(r.h_minus), Some(r.b_plus))
            } else {
                (None, None, None)
            };
            Ok(ContinuationStep { t, warm_started, calabi_start, trace, semi_sasakian: semi, h_minus: h, b_plus: b, structure: end })
        })();
        match result {
            Ok(step) => {
                let converged = step.trace.converged();
                let status = step.trace.status.clone();
                if let Some(u) = &step.trace.accumulated {
                    let total = match previous.as_ref().filter(|_| step.warm_started) {
                        Some((p, _)) => p.add(u),
                        None => u.clone(),
                    };
                    let sg = if step.trace.sigma != 0.0 { step.trace.sigma } else { previous.as_ref().map_or(0.0, |p| p.1) };
                    previous = Some((total, sg));
                }
                steps.push(step);
                if !converged {
                    return ContinuationReport { steps, halted: Some(format!("flow did not reconverge at t = {t}: {status:?}")) };
                }
            }
            Err(e) => return ContinuationReport { steps, halted: Some(format!("t = {t}: {e}")) },
        }
    }
    ContinuationReport { steps, halted: None }
}
