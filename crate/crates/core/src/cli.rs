//! Batch front end: configuration, presets and the subcommands behind the
//! `kcontact` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::calculus::nijenhuis_transverse;
use crate::curvature::{
    christoffel, first_bianchi_residual, hermitian_connection, hermitian_scalar_with_oracle, phi_parallel_residual,
    TORSION_NIJENHUIS_FACTOR,
};
use crate::elliptic::harmonic_dims;
use crate::error::{KError, Result};
use crate::flow::{continuation, extremal_flow, ContinuationOptions, FlowOptions};
use crate::grid::{DerivativeMode, ScalarField, TransverseGrid, TrigField};
use crate::io::{self, Check, Report};
use crate::moment::{
    calabi, criticality_residual, extremal_field, futaki, futaki_lower_bound, ContactHamiltonian, TorusAlgebra,
};
use crate::presets::{self, ShearPerturbation};
use crate::structure::KContactStructure;
use crate::suites;

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

pub const PRESETS: &[&str] = &["heisenberg3", "heisenberg5", "perturbed5", "product5", "random-j"];
pub const SUBCOMMANDS: &[&str] =
    &["check-identities", "curvature", "harmonic-dims", "moment-test", "futaki", "flow", "continuation", "ddc-lemma"];

/// Flat JSON configuration; every key can be overridden by `--key value`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    /// Grid points per axis.
    pub resolution: usize,
    pub mode: DerivativeMode,
    pub seed: u64,
    /// Perturbation amplitude (`perturbed5`, `product5`).
    pub eps: f64,
    /// Fourier cutoff of perturbations and random test data.
    pub cutoff: usize,
    pub identity_tol: f64,
    pub solver_tol: f64,
    pub flow_tol: f64,
    /// Hamiltonians of the torus: `"1"` or `"cos:k1,..,kd"` / `"sin:k1,..,kd"`.
    pub torus: Vec<String>,
    /// Random samples per suite.
    pub samples: usize,
    pub max_iter: usize,
    /// Continuation range and step count.
    pub t_max: f64,
    pub steps: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: "heisenberg5".into(),
            resolution: 16,
            mode: DerivativeMode::Spectral,
            seed: 1,
            eps: 0.05,
            cutoff: 1,
            identity_tol: 1e-8,
            solver_tol: 1e-9,
            flow_tol: 1e-6,
            torus: vec!["1".into()],
            samples: 4,
            max_iter: 60,
            t_max: 0.1,
            steps: 5,
            out: PathBuf::from("kcontact-out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !PRESETS.contains(&self.preset.as_str()) {
            return Err(KError::UnknownPreset(self.preset.clone()));
        }
        for (k, v) in [
            ("identity_tol", self.identity_tol),
            ("solver_tol", self.solver_tol),
            ("flow_tol", self.flow_tol),
        ] {
            if !(v > 0.0) {
                return Err(KError::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if !(self.eps >= 0.0) {
            return Err(KError::Config(format!("eps must be non-negative, got {}", self.eps)));
        }
        if self.samples == 0 {
            return Err(KError::Config("samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        match self.preset.as_str() {
            "heisenberg3" | "random-j" => 1,
            _ => 2,
        }
    }

    /// Parses a JSON document; errors carry `path:line:column`.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
    }

    /// Applies `--key value` pairs; values parse as JSON, falling back to a
    /// plain string.
    pub fn with_overrides(self, pairs: &[(String, String)]) -> Result<Self> {
        let mut v = serde_json::to_value(&self).map_err(|e| KError::Config(e.to_string()))?;
        let map = v.as_object_mut().expect("config serializes to an object");
        for (key, raw) in pairs {
            let key = key.replace('-', "_");
            if !map.contains_key(&key) {
                return Err(KError::Config(format!("unknown key --{key}")));
            }
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
            let parsed = match (&map[&key], parsed) {
                (serde_json::Value::Array(_), serde_json::Value::String(s)) => {
                    serde_json::Value::Array(s.split(';').map(|x| serde_json::Value::String(x.into())).collect())
                }
                (_, p) => p,
            };
            map.insert(key, parsed);
        }
        serde_json::from_value(v).map_err(|e| KError::Config(format!("override: {e}")))
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| KError::Config(format!("{}: {e}", p.display())))?;
                Self::from_json(&text, &p.display().to_string())?
            }
            None => Self::default(),
        };
        let cfg = base.with_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<crate::grid::Grid> {
        TransverseGrid::new(self.n(), self.resolution, self.mode)
    }
}

/// Named structure from the catalogue.
pub fn preset(cfg: &RunConfig, grid: &crate::grid::Grid) -> Result<KContactStructure> {
    match cfg.preset.as_str() {
        "heisenberg3" | "heisenberg5" => Ok(presets::heisenberg(grid)),
        "perturbed5" => presets::perturbed5(grid, cfg.eps, cfg.seed, cfg.cutoff),
        "product5" => presets::product5(grid, cfg.eps, cfg.seed, cfg.cutoff),
        "random-j" => presets::random_j(grid, cfg.seed),
        other => Err(KError::UnknownPreset(other.into())),
    }
}

/// Parses one torus generator specifier.
pub fn hamiltonian_spec(spec: &str, grid: &crate::grid::Grid) -> Result<ScalarField> {
    if spec.trim() == "1" {
        return Ok(ScalarField::constant(grid, 1.0));
    }
    let (kind, ks) = spec
        .split_once(':')
        .ok_or_else(|| KError::Config(format!("bad Hamiltonian specifier {spec:?}")))?;
    let k: Vec<i64> = ks
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| KError::Config(format!("bad wave vector in {spec:?}"))))
        .collect::<Result<_>>()?;
    if k.len() != grid.dim() {
        return Err(KError::Config(format!("wave vector in {spec:?} needs {} entries", grid.dim())));
    }
    let phase = match kind {
        "cos" => 0.0,
        "sin" => -std::f64::consts::FRAC_PI_2,
        _ => return Err(KError::Config(format!("bad Hamiltonian kind in {spec:?}"))),
    };
    TrigField::mode(grid.dim(), &k, 1.0, phase).sample(grid)
}

pub fn torus(cfg: &RunConfig, grid: &crate::grid::Grid) -> Result<TorusAlgebra> {
    let gens = cfg.torus.iter().map(|s| hamiltonian_spec(s, grid)).collect::<Result<Vec<_>>>()?;
    TorusAlgebra::new(gens)
}

/// Exit code of an error.
pub fn exit_code(e: &KError) -> i32 {
    match e {
        KError::Config(_)
        | KError::UnknownPreset(_)
        | KError::PerturbationPositivity { .. }
        | KError::UnsupportedDimension(_)
        | KError::BadResolution(_)
        | KError::Aliasing { .. }
        | KError::InvalidTorus(_)
        | KError::SingularGram => EXIT_CONFIG,
        KError::NoConvergence { .. } | KError::UnresolvedKernel { .. } | KError::LineSearch(_) => EXIT_NO_CONVERGENCE,
        _ => EXIT_CHECK_FAILED,
    }
}

/// Runs one subcommand, writes its artifacts and returns the report.
pub fn run(subcommand: &str, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let config = serde_json::to_value(cfg).map_err(|e| KError::Config(e.to_string()))?;
    let mut report = Report::new(subcommand, config, cfg.seed);
    let grid = cfg.grid()?;
    let s = preset(cfg, &grid)?;
    let fields = cfg.out.join("fields");
    std::fs::create_dir_all(&fields)?;
    match subcommand {
        "check-identities" => {
            let t = suites::identity_suite(&s, cfg.samples, cfg.seed, cfg.cutoff.max(1))?;
            report.push(Check::at_most("kahler identities (relative)", t.kahler_max(), cfg.identity_tol));
            report.push(Check::at_most("star squared", t.star_squared, 1e-10));
            report.push(Check::at_most("phi squared", t.phi_squared, 1e-10));
            report.push(Check::at_most("adjoint L / Lambda", t.adjoint_l_lambda, 1e-9));
            report.push(Check::at_most("adjoint d / delta", t.adjoint_d_delta, 1e-9));
            report.push(Check::at_most("laplacian symmetry", t.laplacian_symmetry, 1e-9));
            let r = s.residuals();
            report.push(Check::at_most("structure invariants", r.phi_squared.max(r.omega_invariance), 1e-10));
            report.result("identities", &t);
        }
        "curvature" => {
            let lc = christoffel(&s)?;
            let herm = hermitian_connection(&s, &lc)?;
            let r = hermitian_scalar_with_oracle(&s)?;
            let riem = r.riemannian.clone().expect("oracle requested");
            let nij = nijenhuis_transverse(&s);
            let mut torsion_dev: f64 = 0.0;
            let d = s.dim();
            for pt in 0..grid.points() {
                for k in 0..d {
                    for i in 0..d {
                        for j in 0..d {
                            let dev = herm.torsion(pt, k, i, j) - TORSION_NIJENHUIS_FACTOR * nij.transverse(pt, k, i, j);
                            torsion_dev = torsion_dev.max(dev.abs());
                        }
                    }
                }
            }
            report.push(Check::at_most("first Bianchi (Levi-Civita)", first_bianchi_residual(&grid, &lc.curvature()), cfg.identity_tol));
            report.push(Check::at_most("Levi-Civita torsion", lc.torsion_max(), cfg.identity_tol));
            report.push(Check::at_most("Hermitian nabla g", herm.metric_residual(s.metric()), 1e-6));
            report.push(Check::at_most("Hermitian nabla Phi", phi_parallel_residual(&s, &herm), 1e-6));
            report.push(Check::at_most("Hermitian torsion = N / 4", torsion_dev, 1e-6));
            let integrable = nij.transverse_max() <= 1e-8;
            if integrable {
                let diff = r.scalar.sub(&riem).max_abs() / riem.max_abs().max(1.0);
                report.push(Check::at_most("s-bar = s_riem (integrable)", diff, 5e-6));
            }
            report.result("sbar_max", r.scalar.max_abs());
            report.result("sbar_mean", r.scalar.mean());
            report.result("riemannian_max", riem.max_abs());
            report.result("nijenhuis_max", nij.transverse_max());
            report.result("calabi", r.scalar.mul(&r.scalar).integral());
            io::write_scalar_csv(&fields.join("sbar.csv"), "sbar", &r.scalar)?;
            io::write_scalar_csv(&fields.join("s_riem.csv"), "s_riem", &riem)?;
            io::write_form_csv(&fields.join("rho.csv"), "rho", &r.rho)?;
            io::write_phi_csv(&fields.join("phi.csv"), &s)?;
            io::write_kcon(&fields.join("phi.kcon"), &s)?;
        }
        "harmonic-dims" => {
            for p in 0..=s.dim() {
                let r = harmonic_dims(&s, p)?;
                report.push(Check::flag(format!("degree {p}: eigenvalue count matches constructed basis"), r.harmonic_dim == r.constructed_dim));
                if p == 2 && s.n() == 2 {
                    let (b, h) = (r.b_plus.unwrap_or(0), r.h_minus.unwrap_or(0));
                    report.result("b_plus", b);
                    report.result("b_minus", r.b_minus);
                    report.result("h_minus", h);
                    report.result("semi_sasakian", h + 1 == b);
                    report.push(Check::flag("h^- <= b^+ - 1", h + 1 <= b));
                }
                report.result(&format!("degree_{p}"), &r);
            }
        }
        "moment-test" => {
            let fine = suites::moment_suite(&s, cfg.samples, cfg.seed, cfg.cutoff.max(1), 1e-4)?;
            let coarse_grid = grid.resized(grid.size() / 2)?;
            let coarse_s = preset(cfg, &coarse_grid)?;
            let coarse = suites::moment_suite(&coarse_s, cfg.samples, cfg.seed, cfg.cutoff.max(1), 1e-4)?;
            let worst = |v: &[crate::moment::MomentResidual], f: &dyn Fn(&crate::moment::MomentResidual) -> f64| {
                v.iter().map(|m| f(m) / m.scale.max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
            };
            let stated = worst(&fine, &|m| m.residual);
            let stated_fd = worst(&fine, &|m| m.residual_fd);
            let measured = worst(&fine, &|m| m.residual_measured);
            let measured_fd = worst(&fine, &|m| m.residual_measured_fd);
            let coarse_measured = worst(&coarse, &|m| m.residual_measured);
            report.push(Check::at_most("Omega(-L_X Phi, A) + int f Q(A) (relative)", stated, 1e-5));
            report.push(Check::at_most("same with finite-difference Q", stated_fd, 1e-5));
            report.push(Check::at_most("Omega(-L_X Phi, A) - 2 int f Q(A) (relative)", measured, 1e-5));
            report.push(Check::at_most("same with finite-difference Q (measured constant)", measured_fd, 1e-5));
            let ratio = coarse_measured / measured.max(f64::MIN_POSITIVE);
            report.result("refinement_ratio", ratio);
            report.result("coarse_resolution", coarse_grid.size());
            report.result("pairs", &fine);
            report.result("coarse_pairs", &coarse);
        }
        "futaki" => {
            let g = torus(cfg, &grid)?;
            let e = calabi(&s)?;
            let bound = futaki_lower_bound(&s, &g)?;
            let z = extremal_field(&s, &g)?;
            let values: Vec<f64> = g
                .generators()
                .iter()
                .map(|f| futaki(&s, &g, &ContactHamiltonian::new(f.clone())))
                .collect::<Result<_>>()?;
            let (lie, proj) = criticality_residual(&s, &g)?;
            report.push(Check::at_least("calabi - lower bound", e - bound, -1e-8));
            report.result("calabi", e);
            report.result("lower_bound", bound);
            report.result("futaki", values);
            report.result("extremal_hamiltonian_max", z.function().max_abs());
            report.result("criticality", (lie, proj));
        }
        "flow" => {
            let g = torus(cfg, &grid)?;
            let opts = FlowOptions { max_iter: cfg.max_iter, grad_tol: cfg.flow_tol, ..FlowOptions::default() };
            let (end, trace) = extremal_flow(&s, &g, &opts)?;
            io::write_trace_jsonl(&cfg.out.join("trace.jsonl"), &trace)?;
            io::write_kcon(&fields.join("endpoint.kcon"), &end)?;
            io::write_phi_csv(&fields.join("endpoint.csv"), &end)?;
            let last = trace.last();
            report.push(Check::flag("flow converged", trace.converged()));
            report.push(Check::at_most("calabi increase per step", trace.max_increase().max(0.0), 1e-12));
            report.push(Check::at_most("criticality: L_X Phi", last.lie_residual, cfg.flow_tol));
            report.push(Check::at_most("criticality: s - Pi s", last.projection_residual, cfg.flow_tol));
            report.push(Check::at_most("calabi - lower bound at endpoint", last.lower_bound_gap, 10.0 * cfg.flow_tol));
            report.result("iterations", trace.iterations());
            report.result("status", &trace.status);
            report.result("calabi_start", trace.records[0].calabi);
            report.result("calabi_end", last.calabi);
        }
        "continuation" => {
            if s.n() != 2 {
                return Err(KError::NotFiveDimensional(s.n()));
            }
            let g = torus(cfg, &grid)?;
            let family_def = ShearPerturbation::random_product(2, 1.0, cfg.seed, cfg.cutoff.max(1));
            let family = |t: f64| family_def.with_eps(t).structure(&grid);
            let opts = ContinuationOptions {
                t_max: cfg.t_max,
                steps: cfg.steps,
                flow: FlowOptions { max_iter: cfg.max_iter, grad_tol: cfg.flow_tol, ..FlowOptions::default() },
                check_semi_sasakian: true,
            };
            let rep = continuation(&family, &g, &opts);
            report.push(Check::flag("continuation completed", rep.halted.is_none()));
            for st in &rep.steps {
                report.push(Check::flag(format!("t = {}: reconverged", st.t), st.trace.converged()));
                report.push(Check::flag(format!("t = {}: semi-Sasakian", st.t), st.semi_sasakian == Some(true)));
            }
            for (k, st) in rep.steps.iter().enumerate() {
                io::write_trace_jsonl(&cfg.out.join(format!("trace_{k}.jsonl")), &st.trace)?;
            }
            report.result("continuation", &rep);
        }
        "ddc-lemma" => {
            let t = suites::green_suite(&s, cfg.samples, cfg.seed, cfg.cutoff.max(1))?;
            report.push(Check::at_most("green round trip", t.green_roundtrip, cfg.solver_tol));
            report.push(Check::at_most("ddc reconstruction", t.ddc_reconstruction, 1e-7));
            report.push(Check::at_most("potential recovery", t.potential_recovery, 1e-7));
            report.result("green", &t);
        }
        other => return Err(KError::Config(format!("unknown subcommand {other:?}"))),
    }
    report.timing = serde_json::json!({ "elapsed_seconds": start.elapsed().as_secs_f64() });
    io::write_report(&cfg.out, &report)?;
    Ok(report)
}

/// Splits `--key value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(k) = it.next() {
        let key = k
            .strip_prefix("--")
            .ok_or_else(|| KError::Config(format!("expected --key, found {k:?}")))?;
        let value = it.next().ok_or_else(|| KError::Config(format!("missing value for --{key}")))?;
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}
