use std::path::Path;

use serde::Serialize;

use critical_jacobi::levinson::{asymptotic_basis, parse_system_spec, BasisKind, HypothesisDiagnostics};
use critical_jacobi::mat2::{c_abs, Cx, Vec2};
use critical_jacobi::{Error, Mpf, PrecisionContext, Real};

use crate::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct LevinsonConfig {
    pub n_max: i64,
    pub digits: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub n: i64,
    pub mu1: [f64; 2],
    pub mu2: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductPoint {
    pub n: i64,
    /// `log10 |prod (1 + p_k mu_i(k))|` for `i = 1, 2`.
    pub log10_abs: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct LevinsonReport {
    pub name: String,
    pub kind: BasisKind,
    pub n_max: i64,
    pub digits: u32,
    pub start_index: i64,
    pub threshold: i64,
    pub n0: i64,
    pub mu_limits: [[f64; 2]; 2],
    pub directions: [[[f64; 2]; 2]; 2],
    pub tail_residuals: [f64; 2],
    pub larger_retries: u32,
    /// `u^(i)_{n_max}` divided by its scalar product.
    pub normalized_solutions: [[[f64; 2]; 2]; 2],
    pub scalar_products: Vec<ProductPoint>,
    pub eigenvalue_trajectory: Vec<TrajectoryPoint>,
    pub diagnostics: HypothesisDiagnostics,
}

fn cx(z: &Cx<Mpf>) -> [f64; 2] {
    [z.re.to_f64(), z.im.to_f64()]
}

fn vec(v: &Vec2<Mpf>) -> [[f64; 2]; 2] {
    [cx(v.x()), cx(v.y())]
}

fn with_path(e: Error, path: &Path) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

pub fn run(path: &Path, cfg: &LevinsonConfig) -> CliResult<LevinsonReport> {
    let text = std::fs::read_to_string(path).map_err(|e| with_path(e.into(), path))?;
    run_text(&text, cfg).map_err(|mut e| {
        e.message = format!("{}: {}", path.display(), e.message);
        e
    })
}

pub fn run_text(text: &str, cfg: &LevinsonConfig) -> CliResult<LevinsonReport> {
    let ctx = PrecisionContext::new(cfg.digits)?;
    if cfg.n_max < 16 {
        return Err(CliError::usage("--n-max must be at least 16"));
    }
    let spec = parse_system_spec::<Mpf>(text, &ctx)?;
    let basis = asymptotic_basis(&spec, cfg.n_max)?;
    let grid = critical_jacobi::fit::geometric_grid(basis.n0, cfg.n_max, 20);
    let scalar_products = grid
        .iter()
        .map(|&n| ProductPoint {
            n,
            log10_abs: [0, 1].map(|i| c_abs(basis.scalar_product(i, n).unwrap()).log10_abs_f64()),
        })
        .collect();
    let normalized_solutions = [0, 1].map(|i| {
        let p = basis.scalar_product(i, cfg.n_max).unwrap().clone();
        let u = basis.solutions[i].at(cfg.n_max).unwrap();
        vec(&Vec2::new(u.x().clone() / p.clone(), u.y().clone() / p))
    });
    Ok(LevinsonReport {
        name: spec.name.clone(),
        kind: basis.kind,
        n_max: cfg.n_max,
        digits: cfg.digits,
        start_index: spec.start_index,
        threshold: basis.threshold,
        n0: basis.n0,
        mu_limits: [cx(&basis.mu_limits[0]), cx(&basis.mu_limits[1])],
        directions: [vec(&basis.directions[0]), vec(&basis.directions[1])],
        tail_residuals: basis.tail_residuals,
        larger_retries: basis.larger_retries,
        normalized_solutions,
        scalar_products,
        eigenvalue_trajectory: basis
            .eigenvalue_trajectory
            .iter()
            .map(|(n, [a, b])| TrajectoryPoint {
                n: *n,
                mu1: cx(a),
                mu2: cx(b),
            })
            .collect(),
        diagnostics: basis.diagnostics,
    })
}
