use rayon::prelude::*;
use serde::Serialize;

use critical_jacobi::model::Regime;
use critical_jacobi::pipeline::Branch;
use critical_jacobi::recurrence::{envelope_check, forward_solve, recurrence_budget};
use critical_jacobi::{Pipeline, PrecisionContext, Vec2};

use crate::classify::build_model;
use crate::{CliError, CliResult};

/// `lo:hi:count` or a single value.
#[derive(Clone, Debug, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in range '{s}'"));
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Ok(Self { lo: v, hi: v, count: 1 })
            }
            [lo, hi, count] => {
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad count '{count}' in range '{s}'"))?;
                if count == 0 {
                    return Err(format!("range '{s}' has zero points"));
                }
                Ok(Self {
                    lo: num(lo)?,
                    hi: num(hi)?,
                    count,
                })
            }
            _ => Err(format!("expected lo:hi:count or a value, got '{s}'")),
        }
    }
}

impl Range {
    pub fn values(&self) -> Vec<String> {
        (0..self.count)
            .map(|i| {
                let x = if self.count == 1 {
                    self.lo
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
                };
                // normalizes -0
                format!("{}", x + 0.0)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub alpha: Range,
    pub b: Range,
    pub lambda: Range,
    pub n_max: i64,
    pub digits: u32,
    pub envelope: bool,
    pub tolerance: f64,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub index: usize,
    pub alpha: String,
    pub b: String,
    pub lambda: String,
    pub regime: &'static str,
    pub discr_exponent: Option<f64>,
    pub discr_coeff: Option<f64>,
    pub expected_coeff: f64,
    pub envelope_drift: Option<f64>,
    pub envelope_passed: Option<bool>,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "index",
    "alpha",
    "b",
    "lambda",
    "regime",
    "discr_exponent",
    "discr_coeff",
    "expected_coeff",
    "envelope_drift",
    "envelope_passed",
];

impl ScanRow {
    pub fn record(&self) -> [String; 10] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.index.to_string(),
            self.alpha.clone(),
            self.b.clone(),
            self.lambda.clone(),
            self.regime.to_string(),
            opt(self.discr_exponent),
            opt(self.discr_coeff),
            self.expected_coeff.to_string(),
            opt(self.envelope_drift),
            self.envelope_passed.map(|b| b.to_string()).unwrap_or_default(),
        ]
    }
}

fn point(cfg: &ScanConfig, index: usize, alpha: &str, b: &str, lambda: &str) -> CliResult<ScanRow> {
    let model = build_model(alpha, b, lambda, cfg.digits)?;
    let c = model.classify(cfg.n_max)?;
    let mut row = ScanRow {
        index,
        alpha: alpha.into(),
        b: b.into(),
        lambda: lambda.into(),
        regime: c.regime.as_str(),
        discr_exponent: c.fitted_discr_exponent,
        discr_coeff: c.discr_leading_coeff,
        expected_coeff: c.expected_leading_coeff,
        envelope_drift: None,
        envelope_passed: None,
    };
    if cfg.envelope && c.regime == Regime::CriticalHyperbolic {
        let top = 2 * cfg.n_max + 1;
        let digits = recurrence_budget(&model, top).unwrap_or(0).max(cfg.digits);
        let model = build_model(alpha, b, lambda, digits)?;
        let ctx = *model.ctx();
        let p = Pipeline::new(model)?;
        let fwd = forward_solve(&p.model, &Vec2::e2(&ctx), 1, top)?;
        let e = envelope_check(&fwd, &p.ansatz, &p.model, Branch::Plus, cfg.n_max / 2, cfg.n_max, cfg.tolerance)?;
        row.envelope_drift = Some(e.envelope_drift);
        row.envelope_passed = Some(e.envelope_passed);
    }
    Ok(row)
}

/// Rows in grid order (alpha slowest, lambda fastest) whatever the worker count.
pub fn run(cfg: &ScanConfig) -> CliResult<Vec<ScanRow>> {
    if cfg.n_max < 100 {
        return Err(CliError::usage("scan needs --n-max >= 100"));
    }
    PrecisionContext::new(cfg.digits)?;
    let mut grid = Vec::new();
    for a in cfg.alpha.values() {
        for b in cfg.b.values() {
            for l in cfg.lambda.values() {
                grid.push((a.clone(), b.clone(), l));
            }
        }
    }
    for (a, b, l) in &grid {
        build_model(a, b, l, cfg.digits)?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    let mut rows = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, (a, b, l))| point(cfg, i, a, b, l))
            .collect::<CliResult<Vec<_>>>()
    })?;
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r: Range = "-1:1:5".parse().unwrap();
        assert_eq!(r.values(), vec!["-1", "-0.5", "0", "0.5", "1"]);
        let one: Range = "0.8".parse().unwrap();
        assert_eq!(one.values(), vec!["0.8"]);
        assert!("1:2".parse::<Range>().is_err());
        assert!("1:2:0".parse::<Range>().is_err());
    }
}
