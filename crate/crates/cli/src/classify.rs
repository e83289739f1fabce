use serde::Serialize;

use critical_jacobi::model::{CarlemanReport, ClassificationResult};
use critical_jacobi::{Model, ModelParams, Mpf, PrecisionContext};

use crate::CliResult;

#[derive(Clone, Debug)]
pub struct ClassifyConfig {
    pub alpha: String,
    pub b: String,
    pub lambda: String,
    pub n_max: i64,
    pub digits: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub alpha: String,
    pub b: String,
    pub lambda: String,
    pub digits: u32,
    #[serde(flatten)]
    pub classification: ClassificationResult,
    pub carleman: CarlemanReport,
}

pub fn build_model(alpha: &str, b: &str, lambda: &str, digits: u32) -> CliResult<Model<Mpf>> {
    let ctx = PrecisionContext::new(digits)?;
    Ok(Model::new(ModelParams::parse(alpha, b, lambda, &ctx)?, ctx)?)
}

pub fn run(cfg: &ClassifyConfig) -> CliResult<ClassifyReport> {
    let model = build_model(&cfg.alpha, &cfg.b, &cfg.lambda, cfg.digits)?;
    Ok(ClassifyReport {
        alpha: cfg.alpha.clone(),
        b: cfg.b.clone(),
        lambda: cfg.lambda.clone(),
        digits: cfg.digits,
        classification: model.classify(cfg.n_max)?,
        carleman: model.carleman_check(cfg.n_max),
    })
}

pub const CSV_COLUMNS: [&str; 7] = [
    "alpha",
    "b",
    "lambda",
    "regime",
    "discr_exponent",
    "discr_coeff",
    "expected_coeff",
];

pub fn csv_row(r: &ClassifyReport) -> [String; 7] {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    [
        r.alpha.clone(),
        r.b.clone(),
        r.lambda.clone(),
        r.classification.regime.as_str().to_string(),
        opt(r.classification.fitted_discr_exponent),
        opt(r.classification.discr_leading_coeff),
        r.classification.expected_leading_coeff.to_string(),
    ]
}
