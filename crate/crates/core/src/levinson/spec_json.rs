//! JSON ingestion of [`SystemSpec`].

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde_json::Value;

use super::{Sampler, SystemSpec};
use crate::error::{Error, Result};
use crate::mat2::{c_real, Cx, Mat2};
use crate::model::{Model, ModelParams};
use crate::pipeline::Pipeline;
use crate::scalar::{PrecisionContext, Real};

/// Human-readable schema, printed by `critjac levinson --help` and the README.
pub const SPEC_SCHEMA: &str = r#"{
  "name": "optional label",
  "start_index": 1,
  "p": SCALAR,
  "V": MATRIX,
  "R": MATRIX            (optional, defaults to zero)
}
or
{ "builtin": "paper-L-stage", "alpha": NUM, "b": NUM, "lambda": NUM, "start_index": N (optional) }

NUM     = JSON number | decimal string | [re, im]
SCALAR  = NUM
        | {"family": "constant", "value": NUM}
        | {"family": "power", "coeff": NUM, "exponent": NUM, "shift": NUM}   -> coeff*(n+shift)^exponent
MATRIX  = [[NUM, NUM], [NUM, NUM]]
        | {"family": "zero"}
        | {"family": "constant", "matrix": M}
        | {"family": "power", "coeff": NUM, "exponent": NUM, "shift": NUM, "matrix": M}
        | {"family": "matrix_of_powers", "entries": [[SCALAR, SCALAR], [SCALAR, SCALAR]]}
Any SCALAR or MATRIX object may carry "table": {"<n>": value, ...} overriding individual indices.
p must be real."#;

fn spec_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Spec(format!("{path}: {msg}"))
}

fn parse_real<R: Real>(v: &Value, path: &str, ctx: &PrecisionContext) -> Result<R> {
    match v {
        Value::Number(n) => R::parse_decimal(&n.to_string(), ctx),
        Value::String(s) => R::parse_decimal(s.trim(), ctx),
        _ => Err(spec_err(path, "expected a number or decimal string")),
    }
}

fn parse_num<R: Real>(v: &Value, path: &str, ctx: &PrecisionContext) -> Result<Cx<R>> {
    match v {
        Value::Array(parts) if parts.len() == 2 => Ok(Cx::new(
            parse_real(&parts[0], &format!("{path}[0]"), ctx)?,
            parse_real(&parts[1], &format!("{path}[1]"), ctx)?,
        )),
        Value::Array(_) => Err(spec_err(path, "complex numbers are written [re, im]")),
        _ => parse_real(v, path, ctx).map(c_real),
    }
}

fn parse_matrix<R: Real>(v: &Value, path: &str, ctx: &PrecisionContext) -> Result<Mat2<R>> {
    let rows = v
        .as_array()
        .filter(|r| r.len() == 2)
        .ok_or_else(|| spec_err(path, "expected a 2x2 array"))?;
    let mut out = Mat2::zero(ctx);
    for (i, row) in rows.iter().enumerate() {
        let cols = row
            .as_array()
            .filter(|c| c.len() == 2)
            .ok_or_else(|| spec_err(&format!("{path}[{i}]"), "expected a row of two entries"))?;
        for (j, x) in cols.iter().enumerate() {
            out.0[i][j] = parse_num(x, &format!("{path}[{i}][{j}]"), ctx)?;
        }
    }
    Ok(out)
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| spec_err(path, format!("missing \"{key}\"")))
}

fn parse_table<T, F>(obj: &serde_json::Map<String, Value>, path: &str, parse: F) -> Result<BTreeMap<i64, T>>
where
    F: Fn(&Value, &str) -> Result<T>,
{
    let mut out = BTreeMap::new();
    let Some(t) = obj.get("table") else {
        return Ok(out);
    };
    let t = t.as_object().ok_or_else(|| spec_err(path, "\"table\" must be an object"))?;
    for (k, v) in t {
        let n: i64 = k
            .parse()
            .map_err(|_| spec_err(&format!("{path}.table"), format!("key \"{k}\" is not an integer")))?;
        out.insert(n, parse(v, &format!("{path}.table.{k}"))?);
    }
    Ok(out)
}

fn with_table<T: Clone + Send + Sync + 'static>(base: Sampler<T>, table: BTreeMap<i64, T>) -> Sampler<T> {
    if table.is_empty() {
        return base;
    }
    Arc::new(move |n| table.get(&n).cloned().unwrap_or_else(|| base(n)))
}

struct Power<R: Real> {
    coeff: Cx<R>,
    exponent: R,
    shift: R,
}

impl<R: Real> Power<R> {
    fn parse(obj: &serde_json::Map<String, Value>, path: &str, ctx: &PrecisionContext) -> Result<Self> {
        Ok(Self {
            coeff: match obj.get("coeff") {
                Some(v) => parse_num(v, &format!("{path}.coeff"), ctx)?,
                None => c_real(R::from_i64(1, ctx)),
            },
            exponent: parse_real(field(obj, "exponent", path)?, &format!("{path}.exponent"), ctx)?,
            shift: match obj.get("shift") {
                Some(v) => parse_real(v, &format!("{path}.shift"), ctx)?,
                None => R::from_i64(0, ctx),
            },
        })
    }

    fn eval(&self, n: i64, ctx: &PrecisionContext) -> Cx<R> {
        let base = R::from_i64(n, ctx) + self.shift.clone();
        self.coeff.clone() * c_real(base.powf(&self.exponent))
    }
}

fn family(obj: &serde_json::Map<String, Value>, path: &str) -> Result<String> {
    field(obj, "family", path)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| spec_err(path, "\"family\" must be a string"))
}

fn parse_scalar<R: Real>(v: &Value, path: &str, ctx: &PrecisionContext) -> Result<Sampler<Cx<R>>> {
    let ctx = *ctx;
    let Some(obj) = v.as_object() else {
        let c = parse_num::<R>(v, path, &ctx)?;
        return Ok(Arc::new(move |_| c.clone()));
    };
    let base: Sampler<Cx<R>> = match family(obj, path)?.as_str() {
        "constant" => {
            let c = parse_num::<R>(field(obj, "value", path)?, &format!("{path}.value"), &ctx)?;
            Arc::new(move |_| c.clone())
        }
        "power" => {
            let pw = Power::<R>::parse(obj, path, &ctx)?;
            Arc::new(move |n| pw.eval(n, &ctx))
        }
        other => return Err(spec_err(path, format!("unknown scalar family \"{other}\""))),
    };
    let table = parse_table(obj, path, |v, p| parse_num::<R>(v, p, &ctx))?;
    Ok(with_table(base, table))
}

fn parse_matrix_sampler<R: Real>(v: &Value, path: &str, ctx: &PrecisionContext) -> Result<Sampler<Mat2<R>>> {
    let ctx = *ctx;
    let Some(obj) = v.as_object() else {
        let m = parse_matrix::<R>(v, path, &ctx)?;
        return Ok(Arc::new(move |_| m.clone()));
    };
    let base: Sampler<Mat2<R>> = match family(obj, path)?.as_str() {
        "zero" => Arc::new(move |_| Mat2::zero(&ctx)),
        "constant" => {
            let m = parse_matrix::<R>(field(obj, "matrix", path)?, &format!("{path}.matrix"), &ctx)?;
            Arc::new(move |_| m.clone())
        }
        "power" => {
            let pw = Power::<R>::parse(obj, path, &ctx)?;
            let m = parse_matrix::<R>(field(obj, "matrix", path)?, &format!("{path}.matrix"), &ctx)?;
            Arc::new(move |n| m.scale(&pw.eval(n, &ctx)))
        }
        "matrix_of_powers" => {
            let e = field(obj, "entries", path)?;
            let rows = e
                .as_array()
                .filter(|r| r.len() == 2 && r.iter().all(|c| c.as_array().is_some_and(|c| c.len() == 2)))
                .ok_or_else(|| spec_err(&format!("{path}.entries"), "expected a 2x2 array"))?;
            let mut cells = Vec::with_capacity(4);
            for (i, row) in rows.iter().enumerate() {
                for (j, x) in row.as_array().unwrap().iter().enumerate() {
                    cells.push(parse_scalar::<R>(x, &format!("{path}.entries[{i}][{j}]"), &ctx)?);
                }
            }
            Arc::new(move |n| Mat2::new(cells[0](n), cells[1](n), cells[2](n), cells[3](n)))
        }
        other => return Err(spec_err(path, format!("unknown matrix family \"{other}\""))),
    };
    let table = parse_table(obj, path, |v, p| parse_matrix::<R>(v, p, &ctx))?;
    Ok(with_table(base, table))
}

fn start_index(obj: &serde_json::Map<String, Value>, default: i64) -> Result<i64> {
    match obj.get("start_index") {
        None => Ok(default),
        Some(v) => v
            .as_i64()
            .filter(|&n| n >= 1)
            .ok_or_else(|| spec_err("start_index", "must be a positive integer")),
    }
}

/// Parses a JSON system description. Syntax errors carry line and column.
pub fn parse_system_spec<R: Real>(text: &str, ctx: &PrecisionContext) -> Result<SystemSpec<R>> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| spec_err("$", "top level must be an object"))?;
    if let Some(b) = obj.get("builtin") {
        return match b.as_str() {
            Some("paper-L-stage") => l_stage(obj, ctx),
            _ => Err(spec_err("builtin", format!("unknown builtin {b}"))),
        };
    }
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .unwrap_or("system")
        .to_string();
    let p_c = parse_scalar::<R>(field(obj, "p", "$")?, "p", ctx)?;
    let v = parse_matrix_sampler::<R>(field(obj, "V", "$")?, "V", ctx)?;
    let r = match obj.get("R") {
        Some(r) => parse_matrix_sampler::<R>(r, "R", ctx)?,
        None => {
            let ctx = *ctx;
            Arc::new(move |_| Mat2::zero(&ctx))
        }
    };
    let start = start_index(obj, 1)?;
    for n in start..start + 4 {
        if !p_c(n).im.is_zero() {
            return Err(spec_err("p", format!("p_{n} is not real")));
        }
    }
    let p: Sampler<R> = Arc::new(move |n| p_c(n).re);
    Ok(SystemSpec {
        name,
        p,
        v,
        r,
        start_index: start,
        ctx: *ctx,
    })
}

/// Stage `L` of the transfer-matrix pipeline as a Levinson system:
/// `p_n = 2 A delta n^{-alpha/2}`, `V_n = diag((e^{2A(n^d-(n+1)^d)} - 1)/p_n, 0)`,
/// `R_n = L_n - diag(e^{2A(n^d-(n+1)^d)}, 1)`.
fn l_stage<R: Real>(obj: &serde_json::Map<String, Value>, ctx: &PrecisionContext) -> Result<SystemSpec<R>> {
    let text = |k: &str| -> Result<String> {
        match field(obj, k, "$")? {
            Value::Number(n) => Ok(n.to_string()),
            Value::String(s) => Ok(s.clone()),
            _ => Err(spec_err(k, "expected a number or decimal string")),
        }
    };
    let params = ModelParams::parse(&text("alpha")?, &text("b")?, &text("lambda")?, ctx)?;
    let pipeline = Arc::new(Pipeline::new(Model::new(params, *ctx)?)?);
    let start = start_index(obj, pipeline.default_n0())?;
    let ctx = *ctx;
    let cache: Arc<Mutex<HashMap<i64, Mat2<R>>>> = Arc::default();
    let l = {
        let pipeline = pipeline.clone();
        move |n: i64| -> Mat2<R> {
            if let Some(m) = cache.lock().unwrap().get(&n) {
                return m.clone();
            }
            let m = pipeline
                .step3_l(n)
                .unwrap_or_else(|_| Mat2::real(R::from_f64(f64::NAN, &ctx), R::zero(), R::zero(), R::zero()));
            cache.lock().unwrap().insert(n, m.clone());
            m
        }
    };
    let p = {
        let pipeline = pipeline.clone();
        move |n| pipeline.p(n)
    };
    let v = {
        let pipeline = pipeline.clone();
        move |n| {
            let d = (pipeline.l_decay(n) - R::from_i64(1, &ctx)) / pipeline.p(n);
            Mat2::diag(c_real(d), c_real(R::from_i64(0, &ctx)))
        }
    };
    let r = move |n| l(n) - pipeline.l_main(n);
    Ok(SystemSpec::new("paper-L-stage", p, v, r, start, ctx))
}
