//! End-to-end run at alpha = 0.8, b = lambda = 1 up to paired index 2000.

use critical_jacobi::pipeline::Branch;
use critical_jacobi::recurrence::{
    backward_solve, envelope_check, envelope_product, forward_solve, max_relative_difference,
    recurrence_budget, wronskian_drift,
};
use critical_jacobi::{Model, ModelParams, Mpf, Pipeline, PrecisionContext, Vec2};

const N_MAX: i64 = 2000;

fn setup() -> Pipeline<Mpf> {
    let probe = PrecisionContext::default();
    let m = Model::new(ModelParams::<Mpf>::parse("0.8", "1", "1", &probe).unwrap(), probe).unwrap();
    let digits = recurrence_budget(&m, 2 * N_MAX + 1).unwrap();
    let ctx = PrecisionContext::new(digits).unwrap();
    let m = Model::new(ModelParams::parse("0.8", "1", "1", &ctx).unwrap(), ctx).unwrap();
    Pipeline::new(m).unwrap()
}

#[test]
fn reference_solutions() {
    let p = setup();
    let m = &p.model;
    let ctx = *m.ctx();
    assert_eq!(ctx.digits(), 135);
    let fwd = forward_solve(m, &Vec2::e2(&ctx), 1, 2 * N_MAX + 1).unwrap();
    let bwd = backward_solve(m, 4 * (2 * N_MAX + 1), 2 * N_MAX + 1).unwrap();

    let plus = envelope_check(&fwd, &p.ansatz, m, Branch::Plus, N_MAX / 2, N_MAX, 0.05).unwrap();
    println!("{plus:?}");
    assert!(plus.envelope_passed && plus.alternation_passed);
    assert!(plus.odd_even_step4_relative_error < 0.05);

    let minus = envelope_check(&bwd, &p.ansatz, m, Branch::Minus, N_MAX / 2, N_MAX, 0.05).unwrap();
    println!("{minus:?}");
    assert!(minus.envelope_passed && minus.alternation_passed);
    assert!(minus.odd_even_step4_relative_error < 0.05);

    let w = wronskian_drift(m, &fwd, &bwd).unwrap();
    println!("{w:?}");
    assert!(w.passed && !w.identically_zero);

    let a = envelope_product(m, &fwd, &bwd, N_MAX / 2).unwrap();
    let b = envelope_product(m, &fwd, &bwd, N_MAX).unwrap();
    assert!(a > 0.0 && (a / b - 1.0).abs() < 0.05, "{a} {b}");
}

#[test]
fn step4_matches_direct_recurrence() {
    let p = setup();
    let m = &p.model;
    let r = p.step4_reassemble(None, N_MAX).unwrap();
    let n0 = r.n0;
    let dom = &r.dominant;
    let seed = Vec2::new(dom.u(2 * n0 - 2).unwrap().clone(), dom.u(2 * n0 - 1).unwrap().clone());
    let direct = forward_solve(m, &seed, 2 * n0 - 1, dom.last_index()).unwrap();
    let diff = max_relative_difference(dom, &direct).unwrap();
    let limit = 10f64.powi(-(m.ctx().digits() as i32 - 20));
    assert!(diff < limit, "{diff:e}");
    let env = envelope_check(dom, &p.ansatz, m, Branch::Plus, N_MAX / 2, N_MAX, 0.05).unwrap();
    assert!(env.envelope_passed, "{env:?}");
}
