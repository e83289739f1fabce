use critical_jacobi::levinson::{boundedness_certificate, d1_diagonalize, simple_system_solution};
use critical_jacobi::mat2::{c_abs, c_real, chrono_product, telescope, Mat2, Vec2};
use critical_jacobi::model::Regime;
use critical_jacobi::pipeline::{commutator_solve, jordan_target};
use critical_jacobi::recurrence::{forward_solve, wronskian};
use critical_jacobi::{Model, ModelParams, Mpf, PrecisionContext, Real, SystemSpec};
use proptest::prelude::*;

fn ctx() -> PrecisionContext {
    PrecisionContext::new(40).unwrap()
}

fn mat(e: [i64; 4], c: &PrecisionContext) -> Mat2<Mpf> {
    Mat2::from_i64([[e[0], e[1]], [e[2], e[3]]], c)
}

fn small_mat() -> impl Strategy<Value = [i64; 4]> {
    prop::array::uniform4(-9i64..=9)
}

fn params(alpha: f64, b: f64, lambda: f64) -> ModelParams<Mpf> {
    ModelParams::parse(&format!("{alpha:.6}"), &format!("{b:.6}"), &format!("{lambda:.6}"), &ctx()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn det_is_multiplicative(a in small_mat(), b in small_mat()) {
        let c = ctx();
        let (x, y) = (mat(a, &c), mat(b, &c));
        prop_assert_eq!((&x * &y).det(), x.det() * y.det());
    }

    #[test]
    fn chrono_product_splits(seed in prop::collection::vec(small_mat(), 6), split in 1i64..5) {
        let c = ctx();
        let f = |n: i64| mat(seed[(n - 1) as usize], &c);
        let whole = chrono_product(f, 1, 6, &c).unwrap();
        let parts = &chrono_product(f, split + 1, 6, &c).unwrap() * &chrono_product(f, 1, split, &c).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn telescope_identity(seed in prop::collection::vec(small_mat(), 5), shift in 1i64..5) {
        let c = ctx();
        let a = |n: i64| mat(seed[(n - 1) as usize], &c);
        // unimodular conjugators
        let t = |n: i64| Mat2::from_i64([[1, n + shift], [0, 1]], &c);
        let tel = telescope(a, t, 1, 5, &c).unwrap();
        prop_assert!(tel.identity_check <= Mpf::tolerance(10, &c) * (Mpf::from_i64(1, &c) + chrono_product(a, 1, 5, &c).unwrap().norm()));
    }

    #[test]
    fn commutator_solution_is_exact(f1 in -50i64..50, f2 in -50i64..50) {
        let c = ctx();
        let s = commutator_solve(c_real(Mpf::from_i64(f1, &c)), c_real(Mpf::from_i64(f2, &c)), &c);
        let n = jordan_target::<Mpf>(&c);
        let lhs = s.x.commutator(&n);
        let rhs = Mat2::new(lhs.0[0][0].clone(), lhs.0[0][1].clone(), s.x1.clone(), s.x2.clone());
        prop_assert_eq!(lhs.clone(), rhs);
        prop_assert_eq!(lhs.0[0][0].re.to_f64(), f1 as f64);
        prop_assert_eq!(lhs.0[0][1].re.to_f64(), f2 as f64);
    }

    #[test]
    fn regime_depends_on_sign_of_b_lambda(alpha in 0.67f64..0.99, b in -3.0f64..3.0, lambda in -3.0f64..3.0, s in 0.1f64..10.0) {
        prop_assume!(b.abs() > 1e-3 && lambda.abs() > 1e-3 && alpha > 2.0 / 3.0 + 1e-3);
        let m1 = Model::new(params(alpha, b, lambda), ctx()).unwrap();
        let m2 = Model::new(params(alpha, b * s, lambda / s), ctx()).unwrap();
        let expect = if b * lambda > 0.0 { Regime::CriticalHyperbolic } else { Regime::CriticalElliptic };
        prop_assert_eq!(m1.regime(), expect);
        prop_assert_eq!(m2.regime(), expect);
        let d = m1.paired_discriminant(4000).to_f64();
        prop_assert_eq!(d > 0.0, b * lambda > 0.0);
    }

    #[test]
    fn wronskian_is_conserved(alpha in 0.67f64..0.99, b in -2.0f64..2.0, lambda in -2.0f64..2.0) {
        prop_assume!(b.abs() > 1e-2 && alpha > 2.0 / 3.0 + 1e-3);
        let c = PrecisionContext::new(80).unwrap();
        let p = ModelParams::<Mpf>::parse(&format!("{alpha:.6}"), &format!("{b:.6}"), &format!("{lambda:.6}"), &c).unwrap();
        let model = Model::new(p, c).unwrap();
        let u = forward_solve(&model, &Vec2::e1(&c), 1, 200).unwrap();
        let v = forward_solve(&model, &Vec2::e2(&c), 1, 200).unwrap();
        let w0 = wronskian(&model, &u, &v, 1).unwrap();
        for n in [2, 50, 199] {
            let w = wronskian(&model, &u, &v, n).unwrap();
            prop_assert!(c_abs(&(w - w0.clone())) < Mpf::tolerance(20, &c) * (Mpf::from_i64(1, &c) + c_abs(&w0)));
        }
    }

    #[test]
    fn solutions_respect_boundedness_certificate(
        scale in 0.1f64..4.0,
        x in -5i64..5,
        y in -5i64..5,
        signs in prop::array::uniform4(prop::bool::ANY),
    ) {
        prop_assume!(x != 0 || y != 0);
        let c = ctx();
        let k = Mpf::from_f64(scale, &c);
        let spec = SystemSpec::new(
            "random",
            move |n| Mpf::from_ratio(1, n + 1, &c),
            move |_| Mat2::from_i64([[-1, 0], [0, 0]], &c),
            move |n| {
                let e = k.clone() / Mpf::from_i64(n * n, &c);
                let s = |b: bool| if b { -e.clone() } else { e.clone() };
                Mat2::real(s(signs[0]), s(signs[1]), s(signs[2]), s(signs[3]))
            },
            1,
            c,
        );
        let cert = boundedness_certificate(&spec, 400).unwrap();
        let seed = Vec2::real(Mpf::from_i64(x, &c), Mpf::from_i64(y, &c));
        let t = simple_system_solution(&spec, &seed, cert.start, 400);
        let bound = cert.constant * seed.norm().to_f64() * (1.0 + 1e-12);
        prop_assert!(t.values.iter().all(|u| u.norm().to_f64() <= bound));
    }

    #[test]
    fn eigenvalues_move_continuously(a in 1i64..5, off in -3i64..3) {
        let c = ctx();
        let v = move |n: i64| {
            let e = Mpf::from_ratio(off, n, &c);
            Mat2::real(Mpf::from_i64(-a, &c), e.clone(), e, Mpf::from_i64(0, &c))
        };
        let d = d1_diagonalize(v, 1, 300, &c).unwrap();
        let limit = Mpf::from_i64(a, &c);
        for n in d.threshold..300 {
            let dv = (v(n + 1) - v(n)).norm();
            let [m1, m2] = d.mu(n);
            let [n1, n2] = d.mu(n + 1);
            let kappa = Mpf::from_i64(2, &c) + Mpf::from_i64(8, &c) * v(n).norm() / limit.clone();
            prop_assert!(c_abs(&(n1.clone() - m1.clone())) <= kappa.clone() * dv.clone());
            prop_assert!(c_abs(&(n2.clone() - m2.clone())) <= kappa * dv);
            prop_assert!(m1.re < m2.re);
        }
    }
}
