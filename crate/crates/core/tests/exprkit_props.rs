mod common;

use common::{corpus, fd_disagreement, point, points, smooth_expr};
use hydroham::exprkit::{eval_jet, expr_equal_numeric, parse_expr, Expr, SamplePlan};
use proptest::prelude::*;

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(a.abs()).max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_jet_is_jet_product(e1 in smooth_expr(3), e2 in smooth_expr(3), x in points(3)) {
        let p = point(&x);
        let a = eval_jet(&e1, &p, 3).unwrap();
        let b = eval_jet(&e2, &p, 3).unwrap();
        let direct = eval_jet(&Expr::raw_mul(e1, e2), &p, 3).unwrap();
        let product = a.mul(&b);
        // every coefficient of the product is a sum of pairwise products
        let scale = a.coefficients().iter().map(|c| c.abs()).sum::<f64>()
            * b.coefficients().iter().map(|c| c.abs()).sum::<f64>();
        for (u, v) in direct.coefficients().iter().zip(product.coefficients()) {
            prop_assert!(close(*u, *v, scale, 1e-12), "{u} vs {v}");
        }
    }

    #[test]
    fn jet_partials_match_central_differences(idx in 0..common::CORPUS.len(), x in points(3)) {
        let (text, e) = &corpus()[idx];
        let worst = fd_disagreement(e, &x);
        prop_assert!(worst <= 1e-6, "{text} at {x:?}: {worst}");
    }

    #[test]
    fn equal_seeds_draw_equal_points(seed in any::<u64>(), count in 1usize..40) {
        let plan = SamplePlan::unit_box(3).with_seed(seed).with_count(count);
        let again = SamplePlan::unit_box(3).with_seed(seed).with_count(count);
        prop_assert_eq!(plan.points(), again.points());
        // drawing an index out of order gives the same point
        let i = count / 2;
        prop_assert_eq!(plan.point(i, 0), plan.points()[i].clone());
    }

    #[test]
    fn equal_seeds_give_equal_reports(e1 in smooth_expr(2), e2 in smooth_expr(2), seed in any::<u64>()) {
        let plan = SamplePlan::unit_box(2).with_seed(seed).with_count(20);
        let a = expr_equal_numeric(&e1, &e2, &plan).unwrap();
        let b = expr_equal_numeric(&e1, &e2, &plan).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn identical_trees_are_equal(e in smooth_expr(3), seed in any::<u64>()) {
        let plan = SamplePlan::unit_box(3).with_seed(seed).with_count(30);
        let rep = expr_equal_numeric(&e, &e.clone(), &plan).unwrap();
        prop_assert!(rep.passed);
    }

    #[test]
    fn printing_round_trips(e in smooth_expr(3), x in points(3)) {
        let printed = e.to_string();
        let back = parse_expr(&printed, 3).unwrap();
        // the parser folds constants, so the text is stable from the second print on
        let reprinted = back.to_string();
        prop_assert_eq!(parse_expr(&reprinted, 3).unwrap().to_string(), reprinted);
        let (a, b) = (e.eval(&x).unwrap(), back.eval(&x).unwrap());
        prop_assert!(close(a, b, 1.0, 1e-12), "{printed}: {a} vs {b}");
    }

    #[test]
    fn symbolic_derivative_matches_jet(e in smooth_expr(3), x in points(3), k in 0usize..3) {
        let d = e.derivative(k).eval(&x).unwrap();
        let j = e.jet(&x, 1).unwrap().d(k);
        prop_assert!(close(d, j, 1.0, 1e-10), "{d} vs {j}");
    }
}
