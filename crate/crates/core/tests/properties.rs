mod common;

use approx::assert_relative_eq;
use dcjac::dcmax::{load_problem, MaxFn};
use dcjac::expr::parse;
use dcjac::jacobian::{gamma_set, s1_chain, s1_select, witness_direction};
use dcjac::oracle::hull_membership;
use dcjac::{algorithm_a1, Convention, DcMaxFn, Matrix, SmoothFn, Tolerances};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn int_grads(n: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec((-3i32..=3).prop_map(f64::from), n),
        1..=k,
    )
}

fn convention() -> impl Strategy<Value = Convention> {
    prop_oneof![Just(Convention::Min), Just(Convention::Max)]
}

/// Piecewise-affine problem with integer data.
fn affine_problem() -> impl Strategy<Value = DcMaxFn> {
    (1usize..=3, 1usize..=2).prop_flat_map(|(n, m)| {
        let piece = (
            prop::collection::vec(-4i32..=4, n),
            prop_oneof![Just(0), -3i32..=3],
        );
        let side = prop::collection::vec(piece, 1..=4);
        prop::collection::vec((side.clone(), side), m).prop_map(move |comps| {
            let components: Vec<String> = comps
                .iter()
                .map(|(g, h)| {
                    let list = |s: &Vec<(Vec<i32>, i32)>| {
                        s.iter()
                            .map(|(a, b)| format!("\"{}\"", common::affine_text(a, *b)))
                            .collect::<Vec<_>>()
                            .join(",")
                    };
                    format!("{{\"g\":[{}],\"h\":[{}]}}", list(g), list(h))
                })
                .collect();
            load_problem(&format!(
                "{{\"n\":{n},\"m\":{m},\"components\":[{}]}}",
                components.join(",")
            ))
            .expect("generated problem parses")
        })
    })
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_print_parse_round_trips(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_expr(&mut rng, n, 4).to_string();
        let parsed = parse(&text, n).unwrap();
        let printed = parsed.to_string();
        prop_assert_eq!(parse(&printed, n).unwrap(), parsed);
        prop_assert_eq!(parse(&printed, n).unwrap().to_string(), printed);
    }

    #[test]
    fn evaluation_is_deterministic(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = SmoothFn::new(common::random_expr(&mut rng, n, 4), n).unwrap();
        let x = common::random_point(&mut rng, n);
        let a = f.value_and_grad(&x).unwrap();
        let b = f.value_and_grad(&x).unwrap();
        prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
        prop_assert!(a.1.iter().zip(&b.1).all(|(p, q)| p.to_bits() == q.to_bits()));
        prop_assert_eq!(f.eval(&x).unwrap().to_bits(), a.0.to_bits());
    }

    #[test]
    fn s1_output_is_nonempty_and_nested(grads in (1usize..=4).prop_flat_map(|n| int_grads(n, 6)), c in convention()) {
        let chain = s1_chain(&grads, c, 1e-9).unwrap();
        prop_assert_eq!(chain.len(), grads[0].len() + 1);
        prop_assert_eq!(chain[0].len(), grads.len());
        for w in chain.windows(2) {
            prop_assert!(!w[1].is_empty());
            prop_assert!(w[1].iter().all(|i| w[0].contains(i)));
        }
        prop_assert_eq!(chain.last().unwrap(), &s1_select(&grads, c, 1e-9).unwrap());
    }

    #[test]
    fn s1_survivors_are_lexicographic_extremes(grads in (1usize..=4).prop_flat_map(|n| int_grads(n, 6)), c in convention()) {
        let sel = s1_select(&grads, c, 1e-9).unwrap();
        let best = grads
            .iter()
            .cloned()
            .reduce(|a, b| {
                let ord = a.partial_cmp(&b).unwrap();
                let keep_a = match c {
                    Convention::Min => ord.is_le(),
                    Convention::Max => ord.is_ge(),
                };
                if keep_a { a } else { b }
            })
            .unwrap();
        for &i in &sel {
            prop_assert_eq!(&grads[i], &best);
        }
        let expected: Vec<usize> = (0..grads.len()).filter(|&i| grads[i] == best).collect();
        prop_assert_eq!(sel, expected);
    }

    #[test]
    fn conventions_are_dual_under_negation(grads in (1usize..=4).prop_flat_map(|n| int_grads(n, 6))) {
        let neg: Vec<Vec<f64>> = grads.iter().map(|g| g.iter().map(|v| -v).collect()).collect();
        prop_assert_eq!(
            s1_chain(&grads, Convention::Min, 1e-9).unwrap(),
            s1_chain(&neg, Convention::Max, 1e-9).unwrap()
        );
    }

    #[test]
    fn directional_derivative_is_positively_homogeneous(f in affine_problem(), y in direction(3), s in 0.01..100.0f64) {
        let n = f.n();
        let y = &y[..n];
        let x = vec![0.0; n];
        let d1 = f.directional_derivative(&x, y, 1e-9).unwrap();
        let sy: Vec<f64> = y.iter().map(|v| s * v).collect();
        let d2 = f.directional_derivative(&x, &sy, 1e-9).unwrap();
        for (a, b) in d1.iter().zip(&d2) {
            prop_assert!((s * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn max_directional_derivative_is_convex(
        grads in int_grads(3, 5),
        y in direction(3),
        z in direction(3),
        s in 0.0..1.0f64,
    ) {
        let texts: Vec<String> = grads
            .iter()
            .map(|g| common::affine_text(&g.iter().map(|v| *v as i32).collect::<Vec<_>>(), 0))
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let f = MaxFn::parse(&refs, 3).unwrap();
        let x = [0.0; 3];
        let mix: Vec<f64> = y.iter().zip(&z).map(|(a, b)| s * a + (1.0 - s) * b).collect();
        let lhs = f.directional_derivative(&x, &mix, 1e-9).unwrap();
        let rhs = s * f.directional_derivative(&x, &y, 1e-9).unwrap()
            + (1.0 - s) * f.directional_derivative(&x, &z, 1e-9).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn hull_membership_ignores_duplicates_and_scales(
        pts in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 1..5),
        w in prop::collection::vec(0.01..1.0f64, 5),
        s in 0.1..10.0f64,
    ) {
        let cands: Vec<Matrix> = pts.iter().map(|p| Matrix::from_rows(vec![p.clone()])).collect();
        let total: f64 = w[..pts.len()].iter().sum();
        let q: Vec<f64> = (0..2)
            .map(|c| pts.iter().zip(&w).map(|(p, wi)| p[c] * wi / total).sum())
            .collect();
        let query = Matrix::from_rows(vec![q]);
        prop_assert!(hull_membership(&query, &cands, 1e-8).unwrap().member);
        let mut doubled = cands.clone();
        doubled.extend(cands.iter().cloned());
        prop_assert!(hull_membership(&query, &doubled, 1e-8).unwrap().member);
        let scaled: Vec<Matrix> = cands.iter().map(|c| c.scaled(s)).collect();
        prop_assert!(hull_membership(&query.scaled(s), &scaled, 1e-8 * s.max(1.0)).unwrap().member);
    }

    #[test]
    fn gamma_vectors_lead_with_the_convention_sign(f in affine_problem(), c in convention()) {
        let x = vec![0.0; f.n()];
        let e = algorithm_a1(&f, &x, Tolerances::default(), c).unwrap();
        let g = gamma_set(&f, &x, &e.selection).unwrap();
        for v in &g.vectors {
            prop_assert!(v.alpha[..v.lead].iter().all(|a| a.abs() <= 1e-9));
            let lead = v.alpha[v.lead];
            match c {
                Convention::Min => prop_assert!(lead > 0.0),
                Convention::Max => prop_assert!(lead < 0.0),
            }
        }
    }

    #[test]
    fn witness_direction_is_valid(f in affine_problem(), c in convention()) {
        let x = vec![0.0; f.n()];
        let e = algorithm_a1(&f, &x, Tolerances::default(), c).unwrap();
        let g = gamma_set(&f, &x, &e.selection).unwrap();
        let w = witness_direction(&g, f.n(), c).unwrap();
        prop_assert!(w.check(&g).valid);
        prop_assert!(g.contains_direction(&w.y_bar));
        assert_relative_eq!(w.y_bar[0].abs(), 1.0);
    }

    #[test]
    fn xi_is_linear_on_the_witness_ray(f in affine_problem(), c in convention()) {
        let x = vec![0.0; f.n()];
        let e = algorithm_a1(&f, &x, Tolerances::default(), c).unwrap();
        let g = gamma_set(&f, &x, &e.selection).unwrap();
        let w = witness_direction(&g, f.n(), c).unwrap();
        let dd = f.directional_derivative(&x, &w.y_bar, 1e-9).unwrap();
        let lin = e.xi.mul_vec(&w.y_bar);
        for (a, b) in dd.iter().zip(&lin) {
            assert_relative_eq!(*a, *b, epsilon = 1e-10, max_relative = 1e-10);
        }
    }
}
