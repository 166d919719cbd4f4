use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use gaussmin::covariance::{
    kappa, permutation_distance, section_triangle, sigma_from_section, standard_square_root, validate_admissible,
    CovarianceMatrix3,
};
use gaussmin::geometry::{orthogonal_2x2, Point2, Triangle2D};
use gaussmin::io::{fmt_f64, parse_tail_csv, tail_csv};
use gaussmin::radon::{decompose_atoms, parametric_form, radon_exact, radon_from_atoms, recover_triangle, RadonProfile};
use gaussmin::tail::{tail_from_sigma, ForwardModel, TailGrid};

fn admissible() -> impl Strategy<Value = CovarianceMatrix3<f64>> {
    (prop::array::uniform3(0.5f64..2.0), prop::array::uniform3(-0.95f64..0.95))
        .prop_map(|(sd, c)| {
            let r = [[1.0, c[0], c[1]], [c[0], 1.0, c[2]], [c[1], c[2], 1.0]];
            CovarianceMatrix3::new(std::array::from_fn(|i| std::array::from_fn(|j| r[i][j] * sd[i] * sd[j])))
        })
        .prop_filter("admissible", |s| validate_admissible(s).admissible)
}

fn enclosing() -> impl Strategy<Value = Triangle2D<f64>> {
    (prop::array::uniform3(0.0f64..TAU), prop::array::uniform3(0.5f64..2.0))
        .prop_filter_map("encloses the origin", |(mut a, r)| {
            a.sort_by(f64::total_cmp);
            let gaps = [a[1] - a[0], a[2] - a[1], TAU - a[2] + a[0]];
            if gaps.iter().any(|&g| g > PI - 1e-2 || g < 1e-2) {
                return None;
            }
            Triangle2D::new(std::array::from_fn(|i| Point2::polar(r[i], a[i]))).ok().filter(|t| t.is_enclosing())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn section_round_trip(s in admissible()) {
        let sec = section_triangle(&standard_square_root(&s).unwrap()).unwrap();
        let back = sigma_from_section(&sec, kappa(&s).unwrap()).unwrap();
        prop_assert!(permutation_distance(&s, &back).distance <= 1e-8);
    }

    #[test]
    fn permutations_are_invisible(s in admissible(), k in 0usize..6) {
        let p = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]][k];
        prop_assert!(permutation_distance(&s, &s.permuted(p)).distance <= 1e-15);
    }

    #[test]
    fn kappa_scales_inversely(s in admissible(), c in 0.3f64..3.0) {
        let (a, b) = (kappa(&s).unwrap(), kappa(&s.scaled(c * c)).unwrap());
        prop_assert!((b * c - a).abs() <= 1e-12 * a);
    }

    #[test]
    fn atoms_match_exact_transform(t in enclosing(), rho in 0.0f64..2.5) {
        let atoms = decompose_atoms(&t).unwrap();
        prop_assert!((radon_from_atoms(&atoms, rho) - radon_exact(&t, rho)).abs() <= 1e-9);
    }

    #[test]
    fn transform_and_form_are_orthogonally_invariant(t in enclosing(), theta in 0.0f64..TAU, reflect: bool, rho in 0.0f64..2.5) {
        let m = t.map(&orthogonal_2x2(theta, reflect));
        prop_assert!((radon_exact(&t, rho) - radon_exact(&m, rho)).abs() <= 1e-12);
        prop_assert!(parametric_form(&t).unwrap().distance(&parametric_form(&m).unwrap()) <= 1e-9);
    }

    #[test]
    fn tail_is_a_decreasing_probability(s in admissible()) {
        let grid = TailGrid::uniform(-2.0, 4.0, 25);
        let tail = tail_from_sigma(&s, &grid).unwrap();
        prop_assert!(tail.m.iter().all(|m| (0.0..=1.0).contains(m)));
        prop_assert!(tail.m.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tail_scales_with_sigma(s in admissible(), c in 0.5f64..2.0, t in -1.5f64..2.0) {
        let a = ForwardModel::from_sigma(&s).unwrap().m(t).unwrap();
        let b = ForwardModel::from_sigma(&s.scaled(c * c)).unwrap().m(c * t).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{} {}", a, b);
    }

    #[test]
    fn floats_print_and_parse_exactly(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn tail_csv_round_trips(s in admissible()) {
        let tail = tail_from_sigma(&s, &TailGrid::uniform(-1.0, 3.0, 12)).unwrap();
        let back = parse_tail_csv(std::str::from_utf8(&tail_csv(&tail).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(back.t, tail.t);
        prop_assert_eq!(back.m, tail.m);
    }
}

/// Adjacent distinct breakpoints at least three steps apart on a 2048-point grid.
fn well_separated(t: &Triangle2D<f64>) -> bool {
    let step = 1.05 * t.max_vertex_distance() / 2048.0;
    let mut r: Vec<f64> = decompose_atoms(t).unwrap().atoms.iter().flat_map(|a| [a.a, a.b]).collect();
    r.sort_by(f64::total_cmp);
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    r.windows(2).all(|w| w[1] - w[0] >= 3.0 * step)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_profiles_give_back_the_triangle(t in enclosing().prop_filter("resolvable", well_separated)) {
        let rec = recover_triangle(&RadonProfile::from_triangle(&t, 2048).unwrap()).unwrap();
        prop_assert!(rec.parametric.distance(&parametric_form(&t).unwrap()) <= 1e-6);
    }
}
