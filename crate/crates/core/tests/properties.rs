use proptest::prelude::*;

use rotorwalk::mbp::{
    factorial_second_moments, first_moment_matrix, good_children_counts, mbp_generating_function,
    offspring_law, second_moments, total_size_gf,
};
use rotorwalk::rotor::{new_walk, sample_good_tree};
use rotorwalk::spectral::{gamma_closed_form, gamma_matrix, inverse, perron, spectral_radius, PowerIteration};
use rotorwalk::{analyze, parse_generator, range_limit, Classification, Generator, Matrix, RotorLaw};

/// Random strongly connected generator: a cycle through all types plus extra
/// children.
fn generator_strategy(max_types: usize, max_extra: usize) -> impl Strategy<Value = Generator> {
    (1..=max_types).prop_flat_map(move |n| {
        (
            prop::collection::vec(prop::collection::vec(0..n, 0..=max_extra), n),
            prop::collection::vec(any::<prop::sample::Index>(), n),
        )
            .prop_map(move |(extras, positions)| {
                let words = extras
                    .into_iter()
                    .zip(positions)
                    .enumerate()
                    .map(|(i, (mut w, pos))| {
                        let at = pos.index(w.len() + 1);
                        w.insert(at, (i + 1) % n);
                        w
                    })
                    .collect();
                Generator::new(words).expect("cycle makes it strongly connected")
            })
    })
}

fn palindrome(half: Vec<usize>, middle: Option<usize>) -> Vec<usize> {
    let mut w = half.clone();
    w.extend(middle);
    w.extend(half.into_iter().rev());
    w
}

/// Random palindromic strongly connected generator with
/// `d_i <= 2 max_half + 3`.
fn palindromic_strategy(max_types: usize, max_half: usize) -> impl Strategy<Value = Generator> {
    (1..=max_types).prop_flat_map(move |n| {
        prop::collection::vec(
            (prop::collection::vec(0..n, 0..=max_half), prop::option::of(0..n), any::<bool>()),
            n,
        )
        .prop_map(move |parts| {
            let words = parts
                .into_iter()
                .enumerate()
                .map(|(i, (mut half, middle, paired))| {
                    // An edge to the next type keeps the cycle: either as a
                    // mirrored pair or as the middle letter.
                    let next = (i + 1) % n;
                    if paired {
                        half.insert(0, next);
                        palindrome(half, middle)
                    } else {
                        palindrome(half, Some(next))
                    }
                })
                .collect();
            Generator::new(words).expect("cycle makes it strongly connected")
        })
    })
}

fn permutation_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn nonnegative_matrix(max_n: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.0f64..3.0, n), n)
            .prop_map(|rows| Matrix::from_rows(&rows))
    })
}

/// Strictly positive matrix scaled to the given spectral radius.
fn subcritical_matrix(max_n: usize) -> impl Strategy<Value = Matrix> {
    (
        (1..=max_n).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n)),
        0.05f64..0.95,
    )
        .prop_map(|(rows, target)| {
            let a = Matrix::from_rows(&rows);
            let rho = spectral_radius(&a, 1e-13).unwrap();
            a.scale(target / rho)
        })
}

fn rel_close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * b.abs() + abs
}

/// One-sided derivative at `x` from values at `x, x − h, x − 2h, x − 3h`.
fn backward_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (11.0 * f(x) - 18.0 * f(x - h) + 9.0 * f(x - 2.0 * h) - 2.0 * f(x - 3.0 * h)) / (6.0 * h)
}

fn with_coordinate(n: usize, j: usize, t: f64) -> Vec<f64> {
    let mut z = vec![1.0; n];
    z[j] = t;
    z
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn adjacency_rows_sum_to_degree(g in generator_strategy(6, 6)) {
        let d = g.adjacency();
        for i in 0..g.n_types() {
            prop_assert_eq!(d.row(i).iter().sum::<f64>(), g.degree(i) as f64);
        }
    }

    #[test]
    fn serialize_then_parse_is_identity(g in generator_strategy(6, 6)) {
        let text = g.to_toml(None);
        let parsed = parse_generator(&text).unwrap();
        prop_assert_eq!(&parsed.generator, &g);
        prop_assert!(!parsed.explicit_law);
        let law = RotorLaw::uniform(&g);
        let with_law = parse_generator(&g.to_toml(Some(&law))).unwrap();
        prop_assert_eq!(&with_law.law, &law);
        prop_assert!(with_law.explicit_law);
    }

    #[test]
    fn palindromic_survives_relabeling(
        (g, perm) in generator_strategy(5, 4).prop_flat_map(|g| {
            let n = g.n_types();
            (Just(g), permutation_strategy(n))
        })
    ) {
        prop_assert_eq!(g.relabel(&perm).unwrap().is_palindromic(), g.is_palindromic());
    }

    #[test]
    fn palindromic_generators_stay_palindromic(
        (g, perm) in palindromic_strategy(5, 3).prop_flat_map(|g| {
            let n = g.n_types();
            (Just(g), permutation_strategy(n))
        })
    ) {
        prop_assert!(g.is_palindromic());
        let r = g.relabel(&perm).unwrap();
        prop_assert!(r.is_palindromic());
        // Relabeling conjugates D by a permutation, so the spectrum is kept.
        let a = spectral_radius(&g.adjacency(), 1e-12).unwrap();
        let b = spectral_radius(&r.adjacency(), 1e-12).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn spectral_radius_within_row_sum_bounds(a in nonnegative_matrix(6)) {
        let rho = spectral_radius(&a, 1e-12).unwrap();
        let sums = a.row_sums();
        let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().cloned().fold(0.0, f64::max);
        prop_assert!(rho >= lo - 1e-9 && rho <= hi + 1e-9, "{} not in [{}, {}]", rho, lo, hi);
    }

    #[test]
    fn perron_vector_is_positive_eigenvector(m in subcritical_matrix(6)) {
        let p = perron(&m, PowerIteration::default()).unwrap();
        prop_assert!(p.vector.iter().all(|&x| x > 0.0));
        let av = m.mul_vec(&p.vector);
        let residual: f64 = av.iter().zip(&p.vector).map(|(a, v)| (a - p.root * v).abs()).sum();
        let norm: f64 = p.vector.iter().sum();
        prop_assert!(residual <= 1e-10 * p.root.max(1.0) * norm);
    }

    #[test]
    fn inverse_radius_is_reciprocal_gap(m in subcritical_matrix(6)) {
        let n = m.dim();
        let rho = spectral_radius(&m, 1e-13).unwrap();
        let v = inverse(&Matrix::identity(n).sub(&m)).unwrap();
        let rho_v = spectral_radius(&v, 1e-13).unwrap();
        prop_assert!(rel_close(rho_v, 1.0 / (1.0 - rho), 1e-8, 0.0), "{} vs {}", rho_v, 1.0 / (1.0 - rho));
    }

    #[test]
    fn inverse_matches_neumann_series(m in subcritical_matrix(5)) {
        let n = m.dim();
        let rho = spectral_radius(&m, 1e-13).unwrap();
        let v = inverse(&Matrix::identity(n).sub(&m)).unwrap();
        let mut sum = Matrix::identity(n);
        let mut power = Matrix::identity(n);
        let mut k = 0usize;
        // Positive matrices have no Jordan blocks at ρ, so a margin on the
        // bound is enough.
        while rho.powi(k as i32) >= 1e-14 * (1.0 - rho) {
            power = power.mul(&m);
            sum = sum.add(&power);
            k += 1;
        }
        prop_assert!(v.max_abs_diff(&sum) < 1e-8 * v.rows().iter().flatten().cloned().fold(1.0, f64::max));
    }

    #[test]
    fn good_children_sum_to_remaining_slots(g in generator_strategy(5, 6)) {
        for i in 0..g.n_types() {
            for k in 0..=g.degree(i) {
                let c = good_children_counts(&g, i, k).unwrap();
                prop_assert_eq!(c.iter().map(|&x| x as usize).sum::<usize>(), g.degree(i) - k);
            }
        }
    }

    #[test]
    fn first_moment_row_sums(g in generator_strategy(5, 6), weights in prop::collection::vec(0.01f64..1.0, 12)) {
        let probs: Vec<Vec<f64>> = (0..g.n_types())
            .map(|i| {
                let w = &weights[..=g.degree(i)];
                let total: f64 = w.iter().sum();
                w.iter().map(|x| x / total).collect()
            })
            .collect();
        let law = RotorLaw::from_probs(&g, probs).unwrap();
        let m = first_moment_matrix(&offspring_law(&g, &law).unwrap());
        for i in 0..g.n_types() {
            let expect = g.degree(i) as f64 - law.mean_state(i);
            prop_assert!((m.row(i).iter().sum::<f64>() - expect).abs() < 1e-12);
        }
        let uniform = first_moment_matrix(&offspring_law(&g, &RotorLaw::uniform(&g)).unwrap());
        for i in 0..g.n_types() {
            prop_assert!((uniform.row(i).iter().sum::<f64>() - g.degree(i) as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_moments_are_gf_derivatives(g in generator_strategy(4, 5)) {
        let law = RotorLaw::uniform(&g);
        let ol = offspring_law(&g, &law).unwrap();
        let m = first_moment_matrix(&ol);
        let n = g.n_types();
        for i in 0..n {
            for j in 0..n {
                let f = |t: f64| mbp_generating_function(&ol, &with_coordinate(n, j, t)).unwrap()[i];
                let fd = backward_derivative(f, 1.0, 1e-3);
                prop_assert!(rel_close(fd, m[(i, j)], 1e-6, 1e-9), "m[{},{}] = {} vs {}", i, j, m[(i, j)], fd);
            }
        }
    }

    #[test]
    fn second_moments_are_gf_second_derivatives(g in generator_strategy(3, 5)) {
        let law = RotorLaw::uniform(&g);
        let ol = offspring_law(&g, &law).unwrap();
        let m = first_moment_matrix(&ol);
        let sigma = second_moments(&ol);
        let factorial = factorial_second_moments(&m, &sigma);
        let n = g.n_types();
        let h = 1e-3;
        // Three-point backward differences in each coordinate.
        let weights = [(0.0, 1.5), (1.0, -2.0), (2.0, 0.5)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut fd = 0.0;
                    for &(a, wa) in &weights {
                        for &(b, wb) in &weights {
                            let mut z = vec![1.0; n];
                            z[j] -= a * h;
                            z[k] -= b * h;
                            fd += wa * wb * mbp_generating_function(&ol, &z).unwrap()[i];
                        }
                    }
                    fd /= h * h;
                    let exact = factorial[(i, j, k)];
                    prop_assert!(rel_close(fd, exact, 1e-4, 1e-4), "({},{},{}): {} vs {}", i, j, k, fd, exact);
                    let diagonal = if j == k { m[(i, j)] } else { 0.0 };
                    prop_assert!((sigma[(i, j, k)] - exact - diagonal).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn xi_is_symmetric_and_limit_in_range(g in generator_strategy(4, 4)) {
        let data = analyze(&g, &RotorLaw::uniform(&g)).unwrap();
        if let Some(xi) = &data.xi {
            let n = g.n_types();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        prop_assert!((xi[(i, j, k)] - xi[(i, k, j)]).abs() <= 1e-10 * xi[(i, j, k)].abs().max(1.0));
                    }
                }
            }
        }
        if let Some(limit) = data.predicted_limit {
            prop_assert!((0.0..0.5).contains(&limit));
        }
    }

    #[test]
    fn range_limit_is_monotone(a in 1.0f64..1e6, b in 1.0f64..1e6) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (range_limit(lo).unwrap(), range_limit(hi).unwrap());
        prop_assert!(x <= y);
        prop_assert!((0.0..0.5).contains(&x) && (0.0..0.5).contains(&y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn palindromic_gamma_matches_closed_form(g in palindromic_strategy(5, 1)) {
        let d = g.adjacency();
        let psi = spectral_radius(&d, 1e-13).unwrap();
        prop_assume!(psi < 2.0 - 1e-6);
        let gm = gamma_matrix(&d, &d.scale(0.5)).unwrap();
        let direct = spectral_radius(&gm, 1e-13).unwrap();
        let closed = gamma_closed_form(psi, 2.0).unwrap();
        prop_assert!((direct - closed).abs() <= 1e-9 * closed.max(1.0), "{} vs {}", direct, closed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn walks_are_deterministic(g in generator_strategy(4, 3), seed in any::<u64>(), root in 0usize..4) {
        let root = root % g.n_types() + 1;
        let law = RotorLaw::uniform(&g);
        let mut a = new_walk(&g, &law, root, seed).unwrap();
        let mut b = new_walk(&g, &law, root, seed).unwrap();
        for _ in 0..3_000 {
            let (x, y) = (a.step(), b.step());
            prop_assert_eq!(x.rotor_after, y.rotor_after);
            prop_assert_eq!(a.position_path(x.to), b.position_path(y.to));
        }
        prop_assert_eq!(a.range_by_type(), b.range_by_type());
        prop_assert_eq!(a.sink_visits(), b.sink_visits());
    }

    #[test]
    fn traversals_count_steps_and_range_grows(g in generator_strategy(4, 3), seed in any::<u64>()) {
        let law = RotorLaw::uniform(&g);
        let mut w = new_walk(&g, &law, 1, seed).unwrap();
        let mut last = 0;
        for n in 1..=5_000u64 {
            w.step();
            prop_assert_eq!(w.edge_traversals_by_type().iter().sum::<u64>(), n);
            let r = w.range_size();
            prop_assert!(r >= last);
            prop_assert_eq!(w.range_by_type().iter().sum::<u64>(), r);
            last = r;
        }
    }

    #[test]
    fn identities_hold_on_random_recurrent_generators(g in generator_strategy(4, 3), seed in any::<u64>()) {
        let law = RotorLaw::uniform(&g);
        let data = analyze(&g, &law).unwrap();
        prop_assume!(data.classification.is_recurrent());
        let mut w = new_walk(&g, &law, 1, seed).unwrap();
        let run = w.run_until_returns(6, 200_000);
        let first = run.violations().next().map(|v| v.to_string());
        prop_assert!(first.is_none(), "{:?}", first);
    }
}

#[test]
fn first_excursion_range_is_a_good_tree() {
    // R_1 and the good-children tree share a law; compare per-type means.
    let g = Generator::from_one_based(&[&[2, 2], &[1]]).unwrap();
    let law = RotorLaw::uniform(&g);
    let runs = 100_000u64;
    let mut walk_sum = [[0.0f64; 2]; 2];
    let mut tree_sum = [[0.0f64; 2]; 2];
    for s in 0..runs {
        let mut w = new_walk(&g, &law, 1, s).unwrap();
        let run = w.run_until_returns(1, 1_000_000_000);
        let r = &run.records[0].range_by_type;
        let t = sample_good_tree(&g, &law, 1, s, u64::MAX).unwrap().counts;
        for j in 0..2 {
            walk_sum[0][j] += r[j] as f64;
            walk_sum[1][j] += (r[j] * r[j]) as f64;
            tree_sum[0][j] += t[j] as f64;
            tree_sum[1][j] += (t[j] * t[j]) as f64;
        }
    }
    let n = runs as f64;
    for j in 0..2 {
        let (mw, mt) = (walk_sum[0][j] / n, tree_sum[0][j] / n);
        let vw = walk_sum[1][j] / n - mw * mw;
        let vt = tree_sum[1][j] / n - mt * mt;
        let se = ((vw + vt) / n).sqrt();
        assert!((mw - mt).abs() <= 3.0 * se, "type {}: walk {mw} tree {mt} se {se}", j + 1);
    }
}

#[test]
fn total_size_gf_is_one_at_one_when_positive_recurrent() {
    for words in [
        vec![vec![1, 1], vec![0]],
        vec![vec![1, 1, 0, 2], vec![0], vec![3], vec![4], vec![1]],
        vec![vec![0]],
        vec![vec![1, 0, 1], vec![0, 0]],
    ] {
        let g = Generator::new(words).unwrap();
        let law = RotorLaw::uniform(&g);
        let data = analyze(&g, &law).unwrap();
        if data.classification != Classification::PositiveRecurrent {
            continue;
        }
        let ol = offspring_law(&g, &law).unwrap();
        let f1 = total_size_gf(&ol, &vec![1.0; g.n_types()], 1e-15).unwrap();
        assert!(f1.iter().all(|x| (x - 1.0).abs() < 1e-8), "{f1:?}");
    }
}
