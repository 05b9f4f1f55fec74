use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use gefsamp::assignment::solve_assignment;
use gefsamp::fock::{bargmann_shift, concentration_eigenvalue, fock_norm, FockFunction, QuadratureSpec};
use gefsamp::gef::{eval_gef, sample_gef};
use gefsamp::gfunc::{good_set, GFunction};
use gefsamp::harness::{derived_seed, ExperimentConfig, Kind};
use gefsamp::intensity::{gamma_matrix, rho_k, GafModel};
use gefsamp::lattice::{match_lattice, site, sites_in_disk};
use gefsamp::linalg::hermitian_eigenvalues;
use gefsamp::pairs::fit_pair_counts;
use gefsamp::profile::GrowthProfile;
use gefsamp::sampling::{discrete_sum, frame_bounds_p2, gram_matrix, reconstruct};
use gefsamp::separation::{nearest_separation, product_separation};
use gefsamp::sigma::weierstrass_sigma;
use gefsamp::zeros::ZeroSet;
use gefsamp::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn point(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

fn coefficients(max_degree: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(point(1.0), 1..=max_degree + 1)
        .prop_filter("nonzero", |v| v.iter().any(|z| z.norm() > 1e-3))
}

/// Points with pairwise distance at least `gap`.
fn spread(k: usize, r: f64, gap: f64) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(point(r), k).prop_filter("separated", move |v| {
        v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).norm() >= gap))
    })
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn norm(f: &FockFunction<f64>, p: f64) -> f64 {
    fock_norm(f, p, &QuadratureSpec::for_function(f, p)).unwrap().value
}

/// Lattice-like zero set with its g function (built once; lattice sites at L = 2).
fn lattice_g() -> &'static GFunction {
    static G: OnceLock<GFunction> = OnceLock::new();
    G.get_or_init(|| {
        let l = 2.0;
        let pts: Vec<Complex64> = sites_in_disk(l, 12.0).into_iter().map(|i| site(l, i)).collect();
        let z = ZeroSet::from_points(pts, 12.0);
        let m = match_lattice(&z, l, 8.0).unwrap();
        GFunction::new(&z, &good_set(&z, &m, &GrowthProfile::default()), 6.0, 7.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(cs in coefficients(6)) {
        let f = FockFunction::new(cs.clone()).unwrap();
        let n = norm(&f, 2.0);
        prop_assert!((n - l2(&cs)).abs() <= 1e-12 * l2(&cs).max(1.0), "{n} vs {}", l2(&cs));
    }

    #[test]
    fn shift_isometry(cs in coefficients(4), a in point(2.0), p in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let f = FockFunction::new(cs).unwrap();
        let g = bargmann_shift(&f, a);
        let (nf, ng) = (norm(&f, p), norm(&g, p));
        prop_assert!((nf - ng).abs() <= 1e-6 * nf, "p = {p}: {nf} vs {ng}");
    }

    #[test]
    fn norm_decreases_in_p(cs in coefficients(4)) {
        let f = FockFunction::new(cs).unwrap();
        let (n1, n2, n4) = (norm(&f, 1.0), norm(&f, 2.0), norm(&f, 4.0));
        prop_assert!(n4 <= n2 * (1.0 + 1e-8) && n2 <= n1 * (1.0 + 1e-8), "{n1} {n2} {n4}");
    }

    #[test]
    fn concentration_eigenvalues_decrease(r in 0.1f64..6.0, n in 0usize..40) {
        let a: f64 = concentration_eigenvalue(n, r).unwrap();
        let b: f64 = concentration_eigenvalue(n + 1, r).unwrap();
        prop_assert!(a > 0.0 && a < 1.0 && b < a, "{a} {b}");
    }

    #[test]
    fn gef_rescaling(seed in any::<u64>(), l in 0.5f64..3.0, z in point(2.0)) {
        let a = sample_gef(l, 3.0, 1e-12, seed).unwrap();
        let b = sample_gef(1.0, 3.0 * l.sqrt(), 1e-12, seed).unwrap();
        let fa = eval_gef(&a, z, true).unwrap();
        let fb = eval_gef(&b, z * l.sqrt(), true).unwrap();
        prop_assert!((fa - fb).norm() < 1e-10, "{fa} vs {fb}");
    }

    #[test]
    fn gamma_hermitian_psd(pts in spread(3, 2.0, 0.2), l in 0.5f64..4.0) {
        let g = gamma_matrix(&GafModel::gef(l), &pts).unwrap().gamma();
        let scale = g.norm();
        prop_assert!(g.hermitian_defect() <= 1e-12 * scale);
        let min = hermitian_eigenvalues(&g).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10 * scale, "min eigenvalue {min}");
    }

    #[test]
    fn gamma_ordering(pts in spread(2, 0.8, 0.2), a in prop::collection::vec(0.0f64..1.0, 6), bump in prop::collection::vec(0.0f64..1.0, 6)) {
        let b: Vec<f64> = a.iter().zip(&bump).map(|(x, y)| x + y).collect();
        let ga = gamma_matrix(&GafModel::truncated(a).unwrap(), &pts).unwrap().gamma();
        let gb = gamma_matrix(&GafModel::truncated(b).unwrap(), &pts).unwrap().gamma();
        let min = hermitian_eigenvalues(&gb.sub(&ga)).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10 * gb.norm().max(1.0), "min eigenvalue {min}");
    }

    #[test]
    fn rho_permutation_symmetric(pts in spread(3, 1.5, 0.3), l in 0.5f64..2.0) {
        let m = GafModel::gef(l);
        let r = rho_k(&m, &pts).unwrap();
        for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let q: Vec<Complex64> = perm.iter().map(|i| pts[*i]).collect();
            let s = rho_k(&m, &q).unwrap();
            prop_assert!((r - s).abs() <= 1e-9 * r.abs().max(1e-300), "{r} vs {s}");
        }
    }

    #[test]
    fn rho2_translation_invariant(d in 0.2f64..1.5, theta in 0.0f64..6.28, shift in point(3.0), phi in 0.0f64..6.28) {
        let m = GafModel::gef(1.0);
        let base = rho_k(&m, &[c(0.0, 0.0), c(d, 0.0)]).unwrap();
        let w = shift + Complex64::from_polar(d, phi);
        let moved = rho_k(&m, &[shift, w]).unwrap();
        let rotated = rho_k(&m, &[c(0.0, 0.0), Complex64::from_polar(d, theta)]).unwrap();
        prop_assert!((base - moved).abs() <= 1e-8 * base && (base - rotated).abs() <= 1e-8 * base, "{base} {moved} {rotated}");
    }

    #[test]
    fn product_below_nearest_separation(pts in prop::collection::vec(point(2.0), 2..30)) {
        let s = product_separation(&pts);
        let n = nearest_separation(&pts).unwrap();
        for (i, (p, q)) in s.iter().zip(&n).enumerate() {
            // witness: every in-ball factor is at most 1, so the product is at most the smallest factor
            let witness = pts.iter().enumerate().filter(|(j, w)| *j != i && (pts[i] - *w).norm() < 1.0).count();
            if *q <= 1.0 && witness > 0 {
                prop_assert!(*p <= *q + 1e-15, "S = {p} > s = {q}");
            }
        }
    }

    #[test]
    fn assignment_is_optimal(n in 1usize..6, extra in 0usize..3, seed in any::<u64>()) {
        let m = n + extra;
        let mut state = seed;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| { state = derived_seed(state, 1); (state >> 11) as f64 / (1u64 << 53) as f64 }).collect())
            .collect();
        let a = solve_assignment(&cost);
        fn best(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut b = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    b = b.min(cost[row][j] + best(cost, row + 1, used));
                    used[j] = false;
                }
            }
            b
        }
        let brute = best(&cost, 0, &mut vec![false; m]);
        prop_assert!((a.total_cost - brute).abs() < 1e-12, "{} vs {brute}", a.total_cost);
        // never worse than assigning each row greedily to its cheapest free column
        let mut used = vec![false; m];
        let greedy: f64 = cost.iter().map(|row| {
            let j = (0..m).filter(|j| !used[*j]).min_by(|x, y| row[*x].total_cmp(&row[*y])).unwrap();
            used[j] = true;
            row[j]
        }).sum();
        prop_assert!(a.total_cost <= greedy + 1e-12);
    }

    #[test]
    fn discrete_sum_matches_gram(cs in coefficients(5), pts in prop::collection::vec(point(3.0), 1..20)) {
        let d = cs.len() - 1;
        let f = FockFunction::new(cs.clone()).unwrap();
        let g = gram_matrix(&pts, d);
        // G_mn pairs e_m with conj(e_n), so the form is c^T G conj(c)
        let conj: Vec<Complex64> = cs.iter().map(|z| z.conj()).collect();
        let quad: f64 = cs.iter().zip(g.mul_vec(&conj)).map(|(a, b)| (a * b).re).sum();
        let direct = discrete_sum(&f, &pts, 2.0, None);
        prop_assert!((quad - direct).abs() <= 1e-10 * direct.max(1.0), "{quad} vs {direct}");
    }

    #[test]
    fn frame_bounds_ordered(pts in prop::collection::vec(point(3.0), 1..12), d in 0usize..4) {
        let fb = frame_bounds_p2(&pts, d);
        prop_assert!(fb.lower >= 0.0 && fb.lower <= fb.upper * (1.0 + 1e-12));
    }

    #[test]
    fn reconstruct_is_linear(alpha in point(2.0), beta in point(2.0), seed in any::<u64>(), q in point(1.5)) {
        let g = lattice_g();
        let mut state = seed;
        let mut draw = || { state = derived_seed(state, 1); (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        let (mut u, mut v, mut w) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for f in g.factors() {
            let (a, b) = (c(draw(), draw()), c(draw(), draw()));
            u.insert(f.index, a);
            v.insert(f.index, b);
            w.insert(f.index, alpha * a + beta * b);
        }
        let ru = reconstruct(&u, g, &[q]).unwrap().values[0];
        let rv = reconstruct(&v, g, &[q]).unwrap().values[0];
        let rw = reconstruct(&w, g, &[q]).unwrap().values[0];
        let expect = alpha * ru + beta * rv;
        prop_assert!((rw - expect).norm() <= 1e-10 * (1.0 + expect.norm()), "{rw} vs {expect}");
    }

    #[test]
    fn sigma_is_odd(z in point(3.0), l in 0.5f64..2.0) {
        let a = weierstrass_sigma(z, l, 1e-12).unwrap();
        let b = weierstrass_sigma(-z, l, 1e-12).unwrap();
        prop_assert!((a + b).norm() <= 1e-9 * a.norm().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn power_law_counts_give_their_slope(slope in 1.0f64..5.0, scale in 1e3f64..1e6) {
        let radii = [0.2, 0.3, 0.35, 0.4, 0.5];
        let counts: Vec<u64> = radii.iter().map(|r| (scale * (r / 0.5f64).powf(slope)).round() as u64).collect();
        prop_assume!(counts.iter().all(|k| *k >= 50));
        let fit = fit_pair_counts(&radii, &counts, 1.0).unwrap();
        prop_assert!((fit.slope - slope).abs() < 0.05, "{} vs {slope}", fit.slope);
    }

    #[test]
    fn seeds_are_injective(master in any::<u64>(), i in any::<u32>(), j in any::<u32>()) {
        prop_assume!(i != j);
        prop_assert_ne!(derived_seed(master, i as u64), derived_seed(master, j as u64));
    }

    #[test]
    fn config_round_trips(kind in prop::sample::select(Kind::ALL.to_vec()), trials in 1usize..1000, seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.trials = trials;
        cfg.master_seed = seed;
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}

#[test]
fn seeds_distinct_on_a_block() {
    let seen: HashSet<u64> = (0..100_000).map(|i| derived_seed(7, i)).collect();
    assert_eq!(seen.len(), 100_000);
}
