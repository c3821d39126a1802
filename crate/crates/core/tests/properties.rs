mod common;

use proptest::prelude::*;

use common::*;
use sfm::instances::{decompose_grid, GridInstance, InstanceFile};
use sfm::lovasz::{best_level_set, check_base_vector, descending_order, greedy_vertex, lovasz_value};
use sfm::pava::{isotonic_nondecreasing, isotonic_nonincreasing};
use sfm::prox::{project_generic_small_support, prox_tv1d, BlockFamily};
use sfm::SubsetMask;

fn family() -> impl Strategy<Value = BlockFamily> {
    prop::sample::select(FAMILIES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blocks_are_submodular(seed in any::<u64>(), n in 1usize..8, fam in family()) {
        let b = random_block(&mut rng(seed), n, fam, 1e-3);
        let v = all_values(&block_oracle(&b));
        for s in 0..v.len() {
            for t in 0..v.len() {
                prop_assert!(v[s | t] + v[s & t] <= v[s] + v[t] + 1e-9);
            }
        }
    }

    #[test]
    fn minimizers_form_a_lattice(seed in any::<u64>(), n in 1usize..9) {
        let p = random_problem(&mut rng(seed), n, 2, 0.25);
        let v = all_values(p.total());
        let (min, lo, hi) = exact_minimizers(&v, n);
        prop_assert_eq!(v[lo.to_bits() as usize], min);
        prop_assert_eq!(v[hi.to_bits() as usize], min);
    }

    #[test]
    fn restrict_contract_composes(seed in any::<u64>(), n in 2usize..8, kept_bits in any::<u64>(), t_bits in any::<u64>()) {
        let p = random_problem(&mut rng(seed), n, 2, 1e-3);
        let f = p.total();
        let contracted = SubsetMask::from_bits(n, t_bits & ((1 << n) - 1));
        let kept = contracted.complement().intersection(&SubsetMask::from_bits(n, kept_bits));
        let g = f.restrict_contract(&kept, &contracted).unwrap();
        let idx = kept.to_indices();
        let base = f.value(&contracted);
        for bits in 0..1u64 << idx.len() {
            let local = SubsetMask::from_bits(idx.len(), bits);
            let mut global = contracted.clone();
            for t in local.iter() {
                global.insert(idx[t]);
            }
            prop_assert!((g.value(&local) - (f.value(&global) - base)).abs() <= 1e-9);
        }
    }

    #[test]
    fn greedy_maximizes_over_vertices(seed in any::<u64>(), n in 1usize..7, fam in family()) {
        let mut g = rng(seed);
        let b = random_block(&mut g, n, fam, 1e-3);
        let f = block_oracle(&b);
        let x: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut g, -2.0..2.0)).collect();
        let y = greedy_vertex(&f, &descending_order(&x));
        let best = dot(&x, &y);
        prop_assert!((lovasz_value(&f, &x) - best).abs() <= 1e-9);
        for p in permutations(n) {
            prop_assert!(dot(&x, &vertex(&f, &p)) <= best + 1e-9);
        }
    }

    #[test]
    fn pava_is_optimal_and_ordered(v in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let up = isotonic_nondecreasing(&v);
        let down = isotonic_nonincreasing(&v);
        prop_assert!(up.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(down.windows(2).all(|w| w[0] >= w[1]));
        for (got, want) in [(up, isotonic_brute(&v, false)), (down, isotonic_brute(&v, true))] {
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
        // sums are preserved
        prop_assert!((isotonic_nondecreasing(&v).iter().sum::<f64>() - v.iter().sum::<f64>()).abs() <= 1e-9);
    }

    #[test]
    fn projection_lands_in_base_polytope(seed in any::<u64>(), n in 1usize..10, fam in family()) {
        let mut g = rng(seed);
        let b = random_block(&mut g, n, fam, 1e-3);
        let z: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut g, -3.0..3.0)).collect();
        let y = b.project(&z);
        prop_assert!(check_base_vector(&block_oracle(&b), &y, 1e-9).is_ok());
        // idempotent
        let again = b.project(&y);
        for (a, c) in y.iter().zip(&again) {
            prop_assert!((a - c).abs() <= 1e-9);
        }
    }

    #[test]
    fn structured_projections_match_generic(seed in any::<u64>(), n in 2usize..10, chain in any::<bool>()) {
        let mut g = rng(seed);
        let fam = if chain { BlockFamily::Chain } else { BlockFamily::Concave };
        let b = random_block(&mut g, n, fam, 1e-3);
        let z: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut g, -3.0..3.0)).collect();
        let slow = project_generic_small_support(&block_oracle(&b), &z).unwrap();
        for (a, c) in b.project(&z).iter().zip(&slow) {
            prop_assert!((a - c).abs() <= 1e-8);
        }
    }

    #[test]
    fn tv_prox_matches_parametric_path(z in prop::collection::vec(-3i32..=3, 2..8), w in prop::collection::vec(0i32..=2, 7)) {
        let n = z.len();
        let z: Vec<f64> = z.into_iter().map(f64::from).collect();
        let w: Vec<f64> = w[..n - 1].iter().map(|&v| f64::from(v)).collect();
        // prox of TV at z is the prox of TV − z at 0
        let values: Vec<f64> = (0..1u64 << n)
            .map(|bits| {
                let inside = |i: usize| bits >> i & 1 == 1;
                let cut: f64 = (0..n - 1).filter(|&i| inside(i) != inside(i + 1)).map(|i| w[i]).sum();
                cut - (0..n).filter(|&i| inside(i)).map(|i| z[i]).sum::<f64>()
            })
            .collect();
        let want = parametric_prox(&values, n);
        for (a, b) in prox_tv1d(&z, &w).unwrap().iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn instance_format_round_trips(seed in any::<u64>(), n in 1usize..10, r in 1usize..4) {
        let p = random_problem(&mut rng(seed), n, r, 1e-3);
        let file = InstanceFile::new(n, p.blocks().to_vec());
        let back = InstanceFile::parse(&file.serialize()).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn grid_decomposition_matches_energy(seed in any::<u64>(), h in 1usize..4, w in 1usize..4) {
        let mut g = rng(seed);
        let mut q = || quantized(&mut g, 0.0, 2.0, 0.25);
        let unary: Vec<f64> = (0..h * w).map(|_| q() - 1.0).collect();
        let w_h: Vec<f64> = (0..h * (w - 1)).map(|_| q()).collect();
        let w_v: Vec<f64> = (0..(h - 1) * w).map(|_| q()).collect();
        let grid = GridInstance::new(h, w, unary, w_h, w_v).unwrap();
        let p = decompose_grid(&grid).unwrap();
        for bits in 0..1u64 << (h * w) {
            let s = SubsetMask::from_bits(h * w, bits);
            prop_assert!((p.total().value(&s) - grid.energy(&s)).abs() <= 1e-12);
        }
    }

    #[test]
    fn best_level_set_is_a_level_set(x in prop::collection::vec(-2i32..=2, 1..8), seed in any::<u64>()) {
        let n = x.len();
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let p = random_problem(&mut rng(seed), n, 1, 0.25);
        let best = best_level_set(p.total(), &x);
        let members: Vec<f64> = best.set.iter().map(|i| x[i]).collect();
        let outside: Vec<f64> = best.set.complement().iter().map(|i| x[i]).collect();
        let lo = members.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(outside.iter().all(|&v| v < lo));
        prop_assert!(best.minimal.is_subset(&best.maximal));
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
