mod common;

use std::collections::BTreeMap;

use common::{random_kernel, random_rational_kernel, rel_close, rng};
use freechaos::distributions::{cumulant_from_moments, free_poisson_moment_single};
use freechaos::harness::{check_contraction_conditions, FamilyConfig, KernelFamily, TargetShape};
use freechaos::moments::product_moment;
use freechaos::partition::{enumerate_nc_ge2, partition_to_word, word_to_partition, LabelWord};
use freechaos::scalar::{ratio, Rational};
use freechaos::{
    moment, Builder, ChaosElement, Flavor, FreeFamilySpec, Grid, Kernel, Kernel32, LimitSpec,
    MomentOptions, MomentPath, StepKernel,
};
use proptest::prelude::*;

fn qgrid(cells: usize) -> Grid<Rational> {
    Grid::new(ratio(3, 2), cells).unwrap()
}

fn fgrid(cells: usize) -> Grid<f64> {
    Grid::new(1.5, cells).unwrap()
}

fn words(flavor: Flavor, ks: &[&Kernel]) -> f64 {
    moment(flavor, ks, &MomentOptions::default()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn adjoint_is_an_involution_and_reverses_contractions(
        seed in any::<u64>(), cells in 1usize..4, p in 0usize..4, q in 0usize..4,
    ) {
        let mut r = rng(seed);
        let g = qgrid(cells);
        let f = random_rational_kernel(&mut r, &g, p, 5, false);
        let h = random_rational_kernel(&mut r, &g, q, 5, false);
        prop_assert_eq!(f.mirror_adjoint().mirror_adjoint(), f.clone());
        for k in 0..=p.min(q) {
            let lhs = f.arc_contract(&h, k).unwrap().mirror_adjoint();
            let rhs = h.mirror_adjoint().arc_contract(&f.mirror_adjoint(), k).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
        for k in 1..=p.min(q) {
            let lhs = f.star_contract(&h, k).unwrap().mirror_adjoint();
            let rhs = h.mirror_adjoint().star_contract(&f.mirror_adjoint(), k).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
        if p == q {
            let full = f.arc_contract(&h, p).unwrap().scalar_value().unwrap();
            prop_assert_eq!(full, h.inner(&f.mirror_adjoint()).unwrap());
        }
    }

    #[test]
    fn contractions_are_bilinear(
        seed in any::<u64>(), cells in 1usize..4, p in 1usize..4, q in 1usize..4,
        a in -5i64..5, b in 1i64..5,
    ) {
        let mut r = rng(seed);
        let g = qgrid(cells);
        let f1 = random_rational_kernel(&mut r, &g, p, 4, false);
        let f2 = random_rational_kernel(&mut r, &g, p, 4, false);
        let h = random_rational_kernel(&mut r, &g, q, 4, false);
        let c = ratio(a, b);
        let combo = f1.scale(&c).add(&f2).unwrap();
        for k in 0..=p.min(q) {
            let lhs = combo.arc_contract(&h, k).unwrap();
            let rhs = f1.arc_contract(&h, k).unwrap().scale(&c).add(&f2.arc_contract(&h, k).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            let lhs = h.arc_contract(&combo, k).unwrap();
            let rhs = h.arc_contract(&f1, k).unwrap().scale(&c).add(&h.arc_contract(&f2, k).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
        for k in 1..=p.min(q) {
            let lhs = combo.star_contract(&h, k).unwrap();
            let rhs = f1.star_contract(&h, k).unwrap().scale(&c).add(&f2.star_contract(&h, k).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
        prop_assert_eq!(f1.inner(&f2).unwrap(), f2.inner(&f1).unwrap());
    }

    #[test]
    fn contractions_commute_with_refinement(
        seed in any::<u64>(), cells in 1usize..3, p in 1usize..3, q in 1usize..3,
    ) {
        let mut r = rng(seed);
        let g = qgrid(cells);
        let f = random_rational_kernel(&mut r, &g, p, 3, false);
        let h = random_rational_kernel(&mut r, &g, q, 3, false);
        for k in 0..=p.min(q) {
            let coarse = f.arc_contract(&h, k).unwrap().refine(2).unwrap();
            let fine = f.refine(2).unwrap().arc_contract(&h.refine(2).unwrap(), k).unwrap();
            prop_assert_eq!(coarse, fine);
        }
        for k in 1..=p.min(q) {
            let coarse = f.star_contract(&h, k).unwrap().refine(2).unwrap();
            let fine = f.refine(2).unwrap().star_contract(&h.refine(2).unwrap(), k).unwrap();
            prop_assert_eq!(coarse, fine);
        }
    }

    #[test]
    fn chaos_products_are_associative(
        seed in any::<u64>(), cells in 1usize..3, orders in prop::collection::vec(0usize..3, 3),
        poisson in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let g = qgrid(cells);
        let flavor = if poisson { Flavor::Poisson } else { Flavor::Wigner };
        let el: Vec<ChaosElement<Rational>> = orders
            .iter()
            .map(|&q| ChaosElement::integral(flavor, random_rational_kernel(&mut r, &g, q, 3, false)))
            .collect();
        let left = el[0].multiply(&el[1]).unwrap().multiply(&el[2]).unwrap();
        let right = el[0].multiply(&el[1].multiply(&el[2]).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn integrals_are_orthogonal_isometries(
        seed in any::<u64>(), cells in 1usize..4, p in 0usize..4, q in 0usize..4, poisson in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let g = qgrid(cells);
        let flavor = if poisson { Flavor::Poisson } else { Flavor::Wigner };
        let f = random_rational_kernel(&mut r, &g, p, 4, false);
        let h = random_rational_kernel(&mut r, &g, q, 4, false);
        let m = product_moment(flavor, &[&f.mirror_adjoint(), &h]).unwrap();
        let expected = if p == q { f.inner(&h).unwrap() } else { ratio(0, 1) };
        prop_assert_eq!(m, expected);
    }

    #[test]
    fn word_path_matches_product_path(
        seed in any::<u64>(), cells in 1usize..5, orders in prop::collection::vec(1usize..4, 2..5),
        poisson in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let g = fgrid(cells);
        let flavor = if poisson { Flavor::Poisson } else { Flavor::Wigner };
        let ks: Vec<Kernel> = orders.iter().map(|&q| random_kernel(&mut r, &g, q, 3, true)).collect();
        let refs: Vec<&Kernel> = ks.iter().collect();
        let w = words(flavor, &refs);
        let p = product_moment(flavor, &refs).unwrap();
        prop_assert!(rel_close(w, p, 1e-9), "words {} product {}", w, p);
    }

    #[test]
    fn moments_are_tracial(
        seed in any::<u64>(), cells in 1usize..4, orders in prop::collection::vec(1usize..4, 2..6),
        poisson in any::<bool>(), shift in 1usize..5,
    ) {
        let mut r = rng(seed);
        let g = fgrid(cells);
        let flavor = if poisson { Flavor::Poisson } else { Flavor::Wigner };
        let ks: Vec<Kernel> = orders.iter().map(|&q| random_kernel(&mut r, &g, q, 3, true)).collect();
        let mut refs: Vec<&Kernel> = ks.iter().collect();
        let base = words(flavor, &refs);
        let len = refs.len();
        refs.rotate_left(shift % len);
        let rotated = words(flavor, &refs);
        prop_assert!(rel_close(base, rotated, 1e-9), "{} vs {}", base, rotated);
    }

    #[test]
    fn inequalities_hold(seed in any::<u64>(), cells in 1usize..5, q in 1usize..4, nnz in 1usize..8) {
        let mut r = rng(seed);
        let g = Grid::new(rand::Rng::random_range(&mut r, 0.5f64..3.0), cells).unwrap();
        let f = random_kernel(&mut r, &g, q, nnz, false);
        let h = random_kernel(&mut r, &g, q, nnz, false);
        for k in 0..=q {
            prop_assert!(f.check_arc_cauchy_schwarz(&h, k).unwrap().holds);
        }
        for k in 1..=q {
            let c = f.check_star_bound(&h, k).unwrap();
            prop_assert!(c.holds, "{:?}", c);
            prop_assert!(c.support_measures.0 <= g.box_measure(q) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_precision_tracks_double(seed in any::<u64>(), cells in 1usize..4, q in 1usize..3) {
        let mut r = rng(seed);
        let g = fgrid(cells);
        let f = random_kernel(&mut r, &g, q, 4, true);
        let h = random_kernel(&mut r, &g, q, 4, true);
        let g32 = Grid::new(1.5f32, cells).unwrap();
        let to32 = |k: &Kernel| -> Kernel32 {
            StepKernel::from_entries(g32.clone(), k.order(), k.entries().into_iter().map(|(i, v)| (i, v as f32))).unwrap()
        };
        let (f32k, h32k) = (to32(&f), to32(&h));
        for k in 0..=q {
            let a = f.arc_contract(&h, k).unwrap().norm();
            let b = f32k.arc_contract(&h32k, k).unwrap().norm() as f64;
            prop_assert!((a - b).abs() <= 1e-4 * a.max(1.0));
        }
    }

    #[test]
    fn nc_ge2_bijection_round_trips(m in 2usize..9, half in 1usize..4, pick in any::<prop::sample::Index>()) {
        let q = 2 * half;
        let all = enumerate_nc_ge2(m);
        prop_assume!(!all.is_empty());
        let p = &all[pick.index(all.len())];
        let w = partition_to_word(p, q).unwrap();
        prop_assert!(w.in_d());
        prop_assert_eq!(&word_to_partition(&w).unwrap(), p);
    }

    #[test]
    fn free_family_cumulants_round_trip(
        l1 in 0.2f64..4.0, l2 in 0.2f64..4.0, a2 in -2.0f64..2.0,
        labels in prop::collection::vec(1usize..3, 1..6),
    ) {
        prop_assume!(a2.abs() > 0.1);
        let params: BTreeMap<usize, (f64, f64)> = [(1, (l1, 1.0)), (2, (l2, a2))].into_iter().collect();
        let spec = LimitSpec::FreeFamily(FreeFamilySpec::new(params, false).unwrap());
        let k = cumulant_from_moments(|ls| spec.target_moment(&LabelWord::new(ls.to_vec())), &labels).unwrap();
        let expected = spec.cumulant(&labels).unwrap();
        prop_assert!((k - expected).abs() <= 1e-8 * expected.abs().max(1.0), "{} vs {}", k, expected);
        if labels.iter().all(|&l| l == 1) {
            let m = spec.target_moment(&LabelWord::new(labels.clone())).unwrap();
            prop_assert!(rel_close(m, free_poisson_moment_single(l1, labels.len(), false), 1e-12));
        }
    }
}

#[test]
fn small_contraction_norms_give_small_moment_errors() {
    let cfg = FamilyConfig::new(Builder::PerturbedWigner, 2, &[1.0, 2.0]).with_seed(5);
    let fam = KernelFamily::from_config(&cfg, TargetShape::FreeFamily).unwrap();
    let target = fam.target().clone();
    let mut last: Option<(f64, f64)> = None;
    for n in [4usize, 8, 16, 32, 64, 128] {
        let delta = [(1, 1), (1, 2), (2, 1), (2, 2)]
            .iter()
            .flat_map(|&(i, j)| check_contraction_conditions(&fam, i, j, n).unwrap())
            .map(|c| c.value)
            .fold(0.0, f64::max);
        let ks = fam.kernels_at(n).unwrap();
        let mut err = 0.0f64;
        for m in 2..=5 {
            for w in LabelWord::all(&[1, 2], m) {
                let refs: Vec<&Kernel> = w.labels().iter().map(|l| &ks[l]).collect();
                let opts = MomentOptions { path: MomentPath::Words, ..MomentOptions::default() };
                let v = moment(Flavor::Wigner, &refs, &opts).unwrap().value;
                err = err.max((v - target.target_moment(&w).unwrap()).abs());
            }
        }
        if let Some((d0, e0)) = last {
            assert!(delta < d0 && err < e0, "n = {n}: delta {delta} err {err}");
        }
        assert!(err <= 200.0 * delta, "n = {n}: err {err} vs delta {delta}");
        last = Some((delta, err));
    }
}
