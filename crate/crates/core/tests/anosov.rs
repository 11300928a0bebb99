use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidity_core::anosov::{periodic_points, torus_distance, verify_anosov, PerturbedMap, TorusMap};
use rigidity_core::spectral::IntegerAutomorphism;
use rigidity_core::torus::grid::grid_point;
use rigidity_core::torus::TrigPoly;

fn cat() -> IntegerAutomorphism {
    IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()
}

fn random_perturbation(seed: u64, dim: usize, amp: f64) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = TrigPoly::zero(dim, dim);
    for _ in 0..4 {
        let freq: Vec<i64> = (0..dim).map(|_| rng.gen_range(-2..=2)).collect();
        let comp = rng.gen_range(0..dim);
        let m = if rng.gen_bool(0.5) {
            TrigPoly::sin_mode(dim, dim, comp, &freq, amp * rng.gen::<f64>())
        } else {
            TrigPoly::cos_mode(dim, dim, comp, &freq, amp * rng.gen::<f64>())
        };
        p = p.add(&m);
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lift_is_equivariant(seed in any::<u64>(), k0 in -5i64..5, k1 in -5i64..5) {
        let f = PerturbedMap::build(cat(), random_perturbation(seed, 2, 0.01)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        let xk = [x[0] + k0 as f64, x[1] + k1 as f64];
        let (a, b) = (f.lift(&x), f.lift(&xk));
        let lk = [(2 * k0 + k1) as f64, (k0 + k1) as f64];
        for i in 0..2 {
            prop_assert!((b[i] - a[i] - lk[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_counts_match_lefschetz(seed in any::<u64>()) {
        let f = PerturbedMap::build(cat(), random_perturbation(seed, 2, 0.005)).unwrap();
        prop_assume!(f.smallness().cone_ok);
        for n in 1..=6 {
            let s = periodic_points(&f, n, 100_000).unwrap();
            prop_assert_eq!(s.orbits.len() as u64, f.linear().det_power_minus_identity(n as i64).magnitude().to_string().parse::<u64>().unwrap());
            for o in &s.orbits {
                prop_assert!(o.residual < 1e-10);
                prop_assert!(o.newton_iterations <= 10);
            }
        }
    }
}

#[test]
fn inverse_on_grid() {
    let f = PerturbedMap::build(cat(), random_perturbation(3, 2, 0.02)).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..64 * 64 {
        let x = grid_point(i, 64, 2);
        let y = f.apply(&f.apply_inverse(&x).unwrap());
        worst = worst.max(torus_distance(&x, &y));
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn four_dimensional_counts() {
    let a = cat();
    let b = IntegerAutomorphism::from_rows(&[vec![3, 1], vec![2, 1]]).unwrap();
    let l = a.block_diag(&b);
    let f = PerturbedMap::build(l.clone(), random_perturbation(11, 4, 0.002)).unwrap();
    assert!(verify_anosov(&f, Some(12)).unwrap().passed);
    for n in 1..=3 {
        let s = periodic_points(&f, n, 100_000).unwrap();
        assert!(s.count_matches(), "n = {n}: {} of {}", s.orbits.len(), s.expected);
    }
}

