//! Randomized invariants, driven by proptest over seeds and sizes rather
//! than hand-picked instances.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use agmlab::bregman::{divergence, from_dual_coords, to_dual_coords};
use agmlab::discrete::{default_params, initial_state, step_method, Form};
use agmlab::linalg::random_spd;
use agmlab::objectives::{make_quadratic, make_quartic};
use agmlab::ode::OdeKind;
use agmlab::spectral::{block_diagonalize, block_eigenvalues, build_system, flow_block};

fn random_quadratic(n: usize, mu: f64, l: f64, seed: u64) -> agmlab::Objective {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_spd(n, mu, l, &mut rng).unwrap();
    let x_star = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    make_quadratic(h, x_star).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bregman_divergence_is_nonnegative(seed in 0u64..1 << 20, quartic in any::<bool>()) {
        let phi = if quartic {
            make_quartic(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0])).unwrap()
        } else {
            random_quadratic(2, 0.5, 5.0, seed ^ 0xabcd)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let y = DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let d = divergence(&phi, &x, &y);
        prop_assert!(d >= -1e-12, "negative divergence {d}");
    }

    #[test]
    fn dual_coordinates_round_trip(seed in 0u64..1 << 20) {
        let phi = make_quartic(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(2, |_, _| rng.random::<f64>() * 3.0 - 1.5);
        if x.norm() < 1e-3 {
            return Ok(()); // conjugate-gradient domain excludes the origin
        }
        let back = from_dual_coords(&phi, &to_dual_coords(&phi, &x)).unwrap();
        prop_assert!((back - &x).norm() <= 1e-8 * (1.0 + x.norm()));
    }

    #[test]
    fn minimizer_is_stationary_for_every_form(seed in 0u64..1 << 20, n in 2usize..6) {
        let obj = random_quadratic(n, 0.7, 9.0, seed);
        for form in Form::ALL {
            let params = default_params(form, obj.mu(), obj.lipschitz()).unwrap();
            let state = initial_state(form, &obj, &params, obj.minimizer());
            let next = step_method(&obj, &params, &state).unwrap();
            let drift = (next.position() - obj.minimizer()).norm();
            prop_assert!(drift <= 1e-10, "{form} drifted {drift:.3e} from the minimizer");
        }
    }

    #[test]
    fn block_spectrum_equals_dense_spectrum(seed in 0u64..1 << 20, n in 2usize..7) {
        let obj = random_quadratic(n, 0.4, 20.0, seed);
        for kind in [OdeKind::ProxPoint, OdeKind::Agm, OdeKind::HeavyBall] {
            let form = match kind {
                OdeKind::ProxPoint => Form::ProxPoint,
                OdeKind::Agm => Form::BregmanAgm,
                OdeKind::HeavyBall => Form::HeavyBall,
            };
            let p = default_params(form, obj.mu(), obj.lipschitz()).unwrap();
            let sys = build_system(kind, obj.quadratic_matrix().unwrap(), &p).unwrap();
            let dec = block_diagonalize(&sys).unwrap();
            let mut dense: Vec<_> = sys.a.complex_eigenvalues().iter().copied().collect();
            for b in dec.spectrum() {
                let (i, gap) = dense
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (i, (b - d).norm()))
                    .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                    .unwrap();
                prop_assert!(gap <= 1e-9, "{kind}: eigenvalue {b} unmatched ({gap:.2e})");
                dense.swap_remove(i);
            }
        }
    }

    #[test]
    fn agm_discriminant_never_positive(
        mu in 0.05f64..2.0,
        ratio in 1.0f64..1e4,
        alpha in 0.0f64..1.0,
        frac in 0.0f64..1.0,
    ) {
        let l = mu * ratio;
        let mut p = default_params(Form::BregmanAgm, mu, l).unwrap();
        p.alpha = alpha;
        let lambda = mu + (l - mu) * frac;
        let t = flow_block(OdeKind::Agm, &p, lambda);
        let tr = t[(0, 0)] + t[(1, 1)];
        let det = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)];
        prop_assert!(tr * tr - 4.0 * det <= 1e-12);
    }

    #[test]
    fn block_eigenvalues_agree_with_companion_identities(
        a in -3.0f64..3.0, b in -3.0f64..3.0,
        c in -3.0f64..3.0, d in -3.0f64..3.0,
    ) {
        let t = nalgebra::Matrix2::new(a, b, c, d);
        let (p, m) = block_eigenvalues(&t);
        prop_assert!(((p + m).re - (a + d)).abs() <= 1e-12 * (1.0 + (a + d).abs()));
        prop_assert!((p + m).im.abs() <= 1e-12);
        let det = a * d - b * c;
        prop_assert!(((p * m).re - det).abs() <= 1e-10 * (1.0 + det.abs()));
        prop_assert!(p.re >= m.re);
    }

    #[test]
    fn all_methods_descend_on_random_quadratics(seed in 0u64..1 << 20, n in 2usize..6) {
        let obj = random_quadratic(n, 0.8, 12.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let x0 = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        if (&x0 - obj.minimizer()).norm() < 1e-6 {
            return Ok(());
        }
        for form in Form::ALL {
            let params = default_params(form, obj.mu(), obj.lipschitz()).unwrap();
            let traj = agmlab::discrete::run(form, &obj, &params, &x0, 300).unwrap();
            let r0 = (traj.position(0) - obj.minimizer()).norm();
            let r_end = (traj.position(300) - obj.minimizer()).norm();
            prop_assert!(
                r_end <= 1e-6 * r0.max(1.0),
                "{form} stalled: |x_300 - x*| = {r_end:.3e} from {r0:.3e}"
            );
        }
    }
}
