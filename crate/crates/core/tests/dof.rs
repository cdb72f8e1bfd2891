use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rsbeam_core::dof::*;
use rsbeam_core::model::*;
use rsbeam_core::uncertainty::*;
use rsbeam_core::Error;

fn estimates(rng: &mut ChaCha8Rng, nt: usize, k: usize) -> CMat {
    let cols: Vec<CVec> = (0..k).map(|_| sample_channel(rng, nt)).collect();
    CMat::from_columns(&cols)
}

fn inner(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn orthonormal_channel_gives_unit_sinr_scaling() {
    let h = CMat::identity(2, 2);
    let pp = zf_private_precoders(&h, 1.0, 4.0).unwrap();
    let p = Precoder::new(CVec::zeros(2), pp.clone()).unwrap();
    for k in 0..2 {
        let r = sinr_and_rate(&h.column(k).into_owned(), &p, 0.5, k).unwrap();
        assert!((r.gamma - 2.0 / 0.5).abs() < 1e-12);
        assert!((pp.column(k).norm_squared() - 2.0).abs() < 1e-12);
    }
}

#[test]
fn cross_terms_obey_the_perturbation_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..50 {
        let h = estimates(&mut rng, 3, 3);
        let delta = rng.random_range(0.01..0.5);
        let pp = zf_private_precoders(&h, 0.7, 100.0).unwrap();
        for _ in 0..20 {
            let e = sample_error(&mut rng, delta, ErrorMode::Interior, 3);
            for j in 0..3 {
                let hj = h.column(j).into_owned() + &e;
                for k in (0..3).filter(|&k| k != j) {
                    let pk = pp.column(k).into_owned();
                    assert!(inner(&hj, &pk).norm_sqr() <= delta * delta * pk.norm_squared() * (1.0 + 1e-9) + 1e-20);
                }
            }
        }
    }
}

#[test]
fn common_power_is_exact_and_directions_differ() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for power in [0.0, 1e-3, 1.0, 1e4] {
        let v = random_common_precoder(&mut rng, 3, power).unwrap();
        assert!((v.norm_squared() - power).abs() <= 1e-12 * power.max(1.0));
    }
    assert_eq!(random_common_precoder(&mut rng, 3, 0.0).unwrap(), CVec::zeros(3));
    assert!(random_common_precoder(&mut rng, 3, -1.0).is_err());
    let close = (0..100)
        .filter(|i| {
            let a = random_common_precoder(&mut channel_rng(2 * i, 0), 3, 1.0).unwrap();
            let b = random_common_precoder(&mut channel_rng(2 * i + 1, 0), 3, 1.0).unwrap();
            inner(&a, &b).norm() >= 0.99
        })
        .count();
    assert!(close <= 1, "{close} near-parallel pairs");
}

#[test]
fn constructive_power_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..50 {
        let h = estimates(&mut rng, 3, 3);
        let alpha = rng.random_range(0.0..=1.0);
        let pt = 10f64.powf(rng.random_range(0.0..5.0));
        let p = constructive_scheme(&h, alpha, pt, &mut rng).unwrap();
        assert!(p.power() <= pt + 1e-9 * pt.max(1.0));
        assert!((p.power() - pt).abs() <= 1e-9 * pt.max(1.0));
    }
    let h = estimates(&mut rng, 3, 3);
    let full = constructive_scheme(&h, 1.0, 50.0, &mut rng).unwrap();
    assert_eq!(full.pc.norm_squared(), 0.0);
    let flat = constructive_scheme(&h, 0.0, 50.0, &mut rng).unwrap();
    assert!((flat.pp.norm_squared() - 1.0).abs() < 1e-12);
    assert!((flat.pc.norm_squared() - 49.0).abs() < 1e-9);
    assert!(constructive_scheme(&h, 0.5, 0.5, &mut rng).is_err());
}

#[test]
fn zero_radius_minrate_is_nominal() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let inst: Vec<ChannelInstance> = (0..3).map(|_| sample_instance(&mut rng, 3, 0.0)).collect();
    let h = CMat::from_columns(&inst.iter().map(|i| i.region.h_hat.clone()).collect::<Vec<_>>());
    let p = constructive_scheme(&h, 0.5, 1000.0, &mut rng).unwrap();
    let got = evaluate_scheme_minrate(&p, &inst, 1.0, 100, &mut rng);
    let rates: Vec<StreamRates> = (0..3).map(|k| sinr_and_rate(&inst[k].region.h_hat, &p, 1.0, k).unwrap()).collect();
    let rc = rates.iter().map(|r| r.r_c).fold(f64::INFINITY, f64::min);
    let want = rates.iter().map(|r| r.r + rc / 3.0).fold(f64::INFINITY, f64::min);
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");

    let nors = p.without_common();
    let got = evaluate_scheme_minrate(&nors, &inst, 1.0, 100, &mut rng);
    let want = (0..3)
        .map(|k| sinr_and_rate(&inst[k].region.h_hat, &nors, 1.0, k).unwrap().r)
        .fold(f64::INFINITY, f64::min);
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn minrate_does_not_grow_with_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(65);
    for _ in 0..5 {
        let h_hat: Vec<CVec> = (0..3).map(|_| sample_channel(&mut rng, 3)).collect();
        let p = constructive_scheme(&CMat::from_columns(&h_hat), 0.5, 1000.0, &mut rng).unwrap();
        let mut last = f64::INFINITY;
        for delta in [0.0, 0.05, 0.1, 0.2, 0.4] {
            let inst: Vec<ChannelInstance> = h_hat
                .iter()
                .map(|h| ChannelInstance { h_true: h.clone(), region: UncertaintyRegion::new(h.clone(), delta).unwrap() })
                .collect();
            let r = evaluate_scheme_minrate(&p, &inst, 1.0, 2000, &mut channel_rng(66, 0));
            assert!(r <= last, "{r} > {last} at delta {delta}");
            last = r;
        }
    }
}

#[test]
fn noisy_slope_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    let noise = Normal::new(0.0, 0.01).unwrap();
    for _ in 0..100 {
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let pt = 10f64.powf(2.5 + 0.5 * i as f64);
                (pt, 2.0 / 3.0 * pt.log2() + 1.0 + noise.sample(&mut rng))
            })
            .collect();
        let e = dof_estimate(&pts).unwrap();
        assert!((e.slope - 2.0 / 3.0).abs() < 0.05);
        assert!((0.0..=1.0).contains(&e.r2));
    }
}

#[test]
fn predictions_favor_rate_splitting() {
    for k in 2..6 {
        for i in 0..=100 {
            let alpha = i as f64 / 100.0;
            let (n, r) = theorem1_predictions(k, alpha).unwrap();
            assert!(r >= n);
            if alpha < 1.0 {
                assert!(r > n);
            }
            assert!(r >= 1.0 / k as f64);
        }
    }
    assert!(matches!(theorem1_predictions(3, 1.5), Err(Error::Domain(_))));
}

proptest! {
    #[test]
    fn zf_columns_are_orthogonal_to_other_users(seed in any::<u64>(), k in 2usize..5, alpha in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = estimates(&mut rng, k, k);
        let pp = zf_private_precoders(&h, alpha, 1e3).unwrap();
        for j in 0..k {
            let hj = h.column(j).into_owned();
            for c in 0..k {
                let pc = pp.column(c).into_owned();
                if c != j {
                    prop_assert!(inner(&hj, &pc).norm() <= 1e-10 * hj.norm() * pc.norm());
                }
            }
        }
    }

    #[test]
    fn flat_exponent_spreads_unit_power(seed in any::<u64>(), pt in 1.0f64..1e6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = estimates(&mut rng, 3, 3);
        let pp = zf_private_precoders(&h, 0.0, pt).unwrap();
        for c in pp.column_iter() {
            prop_assert!((c.norm_squared() - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}
