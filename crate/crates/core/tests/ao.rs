use rand::Rng;
use rsbeam_conic::Settings;
use rsbeam_core::ao::*;
use rsbeam_core::lmi::certify_tau;
use rsbeam_core::model::*;
use rsbeam_core::uncertainty::*;
use rsbeam_core::wmse::WmseState;

fn scalar_region(delta: f64) -> Vec<UncertaintyRegion> {
    vec![UncertaintyRegion::new(CVec::from_element(1, C64::from(1.0)), delta).unwrap()]
}

fn random_regions(seed: u64, index: u64, k: usize, nt: usize, delta: f64) -> Vec<UncertaintyRegion> {
    let mut rng = channel_rng(seed, index);
    (0..k).map(|_| sample_instance(&mut rng, nt, delta).region).collect()
}

fn random_precoder(seed: u64, nt: usize, k: usize, power: f64) -> Precoder {
    let mut rng = channel_rng(seed, 99);
    let pc = sample_channel(&mut rng, nt);
    let cols: Vec<CVec> = (0..k).map(|_| sample_channel(&mut rng, nt)).collect();
    let p = Precoder::new(pc, CMat::from_columns(&cols)).unwrap();
    p.scaled((power / p.power()).sqrt())
}

fn assert_monotone(trace: &[f64], increasing: bool) {
    for w in trace.windows(2) {
        if increasing {
            assert!(w[1] >= w[0] - 1e-8, "{trace:?}");
        } else {
            assert!(w[1] <= w[0] + 1e-8, "{trace:?}");
        }
    }
}

#[test]
fn zero_radius_equalizer_is_mmse() {
    let s = Settings { tol_gap: 1e-12, tol_feas: 1e-12, ..Settings::default() };
    for seed in 0..5 {
        let r = random_regions(seed, 0, 1, 3, 0.0);
        let p = random_precoder(seed, 3, 3, 5.0);
        let (mc, mp) = mmse_equalizers(&r[0].h_hat, &p, 1.0, 1).unwrap();
        let (ec, ep) = mmse_values(&r[0].h_hat, &p, 1.0, 1).unwrap();
        let o = equalizer_step(&r[0], &p, 1.0, 1, Stream::Private, &s).unwrap();
        assert!((o.g - mp).norm() < 1e-6 && (o.eps_cons - ep).abs() < 1e-6, "{} {} {}", (o.g - mp).norm(), o.eps_cons - ep, ep);
        let o = equalizer_step(&r[0], &p, 1.0, 1, Stream::Common, &s).unwrap();
        assert!((o.g - mc).norm() < 1e-6 && (o.eps_cons - ec).abs() < 1e-6);
    }
}

#[test]
fn silent_transmitter_gives_unit_mse() {
    let r = random_regions(1, 0, 1, 2, 0.1);
    let p = Precoder::zeros(2, 2);
    for stream in [Stream::Private, Stream::Common] {
        let o = equalizer_step(&r[0], &p, 1.0, 0, stream, &Settings::default()).unwrap();
        assert!(o.g.norm() < 1e-6);
        assert!((o.eps_cons - 1.0).abs() < 1e-6);
    }
}

#[test]
fn equalizer_sampling_sandwich() {
    let s = Settings::default();
    for seed in 0..4 {
        let r = random_regions(seed, 1, 3, 3, 0.1);
        let p = random_precoder(seed, 3, 3, 10.0);
        let mut rng = channel_rng(seed, 2);
        for (k, region) in r.iter().enumerate() {
            for stream in [Stream::Private, Stream::Common] {
                let o = equalizer_step(region, &p, 1.0, k, stream, &s).unwrap();
                assert!(o.eps_cons > 0.0 && o.eps_cons <= 1.0 + 1e-6);
                let mse_at = |h: &CVec, g: C64| {
                    let (ec, ep) = mse_pair(h, &p, g, g, 1.0, k).unwrap();
                    if stream == Stream::Common { ec } else { ep }
                };
                let mut worst_h = region.h_hat.clone();
                let mut worst = f64::NEG_INFINITY;
                for _ in 0..2000 {
                    let h = &region.h_hat + sample_error(&mut rng, region.delta, ErrorMode::Boundary, 3);
                    let e = mse_at(&h, o.g);
                    if e > worst {
                        worst = e;
                        worst_h = h;
                    }
                }
                assert!(o.eps_cons >= worst - 1e-6, "{} < {worst}", o.eps_cons);
                // The MMSE gain of the sampled worst channel, held fixed over the region.
                let (gc, gp) = mmse_equalizers(&worst_h, &p, 1.0, k).unwrap();
                let (m, g, target) = match stream {
                    Stream::Private => (p.pp.clone(), gp, k),
                    Stream::Common => (p.full(), gc, 0),
                };
                let fixed = certify_tau(&region.h_hat, region.delta, &m, g, target).tau + g.norm_sqr();
                assert!(o.eps_cons <= fixed + 1e-6, "{} > {fixed}", o.eps_cons);
            }
        }
    }
}

#[test]
fn scalar_rate_converges_to_awgn_capacity() {
    let r = scalar_region(0.0);
    let d = Design::new(&r, 1.0, Scheme::NoRs).unwrap();
    let res = run_ao(ProblemKind::MaxMinRate { pt: 1.0 }, &d, &AoConfig::default()).unwrap();
    assert!((res.objective - 1.0).abs() < 1e-3, "{}", res.objective);
    assert!(res.iterations <= 10, "{} iterations", res.iterations);
    assert_eq!(res.status, DesignStatus::Converged);
    assert_monotone(&res.trace, true);
}

#[test]
fn scalar_power_meets_unit_target() {
    let r = scalar_region(0.0);
    let d = Design::new(&r, 1.0, Scheme::NoRs).unwrap();
    let res = run_ao(ProblemKind::MinPower { target: 1.0 }, &d, &AoConfig::default()).unwrap();
    assert!((res.objective - 1.0).abs() < 1e-3, "{}", res.objective);
    assert!(res.level >= 1.0 - 1e-6);
    assert_monotone(&res.trace, false);
    let zero = run_ao(ProblemKind::MinPower { target: 0.0 }, &d, &AoConfig::default()).unwrap();
    assert_eq!(zero.objective, 0.0);
    assert_eq!(zero.precoder.power(), 0.0);
}

#[test]
fn zero_target_needs_no_power() {
    let r = random_regions(3, 0, 3, 3, 0.1);
    for scheme in [Scheme::NoRs, Scheme::Rs] {
        let d = Design::new(&r, 1.0, scheme).unwrap();
        let res = run_ao(ProblemKind::MinPower { target: 0.0 }, &d, &AoConfig::default()).unwrap();
        assert_eq!(res.power, 0.0);
        assert_eq!(res.status, DesignStatus::Converged);
    }
}

#[test]
fn bootstrap_doubles_until_the_target_is_met() {
    let r = scalar_region(0.0);
    let d = Design::new(&r, 1.0, Scheme::NoRs).unwrap();
    let b = bootstrap_power_problem(&d, 1.0, &AoConfig::default(), Some(0.1)).unwrap().unwrap();
    assert_eq!(b.round, 4);
    assert!((b.budget - 1.6).abs() < 1e-12);
    let b = bootstrap_power_problem(&d, 0.0, &AoConfig::default(), None).unwrap().unwrap();
    assert_eq!(b.round, 0);
}

#[test]
fn nors_saturates_under_fixed_uncertainty() {
    let r = random_regions(4, 0, 2, 2, 0.3);
    let d = Design::new(&r, 1.0, Scheme::NoRs).unwrap();
    let res = run_ao(ProblemKind::MinPower { target: 8.0 }, &d, &AoConfig::default()).unwrap();
    assert_eq!(res.status, DesignStatus::Infeasible);
    assert!(res.objective.is_infinite());
}

#[test]
fn warm_started_rs_dominates_nors() {
    let cfg = AoConfig::default();
    for seed in 0..3 {
        let r = random_regions(seed, 5, 3, 3, 0.1);
        let rs = Design::new(&r, 1.0, Scheme::Rs).unwrap();
        let kind = ProblemKind::MaxMinRate { pt: 100.0 };
        let nors = run_ao(kind, &rs.restrict_nors(), &cfg).unwrap();
        let res = run_rs_dominant(kind, &rs, &nors, &cfg).unwrap();
        assert!(res.objective >= nors.objective - 1e-6, "{} < {}", res.objective, nors.objective);
        assert_monotone(&res.trace, true);
        assert_monotone(&nors.trace, true);
    }
}

#[test]
fn rs_without_common_power_is_nors() {
    let s = Settings::default();
    for seed in 0..3 {
        let r = random_regions(seed, 6, 3, 3, 0.1);
        let rs = Design::new(&r, 1.0, Scheme::Rs).unwrap();
        let p = random_precoder(seed, 3, 3, 50.0).without_common();
        let a = evaluate(&rs, &p, &s).unwrap();
        let b = evaluate(&rs.restrict_nors(), &p, &s).unwrap();
        assert!((a.level - b.level).abs() < 1e-6, "{} vs {}", a.level, b.level);
        assert!(a.split.r_c < 1e-6);
    }
}

#[test]
fn conservative_rates_lie_below_sampled_worst_case() {
    let cfg = AoConfig::default();
    for seed in 0..3 {
        let r = random_regions(seed, 7, 2, 2, 0.05);
        for scheme in [Scheme::NoRs, Scheme::Rs] {
            let d = Design::new(&r, 1.0, scheme).unwrap();
            let res = run_ao(ProblemKind::MaxMinRate { pt: 30.0 }, &d, &cfg).unwrap();
            let mut rng = channel_rng(seed, 8);
            let mut common_oracle = f64::INFINITY;
            for (k, region) in r.iter().enumerate() {
                let (rp, _) = worst_case_oracle(region, &res.precoder, 1.0, k, Stream::Private, 2000, &mut rng);
                assert!(res.private_rates[k] <= rp + 1e-6, "{} > {rp}", res.private_rates[k]);
                if scheme == Scheme::Rs {
                    let (rc, _) = worst_case_oracle(region, &res.precoder, 1.0, k, Stream::Common, 2000, &mut rng);
                    assert!(res.common_rates[k] <= rc + 1e-6);
                    common_oracle = common_oracle.min(rc);
                }
                assert!(res.per_user_conservative_rates[k] <= rp + res.split.c[k] + 1e-6);
            }
            if scheme == Scheme::Rs {
                assert!(res.split.r_c <= common_oracle + 1e-6);
            }
            assert!(res.objective <= res.per_user_conservative_rates.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-9);
        }
    }
}

#[test]
fn power_then_rate_round_trip() {
    let cfg = AoConfig::default();
    let r = random_regions(9, 0, 2, 2, 0.05);
    let d = Design::new(&r, 1.0, Scheme::Rs).unwrap();
    let p = run_ao(ProblemKind::MinPower { target: 2.0 }, &d, &cfg).unwrap();
    assert_ne!(p.status, DesignStatus::Infeasible);
    let warm = cfg.with_init(InitStrategy::WarmStart(p.precoder.clone()));
    let rate = run_ao(ProblemKind::MaxMinRate { pt: p.power }, &d, &warm).unwrap();
    assert!(rate.objective >= 2.0 - 1e-6, "{}", rate.objective);
}

#[test]
fn precoder_step_does_not_fall_below_the_current_level() {
    let s = Settings { tol_gap: 1e-10, tol_feas: 1e-10, ..Settings::default() };
    for seed in 0..3 {
        let r = random_regions(seed, 10, 2, 2, 0.0);
        for scheme in [Scheme::NoRs, Scheme::Rs] {
            let d = Design::new(&r, 1.0, scheme).unwrap();
            let p = initial_precoder(&d, &InitStrategy::MrtEqualSplit, 20.0).unwrap();
            let ev = evaluate(&d, &p, &s).unwrap();
            let step = precoder_step_rate(&d, &ev.state, 20.0, &s).unwrap();
            assert!(step.objective >= ev.level - 1e-8, "{} < {}", step.objective, ev.level);
            assert!(step.precoder.power() <= 20.0 * (1.0 + 1e-9));
            assert!(step.split.c.iter().all(|c| *c >= -1e-9));
            assert!((step.split.c.iter().sum::<f64>() - step.split.r_c).abs() <= 1e-9);
        }
    }
}

#[test]
fn invalid_weights_are_rejected() {
    let r = scalar_region(0.0);
    let d = Design::new(&r, 1.0, Scheme::NoRs).unwrap();
    let bad = WmseState { g_c: vec![C64::from(0.0)], g: vec![C64::from(0.0)], u_c: vec![1.0], u: vec![-1.0] };
    assert!(precoder_step_rate(&d, &bad, 1.0, &Settings::default()).is_err());
}

#[test]
fn traces_are_monotone_on_seeded_runs() {
    let cfg = AoConfig::default();
    let mut rng = channel_rng(11, 0);
    for i in 0..3 {
        let r = random_regions(11, i + 1, 3, 3, 0.1);
        let pt = 10f64.powf(rng.random_range(1.0..3.0));
        let d = Design::new(&r, 1.0, Scheme::Rs).unwrap();
        let res = run_ao(ProblemKind::MaxMinRate { pt }, &d, &cfg).unwrap();
        assert_monotone(&res.trace, true);
        assert!(res.power <= pt * (1.0 + 1e-9));
        assert!((res.split.c.iter().sum::<f64>() - res.split.r_c).abs() <= 1e-9);
    }
}
