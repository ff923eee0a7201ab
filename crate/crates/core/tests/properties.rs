use std::f64::consts::PI;

use dirac_ssm::diagnostics::{fit_growth_rate, BandTrack, GrowthModel};
use dirac_ssm::integrators::{gn_run, read_spectra, run_simulation, seed_noise, GridSpec, Scheme, SplitStep};
use dirac_ssm::models::{BoxModel, GnSoliton, Model};
use dirac_ssm::monodromy::{box_model_monodromy, floor_rate_thirring, integrate_monodromy};
use dirac_ssm::spectral::{dft, idft, Grid};
use proptest::prelude::*;

fn track(times: Vec<f64>, amplitudes: Vec<f64>) -> BandTrack {
    BandTrack { label: "b".into(), k_center: 1.0, k_halfwidth: 0.1, times, amplitudes }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monodromy_is_unimodular_and_bounded(omega in 0.15f64..0.9, length in 20.0f64..160.0) {
        let r = integrate_monodromy(omega, length, None).unwrap();
        prop_assert!(r.det_err < 1e-10, "det error {:e}", r.det_err);
        prop_assert!(r.rho <= r.norm * (1.0 + 1e-12));
        prop_assert!(r.growth_rate >= -1e-12);
    }

    #[test]
    fn thirring_floor_is_neutral(q in 0.05f64..3.09, length in 20.0f64..200.0) {
        let r = floor_rate_thirring(q, length, None).unwrap();
        prop_assert!((r.rho - 1.0).abs() < 1e-10);
        prop_assert!(r.det_err < 1e-10);
    }

    #[test]
    fn box_transfer_preserves_the_split_form(
        a in 0.0f64..1.2, b in 0.0f64..1.2, l_sol in 0.5f64..8.0, omega in 0.1f64..0.9, extra in 1.0f64..60.0,
    ) {
        let bm = BoxModel::new(a, b, l_sol).unwrap();
        let r = box_model_monodromy(&bm, omega, l_sol + extra, Some(1000)).unwrap();
        prop_assert!((r.phi11().norm_sqr() - r.phi12().norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!(r.exact.det_err < 1e-10);
        let rho = r.closed_form[0].max(r.closed_form[1]);
        prop_assert!((rho - r.exact.rho).abs() < 1e-8 * r.exact.rho.max(1.0));
        prop_assert!((r.integrated.rho - r.exact.rho).abs() < 1e-6 * r.exact.rho);
    }

    #[test]
    fn split_steps_conserve_charge(omega in 0.2f64..0.9, dt in 0.002f64..0.1, seed in any::<u64>()) {
        let grid = Grid::new(8.0 * PI, 256).unwrap();
        let f = seed_noise(&GnSoliton::standing(omega).unwrap().envelope(grid), 1e-3, seed);
        for scheme in [Scheme::Ssm1, Scheme::Ssm2] {
            for model in [Model::Gn, Model::Thirring] {
                let mut s = SplitStep::new(model, scheme, &f, dt).unwrap();
                let q0 = s.charge();
                for _ in 0..200 {
                    s.step();
                }
                prop_assert!(((s.charge() - q0) / q0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dft_round_trip_and_parseval(seed in any::<u64>(), p in 3u32..9) {
        let grid = Grid::new(3.0, 1 << p).unwrap();
        let f = seed_noise(&dirac_ssm::spectral::SpinorField::zeros(grid), 1.0, seed);
        let s = dft(&f);
        prop_assert!(idft(&s).max_abs_diff(&f) < 1e-12);
        let ex: f64 = f.c1.iter().chain(&f.c2).map(|z| z.norm_sqr()).sum();
        let ek: f64 = s.s1.iter().chain(&s.s2).map(|z| z.norm_sqr()).sum::<f64>() / grid.len() as f64;
        prop_assert!((ex - ek).abs() < 1e-10 * ex);
    }

    #[test]
    fn fit_recovers_exponential_rates(rate in 0.002f64..0.05, a0 in 1e-12f64..1e-6) {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 10.0).collect();
        let amps = times.iter().map(|t| a0 * (rate * t).exp()).collect();
        let fit = fit_growth_rate(&track(times, amps)).unwrap();
        prop_assert_eq!(fit.model, GrowthModel::Exponential);
        prop_assert!((fit.rate - rate).abs() < 1e-9);
    }

    #[test]
    fn fit_tags_linear_growth(slope in 1e-9f64..1e-6, a0 in 1e-12f64..1e-10) {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 10.0).collect();
        let amps = times.iter().map(|t| a0 + slope * t).collect();
        prop_assert_eq!(fit_growth_rate(&track(times, amps)).unwrap().model, GrowthModel::Linear);
    }
}

#[test]
fn flat_tracks_are_flat() {
    let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let amps = times.iter().map(|t| 1e-10 * (1.0 + 0.1 * (0.7 * t).sin())).collect();
    assert_eq!(fit_growth_rate(&track(times, amps)).unwrap().model, GrowthModel::Flat);
}

#[test]
fn spectra_stream_round_trips() {
    let mut cfg = gn_run(0.5, GridSpec::pi(4.0, 128), 0.01, 0.3);
    cfg.store_spectra = true;
    cfg.cadence = Some(10);
    let traj = run_simulation(&cfg).unwrap();
    let mut buf = Vec::new();
    traj.write_spectra(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 * (2 + 4 * (1 + 4 * 128)));
    let back = read_spectra(buf.as_slice(), 4.0 * PI).unwrap();
    assert_eq!(back.len(), 4);
    for ((t, s), snap) in back.iter().zip(&traj.snapshots) {
        assert_eq!(*t, snap.t);
        assert_eq!(s, snap.spectrum.as_ref().unwrap());
    }
    assert!(read_spectra(&buf[..buf.len() - 8], 4.0 * PI).is_err());
}

#[test]
fn identical_configs_give_identical_trajectories() {
    let mut cfg = gn_run(0.35, GridSpec::pi(8.0, 256), 0.01, 2.0);
    cfg.noise_amplitude = 1e-6;
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a.final_field, b.final_field);
    cfg.seed += 1;
    let c = run_simulation(&cfg).unwrap();
    assert_ne!(a.final_field, c.final_field);
}
