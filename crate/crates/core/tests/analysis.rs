mod common;

use std::f64::consts::PI;

use common::*;
use hilbert_spde::analysis::ledger::residual_refinement;
use hilbert_spde::analysis::stats::{least_squares, mean_stderr, pairwise_sum, wilson_interval};
use hilbert_spde::analysis::verifier::{exact_product, lebesgue_norm};
use hilbert_spde::analysis::*;
use hilbert_spde::dynamics::*;
use hilbert_spde::integrator::{simulate, SchemeConfig};
use hilbert_spde::noise::{path_seed, NoisePath};
use hilbert_spde::{Error, SpectralField};

fn silent() -> DiffusionSpec {
    DiffusionSpec { amplitude: 0.0, ..DiffusionSpec::default() }
}

fn sine(g: &hilbert_spde::Grid) -> SpectralField {
    SpectralField::from_fn(g, |x, o| o[0] = x[0].sin()).unwrap()
}

fn taylor_green(g: &hilbert_spde::Grid, a: f64) -> SpectralField {
    SpectralField::from_fn(g, |x, o| {
        o[0] = -a * x[0].cos() * x[1].sin();
        o[1] = a * x[0].sin() * x[1].cos();
    })
    .unwrap()
}

#[test]
fn lebesgue_norms_of_a_sine() {
    let g = line(32);
    let u = sine(&g);
    // ∫|sin|^4 = 3π/4, ∫sin² = π
    assert!(rel(lebesgue_norm(&u, 2.0), PI.sqrt()) < 1e-13);
    assert!(rel(lebesgue_norm(&u, 4.0), (0.75 * PI).powf(0.25)) < 1e-13);
    assert!(rel(lebesgue_norm(&u, f64::INFINITY), 1.0) < 1e-3);
}

#[test]
fn exact_product_matches_pointwise_values() {
    let g = plane(16);
    let (u, v) = (sample(&g, 4, 0), sample(&g, 4, 1));
    let w = exact_product(&u, &v).unwrap();
    for x in [[0.3, 1.7, 0.0], [2.9, 5.1, 0.0], [4.4, 0.2, 0.0]] {
        let (a, b) = (fourier_eval(&u, &x), fourier_eval(&v, &x));
        let want = a[0] * b[0] + a[1] * b[1];
        assert!((fourier_eval(&w, &x)[0] - want).abs() < 1e-12 * (1.0 + want.abs()));
    }
}

#[test]
fn statistics_helpers() {
    let xs: Vec<f64> = (1..=10).map(f64::from).collect();
    assert_eq!(pairwise_sum(&xs), 55.0);
    let m = mean_stderr(&xs);
    assert_eq!(m.mean, 5.5);
    assert!(rel(m.stderr, (55.0f64 / 6.0).sqrt() / 10f64.sqrt()) < 1e-14);
    let fit = least_squares(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
    assert!((fit.slope - 2.0).abs() < 1e-14 && (fit.intercept - 1.0).abs() < 1e-14);
    let (lo, hi) = wilson_interval(0, 64);
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0 && hi < 0.1);
}

#[test]
fn heat_moments_are_deterministic() {
    let g = line(32);
    let dy = LinearTest::new(&g, &silent()).unwrap();
    let u0 = sine(&g);
    let spec = MomentSpec {
        paths: 8,
        seed: 1,
        sobolev: vec![0.0, 1.0],
        powers: vec![1, 2],
        eps_ladder: vec![0.1, 0.01, 0.0],
        flat_band: 2.0,
    };
    let t = estimate_moments(&dy, &u0, &SchemeConfig::new(1e-2, 0.2, 0.0), &spec).unwrap();
    assert!(t.pass);
    // the energy only decays, so the sup sits at t = 0
    for eps in [0.1, 0.01, 0.0] {
        let e = t.entry(0.0, 1, eps).unwrap();
        assert!(rel(e.estimate, PI) < 1e-14 && e.stderr == 0.0);
        assert!(rel(t.entry(1.0, 2, eps).unwrap().estimate, 4.0 * PI * PI) < 1e-14);
    }
}

#[test]
fn moments_obey_jensen() {
    let g = line(32);
    let dy = BurgersGl::new(&g, BurgersGlCoefficients::canonical(1.0, 1.0, 1.0).unwrap(), &DiffusionSpec::default()).unwrap();
    let spec = MomentSpec {
        paths: 16,
        seed: 3,
        sobolev: vec![0.0],
        powers: vec![1, 2, 4],
        eps_ladder: vec![0.05],
        flat_band: 2.0,
    };
    let t = estimate_moments(&dy, &sine(&g), &SchemeConfig::new(1e-3, 0.2, 0.0), &spec).unwrap();
    let m1 = t.entry(0.0, 1, 0.05).unwrap().estimate;
    let m2 = t.entry(0.0, 2, 0.05).unwrap().estimate;
    let m4 = t.entry(0.0, 4, 0.05).unwrap().estimate;
    assert!(m2 >= m1 * m1 && m4 >= m2 * m2);
    assert!(t.truncated.is_empty());
}

#[test]
fn moment_spec_rejects_too_few_paths() {
    let g = line(32);
    let dy = LinearTest::new(&g, &silent()).unwrap();
    let spec = MomentSpec { paths: 4, seed: 0, sobolev: vec![0.0], powers: vec![1], eps_ladder: vec![0.1], flat_band: 2.0 };
    let r = estimate_moments(&dy, &sine(&g), &SchemeConfig::new(1e-2, 0.1, 0.0), &spec);
    assert!(matches!(r, Err(Error::InsufficientData(_))));
}

#[test]
fn heat_ledger_residual_is_first_order() {
    let g = line(32);
    let dy = LinearTest::new(&g, &silent()).unwrap();
    let u0 = SpectralField::from_fn(&g, |x, o| o[0] = x[0].sin() + 0.5 * (2.0 * x[0]).cos()).unwrap();
    let noise = NoisePath::new(0, 16, 1e-2).unwrap();
    for (m, p) in [(0.0, 1), (1.0, 1), (0.0, 2)] {
        let r = residual_refinement(&dy, &u0, &noise, &SchemeConfig::new(1e-2, 0.5, 0.0), m, p).unwrap();
        assert!((r.order - 1.0).abs() < 0.1, "m={m} p={p}: order {}", r.order);
    }
    // the drift column alone carries the exact dissipation rate 2‖∇u‖² at t = 0
    let t = simulate(&dy, &u0, &noise, &SchemeConfig::new(1e-2, 0.5, 0.0)).unwrap();
    let l = energy_ledger(&t, &dy, 0.0, 1).unwrap();
    let grad2 = PI * (1.0 + 4.0 * 0.25);
    assert!(rel(l.steps[0].drift_linear, -2.0 * grad2 * 1e-2) < 1e-12);
    assert_eq!(l.totals.martingale, 0.0);
    assert_eq!(l.totals.drift_nonlinear, 0.0);
}

#[test]
fn ledger_needs_every_step() {
    let g = line(32);
    let dy = LinearTest::new(&g, &silent()).unwrap();
    let cfg = SchemeConfig { record_every: 2, ..SchemeConfig::new(1e-2, 0.1, 0.0) };
    let t = simulate(&dy, &sine(&g), &NoisePath::new(0, 16, 1e-2).unwrap(), &cfg).unwrap();
    assert!(energy_ledger(&t, &dy, 0.0, 1).is_err());
}

#[test]
fn tamed_drift_only_removes_energy() {
    let g = plane(16);
    let dy = TamedNs::new(&g, Some(TamingFunction::new(0.5).unwrap()), &silent()).unwrap();
    let u0 = taylor_green(&g, 1.0).add(&sample(&g, 2, 0));
    let t = simulate(&dy, &u0, &NoisePath::new(0, 16, 1e-3).unwrap(), &SchemeConfig::new(1e-3, 0.1, 0.02)).unwrap();
    let l = energy_ledger(&t, &dy, 0.0, 1).unwrap();
    for s in &l.steps {
        assert!(s.drift_nonlinear <= 1e-13, "{s:?}");
        assert!(s.drift_linear <= 0.0);
    }
    assert!(l.totals.drift_nonlinear < 0.0);
}

#[test]
fn martingale_column_has_mean_zero() {
    let g = line(32);
    let spec = DiffusionSpec { coupling: Coupling::Multiplicative, amplitude: 1.0, ..DiffusionSpec::default() };
    let dy = BurgersGl::new(&g, BurgersGlCoefficients::canonical(1.0, 1.0, 1.0).unwrap(), &spec).unwrap();
    let cfg = SchemeConfig::new(1e-3, 0.1, 0.05);
    let totals: Vec<f64> = farm(200, |i| {
        let t = simulate(&dy, &sine(&g), &NoisePath::new(path_seed(6, i as u64), 16, 1e-3).unwrap(), &cfg).unwrap();
        energy_ledger(&t, &dy, 0.0, 1).unwrap().totals.martingale
    });
    let m = mean_stderr(&totals);
    assert!(m.mean.abs() < 4.0 * m.stderr, "{m:?}");
}

#[test]
fn stopping_fractions_shrink_with_the_level() {
    let g = plane(16);
    let spec = DiffusionSpec { amplitude: 4.0, ..DiffusionSpec::default() };
    let r = stopping_time_study(
        &g,
        &spec,
        &taylor_green(&g, 1.8),
        &SchemeConfig::new(2e-3, 0.5, 0.0),
        &StoppingSpec { paths: 32, seed: 4, levels: vec![3.3, 3.6, 4.0, 1e12] },
    )
    .unwrap();
    assert!(r.pass);
    let f: Vec<f64> = r.levels.iter().map(|l| l.fraction).collect();
    assert!(f.windows(2).all(|w| w[1] <= w[0]), "{f:?}");
    assert!(f[0] > 0.0, "{f:?}");
    assert_eq!(r.levels[3].hits, 0);
    assert!(r.levels.iter().all(|l| l.time_change.is_finite() && l.time_change > 0.0));
}

#[test]
fn stopping_study_checks_its_grid_and_levels() {
    let spec = DiffusionSpec::default();
    let cfg = SchemeConfig::new(1e-2, 0.1, 0.0);
    let s = StoppingSpec { paths: 2, seed: 0, levels: vec![1.0, 2.0] };
    let g = line(32);
    assert!(stopping_time_study(&g, &spec, &sine(&g), &cfg, &s).is_err());
    let g = plane(16);
    let bad = StoppingSpec { levels: vec![2.0, 1.0], ..s };
    assert!(stopping_time_study(&g, &spec, &taylor_green(&g, 1.0), &cfg, &bad).is_err());
}

#[test]
fn convergence_study_validates_its_ladder() {
    let g = line(32);
    let dy = LinearTest::new(&g, &DiffusionSpec::default()).unwrap();
    let short = ConvergenceSpec { eps_ladder: vec![0.1, 0.05, 0.025], ..ConvergenceSpec::default() };
    assert!(matches!(
        convergence_study(&dy, &sine(&g), &SchemeConfig::new(1e-4, 0.1, 0.0), &short),
        Err(Error::InsufficientData(_))
    ));
    // ε_min = 0.003125, so 16 ε_min² ≈ 1.6e-4
    let r = convergence_study(&dy, &sine(&g), &SchemeConfig::new(1e-3, 0.1, 0.0), &ConvergenceSpec::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn verifier_ratios_are_scale_invariant() {
    let g = line(64);
    let a = verify_inequalities(&FieldSampler::new(&g, 5), 60).unwrap();
    let b = verify_inequalities(&FieldSampler { amplitude: 37.0, ..FieldSampler::new(&g, 5) }, 60).unwrap();
    assert_eq!(a.checks.len(), b.checks.len());
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.name, y.name);
        assert!(rel(x.max, y.max) < 1e-9, "{}: {} vs {}", x.name, x.max, y.max);
    }
    let interp = a.checks.iter().filter(|c| c.name.starts_with("interpolation")).count();
    assert!(interp > 0);
    assert!(a.check("agmon").is_none());
    assert!(a.checks.iter().any(|c| c.name.starts_with("moser")));
}

#[test]
fn csv_report_layout() {
    let rows = vec![
        ReportRow::new("moments", "m=0;p=1;eps=0.1", 1.5, 0.25, true),
        ReportRow::new("moments", "flatness", f64::NAN, 0.0, false),
    ];
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let mut r = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["experiment", "parameter", "estimate", "stderr", "pass", "schema_version"]
    );
    let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0][2].parse::<f64>().unwrap(), 1.5);
    assert_eq!(&recs[0][4], "true");
    assert_eq!(recs[1][5].parse::<u32>().unwrap(), CSV_SCHEMA_VERSION);
}

#[test]
fn farm_results_do_not_depend_on_threads() {
    let g = line(32);
    let dy = BurgersGl::new(&g, BurgersGlCoefficients::canonical(1.0, 1.0, 1.0).unwrap(), &DiffusionSpec::default()).unwrap();
    let spec = MomentSpec { paths: 12, seed: 8, sobolev: vec![0.0, 1.0], powers: vec![1, 2], eps_ladder: vec![0.1, 0.05], flat_band: 2.0 };
    let cfg = SchemeConfig::new(1e-3, 0.05, 0.0);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate_moments(&dy, &sine(&g), &cfg, &spec).unwrap())
    };
    let one = run(1);
    for t in [2, 4] {
        let other = run(t);
        let bits = |m: &MomentTable| m.entries.iter().map(|e| (e.estimate.to_bits(), e.stderr.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&one), bits(&other));
    }
}
