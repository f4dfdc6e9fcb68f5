//! End-to-end acceptance gate. Prints one line per criterion and exits
//! nonzero if any of them fails.

mod common;

use std::f64::consts::TAU;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use hilbert_spde::analysis::stats::{least_squares, pairwise_sum};
use hilbert_spde::analysis::verifier::INTERPOLATION_SLACK;
use hilbert_spde::analysis::*;
use hilbert_spde::dynamics::*;
use hilbert_spde::integrator::{simulate_with, SchemeConfig};
use hilbert_spde::noise::{path_seed, NoisePath};
use hilbert_spde::{apply_semigroup, Grid, ScaleOperator, SpectralField};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn silent() -> DiffusionSpec {
    DiffusionSpec { amplitude: 0.0, ..DiffusionSpec::default() }
}

fn final_state(dy: &dyn Dynamics, u0: &SpectralField, noise: &NoisePath, cfg: &SchemeConfig) -> SpectralField {
    let mut last = None;
    let (_, blow) = simulate_with(dy, u0, noise, cfg, |v| last = Some(v.state.clone())).unwrap();
    assert!(blow.is_none(), "unexpected blow-up {blow:?}");
    last.unwrap()
}

fn taylor_green(g: &Grid, a: f64) -> SpectralField {
    SpectralField::from_fn(g, |x, o| {
        o[0] = -a * x[0].cos() * x[1].sin();
        o[1] = a * x[0].sin() * x[1].cos();
    })
    .unwrap()
}

fn sine(g: &Grid) -> SpectralField {
    SpectralField::from_fn(g, |x, o| o[0] = x[0].sin()).unwrap()
}

fn algebraic_exactness() -> Verdict {
    let start = Instant::now();
    let grids = [line(64), Grid::scalar(2, 32, TAU).unwrap(), plane(32), box3(16)];
    let mut worst = [0.0f64; 7];
    for g in &grids {
        let op = ScaleOperator::new(g);
        for i in 0..100 {
            let (u, v) = sample_pair(g, 101, i);
            let scale = u.l2_norm();
            let (s, t) = (0.013 + 0.001 * i as f64, 0.2);
            let semi = apply_semigroup(&apply_semigroup(&u, s).unwrap(), t).unwrap();
            let want = apply_semigroup(&u, s + t).unwrap();
            worst[0] = worst[0].max(semi.sub(&want).l2_norm() / scale);

            let (a, b) = (0.7, -1.3);
            let pa = op.fractional_power(&op.fractional_power(&u, a), b);
            worst[1] = worst[1].max(pa.sub(&op.fractional_power(&u, a + b)).l2_norm() / scale);

            let tl = apply_semigroup(&op.fractional_power(&u, 1.5), s).unwrap();
            let lt = op.fractional_power(&apply_semigroup(&u, s).unwrap(), 1.5);
            worst[2] = worst[2].max(tl.sub(&lt).l2_norm() / tl.l2_norm());

            if g.n_components() == g.dim() && g.dim() > 1 {
                let p = leray_project(&u).unwrap();
                worst[3] = worst[3].max(leray_project(&p).unwrap().sub(&p).l2_norm() / scale);
                let pv = leray_project(&v).unwrap();
                let adj = (p.inner(&v) - u.inner(&pv)).abs() / (scale * v.l2_norm());
                worst[4] = worst[4].max(adj);
                worst[5] = worst[5].max(p.divergence().unwrap().l2_norm() / p.l2_norm().max(1e-300));
            }

            let vals = u.to_physical();
            let quad = pairwise_sum(&vals.iter().map(|x| x * x).collect::<Vec<_>>()) * g.volume() / g.points() as f64;
            worst[6] = worst[6].max((quad - u.l2_norm().powi(2)).abs() / u.l2_norm().powi(2));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    verdict(
        max < 1e-10 && secs < 10.0,
        format!(
            "max residual {max:.2e} (semigroup {:.1e}, power {:.1e}, commute {:.1e}, leray idem {:.1e} adj {:.1e} div {:.1e}, parseval {:.1e}) in {secs:.1}s",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5], worst[6]
        ),
    )
}

fn dissipativity() -> Verdict {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut active = 0;
    for (g, seed) in [(plane(64), 202u64), (box3(16), 203)] {
        let op = ScaleOperator::new(&g);
        let taming = TamingFunction::new(1.0).unwrap();
        let sampler = FieldSampler::new(&g, seed);
        for i in 0..100 {
            // scaled up so the taming term is switched on for many samples
            let u = sampler.sample(i, 0).unwrap().scaled(1.0 + (i % 5) as f64);
            if u.sup_norm() > 1.0 {
                active += 1;
            }
            let pairing = op.inner(&u, &tamed_ns_drift(&u, &taming).unwrap(), 0.0);
            worst = worst.max(pairing / (1.0 + op.norm(&u, 1.0).powi(3)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-10 && secs < 60.0,
        format!("max ⟨u,F(u)⟩/(1+‖u‖₁³) = {worst:.2e} over 200 fields ({active} with taming active) in {secs:.1}s"),
    )
}

fn convective_neutrality() -> Verdict {
    let mut worst = 0.0f64;
    for (g, seed) in [(plane(64), 301u64), (box3(16), 302)] {
        let sampler = FieldSampler::new(&g, seed);
        for i in 0..100 {
            let u = sampler.sample(i, 0).unwrap();
            let b = convective_term(&u).unwrap();
            worst = worst.max(u.inner(&b).abs() / (u.l2_norm() * b.l2_norm()));
        }
    }
    let g = line(256);
    let coeffs = BurgersGlCoefficients::canonical(1.0, 0.0, 0.0).unwrap();
    let sampler = FieldSampler::new(&g, 303);
    for i in 0..100 {
        let u = sampler.sample(i, 0).unwrap();
        let b = burgers_flux_term(&u, &coeffs).unwrap();
        worst = worst.max(u.inner(&b).abs() / (u.l2_norm() * b.l2_norm()));
    }
    verdict(worst < 1e-9, format!("max |⟨u,B(u)⟩|/(‖u‖‖B(u)‖) = {worst:.2e} over 300 fields"))
}

fn convergence_and_moments() -> (Verdict, Verdict) {
    let start = Instant::now();
    let g = line(256);
    let dy = BurgersGl::new(&g, BurgersGlCoefficients::canonical(1.0, 1.0, 1.0).unwrap(), &DiffusionSpec::default()).unwrap();
    let spec = ConvergenceSpec { paths: 64, seed: 2024, ..ConvergenceSpec::default() };
    let r = convergence_study(&dy, &sine(&g), &SchemeConfig::new(1e-4, 0.25, 0.0), &spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let c4 = verdict(
        r.pass && r.slope >= 0.4 && r.truncated.is_empty(),
        format!(
            "slope {:.3} (95% [{:.3}, {:.3}]) over {} rungs, 64 paths, {secs:.0}s",
            r.slope,
            r.slope_interval.0,
            r.slope_interval.1,
            r.rungs.len()
        ),
    );
    let means: Vec<f64> = r.arm_moments.iter().map(|a| a.mean).collect();
    let hi = means.iter().cloned().fold(f64::MIN, f64::max);
    let lo = means.iter().cloned().fold(f64::MAX, f64::min);
    let c5 = verdict(
        lo > 0.0 && hi / lo <= 2.0,
        format!("E sup‖u‖₁² in [{lo:.4}, {hi:.4}] across {} arms, max/min {:.3}", means.len(), hi / lo),
    );
    (c4, c5)
}

fn strong_order() -> Verdict {
    // u = Σ_k col_k a_k with da_k = −λ_k a_k dt + dW_k; reference from the exact
    // stochastic convolution on a fine bridge level
    let g = line(64);
    let spec = DiffusionSpec { amplitude: 1.0, ..DiffusionSpec::default() };
    let dy = LinearTest::new(&g, &spec).unwrap();
    let op = ScaleOperator::new(&g);
    let zero = SpectralField::zeros(&g);
    let cols = dy.noise().columns(&zero).unwrap();
    let lambda: Vec<f64> = cols.iter().map(|c| op.norm_squared(c, 1.0) / op.norm_squared(c, 0.0) - 1.0).collect();
    let u0 = sine(&g);
    let horizon = 0.5;
    let coarse = 2e-3;
    let dts = [0, 1, 2, 3];
    let fine_level = 7u32;
    let paths = 256;
    let heat = |t: f64| -> Vec<f64> { g.ksq_table().iter().map(|k| (-k * t).exp()).collect() };
    let u0_t = u0.apply_symbol(&heat(horizon));

    let per_path: Vec<Vec<f64>> = farm(paths, |i| {
        let root = NoisePath::new(path_seed(606, i as u64), spec.count, coarse).unwrap();
        let fine = root.at_level(fine_level).unwrap();
        let n_fine = (horizon / fine.dt()).round() as usize;
        let block = fine.increments_block(0, n_fine);
        let mut exact = u0_t.clone();
        for (k, col) in cols.iter().enumerate() {
            let terms: Vec<f64> = block
                .iter()
                .enumerate()
                .map(|(n, dw)| (-lambda[k] * (horizon - (n as f64 + 0.5) * fine.dt())).exp() * dw[k])
                .collect();
            exact = exact.axpy(pairwise_sum(&terms), col);
        }
        dts.iter()
            .map(|&l| {
                let noise = root.at_level(l).unwrap();
                let u = final_state(&dy, &u0, &noise, &SchemeConfig::new(noise.dt(), horizon, 0.0));
                u.sub(&exact).l2_norm().powi(2)
            })
            .collect()
    });
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let ms = pairwise_sum(&per_path.iter().map(|e| e[j]).collect::<Vec<_>>()) / paths as f64;
            ((coarse / 2f64.powi(l as i32)).ln(), ms.sqrt().ln())
        })
        .collect();
    let fit = least_squares(&pts);

    // without noise the exponential scheme is the exact heat flow
    let quiet = LinearTest::new(&g, &silent()).unwrap();
    let mut exact_err = 0.0f64;
    for &l in &dts {
        let noise = NoisePath::new(0, 16, coarse).unwrap().at_level(l).unwrap();
        let u = final_state(&quiet, &u0, &noise, &SchemeConfig::new(noise.dt(), horizon, 0.0));
        exact_err = exact_err.max(u.sub(&u0_t).l2_norm() / u0_t.l2_norm());
    }
    let errs: Vec<String> = pts.iter().map(|p| format!("{:.2e}", p.1.exp())).collect();
    verdict(
        fit.slope >= 0.4 && exact_err < 1e-12,
        format!(
            "strong order {:.3} (rms errors {}), noise-free error {exact_err:.1e}",
            fit.slope,
            errs.join(", ")
        ),
    )
}

fn deterministic_oracles() -> Verdict {
    let g = plane(64);
    let dy = TamedNs::new(&g, None, &silent()).unwrap();
    let u0 = taylor_green(&g, 1.0);
    let dt = 1e-2;
    let u = final_state(&dy, &u0, &NoisePath::new(0, 16, dt).unwrap(), &SchemeConfig::new(dt, 1.0, 0.0));
    let want = u0.scaled((-2.0f64).exp());
    let tg = u.sub(&want).l2_norm() / want.l2_norm();

    let burgers = |modes: usize, dt: f64| {
        let g = line(modes);
        let dy = BurgersGl::new(&g, BurgersGlCoefficients::canonical(1.0, 0.0, 0.0).unwrap(), &silent()).unwrap();
        let u = final_state(&dy, &sine(&g), &NoisePath::new(0, 16, dt).unwrap(), &SchemeConfig::new(dt, 0.5, 0.0));
        let x: Vec<[f64; 3]> = (0..64).map(|i| [TAU * (i as f64 + 0.25) / 64.0, 0.0, 0.0]).collect();
        x.iter().map(|p| fourier_eval(&u, p)[0]).collect::<Vec<f64>>()
    };
    let dt = 1e-4;
    let coarse = burgers(64, dt);
    let fine = burgers(256, dt / 16.0);
    let diff: f64 = coarse.iter().zip(&fine).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = fine.iter().map(|b| b * b).sum::<f64>().sqrt();
    let bg = diff / norm;
    verdict(
        tg < 1e-6 && bg < 1e-4,
        format!("Taylor–Green rel error {tg:.2e} at T=1; Burgers vs 4x modes and dt/16: {bg:.2e}"),
    )
}

fn stopping_times() -> Verdict {
    let g = plane(64);
    // strong forcing, so the lowest level is hit on most paths and the next on some
    let noise = DiffusionSpec { amplitude: 14.0, ..DiffusionSpec::default() };
    let cfg = SchemeConfig::new(5e-3, 0.5, 0.0);
    let r = stopping_time_study(
        &g,
        &noise,
        &taylor_green(&g, 1.0),
        &cfg,
        &StoppingSpec { paths: 64, seed: 808, levels: vec![4.0, 16.0, 64.0] },
    )
    .unwrap();
    let small = stopping_time_study(
        &g,
        &DiffusionSpec::default(),
        &taylor_green(&g, 0.5),
        &cfg,
        &StoppingSpec { paths: 64, seed: 809, levels: vec![64.0] },
    )
    .unwrap();
    let f: Vec<String> = r.levels.iter().map(|l| format!("N={} {}/{}", l.level, l.hits, l.paths)).collect();
    verdict(
        r.pass && r.levels[0].hits > 0 && small.levels[0].hits == 0,
        format!(
            "hit fractions {} ({} monotone violations); small data N=64: {} hits",
            f.join(", "),
            r.monotone_violations.len(),
            small.levels[0].hits
        ),
    )
}

fn inequality_verifier() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (label, g) in [("1-D", line(64)), ("3-D", box3(16))] {
        let r = verify_inequalities(&FieldSampler::new(&g, 9), 1000).unwrap();
        let worst = r.checks.iter().map(|c| c.drift).fold(0.0, f64::max);
        let finite = r.checks.iter().all(|c| c.max.is_finite());
        let interp = r
            .checks
            .iter()
            .filter(|c| c.name.starts_with("interpolation"))
            .map(|c| c.max)
            .fold(0.0, f64::max);
        pass &= r.pass && finite && worst < 0.10 && interp <= 1.0 + INTERPOLATION_SLACK;
        notes.push(format!("{label}: {} checks, worst drift {:.1}%, interpolation max {interp:.12}", r.checks.len(), 100.0 * worst));
    }
    verdict(pass, notes.join("; "))
}

fn reproducibility() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("conv.cfg");
    std::fs::write(
        &cfg,
        "equation = burgers_gl\nexperiment = convergence\npaths = 8\nseed = 2024\ngrid.modes = 64\n\
         scheme.dt = 1e-4\nscheme.horizon = 0.02\nscheme.eps_ladder = 0.1, 0.05, 0.025, 0.0125\n",
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_hspde");
    let out = tmp.path().join("out");
    let run = Command::new(bin)
        .args(["--threads", "1", "run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    // the run itself may FAIL its slope on so short a horizon; only replay matters here
    if !matches!(run.status.code(), Some(0) | Some(2)) {
        return verdict(false, format!("run exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)));
    }
    let mut codes = Vec::new();
    for threads in ["1", "4"] {
        let o = Command::new(bin)
            .args(["--threads", threads, "replay"])
            .arg(out.join("manifest.json"))
            .output()
            .unwrap();
        codes.push((threads, o.status.code(), String::from_utf8_lossy(&o.stdout).trim().to_string()));
    }
    let ok = codes.iter().all(|c| c.1 == Some(0));
    let desc: Vec<String> = codes.iter().map(|c| format!("threads {}: {}", c.0, c.2)).collect();
    verdict(ok, desc.join("; "))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut clock = Instant::now();
    let mut report = |n: usize, v: Verdict| {
        let secs = clock.elapsed().as_secs_f64();
        clock = Instant::now();
        println!("criterion {n}: {} {} [{secs:.0}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    };
    report(1, algebraic_exactness());
    report(2, dissipativity());
    report(3, convective_neutrality());
    let (c4, c5) = convergence_and_moments();
    report(4, c4);
    report(5, c5);
    report(6, strong_order());
    report(7, deterministic_oracles());
    report(8, stopping_times());
    report(9, inequality_verifier());
    report(10, reproducibility());
    if failed == 0 {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
