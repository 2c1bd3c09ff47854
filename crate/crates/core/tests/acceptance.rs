//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use physdec::bench::{self, log_ber_slope, run_ber_sweep, DecoderId, ExperimentConfig};
use physdec::channel::{noiseless, ChannelLayout, SensorPlacement};
use physdec::codes::{enumerate_codebook, is_codeword, ParityCheckMatrix};
use physdec::decoder::{gf_decode_from, GfDecoderParams};
use physdec::gradcheck;
use physdec::heat::{fdm_step, HeatGrid, HeatGridParams};
use physdec::nlse::{NlseGrid, NlseGridParams};
use physdec::potential::{potential_energy, PotentialParams};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn c1_heat_gradient() -> Outcome {
    let start = Instant::now();
    let r = gradcheck::check_heat(20, 101).unwrap();
    let t = start.elapsed();
    outcome(
        r.passed() && t < Duration::from_secs(5),
        format!("20 instances, max rel err {:.2e} (tol 1e-6), {:.2}s (limit 5s)", r.max_error, secs(t)),
    )
}

fn c2_nlse_gradient() -> Outcome {
    let start = Instant::now();
    let r = gradcheck::check_nlse(10, 102).unwrap();
    let t = start.elapsed();
    outcome(
        r.passed() && t < Duration::from_secs(30),
        format!("10 instances, max rel err {:.2e} (tol 1e-4), {:.2}s (limit 30s)", r.max_error, secs(t)),
    )
}

fn c3_potential_gradient() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["hamming7_4", "bch15_7", "bch31_15"] {
        let code = ParityCheckMatrix::builtin(name).unwrap();
        worst = worst.max(gradcheck::check_potential(&code, 100, 103).unwrap().max_error);
    }
    outcome(worst <= 1e-9, format!("n in {{7, 15, 31}}, 100 points each, max abs diff {worst:.2e} (tol 1e-9)"))
}

fn c4_codeword_energy() -> Outcome {
    let p = PotentialParams::default();
    let mut max_on: f64 = 0.0;
    let mut min_off = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for name in ["hamming7_4", "bch15_7"] {
        let code = ParityCheckMatrix::builtin(name).unwrap();
        for w in enumerate_codebook(&code).unwrap().words() {
            max_on = max_on.max(potential_energy(w, &code, &p).unwrap());
        }
        // Half real-valued points, half bipolar non-codewords.
        let mut drawn = 0;
        while drawn < 1000 {
            let x: Vec<f64> = if drawn % 2 == 0 {
                (0..code.n()).map(|_| rng.random_range(-1.5..1.5)).collect()
            } else {
                (0..code.n()).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
            };
            if is_codeword(&code, &x) {
                continue;
            }
            min_off = min_off.min(potential_energy(&x, &code, &p).unwrap());
            drawn += 1;
        }
    }
    outcome(
        max_on <= 1e-12 && min_off > 1e-6,
        format!("max on codewords {max_on:.1e} (tol 1e-12), min off codewords {min_off:.3e} (> 1e-6)"),
    )
}

fn c5_max_principle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut violations = 0usize;
    let mut steps = 0usize;
    for &c in &[0.1, 0.25, 0.4, 0.5] {
        for _ in 0..100 {
            let mut u: Vec<f64> = (0..63).map(|_| rng.random_range(-2.0..2.0)).collect();
            for _ in 0..20 {
                let next = fdm_step(&u, c);
                let lo = u.iter().copied().fold(0.0, f64::min);
                let hi = u.iter().copied().fold(0.0, f64::max);
                violations += next.iter().filter(|&&v| v < lo - 1e-15 || v > hi + 1e-15).count();
                steps += 1;
                u = next;
            }
        }
    }
    outcome(violations == 0, format!("{steps} steps over c in {{0.1, 0.25, 0.4, 0.5}}, {violations} out-of-range samples"))
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn c6_ssfm_conservation() -> Outcome {
    let grid = NlseGrid::new(NlseGridParams {
        s_sign: 1,
        n_sq: 1.0,
        n_tau: 256,
        tau_span: 32.0,
        ell_xi: 0.025,
        n_steps: 20,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut energy_err: f64 = 0.0;
    let mut inverse_err: f64 = 0.0;
    for _ in 0..10 {
        let u0 = random_field(&mut rng, 256);
        let u = grid.solve(&u0).unwrap();
        let e0 = grid.energy(&u0);
        energy_err = energy_err.max((grid.energy(&u) - e0).abs() / e0);
        inverse_err = inverse_err.max(rel_l2(&grid.reverse_propagate(&u).unwrap(), &u0));
    }
    outcome(
        energy_err <= 1e-10 && inverse_err <= 1e-9,
        format!("energy drift {energy_err:.2e} (tol 1e-10), inverse error {inverse_err:.2e} (tol 1e-9)"),
    )
}

fn nlse_run(n_steps: usize, xi: f64) -> Vec<Complex64> {
    let grid = NlseGrid::new(NlseGridParams {
        s_sign: 1,
        n_sq: 1.0,
        n_tau: 256,
        tau_span: 32.0,
        ell_xi: xi / n_steps as f64,
        n_steps,
    })
    .unwrap();
    let u0: Vec<Complex64> = (0..256)
        .map(|k| {
            let t = grid.coordinate(k);
            Complex64::new(1.5 * (-t * t / 2.0).exp(), 0.0)
        })
        .collect();
    grid.solve(&u0).unwrap()
}

fn c7_ssfm_order() -> Outcome {
    let xi = 1.0;
    let reference = nlse_run(4096, xi);
    let e20 = rel_l2(&nlse_run(20, xi), &reference);
    let e40 = rel_l2(&nlse_run(40, xi), &reference);
    let ratio = e20 / e40;
    outcome(
        (3.0..=5.0).contains(&ratio),
        format!("err(20 steps) {e20:.3e}, err(40 steps) {e40:.3e}, ratio {ratio:.3} (in [3, 5])"),
    )
}

fn demo_grid() -> (HeatGrid, ChannelLayout) {
    let grid = HeatGrid::new(HeatGridParams {
        lambda: 0.2,
        h: 0.005,
        ell: 0.05,
        n_x: 200,
        n_t: 100,
    })
    .unwrap();
    let layout = ChannelLayout::evenly_spaced(&grid, 7, 0.2, SensorPlacement::All, None).unwrap();
    (grid, layout)
}

fn c8_fixed_points() -> Outcome {
    let (grid, layout) = demo_grid();
    let code = ParityCheckMatrix::builtin("hamming7_4").unwrap();
    let mut fixed = 0;
    for gamma in [1.0, 0.1] {
        let params = GfDecoderParams { gamma, ..Default::default() };
        for w in enumerate_codebook(&code).unwrap().words() {
            let y = noiseless(w, &layout, &grid).unwrap();
            let out = gf_decode_from(&y, &layout, &grid, &code, &params, w.clone(), false).unwrap();
            if &out.final_state == w && &out.estimate == w {
                fixed += 1;
            }
        }
    }
    outcome(fixed == 32, format!("{}/16 at gamma 1.0 and 0.1 combined ({fixed}/32)", fixed / 2))
}

fn dominance_lines(report: &bench::SweepReport, ours: DecoderId, base: DecoderId) -> String {
    report
        .curve(ours)
        .iter()
        .map(|g| {
            let b = report.record(base, g.sigma).unwrap();
            format!("s={} {}={:.2e}/{}={:.2e}", g.sigma, ours, g.ber, base, b.ber)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn c9_heat_ber() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::preset("heat_ber").unwrap();
    let levels = cfg.noise_levels.len();
    let trials = cfg.trials;
    let report = run_ber_sweep(cfg, None).unwrap();
    let t = start.elapsed();
    let mut dominated = true;
    let mut common = Vec::new();
    for g in report.curve(DecoderId::Gf) {
        let p = report.record(DecoderId::Peak, g.sigma).unwrap();
        if p.ber <= 0.1 && g.ber >= p.ber {
            dominated = false;
        }
        if g.ber > 0.0 && p.ber > 0.0 {
            common.push((g, p));
        }
    }
    let gf_slope = log_ber_slope(&common.iter().map(|c| c.0).collect::<Vec<_>>());
    let peak_slope = log_ber_slope(&common.iter().map(|c| c.1).collect::<Vec<_>>());
    let steeper = matches!((gf_slope, peak_slope), (Some(g), Some(p)) if g < p);
    outcome(
        levels >= 6 && trials >= 10_000 && dominated && steeper && t <= Duration::from_secs(900),
        format!(
            "{levels} levels x {trials} trials, gf below peak where peak <= 0.1: {dominated}, \
             slope gf {:.3} vs peak {:.3} per dB over {} common points, {:.0}s (limit 900s) [{}]",
            gf_slope.unwrap_or(f64::NAN),
            peak_slope.unwrap_or(f64::NAN),
            common.len(),
            secs(t),
            dominance_lines(&report, DecoderId::Gf, DecoderId::Peak)
        ),
    )
}

fn c10_nlse_ber() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::preset("nlse_ber").unwrap();
    let iterations = cfg.decoder.iterations;
    let trials = cfg.trials;
    let report = run_ber_sweep(cfg, None).unwrap();
    let t = start.elapsed();
    let gf = report.curve(DecoderId::Gf);
    let wins = gf
        .iter()
        .filter(|g| g.ber < report.record(DecoderId::Bp, g.sigma).unwrap().ber)
        .count();
    outcome(
        iterations == 20 && trials >= 1000 && 2 * wins > gf.len() && t <= Duration::from_secs(1800),
        format!(
            "gf below bp at {wins}/{} levels, {trials} trials, {:.0}s (limit 1800s) [{}]",
            gf.len(),
            secs(t),
            dominance_lines(&report, DecoderId::Gf, DecoderId::Bp)
        ),
    )
}

fn c11_ml_oracle() -> Outcome {
    let mut cfg = ExperimentConfig::preset("hamming_ml").unwrap();
    cfg.noise_levels = vec![0.05];
    cfg.trials = 1000;
    cfg.decoders = vec![DecoderId::Gf, DecoderId::Ml];
    let report = run_ber_sweep(cfg, None).unwrap();
    let gf = report.record(DecoderId::Gf, 0.05).unwrap();
    let ml = report.record(DecoderId::Ml, 0.05).unwrap();
    let slack = 3.0 * bench::binomial_std(ml.block_errors, ml.trials);
    outcome(
        gf.block_errors as f64 >= ml.block_errors as f64 - slack && report.oracle_violations().is_empty(),
        format!("1000 trials at sigma 0.05: gf {} block errors, ml {} (slack {slack:.2})", gf.block_errors, ml.block_errors),
    )
}

fn c12_determinism() -> Outcome {
    let mut checks = Vec::new();
    for preset in ["hamming_ml", "nlse_ber", "heat_ber"] {
        let mut cfg = ExperimentConfig::preset(preset).unwrap();
        cfg.trials = 64;
        cfg.noise_levels.truncate(2);
        let a = run_ber_sweep(cfg.clone(), Some(1)).unwrap().to_csv_string();
        let b = run_ber_sweep(cfg.clone(), Some(4)).unwrap().to_csv_string();
        let c = run_ber_sweep(cfg.clone(), Some(1)).unwrap().to_csv_string();
        checks.push((preset, a == b && a == c));
    }
    let mut sim_cfg = ExperimentConfig::preset("heat_demo").unwrap();
    sim_cfg.seed = 3;
    let s1 = bench::simulate(sim_cfg.clone(), None, None, true).unwrap();
    let s2 = bench::simulate(sim_cfg, None, None, true).unwrap();
    checks.push(("simulate", s1 == s2));
    let ok = checks.iter().all(|c| c.1);
    let detail = checks.iter().map(|(n, ok)| format!("{n}={ok}")).collect::<Vec<_>>().join(", ");
    outcome(ok, format!("byte-identical at 1 and 4 threads: {detail}"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("heat gradient oracle", c1_heat_gradient),
        ("nlse gradient oracle", c2_nlse_gradient),
        ("potential gradient equivalence", c3_potential_gradient),
        ("codeword energy", c4_codeword_energy),
        ("fdm max principle", c5_max_principle),
        ("ssfm conservation and inversion", c6_ssfm_conservation),
        ("ssfm second order", c7_ssfm_order),
        ("codeword fixed points", c8_fixed_points),
        ("heat ber reproduction", c9_heat_ber),
        ("nlse ber reproduction", c10_nlse_ber),
        ("ml oracle sanity", c11_ml_oracle),
        ("determinism", c12_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2} {name}: {}", i + 1, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
