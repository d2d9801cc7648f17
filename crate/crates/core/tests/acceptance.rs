//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use chaosrand::bench::{run_throughput, CycleCostModel};
use chaosrand::generator::{GeneratorKind, GeneratorSpec};
use chaosrand::lfsr::{measure_period, LfsrConfig, MultiLfsr, PolynomialTable};
use chaosrand::logistic::{LogisticConfig, LogisticGenerator};
use chaosrand::pendulum::{
    pendulum_accel, pendulum_step, total_energy, FixedCore, FixedState, Method, PendulumParams,
    PendulumState, ANGLE_FORMAT,
};
use chaosrand::stats::{
    chi_square_fit, erfc, gamma_q, irwin_hall_cdf, BitStream, StatTest, Verdict,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

use common::{accel_oracle, hex_lines, relative_error, special_oracle};

const ALPHA: f64 = 0.01;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn stream(kind: GeneratorKind, n_bits: usize) -> BitStream {
    let mut g = GeneratorSpec::default_for(kind).build().unwrap();
    let mut bytes = vec![0u8; n_bits / 8];
    g.fill_bytes(&mut bytes).unwrap();
    BitStream::from_bytes(bytes).unwrap()
}

fn lfsr_period_law() -> Outcome {
    let start = Instant::now();
    let mut checked = 0u64;
    let mut bad = Vec::new();
    for (width, poly) in PolynomialTable::builtin().iter().filter(|&(w, _)| w <= 12) {
        let period = (1u64 << width) - 1;
        for seed in 1..=period {
            let config = LfsrConfig::new(width, poly, seed).unwrap();
            if measure_period(&config, period + 1) != Some(period) {
                bad.push((width, seed));
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 10.0,
        format!(
            "{checked} (width, seed) pairs, {} mismatches, {secs:.2} s",
            bad.len()
        ),
    )
}

fn multi_lfsr_period_extension() -> Outcome {
    let bank = |widths: &[u32]| {
        let configs: Vec<_> = widths
            .iter()
            .map(|&w| LfsrConfig::with_builtin_polynomial(w, 1).unwrap())
            .collect();
        MultiLfsr::new(&configs).unwrap()
    };
    let small = bank(&[3, 4]).joint_period(1_000);
    let large = bank(&[7, 11]).joint_period(1_000_000);
    let default = MultiLfsr::default_bank();
    let periods: Vec<u128> = default
        .banks()
        .iter()
        .map(|b| b.config().maximal_period() as u128)
        .collect();
    let product: u128 = periods.iter().product();
    let longest = *periods.iter().max().unwrap();
    let nominal = default.nominal_period();
    let extension = nominal / longest;
    outcome(
        small == Some(105) && large == Some(259_969) && nominal == product && extension > 200,
        format!(
            "3+4 -> {small:?}, 7+11 -> {large:?}, 31/29/23 bank period {nominal} = product, {extension}x its longest bank"
        ),
    )
}

fn latency_model() -> Outcome {
    let model = CycleCostModel::default();
    let bands = [
        (GeneratorKind::MultiLfsr, 20.0, 10.0, 20.0),
        (GeneratorKind::Logistic, 100.0, 50.0, 100.0),
        (GeneratorKind::Pendulum, 500.0, 200.0, 500.0),
    ];
    let mut modeled_ok = true;
    let mut notes = Vec::new();
    for (kind, want, lo, hi) in bands {
        let ns = model.estimate_cycles(kind, 1).unwrap().1 * 1e9;
        modeled_ok &= (ns - want).abs() < 1e-9 && ns >= lo - 1e-9 && ns <= hi + 1e-9;
        notes.push(format!("{kind} {ns:.0} ns"));
    }
    let mut ordered_runs = 0;
    for _ in 0..3 {
        let rate = |kind| {
            run_throughput(&GeneratorSpec::default_for(kind), 1_000_000, &model)
                .unwrap()
                .wallclock_samples_per_s
        };
        let (m, l, p) = (
            rate(GeneratorKind::MultiLfsr),
            rate(GeneratorKind::Logistic),
            rate(GeneratorKind::Pendulum),
        );
        if m > l && l > p {
            ordered_runs += 1;
        }
        notes.push(format!("[{m:.2e} > {l:.2e} > {p:.2e} samples/s]"));
    }
    outcome(
        modeled_ok && ordered_runs >= 2,
        format!(
            "{}; wall-clock order held in {ordered_runs}/3 runs",
            notes.join(", ")
        ),
    )
}

fn randomness_ranking() -> Outcome {
    let start = Instant::now();
    let n = 1_000_000;
    let verdicts = |kind| {
        let s = stream(kind, n);
        StatTest::ALL.map(|t| t.run(&s, ALPHA).unwrap().verdict)
    };
    let chaotic_pass = [GeneratorKind::Logistic, GeneratorKind::Pendulum]
        .into_iter()
        .all(|k| verdicts(k).iter().all(|&v| v == Verdict::Pass));

    let bare = GeneratorSpec::Lfsr {
        width: 16,
        polynomial: None,
        seed: 0xACE1,
        word_bits: 8,
    };
    let mut g = bare.build().unwrap();
    let mut bytes = vec![0u8; n / 8];
    g.fill_bytes(&mut bytes).unwrap();
    let bare_stream = BitStream::from_bytes(bytes).unwrap();
    let bare_reports = StatTest::ALL.map(|t| t.run(&bare_stream, ALPHA).unwrap());
    let bare_fails = bare_reports.iter().any(|r| r.failed());

    let multi = verdicts(GeneratorKind::MultiLfsr);
    let multi_ok = multi[0] == Verdict::Pass && multi[2] == Verdict::Pass;
    let secs = start.elapsed().as_secs_f64();
    let bare_p: Vec<String> = bare_reports
        .iter()
        .map(|r| format!("{} p={:.3}", r.test, r.p_value))
        .collect();
    outcome(
        chaotic_pass && bare_fails && multi_ok && secs < 60.0,
        format!(
            "logistic+pendulum all pass: {chaotic_pass}; bare width-16 LFSR fails one: {bare_fails} ({}); multi-LFSR monobit+chi-square: {multi_ok}; {secs:.1} s",
            bare_p.join(", ")
        ),
    )
}

fn pendulum_physics() -> Outcome {
    let cases = accel_oracle();
    let worst = cases
        .iter()
        .map(|c| {
            let d = pendulum_accel(&c.state, &c.params);
            relative_error(d.domega1, c.domega1).max(relative_error(d.domega2, c.domega2))
        })
        .fold(0.0, f64::max);

    let params = PendulumParams::default();
    let mut s = PendulumState::new(2.0, 1.0, 0.0, 0.0).unwrap();
    let e0 = total_energy(&s, &params);
    let mut drift: f64 = 0.0;
    for _ in 0..100_000 {
        s = pendulum_step(&s, &params, 1e-4, Method::Rk4).unwrap();
        drift = drift.max(((total_energy(&s, &params) - e0) / e0).abs());
    }

    let pi = std::f64::consts::PI;
    let core = FixedCore::new(&params, 1e-3).unwrap();
    let mut equilibria_exact = true;
    for (t1, t2) in [(0.0, 0.0), (pi, pi), (pi, 0.0), (0.0, pi)] {
        let rest = PendulumState::new(t1, t2, 0.0, 0.0).unwrap();
        let mut real = rest;
        for _ in 0..1000 {
            real = pendulum_step(&real, &params, 1e-3, Method::Rk4).unwrap();
        }
        equilibria_exact &=
            (real.theta1, real.theta2, real.omega1, real.omega2) == (t1, t2, 0.0, 0.0);
        let start = FixedState::from_state(&rest).unwrap();
        let mut fixed = start;
        for _ in 0..1000 {
            core.step(&mut fixed);
        }
        equilibria_exact &= fixed == start;
    }
    let upright = FixedState::from_state(&PendulumState::new(pi, pi, 0.0, 0.0).unwrap()).unwrap();
    equilibria_exact &= upright.theta1 == -ANGLE_FORMAT.pi_raw();

    outcome(
        worst <= 1e-12 && drift < 1e-6 && equilibria_exact,
        format!(
            "accel worst rel err {worst:.2e} over {} states; RK4 energy drift {drift:.2e} over 10 s; equilibria exact: {equilibria_exact}",
            cases.len()
        ),
    )
}

fn logistic_chaos() -> Outcome {
    let r_raw = LogisticConfig::default().r().raw();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut diverged = 0;
    let mut trials = 0;
    while trials < 1000 {
        let x0 = rng.gen_range(1u32 << 20..u32::MAX - (1 << 20));
        let (Ok(a), Ok(b)) = (
            LogisticConfig::from_raw(r_raw, x0, 0, 8),
            LogisticConfig::from_raw(r_raw, x0 + 4, 0, 8),
        ) else {
            continue;
        };
        trials += 1;
        let (mut ga, mut gb) = (LogisticGenerator::new(a), LogisticGenerator::new(b));
        for _ in 0..100 {
            ga.step();
            gb.step();
            if (ga.x_f64() - gb.x_f64()).abs() > 0.1 {
                diverged += 1;
                break;
            }
        }
    }

    let mut violations = 0u64;
    let mut recoveries = 0u64;
    let mut steps = 0u64;
    while steps < 100_000_000 {
        let x0 = rng.next_u32().max(1);
        let Ok(config) = LogisticConfig::from_raw(r_raw, x0, 0, 8) else {
            continue;
        };
        let mut g = LogisticGenerator::new(config);
        for _ in 0..1_000_000 {
            g.step();
            violations += (g.state_raw() == 0) as u64;
        }
        steps += 1_000_000;
        let d = g.diagnostics();
        recoveries += d.degenerate_recoveries + d.cycle_recoveries;
    }
    outcome(
        diverged >= 950 && violations == 0,
        format!("{diverged}/1000 seeds diverged by 0.1 within 100 steps; {steps} steps, {violations} closure violations, {recoveries} recoveries"),
    )
}

fn clt_shaping() -> Outcome {
    let mut g = LogisticGenerator::ready(LogisticConfig::default());
    let n = 100_000;
    let samples: Vec<f64> = (0..n).map(|_| g.clt_gaussian(12).unwrap()).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let edges: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.25).collect();
    let fit = chi_square_fit(&samples, &edges, |x| irwin_hall_cdf(x + 6.0, 12), ALPHA).unwrap();
    outcome(
        mean.abs() <= 0.02 && (0.9..=1.1).contains(&var) && fit.passed(),
        format!(
            "mean {mean:.4}, variance {var:.4}, Irwin-Hall fit p = {:.3}",
            fit.p_value
        ),
    )
}

fn suite_calibration() -> Outcome {
    let mut rejections = [0u32; 4];
    let mut not_applicable = 0;
    for i in 0..1000u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(i);
        let mut bytes = vec![0u8; 1 << 14];
        rng.fill_bytes(&mut bytes);
        let s = BitStream::from_bytes(bytes).unwrap();
        for (j, t) in StatTest::ALL.iter().enumerate() {
            match t.run(&s, ALPHA).unwrap().verdict {
                Verdict::Fail => rejections[j] += 1,
                Verdict::NotApplicable => not_applicable += 1,
                Verdict::Pass => {}
            }
        }
    }
    let rates_ok = rejections.iter().all(|&r| (2..=30).contains(&r));

    let cases = special_oracle();
    let worst = cases
        .iter()
        .map(|c| {
            let got = if c.function == "erfc" {
                erfc(c.x)
            } else {
                gamma_q(c.a, c.x).unwrap()
            };
            relative_error(got, c.value)
        })
        .fold(0.0, f64::max);
    let rates: Vec<String> = StatTest::ALL
        .iter()
        .zip(rejections)
        .map(|(t, r)| format!("{t} {:.3}", r as f64 / 1000.0))
        .collect();
    outcome(
        rates_ok && worst <= 1e-10,
        format!(
            "rejection rates {} ({not_applicable} gated); special functions worst rel err {worst:.2e} over {} cases",
            rates.join(", "),
            cases.len()
        ),
    )
}

fn reproducibility() -> Outcome {
    let mut notes = Vec::new();
    let mut all = true;
    for (kind, name) in [
        (GeneratorKind::Logistic, "golden_logistic.hex"),
        (GeneratorKind::Pendulum, "golden_pendulum.hex"),
        (GeneratorKind::MultiLfsr, "golden_multi_lfsr.hex"),
    ] {
        let want = hex_lines(name);
        let mut g = GeneratorSpec::default_for(kind).build().unwrap();
        let same = want.len() == 10_000 && want.iter().all(|&w| g.next_output().unwrap() == w);
        all &= same;
        notes.push(format!(
            "{kind} {}",
            if same { "match" } else { "MISMATCH" }
        ));
    }
    outcome(all, notes.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("LFSR period law", lfsr_period_law),
        ("multi-LFSR period extension", multi_lfsr_period_extension),
        ("latency model", latency_model),
        ("randomness ranking", randomness_ranking),
        ("double-pendulum physics", pendulum_physics),
        ("logistic chaos", logistic_chaos),
        ("CLT shaping", clt_shaping),
        ("statistical-suite calibration", suite_calibration),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += !o.pass as usize;
        println!(
            "{} {}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
