//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line with its key numbers and elapsed time.
//!
//! Criteria 2–6 are statistical; their instances and seeds are frozen so
//! every run reproduces the same numbers. Criterion 5 encodes the full
//! published benchmark ordering; the strong-half/weak-half pairing does not
//! beat adjacent-gain pairing under this rate model (see README, "Known
//! deviations"), so that single link is expected to fail and the test
//! reports it honestly rather than relaxing the assertion.
//!
//! Tests share a lock so wall-clock measurements (criterion 8 and the
//! per-criterion budgets) are not contaminated by parallel test threads.

use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crnoma_core::pairing::{adjacent_pairing, random_pairing, upwo_pairing, zoup};
use crnoma_core::power::zouppa;
use crnoma_core::rates::{log2_1p, PairEval};
use crnoma_core::sim::{
    convergence_trace, mix_seed, oracle_gap_study, run_replication, Scheme, Tuning,
};
use crnoma_core::zoa::optimize;
use crnoma_core::{
    bpa, fpa, generate_availability, generate_topology, grid_delta_search, network_ee,
    noma_strong_rate, noma_weak_rate, oma_rate, validate_pairing, Pairing, Scenario, ZoaConfig,
};

static GATE: Mutex<()> = Mutex::new(());

fn serialize() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn budget(name: &str, start: Instant, limit_s: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s,
        "{name}: runtime budget exceeded ({elapsed:.1} s ≥ {limit_s} s)"
    );
}

/// Mean EE per scheme over `reps` replications; `paired_seeds` reuses the
/// same seed list for every call (common random numbers across scenarios).
fn mean_ee(scenario: &Scenario, schemes: &[Scheme], seeds: &[u64], tuning: &Tuning) -> Vec<f64> {
    let mut sums = vec![0.0; schemes.len()];
    for &seed in seeds {
        let out = run_replication(scenario, schemes, seed, tuning).unwrap();
        for (i, o) in out.iter().enumerate() {
            sums[i] += o.ee;
        }
    }
    sums.iter().map(|s| s / seeds.len() as f64).collect()
}

fn point_seeds(base: u64, axis_value: f64, reps: u64) -> Vec<u64> {
    (0..reps).map(|r| mix_seed(base, axis_value, r)).collect()
}

#[test]
fn acceptance_1_formula_exactness() {
    let _g = serialize();
    let start = Instant::now();
    let tol = 1e-12;
    let close = |a: f64, b: f64| (a - b).abs() <= tol;

    // Per-user half-pre-log rate.
    assert!(close(oma_rate(1.0, 1.0), 0.5));
    assert!(close(oma_rate(123.0, 0.0), 0.0));
    assert!(close(oma_rate(1000.0, 0.003), 1.0));

    // Weak user, decoded first, full interference-free expression.
    assert!(close(noma_weak_rate(2.0, 0.5, 1.0), 1.0));
    assert!(close(noma_weak_rate(2.0, 0.0, 1.0), 0.0));
    assert!(close(noma_weak_rate(7.0, 1.0, 1.0), 3.0));

    // Strong user with the residual-interference denominator.
    assert!(close(noma_strong_rate(2.0, 0.5, 0.5, 1.0), log2_1p(0.5)));
    assert!(close(noma_strong_rate(2.0, 0.0, 0.5, 1.0), 0.0));
    assert!(close(noma_strong_rate(3.0, 1.0, 0.0, 1.0), 2.0));
    // Degenerate equivalence: full power, no interference = doubled OMA rate.
    for (snr, g) in [(10.0, 0.3), (1000.0, 0.007), (5.0, 2.0)] {
        assert!(close(noma_strong_rate(snr, 1.0, 0.0, g), 2.0 * oma_rate(snr, g)));
    }

    // Preset split.
    assert_eq!(fpa(), (0.75, 0.25));

    // Closed-form split.
    let (dm, dv) = bpa(0.5, 0.5, 0.0, 0.0).unwrap();
    assert!(close(dm, 0.5) && close(dv, 0.5));
    let (dm, dv) = bpa(0.0, 1.0, 42.0, 3.0).unwrap();
    assert!(close(dm, 1.0 / 3.0) && close(dv, 2.0 / 3.0));

    // Network EE additivity.
    let pair = |rs: f64, rw: f64| PairEval {
        rate_strong: rs,
        rate_weak: rw,
        oma_rate_strong: 0.0,
        oma_rate_weak: 0.0,
        delta_strong: 0.5,
        delta_weak: 0.5,
        pair_power: 1.0,
        pair_ee: (rs + rw) / 1.0,
    };
    assert!(close(network_ee(&[pair(2.0, 1.0)], 10.0).unwrap(), 3.0));
    assert!(close(
        network_ee(&[pair(2.0, 1.0), pair(2.0, 1.0)], 10.0).unwrap(),
        6.0
    ));

    budget("acceptance 1", start, 1.0);
    println!(
        "ACCEPTANCE 1 (formula exactness): PASS — 18 hand values within 1e-12 ({:.3} s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_2_oracle_equivalence_pairing() {
    let _g = serialize();
    let start = Instant::now();
    let scenario = Scenario {
        n_users: 6,
        m_channels: 4,
        availability_prob: 0.8,
        ..Scenario::default()
    };
    let rows = oracle_gap_study(&scenario, 50, &Tuning::default()).unwrap();
    assert_eq!(rows.len(), 50);

    let mut exceed = 0;
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for row in &rows {
        if !row.feasible {
            within += 1; // no complete pairing exists for anyone; vacuous
            continue;
        }
        if row.zoup_ee > row.oracle_ee + 1e-9 {
            exceed += 1;
        }
        if row.zoup_ee >= 0.98 * row.oracle_ee {
            within += 1;
        }
        worst = worst.max(row.gap);
    }
    assert_eq!(exceed, 0, "heuristic exceeded the exhaustive oracle");
    assert!(
        within >= 45,
        "only {within}/50 instances within 2% of the oracle"
    );
    budget("acceptance 2", start, 30.0);
    println!(
        "ACCEPTANCE 2 (oracle equivalence, pairing): PASS — {within}/50 within 2%, worst gap {:.4}, never above oracle ({:.3} s)",
        worst,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_3_oracle_equivalence_power() {
    let _g = serialize();
    let start = Instant::now();
    let scenario = Scenario {
        n_users: 2,
        m_channels: 1,
        availability_prob: 1.0,
        ..Scenario::default()
    };
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let topology = generate_topology(&scenario, &mut rng);
        let (s, w) = if topology.gains[0] >= topology.gains[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let pairing = Pairing {
            pairs: vec![(s, w)],
            channel_of_pair: vec![0],
            unpaired: vec![],
        };
        // One-dimensional split search; a wide population makes the corner
        // of the box reachable before the plateau stop fires.
        let cfg = ZoaConfig {
            population_size: 100,
            ..ZoaConfig::for_unit_box(1, 777 + i)
        };
        let found = zouppa(&pairing, &scenario, &topology, &cfg).unwrap().ee;
        let (_, grid_ee) =
            grid_delta_search(topology.gains[s], topology.gains[w], scenario.snr_linear(), 1e-3)
                .unwrap()
                .unwrap();
        let rel = (found - grid_ee).abs() / grid_ee;
        if rel <= 0.01 {
            within += 1;
        }
        worst = worst.max(rel);
    }
    assert!(
        within >= 95,
        "only {within}/100 single-pair searches within 1% of the 1e-3 grid optimum"
    );
    budget("acceptance 3", start, 30.0);
    println!(
        "ACCEPTANCE 3 (oracle equivalence, power): PASS — {within}/100 within 1%, worst rel dev {:.5} ({:.3} s)",
        worst,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_4_dominance_and_validation() {
    let _g = serialize();
    let start = Instant::now();
    let scenario = Scenario::default();
    let tuning = Tuning::default();
    let rule = crnoma_core::PowerRule::Bpa {
        beta2: scenario.beta2,
    };
    let mut violations = 0usize;
    for rep in 0..100u64 {
        let seed = mix_seed(scenario.rng_seed, scenario.snr_db, rep);
        let topology =
            generate_topology(&scenario, &mut ChaCha8Rng::seed_from_u64(sub(seed, 1)));
        let avail =
            generate_availability(&scenario, &mut ChaCha8Rng::seed_from_u64(sub(seed, 2)))
                .unwrap();

        let cfg = ZoaConfig {
            population_size: tuning.population_size,
            max_iterations: tuning.max_iterations,
            ..ZoaConfig::for_unit_box(scenario.n_users, sub(seed, 4))
        };
        let z = zoup(&scenario, &topology, &avail, &rule, &cfg).unwrap();
        let pcfg = ZoaConfig {
            population_size: tuning.population_size,
            max_iterations: tuning.max_iterations,
            ..ZoaConfig::for_unit_box(z.pairing.pairs.len(), sub(seed, 5))
        };
        let zp = zouppa(&z.pairing, &scenario, &topology, &pcfg).unwrap();

        // Exact dominance chain, zero tolerance: optimized splits ≥ the
        // closed-form split of the same pairing (its population seed) ≥
        // the injected pairing seeds.
        assert!(zp.ee >= zp.bpa_seed_ee, "rep {rep}: power stage below its seed");
        assert_eq!(
            zp.bpa_seed_ee, z.ee,
            "rep {rep}: seed member EE differs from the pairing-stage EE"
        );
        for (k, &s) in z.seed_ee.iter().enumerate() {
            assert!(z.ee >= s, "rep {rep}: pairing stage below injected seed {k}");
        }

        // Validator across every pairing-producing scheme.
        let mut rng3 = ChaCha8Rng::seed_from_u64(sub(seed, 3));
        let candidates = [
            random_pairing(&topology, &avail, &mut rng3).unwrap(),
            adjacent_pairing(&topology, &avail),
            upwo_pairing(&topology, &avail),
            z.pairing.clone(),
        ];
        for p in &candidates {
            if validate_pairing(p, &scenario, &topology, &avail, None).is_err() {
                violations += 1;
            }
        }
        if validate_pairing(&z.pairing, &scenario, &topology, &avail, Some(&zp.allocation))
            .is_err()
        {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "validator reported constraint violations");
    budget("acceptance 4", start, 600.0);
    println!(
        "ACCEPTANCE 4 (dominance + validation): PASS — exact chain on 100 replications, 0 violations ({:.3} s)",
        start.elapsed().as_secs_f64()
    );
}

fn sub(seed: u64, tag: u64) -> u64 {
    // Mirrors the harness's per-component stream derivation.
    fn smix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^ (x >> 31)
    }
    smix(seed ^ smix(tag))
}

#[test]
fn acceptance_5_scheme_ordering() {
    let _g = serialize();
    let start = Instant::now();
    let tuning = Tuning::default();
    let schemes = [
        Scheme::Oma,
        Scheme::Random,
        Scheme::Adjacent,
        Scheme::Upwo,
        Scheme::Zoup,
        Scheme::Zouppa,
    ];
    let base = Scenario::default();

    let means_at = |snr: f64| {
        let sc = Scenario {
            snr_db: snr,
            ..base.clone()
        };
        mean_ee(&sc, &schemes, &point_seeds(base.rng_seed, snr, 100), &tuning)
    };
    let m30 = means_at(base.snr_db);
    let m15 = means_at(15.0);
    let m40 = means_at(40.0);
    let idx = |s: Scheme| schemes.iter().position(|&x| x == s).unwrap();

    let chain = [
        ("zouppa > zoup", m30[idx(Scheme::Zouppa)], m30[idx(Scheme::Zoup)]),
        ("zoup > upwo", m30[idx(Scheme::Zoup)], m30[idx(Scheme::Upwo)]),
        ("upwo > adjacent", m30[idx(Scheme::Upwo)], m30[idx(Scheme::Adjacent)]),
        ("adjacent > random", m30[idx(Scheme::Adjacent)], m30[idx(Scheme::Random)]),
        ("random > oma", m30[idx(Scheme::Random)], m30[idx(Scheme::Oma)]),
    ];
    let mut failed = Vec::new();
    for (label, lhs, rhs) in chain {
        if lhs > rhs {
            println!("  ordering link {label}: holds ({lhs:.3} vs {rhs:.3})");
        } else {
            println!("  ordering link {label}: VIOLATED ({lhs:.3} vs {rhs:.3})");
            failed.push(label);
        }
    }

    let gain_15 = m15[idx(Scheme::Zouppa)] / m15[idx(Scheme::Upwo)];
    println!("  15 dB: zouppa/upwo = {gain_15:.4} (need ≥ 1.20)");
    if gain_15 < 1.2 {
        failed.push("zouppa ≥ 1.2 × upwo @ 15 dB");
    }
    let gain_15_zoup = m15[idx(Scheme::Zouppa)] / m15[idx(Scheme::Zoup)];
    println!("  15 dB: zouppa/zoup = {gain_15_zoup:.4} (need ≥ 1.10)");
    if gain_15_zoup < 1.10 {
        failed.push("zouppa ≥ 1.1 × zoup @ 15 dB");
    }
    let gain_40 = m40[idx(Scheme::Zoup)] / m40[idx(Scheme::Upwo)];
    println!("  40 dB: zoup/upwo = {gain_40:.4} (need ≥ 1.03)");
    if gain_40 < 1.03 {
        failed.push("zoup ≥ 1.03 × upwo @ 40 dB");
    }

    budget("acceptance 5", start, 900.0);
    assert!(
        failed.is_empty(),
        "ACCEPTANCE 5 (scheme ordering): FAIL — violated: {failed:?}. The strong-half/weak-half \
         pairing maximizes within-pair gain disparity, which this rate model penalizes: the \
         strong user's residual interference grows with its own gain, so the strong rate \
         saturates at log2(1+δ_μ/δ_ν) and widely separated pairs waste the strong gain, while \
         adjacent-gain pairs keep both users in the unsaturated regime. The remaining links and \
         both improvement floors hold; see README, Known deviations."
    );
    println!(
        "ACCEPTANCE 5 (scheme ordering): PASS ({:.3} s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_6_trend_reproduction() {
    let _g = serialize();
    let start = Instant::now();
    let tuning = Tuning::default();
    let base = Scenario::default();
    // Common random numbers: one frozen seed list reused at every axis
    // value, so axis comparisons are paired and Monte-Carlo noise cancels.
    let seeds = point_seeds(base.rng_seed, 0.0, 40);

    // Counts inversions of the required direction along one axis; an axis
    // passes with at most one inversion smaller than 2% relative.
    let check_axis = |axis: &str,
                      schemes: &[Scheme],
                      scenarios: &[Scenario],
                      nondecreasing: bool|
     -> (usize, f64) {
        let means: Vec<Vec<f64>> = scenarios
            .iter()
            .map(|sc| mean_ee(sc, schemes, &seeds, &tuning))
            .collect();
        let mut inversions = 0;
        let mut worst = 0.0f64;
        for (i, &scheme) in schemes.iter().enumerate() {
            for w in means.windows(2) {
                let (prev, next) = (w[0][i], w[1][i]);
                let bad = if nondecreasing { next < prev } else { next > prev };
                if bad {
                    let mag = (next - prev).abs() / prev.max(f64::MIN_POSITIVE);
                    inversions += 1;
                    worst = worst.max(mag);
                    println!(
                        "  {axis}: inversion for {scheme} ({prev:.4} → {next:.4}, {:.2}%)",
                        mag * 100.0
                    );
                }
            }
        }
        assert!(
            inversions <= 1 && worst < 0.02,
            "{axis}: {inversions} inversion(s), worst {:.2}% (allowed: one below 2%)",
            worst * 100.0
        );
        (inversions, worst)
    };

    let with = |f: &dyn Fn(&mut Scenario)| {
        let mut sc = base.clone();
        f(&mut sc);
        sc
    };

    // (a) nondecreasing in SNR for every scheme.
    let snr_scenarios: Vec<Scenario> = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
        .iter()
        .map(|&v| with(&|sc: &mut Scenario| sc.snr_db = v))
        .collect();
    let (ia, _) = check_axis("snr", &Scheme::ALL, &snr_scenarios, true);

    // (b) nonincreasing in the path-loss exponent.
    let chi_scenarios: Vec<Scenario> = [3.0, 3.5, 4.0, 4.5, 5.0, 5.5]
        .iter()
        .map(|&v| with(&|sc: &mut Scenario| sc.path_loss_exp = v))
        .collect();
    let (ib, _) = check_axis("path_loss_exp", &Scheme::ALL, &chi_scenarios, false);

    // (c) nonincreasing in the coverage radius.
    let radius_scenarios: Vec<Scenario> = [100.0, 200.0, 300.0, 400.0, 500.0]
        .iter()
        .map(|&v| with(&|sc: &mut Scenario| sc.coverage_radius = v))
        .collect();
    let (ic, _) = check_axis("coverage_radius", &Scheme::ALL, &radius_scenarios, false);

    // (d) nondecreasing in β₂ for the schemes whose split is the closed form.
    let beta_schemes = [Scheme::Random, Scheme::Adjacent, Scheme::Upwo, Scheme::Zoup];
    let beta_scenarios: Vec<Scenario> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&v| with(&|sc: &mut Scenario| sc.beta2 = v))
        .collect();
    let (id, _) = check_axis("beta2", &beta_schemes, &beta_scenarios, true);

    // (e) the one-user-per-channel baseline decays strictly once users
    // outnumber channels (fixed M = 60).
    let n_values = [20usize, 40, 60, 80, 100, 120];
    let oma_means: Vec<f64> = n_values
        .iter()
        .map(|&n| {
            let sc = with(&|sc: &mut Scenario| sc.n_users = n);
            mean_ee(&sc, &[Scheme::Oma], &seeds, &tuning)[0]
        })
        .collect();
    for w in n_values.windows(2).zip(oma_means.windows(2)) {
        let (prev_n, means) = (w.0[0], w.1);
        if prev_n >= base.m_channels {
            assert!(
                means[1] < means[0],
                "one-per-channel EE did not drop past the channel count (N {} → {}: {:.4} → {:.4})",
                w.0[0],
                w.0[1],
                means[0],
                means[1]
            );
        }
    }
    println!(
        "  n_users (one-per-channel means): {:?}",
        oma_means.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>()
    );

    budget("acceptance 6", start, 1800.0);
    println!(
        "ACCEPTANCE 6 (trend reproduction): PASS — inversions per axis: snr {ia}, chi {ib}, radius {ic}, beta2 {id}, decay past N=M confirmed ({:.3} s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_7_convergence() {
    let _g = serialize();
    let start = Instant::now();

    // Best-fitness traces are nondecreasing on real pairing searches.
    let scenario = Scenario::default();
    for seed in 0..5u64 {
        let trace = convergence_trace(&scenario, seed, &Tuning::default()).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] >= w[0], "trace decreased");
        }
    }

    // Plateau stop: a constant objective halts within 2 iterations.
    let cfg = ZoaConfig::for_box(vec![(-1.0, 1.0); 4], 99);
    let result = optimize(|_| 0.0, &cfg).unwrap();
    assert!(
        result.iterations <= 2,
        "constant objective ran {} iterations",
        result.iterations
    );

    budget("acceptance 7", start, 5.0);
    println!(
        "ACCEPTANCE 7 (convergence): PASS — 5 nondecreasing traces; constant objective stopped after {} iterations ({:.3} s)",
        result.iterations,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_8_complexity_scaling() {
    let _g = serialize();
    let start = Instant::now();
    let rule = crnoma_core::PowerRule::Bpa { beta2: 1.0 };
    let mut points = Vec::new();
    for &n in &[20usize, 40, 80] {
        let scenario = Scenario {
            n_users: n,
            ..Scenario::default()
        };
        let mut per_iter = Vec::new();
        for rep in 0..7u64 {
            let seed = mix_seed(11, n as f64, rep);
            let topology =
                generate_topology(&scenario, &mut ChaCha8Rng::seed_from_u64(sub(seed, 1)));
            let avail =
                generate_availability(&scenario, &mut ChaCha8Rng::seed_from_u64(sub(seed, 2)))
                    .unwrap();
            let cfg = ZoaConfig {
                max_iterations: 30,
                ..ZoaConfig::for_unit_box(n, sub(seed, 4))
            };
            let t = Instant::now();
            let z = zoup(&scenario, &topology, &avail, &rule, &cfg).unwrap();
            per_iter.push(t.elapsed().as_secs_f64() * 1e3 / z.iterations.max(1) as f64);
        }
        per_iter.sort_by(f64::total_cmp);
        let median = per_iter[per_iter.len() / 2];
        println!("  N={n}: median per-iteration {median:.4} ms");
        points.push(((n as f64).ln(), median.ln()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        slope <= 2.3,
        "per-iteration cost grows faster than quadratic in users (log-log slope {slope:.3})"
    );
    budget("acceptance 8", start, 300.0);
    println!(
        "ACCEPTANCE 8 (complexity scaling): PASS — log-log slope {slope:.3} ≤ 2.3 over N ∈ {{20,40,80}} ({:.3} s)",
        start.elapsed().as_secs_f64()
    );
}
