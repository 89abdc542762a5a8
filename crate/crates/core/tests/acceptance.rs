//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use ordiso::oracle::{brute_force, dykstra_project};
use ordiso::{
    gcm_check, isotonic_fit, kkt_check, solve, IsotonicProblem, Method, OrderedConeProblem, PairFit, PairedSample,
    SolverConfig,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const DYKSTRA_TOL: f64 = 1e-12;
const DYKSTRA_ROUNDS: usize = 10_000_000;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn dual(s: &PairedSample, config: &SolverConfig) -> ordiso::Solution {
    solve(s, Method::Dual, config, 1e-6).unwrap()
}

fn pair_diff(p: &PairFit, q: &PairFit) -> f64 {
    max_abs_diff(p.a.values(), q.a.values()).max(max_abs_diff(p.b.values(), q.b.values()))
}

fn rel(p: f64, q: f64) -> f64 {
    let scale = p.abs().max(q.abs());
    if scale == 0.0 {
        0.0
    } else {
        (p - q).abs() / scale
    }
}

fn tiny_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let cfg = SolverConfig::default();
    let (mut worst_brute, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let n = r.gen_range(1..=3);
        let s = random_sample(&mut r, n);
        let d = dual(&s, &cfg).fit;
        let g = solve(&s, Method::GeneralizedPava, &cfg, 1e-6).unwrap().fit;
        let o = dykstra_project(s.y(), s.z(), s.w1(), s.w2(), DYKSTRA_TOL, DYKSTRA_ROUNDS).unwrap().fit;
        let bf = brute_force(&s, 5e-3).unwrap();
        for f in [&d, &g, &o] {
            worst_brute = worst_brute.max((f.objective - bf.objective).abs());
        }
        worst_rel = worst_rel
            .max(rel(d.objective, g.objective))
            .max(rel(d.objective, o.objective))
            .max(rel(g.objective, o.objective));
    }
    let t = start.elapsed();
    outcome(
        worst_brute <= 1e-2 && worst_rel <= 1e-8 && within(t, 120.0),
        format!(
            "500 instances n<=3: max |obj - brute| {worst_brute:.2e} (<= 1e-2), max relative objective gap {worst_rel:.2e} (<= 1e-8), {:.1}s (< 120s)",
            t.as_secs_f64()
        ),
    )
}

fn moderate_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let cfg = SolverConfig::default();
    let (mut worst, mut converged, mut kkt_failures, mut dykstra_unconverged) = (0.0f64, 0, 0, 0);
    for _ in 0..1000 {
        let n = r.gen_range(1..=50);
        let s = random_sample(&mut r, n);
        let sol = dual(&s, &cfg);
        let o = dykstra_project(s.y(), s.z(), s.w1(), s.w2(), DYKSTRA_TOL, DYKSTRA_ROUNDS).unwrap();
        dykstra_unconverged += usize::from(!o.converged);
        worst = worst.max(pair_diff(&sol.fit, &o.fit));
        if sol.diagnostics.converged {
            converged += 1;
            if !kkt_check(&s, &sol.fit, &sol.dual.lambda, 1e-6).unwrap().passed() {
                kkt_failures += 1;
            }
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-6 && kkt_failures == 0 && dykstra_unconverged == 0 && within(t, 300.0),
        format!(
            "1000 instances n<=50: max |dual - dykstra| {worst:.2e} (<= 1e-6), {converged} converged, {kkt_failures} failed kkt at 1e-6, {:.1}s (< 300s)",
            t.as_secs_f64()
        ),
    )
}

/// A random nondecreasing step function with a handful of jumps.
fn step_vector(r: &mut ChaCha8Rng, n: usize, out: &mut [f64]) {
    let jumps = r.gen_range(0..=10);
    let mut cuts: Vec<usize> = (0..jumps).map(|_| r.gen_range(0..n)).collect();
    cuts.sort_unstable();
    let mut level = r.gen_range(-4.0..4.0);
    let mut from = 0;
    for cut in cuts.into_iter().chain([n]) {
        out[from..cut].fill(level);
        from = from.max(cut);
        level += r.gen_range(0.0..2.0);
    }
}

fn single_curve() -> Outcome {
    let start = Instant::now();
    let mut r = rng(303);
    let (mut gcm_failures, mut idem_failures, mut worst_ip) = (0, 0, f64::NEG_INFINITY);
    let mut c = vec![0.0; 1000];
    for i in 0..10_000 {
        let n = r.gen_range(1..=1000);
        let mut data = normals(&mut r, n);
        if i % 2 == 1 {
            // coarse values, so ties and flat stretches occur
            for t in &mut data {
                *t = (*t * 2.0).round() / 2.0;
            }
        }
        let w = weights(&mut r, n);
        let p = IsotonicProblem::new(data.clone(), w.clone()).unwrap();
        let f = isotonic_fit(&p).into_values();
        if !gcm_check(&p, &f, 1e-9).unwrap().passed() {
            gcm_failures += 1;
        }
        if iso(&f, &w) != f {
            idem_failures += 1;
        }
        let resid: Vec<f64> = (0..n).map(|j| w[j] * (data[j] - f[j])).collect();
        for _ in 0..100 {
            let c = &mut c[..n];
            step_vector(&mut r, n, c);
            let ip: f64 = (0..n).map(|j| resid[j] * (c[j] - f[j])).sum();
            worst_ip = worst_ip.max(ip);
        }
    }
    let t = start.elapsed();
    outcome(
        gcm_failures == 0 && idem_failures == 0 && worst_ip <= 1e-9 && within(t, 60.0),
        format!(
            "10^4 instances n<=1000: {gcm_failures} gcm failures at 1e-9, {idem_failures} not idempotent, max projection inner product {worst_ip:.2e} (<= 1e-9), {:.1}s (< 60s)",
            t.as_secs_f64()
        ),
    )
}

fn certified_instance() -> Outcome {
    let s = PairedSample::unweighted(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
    let cfg = SolverConfig::default();
    let (a_ref, b_ref, l_ref) = ([1.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 1.0], [2.0 / 3.0, 0.0]);
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, method) in [("dual", Method::Dual), ("pava", Method::GeneralizedPava), ("dykstra", Method::Dykstra)] {
        let sol = solve(&s, method, &cfg, 1e-6).unwrap();
        let fit = &sol.fit;
        let da = max_abs_diff(fit.a.values(), &a_ref).max(max_abs_diff(fit.b.values(), &b_ref));
        let dobj = (fit.objective - 2.0 / 3.0).abs();
        let dl = max_abs_diff(&sol.dual.lambda, &l_ref);
        let kkt = kkt_check(&s, fit, &sol.dual.lambda, 1e-9).unwrap().passed();
        ok &= da <= 1e-8 && dobj <= 1e-8 && dl <= 1e-6 && kkt;
        notes.push(format!("{name}: fit {da:.1e} objective {dobj:.1e} lambda {dl:.1e}"));
    }
    let bf = brute_force(&s, 5e-3).unwrap();
    let dbf = (bf.objective - 2.0 / 3.0).abs();
    ok &= dbf <= 1e-2;
    outcome(ok, format!("y=[1,0] z=[0,1]: {} (<= 1e-8, 1e-8, 1e-6); brute force {dbf:.1e} (<= 1e-2)", notes.join("; ")))
}

fn inactive() -> Outcome {
    let mut r = rng(505);
    let cfg = SolverConfig::default();
    let mut mismatches = 0;
    let mut nonzero = 0;
    for _ in 0..200 {
        let n = r.gen_range(1..=50);
        let s = inactive_sample(&mut r, n);
        let sol = dual(&s, &cfg);
        if sol.fit.a.values() != iso(s.y(), s.w1()) || sol.fit.b.values() != iso(s.z(), s.w2()) {
            mismatches += 1;
        }
        nonzero += sol.dual.lambda.iter().filter(|&&l| l != 0.0).count();
    }
    outcome(
        mismatches == 0 && nonzero == 0,
        format!("200 instances: {mismatches} differ from the separate fits, {nonzero} nonzero multipliers"),
    )
}

fn invariants() -> Outcome {
    let mut r = rng(606);
    let cfg = SolverConfig::default();
    let (mut worst_scale, mut worst_mirror) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = r.gen_range(1..=50);
        let s = random_sample(&mut r, n);
        let base = dual(&s, &cfg).fit;
        for c in [0.1, 10.0] {
            let scaled = dual(&s.scale_weights(c).unwrap(), &cfg).fit;
            worst_scale = worst_scale.max(pair_diff(&base, &scaled));
        }
        let m = dual(&mirrored(&s), &cfg).fit;
        let a: Vec<f64> = m.b.values().iter().rev().map(|t| -t).collect();
        let b: Vec<f64> = m.a.values().iter().rev().map(|t| -t).collect();
        worst_mirror = worst_mirror.max(max_abs_diff(&a, base.a.values())).max(max_abs_diff(&b, base.b.values()));
    }
    outcome(
        worst_scale <= cfg.feas_tol && worst_mirror <= 1e-8,
        format!(
            "200 instances: weight scaling by 0.1 and 10 moves the fit {worst_scale:.2e} (<= {:.0e}), mirroring {worst_mirror:.2e} (<= 1e-8)",
            cfg.feas_tol
        ),
    )
}

fn performance() -> Outcome {
    let mut r = rng(707);
    let n = 1_000_000;
    let p = IsotonicProblem::new(normals(&mut r, n), weights(&mut r, n)).unwrap();
    let start = Instant::now();
    let f = isotonic_fit(&p);
    let t_pava = start.elapsed();
    assert_eq!(f.len(), n);

    let s = random_sample(&mut r, 10_000);
    let cfg = SolverConfig { feas_tol: 1e-6, ..SolverConfig::default() };
    let prob = OrderedConeProblem::new(s, cfg).unwrap();
    let start = Instant::now();
    let (fit, _, diag) = ordiso::solve_dual(&prob).unwrap();
    let t_dual = start.elapsed();
    outcome(
        within(t_pava, 1.0) && within(t_dual, 60.0) && diag.converged && fit.is_feasible(1e-6),
        format!(
            "weighted PAVA n=10^6 {:.3}s (< 1s); dual n=10^4 feas_tol 1e-6 {:.2}s (< 60s), {} iterations, converged {}",
            t_pava.as_secs_f64(),
            t_dual.as_secs_f64(),
            diag.iterations,
            diag.converged
        ),
    )
}

fn run(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_ordiso")).args(args).output().unwrap();
    out.status.code().unwrap_or(-1)
}

fn check_tampered(dir: &Path, record: &serde_json::Value, row: &str, j: usize, delta: f64) -> i32 {
    let mut v = record.clone();
    let old = v[row][j].as_f64().unwrap();
    v[row][j] = serde_json::Value::from(old + delta);
    let path = dir.join("tampered.json");
    std::fs::write(&path, v.to_string()).unwrap();
    run(&["check", path.to_str().unwrap()])
}

fn cli_loop() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(808);
    let (mut fit_failures, mut check_failures, mut missed, mut tampered) = (0, 0, 0, 0);
    for i in 0..50 {
        let n = r.gen_range(1..=50);
        let s = random_sample(&mut r, n);
        let mut csv = String::from("x,y,z,w1,w2\n");
        for j in 0..n {
            csv.push_str(&format!("{},{},{},{},{}\n", s.x()[j], s.y()[j], s.z()[j], s.w1()[j], s.w2()[j]));
        }
        let input = dir.path().join("sample.csv");
        let output = dir.path().join("fit.json");
        std::fs::write(&input, csv).unwrap();
        if run(&["fit", input.to_str().unwrap(), "-o", output.to_str().unwrap()]) != 0 {
            fit_failures += 1;
            continue;
        }
        if run(&["check", output.to_str().unwrap()]) != 0 {
            check_failures += 1;
        }
        let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
        // every coordinate on the first few files, one random one on the rest
        let targets: Vec<(&str, usize, f64)> = if i < 5 {
            (0..n).flat_map(|j| [("a", j, 1e-3), ("b", j, -1e-3)]).collect()
        } else {
            let row = if r.gen_bool(0.5) { "a" } else { "b" };
            vec![(row, r.gen_range(0..n), if r.gen_bool(0.5) { 1e-3 } else { -1e-3 })]
        };
        for (row, j, delta) in targets {
            tampered += 1;
            if check_tampered(dir.path(), &record, row, j, delta) != 3 {
                missed += 1;
            }
        }
    }
    outcome(
        fit_failures == 0 && check_failures == 0 && missed == 0,
        format!(
            "50 random CSV files: {fit_failures} fits without exit 0, {check_failures} checks without exit 0, {missed} of {tampered} tampered records not rejected with exit 3"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence, tiny n", tiny_oracles),
        ("oracle equivalence, moderate n", moderate_oracles),
        ("single-curve exactness", single_curve),
        ("certified instance", certified_instance),
        ("inactive-constraint reduction", inactive),
        ("scale and symmetry invariants", invariants),
        ("performance", performance),
        ("cli fit/check loop", cli_loop),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", k + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
