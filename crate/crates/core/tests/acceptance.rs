//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::LN_2;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use netlimits::info::{enumerate_distribution, kl_decomposition};
use netlimits::samplers::{sample_lsm, sample_modified_lsm};
use netlimits::thresholds::{
    dlsm_condition, dpam_condition, dsbm_condition, dswm_condition, ergm_condition, lsm_condition, sbm_condition,
};
use netlimits::{
    cap_simplex, chi2_bound, exact_error, flip_error, kl_bernoulli, lsm_edge_moment, map_recover, mc_moment_check,
    mi_pairwise_upper, mi_plugin, sample, sample_labels, Graph, LabelVector, LikelihoodMode, ModelSpec, Modifier,
    Predecessors, Seed, WeightVector,
};

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

type Check = fn() -> Outcome;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn kl_below_chi2() -> Outcome {
    let mut rng = Seed::new(1, 0).rng();
    let mut violations = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (p, q) = (a.max(b), a.min(b));
        if !(q > 0.0 && p > q && p < 1.0) {
            continue;
        }
        checked += 1;
        if kl_bernoulli(p, q).unwrap() > chi2_bound(p, q).unwrap() {
            violations += 1;
        }
    }
    let kl = kl_bernoulli(0.6, 0.4).unwrap();
    let bound = chi2_bound(0.6, 0.4).unwrap();
    let pass = violations == 0 && close(kl, 0.081_093_0, 1e-7) && close(bound, 0.166_666_7, 1e-7);
    outcome(
        pass,
        format!("{violations} violations in {checked} pairs; KL(0.6‖0.4) = {kl:.7}, bound = {bound:.7}"),
    )
}

fn moment_identity() -> Outcome {
    let mut rng = Seed::new(2, 0).rng();
    let mut passed = 0;
    for k in 0..20 {
        let d = rng.gen_range(1..=5usize);
        let sigma = rng.gen_range(0.05..=2.0);
        let radius = rng.gen_range(0.05..=2.0);
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let mu: Vec<f64> = dir.iter().map(|x| x * radius / len).collect();
        let ok = [true, false].iter().all(|&same| {
            mc_moment_check(d, &mu, sigma, same, 1_000_000, Seed::new(2, 1 + k))
                .unwrap()
                .agrees_within(3.0)
        });
        passed += usize::from(ok);
    }
    let same = lsm_edge_moment(2, &[1.0, 0.0], 0.5, true).unwrap();
    let cross = lsm_edge_moment(2, &[1.0, 0.0], 0.5, false).unwrap();
    let pass = passed >= 19 && close(same, 0.5, 1e-7) && close(cross, 0.067_667_6, 1e-7);
    outcome(
        pass,
        format!("{passed}/20 configurations within 3 SE (same and cross); spot {same:.7}, {cross:.7}"),
    )
}

fn ergm_factorizes() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in [0.1, 3f64.ln(), 2.0] {
        let spec = ModelSpec::Ergm { beta };
        for code in 0..8 {
            let y = LabelVector::from_code(3, code);
            let product = enumerate_distribution(&spec, &y).unwrap();
            let weights: Vec<f64> = (0..product.probs.len())
                .map(|mask| {
                    product
                        .graph(mask)
                        .edges()
                        .iter()
                        .map(|&(i, j)| beta * f64::from(y.get(i) * y.get(j)))
                        .sum::<f64>()
                        .exp()
                })
                .collect();
            let z: f64 = weights.iter().sum();
            let tv = 0.5
                * weights
                    .iter()
                    .zip(&product.probs)
                    .map(|(w, p)| (w / z - p).abs())
                    .sum::<f64>();
            worst = worst.max(tv);
        }
    }
    outcome(worst <= 1e-12, format!("max total variation {worst:.3e}"))
}

fn kl_decomposes() -> Outcome {
    let mut rng = Seed::new(4, 0).rng();
    let mut worst_gap: f64 = 0.0;
    let mut bound_violations = 0;
    for _ in 0..50 {
        let (a, b): (f64, f64) = (rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
        let (p, q) = if a > b { (a, b) } else { (b, a) };
        let spec = ModelSpec::Dsbm {
            p,
            q,
            modifier: Modifier::Harmonic,
            predecessors: Predecessors::Full,
        };
        let y = sample_labels(3, &mut rng);
        let y_alt = sample_labels(3, &mut rng);
        let dec = kl_decomposition(&spec, &y, &y_alt).unwrap();
        worst_gap = worst_gap.max((dec.total - dec.edgewise).abs());
        if dec.total > dec.bound + 1e-12 {
            bound_violations += 1;
        }
    }
    outcome(
        worst_gap <= 1e-10 && bound_violations == 0,
        format!("max |KL - edgewise sum| = {worst_gap:.3e}; {bound_violations} bound violations in 50 cases"),
    )
}

fn histogram(graphs: impl Iterator<Item = Graph>) -> [f64; 8] {
    let mut h = [0.0; 8];
    for g in graphs {
        let mask = usize::from(g.has_edge(0, 1)) | usize::from(g.has_edge(0, 2)) << 1 | usize::from(g.has_edge(1, 2)) << 2;
        h[mask] += 1.0;
    }
    h
}

fn modified_lsm_matches() -> Outcome {
    let mu = [1.0, 0.0];
    let sigma = 0.5;
    let y = LabelVector::new(vec![1, 1, -1]).unwrap();
    let draws = 100_000;
    let critical = ChiSquared::new(7.0).unwrap().inverse_cdf(0.999);
    let accepted = (0..100u64)
        .into_par_iter()
        .filter(|&rep| {
            let mut a = Seed::new(5, 2 * rep).rng();
            let mut b = Seed::new(5, 2 * rep + 1).rng();
            let ha = histogram((0..draws).map(|_| sample_lsm(&mu, sigma, &y, &mut a).unwrap().0));
            let hb = histogram((0..draws).map(|_| sample_modified_lsm(&mu, sigma, &y, &mut b).unwrap().0));
            // Two-sample statistic for equal sample sizes.
            let stat: f64 = ha
                .iter()
                .zip(&hb)
                .filter(|(x, z)| **x + **z > 0.0)
                .map(|(x, z)| (x - z).powi(2) / (x + z))
                .sum();
            stat <= critical
        })
        .count();
    outcome(
        accepted >= 95,
        format!("{accepted}/100 repetitions not rejected (critical value {critical:.3})"),
    )
}

/// Exact capped-simplex solution by active set: the `t` largest weights are
/// pinned at `1/m` and the rest receive an equal share of the excess.
fn capped_oracle(w: &[f64], m: usize) -> Vec<f64> {
    let cap = 1.0 / m as f64;
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
    let k = w.len();
    for t in 0..=k {
        let free = &order[t..];
        let rest: f64 = free.iter().map(|&i| w[i]).sum();
        let shift = if free.is_empty() {
            0.0
        } else {
            (1.0 - t as f64 * cap - rest) / free.len() as f64
        };
        let fits = free.iter().all(|&i| w[i] + shift <= cap + 1e-15);
        let pinned_ok = t == 0 || w[order[t - 1]] + shift >= cap - 1e-15;
        if fits && pinned_ok && (!free.is_empty() || close(t as f64 * cap, 1.0, 1e-12)) {
            let mut out = vec![cap; k];
            for &i in free {
                out[i] = w[i] + shift;
            }
            return out;
        }
    }
    unreachable!("capped simplex is non-empty for m <= k")
}

fn capped_simplex_agrees() -> Outcome {
    let second_pass = cap_simplex(&WeightVector::new(vec![0.45, 0.30, 0.25]).unwrap(), 3).unwrap();
    let second_ok = second_pass.as_slice().iter().all(|&x| close(x, 1.0 / 3.0, 1e-12));
    let failures = (0..100_000u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = Seed::new(6, t).rng();
            let k = rng.gen_range(1..=50usize);
            let m = rng.gen_range(1..=k);
            let skew = rng.gen_range(1.0..8.0);
            let scores: Vec<f64> = (0..k).map(|_| rng.gen::<f64>().powf(skew)).collect();
            let Ok(w) = WeightVector::from_scores(&scores) else {
                return false;
            };
            let out = cap_simplex(&w, m).unwrap();
            let (v, x) = (w.as_slice(), out.as_slice());
            let oracle = capped_oracle(v, m);
            let cap = 1.0 / m as f64;
            let feasible =
                close(x.iter().sum::<f64>(), 1.0, 1e-9) && x.iter().all(|&e| (0.0..=cap + 1e-12).contains(&e));
            let min_in = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_in = v.iter().cloned().fold(0.0, f64::max);
            let min_out = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_out = x.iter().cloned().fold(0.0, f64::max);
            let agrees = x.iter().zip(&oracle).all(|(a, b)| close(*a, *b, 1e-9));
            !(feasible && agrees && min_out >= min_in - 1e-12 && max_out <= max_in + 1e-12)
        })
        .count();
    outcome(
        failures == 0 && second_ok,
        format!(
            "{failures} failing instances of 100000; (0.45,0.30,0.25), m=3 -> {:?}",
            second_pass.as_slice()
        ),
    )
}

fn mi_below_pairwise_bound() -> Outcome {
    let ps = [0.55, 0.65, 0.75, 0.85, 0.95];
    let qs = [0.05, 0.15, 0.25, 0.35, 0.45];
    let betas = [0.1, 0.5, 1.0, 2.0, 3.0];
    let mut specs = Vec::new();
    for &p in &ps {
        for &q in &qs {
            specs.push(ModelSpec::Sbm { p, q });
            specs.push(ModelSpec::Dsbm {
                p,
                q,
                modifier: Modifier::Harmonic,
                predecessors: Predecessors::Full,
            });
        }
    }
    specs.extend(betas.iter().map(|&beta| ModelSpec::Ergm { beta }));
    let mut violations = 0;
    let mut checked = 0;
    for spec in &specs {
        for n in [2, 3] {
            let mi = mi_plugin(spec, n).unwrap().value;
            let upper = mi_pairwise_upper(spec, n).unwrap();
            checked += 1;
            if mi > upper {
                violations += 1;
            }
        }
    }
    let spot = ModelSpec::Sbm { p: 0.6, q: 0.4 };
    let mi = mi_plugin(&spot, 2).unwrap().value;
    let upper = mi_pairwise_upper(&spot, 2).unwrap();
    let pass = violations == 0 && close(mi, 0.020_135, 1e-5) && close(upper, 0.081_093_0, 1e-5);
    outcome(
        pass,
        format!("{violations} violations in {checked} cases; spot MI {mi:.6} <= bound {upper:.7}"),
    )
}

fn threshold_spot_values() -> Outcome {
    let n = 10;
    let mu = [1.0, 0.0];
    let listed = [
        ("sbm", sbm_condition(0.6, 0.4, n).unwrap().rhs, 0.110_903_5),
        ("dsbm", dsbm_condition(0.6, 0.4, n).unwrap().rhs, 0.061_626_2),
        ("dlsm", dlsm_condition(2, &mu, 0.5, n).unwrap().rhs, 0.015_406_5),
        ("dpam", dpam_condition(3, 1.0, n).unwrap().rhs, 0.010_635_2),
        ("dswm", dswm_condition(3, 1.0, 0.5, n).unwrap().rhs, 0.111_728_7),
    ];
    // ERGM and LSM have no listed value; compare with high-precision evaluations.
    let extra = [
        ("ergm", ergm_condition(0.5, n).unwrap().rhs, 2.0 * LN_2 / 10.0 - 4.0 * LN_2 / 100.0),
        ("lsm", lsm_condition(2, &mu, 0.5, n).unwrap().rhs, 0.027_725_887_222_397_81),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, got, want) in listed.iter().chain(&extra) {
        let ok = close(*got, *want, 1e-6);
        pass &= ok;
        if ok {
            parts.push(format!("{name} {got:.10}"));
        } else {
            parts.push(format!("{name} {got:.10} MISMATCH (expected {want}, off by {:.2e})", got - want));
        }
    }
    outcome(pass, parts.join(", "))
}

fn equality_point(q: f64, n: usize) -> f64 {
    let (mut lo, mut hi) = (q + 1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sbm_condition(mid, q, n).unwrap().nonrecoverable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn recovery_rates(p: f64, q: f64, n: usize, trials: u32, master: u64) -> (f64, f64, u64) {
    let spec = ModelSpec::Sbm { p, q };
    let results: Vec<(u8, u8, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Seed::trial(master, 0, t).rng();
            let y = sample_labels(n, &mut rng);
            let g = sample(&spec, &y, &mut rng).unwrap().graph;
            let r = map_recover(&spec, &g, LikelihoodMode::Surrogate).unwrap();
            (exact_error(&r.y_hat, &y).unwrap(), flip_error(&r.y_hat, &y).unwrap(), r.ties)
        })
        .collect();
    let t = f64::from(trials);
    let exact = results.iter().map(|r| f64::from(r.0)).sum::<f64>() / t;
    let flip = results.iter().map(|r| f64::from(r.1)).sum::<f64>() / t;
    let min_ties = results.iter().map(|r| r.2).min().unwrap();
    (exact, flip, min_ties)
}

fn fano_consistency() -> Outcome {
    let p_eq = equality_point(0.3, 10);
    let (exact, _, min_ties) = recovery_rates(0.452_610, 0.3, 10, 500, 9);
    let (_, flip, _) = recovery_rates(0.9, 0.1, 10, 200, 10);
    let pass = close(p_eq, 0.452_610, 1e-6) && exact >= 0.5 && flip < 0.05;
    outcome(
        pass,
        format!(
            "equality point p = {p_eq:.9}; exact error {exact:.3} over 500 trials (every MAP ties y with -y, \
             min ties = {min_ties}, so flip symmetry alone forces exact error >= 1/2); \
             flip error {flip:.3} at p=0.9, q=0.1 over 200 trials"
        ),
    )
}

fn degree_law(spec: &ModelSpec, n: usize, m: usize, master: u64) -> (bool, String) {
    let per_trial: Vec<(f64, bool)> = (0..1000u32)
        .into_par_iter()
        .map(|t| {
            let mut rng = Seed::trial(master, 0, t).rng();
            let y = sample_labels(n, &mut rng);
            let g = sample(spec, &y, &mut rng).unwrap().graph;
            let mean = (m..n).map(|i| g.in_degree(i) as f64).sum::<f64>() / (n - m) as f64;
            (mean, (0..m).all(|i| g.in_degree(i) == 0))
        })
        .collect();
    let k = per_trial.len() as f64;
    let mean = per_trial.iter().map(|r| r.0).sum::<f64>() / k;
    let var = per_trial.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    let founders = per_trial.iter().all(|r| r.1);
    let ok = (mean - m as f64).abs() <= 3.0 * se && founders;
    (
        ok,
        format!(
            "{} mean in-degree {mean:.6} ± {se:.2e} (m = {m}), founders empty: {founders}",
            spec.kind()
        ),
    )
}

fn directed_degree_law() -> Outcome {
    let (a, da) = degree_law(&ModelSpec::Dpam { m: 3, s: 1.0 }, 50, 3, 11);
    let (b, db) = degree_law(&ModelSpec::Dswm { m: 4, s: 2.0, p_mix: 0.7 }, 60, 4, 12);
    outcome(a && b, format!("{da}; {db}"))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("Bernoulli KL below chi-square bound", kl_below_chi2),
        ("latent edge moment matches Monte Carlo", moment_identity),
        ("ERGM factorizes into independent edges", ergm_factorizes),
        ("dynamic SBM KL edgewise decomposition", kl_decomposes),
        ("latent space and shifted latent space agree", modified_lsm_matches),
        ("capped simplex matches active-set oracle", capped_simplex_agrees),
        ("mutual information below pairwise KL bound", mi_below_pairwise_bound),
        ("threshold right-hand sides at n = 10", threshold_spot_values),
        ("Fano consistency of MAP recovery", fano_consistency),
        ("directed in-degree law", directed_degree_law),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result =
            panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| outcome(false, "panicked"));
        let status = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!(
            "criterion {:>2} {status} {name} [{:.2} s]: {}",
            k + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
