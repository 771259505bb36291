//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use paintshop::circuit::{build_qaoa_circuit, build_rcc_circuit, TrimmedRcc};
use paintshop::ising::{brute_force_extremes, IsingGraph, SpinConfig};
use paintshop::mps::simulate_mps;
use paintshop::qaoa::{fixed_params, perturb, EvalMode};
use paintshop::rqaoa::{circuit_count, correlations_all_edges, reduce_once, rqaoa_solve, CircuitAccounting, RqaoaConfig};
use paintshop::statevector::{expectation_zz, simulate};
use paintshop::{greedy_solve, map_bpsp, recursive_greedy_solve, rng, BpspInstance, Colouring};
use paintshop_bench::measure::mean_and_stderr;
use paintshop_bench::{run_method_comparison, run_resource_report, run_sigma_sweep, ExperimentConfig, Method};

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Colour changes counted straight from the sequence: the first car of body
/// `b` is red when `s_b = +1`, the second car gets the other colour.
fn changes_from_spins(inst: &BpspInstance, spins: &[i64]) -> i64 {
    let mut seen = vec![false; inst.n_bodies()];
    let colours: Vec<bool> = inst
        .sequence()
        .iter()
        .map(|&b| {
            let first = !seen[b];
            seen[b] = true;
            (spins[b] == 1) == first
        })
        .collect();
    colours.windows(2).filter(|w| w[0] != w[1]).count() as i64
}

fn changes(inst: &BpspInstance, c: &Colouring) -> u32 {
    paintshop::colour_changes(inst, c).unwrap()
}

/// Deterministic random Ising graph on 2..=8 nodes with couplings in
/// {-2, -1, 1, 2} and no fields.
fn random_graph(seed: u64) -> IsingGraph {
    let n = 2 + (rng::mix(seed, 0) % 7) as usize;
    let table = [0i64, 0, -2, -1, 1, 2];
    let mut edges = Vec::new();
    let mut draw = 1;
    for i in 0..n {
        for j in i + 1..n {
            let w = table[(rng::mix(seed, draw) % 6) as usize];
            draw += 1;
            if w != 0 {
                edges.push((i, j, w));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1));
    }
    IsingGraph::from_edges(n, &edges, 0).unwrap()
}

fn criterion_1() -> Verdict {
    let inst = BpspInstance::new(4, vec![1, 0, 1, 3, 2, 3, 0, 2]).unwrap();
    let greedy = changes(&inst, &greedy_solve(&inst));
    let recursive = changes(&inst, &recursive_greedy_solve(&inst));
    let g = map_bpsp(&inst);
    let best = brute_force_extremes(&g).unwrap().ground_energy.as_int().unwrap();
    check(
        greedy == 4 && recursive == 3 && best == 2,
        format!("greedy {greedy}, recursive greedy {recursive}, brute force {best} (expected 4, 3, 2)"),
    )
}

fn criterion_2() -> Verdict {
    let mut configs = 0u64;
    let mut mismatches = 0u64;
    for k in 0..200u64 {
        let n = 1 + (k % 6) as usize;
        let inst = BpspInstance::random(n, rng::mix(2, k)).unwrap();
        let g = map_bpsp(&inst);
        for x in 0..1u64 << n {
            let spins = SpinConfig::from_index(x, n);
            let energy = g.energy(&spins).unwrap().as_int();
            if energy != Some(changes_from_spins(&inst, &spins.values())) {
                mismatches += 1;
            }
            configs += 1;
        }
    }
    check(mismatches == 0, format!("{configs} configurations over 200 instances, {mismatches} mismatches"))
}

fn criterion_3() -> Verdict {
    let mut worst_cone = 0.0f64;
    let mut worst_trim = 0.0f64;
    let mut edges = 0;
    for k in 0..50u64 {
        let g = random_graph(rng::mix(3, k));
        let p = 1 + (k % 3) as usize;
        for depth in [p, 1] {
            let params = perturb(&fixed_params(depth).unwrap(), 0.3, k, depth as u64).unwrap();
            let full = simulate(&build_qaoa_circuit(&g, &params).unwrap()).unwrap();
            for (i, j) in g.edge_list() {
                let reference = expectation_zz(&full, i, j).unwrap();
                let cone = build_rcc_circuit(&g, (i, j), &params).unwrap();
                let state = simulate(&cone.circuit).unwrap();
                let untrimmed = expectation_zz(&state, cone.target.0, cone.target.1).unwrap();
                worst_cone = worst_cone.max((untrimmed - reference).abs());
                if depth == 1 {
                    let t = TrimmedRcc::new(&g, (i, j), &params).unwrap();
                    let (a, b) = t.target;
                    let avg = t.circuits().map(|c| expectation_zz(&simulate(&c).unwrap(), a, b).unwrap()).sum::<f64>()
                        * t.weight();
                    worst_trim = worst_trim.max((avg - untrimmed).abs());
                }
                edges += 1;
            }
        }
    }
    check(
        worst_cone < 1e-10 && worst_trim < 1e-10,
        format!("{edges} edge checks; max |cone - full| = {worst_cone:.1e}, max |trimmed - untrimmed| = {worst_trim:.1e}"),
    )
}

fn criterion_4() -> Verdict {
    let params = fixed_params(1).unwrap();
    let mut steps = 0;
    let mut lifts = 0u64;
    let mut failures = 0u64;
    for k in 0..100u64 {
        let n = 1 + (k % 6) as usize;
        let mut g = map_bpsp(&BpspInstance::random(n, rng::mix(4, k)).unwrap());
        while g.n_nodes() > 1 && g.n_edges() > 0 {
            let corr = correlations_all_edges(&g, &params, EvalMode::Exact, false).unwrap();
            let r = reduce_once(&g, &corr.values).unwrap();
            for x in 0..1u64 << r.graph.n_nodes() {
                let reduced = SpinConfig::from_index(x, r.graph.n_nodes());
                let mut full = vec![0i64; g.n_nodes()];
                for (new, &old) in r.kept.iter().enumerate() {
                    full[old] = reduced.values()[new];
                }
                for f in &r.step.additionally_freed {
                    full[f.node] = f.spin;
                }
                full[r.step.eliminated] = r.step.sign * full[r.step.retained];
                let lifted = SpinConfig::from_values(&full).unwrap();
                if r.graph.energy(&reduced).unwrap() != g.energy(&lifted).unwrap() {
                    failures += 1;
                }
                lifts += 1;
            }
            steps += 1;
            g = r.graph;
        }
    }
    check(failures == 0, format!("{steps} reduction steps, {lifts} lifted configurations, {failures} energy mismatches"))
}

fn criterion_5() -> Verdict {
    let config = ExperimentConfig {
        bodies: 4..=10,
        instances: 20,
        ps: vec![1],
        methods: vec![Method::RecursiveGreedy, Method::QaoaFixed, Method::RqaoaFixed],
        ..Default::default()
    };
    let rows = run_method_comparison(&config).unwrap();
    if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
        return check(false, format!("row error: {:?}", r.error));
    }
    let mean = |method: &str| {
        let v: Vec<f64> = rows.iter().filter(|r| r.method == method).map(|r| r.measure).collect();
        mean_and_stderr(&v).0
    };
    let (rq, rg, qa) = (mean("rqaoa-fixed"), mean("recursive-greedy"), mean("qaoa-fixed"));
    check(
        rq >= 0.95 && rq >= rg && qa < rq,
        format!("mean measure: rqaoa-fixed {rq:.4}, recursive-greedy {rg:.4}, qaoa-fixed {qa:.4}"),
    )
}

fn criterion_6() -> Verdict {
    let config = RqaoaConfig::fixed(1);
    let mut problems = Vec::new();
    for k in 0..20u64 {
        let n = 4 + (k % 10) as usize;
        let inst = BpspInstance::random(n, rng::mix(6, k)).unwrap();
        let (_, trace) = rqaoa_solve(&inst, &config).unwrap();
        let steps = trace.steps.len() as u64;
        // Independent replay of the reductions, counting edges before each.
        let params = fixed_params(1).unwrap();
        let mut g = map_bpsp(&inst);
        let mut edge_sum = 0u64;
        let mut replay_steps = 0u64;
        while g.n_nodes() > 1 && g.n_edges() > 0 {
            edge_sum += g.n_edges() as u64;
            let corr = correlations_all_edges(&g, &params, EvalMode::Exact, false).unwrap();
            g = reduce_once(&g, &corr.values).unwrap().graph;
            replay_steps += 1;
        }
        let full = circuit_count(&trace, CircuitAccounting::Full);
        let rcc = circuit_count(&trace, CircuitAccounting::RccUntrimmed);
        if full != steps || steps > n as u64 - 1 || replay_steps != steps || rcc != edge_sum {
            problems.push(format!("N={n}: full {full}, steps {steps}, replay {replay_steps}, rcc {rcc} vs {edge_sum}"));
        }
    }
    check(problems.is_empty(), if problems.is_empty() { "20 traces consistent".to_string() } else { problems.join("; ") })
}

fn criterion_7() -> Verdict {
    let cutoffs = [0.0, 0.005, 0.0075, 0.01];
    let mut worst_amp = 0.0f64;
    let mut violations = Vec::new();
    let mut circuits = 0;
    for n in 2..=10usize {
        for k in 0..2u64 {
            let g = map_bpsp(&BpspInstance::random(n, rng::mix(7, k)).unwrap());
            for p in 1..=3 {
                let c = build_qaoa_circuit(&g, &fixed_params(p).unwrap()).unwrap();
                let dense = simulate(&c).unwrap();
                let mut last_excluded = 0.0;
                for &cutoff in &cutoffs {
                    let (state, stats) = simulate_mps(&c, cutoff).unwrap();
                    if cutoff == 0.0 {
                        let amps = state.to_statevector().unwrap();
                        for (a, b) in amps.amplitudes().iter().zip(dense.amplitudes()) {
                            worst_amp = worst_amp.max((a - b).norm());
                        }
                    }
                    let half = n / 2;
                    if stats.max_entropy_bits > half as f64 + 1e-9 || stats.max_bond_dim > 1 << half {
                        violations.push(format!("n={n} p={p} cutoff={cutoff}: bound exceeded"));
                    }
                    if stats.excluded_probability < last_excluded {
                        violations.push(format!("n={n} p={p}: excluded probability fell at cutoff {cutoff}"));
                    }
                    last_excluded = stats.excluded_probability;
                }
                circuits += 1;
            }
        }
    }
    check(
        worst_amp < 1e-8 && violations.is_empty(),
        format!("{circuits} circuits; max amplitude error {worst_amp:.1e}; {} bound violations {:?}", violations.len(), violations),
    )
}

fn criterion_8() -> Verdict {
    let mut by_size: BTreeMap<usize, (usize, f64, usize, Vec<f64>)> = BTreeMap::new();
    for n in [8usize, 10, 12] {
        let config = ExperimentConfig {
            bodies: n..=n,
            instances: 8,
            ps: vec![1],
            cutoffs: vec![0.0],
            ..Default::default()
        };
        let rows = run_resource_report(&config).unwrap();
        let trimmed = rows.iter().filter(|r| r.kind == "trimmed-rcc-max");
        let full: Vec<_> = rows.iter().filter(|r| r.kind == "full").collect();
        let (mut tq, mut te) = (0usize, 0.0f64);
        for r in trimmed {
            tq = tq.max(r.qubit_count);
            te = te.max(r.max_entropy_bits);
        }
        let fq = full.iter().map(|r| r.qubit_count).max().unwrap();
        let fe: Vec<f64> = full.iter().map(|r| r.max_entropy_bits).collect();
        by_size.insert(n, (tq, te, fq, fe));
    }
    let v: Vec<_> = by_size.values().collect();
    let rcc_qubits_flat = v.iter().all(|x| x.0 == v[0].0);
    let rcc_entropy_flat = v.iter().all(|x| (x.1 - v[0].1).abs() <= 1e-6);
    let full_qubits_grow = v.windows(2).all(|w| w[1].2 > w[0].2);
    let full_means: Vec<f64> = v.iter().map(|x| mean_and_stderr(&x.3).0).collect();
    let full_entropy_grows = full_means.windows(2).all(|w| w[1] > w[0]);
    let detail = format!(
        "N=8,10,12: trimmed-RCC max qubits {:?}, max entropy {:?}; full qubits {:?}, mean full entropy {:?}",
        v.iter().map(|x| x.0).collect::<Vec<_>>(),
        v.iter().map(|x| format!("{:.9}", x.1)).collect::<Vec<_>>(),
        v.iter().map(|x| x.2).collect::<Vec<_>>(),
        full_means.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
    );
    check(rcc_qubits_flat && rcc_entropy_flat && full_qubits_grow && full_entropy_grows, detail)
}

fn criterion_9() -> Verdict {
    let config = ExperimentConfig {
        bodies: 8..=8,
        instances: 50,
        ps: vec![1],
        sigmas: vec![0.0, 0.05, 0.2],
        ..Default::default()
    };
    let rows = run_sigma_sweep(&config).unwrap();
    if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
        return check(false, format!("row error: {:?}", r.error));
    }
    let mean = |method: &str, sigma: f64| {
        let v: Vec<f64> =
            rows.iter().filter(|r| r.method == method && r.sigma == Some(sigma)).map(|r| r.measure).collect();
        mean_and_stderr(&v).0
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for sigma in [0.0, 0.05, 0.2] {
        let (rq, qa) = (mean("rqaoa-optimised", sigma), mean("qaoa-optimised", sigma));
        ok &= rq >= qa;
        parts.push(format!("sigma {sigma}: rqaoa {rq:.4} qaoa {qa:.4}"));
    }
    let drift = (mean("rqaoa-optimised", 0.05) - mean("rqaoa-optimised", 0.0)).abs();
    ok &= drift <= 0.02;
    check(ok, format!("{}; rqaoa drift at 0.05 = {drift:.4}", parts.join(", ")))
}

fn criterion_10() -> Verdict {
    let (mut minus, mut edges, mut degree_sum, mut nodes) = (0usize, 0usize, 0usize, 0usize);
    for k in 0..200u64 {
        let g = map_bpsp(&BpspInstance::random(200, rng::mix(10, k)).unwrap());
        minus += g.edges().values().filter(|&&w| w == -1).count();
        edges += g.n_edges();
        degree_sum += g.degrees().iter().sum::<usize>();
        nodes += g.n_nodes();
    }
    let p_minus = minus as f64 / edges as f64;
    let degree = degree_sum as f64 / nodes as f64;
    check(
        (p_minus - 2.0 / 3.0).abs() <= 0.05 && (degree - 4.0).abs() <= 0.2,
        format!("P(J = -1) = {p_minus:.4}, mean degree = {degree:.4}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict, u64);

fn main() {
    let criteria: [Criterion; 10] = [
        ("worked example", criterion_1, 1),
        ("energy oracle", criterion_2, 30),
        ("cone exactness", criterion_3, 120),
        ("reduction soundness", criterion_4, 60),
        ("method comparison trend", criterion_5, 600),
        ("circuit-count formulas", criterion_6, 60),
        ("MPS fidelity and bounds", criterion_7, 300),
        ("p=1 cone flatness", criterion_8, 600),
        ("sigma robustness", criterion_9, 900),
        ("coupling statistics", criterion_10, 30),
    ];
    let mut failed = 0;
    for (idx, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {} ({:.2} s of {} s) {}",
            idx + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
