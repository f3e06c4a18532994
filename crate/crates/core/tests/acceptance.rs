//! Acceptance suite. Run with `cargo test -p radtree --test acceptance`;
//! pass criterion numbers after `--` to run a subset, e.g. `-- 2 9`.

mod support;

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radtree::estimators::*;
use radtree::functionals::{diff_second, DiffContext, FunctionalSpec};
use radtree::geom::{sq_norm, Direction, Window};
use radtree::pointprocess::{derive_replicate_seed, sample_poisson};
use radtree::spanning::{build_dsf, build_rst, RadialParent};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit2() -> Window {
    Window::unit_cube(2).unwrap()
}

fn e2() -> Direction {
    Direction::axis(2, 1, false).unwrap()
}

fn closed_forms() -> Outcome {
    let lim = expectation_limit(1.0, 2, 1.0).unwrap();
    let mut ok = (lim - FRAC_1_SQRT_2).abs() <= 1e-14;
    let mut worst = 0.0f64;
    for &d in &[2usize, 3] {
        for &a in &[0.5, 1.0, 2.0, 3.0] {
            let q = support::ell_e_moment_quadrature(a, d);
            let c = ell_e_moment_closed_form(a, d).unwrap();
            worst = worst.max(((q - c) / c).abs());
        }
    }
    ok &= worst <= 1e-8;
    outcome(ok, format!("limit(1,2,1)={lim:.16}, max quadrature rel err={worst:.2e}"))
}

fn random_direction(d: usize, rng: &mut ChaCha8Rng) -> Direction {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let n2 = sq_norm(&v);
        if n2 > 0.01 && n2 <= 1.0 {
            return Direction::normalized(v).unwrap();
        }
    }
}

fn construction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut mismatches = 0;
    for &d in &[2usize, 3] {
        let w = Window::unit_cube(d).unwrap();
        for &(t, count) in &[(200.0, 100u64), (5000.0, 10)] {
            for i in 0..count {
                let s = sample_poisson(&w, t, derive_replicate_seed(d as u64 * 1000 + t as u64, i)).unwrap();
                let pts = support::points(&s);
                let tree = build_rst(&s);
                let (bp, _) = support::brute_rst(&pts);
                let e = random_direction(d, &mut rng);
                let forest = build_dsf(&s, &e).unwrap();
                let (fp, _) = support::brute_dsf(&pts, e.as_slice());
                if tree.parent != bp || forest.parent != fp {
                    mismatches += 1;
                }
                checked += 1;
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{checked} instances (RST+DSF), {mismatches} with differing parents"),
    )
}

fn expectation() -> Outcome {
    let limit = FRAC_1_SQRT_2;
    let ts = [250.0, 1000.0, 2000.0];
    let stats: Vec<SummaryStats> = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| estimate_rst_mean(&unit2(), t, 1.0, 400, 30 + k as u64).unwrap())
        .collect();
    let gaps: Vec<f64> = stats.iter().map(|s| (s.mean - limit).abs()).collect();
    let rel = gaps[2] / limit;
    let mut shrinking = true;
    for k in 0..2 {
        let se = (stats[k].std_error_mean.powi(2) + stats[k + 1].std_error_mean.powi(2)).sqrt();
        shrinking &= gaps[k + 1] <= gaps[k] + se;
    }
    let detail = format!(
        "means {:.5}/{:.5}/{:.5} (se {:.1e}) vs {limit:.5}; rel gap at t=2000 {:.2}%",
        stats[0].mean,
        stats[1].mean,
        stats[2].mean,
        stats[2].std_error_mean,
        100.0 * rel
    );
    outcome(rel < 0.05 && shrinking, detail)
}

fn edge_law() -> Outcome {
    let r = ell_e_tail_check(2, &e2(), 10_000, 4).unwrap();
    outcome(r.ks < 0.02, format!("KS={:.4} over {} replicates", r.ks, r.replicates))
}

fn variance() -> Outcome {
    let ball0 = estimate_va_ball(8.0, 0.0, 2, &e2(), 2000, 50).unwrap();
    let int0 = estimate_va_integral(None, 0.0, 2, &e2(), 16, 100, 51).unwrap();
    let ok_i = int0.value == 1.0 && (ball0.value - 1.0).abs() <= 3.0 * ball0.std_error;

    let ball = estimate_va_ball(16.0, 1.0, 2, &e2(), 3000, 52).unwrap();
    let int = estimate_va_integral(None, 1.0, 2, &e2(), 128, 40_000, 53).unwrap();
    let z_ii = z_score(ball.value, ball.std_error, int.value, int.std_error);
    let ok_ii = z_ii <= 3.0 && !ball.ci_includes_zero && !int.ci_includes_zero;

    let var = estimate_rst_variance(&unit2(), 2000.0, 1.0, 2000, 54).unwrap();
    let z_iii = z_score(var.variance, var.std_error_variance, int.value, int.std_error);
    let ok_iii = z_iii <= 3.0;
    outcome(
        ok_i && ok_ii && ok_iii,
        format!(
            "(i) ball a=0 {:.4}±{:.4}, integral a=0 {}; (ii) ball {:.4}±{:.4} integral {:.4}±{:.4} z={:.2}; \
             (iii) t^(2a/d-1)V[L] {:.4}±{:.4} z={:.2}",
            ball0.value,
            ball0.std_error,
            int0.value,
            ball.value,
            ball.std_error,
            int.value,
            int.std_error,
            z_ii,
            var.variance,
            var.std_error_variance,
            z_iii
        ),
    )
}

fn clt() -> Outcome {
    let r = clt_experiment(&unit2(), 1.0, &[64.0, 256.0, 1024.0], 2000, 6, DEFAULT_SUBSAMPLES).unwrap();
    let ks: Vec<String> = r.rows.iter().map(|x| format!("{:.4}±{:.4}", x.ks, x.ks_stderr)).collect();
    let ok = r.decreasing() && r.final_ks() < 0.05 && (-0.85..=-0.15).contains(&r.slope);
    outcome(
        ok,
        format!("KS {} slope {:.3}±{:.3}, inversions {}", ks.join(" "), r.slope, r.slope_stderr, r.inversions),
    )
}

fn mecke() -> Outcome {
    let mut worst = 0.0f64;
    for (i, &a) in [0.0, 0.5, 1.0, 2.0].iter().enumerate() {
        for (j, &t) in [250.0, 1000.0].iter().enumerate() {
            let r = mecke_check(&unit2(), t, a, 400, 70 + (i * 2 + j) as u64).unwrap();
            worst = worst.max(r.z);
        }
    }
    outcome(worst <= 3.0, format!("max |lhs-rhs| = {worst:.2} combined SE over 8 cells"))
}

fn differences() -> Outcome {
    let w = unit2();
    let probes = vec![vec![0.1, 0.05], vec![-0.2, 0.15]];
    let zero = diff_moment_check(&w, &[250.0, 1000.0, 4000.0], &[0.0], &probes, &[0.5, 0.3], 200, 80).unwrap();
    let mom = diff_moment_check(&w, &[250.0, 1000.0, 4000.0], &[1.0], &probes, &[0.5, 0.3], 3000, 81).unwrap();
    let alpha = alpha_probe(&w, 9, 4000, 82).unwrap().alpha_w;
    let t: f64 = 1000.0;
    let step = t.powf(-0.5);
    let seps: Vec<f64> = [1e-6, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0].iter().map(|k| k * step).collect();
    let decay = diff2_decay_check(&w, t, 1.0, &[0.1, 0.1], &[1.0, 0.0], &seps, alpha, 2000, 83).unwrap();
    let ok = zero.zero_exponent_exact && mom.growth_within(2.0) && decay.below_bound(3.0);
    let freqs: Vec<String> = decay.rows.iter().map(|r| format!("{:.3}", r.frequency)).collect();
    outcome(
        ok,
        format!(
            "a=0 exact: {}; growth D {:.2}, D² {:.2}; alpha_W {:.3}; P(D²≠0) [{}] below curve: {}",
            zero.zero_exponent_exact,
            mom.max_growth_first,
            mom.max_growth_second,
            alpha,
            freqs.join(" "),
            decay.below_bound(3.0)
        ),
    )
}

fn properties() -> Outcome {
    let w = Window::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    for i in 0..100u64 {
        let s = sample_poisson(&w, 50.0, derive_replicate_seed(91, i)).unwrap();
        let pts = support::points(&s);
        let tree = build_rst(&s);
        for x in 0..pts.len() {
            let mut cur = x;
            let mut steps = 0;
            while let RadialParent::Node(p) = tree.parent[cur] {
                if sq_norm(&pts[p]) > sq_norm(&pts[cur]) {
                    failures.push("radial monotonicity");
                }
                cur = p;
                steps += 1;
                if steps > pts.len() {
                    failures.push("acyclicity");
                    break;
                }
            }
        }
        for &k in &[0.5, 2.0, 10.0] {
            let scaled = build_rst(&s.scaled(k).unwrap());
            if scaled.parent != tree.parent {
                failures.push("homogeneity (parents)");
            }
            for (a, b) in tree.edge_length.iter().zip(&scaled.edge_length) {
                if (b - k * a).abs() > 1e-12 * k * a {
                    failures.push("homogeneity (lengths)");
                }
            }
        }
        let e = random_direction(2, &mut rng);
        let extra = sample_poisson(&w, 20.0, derive_replicate_seed(92, i)).unwrap();
        let mut all = pts.clone();
        all.extend(support::points(&extra));
        let more = radtree::PointSample::from_points(w.clone(), &all).unwrap();
        let (t1, f0, f1) = (build_rst(&more), build_dsf(&s, &e).unwrap(), build_dsf(&more, &e).unwrap());
        for x in 0..pts.len() {
            if t1.edge_length[x] > tree.edge_length[x] {
                failures.push("monotonicity (RST)");
            }
            if f0.parent[x].is_some() && f1.edge_length[x] > f0.edge_length[x] {
                failures.push("monotonicity (DSF)");
            }
        }
        let spec = FunctionalSpec::rst(1.0).unwrap();
        let z1 = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        let z2 = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        let ctx = DiffContext::new(&spec, &s).unwrap();
        if ctx.diff_second(&z1, &z2).unwrap() != diff_second(&spec, &s, &z2, &z1).unwrap() {
            failures.push("D² symmetry");
        }
    }
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_rst_mean(&unit2(), 300.0, 1.0, 64, 93).unwrap())
    };
    let (one, four) = (run(1), run(4));
    if one.mean.to_bits() != four.mean.to_bits() || one.variance.to_bits() != four.variance.to_bits() {
        failures.push("worker-count reproducibility");
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "100 instances: acyclicity, radial monotonicity, homogeneity, monotonicity, D² symmetry, 1 vs 4 workers".into()
        } else {
            format!("violations: {}", failures.join(", "))
        },
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    (1, "closed forms", closed_forms),
    (2, "construction equals brute force", construction),
    (3, "expectation asymptotics", expectation),
    (4, "directed edge-length law", edge_law),
    (5, "variance asymptotics", variance),
    (6, "normal approximation rate", clt),
    (7, "Mecke identity", mecke),
    (8, "difference-operator conditions", differences),
    (9, "property suites", properties),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} [{name}]: {verdict} ({:.1}s) {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
