use std::time::Instant;

use radtree::estimators::{
    alpha_probe_report, clt_experiment, diff2_decay_check, diff_moment_check, ell_e_tail_check, estimate_rst_mean,
    estimate_rst_variance, estimate_va_ball, estimate_va_integral, expectation_limit, mecke_check, mecke_tail_check,
    rst_tail_check, EstimatorRecord, MeckeReport, SummaryStats,
};
use radtree::functionals::{eval_dsf_functional, eval_rst_functional};
use radtree::geom::Window;
use radtree::pointprocess::{
    default_dilation_margin, format_f64, sample_poisson, sample_poisson_dilated, stream_seed, write_points_csv,
};
use radtree::spanning::{build_dsf, build_rst, write_edges_csv};
use radtree::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Graph, Method, RunConfig};

/// A CSV file produced by a command.
pub struct Table {
    pub name: String,
    pub contents: String,
}

pub struct Outcome {
    pub records: Vec<EstimatorRecord>,
    pub tables: Vec<Table>,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serialises")
}

struct Rec<'a> {
    op: &'a str,
    seed: u64,
    replicates: usize,
    start: Instant,
}

impl Rec<'_> {
    fn finish(self, params: Value, values: Value, std_errors: Value, metadata: Value) -> EstimatorRecord {
        EstimatorRecord {
            operation: self.op.to_string(),
            params,
            seed: self.seed,
            values,
            std_errors,
            replicates: self.replicates,
            runtime_ms: self.start.elapsed().as_millis() as u64,
            metadata,
        }
    }
}

fn rec(op: &str, seed: u64, replicates: usize) -> Rec<'_> {
    Rec {
        op,
        seed,
        replicates,
        start: Instant::now(),
    }
}

fn csv(name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Table {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    Table {
        name: name.to_string(),
        contents: s,
    }
}

fn f(v: f64) -> String {
    format_f64(v)
}

fn written<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(name: &str, w: F) -> Table {
    let mut buf = Vec::new();
    w(&mut buf).expect("writing to memory cannot fail");
    Table {
        name: name.to_string(),
        contents: String::from_utf8(buf).expect("CSV output is ASCII"),
    }
}

pub fn execute(c: &RunConfig) -> Result<Outcome, Error> {
    match c.command() {
        Command::Simulate => simulate(c),
        Command::Mean => mean(c),
        Command::Variance => variance(c),
        Command::Va => va(c),
        Command::Clt => clt(c),
        Command::Checks => checks(c),
    }
}

fn simulate(c: &RunConfig) -> Result<Outcome, Error> {
    let w = c.build_window()?;
    let (t, a, seed) = (c.t.unwrap(), c.a.unwrap(), c.seed());
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidIntensity(t));
    }
    let d = w.dim();
    let r = rec("simulate", seed, 1);
    let (sample, edges, fv, margin) = match c.graph.unwrap_or(Graph::Rst) {
        Graph::Rst => {
            let sample = sample_poisson(&w, t, seed)?;
            let tree = build_rst(&sample);
            let fv = eval_rst_functional(&tree, a)?;
            let edges = written("edges.csv", |b| write_edges_csv(tree.edge_rows(), b));
            (sample, edges, fv, 0.0)
        }
        Graph::Dsf => {
            let e = c.build_direction()?;
            let margin = match c.margin {
                Some(m) => m,
                None if t > 0.0 => default_dilation_margin(d)? * t.powf(-1.0 / d as f64),
                None => 0.0,
            };
            let sample = sample_poisson_dilated(&w, t, margin, seed)?;
            let forest = build_dsf(&sample, &e)?;
            let fv = eval_dsf_functional(&sample, &forest, &w, a)?;
            let edges = written("edges.csv", |b| write_edges_csv(forest.edge_rows(), b));
            (sample, edges, fv, margin)
        }
    };
    let points = written("points.csv", |b| write_points_csv(&sample, b));
    let record = r.finish(
        json!({ "graph": c.graph, "t": t, "a": a, "window": w, "direction": c.direction, "margin": margin }),
        json!({
            "functional": fv.value,
            "core_point_count": fv.point_count,
            "sample_point_count": sample.len(),
        }),
        Value::Null,
        json!({ "duplicates_rejected": sample.duplicates_rejected() }),
    );
    Ok(Outcome {
        records: vec![record],
        tables: vec![points, edges],
    })
}

fn stats_row(label: &str, t: f64, a: f64, s: &SummaryStats) -> Vec<String> {
    vec![
        label.to_string(),
        f(t),
        f(a),
        s.n.to_string(),
        f(s.mean),
        f(s.std_error_mean),
        f(s.variance),
        f(s.std_error_variance),
    ]
}

const STATS_HEADER: [&str; 8] = [
    "quantity",
    "t",
    "a",
    "n",
    "mean",
    "std_error_mean",
    "variance",
    "std_error_variance",
];

fn mean(c: &RunConfig) -> Result<Outcome, Error> {
    let w = c.build_window()?;
    let (t, a, n, seed) = (c.t.unwrap(), c.a.unwrap(), c.replicates.unwrap(), c.seed());
    let r = rec("estimate_rst_mean", seed, n);
    let s = estimate_rst_mean(&w, t, a, n, seed)?;
    let limit = expectation_limit(a, w.dim(), w.volume())?;
    let record = r.finish(
        json!({ "window": w, "t": t, "a": a }),
        json!({ "mean": s.mean, "limit": limit, "relative_gap": (s.mean - limit).abs() / limit }),
        json!({ "mean": s.std_error_mean }),
        json!({ "stats": s, "scaling": "t^(a/d-1) L" }),
    );
    Ok(Outcome {
        records: vec![record],
        tables: vec![csv("mean.csv", &STATS_HEADER, [stats_row("scaled_functional", t, a, &s)])],
    })
}

fn variance(c: &RunConfig) -> Result<Outcome, Error> {
    let w = c.build_window()?;
    let (t, a, n, seed) = (c.t.unwrap(), c.a.unwrap(), c.replicates.unwrap(), c.seed());
    let r = rec("estimate_rst_variance", seed, n);
    let s = estimate_rst_variance(&w, t, a, n, seed)?;
    let record = r.finish(
        json!({ "window": w, "t": t, "a": a }),
        json!({ "variance": s.variance, "per_volume": s.variance / w.volume() }),
        json!({ "variance": s.std_error_variance, "per_volume": s.std_error_variance / w.volume() }),
        json!({ "stats": s, "scaling": "t^(a/d-1/2) L" }),
    );
    Ok(Outcome {
        records: vec![record],
        tables: vec![csv("variance.csv", &STATS_HEADER, [stats_row("scaled_functional", t, a, &s)])],
    })
}

fn va(c: &RunConfig) -> Result<Outcome, Error> {
    let (a, d, n, seed) = (c.a.unwrap(), c.d.unwrap(), c.replicates.unwrap(), c.seed());
    let e = c.build_direction()?;
    let (op, est) = match c.method.unwrap_or(Method::Ball) {
        Method::Ball => {
            let r = rec("estimate_va_ball", seed, n);
            (r, estimate_va_ball(c.r.unwrap(), a, d, &e, n, seed)?)
        }
        Method::Integral => {
            let r = rec("estimate_va_integral", seed, n);
            let est = estimate_va_integral(c.r_trunc, a, d, &e, c.z_samples.unwrap(), n, seed)?;
            (r, est)
        }
    };
    let table = csv(
        "va.csv",
        &["method", "a", "d", "value", "std_error", "radius", "replicates"],
        [vec![
            to_json(&est.method).as_str().unwrap_or_default().to_string(),
            f(a),
            d.to_string(),
            f(est.value),
            f(est.std_error),
            f(est.radius),
            est.replicates.to_string(),
        ]],
    );
    let record = op.finish(
        json!({ "a": a, "d": d, "direction": e, "r": c.r, "r_trunc": c.r_trunc, "z_samples": c.z_samples }),
        to_json(&est),
        json!({ "value": est.std_error }),
        Value::Null,
    );
    Ok(Outcome {
        records: vec![record],
        tables: vec![table],
    })
}

fn clt(c: &RunConfig) -> Result<Outcome, Error> {
    let w = c.build_window()?;
    let (a, n, seed) = (c.a.unwrap(), c.replicates.unwrap(), c.seed());
    let t_list = c.t_list.clone().unwrap();
    let subsamples = c.subsamples.unwrap();
    let r = rec("clt_experiment", seed, n);
    let rep = clt_experiment(&w, a, &t_list, n, seed, subsamples)?;
    let table = csv(
        "clt.csv",
        &["t", "ks", "ks_stderr"],
        rep.rows.iter().map(|row| vec![f(row.t), f(row.ks), f(row.ks_stderr)]),
    );
    let record = r.finish(
        json!({ "window": w, "a": a, "t_list": t_list, "subsamples": subsamples }),
        json!({
            "ks": rep.rows.iter().map(|r| r.ks).collect::<Vec<_>>(),
            "slope": rep.slope,
            "inversions": rep.inversions,
            "significant_inversions": rep.significant_inversions,
        }),
        json!({
            "ks": rep.rows.iter().map(|r| r.ks_stderr).collect::<Vec<_>>(),
            "slope": rep.slope_stderr,
        }),
        to_json(&rep),
    );
    Ok(Outcome {
        records: vec![record],
        tables: vec![table],
    })
}

/// Point at `center + frac · half_width` along the first axis, or along
/// every axis when `all_axes` is set.
fn probe_point(w: &Window, frac: f64, all_axes: bool) -> Vec<f64> {
    let (lo, hi) = w.bounding_box();
    (0..w.dim())
        .map(|i| {
            let mid = 0.5 * (lo[i] + hi[i]);
            if i == 0 || all_axes {
                mid + frac * 0.5 * (hi[i] - lo[i])
            } else {
                mid
            }
        })
        .collect()
}

fn mecke_row(label: &str, param: f64, m: &MeckeReport) -> Vec<String> {
    vec![
        label.to_string(),
        f(param),
        f(m.lhs.mean),
        f(m.lhs.std_error_mean),
        f(m.rhs.mean),
        f(m.rhs.std_error_mean),
        f(m.z),
    ]
}

fn checks(c: &RunConfig) -> Result<Outcome, Error> {
    let w = c.build_window()?;
    let (t, a, n, seed) = (c.t.unwrap(), c.a.unwrap(), c.replicates.unwrap(), c.seed());
    let e = c.build_direction()?;
    let d = w.dim();
    let step = t.powf(-1.0 / d as f64);
    let mut records = Vec::new();

    let r = rec("alpha_probe", seed, 1);
    let alpha = alpha_probe_report(&w, 9, 4000, stream_seed(seed, 0, 0))?;
    records.push(r.finish(
        json!({ "window": w, "grid_points": 9, "mc_per_cell": 4000 }),
        json!({ "alpha_w": alpha.params.alpha_w, "min_ratio": alpha.min_ratio }),
        json!({ "min_ratio": alpha.min_std_error }),
        to_json(&alpha),
    ));

    let r = rec("mecke_check", seed, n);
    let m_pow = mecke_check(&w, t, a, n, stream_seed(seed, 1, 0))?;
    let m_tail = mecke_tail_check(&w, t, step, n, stream_seed(seed, 2, 0))?;
    records.push(r.finish(
        json!({ "t": t, "a": a, "tail_u": step }),
        json!({ "power_z": m_pow.z, "tail_z": m_tail.z }),
        Value::Null,
        json!({ "power": m_pow, "tail": m_tail }),
    ));
    let mecke_table = csv(
        "mecke.csv",
        &["check", "parameter", "lhs_mean", "lhs_std_error", "rhs_mean", "rhs_std_error", "z"],
        [mecke_row("power", a, &m_pow), mecke_row("tail", step, &m_tail)],
    );

    let r = rec("tail_comparison", seed, n);
    let x = probe_point(&w, 0.4, false);
    let u_list: Vec<f64> = [0.5, 1.0, 1.5, 2.0, 3.0].iter().map(|k| k * step).collect();
    let tails = rst_tail_check(&w, t, &x, &u_list, &alpha.params, n, stream_seed(seed, 3, 0))?;
    let law = ell_e_tail_check(d, &e, 10 * n, stream_seed(seed, 4, 0))?;
    records.push(r.finish(
        json!({ "t": t, "x": x, "u": u_list, "direction": e, "law_replicates": 10 * n }),
        json!({
            "tail_below_bound": tails.iter().all(|row| row.below_bound(3.0)),
            "ell_e_ks": law.ks,
        }),
        Value::Null,
        json!({ "rst_tail": tails, "ell_e_law": law }),
    ));
    let tail_table = csv(
        "tail.csv",
        &["u", "empirical", "std_error", "bound"],
        tails.iter().map(|row| vec![f(row.u), f(row.empirical), f(row.std_error), f(row.bound)]),
    );

    let r = rec("diff_moment_check", seed, n);
    let probes = vec![probe_point(&w, 0.2, true), probe_point(&w, -0.3, true)];
    let mut offset = vec![0.0; d];
    offset[0] = 0.5;
    if d > 1 {
        offset[1] = 0.3;
    }
    let t_list = [t / 4.0, t];
    let moments = diff_moment_check(&w, &t_list, &[a], &probes, &offset, n, stream_seed(seed, 5, 0))?;
    records.push(r.finish(
        json!({ "t_list": t_list, "a": a, "probes": probes, "offset": offset }),
        json!({ "max_growth_first": moments.max_growth_first, "max_growth_second": moments.max_growth_second }),
        Value::Null,
        to_json(&moments),
    ));
    let moment_table = csv(
        "moments.csv",
        &["t", "a", "probe", "first_mean", "first_std_error", "second_mean", "second_std_error"],
        moments.rows.iter().map(|row| {
            vec![
                f(row.t),
                f(row.a),
                row.probe.to_string(),
                f(row.first.mean),
                f(row.first.std_error_mean),
                f(row.second.mean),
                f(row.second.std_error_mean),
            ]
        }),
    );

    let r = rec("diff2_decay_check", seed, n);
    let z1 = probe_point(&w, 0.2, false);
    let mut unit = vec![0.0; d];
    unit[0] = 1.0;
    let seps: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0].iter().map(|k| k * step).collect();
    let decay = diff2_decay_check(&w, t, a, &z1, &unit, &seps, alpha.params.alpha_w, n, stream_seed(seed, 6, 0))?;
    records.push(r.finish(
        json!({ "t": t, "a": a, "z1": z1, "unit": unit, "separations": seps, "alpha_w": alpha.params.alpha_w }),
        json!({ "below_bound": decay.below_bound(3.0), "monotone_violations": decay.monotone_violations }),
        Value::Null,
        to_json(&decay),
    ));
    let decay_table = csv(
        "decay.csv",
        &["separation", "frequency", "std_error", "bound"],
        decay
            .rows
            .iter()
            .map(|row| vec![f(row.separation), f(row.frequency), f(row.std_error), f(row.bound)]),
    );

    Ok(Outcome {
        records,
        tables: vec![mecke_table, tail_table, moment_table, decay_table],
    })
}
