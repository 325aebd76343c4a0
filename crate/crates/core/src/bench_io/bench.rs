//! Benchmark matrix runner and CSV output.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use crate::error::Result;
use crate::gcsprog::SolveParams;
use crate::mrmp::{run_method, Method};

use super::gen::gen_instances;

/// Instances a method must solve (per map and robot count) to be averaged.
pub const MIN_SOLVED_FOR_MEAN: usize = 3;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub maps: Vec<String>,
    pub robot_counts: Vec<usize>,
    pub instances: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub budget_s: f64,
    pub solve_params: SolveParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            maps: vec!["empty".into()],
            robot_counts: (1..=4).collect(),
            instances: 12,
            methods: Method::ALL.to_vec(),
            seed: 0,
            budget_s: super::DEFAULT_BUDGET_S,
            solve_params: SolveParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub map: String,
    pub n: usize,
    pub instance_id: usize,
    pub method: Method,
    pub success: bool,
    pub runtime_s: f64,
    pub soc: Option<f64>,
    pub makespan: Option<f64>,
    pub nodes_expanded: usize,
    pub graph_edges_final: usize,
}

/// Runs every (map, n, instance, method) cell. Failures and errors are
/// recorded as unsuccessful rows.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for map in &cfg.maps {
        for &n in &cfg.robot_counts {
            let files = gen_instances(map, n, cfg.instances, cfg.seed)?;
            for (id, f) in files.iter().enumerate() {
                let inst = f.to_instance(cfg.solve_params.clone(), cfg.budget_s)?;
                for &method in &cfg.methods {
                    let t0 = Instant::now();
                    let out = run_method(&inst, method);
                    let runtime_s = t0.elapsed().as_secs_f64();
                    let mut row = BenchRow {
                        map: map.clone(),
                        n,
                        instance_id: id,
                        method,
                        success: false,
                        runtime_s,
                        soc: None,
                        makespan: None,
                        nodes_expanded: 0,
                        graph_edges_final: inst.graph.num_edges(),
                    };
                    match out {
                        Ok(out) => {
                            row.nodes_expanded = match method {
                                Method::Pbs => out.stats.nodes_expanded,
                                _ => out.stats.permutations,
                            };
                            if out.stats.graph_edges_final > 0 {
                                row.graph_edges_final = out.stats.graph_edges_final;
                            }
                            if let Some(sol) = out.solution {
                                row.success = true;
                                row.soc = Some(sol.metrics.soc);
                                row.makespan = Some(sol.metrics.makespan);
                            }
                        }
                        Err(e) => log::warn!("{map} n={n} #{id} {method}: {e}"),
                    }
                    log::info!(
                        "{map} n={n} #{id} {method}: success={} runtime={:.3}s",
                        row.success,
                        row.runtime_s
                    );
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Formats with 6 significant digits.
fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.5e}").parse::<f64>().unwrap().to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 10] = [
    "map",
    "n",
    "instance_id",
    "method",
    "success",
    "runtime_s",
    "soc",
    "makespan",
    "nodes_expanded",
    "graph_edges_final",
];

/// Writes rows sorted by (map, n, instance_id, method).
pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut sorted: Vec<&BenchRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.map, a.n, a.instance_id, a.method).cmp(&(&b.map, b.n, b.instance_id, b.method)));
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in sorted {
        wr.write_record([
            r.map.clone(),
            r.n.to_string(),
            r.instance_id.to_string(),
            r.method.to_string(),
            r.success.to_string(),
            sig6(r.runtime_s),
            opt(r.soc),
            opt(r.makespan),
            r.nodes_expanded.to_string(),
            r.graph_edges_final.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Per (map, n, method) success counts and means over the instances solved
/// by every method that solved at least [`MIN_SOLVED_FOR_MEAN`].
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub map: String,
    pub n: usize,
    pub method: Method,
    pub solved: usize,
    pub total: usize,
    /// `false` when the method solved too few instances to be averaged.
    pub averaged: bool,
    pub common_instances: usize,
    pub mean_runtime_s: Option<f64>,
    pub mean_soc: Option<f64>,
    pub mean_makespan: Option<f64>,
}

impl AggregateRow {
    pub fn success_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.solved as f64 / self.total as f64
        }
    }
}

pub fn aggregate(rows: &[BenchRow]) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(String, usize), BTreeMap<Method, Vec<&BenchRow>>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.map.clone(), r.n))
            .or_default()
            .entry(r.method)
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((map, n), by_method) in cells {
        let solved_ids = |rs: &[&BenchRow]| -> BTreeSet<usize> {
            rs.iter().filter(|r| r.success).map(|r| r.instance_id).collect()
        };
        let mut common: Option<BTreeSet<usize>> = None;
        for rs in by_method.values() {
            let ids = solved_ids(rs);
            if ids.len() >= MIN_SOLVED_FOR_MEAN {
                common = Some(match common {
                    None => ids,
                    Some(c) => c.intersection(&ids).copied().collect(),
                });
            }
        }
        let common = common.unwrap_or_default();
        for (method, rs) in by_method {
            let solved = solved_ids(&rs).len();
            let averaged = solved >= MIN_SOLVED_FOR_MEAN;
            let picked: Vec<&&BenchRow> = rs.iter().filter(|r| common.contains(&r.instance_id)).collect();
            let mean = |f: &dyn Fn(&BenchRow) -> f64| -> Option<f64> {
                (averaged && !picked.is_empty())
                    .then(|| picked.iter().map(|r| f(r)).sum::<f64>() / picked.len() as f64)
            };
            out.push(AggregateRow {
                map: map.clone(),
                n,
                method,
                solved,
                total: rs.len(),
                averaged,
                common_instances: if averaged { picked.len() } else { 0 },
                mean_runtime_s: mean(&|r| r.runtime_s),
                mean_soc: mean(&|r| r.soc.unwrap_or(f64::NAN)),
                mean_makespan: mean(&|r| r.makespan.unwrap_or(f64::NAN)),
            });
        }
    }
    out
}

pub fn write_summary_csv<W: Write>(agg: &[AggregateRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "map",
        "n",
        "method",
        "solved",
        "total",
        "success_rate",
        "common_instances",
        "mean_runtime_s",
        "mean_soc",
        "mean_makespan",
    ])?;
    for a in agg {
        wr.write_record([
            a.map.clone(),
            a.n.to_string(),
            a.method.to_string(),
            a.solved.to_string(),
            a.total.to_string(),
            sig6(a.success_rate()),
            a.common_instances.to_string(),
            opt(a.mean_runtime_s),
            opt(a.mean_soc),
            opt(a.mean_makespan),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
