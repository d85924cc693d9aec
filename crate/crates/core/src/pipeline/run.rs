//! Experiment execution: deterministic task enumeration, cached per-task
//! records, and table emission.
//!
//! A run is a flat task list derived from the config. Each task computes in
//! isolation from its recorded seeds, writes a `records/task_NNNNNN.rec`
//! file, and the tables are assembled afterwards in task order. Reruns skip
//! tasks whose record matches the config hash, so interrupted runs resume
//! where they stopped. Worker count affects scheduling only: tables are
//! emitted from the ordered result vector, and per-task wall times stay in
//! the records, never in the tables.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::couplings::{sample_couplings, CouplingSet};
use crate::eigensolve::{
    dense_eigh, filter_diagonalize, FilterConfig, SpectralWindow,
};
use crate::error::{Error, Result};
use crate::fermion::{assemble_hamiltonian, Parity};
use crate::graph::{base_circulant, watts_strogatz, Graph, GraphSpec};
use crate::io::{fmt_f64, write_histogram_csv};
use crate::pipeline::config::{ExperimentConfig, ExperimentKind, Method};
use crate::seeds::{derive_seed, StreamTag};
use crate::stats;

/// Execution knobs that are not part of the experiment's identity.
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads for the task pool; 0 picks the library default.
    pub jobs: usize,
    pub out_dir: PathBuf,
}

/// What a finished run did.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub config_hash: String,
    pub tasks_total: usize,
    pub tasks_reused: usize,
    /// Emitted tables, in emission order.
    pub tables: Vec<PathBuf>,
}

/// One unit of work, fully determined by the config.
#[derive(Clone, Debug)]
struct Task {
    id: usize,
    n_index: usize,
    p_index: usize,
    graph_index: usize,
    realization: usize,
    n: usize,
    p: f64,
    graph_seed: u64,
    coupling_seed: u64,
    solver_seed: u64,
}

type Record = BTreeMap<String, String>;

fn enumerate_tasks(cfg: &ExperimentConfig) -> Vec<Task> {
    let mut tasks = Vec::new();
    let push = |n_index: usize,
                    p_index: usize,
                    graph_index: usize,
                    realization: usize,
                    graph_stream: u64,
                    coupling_stream: u64,
                    tasks: &mut Vec<Task>| {
        let id = tasks.len();
        tasks.push(Task {
            id,
            n_index,
            p_index,
            graph_index,
            realization,
            n: cfg.n_list[n_index],
            p: cfg.p_list[p_index],
            graph_seed: derive_seed(cfg.base_seed, StreamTag::Graph, graph_stream),
            coupling_seed: derive_seed(cfg.base_seed, StreamTag::Coupling, coupling_stream),
            solver_seed: derive_seed(cfg.base_seed, StreamTag::Solver, id as u64),
        });
    };
    match cfg.kind {
        // one graph per p; coupling streams shared across p so every p sees
        // the same disorder realizations
        ExperimentKind::Fig2 => {
            for ip in 0..cfg.p_list.len() {
                for r in 0..cfg.realizations {
                    push(0, ip, 0, r, ip as u64, r as u64, &mut tasks);
                }
            }
        }
        // fixed circulant per N; fresh couplings per (N, realization)
        ExperimentKind::Fig3 | ExperimentKind::Histogram => {
            for i_n in 0..cfg.n_list.len() {
                for r in 0..cfg.realizations {
                    let stream = (i_n * cfg.realizations + r) as u64;
                    push(i_n, 0, 0, r, i_n as u64, stream, &mut tasks);
                }
            }
        }
        ExperimentKind::Fig4 => {
            for ip in 0..cfg.p_list.len() {
                for g in 0..cfg.graph_count {
                    let gs = (ip * cfg.graph_count + g) as u64;
                    for r in 0..cfg.realizations {
                        let cs = gs * cfg.realizations as u64 + r as u64;
                        push(0, ip, g, r, gs, cs, &mut tasks);
                    }
                }
            }
        }
        ExperimentKind::Custom => {
            for i_n in 0..cfg.n_list.len() {
                for ip in 0..cfg.p_list.len() {
                    for g in 0..cfg.graph_count {
                        let gs = ((i_n * cfg.p_list.len() + ip) * cfg.graph_count + g) as u64;
                        for r in 0..cfg.realizations {
                            let cs = gs * cfg.realizations as u64 + r as u64;
                            push(i_n, ip, g, r, gs, cs, &mut tasks);
                        }
                    }
                }
            }
        }
    }
    tasks
}

fn output_keys(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Fig2 => &[
            "mean_r_rewired",
            "count_rewired",
            "mean_r_base",
            "count_base",
        ],
        _ => &["mean_r", "count"],
    }
}

/// Central r ratio of one many-body Hamiltonian in the even sector.
fn many_body_mean_r(
    cfg: &ExperimentConfig,
    graph: &Graph,
    couplings: &CouplingSet,
    solver_seed: u64,
) -> Result<(f64, u64)> {
    let h = assemble_hamiltonian(graph, couplings, cfg.impurity, Parity::Even)?;
    let spectrum = match cfg.method {
        Method::Dense => dense_eigh(h.matrix())?,
        Method::Filter => {
            let window = SpectralWindow::CenterFraction(cfg.window_fraction);
            let spectrum =
                filter_diagonalize(&h, &window, &FilterConfig::default(), solver_seed)?;
            if !spectrum.complete {
                return Err(Error::non_convergence(
                    "filter run did not certify window completeness; r statistics \
                     on a partial window would be biased",
                ));
            }
            spectrum
        }
    };
    let r = stats::mean_r_central(&spectrum, cfg.window_fraction)?;
    Ok((r.mean_r, r.count as u64))
}

fn execute_task(cfg: &ExperimentConfig, task: &Task) -> Result<Record> {
    let spec = GraphSpec {
        n_vertices: task.n,
        k: cfg.k,
        p: task.p,
        seed: task.graph_seed,
    };
    let mut out = Record::new();
    match cfg.kind {
        ExperimentKind::Fig2 => {
            let rewired = watts_strogatz(&spec)?;
            let base = base_circulant(&spec)?;
            let couplings = sample_couplings(&rewired, task.coupling_seed)?;
            let (r_rew, c_rew) = many_body_mean_r(cfg, &rewired, &couplings, task.solver_seed)?;
            // same coupling vector on the unrewired graph: couplings are
            // keyed by edge index, and both graphs have k*N edges
            let (r_base, c_base) = many_body_mean_r(cfg, &base, &couplings, task.solver_seed)?;
            out.insert("mean_r_rewired".into(), fmt_f64(r_rew));
            out.insert("count_rewired".into(), c_rew.to_string());
            out.insert("mean_r_base".into(), fmt_f64(r_base));
            out.insert("count_base".into(), c_base.to_string());
        }
        ExperimentKind::Fig3 | ExperimentKind::Histogram => {
            let graph = base_circulant(&spec)?;
            let couplings = sample_couplings(&graph, task.coupling_seed)?;
            let (mean_r, count) = many_body_mean_r(cfg, &graph, &couplings, task.solver_seed)?;
            out.insert("mean_r".into(), fmt_f64(mean_r));
            out.insert("count".into(), count.to_string());
        }
        ExperimentKind::Custom => {
            let graph = watts_strogatz(&spec)?;
            let couplings = sample_couplings(&graph, task.coupling_seed)?;
            let (mean_r, count) = many_body_mean_r(cfg, &graph, &couplings, task.solver_seed)?;
            out.insert("mean_r".into(), fmt_f64(mean_r));
            out.insert("count".into(), count.to_string());
        }
        ExperimentKind::Fig4 => {
            let graph = watts_strogatz(&spec)?;
            let couplings = sample_couplings(&graph, task.coupling_seed)?;
            let r = crate::dyson::single_particle_rstats(&graph, &couplings, cfg.window_fraction)?;
            out.insert("mean_r".into(), fmt_f64(r.mean_r));
            out.insert("count".into(), r.count.to_string());
        }
    }
    Ok(out)
}

fn record_path(out_dir: &Path, task_id: usize) -> PathBuf {
    out_dir.join("records").join(format!("task_{task_id:06}.rec"))
}

fn write_record(out_dir: &Path, record: &Record, task_id: usize) -> Result<()> {
    let path = record_path(out_dir, task_id);
    let tmp = path.with_extension("rec.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        for (k, v) in record {
            writeln!(f, "{k}={v}")?;
        }
        f.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(())
}

/// A record is reusable when it parses, carries the current config hash, a
/// finished status, and every output the kind promises.
fn load_record(out_dir: &Path, task_id: usize, hash: &str, kind: ExperimentKind) -> Option<Record> {
    let text = fs::read_to_string(record_path(out_dir, task_id)).ok()?;
    let mut record = Record::new();
    for line in text.lines() {
        let (k, v) = line.split_once('=')?;
        record.insert(k.to_string(), v.to_string());
    }
    if record.get("config_hash").map(String::as_str) != Some(hash) {
        return None;
    }
    if record.get("status").map(String::as_str) != Some("ok") {
        return None;
    }
    if !output_keys(kind).iter().all(|k| record.contains_key(*k)) {
        return None;
    }
    Some(record)
}

fn record_inputs(cfg: &ExperimentConfig, task: &Task, hash: &str) -> Record {
    let mut r = Record::new();
    r.insert("config_hash".into(), hash.to_string());
    r.insert("task_id".into(), task.id.to_string());
    r.insert("kind".into(), cfg.kind.as_str().to_string());
    r.insert("method".into(), cfg.method.as_str().to_string());
    r.insert("n".into(), task.n.to_string());
    r.insert("k".into(), cfg.k.to_string());
    r.insert("p".into(), fmt_f64(task.p));
    r.insert("n_index".into(), task.n_index.to_string());
    r.insert("p_index".into(), task.p_index.to_string());
    r.insert("graph_index".into(), task.graph_index.to_string());
    r.insert("realization".into(), task.realization.to_string());
    r.insert("graph_seed".into(), task.graph_seed.to_string());
    r.insert("coupling_seed".into(), task.coupling_seed.to_string());
    r.insert("solver_seed".into(), task.solver_seed.to_string());
    r.insert("impurity".into(), cfg.impurity.to_string());
    r.insert("window_fraction".into(), fmt_f64(cfg.window_fraction));
    r
}

/// Run (or resume) the experiment and emit its tables.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let out_dir = &opts.out_dir;
    fs::create_dir_all(out_dir.join("records"))?;
    let hash = cfg.hash();
    fs::write(out_dir.join("config_used.toml"), cfg.canonical_toml())?;

    let tasks = enumerate_tasks(cfg);
    let mut records: Vec<Option<Record>> = tasks
        .iter()
        .map(|t| load_record(out_dir, t.id, &hash, cfg.kind))
        .collect();
    let tasks_reused = records.iter().filter(|r| r.is_some()).count();

    let todo: Vec<Task> = tasks
        .iter()
        .filter(|t| records[t.id].is_none())
        .cloned()
        .collect();
    let fresh: Vec<(usize, Result<Record>)> = crate::par::run_with_jobs(
        opts.jobs,
        todo,
        |task| {
            let started = Instant::now();
            let mut record = record_inputs(cfg, &task, &hash);
            let outcome = execute_task(cfg, &task);
            record.insert(
                "wall_ms".into(),
                started.elapsed().as_millis().to_string(),
            );
            let result = match outcome {
                Ok(outputs) => {
                    record.insert("status".into(), "ok".into());
                    record.extend(outputs);
                    Ok(record)
                }
                Err(e) => {
                    record.insert("status".into(), "failed".into());
                    record.insert("error".into(), e.to_string().replace('\n', " "));
                    Err((record, e))
                }
            };
            (task.id, result)
        },
    )
    .into_iter()
    .map(|(id, result)| match result {
        Ok(rec) => (id, Ok(rec)),
        Err((rec, e)) => {
            // persist the failure so a rerun retries exactly this task
            let _ = write_record(out_dir, &rec, id);
            (id, Err(e))
        }
    })
    .collect();

    let mut first_error = None;
    for (id, result) in fresh {
        match result {
            Ok(record) => {
                write_record(out_dir, &record, id)?;
                records[id] = Some(record);
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    let records: Vec<Record> = records.into_iter().map(Option::unwrap).collect();

    let tables = emit_tables(cfg, out_dir, &hash, &tasks, &records)?;

    let mut manifest = String::new();
    manifest.push_str(&format!("config_hash={hash}\n"));
    manifest.push_str(&format!("kind={}\n", cfg.kind.as_str()));
    manifest.push_str(&format!("schema_version={}\n", cfg.schema_version));
    manifest.push_str(&format!("tasks={}\n", tasks.len()));
    manifest.push_str("status=complete\n");
    fs::write(out_dir.join("manifest.txt"), manifest)?;

    Ok(RunSummary {
        config_hash: hash,
        tasks_total: tasks.len(),
        tasks_reused,
        tables,
    })
}

fn base_metadata(cfg: &ExperimentConfig, hash: &str) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("config_hash".into(), hash.to_string());
    m.insert("kind".into(), cfg.kind.as_str().into());
    m.insert("schema_version".into(), cfg.schema_version.to_string());
    m.insert("base_seed".into(), cfg.base_seed.to_string());
    m.insert("k".into(), cfg.k.to_string());
    m.insert("method".into(), cfg.method.as_str().into());
    m.insert("window_fraction".into(), fmt_f64(cfg.window_fraction));
    if cfg.kind != ExperimentKind::Fig4 {
        m.insert("impurity".into(), cfg.impurity.to_string());
    }
    m
}

fn write_table(
    path: &Path,
    metadata: &BTreeMap<String, String>,
    header: &str,
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Mean and sample standard deviation (n - 1); std is 0 for n < 2.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn get_f64(record: &Record, key: &str) -> f64 {
    record[key].parse().expect("records are written by fmt_f64")
}

fn emit_tables(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    hash: &str,
    tasks: &[Task],
    records: &[Record],
) -> Result<Vec<PathBuf>> {
    let mut tables = Vec::new();
    match cfg.kind {
        ExperimentKind::Fig2 => {
            let mut summary_rows = Vec::new();
            for (ip, &p) in cfg.p_list.iter().enumerate() {
                let ids: Vec<usize> = tasks
                    .iter()
                    .filter(|t| t.p_index == ip)
                    .map(|t| t.id)
                    .collect();
                let mut metadata = base_metadata(cfg, hash);
                metadata.insert("n".into(), cfg.n_list[0].to_string());
                metadata.insert("p".into(), fmt_f64(p));
                metadata.insert("p_index".into(), ip.to_string());
                metadata.insert("graph_seed".into(), tasks[ids[0]].graph_seed.to_string());
                let rows: Vec<Vec<String>> = ids
                    .iter()
                    .map(|&id| {
                        vec![
                            tasks[id].realization.to_string(),
                            tasks[id].coupling_seed.to_string(),
                            records[id]["mean_r_rewired"].clone(),
                            records[id]["mean_r_base"].clone(),
                            records[id]["count_rewired"].clone(),
                            records[id]["count_base"].clone(),
                        ]
                    })
                    .collect();
                let path = out_dir.join(format!("fig2_p{ip:02}.csv"));
                write_table(
                    &path,
                    &metadata,
                    "realization_index,coupling_seed,mean_r_rewired,mean_r_base,count_rewired,count_base",
                    &rows,
                )?;
                tables.push(path);

                let rew: Vec<f64> = ids.iter().map(|&i| get_f64(&records[i], "mean_r_rewired")).collect();
                let bas: Vec<f64> = ids.iter().map(|&i| get_f64(&records[i], "mean_r_base")).collect();
                let (rm, rs) = mean_std(&rew);
                let (bm, bs) = mean_std(&bas);
                summary_rows.push(vec![
                    ip.to_string(),
                    fmt_f64(p),
                    tasks[ids[0]].graph_seed.to_string(),
                    fmt_f64(rm),
                    fmt_f64(rs),
                    fmt_f64(bm),
                    fmt_f64(bs),
                    ids.len().to_string(),
                ]);
            }
            let mut metadata = base_metadata(cfg, hash);
            metadata.insert("n".into(), cfg.n_list[0].to_string());
            let path = out_dir.join("fig2_summary.csv");
            write_table(
                &path,
                &metadata,
                "p_index,p,graph_seed,mean_r_rewired_mean,mean_r_rewired_std,mean_r_base_mean,mean_r_base_std,realizations",
                &summary_rows,
            )?;
            tables.push(path);
        }
        ExperimentKind::Fig3 => {
            let mut summary_rows = Vec::new();
            for (i_n, &n) in cfg.n_list.iter().enumerate() {
                let ids: Vec<usize> = tasks
                    .iter()
                    .filter(|t| t.n_index == i_n)
                    .map(|t| t.id)
                    .collect();
                let mut metadata = base_metadata(cfg, hash);
                metadata.insert("n".into(), n.to_string());
                metadata.insert("p".into(), fmt_f64(0.0));
                let rows: Vec<Vec<String>> = ids
                    .iter()
                    .map(|&id| {
                        vec![
                            tasks[id].realization.to_string(),
                            tasks[id].coupling_seed.to_string(),
                            records[id]["mean_r"].clone(),
                            records[id]["count"].clone(),
                        ]
                    })
                    .collect();
                let path = out_dir.join(format!("fig3_n{n}.csv"));
                write_table(
                    &path,
                    &metadata,
                    "realization_index,coupling_seed,mean_r,count",
                    &rows,
                )?;
                tables.push(path);

                let vals: Vec<f64> = ids.iter().map(|&i| get_f64(&records[i], "mean_r")).collect();
                let (m, s) = mean_std(&vals);
                summary_rows.push(vec![
                    n.to_string(),
                    fmt_f64(m),
                    fmt_f64(s),
                    ids.len().to_string(),
                ]);
            }
            let path = out_dir.join("fig3_summary.csv");
            write_table(
                &path,
                &base_metadata(cfg, hash),
                "n,mean_r_mean,mean_r_std,realizations",
                &summary_rows,
            )?;
            tables.push(path);
        }
        ExperimentKind::Fig4 => {
            let mut summary_rows = Vec::new();
            for (ip, &p) in cfg.p_list.iter().enumerate() {
                let ids: Vec<usize> = tasks
                    .iter()
                    .filter(|t| t.p_index == ip)
                    .map(|t| t.id)
                    .collect();
                let mut metadata = base_metadata(cfg, hash);
                metadata.insert("n".into(), cfg.n_list[0].to_string());
                metadata.insert("p".into(), fmt_f64(p));
                metadata.insert("p_index".into(), ip.to_string());
                let rows: Vec<Vec<String>> = ids
                    .iter()
                    .enumerate()
                    .map(|(row, &id)| {
                        vec![
                            row.to_string(),
                            tasks[id].graph_index.to_string(),
                            tasks[id].graph_seed.to_string(),
                            tasks[id].coupling_seed.to_string(),
                            records[id]["mean_r"].clone(),
                            records[id]["count"].clone(),
                        ]
                    })
                    .collect();
                let path = out_dir.join(format!("fig4_p{ip:02}.csv"));
                write_table(
                    &path,
                    &metadata,
                    "record_index,graph_index,graph_seed,coupling_seed,mean_r,count",
                    &rows,
                )?;
                tables.push(path);

                let vals: Vec<f64> = ids.iter().map(|&i| get_f64(&records[i], "mean_r")).collect();
                let (m, s) = mean_std(&vals);
                summary_rows.push(vec![
                    ip.to_string(),
                    fmt_f64(p),
                    fmt_f64(m),
                    fmt_f64(s),
                    ids.len().to_string(),
                ]);
            }
            let mut metadata = base_metadata(cfg, hash);
            metadata.insert("n".into(), cfg.n_list[0].to_string());
            let path = out_dir.join("fig4_summary.csv");
            write_table(
                &path,
                &metadata,
                "p_index,p,mean_r_mean,mean_r_std,records",
                &summary_rows,
            )?;
            tables.push(path);
        }
        ExperimentKind::Histogram => {
            for (i_n, &n) in cfg.n_list.iter().enumerate() {
                let ids: Vec<usize> = tasks
                    .iter()
                    .filter(|t| t.n_index == i_n)
                    .map(|t| t.id)
                    .collect();
                let mut metadata = base_metadata(cfg, hash);
                metadata.insert("n".into(), n.to_string());
                metadata.insert("p".into(), fmt_f64(0.0));
                let rows: Vec<Vec<String>> = ids
                    .iter()
                    .map(|&id| {
                        vec![
                            tasks[id].realization.to_string(),
                            tasks[id].coupling_seed.to_string(),
                            records[id]["mean_r"].clone(),
                            records[id]["count"].clone(),
                        ]
                    })
                    .collect();
                let samples_path = out_dir.join(format!("histogram_samples_n{n}.csv"));
                write_table(
                    &samples_path,
                    &metadata,
                    "realization_index,coupling_seed,mean_r,count",
                    &rows,
                )?;
                tables.push(samples_path);

                let vals: Vec<f64> = ids.iter().map(|&i| get_f64(&records[i], "mean_r")).collect();
                let hist = stats::histogram(&vals, cfg.bins, (0.35, 0.70))?;
                let mut metadata = metadata.clone();
                metadata.insert("samples".into(), vals.len().to_string());
                metadata.insert(
                    "dip_statistic".into(),
                    fmt_f64(stats::dip_statistic(&vals)),
                );
                let hist_path = out_dir.join(format!("histogram_n{n}.csv"));
                write_histogram_csv(&hist_path, &metadata, &hist)?;
                tables.push(hist_path);
            }
        }
        ExperimentKind::Custom => {
            for (i_n, &n) in cfg.n_list.iter().enumerate() {
                for (ip, &p) in cfg.p_list.iter().enumerate() {
                    let ids: Vec<usize> = tasks
                        .iter()
                        .filter(|t| t.n_index == i_n && t.p_index == ip)
                        .map(|t| t.id)
                        .collect();
                    let mut metadata = base_metadata(cfg, hash);
                    metadata.insert("n".into(), n.to_string());
                    metadata.insert("p".into(), fmt_f64(p));
                    metadata.insert("p_index".into(), ip.to_string());
                    let rows: Vec<Vec<String>> = ids
                        .iter()
                        .enumerate()
                        .map(|(row, &id)| {
                            vec![
                                row.to_string(),
                                tasks[id].graph_index.to_string(),
                                tasks[id].graph_seed.to_string(),
                                tasks[id].coupling_seed.to_string(),
                                records[id]["mean_r"].clone(),
                                records[id]["count"].clone(),
                            ]
                        })
                        .collect();
                    let path = out_dir.join(format!("custom_n{n}_p{ip:02}.csv"));
                    write_table(
                        &path,
                        &metadata,
                        "record_index,graph_index,graph_seed,coupling_seed,mean_r,count",
                        &rows,
                    )?;
                    tables.push(path);
                }
            }
        }
    }
    Ok(tables)
}
