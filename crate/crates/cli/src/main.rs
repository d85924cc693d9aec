//! Command-line front end: one subcommand per stage of the analysis, plus a
//! driver for the seeded experiment sweeps. File formats are the plain-text
//! ones of `swsyk::io`; every float is printed with 17 significant digits.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swsyk::couplings::{sample_couplings, single_particle_matrix, CouplingSet};
use swsyk::dyson::{bogoliubov, rotate_quartic};
use swsyk::eigensolve::{
    dense_eigh, filter_diagonalize, FilterConfig, SpectralWindow, Spectrum,
};
use swsyk::fermion::{assemble_hamiltonian, Parity};
use swsyk::graph::{watts_strogatz, Graph, GraphSpec};
use swsyk::io::{self, fmt_f64};
use swsyk::pipeline::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use swsyk::stats;
use swsyk::{Error, Result};

#[derive(Parser)]
#[command(
    name = "swsyk",
    version,
    about = "Interior spectra and level statistics of Majorana Hamiltonians on small-world graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a small-world graph and write it as a plain-text edge list.
    GenerateGraph {
        /// Vertex count (even: one Majorana mode per vertex).
        #[arg(long)]
        n: usize,
        /// Neighbors per side in the circulant base ring.
        #[arg(long)]
        k: usize,
        /// Rewiring probability, in [0, 1].
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        /// Output graph file.
        #[arg(long)]
        out: PathBuf,
    },

    /// Diagonalize the single-particle hopping matrix of a coupled graph.
    SingleParticle {
        /// Input graph file.
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        couplings: CouplingSource,
        /// Also write the coupling realization that was used.
        #[arg(long)]
        save_couplings: Option<PathBuf>,
        /// Output spectrum CSV (full symmetric spectrum, ascending).
        #[arg(long)]
        out: PathBuf,
    },

    /// Assemble the many-body Hamiltonian in one parity sector and extract
    /// its spectrum, dense or through the interior filter.
    ManyBody {
        /// Input graph file.
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        couplings: CouplingSource,
        /// Drop the quartic impurity, leaving the free quadratic model.
        #[arg(long)]
        no_impurity: bool,
        /// Parity sector to restrict to.
        #[arg(long, value_enum, default_value_t = SectorArg::Even)]
        sector: SectorArg,
        /// dense: every sector eigenvalue; filter: an interior window only.
        #[arg(long, value_enum, default_value_t = MethodArg::Dense)]
        method: MethodArg,
        /// Central spectral fraction the filter targets.
        #[arg(long, default_value_t = 0.2)]
        window_fraction: f64,
        /// Seed of the filter's random start block.
        #[arg(long, default_value_t = 1)]
        solver_seed: u64,
        /// Also dump the assembled sparse matrix (binary, reusable).
        #[arg(long)]
        save_matrix: Option<PathBuf>,
        /// Output spectrum CSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Level-spacing r statistics of a spectrum CSV.
    RStats {
        /// Input spectrum CSV.
        #[arg(long)]
        spectrum: PathBuf,
        /// Central fraction of levels entering the mean, by rank. Ignored
        /// when the spectrum was already restricted to a window.
        #[arg(long, default_value_t = 0.2)]
        fraction: f64,
        /// Treat the input as a symmetric single-particle spectrum: fold to
        /// the non-negative half and drop the lowest 1% of energies first.
        #[arg(long)]
        single_particle: bool,
        /// Also write a one-row statistics CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Bring the quadratic part to canonical form and rotate the quartic
    /// impurity into the eigenmode basis.
    Bogoliubov {
        /// Input graph file.
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        couplings: CouplingSource,
        /// Relative magnitude threshold below which rotated coefficients
        /// are neither stored nor counted as support.
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        /// Also write the positive mode energies as a spectrum CSV.
        #[arg(long)]
        modes_out: Option<PathBuf>,
        /// Output coefficient CSV of the rotated impurity.
        #[arg(long)]
        out: PathBuf,
    },

    /// Run a seeded, resumable experiment sweep from a TOML config.
    Experiment {
        /// Experiment kind; must match the config file.
        #[arg(value_enum)]
        kind: KindArg,
        /// Config file (TOML, schema_version 1).
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Output directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exactly one source for the edge couplings.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct CouplingSource {
    /// Draw Gaussian couplings for the graph from this seed.
    #[arg(long)]
    coupling_seed: Option<u64>,
    /// Read couplings from a coupling file instead of sampling.
    #[arg(long)]
    couplings: Option<PathBuf>,
}

impl CouplingSource {
    fn resolve(&self, graph: &Graph) -> Result<CouplingSet> {
        match (self.coupling_seed, &self.couplings) {
            (Some(seed), None) => sample_couplings(graph, seed),
            (None, Some(path)) => {
                let set = io::read_coupling_file(path)?;
                if set.len() != graph.n_edges() {
                    return Err(Error::validation(format!(
                        "coupling file holds {} values but the graph has {} edges",
                        set.len(),
                        graph.n_edges()
                    )));
                }
                Ok(set)
            }
            // clap's group constraint leaves no other combination
            _ => Err(Error::validation(
                "pass exactly one of --coupling-seed or --couplings",
            )),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SectorArg {
    Even,
    Odd,
}

impl From<SectorArg> for Parity {
    fn from(s: SectorArg) -> Parity {
        match s {
            SectorArg::Even => Parity::Even,
            SectorArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dense,
    Filter,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Fig2,
    Fig3,
    Fig4,
    Histogram,
    Custom,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> ExperimentKind {
        match k {
            KindArg::Fig2 => ExperimentKind::Fig2,
            KindArg::Fig3 => ExperimentKind::Fig3,
            KindArg::Fig4 => ExperimentKind::Fig4,
            KindArg::Histogram => ExperimentKind::Histogram,
            KindArg::Custom => ExperimentKind::Custom,
        }
    }
}

fn main() -> ExitCode {
    swsyk::linalg::disable_solver_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateGraph { n, k, p, seed, out } => {
            let spec = GraphSpec {
                n_vertices: n,
                k,
                p,
                seed,
            };
            let graph = watts_strogatz(&spec)?;
            io::write_graph_file(&out, &spec, &graph)
        }
        Command::SingleParticle {
            graph,
            couplings,
            save_couplings,
            out,
        } => single_particle(&graph, &couplings, save_couplings.as_deref(), &out),
        Command::ManyBody {
            graph,
            couplings,
            no_impurity,
            sector,
            method,
            window_fraction,
            solver_seed,
            save_matrix,
            out,
        } => many_body(
            &graph,
            &couplings,
            !no_impurity,
            sector.into(),
            method,
            window_fraction,
            solver_seed,
            save_matrix.as_deref(),
            &out,
        ),
        Command::RStats {
            spectrum,
            fraction,
            single_particle,
            out,
        } => r_stats(&spectrum, fraction, single_particle, out.as_deref()),
        Command::Bogoliubov {
            graph,
            couplings,
            tau,
            modes_out,
            out,
        } => rotated_impurity(&graph, &couplings, tau, modes_out.as_deref(), &out),
        Command::Experiment {
            kind,
            config,
            jobs,
            out,
        } => experiment(kind, &config, jobs, out),
    }
}

/// Provenance keys shared by every artifact of a (graph, couplings) pair.
fn provenance(spec: &GraphSpec, couplings: &CouplingSet) -> BTreeMap<String, String> {
    let mut md = BTreeMap::new();
    md.insert("n".into(), spec.n_vertices.to_string());
    md.insert("k".into(), spec.k.to_string());
    md.insert("p".into(), fmt_f64(spec.p));
    md.insert("graph_seed".into(), spec.seed.to_string());
    md.insert("coupling_seed".into(), couplings.seed.to_string());
    md.insert("sigma".into(), fmt_f64(couplings.sigma));
    md
}

fn single_particle(
    graph_path: &std::path::Path,
    source: &CouplingSource,
    save_couplings: Option<&std::path::Path>,
    out: &std::path::Path,
) -> Result<()> {
    let (spec, graph) = io::read_graph_file(graph_path)?;
    let couplings = source.resolve(&graph)?;
    if let Some(path) = save_couplings {
        io::write_coupling_file(path, &couplings)?;
    }
    let sp = single_particle_matrix(&graph, &couplings)?;
    let mut metadata = provenance(&spec, &couplings);
    metadata.insert("method".into(), "dense_single_particle".into());
    let spectrum = Spectrum {
        eigenvalues: sp.eigenvalues()?,
        residuals: None,
        window: None,
        complete: true,
        count_estimate: None,
        metadata,
    };
    io::write_spectrum_csv(out, &spectrum)
}

#[allow(clippy::too_many_arguments)]
fn many_body(
    graph_path: &std::path::Path,
    source: &CouplingSource,
    impurity: bool,
    parity: Parity,
    method: MethodArg,
    window_fraction: f64,
    solver_seed: u64,
    save_matrix: Option<&std::path::Path>,
    out: &std::path::Path,
) -> Result<()> {
    let (spec, graph) = io::read_graph_file(graph_path)?;
    let couplings = source.resolve(&graph)?;
    let h = assemble_hamiltonian(&graph, &couplings, impurity, parity)?;
    if let Some(path) = save_matrix {
        let header = io::CsrHeader {
            n_majoranas: spec.n_vertices as u64,
            k: spec.k as u64,
            p: spec.p,
            graph_seed: spec.seed,
            coupling_seed: couplings.seed,
            parity,
        };
        io::write_csr_binary(path, &header, h.matrix())?;
    }
    let mut spectrum = match method {
        MethodArg::Dense => dense_eigh(h.matrix())?,
        MethodArg::Filter => {
            let window = SpectralWindow::CenterFraction(window_fraction);
            filter_diagonalize(&h, &window, &FilterConfig::default(), solver_seed)?
        }
    };
    spectrum.metadata.extend(provenance(&spec, &couplings));
    spectrum.metadata.insert(
        "sector".into(),
        match parity {
            Parity::Even => "even".into(),
            Parity::Odd => "odd".into(),
        },
    );
    spectrum
        .metadata
        .insert("impurity".into(), impurity.to_string());
    io::write_spectrum_csv(out, &spectrum)?;
    if !spectrum.complete {
        return Err(Error::non_convergence(format!(
            "window census did not stabilize; partial spectrum written to {}",
            out.display()
        )));
    }
    Ok(())
}

fn r_stats(
    spectrum_path: &std::path::Path,
    fraction: f64,
    single_particle: bool,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let (metadata, rows) = io::read_spectrum_csv(spectrum_path)?;
    let eigenvalues: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rstats = if single_particle {
        let n = eigenvalues.len();
        if n % 2 != 0 {
            return Err(Error::validation(
                "a symmetric single-particle spectrum has an even level count",
            ));
        }
        let scale = eigenvalues.last().map_or(0.0, |e| e.abs());
        let mut half: Vec<f64> = eigenvalues[n / 2..].to_vec();
        for e in &mut half {
            if *e < -1e-12 * scale {
                return Err(Error::validation(
                    "upper half of the spectrum dips negative; input is not symmetric about zero",
                ));
            }
            // a zero mode may resolve on the wrong side of the fold
            *e = e.max(0.0);
        }
        stats::positive_half_rstats(&half, 0.01, fraction)?
    } else {
        let window = match (metadata.get("window_lo"), metadata.get("window_hi")) {
            (Some(lo), Some(hi)) => Some((parse_float(lo)?, parse_float(hi)?)),
            _ => None,
        };
        let spectrum = Spectrum {
            eigenvalues,
            residuals: None,
            window,
            complete: true,
            count_estimate: None,
            metadata: BTreeMap::new(),
        };
        stats::mean_r_central(&spectrum, fraction)?
    };
    println!("mean_r={}", fmt_f64(rstats.mean_r));
    println!("count={}", rstats.count);
    println!("window_fraction={}", fmt_f64(rstats.window_fraction));
    println!("degenerate_pairs={}", rstats.degenerate_pairs);
    if let Some(path) = out {
        let mut md = metadata;
        md.insert("fraction".into(), fmt_f64(fraction));
        md.insert("single_particle".into(), single_particle.to_string());
        md.insert(
            "degenerate_pairs".into(),
            rstats.degenerate_pairs.to_string(),
        );
        io::write_rstats_csv(path, &md, &[(0, rstats.mean_r, rstats.count as u64)])?;
    }
    Ok(())
}

fn rotated_impurity(
    graph_path: &std::path::Path,
    source: &CouplingSource,
    tau: f64,
    modes_out: Option<&std::path::Path>,
    out: &std::path::Path,
) -> Result<()> {
    let (spec, graph) = io::read_graph_file(graph_path)?;
    let couplings = source.resolve(&graph)?;
    let sp = single_particle_matrix(&graph, &couplings)?;
    let f = bogoliubov(sp.antisymmetric())?;
    let tensor = rotate_quartic(&f.o, [0, 1, 2, 3], tau)?;
    let measures = tensor.extensivity_measures(tau)?;
    let mut md = provenance(&spec, &couplings);
    md.insert("tau".into(), fmt_f64(tau));
    md.insert("support_count".into(), measures.support_count.to_string());
    md.insert(
        "participation_ratio".into(),
        fmt_f64(measures.participation_ratio),
    );
    md.insert("norm_sq".into(), fmt_f64(tensor.norm_sq));
    io::write_tensor_csv(out, &md, &tensor)?;
    if let Some(path) = modes_out {
        let mut metadata = provenance(&spec, &couplings);
        metadata.insert("content".into(), "mode_energies".into());
        let spectrum = Spectrum {
            eigenvalues: f.eps.clone(),
            residuals: None,
            window: None,
            complete: true,
            count_estimate: None,
            metadata,
        };
        io::write_spectrum_csv(path, &spectrum)?;
    }
    Ok(())
}

fn experiment(
    kind: KindArg,
    config_path: &std::path::Path,
    jobs: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = ExperimentConfig::from_file(config_path)?;
    let kind: ExperimentKind = kind.into();
    if cfg.kind != kind {
        return Err(Error::validation(format!(
            "config describes a {} experiment, not {}",
            cfg.kind.as_str(),
            kind.as_str()
        )));
    }
    let out_dir = out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
        Error::validation("no output directory: pass --out or set output_dir in the config")
    })?;
    let summary = run_experiment(&cfg, &RunOptions { jobs, out_dir })?;
    println!("config_hash={}", summary.config_hash);
    println!("tasks_total={}", summary.tasks_total);
    println!("tasks_reused={}", summary.tasks_reused);
    for table in &summary.tables {
        println!("table={}", table.display());
    }
    Ok(())
}

fn parse_float(text: &str) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|_| Error::parse(format!("bad float {text:?}")))
}
