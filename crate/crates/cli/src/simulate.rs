//! Monte Carlo multihop runs with a reproducible summary.

use crate::common::{fmt_sig, make_input, make_noise, parse_tau, Manifest};
use anyhow::{Context, Result};
use clap::Args;
use std::path::PathBuf;
use telemesh_core::network::{self, MultihopStats, Semantics, SimulationConfig, Topology};
use telemesh_core::{ClusterParams, InputParams, NoiseKind};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Topology file
    #[arg(long)]
    pub topology: PathBuf,
    /// Source node id
    #[arg(long)]
    pub src: String,
    /// Destination node id
    #[arg(long)]
    pub dst: String,
    /// Noise channel: amp or phase
    #[arg(long, default_value = "amp")]
    pub channel: String,
    /// Decoherence rate
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    /// Composition semantics: all, any, or both
    #[arg(long, default_value = "both")]
    pub semantics: String,
    /// Base seed for the trial generators
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of trials per semantics
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Worker threads (defaults to the runtime's choice; results do not
    /// depend on it)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Cluster coefficients t0,t1,t2,t3 (normalized)
    #[arg(long, default_value = "0.5,0.5,0.5,0.5")]
    pub tau: String,
    /// POVM positivity-range parameter
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Input amplitude of |00⟩
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub a0: f64,
    /// Input amplitude of |11⟩
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub d0: f64,
    /// Summary CSV path (defaults to simulate.csv in the output directory)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub const SUMMARY_HEADER: &str =
    "semantics,hops,trials,successes,empirical_rate,sigma3,total_law,product_law,mean_fidelity";

pub fn run(args: &SimulateArgs) -> Result<i32> {
    let cluster = parse_tau(&args.tau)?;
    let input = make_input(args.a0, args.d0)?;
    let noise = make_noise(&args.channel, args.xi)?;
    if !(args.rho > 0.0) {
        anyhow::bail!("rho must be positive");
    }
    let semantics: Vec<Semantics> = match args.semantics.as_str() {
        "all" | "sequential-all-hops" => vec![Semantics::SequentialAllHops],
        "any" | "any-hop-success" => vec![Semantics::AnyHopSuccess],
        "both" => vec![Semantics::SequentialAllHops, Semantics::AnyHopSuccess],
        other => anyhow::bail!("unknown semantics `{other}` (expected all, any or both)"),
    };
    let text = std::fs::read_to_string(&args.topology)
        .with_context(|| format!("reading {}", args.topology.display()))?;
    let topology = Topology::parse(&text).map_err(|e| anyhow::anyhow!("{e}"))?;

    // route errors exit with a dedicated code
    if let Err(e) = network::discover_route(&topology, &args.src, &args.dst) {
        eprintln!("error: {e}");
        return Ok(2);
    }

    let runs = run_all(&topology, args, &input, &cluster, noise, &semantics)?;
    let summary = render(args, &input, &cluster, &runs)?;
    print!("{}", summary.text);
    let path = crate::common::resolve_output(args.output.as_deref(), "simulate.csv");
    std::fs::write(&path, &summary.csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn run_all(
    topology: &Topology,
    args: &SimulateArgs,
    input: &InputParams,
    cluster: &ClusterParams,
    noise: NoiseKind,
    semantics: &[Semantics],
) -> Result<Vec<MultihopStats>> {
    let execute = || -> Result<Vec<MultihopStats>> {
        semantics
            .iter()
            .map(|&sem| {
                let mut config = SimulationConfig::new(sem, args.trials, args.seed);
                config.rho_param = args.rho;
                network::simulate_multihop(
                    topology, &args.src, &args.dst, input, cluster, noise, &config,
                )
                .map_err(|e| anyhow::anyhow!("{e}"))
            })
            .collect()
    };
    match args.workers {
        // a scoped pool pins the parallelism degree; chunked merging keeps
        // the numbers identical either way
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building worker pool")?
            .install(execute),
        None => execute(),
    }
}

struct Summary {
    text: String,
    csv: String,
}

fn render(
    args: &SimulateArgs,
    input: &InputParams,
    cluster: &ClusterParams,
    runs: &[MultihopStats],
) -> Result<Summary> {
    let first = &runs[0];
    let mut text = String::new();
    text.push_str(&format!("route: {}\n", first.route.hops.join(" -> ")));
    text.push_str(&format!("hops: {}\n", first.hops));
    text.push_str(&format!(
        "per-hop success law: {}\n",
        fmt_sig(first.per_hop_success)
    ));

    text.push_str("\nper-branch table (one hop):\n");
    text.push_str(
        "  outcome          printed_w      cptp_w         joint_success  fid_P1         fid_P2\n",
    );
    for record in &first.branch_table {
        let (joint, f1, f2) = match (record.povm_joint, record.fidelity) {
            (Some(j), Some(f)) => (
                fmt_sig(j[0] + j[1]),
                fmt_sig(f[0]),
                fmt_sig(f[1]),
            ),
            _ => ("inconclusive".into(), "-".into(), "-".into()),
        };
        text.push_str(&format!(
            "  {:<16} {:<14} {:<14} {:<14} {:<14} {}\n",
            record.outcome.label(),
            fmt_sig(record.printed_weight),
            fmt_sig(record.cptp_weight),
            joint,
            f1,
            f2,
        ));
    }

    text.push_str("\nempirical vs closed form:\n");
    text.push_str(&format!("  {}\n", SUMMARY_HEADER));
    let mut csv_rows = Vec::new();
    for stats in runs {
        let row = format!(
            "{},{},{},{},{},{},{},{},{}",
            stats.semantics.label(),
            stats.hops,
            stats.trials,
            stats.success_count,
            fmt_sig(stats.empirical_rate),
            fmt_sig(stats.sigma3),
            fmt_sig(stats.closed_form_total),
            fmt_sig(stats.product_law),
            stats
                .mean_fidelity
                .map(fmt_sig)
                .unwrap_or_else(|| "-".into()),
        );
        text.push_str(&format!("  {row}\n"));
        csv_rows.push(row);
    }

    let tau = cluster.tau();
    let manifest = Manifest::new("simulate")
        .field("topology", args.topology.display())
        .field("src", &args.src)
        .field("dst", &args.dst)
        .field("channel", &args.channel)
        .field("xi", args.xi)
        .field("seed", args.seed)
        .field("trials", args.trials)
        .field("semantics", &args.semantics)
        .field(
            "tau",
            format!("{},{},{},{}", tau[0], tau[1], tau[2], tau[3]),
        )
        .field("rho", args.rho)
        .field("a0", input.a0.re)
        .field("d0", input.d0.re);
    let mut csv = manifest.render();
    csv.push_str(SUMMARY_HEADER);
    csv.push('\n');
    for row in csv_rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(Summary { text, csv })
}
