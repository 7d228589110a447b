//! Closed-form parameter sweeps written as CSV.

use crate::common::{fmt_sig, make_input, make_noise, parse_f64_grid, parse_u32_grid, Manifest};
use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use std::path::PathBuf;
use telemesh_core::{network, ClusterParams, InputParams, NoiseKind};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Noise channel: amp or phase
    #[arg(long)]
    pub channel: String,
    /// Quantity to tabulate: psuc or fidelity
    #[arg(long)]
    pub quantity: String,
    /// Decoherence-rate grid: value, comma list, or start..end:step
    #[arg(long, default_value = "0..1:0.02")]
    pub xi: String,
    /// Hop-count grid: value, comma list, or start..end[:step]
    #[arg(long = "N", default_value = "1..120")]
    pub hops: String,
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
    /// Output CSV path (defaults to sweep.csv in the output directory)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub const CSV_HEADER: &str = "channel,quantity,xi,N,tau0,tau1,tau2,tau3,rho,value";

enum Quantity {
    SuccessProb,
    Fidelity,
}

pub fn run(args: &SweepArgs) -> Result<()> {
    let quantity = match args.quantity.as_str() {
        "psuc" => Quantity::SuccessProb,
        "fidelity" => Quantity::Fidelity,
        other => anyhow::bail!("unknown quantity `{other}` (expected psuc or fidelity)"),
    };
    let cluster = crate::common::parse_tau(&args.tau)?;
    let input = make_input(args.a0, args.d0)?;
    if !(args.rho > 0.0) {
        anyhow::bail!("rho must be positive");
    }
    let xi_grid = parse_f64_grid(&args.xi)?;
    let hop_grid = parse_u32_grid(&args.hops)?;
    for &xi in &xi_grid {
        make_noise(&args.channel, xi)?;
    }

    let csv = render_csv(
        &args.channel,
        &args.quantity,
        &quantity,
        &xi_grid,
        &hop_grid,
        &cluster,
        &input,
        args.rho,
    )?;
    let path = crate::common::resolve_output(args.output.as_deref(), "sweep.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn render_csv(
    channel: &str,
    quantity_label: &str,
    quantity: &Quantity,
    xi_grid: &[f64],
    hop_grid: &[u32],
    cluster: &ClusterParams,
    input: &InputParams,
    rho: f64,
) -> Result<String> {
    let mut grid: Vec<(f64, u32)> = Vec::with_capacity(xi_grid.len() * hop_grid.len());
    let mut xis = xi_grid.to_vec();
    xis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut hops = hop_grid.to_vec();
    hops.sort_unstable();
    for &xi in &xis {
        for &n in &hops {
            grid.push((xi, n));
        }
    }

    // grid points are independent; evaluate in parallel, assemble in order
    let tau = cluster.tau();
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&(xi, n)| -> Result<String> {
            let noise = make_noise(channel, xi)?;
            let value = evaluate(quantity, noise, input, cluster, rho, n)?;
            Ok(format!(
                "{channel},{quantity_label},{},{n},{},{},{},{},{},{}",
                fmt_sig(xi),
                fmt_sig(tau[0]),
                fmt_sig(tau[1]),
                fmt_sig(tau[2]),
                fmt_sig(tau[3]),
                fmt_sig(rho),
                fmt_sig(value),
            ))
        })
        .collect::<Result<_>>()?;

    let manifest = Manifest::new("sweep")
        .field("channel", channel)
        .field("quantity", quantity_label)
        .field(
            "tau",
            format!("{},{},{},{}", tau[0], tau[1], tau[2], tau[3]),
        )
        .field("rho", rho)
        .field("a0", input.a0.re)
        .field("d0", input.d0.re)
        .field("xi_points", xis.len())
        .field("N_points", hops.len());

    let mut out = manifest.render();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

fn evaluate(
    quantity: &Quantity,
    noise: NoiseKind,
    input: &InputParams,
    cluster: &ClusterParams,
    rho: f64,
    hops: u32,
) -> Result<f64> {
    match quantity {
        Quantity::SuccessProb => network::total_success_prob(noise, cluster, rho, hops)
            .map_err(|e| anyhow::anyhow!("{e}")),
        Quantity::Fidelity => Ok(network::total_fidelity(noise, input, cluster, hops)),
    }
}
