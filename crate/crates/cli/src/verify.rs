//! Invariant suite and discrepancy report.
//!
//! Hard invariants fail the run (exit code 1). Known divergences between the
//! published coefficient tables and the channel-level evolution are reported
//! as warnings: they are findings, not defects in this tool.

use crate::common::{fmt_sig, Manifest};
use anyhow::{Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;
use telemesh_core::qmath::Operator;
use telemesh_core::swap;
use telemesh_core::teleport::{
    self, BsmOutcome, PovmParams, RecoveryPlan, DEFAULT_NOISY_QUBITS,
};
use telemesh_core::{network, ClusterParams, InputParams, KrausSet, NoiseKind, Pauli};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Report path (defaults to verify_report.txt in the output directory)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Monte Carlo trials for the sampling smoke check
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    /// Evaluate the completeness check against a raw amplitude-damping set
    /// built with this rate, skipping validation. Rates outside [0, 1] make
    /// the check fail, demonstrating that it bites.
    #[arg(long)]
    pub inject_invalid_xi: Option<f64>,
}

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Warn,
}

struct Report {
    lines: Vec<(Status, String)>,
}

impl Report {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.lines.push((status, format!("{name}: {detail}")));
    }

    fn warn(&mut self, name: &str, detail: String) {
        self.lines.push((Status::Warn, format!("{name}: {detail}")));
    }

    fn failed(&self) -> usize {
        self.lines.iter().filter(|(s, _)| *s == Status::Fail).count()
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (status, line) in &self.lines {
            let tag = match status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Warn => "WARN",
            };
            let _ = writeln!(out, "[{tag}] {line}");
        }
        let _ = writeln!(
            out,
            "{} checks, {} failed",
            self.lines.len(),
            self.failed()
        );
        out
    }
}

pub fn run(args: &VerifyArgs) -> Result<i32> {
    let mut report = Report::new();
    let cluster = ClusterParams::balanced();
    let input = InputParams::balanced();

    check_kraus_completeness(&mut report, args.inject_invalid_xi);
    check_povm_structure(&mut report, &cluster);
    check_probability_claim(&mut report, &input, &cluster);
    let swap_csv = check_swap_table(&mut report, &cluster)?;
    check_branch_weights(&mut report, &input, &cluster);
    check_closed_form_spots(&mut report, &cluster);
    check_monte_carlo(&mut report, &input, &cluster, args.trials);
    warn_printed_vs_cptp(&mut report, &input, &cluster);
    warn_composition_gap(&mut report, &cluster);

    let report_path = crate::common::resolve_output(args.output.as_deref(), "verify_report.txt");
    let manifest = Manifest::new("verify")
        .field("trials", args.trials)
        .field(
            "inject_invalid_xi",
            args.inject_invalid_xi
                .map(|x| x.to_string())
                .unwrap_or_else(|| "none".into()),
        );
    let body = format!("{}{}", manifest.render(), report.render());
    print!("{body}");
    std::fs::write(&report_path, &body)
        .with_context(|| format!("writing {}", report_path.display()))?;

    let csv_path = report_path.with_file_name("swap_corrections.csv");
    std::fs::write(&csv_path, swap_csv)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    println!("wrote {}", report_path.display());
    println!("wrote {}", csv_path.display());
    Ok(if report.failed() > 0 { 1 } else { 0 })
}

fn check_kraus_completeness(report: &mut Report, injected: Option<f64>) {
    let mut worst = 0.0f64;
    for i in 0..=10 {
        let xi = i as f64 / 10.0;
        worst = worst.max(
            NoiseKind::amplitude_damping(xi)
                .unwrap()
                .kraus_set()
                .completeness_error(),
        );
        worst = worst.max(
            NoiseKind::phase_damping(xi)
                .unwrap()
                .kraus_set()
                .completeness_error(),
        );
    }
    report.check(
        "kraus-completeness",
        worst < 1e-12,
        format!("max |ΣK†K - I| entry over both channels, xi 0..1: {worst:.3e}"),
    );
    if let Some(xi) = injected {
        let err = KrausSet::amplitude_damping_unchecked(xi).completeness_error();
        report.check(
            "kraus-completeness-injected",
            err < 1e-12,
            format!("injected amplitude-damping rate {xi} gives |ΣK†K - I| = {err:.3e}"),
        );
    }
}

fn check_povm_structure(report: &mut Report, cluster: &ClusterParams) {
    let mut worst_identity = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    let mut built = true;
    for xi in [0.0, 0.25, 0.5] {
        let noise = NoiseKind::amplitude_damping(xi).unwrap();
        let params = PovmParams::for_hop(cluster, noise, 1.0).unwrap();
        match teleport::povm_set(&params) {
            Ok(povm) => {
                let sum = povm.p1.add(&povm.p2).unwrap().add(&povm.p3).unwrap();
                worst_identity = worst_identity.max(sum.max_abs_diff(&Operator::identity(4)));
                for op in [&povm.p1, &povm.p2, &povm.p3] {
                    let min = op
                        .hermitian_eigenvalues()
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    worst_eig = worst_eig.min(min);
                }
            }
            Err(_) => built = false,
        }
    }
    report.check(
        "povm-identity",
        built && worst_identity < 1e-10,
        format!("max |P1+P2+P3 - I| entry at rho=1, xi in {{0,0.25,0.5}}: {worst_identity:.3e}"),
    );
    report.check(
        "povm-positivity",
        built && worst_eig > -1e-9,
        format!("smallest POVM eigenvalue: {worst_eig:.3e}"),
    );
}

fn check_probability_claim(report: &mut Report, input: &InputParams, cluster: &ClusterParams) {
    let mut ok = true;
    let mut shown = String::new();
    for xi in [0.0, 0.25, 0.5] {
        let noise = NoiseKind::amplitude_damping(xi).unwrap();
        let branches = teleport::hop_branches(input, cluster, noise);
        let branch = &branches[BsmOutcome::reference().index()];
        let plan = RecoveryPlan::derive(branch.outcome, cluster, noise, 1.0).unwrap();
        let stages = plan.stages(&branch.residual).unwrap();
        let povm = teleport::povm_set(&plan.povm_params).unwrap();
        let expected = 1.0 / (4.0 * plan.povm_params.gamma());
        for (label, op) in [("P1", &povm.p1), ("P2", &povm.p2)] {
            let applied = stages.g1.apply_on_qubits(op, &[2, 3]).unwrap();
            let got = stages.g1.inner(&applied).unwrap().re;
            ok &= (got - expected).abs() < 1e-10;
            if xi == 0.0 && label == "P1" {
                shown = format!(
                    "<G1|P1|G1> = {got:.6} expected 1/(4*rho*gamma) = {expected:.6}"
                );
            }
        }
    }
    report.check("povm-probability-claim", ok, shown);
}

fn check_swap_table(report: &mut Report, cluster: &ClusterParams) -> Result<String> {
    let table = swap::correction_table(cluster).map_err(|e| anyhow::anyhow!("{e}"))?;
    let exact = table
        .iter()
        .filter(|e| e.correction.fidelity >= 1.0 - 1e-10)
        .count();
    report.check(
        "swap-corrections",
        exact == 16,
        format!("{exact}/16 branches corrected to the cluster resource at fidelity >= 1-1e-10"),
    );
    // the worked branch: relay correction is Z then X
    let worked = table
        .iter()
        .find(|e| {
            e.outcome.pair34 == telemesh_core::BellKind::PsiPlus
                && e.outcome.pair12 == telemesh_core::BellKind::PhiPlus
        })
        .unwrap();
    report.check(
        "swap-worked-branch",
        worked.correction.pauli_string == [Pauli::XZ, Pauli::I, Pauli::I, Pauli::I],
        format!(
            "(Psi+,Phi+) branch corrected by {} (Z then X on the relay qubit)",
            worked.correction.string_label()
        ),
    );
    swap::correction_table_csv(cluster).map_err(|e| anyhow::anyhow!("{e}"))
}

fn check_branch_weights(report: &mut Report, input: &InputParams, cluster: &ClusterParams) {
    let mut ok = true;
    let mut detail = String::new();
    for noise in [
        NoiseKind::amplitude_damping(0.0).unwrap(),
        NoiseKind::phase_damping(0.0).unwrap(),
    ] {
        let total: f64 = teleport::hop_branches(input, cluster, noise)
            .iter()
            .map(|b| b.weight)
            .sum();
        ok &= (total - 1.0).abs() < 1e-8;
        let _ = write!(detail, "{} xi=0 sum={total:.12}; ", noise.label());
    }
    let noise = NoiseKind::amplitude_damping(0.3).unwrap();
    let total: f64 = teleport::hop_branches(input, cluster, noise)
        .iter()
        .map(|b| b.weight)
        .sum();
    let bracket = noise.fidelity_bracket(cluster);
    ok &= (total - bracket).abs() < 1e-10;
    let _ = write!(detail, "amp xi=0.3 sum={total:.12} = bracket {bracket:.12}");
    report.check("branch-weight-sums", ok, detail);
}

fn check_closed_form_spots(report: &mut Report, cluster: &ClusterParams) {
    let amp0 = NoiseKind::amplitude_damping(0.0).unwrap();
    let p75 = network::total_success_prob(amp0, cluster, 1.0, 75).unwrap();
    report.check(
        "success-prob-saturation",
        (p75 - 0.9921).abs() < 1e-4,
        format!("75 hops at xi=0 give {p75:.6} (expected 0.9921 ± 1e-4)"),
    );

    let p1 = network::total_success_prob(amp0, cluster, 1.0, 1).unwrap();
    report.check(
        "single-hop-reduction",
        (p1 - 0.0625).abs() < 1e-15,
        format!("one hop at xi=0 gives {p1}"),
    );

    let mut worst = 0.0f64;
    for (noise, rho) in [
        (amp0, 1.0),
        (NoiseKind::amplitude_damping(0.4).unwrap(), 1.0),
        (NoiseKind::amplitude_damping(0.7).unwrap(), 2.0),
        (NoiseKind::phase_damping(0.2).unwrap(), 1.0),
        (NoiseKind::phase_damping(0.5).unwrap(), 1.5),
    ] {
        let params = PovmParams::for_hop(cluster, noise, rho).unwrap();
        let direct = network::two_hop_success_prob(&params);
        let total = network::total_success_prob(noise, cluster, rho, 2).unwrap();
        worst = worst.max((direct - total).abs());
    }
    report.check(
        "two-hop-identity",
        worst < 1e-12,
        format!("max |two-hop law - total law at N=2|: {worst:.3e}"),
    );

    let gamma_p = PovmParams::for_hop(cluster, NoiseKind::phase_damping(0.2).unwrap(), 1.0)
        .unwrap()
        .gamma();
    report.check(
        "phase-gamma-spot",
        (gamma_p - 19.53125).abs() < 1e-10,
        format!("gamma at phase rate 0.2, balanced coefficients: {gamma_p}"),
    );

    let exact_input = InputParams::from_real(1.0, 0.0).unwrap();
    let mut ok = true;
    for n in [1u32, 40, 120] {
        ok &= network::total_fidelity(amp0, &exact_input, cluster, n) == 1.0;
        ok &= network::total_fidelity(
            NoiseKind::amplitude_damping(1.0).unwrap(),
            &exact_input,
            cluster,
            n,
        ) == 0.0;
    }
    report.check(
        "fidelity-extremes",
        ok,
        "total fidelity is exactly 1 at xi=0 and exactly 0 at xi=1 for all hop counts".into(),
    );
}

fn check_monte_carlo(
    report: &mut Report,
    input: &InputParams,
    cluster: &ClusterParams,
    trials: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_817);
    match teleport::oracle_one_hop(
        input,
        cluster,
        NoiseKind::amplitude_damping(0.0).unwrap(),
        &DEFAULT_NOISY_QUBITS,
        1.0,
        &mut rng,
        trials,
    ) {
        Ok(oracle) => {
            let dev = (oracle.empirical_psuc - oracle.closed_form_psuc).abs();
            report.check(
                "monte-carlo-hop-rate",
                dev < oracle.sigma3,
                format!(
                    "empirical {:.6} vs law {:.6} over {} trials (3σ = {:.6})",
                    oracle.empirical_psuc, oracle.closed_form_psuc, trials, oracle.sigma3
                ),
            );
            let fidelity = oracle.mean_success_fidelity.unwrap_or(0.0);
            report.check(
                "monte-carlo-success-fidelity",
                (fidelity - 1.0).abs() < 1e-10,
                format!("mean fidelity of successful noiseless trials: {fidelity:.12}"),
            );
        }
        Err(e) => {
            report.check("monte-carlo-hop-rate", false, format!("oracle failed: {e}"));
        }
    }
}

fn warn_printed_vs_cptp(report: &mut Report, input: &InputParams, cluster: &ClusterParams) {
    let noise = NoiseKind::amplitude_damping(0.3).unwrap();
    match teleport::noisy_subset_scan(input, cluster, noise) {
        Ok(scan) => {
            let (best_subset, best_dist) = scan
                .iter()
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let label = if best_subset.is_empty() {
                "{}".to_string()
            } else {
                format!("{best_subset:?}")
            };
            report.warn(
                "printed-table-vs-cptp",
                format!(
                    "the published coefficient table is not a channel evolution; closest \
                     noisy-qubit subset at xi=0.3 is {label} at Frobenius distance {}. \
                     The (Phi,Phi) rows also carry the opposite sign on the d0 term relative \
                     to direct projection of the joint state.",
                    fmt_sig(*best_dist)
                ),
            );
        }
        Err(e) => report.warn("printed-table-vs-cptp", format!("scan failed: {e}")),
    }
    // delivered fidelity vs the closed form, side by side
    match teleport::hop_table(input, cluster, noise, &DEFAULT_NOISY_QUBITS, 1.0) {
        Ok(table) => {
            let reference = &table[BsmOutcome::reference().index()];
            let closed = teleport::hop_fidelity(input, cluster, noise).unwrap();
            let delivered = reference
                .fidelity
                .map(|f| (f[0] + f[1]) / 2.0)
                .unwrap_or(0.0);
            report.warn(
                "closed-form-vs-oracle-fidelity",
                format!(
                    "amplitude xi=0.3: closed-form bracket fidelity {} vs CPTP delivered \
                     fidelity {} on the reference branch (recorded divergence, not a failure)",
                    fmt_sig(closed),
                    fmt_sig(delivered)
                ),
            );
        }
        Err(e) => report.warn("closed-form-vs-oracle-fidelity", format!("{e}")),
    }
}

fn warn_composition_gap(report: &mut Report, cluster: &ClusterParams) {
    let noise = NoiseKind::amplitude_damping(0.0).unwrap();
    let total = network::total_success_prob(noise, cluster, 1.0, 2).unwrap();
    let params = PovmParams::for_hop(cluster, noise, 1.0).unwrap();
    let p = teleport::hop_success_prob(&params);
    let product = p * p;
    report.warn(
        "composition-semantics-gap",
        format!(
            "the total success law is an at-least-one composition: N=2 gives {} while \
             hop-by-hop relaying (every hop conclusive) gives {}; the simulator reports both",
            fmt_sig(total),
            fmt_sig(product)
        ),
    );
}
