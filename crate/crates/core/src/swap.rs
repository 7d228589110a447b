//! Entanglement swapping at an intermediate node.
//!
//! Two cluster resources meet at the node: one on qubits
//! (relay, node1, node2, node3) and one on (node4, dest1, dest2, dest3).
//! The node Bell-measures (node3, node4) and then (node1, node2); the four
//! surviving qubits carry one of sixteen branch states, and a Pauli string
//! on them restores the cluster resource.

use crate::qmath::{C64, Ket, Pauli};
use crate::states::{BellKind, ClusterParams};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SwapError {
    #[error("residual state is zero")]
    ZeroResidual,
    #[error(
        "correction for branch ({pair34},{pair12}) only reaches fidelity {fidelity}; the resource is not restored"
    )]
    CorrectionFailed {
        pair34: BellKind,
        pair12: BellKind,
        fidelity: f64,
    },
    #[error(transparent)]
    Qmath(#[from] crate::qmath::QmathError),
}

pub type Result<T> = std::result::Result<T, SwapError>;

/// Bell results of the two swap measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwapOutcome {
    pub pair34: BellKind,
    pub pair12: BellKind,
}

impl SwapOutcome {
    pub fn all() -> [SwapOutcome; 16] {
        let mut out = [SwapOutcome {
            pair34: BellKind::PhiPlus,
            pair12: BellKind::PhiPlus,
        }; 16];
        let mut i = 0;
        for pair34 in BellKind::ALL {
            for pair12 in BellKind::ALL {
                out[i] = SwapOutcome { pair34, pair12 };
                i += 1;
            }
        }
        out
    }

    pub fn label(&self) -> String {
        format!("({},{})", self.pair34.label(), self.pair12.label())
    }
}

/// One unnormalized post-swap branch on the surviving four qubits.
#[derive(Debug, Clone)]
pub struct SwapBranch {
    pub outcome: SwapOutcome,
    pub residual: Ket,
    pub weight: f64,
}

/// Pauli string found for a residual, with the fidelity it reaches against
/// the cluster resource and the global phase left over.
#[derive(Debug, Clone, Copy)]
pub struct Correction {
    pub pauli_string: [Pauli; 4],
    pub fidelity: f64,
    pub global_phase: C64,
}

impl Correction {
    pub fn string_label(&self) -> String {
        self.pauli_string
            .iter()
            .map(|p| p.label())
            .collect::<Vec<_>>()
            .join("-")
    }

    fn non_identity_count(&self) -> usize {
        self.pauli_string
            .iter()
            .filter(|p| !p.is_identity())
            .count()
    }
}

/// A correction-table row: branch outcome plus the correction it needs.
#[derive(Debug, Clone)]
pub struct CorrectionEntry {
    pub outcome: SwapOutcome,
    pub correction: Correction,
}

/// Project the doubled resource through both Bell measurements and return
/// all sixteen branches on the surviving qubits.
pub fn swap_branches(cluster: &ClusterParams) -> Vec<SwapBranch> {
    let resource = cluster.ket();
    let joint = resource.tensor(&resource);
    SwapOutcome::all()
        .into_iter()
        .map(|outcome| {
            // (node3, node4) are register qubits (3, 4); after they are
            // measured out, (node1, node2) sit at (1, 2).
            let (_, after34) = joint
                .project_measure(&outcome.pair34.ket(), &[3, 4])
                .expect("valid projection");
            let (_, residual) = after34
                .project_measure(&outcome.pair12.ket(), &[1, 2])
                .expect("valid projection");
            let weight = residual.norm_sqr();
            SwapBranch {
                outcome,
                residual,
                weight,
            }
        })
        .collect()
}

/// Exhaustive search over the 256 four-qubit Pauli strings for the one that
/// best maps the residual back onto the cluster resource. Ties go to the
/// string with the fewest non-identity factors, then to the lexicographically
/// smallest string (relay qubit first, I < X < Z < XZ).
pub fn find_correction(residual: &Ket, cluster: &ClusterParams) -> Result<Correction> {
    let normalized = residual
        .normalized()
        .map_err(|_| SwapError::ZeroResidual)?;
    let target = cluster
        .ket()
        .normalized()
        .map_err(|_| SwapError::ZeroResidual)?;
    let mut best: Option<Correction> = None;
    for p0 in Pauli::ALL {
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                for p3 in Pauli::ALL {
                    let string = [p0, p1, p2, p3];
                    let mut state = normalized.clone();
                    for (q, p) in string.iter().enumerate() {
                        if !p.is_identity() {
                            state = state.apply_on_qubits(&p.matrix(), &[q])?;
                        }
                    }
                    let overlap = target.inner(&state)?;
                    let fidelity = overlap.norm_sqr();
                    let phase = if overlap.norm() > 1e-15 {
                        overlap / overlap.norm()
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let candidate = Correction {
                        pauli_string: string,
                        fidelity,
                        global_phase: phase,
                    };
                    best = Some(match best {
                        None => candidate,
                        Some(current) => pick_better(current, candidate),
                    });
                }
            }
        }
    }
    Ok(best.expect("search space is nonempty"))
}

fn pick_better(current: Correction, candidate: Correction) -> Correction {
    if candidate.fidelity > current.fidelity + 1e-12 {
        return candidate;
    }
    if candidate.fidelity < current.fidelity - 1e-12 {
        return current;
    }
    let (cn, kn) = (current.non_identity_count(), candidate.non_identity_count());
    if kn != cn {
        return if kn < cn { candidate } else { current };
    }
    if candidate.pauli_string < current.pauli_string {
        candidate
    } else {
        current
    }
}

/// Corrections for all sixteen branches, deterministic for a given cluster.
pub fn correction_table(cluster: &ClusterParams) -> Result<Vec<CorrectionEntry>> {
    swap_branches(cluster)
        .into_iter()
        .map(|branch| {
            let correction = find_correction(&branch.residual, cluster)?;
            Ok(CorrectionEntry {
                outcome: branch.outcome,
                correction,
            })
        })
        .collect()
}

/// The correction table as CSV text.
pub fn correction_table_csv(cluster: &ClusterParams) -> Result<String> {
    let mut out = String::from("outcome_pair34,outcome_pair12,pauli_string,fidelity\n");
    for entry in correction_table(cluster)? {
        out.push_str(&format!(
            "{},{},{},{:.12}\n",
            entry.outcome.pair34.label(),
            entry.outcome.pair12.label(),
            entry.correction.string_label(),
            entry.correction.fidelity
        ));
    }
    Ok(out)
}

/// Record of one executed swap.
#[derive(Debug, Clone)]
pub struct SwapRecord {
    pub outcome: SwapOutcome,
    pub correction: Correction,
}

/// Chain `segments` cluster resources into one end-to-end resource by
/// sampling a branch per intermediate node and applying its correction.
/// Fails if any correction leaves the resource below fidelity 1 - 1e-6.
pub fn swap_chain<R: Rng + ?Sized>(
    segments: usize,
    cluster: &ClusterParams,
    rng: &mut R,
) -> Result<(Ket, Vec<SwapRecord>)> {
    let target = cluster.ket().normalized().map_err(|_| SwapError::ZeroResidual)?;
    let mut log = Vec::new();
    let mut resource = target.clone();
    if segments <= 1 {
        return Ok((resource, log));
    }
    let branches = swap_branches(cluster);
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    for _ in 0..segments - 1 {
        let mut draw = rng.gen::<f64>() * total;
        let mut chosen = branches.len() - 1;
        for (i, b) in branches.iter().enumerate() {
            if draw < b.weight {
                chosen = i;
                break;
            }
            draw -= b.weight;
        }
        let branch = &branches[chosen];
        let correction = find_correction(&branch.residual, cluster)?;
        if correction.fidelity < 1.0 - 1e-6 {
            return Err(SwapError::CorrectionFailed {
                pair34: branch.outcome.pair34,
                pair12: branch.outcome.pair12,
                fidelity: correction.fidelity,
            });
        }
        let mut state = branch.residual.normalized()?;
        for (q, p) in correction.pauli_string.iter().enumerate() {
            if !p.is_identity() {
                state = state.apply_on_qubits(&p.matrix(), &[q])?;
            }
        }
        let fidelity = target.inner(&state)?.norm_sqr();
        if fidelity < 1.0 - 1e-8 {
            return Err(SwapError::CorrectionFailed {
                pair34: branch.outcome.pair34,
                pair12: branch.outcome.pair12,
                fidelity,
            });
        }
        resource = state;
        log.push(SwapRecord {
            outcome: branch.outcome,
            correction,
        });
    }
    Ok((resource, log))
}
