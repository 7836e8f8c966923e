use fairdiv::cisef::CliquePartition;
use fairdiv::instance::{Lift, OfflineInstance};
use fairdiv::io::InstanceFile;
use fairdiv::market::{check_kkt, KktReport};
use fairdiv::metrics::{is_cisef, CisefAudit};
use fairdiv::{Rational, Scalar};
use serde::Serialize;

use crate::error::CliError;
use crate::precompute::{typed_solution, SolutionFile};

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub mode: String,
    pub kkt: KktReport,
    pub cisef: CisefAudit,
    pub pass: bool,
}

/// Checks a stored solution against its instance: the KKT conditions at
/// its own budgets and the CISEF conditions for its clique list.
pub fn audit(
    instance: &InstanceFile,
    file: &SolutionFile,
    tol: f64,
) -> Result<AuditReport, CliError> {
    if file.mode == "rational" {
        audit_typed(&instance.to_instance::<Rational>()?, file, tol)
    } else {
        audit_typed(&instance.to_instance::<f64>()?, file, tol)
    }
}

fn audit_typed<S: Scalar + Lift>(
    inst: &OfflineInstance<S>,
    file: &SolutionFile,
    tol: f64,
) -> Result<AuditReport, CliError> {
    let sol = typed_solution(file, inst)?;
    let kkt = check_kkt(&sol, inst, tol)?;
    let rows = file
        .cliques
        .iter()
        .map(|c| {
            let first = c
                .first()
                .ok_or_else(|| CliError::Config("empty clique in solution".into()))?;
            Ok(sol.allocation.shares[*first].clone())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let partition = CliquePartition {
        cliques: file.cliques.clone(),
        rows,
    };
    let cisef = is_cisef(&sol, inst, &partition, tol);
    let pass = kkt.pass && cisef.pass;
    Ok(AuditReport {
        mode: file.mode.clone(),
        kkt,
        cisef,
        pass,
    })
}
