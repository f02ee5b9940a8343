use crate::error::Result;
use crate::fit::{power_law, PowerFit};
use crate::symbols::{moyal_product, HSeries, MAX_TRUNCATION};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectRow {
    pub h: f64,
    /// `sup ||(pi # pi - pi)(h)||`
    pub idempotency: f64,
    /// `sup ||(p # pi - pi # p)(h)||`
    pub commutator: f64,
}

#[derive(Clone, Debug)]
pub struct DefectReport {
    pub rows: Vec<DefectRow>,
    pub idempotency_fit: Option<PowerFit>,
    pub commutator_fit: Option<PowerFit>,
    /// Order through which the products were expanded before evaluation.
    pub product_order: usize,
}

/// Evaluate the idempotency and commutation defects of `pi` at every `h`.
///
/// Products are expanded two orders beyond `pi`, so the leading neglected
/// terms are present in the evaluated defect.
pub fn defect_report(pi: &HSeries, p: &HSeries, hs: &[f64]) -> Result<DefectReport> {
    let k = (pi.order() + 2).min(MAX_TRUNCATION);
    let pik = pi.pad(k);
    let pk = p.pad(k).truncate(k);
    let idem = moyal_product(&pik, &pik, k)?.sub(&pik)?;
    let comm = moyal_product(&pk, &pik, k)?.sub(&moyal_product(&pik, &pk, k)?)?;
    let rows: Vec<DefectRow> = hs
        .iter()
        .map(|&h| DefectRow { h, idempotency: idem.evaluate(h).sup_norm(), commutator: comm.evaluate(h).sup_norm() })
        .collect();
    let idempotency_fit = power_law(hs, &rows.iter().map(|r| r.idempotency).collect::<Vec<_>>());
    let commutator_fit = power_law(hs, &rows.iter().map(|r| r.commutator).collect::<Vec<_>>());
    Ok(DefectReport { rows, idempotency_fit, commutator_fit, product_order: k })
}
