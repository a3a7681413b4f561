//! Signal-subspace dimension selection.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OrderRule {
    /// Count eigenvalues above `eta` times the largest one.
    Threshold { eta: f64 },
    /// Minimum description length (Wax–Kailath).
    Mdl,
}

impl Default for OrderRule {
    fn default() -> Self {
        OrderRule::Threshold { eta: 1e-2 }
    }
}

/// Number of signal components among `eigenvalues` (sorted descending),
/// capped at `max_order`. `snapshots` is only consulted by [`OrderRule::Mdl`].
pub fn select_model_order(eigenvalues: &[f64], max_order: usize, rule: OrderRule, snapshots: usize) -> Result<usize> {
    let first = *eigenvalues
        .first()
        .ok_or_else(|| Error::Domain("no eigenvalues to select an order from".into()))?;
    if first <= 0.0 {
        return Ok(0);
    }
    let limit = max_order.min(eigenvalues.len());
    match rule {
        OrderRule::Threshold { eta } => Ok(eigenvalues[..limit].iter().take_while(|&&l| l > eta * first).count()),
        OrderRule::Mdl => Ok(mdl(eigenvalues, limit, snapshots.max(1))),
    }
}

fn mdl(eigenvalues: &[f64], limit: usize, snapshots: usize) -> usize {
    let m = eigenvalues.len();
    let n = snapshots as f64;
    let floor = eigenvalues[0] * 1e-15;
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..m.min(limit + 1) {
        let tail: Vec<f64> = eigenvalues[k..].iter().map(|&l| l.max(floor)).collect();
        let q = tail.len() as f64;
        let arith = tail.iter().sum::<f64>() / q;
        let geo = (tail.iter().map(|l| l.ln()).sum::<f64>() / q).exp();
        let score = -n * q * (geo / arith).ln() + 0.5 * (k as f64) * (2.0 * m as f64 - k as f64) * n.ln();
        if score < best.0 {
            best = (score, k);
        }
    }
    best.1.min(limit)
}
