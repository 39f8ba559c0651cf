use std::collections::BTreeSet;

use super::triangulate::{min_fill, Graph};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::{Evidence, Factor, VarId};

/// Normalizers with magnitude at or below this are treated as zero.
pub const ZERO_NORMALIZER_EPS: f64 = 1e-12;
/// Final marginal cells below this are an error rather than rounding noise.
pub const NEGATIVE_TOLERANCE: f64 = -1e-9;

/// Min-fill order over the potentials' domain graph eliminating every
/// variable outside `query`.
pub fn elimination_order(net: &Network, query: &[VarId]) -> Vec<VarId> {
    let graph = Graph::from_domains(net.len(), &net.domains());
    let keep: BTreeSet<VarId> = query.iter().copied().collect();
    let targets: Vec<VarId> = (0..net.len()).filter(|v| !keep.contains(v)).collect();
    min_fill(&graph, &targets).0
}

/// Normalized marginal P(query | e) by variable elimination in min-fill order.
pub fn variable_elimination(net: &Network, e: &Evidence, query: &[VarId]) -> Result<Factor> {
    let order = elimination_order(net, query);
    variable_elimination_with_order(net, e, query, &order)
}

pub fn variable_elimination_with_order(
    net: &Network,
    e: &Evidence,
    query: &[VarId],
    order: &[VarId],
) -> Result<Factor> {
    check_query(net, query)?;
    check_order(net, query, order)?;
    for (var, vector) in e.iter() {
        if var >= net.len() {
            return Err(Error::UnknownVariable(var.to_string()));
        }
        if vector.len() != net.card(var) {
            return Err(Error::EvidenceLength {
                var: net.variable(var).name.clone(),
                expected: net.card(var),
                found: vector.len(),
            });
        }
    }
    let mut pool: Vec<Factor> = net
        .factors()
        .iter()
        .map(|f| f.insert_evidence(e))
        .collect::<Result<_>>()?;
    for &v in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) = pool.into_iter().partition(|f| f.contains(v));
        pool = without;
        if with.is_empty() {
            continue;
        }
        pool.push(product(&with)?.marginalize(v)?);
    }
    let joint = product(&pool)?;
    normalize(joint)
}

fn product(factors: &[Factor]) -> Result<Factor> {
    factors.iter().try_fold(Factor::scalar(1.0), |acc, f| acc.multiply(f))
}

fn check_query(net: &Network, query: &[VarId]) -> Result<()> {
    if query.is_empty() {
        return Err(Error::InvalidOrder("query must name at least one variable".into()));
    }
    let mut seen = BTreeSet::new();
    for &q in query {
        if q >= net.len() {
            return Err(Error::UnknownVariable(q.to_string()));
        }
        if !seen.insert(q) {
            return Err(Error::InvalidOrder(format!("query lists variable {q} twice")));
        }
    }
    Ok(())
}

fn check_order(net: &Network, query: &[VarId], order: &[VarId]) -> Result<()> {
    let expected: BTreeSet<VarId> = (0..net.len()).filter(|v| !query.contains(v)).collect();
    let given: BTreeSet<VarId> = order.iter().copied().collect();
    if given.len() != order.len() || given != expected {
        return Err(Error::InvalidOrder(
            "order must list every non-query variable exactly once".into(),
        ));
    }
    Ok(())
}

/// Scales to unit sum; tiny negative noise from signed potentials is
/// clipped, larger negatives are reported.
pub(crate) fn normalize(joint: Factor) -> Result<Factor> {
    let z = joint.sum();
    if !z.is_finite() || z.abs() <= ZERO_NORMALIZER_EPS {
        return Err(Error::ZeroNormalizer);
    }
    let scaled = joint.scaled(1.0 / z);
    if let Some(&worst) = scaled
        .values()
        .iter()
        .filter(|&&v| v < NEGATIVE_TOLERANCE)
        .min_by(|a, b| a.total_cmp(b))
    {
        return Err(Error::NegativeMarginal(worst));
    }
    let clipped = scaled.map_values(|v| v.max(0.0));
    let total = clipped.sum();
    Ok(clipped.scaled(1.0 / total))
}
