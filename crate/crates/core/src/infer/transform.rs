use crate::error::{Error, Result};
use crate::factorize::{
    build_factorized_form, known_base, trivial_factorization, verify_factorization, FactorizedForm, Verdict,
};
use crate::mbh::{solve_mbh, SearchBudget};
use crate::network::{DeterministicFunction, FactorizedNode, FunctionKind, Network, NetworkBuilder};
use crate::VarId;

fn unique_name(b: &NetworkBuilder, stem: &str) -> String {
    let taken = |n: &str| (0..b.len()).any(|v| b.name(v) == n);
    if !taken(stem) {
        return stem.to_string();
    }
    (2..)
        .map(|i| format!("{stem}_{i}"))
        .find(|n| !taken(n))
        .expect("unbounded suffixes")
}

/// Replaces the deterministic table of `node` by h′ over {Y, B} and one g′ᵢ
/// over {Xᵢ, B} per parent, adding the hidden variable B.
pub fn apply_factorization_transform(net: &Network, node: VarId, ff: &FactorizedForm) -> Result<Network> {
    let d = net
        .deterministic_of(node)
        .ok_or_else(|| Error::InvalidNetwork(format!("variable {node} is not a deterministic node")))?
        .clone();
    if let Verdict::Mismatch {
        child_state, config, ..
    } = verify_factorization(&d, ff)?
    {
        return Err(Error::VerificationFailed { child_state, config });
    }
    let mut b = NetworkBuilder::from_network(net.clone());
    b.remove_deterministic(node);
    let name = unique_name(&b, &format!("B_{}", net.variable(node).name));
    let states = (1..=ff.hidden_states()).map(|i| format!("R{i}")).collect();
    let hidden = b.add_variable_with_states(name, states, true);
    b.add_factorized(FactorizedNode {
        child: node,
        parents: d.parents().to_vec(),
        hidden,
        form: ff.clone(),
    });
    b.build()
}

/// Factorization for one function: a closed-form base when the function is
/// a recognised conjunction or MAX, otherwise the MBH solver, falling back to
/// the best base it found or, failing that, the trivial factorization.
pub fn choose_factorization(d: &DeterministicFunction, budget: &SearchBudget) -> Result<FactorizedForm> {
    if let Some(base) = known_base(d) {
        return build_factorized_form(d, &base);
    }
    match solve_mbh(d, budget) {
        Ok(sol) => build_factorized_form(d, &sol.base),
        Err(Error::SearchExhausted { best, .. }) => build_factorized_form(d, &best.base),
        Err(Error::BudgetExceeded { .. }) => Ok(trivial_factorization(d)),
        Err(e) => Err(e),
    }
}

/// Factorizes every deterministic node (in child id order).
pub fn factorize_network(net: &Network, budget: &SearchBudget) -> Result<Network> {
    let mut children: Vec<VarId> = net.deterministic().iter().map(|d| d.child()).collect();
    children.sort_unstable();
    let mut out = net.clone();
    for child in children {
        let d = out.deterministic_of(child).expect("still deterministic").clone();
        let ff = choose_factorization(&d, budget)?;
        out = apply_factorization_transform(&out, child, &ff)?;
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Step {
    And,
    Add,
    Max,
}

/// An input to a divorced node: a variable plus, for conjunctions, whether
/// it enters negated.
#[derive(Clone, Copy)]
struct Input {
    var: VarId,
    positive: bool,
}

/// Replaces an associative deterministic node (conjunction of literals, ADD,
/// MAX) by a balanced binary tree of two-parent deterministic nodes.
pub fn parent_divorcing_transform(net: &Network, node: VarId) -> Result<Network> {
    let d = net
        .deterministic_of(node)
        .ok_or_else(|| Error::InvalidNetwork(format!("variable {node} is not a deterministic node")))?
        .clone();
    if d.parents().len() <= 2 {
        return Ok(net.clone());
    }
    let (step, inputs): (Step, Vec<Input>) = match d.kind() {
        FunctionKind::Conjunction { positive } => (
            Step::And,
            d.parents()
                .iter()
                .zip(positive)
                .map(|(&var, positive)| Input { var, positive })
                .collect(),
        ),
        FunctionKind::Add => (Step::Add, plain(d.parents())),
        FunctionKind::Max => (Step::Max, plain(d.parents())),
        FunctionKind::Other => {
            return Err(Error::NotDecomposable(format!(
                "function of `{}` is not a conjunction, sum or maximum",
                net.variable(node).name
            )))
        }
    };
    let mut b = NetworkBuilder::from_network(net.clone());
    b.remove_deterministic(node);
    let stem = net.variable(node).name.clone();
    let mut counter = 0;
    let split = inputs.len().div_ceil(2);
    let left = build_subtree(&mut b, &inputs[..split], step, &stem, &mut counter)?;
    let right = build_subtree(&mut b, &inputs[split..], step, &stem, &mut counter)?;
    add_step(&mut b, node, left, right, step)?;
    b.build()
}

fn plain(parents: &[VarId]) -> Vec<Input> {
    parents.iter().map(|&var| Input { var, positive: true }).collect()
}

fn build_subtree(
    b: &mut NetworkBuilder,
    inputs: &[Input],
    step: Step,
    stem: &str,
    counter: &mut usize,
) -> Result<Input> {
    if inputs.len() == 1 {
        return Ok(inputs[0]);
    }
    let split = inputs.len().div_ceil(2);
    let left = build_subtree(b, &inputs[..split], step, stem, counter)?;
    let right = build_subtree(b, &inputs[split..], step, stem, counter)?;
    let card = match step {
        Step::And => 2,
        Step::Add => b.card(left.var) + b.card(right.var) - 1,
        Step::Max => b.card(left.var).max(b.card(right.var)),
    };
    *counter += 1;
    let name = unique_name(b, &format!("{stem}_d{counter}"));
    let var = b.add_variable(name, card);
    add_step(b, var, left, right, step)?;
    Ok(Input { var, positive: true })
}

fn add_step(b: &mut NetworkBuilder, child: VarId, left: Input, right: Input, step: Step) -> Result<()> {
    let lit = |inp: Input, x: usize| (x == 1) == inp.positive;
    b.add_function(child, &[left.var, right.var], move |x| match step {
        Step::And => (lit(left, x[0]) && lit(right, x[1])) as usize,
        Step::Add => x[0] + x[1],
        Step::Max => x[0].max(x[1]),
    })?;
    Ok(())
}

/// Divorces every deterministic node with more than two parents.
pub fn divorce_network(net: &Network) -> Result<Network> {
    let mut children: Vec<VarId> = net.deterministic().iter().map(|d| d.child()).collect();
    children.sort_unstable();
    let mut out = net.clone();
    for child in children {
        out = parent_divorcing_transform(&out, child)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::{moralize_and_triangulate, variable_elimination};
    use crate::Evidence;

    fn with_roots(cards: &[usize]) -> (NetworkBuilder, Vec<VarId>) {
        let mut b = NetworkBuilder::new();
        let ids: Vec<VarId> = cards
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let v = b.add_variable(format!("X{}", i + 1), c);
                b.add_cpt(v, vec![], vec![1.0 / c as f64; c]);
                v
            })
            .collect();
        (b, ids)
    }

    #[test]
    fn conjunction_of_four_gets_two_intermediates() {
        let (mut b, xs) = with_roots(&[2, 2, 2, 2]);
        let y = b.add_variable("Y", 2);
        b.add_formula(y, &xs, "X1 & X2 & !X3 & X4").unwrap();
        let net = b.build().unwrap();
        let div = parent_divorcing_transform(&net, y).unwrap();
        assert_eq!(div.len(), net.len() + 2);
        assert!(div.deterministic().iter().all(|d| d.parents().len() == 2));
        let largest = div
            .deterministic()
            .iter()
            .map(|d| d.to_potential().values().len())
            .max();
        assert_eq!(largest, Some(8));
        let before = variable_elimination(&net, &Evidence::new(), &[y]).unwrap();
        let after = variable_elimination(&div, &Evidence::new(), &[y]).unwrap();
        assert!((before.values()[1] - 1.0 / 16.0).abs() < 1e-12);
        assert!((after.values()[1] - before.values()[1]).abs() < 1e-12);
    }

    #[test]
    fn two_parents_unchanged() {
        let (mut b, xs) = with_roots(&[2, 2]);
        let y = b.add_variable("Y", 2);
        b.add_formula(y, &xs, "X1 | X2").unwrap();
        let net = b.build().unwrap();
        assert_eq!(parent_divorcing_transform(&net, y).unwrap(), net);
    }

    #[test]
    fn add_of_three_ternaries() {
        let (mut b, xs) = with_roots(&[3, 3, 3]);
        let y = b.add_variable("Y", 7);
        b.add_function(y, &xs, |x| x.iter().sum()).unwrap();
        let net = b.build().unwrap();
        let div = parent_divorcing_transform(&net, y).unwrap();
        assert_eq!(div.len(), net.len() + 1);
        assert_eq!(div.card(net.len()), 5);
    }

    #[test]
    fn other_functions_refused() {
        let (mut b, xs) = with_roots(&[2, 2, 2]);
        let y = b.add_variable("Y", 2);
        b.add_formula(y, &xs, "X1 <=> (X2 | X3)").unwrap();
        let net = b.build().unwrap();
        assert!(matches!(
            parent_divorcing_transform(&net, y),
            Err(Error::NotDecomposable(_))
        ));
    }

    #[test]
    fn factorized_star_shrinks_cliques() {
        let (mut b, xs) = with_roots(&[2, 2, 2, 2]);
        let y = b.add_variable("Y", 2);
        b.add_formula(y, &xs, "X1 & X2 & X3 & X4").unwrap();
        let net = b.build().unwrap();
        let fact = factorize_network(&net, &SearchBudget::default()).unwrap();
        let hidden = fact.variables().iter().find(|v| v.hidden).unwrap();
        assert_eq!(hidden.card(), 2);
        assert_eq!(hidden.name, "B_Y");
        let before = moralize_and_triangulate(&net);
        let after = moralize_and_triangulate(&fact);
        assert_eq!(before.max_clique_size(), 32);
        assert!(after.max_clique_size() <= 8);
        assert!(after.total < before.total);
    }

    #[test]
    fn unverified_form_rejected() {
        let (mut b, xs) = with_roots(&[2]);
        let y = b.add_variable("Y", 2);
        b.add_function(y, &xs, |x| x[0]).unwrap();
        let net = b.build().unwrap();
        let d = net.deterministic_of(y).unwrap();
        let mut ff = trivial_factorization(d);
        ff.set_h(0, 0, 0);
        assert!(matches!(
            apply_factorization_transform(&net, y, &ff),
            Err(Error::VerificationFailed { .. })
        ));
    }
}
