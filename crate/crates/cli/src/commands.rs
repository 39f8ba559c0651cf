use std::fs;
use std::time::Duration;

use serde::Serialize;

use hidfact_core::bench::{generate_student_model, generate_tasks, run_clique_benchmark, StudentModelSpec};
use hidfact_core::factorize::{build_factorized_form, trivial_factorization, verify_factorization, Verdict};
use hidfact_core::infer::{
    apply_factorization_transform, choose_factorization, divorce_network, factorize_network, moralize_and_triangulate,
    variable_elimination,
};
use hidfact_core::io::{base_with_stats_to_string, network_to_string, parse_base, parse_evidence, parse_network};
use hidfact_core::mbh::{solve_mbh, SearchBudget};
use hidfact_core::{DeterministicFunction, Error, Evidence, Network, VarId};

use crate::{BudgetArgs, CatArgs, CliquesArgs, FactorizeArgs, Failure, InferArgs, MbhArgs, Transform, VerifyArgs};

type Outcome = Result<(), Failure>;

fn read(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read `{path}`: {e}")))
}

fn load_network(path: &str) -> Result<Network, Failure> {
    parse_network(&read(path)?).map_err(|e| Failure::Invalid(format!("{path}: {e}")))
}

fn emit(out: Option<&str>, text: &str) -> Outcome {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Invalid(format!("cannot write `{path}`: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn budget(a: &BudgetArgs) -> Result<SearchBudget, Failure> {
    if !(a.time_limit.is_finite() && a.time_limit > 0.0) {
        return Err(Failure::Invalid(
            "--time-limit must be a positive number of seconds".into(),
        ));
    }
    Ok(SearchBudget {
        max_candidates: a.max_rects,
        max_base_size: a.max_base_size,
        max_closure: a.max_closure,
        max_nodes: a.max_nodes.unwrap_or(u64::MAX),
        time_limit: Duration::from_secs_f64(a.time_limit),
    })
}

fn deterministic_node<'a>(net: &'a Network, name: &str) -> Result<&'a DeterministicFunction, Failure> {
    let id = net.id_of(name)?;
    net.deterministic_of(id)
        .ok_or_else(|| Failure::Invalid(format!("`{name}` is not a deterministic node")))
}

fn single_node<'a>(net: &'a Network, name: Option<&str>) -> Result<&'a DeterministicFunction, Failure> {
    match (name, net.deterministic()) {
        (Some(n), _) => deterministic_node(net, n),
        (None, [only]) => Ok(only),
        (None, []) => Err(Failure::Invalid("the network has no deterministic node".into())),
        (None, _) => Err(Failure::Invalid(
            "several deterministic nodes; choose one with --node".into(),
        )),
    }
}

pub fn factorize(a: FactorizeArgs) -> Outcome {
    let net = load_network(&a.net)?;
    let budget = budget(&a.budget)?;
    let targets: Vec<DeterministicFunction> = match &a.node {
        Some(n) => vec![deterministic_node(&net, n)?.clone()],
        None => {
            let mut all = net.deterministic().to_vec();
            all.sort_by_key(|d| d.child());
            all
        }
    };
    let mut out = net.clone();
    for d in &targets {
        let ff = if let Some(path) = &a.base {
            let base = parse_base(&read(path)?, &d.space())?;
            build_factorized_form(d, &base)?
        } else if a.trivial {
            trivial_factorization(d)
        } else {
            choose_factorization(d, &budget)?
        };
        eprintln!("{}: {} hidden states", net.variable(d.child()).name, ff.hidden_states());
        out = apply_factorization_transform(&out, d.child(), &ff)?;
    }
    self_check(&targets, &out)?;
    let text = network_to_string(&out);
    if parse_network(&text).ok().as_ref() != Some(&out) {
        return Err(Failure::Internal(
            "emitted network does not parse back to itself".into(),
        ));
    }
    emit(a.out.as_deref(), &text)
}

fn self_check(targets: &[DeterministicFunction], out: &Network) -> Outcome {
    for d in targets {
        let node = out
            .factorized()
            .iter()
            .find(|f| f.child == d.child())
            .ok_or_else(|| Failure::Internal(format!("variable {} was not factorized", d.child())))?;
        if let Verdict::Mismatch {
            child_state, config, ..
        } = verify_factorization(d, &node.form)?
        {
            return Err(Failure::Internal(format!(
                "factorization of `{}` fails at y={child_state}, x={config:?}",
                out.variable(d.child()).name
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct NodeVerdict {
    node: String,
    hidden_states: usize,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_mismatch: Option<Mismatch>,
}

#[derive(Serialize)]
struct Mismatch {
    child_state: usize,
    config: Vec<usize>,
    expected: i64,
    found: i64,
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let original = load_network(&a.net)?;
    let fact = load_network(&a.factorized)?;
    if fact.factorized().is_empty() {
        return Err(Failure::Invalid(format!("`{}` has no factorized node", a.factorized)));
    }
    let mut report = Vec::new();
    for node in fact.factorized() {
        let name = &fact.variable(node.child).name;
        let d = deterministic_node(&original, name)?;
        let parents: Vec<&str> = d
            .parents()
            .iter()
            .map(|&p| original.variable(p).name.as_str())
            .collect();
        let fact_parents: Vec<&str> = node.parents.iter().map(|&p| fact.variable(p).name.as_str()).collect();
        if parents != fact_parents {
            return Err(Failure::Invalid(format!(
                "`{name}` has parents {fact_parents:?}, expected {parents:?}"
            )));
        }
        let verdict = verify_factorization(d, &node.form)?;
        report.push(NodeVerdict {
            node: name.clone(),
            hidden_states: node.form.hidden_states(),
            valid: verdict.is_valid(),
            first_mismatch: match verdict {
                Verdict::Valid => None,
                Verdict::Mismatch {
                    child_state,
                    config,
                    expected,
                    found,
                } => Some(Mismatch {
                    child_state,
                    config,
                    expected,
                    found,
                }),
            },
        });
    }
    emit(None, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    match report.iter().find(|r| !r.valid) {
        Some(bad) => Err(Failure::Invalid(format!(
            "factorization of `{}` is not valid",
            bad.node
        ))),
        None => Ok(()),
    }
}

pub fn mbh(a: MbhArgs) -> Outcome {
    let net = load_network(&a.function)?;
    let d = single_node(&net, a.node.as_deref())?;
    let budget = budget(&a.budget)?;
    match solve_mbh(d, &budget) {
        Ok(sol) => {
            let ff = build_factorized_form(d, &sol.base)?;
            if !verify_factorization(d, &ff)?.is_valid() {
                return Err(Failure::Internal("solver base does not verify".into()));
            }
            eprintln!(
                "base of size {} ({}), lower bound {}",
                sol.base.len(),
                if sol.optimal {
                    "proved minimal"
                } else {
                    "not proved minimal"
                },
                sol.lower_bound
            );
            emit(
                a.out.as_deref(),
                &base_with_stats_to_string(&sol.base, sol.optimal, sol.lower_bound, &sol.stats),
            )
        }
        Err(Error::SearchExhausted { reason, size, best }) => {
            emit(
                a.out.as_deref(),
                &base_with_stats_to_string(&best.base, false, best.lower_bound, &best.stats),
            )?;
            Err(Failure::Core(Error::SearchExhausted { reason, size, best }))
        }
        Err(e) => Err(e.into()),
    }
}

fn transformed(net: Network, t: Transform) -> Result<Network, Failure> {
    Ok(match t {
        Transform::None => net,
        Transform::Factorize => factorize_network(&net, &SearchBudget::default())?,
        Transform::Divorce => divorce_network(&net)?,
    })
}

#[derive(Serialize)]
struct Marginal {
    variables: Vec<String>,
    states: Vec<Vec<String>>,
    /// Row-major over `variables`, first slowest.
    values: Vec<f64>,
}

pub fn infer(a: InferArgs) -> Outcome {
    let net = load_network(&a.net)?;
    let evidence = match &a.evidence {
        Some(path) => parse_evidence(&read(path)?, &net)?,
        None => Evidence::new(),
    };
    let query: Vec<VarId> = a.query.iter().map(|n| net.id_of(n.trim())).collect::<Result<_, _>>()?;
    let net = transformed(net, a.transform)?;
    let m = variable_elimination(&net, &evidence, &query)?;
    let out = Marginal {
        variables: m.scope().iter().map(|&v| net.variable(v).name.clone()).collect(),
        states: m.scope().iter().map(|&v| net.variable(v).states.clone()).collect(),
        values: m.values().to_vec(),
    };
    emit(
        a.out.as_deref(),
        &serde_json::to_string_pretty(&out).expect("marginal serializes"),
    )
}

#[derive(Serialize)]
struct Cliques {
    cliques: Vec<Vec<String>>,
    sizes: Vec<u128>,
    total: u128,
    max: u128,
    order: Vec<String>,
}

pub fn cliques(a: CliquesArgs) -> Outcome {
    let net = transformed(load_network(&a.net)?, a.transform)?;
    let report = moralize_and_triangulate(&net);
    let name = |v: &VarId| net.variable(*v).name.clone();
    let out = Cliques {
        cliques: report.cliques.iter().map(|c| c.iter().map(name).collect()).collect(),
        sizes: report.sizes.clone(),
        total: report.total,
        max: report.max_clique_size(),
        order: report.order.iter().map(name).collect(),
    };
    emit(
        a.out.as_deref(),
        &serde_json::to_string_pretty(&out).expect("report serializes"),
    )
}

pub fn bench_cat(a: CatArgs) -> Outcome {
    let spec = StudentModelSpec {
        seed: a.seed,
        ..StudentModelSpec::default()
    };
    let student = generate_student_model(&spec)?;
    let tasks = generate_tasks(a.seed, a.tasks, &spec);
    let report = run_clique_benchmark(&student, &tasks, a.orderings, a.seed)?;
    for (r, div, fact) in &report.ratios {
        eprintln!("r={r}: none/divorce {div:.3}, none/factorize {fact:.3}");
    }
    emit(a.out.as_deref(), &report.to_csv())
}
