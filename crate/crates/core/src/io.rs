//! JSON file formats: networks, evidence, bases and factorized forms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::{Base, Expression, FactorizedForm, Hyperrectangle};
use crate::mbh::SearchStats;
use crate::network::{Backing, Cpt, DeterministicFunction, FactorizedNode, Network, Variable};
use crate::space::Space;
use crate::{Evidence, VarId};

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    variables: Vec<VariableEntry>,
    #[serde(default)]
    cpts: Vec<CptEntry>,
    #[serde(default)]
    deterministic: Vec<DeterministicEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    factorized: Vec<FactorizedEntry>,
}

#[derive(Serialize, Deserialize)]
struct VariableEntry {
    id: VarId,
    name: String,
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    hidden: bool,
}

#[derive(Serialize, Deserialize)]
struct CptEntry {
    child: VarId,
    parents: Vec<VarId>,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DeterministicEntry {
    child: VarId,
    parents: Vec<VarId>,
    function: FunctionEntry,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum FunctionEntry {
    Table { outputs: Vec<usize> },
    Formula { expr: String },
}

#[derive(Serialize, Deserialize)]
struct FactorizedEntry {
    child: VarId,
    parents: Vec<VarId>,
    hidden: VarId,
    form: FormEntry,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct FormEntry {
    rectangles: Vec<Vec<Vec<usize>>>,
    h: Vec<Vec<i64>>,
    g: Vec<Vec<Vec<i64>>>,
}

#[derive(Serialize, Deserialize)]
struct BaseFile {
    rectangles: Vec<Vec<Vec<usize>>>,
    expressions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statistics: Option<StatsEntry>,
}

#[derive(Serialize, Deserialize)]
struct StatsEntry {
    optimal: bool,
    size: usize,
    lower_bound: usize,
    rectangles_enumerated: usize,
    nodes_expanded: u64,
    closure_checks: u64,
    closure_unknown: u64,
}

fn rect_states(r: &Hyperrectangle) -> Vec<Vec<usize>> {
    (0..r.dims().len()).map(|d| r.states(d)).collect()
}

fn form_entry(ff: &FactorizedForm) -> FormEntry {
    FormEntry {
        rectangles: ff.rectangles().iter().map(rect_states).collect(),
        h: ff.h().to_vec(),
        g: ff.g().to_vec(),
    }
}

fn form_from_entry(entry: FormEntry, child_card: usize, parent_cards: Vec<usize>) -> Result<FactorizedForm> {
    let space = Space::new(parent_cards.clone());
    let rectangles = entry
        .rectangles
        .iter()
        .map(|r| Hyperrectangle::from_states(r, &space))
        .collect::<Result<Vec<_>>>()?;
    FactorizedForm::from_parts(child_card, parent_cards, rectangles, entry.h, entry.g)
}

pub fn parse_network(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text).map_err(Error::from_json)?;
    let mut entries = file.variables;
    entries.sort_by_key(|v| v.id);
    let variables: Vec<Variable> = entries
        .into_iter()
        .map(|v| Variable {
            id: v.id,
            name: v.name,
            states: v.states,
            hidden: v.hidden,
        })
        .collect();
    let card = |id: VarId| -> Result<usize> {
        variables
            .get(id)
            .filter(|v| v.id == id)
            .map(Variable::card)
            .ok_or_else(|| Error::UnknownVariable(id.to_string()))
    };
    let cpts = file
        .cpts
        .into_iter()
        .map(|c| Cpt {
            child: c.child,
            parents: c.parents,
            table: c.table,
        })
        .collect();
    let mut deterministic = Vec::with_capacity(file.deterministic.len());
    for d in file.deterministic {
        let parents = d
            .parents
            .iter()
            .map(|&p| Ok((p, card(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let child = (d.child, card(d.child)?);
        deterministic.push(match d.function {
            FunctionEntry::Table { outputs } => DeterministicFunction::from_table(&parents, child, outputs)?,
            FunctionEntry::Formula { expr } => {
                let names: Vec<String> = d.parents.iter().map(|&p| variables[p].name.clone()).collect();
                DeterministicFunction::from_formula(&parents, &names, child, &expr)?
            }
        });
    }
    let mut factorized = Vec::with_capacity(file.factorized.len());
    for f in file.factorized {
        let parent_cards = f.parents.iter().map(|&p| card(p)).collect::<Result<Vec<_>>>()?;
        let form = form_from_entry(f.form, card(f.child)?, parent_cards)?;
        factorized.push(FactorizedNode {
            child: f.child,
            parents: f.parents,
            hidden: f.hidden,
            form,
        });
    }
    Network::new(variables, cpts, deterministic, factorized)
}

pub fn network_to_string(net: &Network) -> String {
    let file = NetworkFile {
        variables: net
            .variables()
            .iter()
            .map(|v| VariableEntry {
                id: v.id,
                name: v.name.clone(),
                states: v.states.clone(),
                hidden: v.hidden,
            })
            .collect(),
        cpts: net
            .cpts()
            .iter()
            .map(|c| CptEntry {
                child: c.child,
                parents: c.parents.clone(),
                table: c.table.clone(),
            })
            .collect(),
        deterministic: net
            .deterministic()
            .iter()
            .map(|d| DeterministicEntry {
                child: d.child(),
                parents: d.parents().to_vec(),
                function: match d.backing() {
                    Backing::Table => FunctionEntry::Table {
                        outputs: d.outputs().to_vec(),
                    },
                    Backing::Formula { expr, .. } => FunctionEntry::Formula { expr: expr.clone() },
                },
            })
            .collect(),
        factorized: net
            .factorized()
            .iter()
            .map(|f| FactorizedEntry {
                child: f.child,
                parents: f.parents.clone(),
                hidden: f.hidden,
                form: form_entry(&f.form),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

/// Evidence file: variable name to 0/1 vector.
pub fn parse_evidence(text: &str, net: &Network) -> Result<Evidence> {
    let map: BTreeMap<String, Vec<u8>> = serde_json::from_str(text).map_err(Error::from_json)?;
    let mut e = Evidence::new();
    for (name, vector) in map {
        let id = net.id_of(&name)?;
        if vector.len() != net.card(id) {
            return Err(Error::EvidenceLength {
                var: name,
                expected: net.card(id),
                found: vector.len(),
            });
        }
        e.set(id, vector)?;
    }
    Ok(e)
}

pub fn evidence_to_string(e: &Evidence, net: &Network) -> String {
    let map: BTreeMap<&str, &[u8]> = e.iter().map(|(id, v)| (net.variable(id).name.as_str(), v)).collect();
    serde_json::to_string_pretty(&map).expect("evidence serializes")
}

/// Base file; rectangles are read against `space` and expressions are keyed
/// by child state index.
pub fn parse_base(text: &str, space: &Space) -> Result<Base> {
    let file: BaseFile = serde_json::from_str(text).map_err(Error::from_json)?;
    let rectangles = file
        .rectangles
        .iter()
        .map(|r| Hyperrectangle::from_states(r, space))
        .collect::<Result<Vec<_>>>()?;
    let mut expressions = BTreeMap::new();
    for (key, text) in &file.expressions {
        let state: usize = key
            .parse()
            .map_err(|_| Error::ShapeMismatch(format!("expression key `{key}` is not a state index")))?;
        expressions.insert(state, Expression::parse(text)?);
    }
    Base::new(space.clone(), rectangles, expressions)
}

fn base_file(base: &Base) -> BaseFile {
    BaseFile {
        rectangles: base.rectangles().iter().map(rect_states).collect(),
        expressions: base
            .expressions()
            .iter()
            .map(|(s, e)| (s.to_string(), e.to_string()))
            .collect(),
        statistics: None,
    }
}

pub fn base_to_string(base: &Base) -> String {
    serde_json::to_string_pretty(&base_file(base)).expect("base serializes")
}

/// Base file with an appended statistics block; still readable by [`parse_base`].
pub fn base_with_stats_to_string(base: &Base, optimal: bool, lower_bound: usize, stats: &SearchStats) -> String {
    let mut file = base_file(base);
    file.statistics = Some(StatsEntry {
        optimal,
        size: base.len(),
        lower_bound,
        rectangles_enumerated: stats.rectangles_enumerated,
        nodes_expanded: stats.nodes_expanded,
        closure_checks: stats.closure_checks,
        closure_unknown: stats.closure_unknown,
    });
    serde_json::to_string_pretty(&file).expect("base serializes")
}

pub fn form_to_string(ff: &FactorizedForm) -> String {
    serde_json::to_string_pretty(&form_entry(ff)).expect("form serializes")
}

pub fn parse_form(text: &str, child_card: usize, parent_cards: &[usize]) -> Result<FactorizedForm> {
    let entry: FormEntry = serde_json::from_str(text).map_err(Error::from_json)?;
    form_from_entry(entry, child_card, parent_cards.to_vec())
}
