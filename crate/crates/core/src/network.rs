//! Directed discrete networks mixing probabilistic CPTs, deterministic
//! functions and (after transformation) hidden-variable factorizations.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::factorize::FactorizedForm;
use crate::formula::Formula;
use crate::space::Space;
use crate::VarId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub states: Vec<String>,
    /// Auxiliary variable introduced by factorization; carries no CPT.
    pub hidden: bool,
}

impl Variable {
    pub fn card(&self) -> usize {
        self.states.len()
    }
}

/// Conditional probability table. `table` is laid out row-major over
/// `parents` (in listed order, first slowest) and then the child, so each
/// consecutive run of `card(child)` entries is one conditional distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub table: Vec<f64>,
}

/// How a deterministic function was specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backing {
    Table,
    Formula { expr: String, formula: Formula },
}

/// A total map from parent configurations to child states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicFunction {
    parents: Vec<VarId>,
    parent_cards: Vec<usize>,
    child: VarId,
    child_card: usize,
    outputs: Vec<usize>,
    backing: Backing,
}

/// Recognised associative shapes of a deterministic function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    /// Binary child equal to a conjunction of literals; `positive[i]` is false
    /// when parent `i` enters negated.
    Conjunction {
        positive: Vec<bool>,
    },
    Max,
    Add,
    Other,
}

impl DeterministicFunction {
    /// `outputs` lists one child state per parent configuration, row-major
    /// over `parents` with the first parent slowest.
    pub fn from_table(parents: &[(VarId, usize)], child: (VarId, usize), outputs: Vec<usize>) -> Result<Self> {
        check_parents(parents, child.0)?;
        let space = Space::new(parents.iter().map(|p| p.1).collect());
        if outputs.len() != space.size() {
            return Err(Error::TableLength {
                what: format!("deterministic outputs of variable {}", child.0),
                expected: space.size(),
                found: outputs.len(),
            });
        }
        if let Some(&bad) = outputs.iter().find(|&&o| o >= child.1) {
            return Err(Error::InvalidNetwork(format!(
                "deterministic output {bad} out of range for variable {} with {} states",
                child.0, child.1
            )));
        }
        Ok(DeterministicFunction {
            parents: parents.iter().map(|p| p.0).collect(),
            parent_cards: parents.iter().map(|p| p.1).collect(),
            child: child.0,
            child_card: child.1,
            outputs,
            backing: Backing::Table,
        })
    }

    pub fn from_fn(parents: &[(VarId, usize)], child: (VarId, usize), f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let space = Space::new(parents.iter().map(|p| p.1).collect());
        let outputs = space.configs().map(|x| f(&x)).collect();
        Self::from_table(parents, child, outputs)
    }

    /// Formula over binary parents, atoms named by `names[i]` for parent `i`.
    pub fn from_formula(
        parents: &[(VarId, usize)],
        names: &[String],
        child: (VarId, usize),
        expr: &str,
    ) -> Result<Self> {
        if names.len() != parents.len() {
            return Err(Error::ShapeMismatch("one name per parent required".into()));
        }
        if child.1 != 2 || parents.iter().any(|p| p.1 != 2) {
            return Err(Error::InvalidNetwork(format!(
                "formula node {} requires a binary child and binary parents",
                child.0
            )));
        }
        let formula = Formula::parse(expr)?;
        let space = Space::new(vec![2; parents.len()]);
        let mut outputs = Vec::with_capacity(space.size());
        for x in space.configs() {
            let lookup = |name: &str| names.iter().position(|n| n == name).map(|i| x[i] == 1);
            outputs.push(formula.eval_with(&lookup)? as usize);
        }
        let mut d = Self::from_table(parents, child, outputs)?;
        d.backing = Backing::Formula {
            expr: expr.to_string(),
            formula,
        };
        Ok(d)
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn space(&self) -> Space {
        Space::new(self.parent_cards.clone())
    }

    pub fn eval(&self, config: &[usize]) -> usize {
        self.outputs[self.space().index_of(config)]
    }

    /// The 0/1 potential ψ(y, x) = [y = f(x)].
    pub fn to_potential(&self) -> Factor {
        let mut layout: Vec<(VarId, usize)> = self
            .parents
            .iter()
            .copied()
            .zip(self.parent_cards.iter().copied())
            .collect();
        layout.push((self.child, self.child_card));
        let mut values = vec![0.0; self.outputs.len() * self.child_card];
        for (row, &y) in self.outputs.iter().enumerate() {
            values[row * self.child_card + y] = 1.0;
        }
        Factor::from_layout(&layout, &values).expect("validated deterministic function")
    }

    /// Same function with variables renamed through `map`.
    pub fn kind(&self) -> FunctionKind {
        let space = self.space();
        let n = self.parents.len();
        if n >= 1 && self.child_card == 2 && self.parent_cards.iter().all(|&c| c == 2) {
            let ones: Vec<usize> = (0..self.outputs.len()).filter(|&i| self.outputs[i] == 1).collect();
            if ones.len() == 1 {
                let point = space.config_of(ones[0]);
                return FunctionKind::Conjunction {
                    positive: point.iter().map(|&b| b == 1).collect(),
                };
            }
        }
        if n >= 1 {
            if space
                .configs()
                .all(|x| self.eval(&x) == x.iter().copied().max().unwrap())
            {
                return FunctionKind::Max;
            }
            if space.configs().all(|x| self.eval(&x) == x.iter().sum::<usize>()) {
                return FunctionKind::Add;
            }
        }
        FunctionKind::Other
    }
}

fn check_parents(parents: &[(VarId, usize)], child: VarId) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &(p, c) in parents {
        if p == child {
            return Err(Error::Cycle(format!("variable {child} is its own parent")));
        }
        if !seen.insert(p) {
            return Err(Error::InvalidNetwork(format!(
                "parent {p} listed twice for variable {child}"
            )));
        }
        if c == 0 {
            return Err(Error::InvalidNetwork(format!("parent {p} has no states")));
        }
    }
    Ok(())
}

/// A deterministic node replaced by its hidden-variable factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizedNode {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub hidden: VarId,
    pub form: FactorizedForm,
}

impl FactorizedNode {
    /// h′ over {Y, B} followed by one g′ᵢ over {Xᵢ, B} per parent.
    pub fn factors(&self) -> Vec<Factor> {
        let k = self.form.hidden_states();
        let mut out = Vec::with_capacity(self.parents.len() + 1);
        let h: Vec<f64> = self.form.h().iter().flatten().map(|&v| v as f64).collect();
        out.push(
            Factor::from_layout(&[(self.child, self.form.child_card()), (self.hidden, k)], &h)
                .expect("factorized form shapes are validated"),
        );
        for (i, &p) in self.parents.iter().enumerate() {
            let g: Vec<f64> = self.form.g()[i].iter().flatten().map(|&v| v as f64).collect();
            out.push(
                Factor::from_layout(&[(p, self.form.parent_cards()[i]), (self.hidden, k)], &g)
                    .expect("factorized form shapes are validated"),
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    deterministic: Vec<DeterministicFunction>,
    factorized: Vec<FactorizedNode>,
}

impl Network {
    pub fn new(
        variables: Vec<Variable>,
        cpts: Vec<Cpt>,
        deterministic: Vec<DeterministicFunction>,
        factorized: Vec<FactorizedNode>,
    ) -> Result<Self> {
        let net = Network {
            variables,
            cpts,
            deterministic,
            factorized,
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !ids.insert(v.id) {
                return Err(Error::DuplicateId(v.id));
            }
            if !names.insert(v.name.as_str()) {
                return Err(Error::InvalidNetwork(format!("duplicate variable name `{}`", v.name)));
            }
            if v.states.is_empty() {
                return Err(Error::InvalidNetwork(format!("variable `{}` has no states", v.name)));
            }
        }
        for (pos, v) in self.variables.iter().enumerate() {
            if v.id != pos {
                return Err(Error::InvalidNetwork(format!(
                    "variable ids must be contiguous from 0; found id {} at position {pos}",
                    v.id
                )));
            }
        }
        let n = self.variables.len();
        let check = |id: VarId| -> Result<()> {
            if id < n {
                Ok(())
            } else {
                Err(Error::UnknownVariable(id.to_string()))
            }
        };

        let mut head_count = vec![0usize; n];
        for cpt in &self.cpts {
            check(cpt.child)?;
            cpt.parents.iter().try_for_each(|&p| check(p))?;
            let layout: Vec<(VarId, usize)> = cpt
                .parents
                .iter()
                .chain(std::iter::once(&cpt.child))
                .map(|&v| (v, self.card(v)))
                .collect();
            check_parents(&layout[..layout.len() - 1], cpt.child)?;
            let expected: usize = layout.iter().map(|v| v.1).product();
            if cpt.table.len() != expected {
                return Err(Error::TableLength {
                    what: format!("CPT of `{}`", self.variables[cpt.child].name),
                    expected,
                    found: cpt.table.len(),
                });
            }
            let card = self.card(cpt.child);
            for (r, row) in cpt.table.chunks(card).enumerate() {
                let total: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidNetwork(format!(
                        "CPT row {r} of `{}` is not a probability distribution",
                        self.variables[cpt.child].name
                    )));
                }
            }
            head_count[cpt.child] += 1;
        }
        for d in &self.deterministic {
            check(d.child)?;
            d.parents.iter().try_for_each(|&p| check(p))?;
            if d.child_card != self.card(d.child)
                || d.parents.iter().zip(&d.parent_cards).any(|(&p, &c)| c != self.card(p))
            {
                return Err(Error::InvalidNetwork(format!(
                    "deterministic function of `{}` disagrees with variable cardinalities",
                    self.variables[d.child].name
                )));
            }
            head_count[d.child] += 1;
        }
        for f in &self.factorized {
            check(f.child)?;
            check(f.hidden)?;
            f.parents.iter().try_for_each(|&p| check(p))?;
            if !self.variables[f.hidden].hidden {
                return Err(Error::InvalidNetwork(format!(
                    "factorization of `{}` uses non-hidden variable `{}`",
                    self.variables[f.child].name, self.variables[f.hidden].name
                )));
            }
            let shape_ok = f.form.child_card() == self.card(f.child)
                && f.form.hidden_states() == self.card(f.hidden)
                && f.form.parent_cards().len() == f.parents.len()
                && f.parents
                    .iter()
                    .zip(f.form.parent_cards())
                    .all(|(&p, &c)| c == self.card(p));
            if !shape_ok {
                return Err(Error::ShapeMismatch(format!(
                    "factorized form of `{}` disagrees with variable cardinalities",
                    self.variables[f.child].name
                )));
            }
            head_count[f.child] += 1;
            head_count[f.hidden] += 1;
        }
        for v in &self.variables {
            match head_count[v.id] {
                1 => {}
                0 => {
                    return Err(Error::InvalidNetwork(format!(
                        "variable `{}` has no CPT or function",
                        v.name
                    )))
                }
                _ => {
                    return Err(Error::InvalidNetwork(format!(
                        "variable `{}` is defined more than once",
                        v.name
                    )))
                }
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.variables.len();
        let mut children: Vec<Vec<VarId>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for (child, parents) in self.arcs() {
            for p in parents {
                children[p].push(child);
                indegree[child] += 1;
            }
        }
        let mut queue: VecDeque<VarId> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if seen < n {
            let stuck = (0..n).find(|&v| indegree[v] > 0).unwrap();
            return Err(Error::Cycle(self.variables[stuck].name.clone()));
        }
        Ok(())
    }

    /// (child, parents) for every directed family. A factorized node
    /// contributes its original parents so the DAG check sees the same arcs
    /// as before the transformation.
    fn arcs(&self) -> Vec<(VarId, Vec<VarId>)> {
        let mut out: Vec<(VarId, Vec<VarId>)> = Vec::new();
        out.extend(self.cpts.iter().map(|c| (c.child, c.parents.clone())));
        out.extend(self.deterministic.iter().map(|d| (d.child, d.parents.clone())));
        for f in &self.factorized {
            out.push((f.hidden, Vec::new()));
            let mut ps = f.parents.clone();
            ps.push(f.hidden);
            out.push((f.child, ps));
        }
        out
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn card(&self, id: VarId) -> usize {
        self.variables[id].states.len()
    }

    pub fn id_of(&self, name: &str) -> Result<VarId> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.id)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn deterministic(&self) -> &[DeterministicFunction] {
        &self.deterministic
    }

    pub fn factorized(&self) -> &[FactorizedNode] {
        &self.factorized
    }

    pub fn deterministic_of(&self, child: VarId) -> Option<&DeterministicFunction> {
        self.deterministic.iter().find(|d| d.child == child)
    }

    pub fn cpt_factor(&self, cpt: &Cpt) -> Factor {
        let layout: Vec<(VarId, usize)> = cpt
            .parents
            .iter()
            .chain(std::iter::once(&cpt.child))
            .map(|&v| (v, self.card(v)))
            .collect();
        Factor::from_layout(&layout, &cpt.table).expect("validated CPT")
    }

    /// Every potential of the model; their product is the joint (or, with
    /// factorized nodes present, a signed decomposition of it).
    pub fn factors(&self) -> Vec<Factor> {
        let mut out: Vec<Factor> = self.cpts.iter().map(|c| self.cpt_factor(c)).collect();
        out.extend(self.deterministic.iter().map(DeterministicFunction::to_potential));
        for f in &self.factorized {
            out.extend(f.factors());
        }
        out
    }

    /// Scopes of all potentials; the moral graph connects each scope into a clique.
    pub fn domains(&self) -> Vec<Vec<VarId>> {
        let mut out: Vec<Vec<VarId>> = Vec::new();
        for c in &self.cpts {
            let mut s = c.parents.clone();
            s.push(c.child);
            out.push(s);
        }
        for d in &self.deterministic {
            let mut s = d.parents.clone();
            s.push(d.child);
            out.push(s);
        }
        for f in &self.factorized {
            out.push(vec![f.child, f.hidden]);
            out.extend(f.parents.iter().map(|&p| vec![p, f.hidden]));
        }
        out
    }

    pub(crate) fn into_parts(self) -> (Vec<Variable>, Vec<Cpt>, Vec<DeterministicFunction>, Vec<FactorizedNode>) {
        (self.variables, self.cpts, self.deterministic, self.factorized)
    }

    pub fn names(&self) -> HashMap<VarId, String> {
        self.variables.iter().map(|v| (v.id, v.name.clone())).collect()
    }
}

/// Incremental construction of a [`Network`].
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    deterministic: Vec<DeterministicFunction>,
    factorized: Vec<FactorizedNode>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_network(net: Network) -> Self {
        let (variables, cpts, deterministic, factorized) = net.into_parts();
        NetworkBuilder {
            variables,
            cpts,
            deterministic,
            factorized,
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, card: usize) -> VarId {
        let states = (0..card).map(|s| s.to_string()).collect();
        self.add_variable_with_states(name, states, false)
    }

    pub fn add_variable_with_states(&mut self, name: impl Into<String>, states: Vec<String>, hidden: bool) -> VarId {
        let id = self.variables.len();
        self.variables.push(Variable {
            id,
            name: name.into(),
            states,
            hidden,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn card(&self, id: VarId) -> usize {
        self.variables[id].states.len()
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id].name
    }

    pub fn add_cpt(&mut self, child: VarId, parents: Vec<VarId>, table: Vec<f64>) -> &mut Self {
        self.cpts.push(Cpt { child, parents, table });
        self
    }

    pub fn add_deterministic(&mut self, d: DeterministicFunction) -> &mut Self {
        self.deterministic.push(d);
        self
    }

    /// Deterministic node from a closure over parent state indices.
    pub fn add_function(
        &mut self,
        child: VarId,
        parents: &[VarId],
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<&mut Self> {
        let ps: Vec<(VarId, usize)> = parents.iter().map(|&p| (p, self.card(p))).collect();
        let d = DeterministicFunction::from_fn(&ps, (child, self.card(child)), f)?;
        Ok(self.add_deterministic(d))
    }

    pub fn add_formula(&mut self, child: VarId, parents: &[VarId], expr: &str) -> Result<&mut Self> {
        let ps: Vec<(VarId, usize)> = parents.iter().map(|&p| (p, self.card(p))).collect();
        let names: Vec<String> = parents.iter().map(|&p| self.name(p).to_string()).collect();
        let d = DeterministicFunction::from_formula(&ps, &names, (child, self.card(child)), expr)?;
        Ok(self.add_deterministic(d))
    }

    pub(crate) fn remove_deterministic(&mut self, child: VarId) -> Option<DeterministicFunction> {
        let pos = self.deterministic.iter().position(|d| d.child == child)?;
        Some(self.deterministic.remove(pos))
    }

    pub(crate) fn add_factorized(&mut self, node: FactorizedNode) -> &mut Self {
        self.factorized.push(node);
        self
    }

    pub fn build(self) -> Result<Network> {
        Network::new(self.variables, self.cpts, self.deterministic, self.factorized)
    }
}
