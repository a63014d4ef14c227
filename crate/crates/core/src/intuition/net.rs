//! Validated intuition nets and exact inference over action-node configurations.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::parser::{parse_raw, Assign, RawMapTarget, RawNet};
use crate::envs::env_spec;
use crate::error::{Error, NetError, Result};

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    /// Observed abstract state, filled in by a state encoder.
    Abstract,
    /// Child node whose states describe the intuitive action.
    Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntuitionNode {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
    pub role: NodeRole,
}

impl IntuitionNode {
    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional probability table. Rows are indexed by the joint parent
/// assignment in mixed radix, first declared parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub rows: Vec<Vec<f64>>,
}

/// How a child configuration becomes an environment action.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionMapping {
    Fixed(usize),
    /// Candidates `(action node position, state, env action)`; the one whose
    /// `node=state` has the largest marginal posterior wins, first on ties.
    ByMarginal(Vec<(usize, usize, usize)>),
}

/// How intuitive actions are read off the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// Most probable child configuration.
    #[default]
    Map,
    /// Child configuration drawn from the posterior.
    Sample,
}

impl std::str::FromStr for TargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(TargetMode::Map),
            "sample" => Ok(TargetMode::Sample),
            other => Err(Error::Config(format!("unknown target mode `{other}` (expected map or sample)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    Abstract(usize),
    Action(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct ChildPlan {
    node: usize,
    parents: Vec<(Source, usize)>,
}

/// A parsed and validated intuition net.
#[derive(Debug, Clone, PartialEq)]
pub struct IntuitionNet {
    name: String,
    env: String,
    nodes: Vec<IntuitionNode>,
    cpts: Vec<Cpt>,
    abstract_nodes: Vec<usize>,
    action_nodes: Vec<usize>,
    mapping: Vec<ActionMapping>,
    config_weights: Vec<f64>,
    state_weights: Vec<(usize, usize, f64)>,
    env_actions: Vec<String>,
    plans: Vec<ChildPlan>,
    radix: Vec<usize>,
    n_configs: usize,
}

/// Parse and validate a net from its text form.
pub fn parse_net(text: &str) -> Result<IntuitionNet> {
    let raw = parse_raw(text)?;
    Ok(IntuitionNet::from_raw(raw)?)
}

fn invalid(line: usize, msg: impl std::fmt::Display) -> NetError {
    NetError::Invalid(format!("line {line}: {msg}"))
}

impl IntuitionNet {
    pub fn from_raw(raw: RawNet) -> std::result::Result<Self, NetError> {
        let spec = env_spec(&raw.env).map_err(|e| NetError::Invalid(e.to_string()))?;
        let env_actions: Vec<String> = spec.action_names.iter().map(|s| s.to_string()).collect();

        let mut index: HashMap<String, usize> = HashMap::new();
        let mut nodes = Vec::new();
        for n in &raw.nodes {
            if index.contains_key(&n.name) {
                return Err(NetError::DuplicateNode(n.name.clone()));
            }
            if n.states.len() < 2 {
                return Err(invalid(n.line, format!("node `{}` needs at least two states", n.name)));
            }
            for (i, s) in n.states.iter().enumerate() {
                if n.states[..i].contains(s) {
                    return Err(invalid(n.line, format!("node `{}` repeats state `{s}`", n.name)));
                }
            }
            if n.action && n.parents.is_empty() {
                return Err(invalid(n.line, format!("action node `{}` needs at least one parent", n.name)));
            }
            index.insert(n.name.clone(), nodes.len());
            nodes.push(IntuitionNode {
                name: n.name.clone(),
                states: n.states.clone(),
                parents: n.parents.clone(),
                role: if n.action { NodeRole::Action } else { NodeRole::Abstract },
            });
        }
        for n in &raw.nodes {
            for p in &n.parents {
                if p == &n.name {
                    return Err(NetError::Cycle(n.name.clone()));
                }
                if !index.contains_key(p) {
                    return Err(invalid(n.line, format!("node `{}` has unknown parent `{p}`", n.name)));
                }
            }
        }
        check_acyclic(&nodes, &index)?;

        let abstract_nodes: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].role == NodeRole::Abstract).collect();
        let action_nodes: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].role == NodeRole::Action).collect();
        if action_nodes.is_empty() {
            return Err(NetError::Invalid("net declares no action node".into()));
        }

        let cpts = build_cpts(&raw, &nodes, &index)?;

        // weights on action-node states
        let mut state_weights = Vec::new();
        for w in &raw.weights {
            let (node, state) = resolve_assign(&w.target, &nodes, &index)?;
            if nodes[node].role != NodeRole::Action {
                return Err(invalid(w.target.line, format!("weight on non-action node `{}`", w.target.node)));
            }
            if !(w.weight.is_finite() && w.weight > 0.0) {
                return Err(invalid(w.target.line, "weights must be strictly positive"));
            }
            if state_weights.iter().any(|&(n, s, _)| n == node && s == state) {
                return Err(invalid(w.target.line, "duplicate weight"));
            }
            state_weights.push((node, state, w.weight));
        }

        let radix: Vec<usize> = action_nodes.iter().map(|&i| nodes[i].states.len()).collect();
        let n_configs: usize = radix.iter().product();
        let action_pos: HashMap<usize, usize> = action_nodes.iter().enumerate().map(|(p, &n)| (n, p)).collect();
        let abstract_pos: HashMap<usize, usize> = abstract_nodes.iter().enumerate().map(|(p, &n)| (n, p)).collect();

        let plans = action_nodes
            .iter()
            .map(|&node| {
                let parents = &nodes[node].parents;
                let mut stride = 1;
                let mut plan: Vec<(Source, usize)> = Vec::with_capacity(parents.len());
                for p in parents.iter().rev() {
                    let pi = index[p];
                    let src = match abstract_pos.get(&pi) {
                        Some(&k) => Source::Abstract(k),
                        None => Source::Action(action_pos[&pi]),
                    };
                    plan.push((src, stride));
                    stride *= nodes[pi].states.len();
                }
                plan.reverse();
                ChildPlan { node, parents: plan }
            })
            .collect();

        let mapping = build_mapping(&raw, &nodes, &index, &action_nodes, &radix, &spec.action_names)?;

        let mut net = IntuitionNet {
            name: raw.name,
            env: raw.env,
            nodes,
            cpts,
            abstract_nodes,
            action_nodes,
            mapping,
            config_weights: Vec::new(),
            state_weights,
            env_actions,
            plans,
            radix,
            n_configs,
        };
        net.config_weights = (0..n_configs)
            .map(|c| {
                let states = net.config_states(c);
                net.action_nodes
                    .iter()
                    .zip(&states)
                    .map(|(&node, &s)| {
                        net.state_weights
                            .iter()
                            .find(|&&(n, st, _)| n == node && st == s)
                            .map_or(1.0, |w| w.2)
                    })
                    .product()
            })
            .collect();
        Ok(net)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn env(&self) -> &str {
        &self.env
    }

    pub fn nodes(&self) -> &[IntuitionNode] {
        &self.nodes
    }

    /// Total node count (abstract plus action nodes).
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, name: &str) -> Option<&IntuitionNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn cpt(&self, name: &str) -> Option<&Cpt> {
        self.nodes.iter().position(|n| n.name == name).map(|i| &self.cpts[i])
    }

    /// Probability of `node=state` given labelled parent states.
    pub fn cpt_entry(&self, node: &str, given: &BTreeMap<String, String>, state: &str) -> Option<f64> {
        let i = self.nodes.iter().position(|n| n.name == node)?;
        let n = &self.nodes[i];
        let mut row = 0;
        for p in &n.parents {
            let pn = self.node(p)?;
            row = row * pn.states.len() + pn.state_index(given.get(p)?)?;
        }
        Some(self.cpts[i].rows[row][n.state_index(state)?])
    }

    /// Abstract (observed) nodes in declaration order.
    pub fn abstract_nodes(&self) -> impl Iterator<Item = &IntuitionNode> {
        self.abstract_nodes.iter().map(|&i| &self.nodes[i])
    }

    /// Action nodes in declaration order; this is also the digit order of
    /// child configurations (first node most significant).
    pub fn action_nodes(&self) -> impl Iterator<Item = &IntuitionNode> {
        self.action_nodes.iter().map(|&i| &self.nodes[i])
    }

    pub fn n_configs(&self) -> usize {
        self.n_configs
    }

    pub fn env_actions(&self) -> &[String] {
        &self.env_actions
    }

    pub fn mapping(&self, config: usize) -> &ActionMapping {
        &self.mapping[config]
    }

    /// Mismatch weight attached to a child configuration (product of the
    /// weights of its `node=state` entries, default 1).
    pub fn config_weight(&self, config: usize) -> f64 {
        self.config_weights[config]
    }

    /// State index of every action node for configuration `config`.
    pub fn config_states(&self, config: usize) -> Vec<usize> {
        let mut out = vec![0; self.radix.len()];
        let mut c = config;
        for k in (0..self.radix.len()).rev() {
            out[k] = c % self.radix[k];
            c /= self.radix[k];
        }
        out
    }

    /// Human-readable `node=state` list for a configuration.
    pub fn config_label(&self, config: usize) -> String {
        self.action_nodes()
            .zip(self.config_states(config))
            .map(|(n, s)| format!("{}={}", n.name, n.states[s]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Convert a labelled assignment into state indices for the abstract
    /// nodes, in declaration order.
    pub fn assignment_indices(&self, assignment: &AbstractAssignment) -> Result<Vec<usize>> {
        for key in assignment.0.keys() {
            match self.node(key) {
                Some(n) if n.role == NodeRole::Abstract => {}
                Some(_) => return Err(Error::Usage(format!("`{key}` is an action node and cannot be assigned"))),
                None => return Err(Error::Usage(format!("unknown node `{key}`"))),
            }
        }
        self.abstract_nodes()
            .map(|n| {
                let label = assignment
                    .0
                    .get(&n.name)
                    .ok_or_else(|| Error::Usage(format!("assignment is missing parent node `{}`", n.name)))?;
                n.state_index(label)
                    .ok_or_else(|| Error::Usage(format!("node `{}` has no state `{label}`", n.name)))
            })
            .collect()
    }

    /// Exact posterior over child configurations given fully observed
    /// abstract nodes.
    pub fn infer_action_posterior(&self, assignment: &AbstractAssignment) -> Result<Posterior> {
        let idx = self.assignment_indices(assignment)?;
        let mut probs = vec![0.0; self.n_configs];
        self.posterior_into(&idx, &mut probs);
        Ok(Posterior { probs })
    }

    /// Fast path of [`Self::infer_action_posterior`] on state indices.
    pub fn posterior_into(&self, abstract_states: &[usize], out: &mut [f64]) {
        debug_assert_eq!(abstract_states.len(), self.abstract_nodes.len());
        debug_assert_eq!(out.len(), self.n_configs);
        let k = self.radix.len();
        let mut states = [0usize; 16];
        let mut states_vec;
        let states: &mut [usize] = if k <= 16 {
            &mut states[..k]
        } else {
            states_vec = vec![0; k];
            &mut states_vec
        };
        let mut total = 0.0;
        for (c, slot) in out.iter_mut().enumerate() {
            let mut rem = c;
            for j in (0..k).rev() {
                states[j] = rem % self.radix[j];
                rem /= self.radix[j];
            }
            let mut p = 1.0;
            for (j, plan) in self.plans.iter().enumerate() {
                let mut row = 0;
                for &(src, stride) in &plan.parents {
                    let s = match src {
                        Source::Abstract(a) => abstract_states[a],
                        Source::Action(a) => states[a],
                    };
                    row += s * stride;
                }
                p *= self.cpts[plan.node].rows[row][states[j]];
            }
            *slot = p;
            total += p;
        }
        if total > 0.0 {
            out.iter_mut().for_each(|p| *p /= total);
        }
    }

    /// Most probable child configuration (first on ties), mapped to an
    /// environment action. Returns `(env action, configuration)`.
    pub fn map_action(&self, posterior: &[f64]) -> (usize, usize) {
        let config = crate::nn::argmax(posterior);
        (self.resolve(config, posterior), config)
    }

    /// Pick a child configuration from `posterior` and map it to an
    /// environment action. Returns `(env action, configuration)`.
    pub fn intuitive_action<R: Rng + ?Sized>(&self, posterior: &[f64], mode: TargetMode, rng: &mut R) -> (usize, usize) {
        match mode {
            TargetMode::Map => self.map_action(posterior),
            TargetMode::Sample => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut config = posterior.len() - 1;
                for (c, p) in posterior.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        config = c;
                        break;
                    }
                }
                (self.resolve(config, posterior), config)
            }
        }
    }

    fn resolve(&self, config: usize, posterior: &[f64]) -> usize {
        match &self.mapping[config] {
            ActionMapping::Fixed(a) => *a,
            ActionMapping::ByMarginal(cands) => {
                let marginal = |pos: usize, state: usize| -> f64 {
                    posterior
                        .iter()
                        .enumerate()
                        .filter(|(c, _)| self.config_states(*c)[pos] == state)
                        .map(|(_, p)| p)
                        .sum()
                };
                let mut best = cands[0].2;
                let mut best_p = f64::NEG_INFINITY;
                for &(pos, state, a) in cands {
                    let m = marginal(pos, state);
                    if m > best_p {
                        best_p = m;
                        best = a;
                    }
                }
                best
            }
        }
    }
}

/// Distribution over child configurations (see [`IntuitionNet::config_states`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub probs: Vec<f64>,
}

/// Labelled states for the abstract nodes of a net.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AbstractAssignment(pub BTreeMap<String, String>);

impl AbstractAssignment {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }

    /// Parse `node=state,node=state`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("expected node=state, got `{part}`")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Usage(format!("node `{}` assigned twice", k.trim())));
            }
        }
        Ok(Self(map))
    }

    pub fn get(&self, node: &str) -> Option<&str> {
        self.0.get(node).map(String::as_str)
    }
}

fn check_acyclic(nodes: &[IntuitionNode], index: &HashMap<String, usize>) -> std::result::Result<(), NetError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(
        i: usize,
        nodes: &[IntuitionNode],
        index: &HashMap<String, usize>,
        mark: &mut [u8],
    ) -> std::result::Result<(), NetError> {
        match mark[i] {
            1 => return Err(NetError::Cycle(nodes[i].name.clone())),
            2 => return Ok(()),
            _ => {}
        }
        mark[i] = 1;
        for p in &nodes[i].parents {
            visit(index[p], nodes, index, mark)?;
        }
        mark[i] = 2;
        Ok(())
    }
    let mut mark = vec![0u8; nodes.len()];
    for i in 0..nodes.len() {
        visit(i, nodes, index, &mut mark)?;
    }
    Ok(())
}

fn resolve_assign(
    a: &Assign,
    nodes: &[IntuitionNode],
    index: &HashMap<String, usize>,
) -> std::result::Result<(usize, usize), NetError> {
    let &n = index
        .get(&a.node)
        .ok_or_else(|| invalid(a.line, format!("unknown node `{}`", a.node)))?;
    let s = nodes[n]
        .state_index(&a.state)
        .ok_or_else(|| invalid(a.line, format!("node `{}` has no state `{}`", a.node, a.state)))?;
    Ok((n, s))
}

fn build_cpts(
    raw: &RawNet,
    nodes: &[IntuitionNode],
    index: &HashMap<String, usize>,
) -> std::result::Result<Vec<Cpt>, NetError> {
    let mut rows: Vec<Vec<Option<Vec<f64>>>> = nodes
        .iter()
        .map(|n| {
            let n_rows: usize = n.parents.iter().map(|p| nodes[index[p]].states.len()).product();
            vec![None; n_rows]
        })
        .collect();
    for c in &raw.cpts {
        let &ni = index
            .get(&c.node)
            .ok_or_else(|| invalid(c.line, format!("CPT for unknown node `{}`", c.node)))?;
        let node = &nodes[ni];
        let mut row = 0;
        for p in &node.parents {
            let a = c
                .given
                .iter()
                .find(|a| &a.node == p)
                .ok_or_else(|| invalid(c.line, format!("CPT row for `{}` does not assign parent `{p}`", c.node)))?;
            let (_, s) = resolve_assign(a, nodes, index)?;
            row = row * nodes[index[p]].states.len() + s;
        }
        if let Some(extra) = c.given.iter().find(|a| !node.parents.contains(&a.node)) {
            return Err(invalid(extra.line, format!("`{}` is not a parent of `{}`", extra.node, c.node)));
        }
        if c.probs.len() != node.states.len() {
            return Err(invalid(
                c.line,
                format!("CPT row for `{}` has {} entries, node has {} states", c.node, c.probs.len(), node.states.len()),
            ));
        }
        if c.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid(c.line, "CPT entries must lie in [0, 1]"));
        }
        let sum: f64 = c.probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(NetError::Normalization {
                node: c.node.clone(),
                line: c.line,
                sum,
            });
        }
        if rows[ni][row].is_some() {
            return Err(invalid(c.line, format!("duplicate CPT row for `{}`", c.node)));
        }
        rows[ni][row] = Some(c.probs.clone());
    }
    rows.into_iter()
        .enumerate()
        .map(|(ni, node_rows)| {
            let node = &nodes[ni];
            let filled = node_rows
                .into_iter()
                .enumerate()
                .map(|(r, row)| {
                    row.ok_or_else(|| NetError::MissingRow {
                        node: node.name.clone(),
                        row: describe_row(node, r, nodes, index),
                    })
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(Cpt { rows: filled })
        })
        .collect()
}

fn describe_row(node: &IntuitionNode, mut row: usize, nodes: &[IntuitionNode], index: &HashMap<String, usize>) -> String {
    let mut parts = Vec::new();
    for p in node.parents.iter().rev() {
        let pn = &nodes[index[p]];
        parts.push(format!("{}={}", p, pn.states[row % pn.states.len()]));
        row /= pn.states.len();
    }
    parts.reverse();
    parts.join(", ")
}

fn build_mapping(
    raw: &RawNet,
    nodes: &[IntuitionNode],
    index: &HashMap<String, usize>,
    action_nodes: &[usize],
    radix: &[usize],
    env_actions: &[&str],
) -> std::result::Result<Vec<ActionMapping>, NetError> {
    let n_configs: usize = radix.iter().product();
    let env_action = |name: &str, line: usize| {
        env_actions
            .iter()
            .position(|a| *a == name)
            .ok_or_else(|| invalid(line, format!("unknown environment action `{name}`; expected one of {env_actions:?}")))
    };
    if raw.maps.is_empty() {
        // a single action node whose states are the environment's actions
        if let [only] = action_nodes {
            let node = &nodes[*only];
            if node.states.iter().all(|s| env_actions.contains(&s.as_str())) {
                return Ok(node
                    .states
                    .iter()
                    .map(|s| ActionMapping::Fixed(env_actions.iter().position(|a| a == s).unwrap()))
                    .collect());
            }
        }
        return Err(NetError::Invalid("net has no `map` lines and its action states are not environment actions".into()));
    }
    let pos_of = |n: usize| action_nodes.iter().position(|&a| a == n);
    let mut mapping: Vec<Option<ActionMapping>> = vec![None; n_configs];
    for m in &raw.maps {
        let mut states = vec![None; action_nodes.len()];
        for a in &m.config {
            let (n, s) = resolve_assign(a, nodes, index)?;
            let p = pos_of(n).ok_or_else(|| invalid(a.line, format!("`{}` is not an action node", a.node)))?;
            if states[p].replace(s).is_some() {
                return Err(invalid(a.line, format!("`{}` assigned twice", a.node)));
            }
        }
        let mut config = 0;
        for (p, s) in states.iter().enumerate() {
            let s = s.ok_or_else(|| {
                invalid(m.line, format!("map does not assign action node `{}`", nodes[action_nodes[p]].name))
            })?;
            config = config * radix[p] + s;
        }
        let target = match &m.target {
            RawMapTarget::Action(name) => ActionMapping::Fixed(env_action(name, m.line)?),
            RawMapTarget::ByMarginal(cands) => ActionMapping::ByMarginal(
                cands
                    .iter()
                    .map(|(a, act)| {
                        let (n, s) = resolve_assign(a, nodes, index)?;
                        let p = pos_of(n).ok_or_else(|| invalid(a.line, format!("`{}` is not an action node", a.node)))?;
                        Ok((p, s, env_action(act, a.line)?))
                    })
                    .collect::<std::result::Result<_, NetError>>()?,
            ),
        };
        if mapping[config].replace(target).is_some() {
            return Err(invalid(m.line, "configuration mapped twice"));
        }
    }
    mapping
        .into_iter()
        .enumerate()
        .map(|(c, m)| {
            m.ok_or_else(|| {
                let mut rem = c;
                let mut parts = Vec::new();
                for p in (0..radix.len()).rev() {
                    let n = &nodes[action_nodes[p]];
                    parts.push(format!("{}={}", n.name, n.states[rem % radix[p]]));
                    rem /= radix[p];
                }
                parts.reverse();
                NetError::Invalid(format!("no action mapped for configuration ({})", parts.join(", ")))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CARTPOLE: &str = r#"
net "cp" env "cartpole"
node lean { states: [left, right] }
node push action { states: [push_left, push_right], parents: [lean] }
cpt lean -> [0.5, 0.5]
cpt push | lean=left -> [0.9, 0.1]
cpt push | lean=right -> [0.1, 0.9]
map (push=push_left) -> left
map (push=push_right) -> right
"#;

    #[test]
    fn two_node_net() {
        let net = parse_net(CARTPOLE).unwrap();
        assert_eq!(net.size(), 2);
        assert_eq!(net.action_nodes().count(), 1);
        let post = net
            .infer_action_posterior(&AbstractAssignment::from_pairs([("lean", "left")]))
            .unwrap();
        assert_eq!(post.probs, vec![0.9, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(net.intuitive_action(&post.probs, TargetMode::Map, &mut rng).0, 0);
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let text = CARTPOLE.replace("parents: [lean]", "parents: [push]");
        assert!(matches!(parse_net(&text), Err(Error::Net(NetError::Cycle(n))) if n == "push"));
    }

    #[test]
    fn longer_cycle_detected() {
        let text = r#"
net "c" env "cartpole"
node a { states: [x, y], parents: [b] }
node b { states: [x, y], parents: [a] }
node push action { states: [left, right], parents: [a] }
"#;
        assert!(matches!(parse_net(text), Err(Error::Net(NetError::Cycle(_)))));
    }

    #[test]
    fn unnormalized_row_rejected() {
        let text = CARTPOLE.replace("[0.9, 0.1]", "[0.5, 0.6]");
        match parse_net(&text) {
            Err(Error::Net(NetError::Normalization { node, line, sum })) => {
                assert_eq!(node, "push");
                assert_eq!(line, 6);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_row_and_duplicate_node() {
        let text = CARTPOLE.replace("cpt push | lean=right -> [0.1, 0.9]\n", "");
        assert!(matches!(
            parse_net(&text),
            Err(Error::Net(NetError::MissingRow { ref node, ref row })) if node == "push" && row == "lean=right"
        ));
        let text = CARTPOLE.replace("node lean { states: [left, right] }", "node lean { states: [left, right] }\nnode lean { states: [a, b] }");
        assert!(matches!(parse_net(&text), Err(Error::Net(NetError::DuplicateNode(_)))));
    }

    #[test]
    fn mapping_must_be_total_and_known() {
        let text = CARTPOLE.replace("map (push=push_right) -> right\n", "");
        assert!(matches!(parse_net(&text), Err(Error::Net(NetError::Invalid(_)))));
        let text = CARTPOLE.replace("-> right", "-> upward");
        assert!(matches!(parse_net(&text), Err(Error::Net(NetError::Invalid(_)))));
    }

    #[test]
    fn identity_mapping_when_states_are_actions() {
        let text = r#"
net "cp" env "cartpole"
node lean { states: [l, r] }
node push action { states: [left, right], parents: [lean] }
cpt lean -> [0.5, 0.5]
cpt push | lean=l -> [0.9, 0.1]
cpt push | lean=r -> [0.1, 0.9]
"#;
        let net = parse_net(text).unwrap();
        assert_eq!(net.mapping(1), &ActionMapping::Fixed(1));
    }

    #[test]
    fn assignment_must_be_total() {
        let net = parse_net(CARTPOLE).unwrap();
        assert!(matches!(net.infer_action_posterior(&AbstractAssignment::default()), Err(Error::Usage(_))));
        let bad = AbstractAssignment::from_pairs([("lean", "up")]);
        assert!(matches!(net.infer_action_posterior(&bad), Err(Error::Usage(_))));
    }

    #[test]
    fn assignment_parsing() {
        let a = AbstractAssignment::parse("a=positive, theta=q2").unwrap();
        assert_eq!(a.get("a"), Some("positive"));
        assert_eq!(a.get("theta"), Some("q2"));
        assert!(AbstractAssignment::parse("a").is_err());
    }

    #[test]
    fn sample_mode_is_reproducible() {
        let net = parse_net(CARTPOLE).unwrap();
        let post = [0.6, 0.4];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| net.intuitive_action(&post, TargetMode::Sample, &mut rng).0).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert!(draw(5).contains(&0) && draw(5).contains(&1));
    }
}
