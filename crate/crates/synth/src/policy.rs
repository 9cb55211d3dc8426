use std::collections::{BTreeMap, HashMap};

use riskplan_model::ActionId;
use riskplan_product::{PStateId, ProductAutomaton, Region, StatePartition};
use serde::{Deserialize, Serialize};

use crate::extract::StationaryPolicy;
use crate::SynthError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Amec,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub gamma: f64,
    pub beta: f64,
    pub penalty_d: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            gamma: 0.0,
            beta: 0.5,
            penalty_d: 300.0,
        }
    }
}

impl Params {
    pub fn check(&self) -> Result<(), SynthError> {
        let bad = |what: &str| Err(SynthError::InvalidParams(what.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if !(self.penalty_d > 0.0 && self.penalty_d.is_finite()) {
            return bad("penalty d must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    /// Expected cycle cost weighted by the inflow.
    pub suffix_cost: f64,
    /// Inflow `Σ y0`; equals the number of cycles started per visit.
    pub entry_mass: f64,
    /// Mass escaping to `s_bad` (zero for an AMEC).
    pub bad_mass: f64,
    /// Expected number of steps per inflow.
    pub steps: f64,
}

impl ComponentStats {
    /// Expected total cost of one accepting cyclic path.
    pub fn cycle_cost(&self) -> f64 {
        if self.entry_mass > 0.0 {
            self.suffix_cost / self.entry_mass
        } else {
            0.0
        }
    }

    /// `γ_sufx` of this component, per started cycle.
    pub fn gamma_sufx(&self) -> f64 {
        if self.entry_mass > 0.0 {
            self.bad_mass / self.entry_mass
        } else {
            0.0
        }
    }
}

/// Suffix policy of one AMEC or ASCC.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPolicy {
    pub pair: usize,
    pub states: Vec<PStateId>,
    pub i_states: Vec<PStateId>,
    /// Actions usable at each state, aligned with `states`.
    pub actions: Vec<Vec<ActionId>>,
    pub policy: StationaryPolicy,
    pub stats: ComponentStats,
}

impl ComponentPolicy {
    pub fn contains(&self, s: PStateId) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn is_accepting(&self, s: PStateId) -> bool {
        self.i_states.binary_search(&s).is_ok()
    }

    pub fn actions_at(&self, s: PStateId) -> Option<&[ActionId]> {
        self.states
            .binary_search(&s)
            .ok()
            .map(|k| self.actions[k].as_slice())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub objective: f64,
    pub prefix_cost: f64,
    /// Sum of the components' suffix costs.
    pub suffix_cost: f64,
    /// Suffix cost per step spent in the components.
    pub mean_suffix_cost: f64,
    pub reach_probability: f64,
    /// `γ_prex = 1 - reach_probability`.
    pub gamma_prex: f64,
    /// Escaping mass per started cycle, pooled over components.
    pub gamma_sufx: f64,
    pub lp_rows: usize,
    pub lp_cols: usize,
    pub lp_nonzeros: usize,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletePolicy {
    pub fingerprint: String,
    pub mode: Mode,
    pub params: Params,
    pub partition: StatePartition,
    pub prefix: StationaryPolicy,
    pub components: Vec<ComponentPolicy>,
    pub recovery: BTreeMap<PStateId, ActionId>,
    pub diagnostics: Diagnostics,
}

impl CompletePolicy {
    /// First component containing `s`.
    pub fn component_of(&self, s: PStateId) -> Option<usize> {
        self.components.iter().position(|c| c.contains(s))
    }

    pub fn region(&self, s: PStateId) -> Region {
        self.partition.of(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistEntry {
    pub state: PStateId,
    pub name: String,
    pub actions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub pair: usize,
    pub states: Vec<PStateId>,
    pub i_states: Vec<PStateId>,
    pub actions: Vec<Vec<String>>,
    pub policy: Vec<DistEntry>,
    pub stats: ComponentStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEntry {
    pub state: PStateId,
    pub name: String,
    pub action: String,
}

/// Serialized form of a `CompletePolicy`, keyed by names where a reader
/// would want them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDoc {
    pub format_version: u32,
    pub fingerprint: String,
    pub mode: Mode,
    pub params: Params,
    /// One character per product state: `o`, `c`, `d` or `n`.
    pub partition: String,
    pub prefix: Vec<DistEntry>,
    pub components: Vec<ComponentDoc>,
    pub recovery: Vec<RecoveryEntry>,
    pub diagnostics: Diagnostics,
}

fn region_char(r: Region) -> char {
    match r {
        Region::Unreachable => 'o',
        Region::Goal => 'c',
        Region::Bad => 'd',
        Region::Normal => 'n',
    }
}

fn dist_doc(p: &ProductAutomaton, pi: &StationaryPolicy) -> Vec<DistEntry> {
    pi.dist
        .iter()
        .map(|(&s, d)| DistEntry {
            state: s,
            name: p.state_name(s),
            actions: d
                .iter()
                .map(|&(u, pr)| (p.actions[u].clone(), pr))
                .collect(),
        })
        .collect()
}

pub fn to_doc(p: &ProductAutomaton, pol: &CompletePolicy) -> PolicyDoc {
    PolicyDoc {
        format_version: FORMAT_VERSION,
        fingerprint: pol.fingerprint.clone(),
        mode: pol.mode,
        params: pol.params,
        partition: pol
            .partition
            .region
            .iter()
            .map(|&r| region_char(r))
            .collect(),
        prefix: dist_doc(p, &pol.prefix),
        components: pol
            .components
            .iter()
            .map(|c| ComponentDoc {
                pair: c.pair,
                states: c.states.clone(),
                i_states: c.i_states.clone(),
                actions: c
                    .actions
                    .iter()
                    .map(|a| a.iter().map(|&u| p.actions[u].clone()).collect())
                    .collect(),
                policy: dist_doc(p, &c.policy),
                stats: c.stats.clone(),
            })
            .collect(),
        recovery: pol
            .recovery
            .iter()
            .map(|(&s, &u)| RecoveryEntry {
                state: s,
                name: p.state_name(s),
                action: p.actions[u].clone(),
            })
            .collect(),
        diagnostics: pol.diagnostics.clone(),
    }
}

struct Names<'a> {
    p: &'a ProductAutomaton,
    ids: HashMap<&'a str, ActionId>,
}

impl<'a> Names<'a> {
    fn new(p: &'a ProductAutomaton) -> Self {
        Names {
            p,
            ids: p
                .actions
                .iter()
                .enumerate()
                .map(|(k, a)| (a.as_str(), k))
                .collect(),
        }
    }

    fn action(&self, name: &str) -> Result<ActionId, SynthError> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| SynthError::Doc(format!("unknown action {name:?}")))
    }

    fn state(&self, s: PStateId) -> Result<PStateId, SynthError> {
        if s < self.p.num_states() {
            Ok(s)
        } else {
            Err(SynthError::Doc(format!("state {s} out of range")))
        }
    }

    fn policy(&self, entries: &[DistEntry]) -> Result<StationaryPolicy, SynthError> {
        let mut dist = BTreeMap::new();
        for e in entries {
            let s = self.state(e.state)?;
            let mut d = Vec::with_capacity(e.actions.len());
            for (a, &pr) in &e.actions {
                let u = self.action(a)?;
                if self.p.transition(s, u).is_none() {
                    return Err(SynthError::Doc(format!(
                        "action {a:?} not allowed at state {s}"
                    )));
                }
                d.push((u, pr));
            }
            d.sort_by_key(|e| e.0);
            let total: f64 = d.iter().map(|e| e.1).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(SynthError::Doc(format!(
                    "distribution at state {s} sums to {total}"
                )));
            }
            dist.insert(s, d);
        }
        Ok(StationaryPolicy { dist })
    }
}

/// Rebuilds a policy for `p`, rejecting documents made for another product.
pub fn from_doc(doc: &PolicyDoc, p: &ProductAutomaton) -> Result<CompletePolicy, SynthError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(SynthError::Doc(format!(
            "unsupported format_version {}",
            doc.format_version
        )));
    }
    let fp = p.fingerprint();
    if doc.fingerprint != fp {
        return Err(SynthError::Fingerprint {
            policy: doc.fingerprint.clone(),
            product: fp,
        });
    }
    let names = Names::new(p);
    let region = doc
        .partition
        .chars()
        .map(|ch| match ch {
            'o' => Ok(Region::Unreachable),
            'c' => Ok(Region::Goal),
            'd' => Ok(Region::Bad),
            'n' => Ok(Region::Normal),
            _ => Err(SynthError::Doc(format!("bad partition symbol {ch:?}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if region.len() != p.num_states() {
        return Err(SynthError::Doc(
            "partition length differs from the state count".into(),
        ));
    }
    let mut components = Vec::with_capacity(doc.components.len());
    for c in &doc.components {
        if c.actions.len() != c.states.len() {
            return Err(SynthError::Doc("component action lists misaligned".into()));
        }
        for &s in c.states.iter().chain(&c.i_states) {
            names.state(s)?;
        }
        let actions = c
            .actions
            .iter()
            .map(|a| {
                a.iter()
                    .map(|n| names.action(n))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        components.push(ComponentPolicy {
            pair: c.pair,
            states: c.states.clone(),
            i_states: c.i_states.clone(),
            actions,
            policy: names.policy(&c.policy)?,
            stats: c.stats.clone(),
        });
    }
    let mut recovery = BTreeMap::new();
    for r in &doc.recovery {
        recovery.insert(names.state(r.state)?, names.action(&r.action)?);
    }
    Ok(CompletePolicy {
        fingerprint: doc.fingerprint.clone(),
        mode: doc.mode,
        params: doc.params,
        partition: StatePartition { region },
        prefix: names.policy(&doc.prefix)?,
        components,
        recovery,
        diagnostics: doc.diagnostics.clone(),
    })
}

pub fn to_json(p: &ProductAutomaton, pol: &CompletePolicy) -> String {
    let mut s = serde_json::to_string_pretty(&to_doc(p, pol)).expect("policy documents serialize");
    s.push('\n');
    s
}

pub fn from_json(text: &str, p: &ProductAutomaton) -> Result<CompletePolicy, SynthError> {
    let doc: PolicyDoc = serde_json::from_str(text).map_err(|e| SynthError::Doc(e.to_string()))?;
    from_doc(&doc, p)
}
