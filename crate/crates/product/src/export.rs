use std::fmt::Write as _;

use crate::{ProductAutomaton, Region, StatePartition};

fn color(r: Region) -> &'static str {
    match r {
        Region::Unreachable => "orange",
        Region::Goal => "blue",
        Region::Bad => "black",
        Region::Normal => "green",
    }
}

/// Graphviz rendering. Nodes are colored by region when a partition is
/// given; `H`/`I` membership per pair is listed in the node label.
pub fn to_dot(p: &ProductAutomaton, partition: Option<&StatePartition>) -> String {
    let mut out = String::from("digraph product {\n  node [shape=ellipse];\n");
    for s in 0..p.num_states() {
        let mut tags = Vec::new();
        for k in 0..p.pairs.len() {
            if p.in_h(k, s) {
                tags.push(format!("H{k}"));
            }
            if p.in_i(k, s) {
                tags.push(format!("I{k}"));
            }
        }
        let label = if tags.is_empty() {
            p.state_name(s)
        } else {
            format!("{} [{}]", p.state_name(s), tags.join(" "))
        };
        let _ = write!(out, "  s{s} [label=\"{label}\"");
        if let Some(part) = partition {
            let _ = write!(out, " color={}", color(part.of(s)));
        }
        if s == p.initial {
            out.push_str(" peripheries=2");
        }
        out.push_str("];\n");
    }
    for (s, row) in p.rows.iter().enumerate() {
        for t in row {
            for &(n, pr) in &t.successors {
                let _ = writeln!(
                    out,
                    "  s{s} -> s{n} [label=\"{}:{pr}\"];",
                    p.actions[t.action]
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

/// The product as a PRISM MDP with a `cost` reward structure and one label
/// per Rabin set.
pub fn to_prism(p: &ProductAutomaton) -> String {
    let n = p.num_states();
    let mut out = String::from("mdp\n\nmodule product\n");
    let _ = writeln!(
        out,
        "  s : [0..{}] init {};",
        n.saturating_sub(1),
        p.initial
    );
    for (s, row) in p.rows.iter().enumerate() {
        for t in row {
            let rhs: Vec<String> = t
                .successors
                .iter()
                .map(|&(m, pr)| format!("{pr:?}:(s'={m})"))
                .collect();
            let _ = writeln!(
                out,
                "  [{}] s={s} -> {};",
                p.actions[t.action],
                rhs.join(" + ")
            );
        }
    }
    out.push_str("endmodule\n\nrewards \"cost\"\n");
    for (s, row) in p.rows.iter().enumerate() {
        for t in row {
            let _ = writeln!(out, "  [{}] s={s} : {:?};", p.actions[t.action], t.cost);
        }
    }
    out.push_str("endrewards\n");
    for k in 0..p.pairs.len() {
        for (name, set) in [("h", &p.pairs[k].h), ("i", &p.pairs[k].i)] {
            let members: Vec<String> = (0..n)
                .filter(|&s| set[s])
                .map(|s| format!("s={s}"))
                .collect();
            let expr = if members.is_empty() {
                "false".to_string()
            } else {
                members.join(" | ")
            };
            let _ = writeln!(out, "label \"{name}{k}\" = {expr};");
        }
    }
    out
}
