const UNVISITED: usize = usize::MAX;

/// Strongly connected components of the digraph `adj` restricted to the
/// nodes with `keep[v]`, by an iterative Tarjan search. Each component is
/// sorted ascending; components come out in reverse topological order.
pub fn tarjan_scc_masked(adj: &[Vec<usize>], keep: &[bool]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0usize;
    // (node, position of the next edge to explore)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if !keep[root] || index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if !keep[w] {
                    continue;
                }
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

pub fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    tarjan_scc_masked(adj, &vec![true; adj.len()])
}

/// Whether a component is a genuine cycle: more than one node, or a single
/// node with a self-loop.
pub fn is_nontrivial(adj: &[Vec<usize>], comp: &[usize]) -> bool {
    comp.len() > 1 || adj[comp[0]].contains(&comp[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut c: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        c.sort();
        c
    }

    #[test]
    fn two_cycles_and_a_tail() {
        let adj = vec![vec![1], vec![0, 2], vec![3], vec![2], vec![4]];
        assert_eq!(
            sorted(tarjan_scc(&adj)),
            vec![vec![0, 1], vec![2, 3], vec![4]]
        );
    }

    #[test]
    fn dag_has_only_trivial_components() {
        let adj = vec![vec![1, 2], vec![2], vec![]];
        let comps = tarjan_scc(&adj);
        assert_eq!(comps.len(), 3);
        assert!(comps.iter().all(|c| !is_nontrivial(&adj, c)));
    }

    #[test]
    fn mask_cuts_cycles() {
        let adj = vec![vec![1], vec![2], vec![0]];
        assert_eq!(
            tarjan_scc_masked(&adj, &[true, false, true]),
            vec![vec![0], vec![2]]
        );
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000;
        let mut adj: Vec<Vec<usize>> = (0..n).map(|v| vec![v + 1]).collect();
        adj[n - 1] = vec![0];
        let comps = tarjan_scc(&adj);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), n);
    }
}
