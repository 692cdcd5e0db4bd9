use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// What counts toward a node's attachment degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeRule {
    /// Edges touching the node, direction ignored (the bidirectional seed edge
    /// counts once for each endpoint).
    #[default]
    Incident,
    /// Directed edges leaving the node.
    OutEdges,
}

/// Grows a directed scale-free network on `q` nodes by preferential
/// attachment; see [`gen_scale_free_adjacency_with`].
pub fn gen_scale_free_adjacency<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    gen_scale_free_adjacency_with(q, DegreeRule::Incident, rng)
}

/// Two random nodes start the network joined in both directions. Each
/// remaining node, taken in random order, links to an existing node `m`
/// chosen with probability `d_m / Σ d`, the edge direction decided by a fair
/// coin. `A[i][j] = 1` encodes an edge `i → j`; the result has exactly `q`
/// nonzeros.
pub fn gen_scale_free_adjacency_with<R: Rng + ?Sized>(
    q: usize,
    rule: DegreeRule,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if q < 2 {
        return Err(Error::Configuration("network needs q >= 2 nodes".into()));
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.shuffle(rng);
    let mut a = DMatrix::zeros(q, q);
    let mut degree = vec![0usize; q];
    let (s, t) = (order[0], order[1]);
    a[(s, t)] = 1.0;
    a[(t, s)] = 1.0;
    degree[s] = 1;
    degree[t] = 1;
    let mut present = vec![s, t];
    for &node in &order[2..] {
        let total: usize = present.iter().map(|&m| degree[m]).sum();
        let mut ticket = rng.random_range(0..total);
        let target = *present
            .iter()
            .find(|&&m| {
                if ticket < degree[m] {
                    true
                } else {
                    ticket -= degree[m];
                    false
                }
            })
            .expect("ticket within total degree");
        let outward = rng.random_bool(0.5);
        if outward {
            a[(node, target)] = 1.0;
        } else {
            a[(target, node)] = 1.0;
        }
        match rule {
            DegreeRule::Incident => {
                degree[node] += 1;
                degree[target] += 1;
            }
            DegreeRule::OutEdges => {
                if outward {
                    degree[node] += 1;
                } else {
                    degree[target] += 1;
                }
            }
        }
        present.push(node);
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::replication_rng;

    #[test]
    fn two_nodes_give_symmetric_pair() {
        let a = gen_scale_free_adjacency(2, &mut replication_rng(0, 0)).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn edge_count_and_no_self_loops() {
        for rule in [DegreeRule::Incident, DegreeRule::OutEdges] {
            for r in 0..50 {
                let a = gen_scale_free_adjacency_with(12, rule, &mut replication_rng(5, r)).unwrap();
                assert_eq!(a.iter().filter(|v| **v != 0.0).count(), 12);
                assert!((0..12).all(|i| a[(i, i)] == 0.0));
            }
        }
    }
}
