//! Dense Edmonds-Karp max-flow, generic over the scalar so exact capacities
//! yield exact flows.

use std::collections::VecDeque;

use crate::scalar::{Scalar, Tol};

#[derive(Clone, Debug)]
pub struct FlowNetwork<S> {
    cap: Vec<Vec<S>>,
    flow: Vec<Vec<S>>,
}

impl<S: Scalar> FlowNetwork<S> {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            cap: vec![vec![S::zero(); nodes]; nodes],
            flow: vec![vec![S::zero(); nodes]; nodes],
        }
    }

    pub fn add_capacity(&mut self, from: usize, to: usize, cap: S) {
        self.cap[from][to] += cap;
    }

    /// Net flow on `from -> to`.
    pub fn flow(&self, from: usize, to: usize) -> &S {
        &self.flow[from][to]
    }

    fn residual(&self, u: usize, v: usize) -> S {
        self.cap[u][v].clone() - self.flow[u][v].clone() + self.flow[v][u].clone()
    }

    /// Augments along shortest residual paths until none is left. Residual
    /// capacities within `tol` of zero (relative to `scale`) count as zero in
    /// float mode.
    pub fn max_flow(&mut self, source: usize, sink: usize, tol: Tol, scale: &S) -> S {
        let nodes = self.cap.len();
        let mut total = S::zero();
        loop {
            let mut parent = vec![usize::MAX; nodes];
            parent[source] = source;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for v in 0..nodes {
                    if parent[v] == usize::MAX {
                        let r = self.residual(u, v);
                        if r.is_positive() && !tol.negligible(&r, scale) {
                            parent[v] = u;
                            queue.push_back(v);
                        }
                    }
                }
            }
            if parent[sink] == usize::MAX {
                return total;
            }
            let mut bottleneck: Option<S> = None;
            let mut v = sink;
            while v != source {
                let u = parent[v];
                let r = self.residual(u, v);
                bottleneck = Some(match bottleneck {
                    None => r,
                    Some(b) => S::min_of(b, r),
                });
                v = u;
            }
            let push = bottleneck.expect("path has at least one edge");
            let mut v = sink;
            while v != source {
                let u = parent[v];
                // cancel reverse flow first, then add forward flow
                let back = S::min_of(self.flow[v][u].clone(), push.clone());
                self.flow[v][u] -= back.clone();
                self.flow[u][v] += push.clone() - back;
                v = u;
            }
            total += push;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn small_network_exact() {
        // s=0, a=1, b=2, t=3
        let q = |n, d| <Rational as Scalar>::from_ratio(n, d);
        let mut g = FlowNetwork::<Rational>::new(4);
        g.add_capacity(0, 1, q(1, 2));
        g.add_capacity(0, 2, q(1, 3));
        g.add_capacity(1, 2, q(1, 1));
        g.add_capacity(1, 3, q(1, 4));
        g.add_capacity(2, 3, q(1, 1));
        let f = g.max_flow(0, 3, Tol::new(0.0), &q(1, 1));
        assert_eq!(f, q(5, 6));
        assert_eq!(g.flow(0, 1), &q(1, 2));
    }

    #[test]
    fn bottleneck_float() {
        let mut g = FlowNetwork::<f64>::new(3);
        g.add_capacity(0, 1, 2.0);
        g.add_capacity(1, 2, 0.5);
        assert!((g.max_flow(0, 2, Tol::new(1e-12), &1.0) - 0.5).abs() < 1e-15);
    }
}
