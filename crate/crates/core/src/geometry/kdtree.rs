//! Exact k-d tree over an [`Embedding`].
//!
//! Results are identical to exhaustive search: distances are compared as
//! squared sums accumulated in coordinate order, subtrees are pruned only when
//! the splitting-plane bound strictly exceeds the current best, and ties are
//! resolved towards the lowest point index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::metric::{squared_distance, Embedding};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Embedding,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: Embedding) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            build(&points, &mut order, 0, &mut nodes);
        }
        KdTree {
            points,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &Embedding {
        &self.points
    }

    /// Nearest point to `query`, optionally skipping one index.
    /// Returns `(index, squared distance)`.
    pub fn nearest(&self, query: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        let mut best = Best {
            index: usize::MAX,
            sq: f64::INFINITY,
        };
        if !self.nodes.is_empty() {
            self.search(0, query, exclude, &mut best);
        }
        (best.index != usize::MAX).then_some((best.index, best.sq))
    }

    fn search(&self, node: usize, query: &[f64], exclude: Option<usize>, best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let sq = squared_distance(query, self.points.row(i));
                    if sq < best.sq || (sq == best.sq && i < best.index) {
                        best.sq = sq;
                        best.index = i;
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, exclude, best);
                if diff * diff <= best.sq {
                    self.search(far, query, exclude, best);
                }
            }
        }
    }

    /// The `k` nearest points ordered by (squared distance, index).
    pub fn k_nearest(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search_k(0, query, k, &mut heap);
        let mut out: Vec<(usize, f64)> = heap.into_iter().map(|c| (c.index, c.sq)).collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn search_k(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        sq: squared_distance(query, self.points.row(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search_k(near, query, k, heap);
                let bound = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().unwrap().sq
                };
                if diff * diff <= bound {
                    self.search_k(far, query, k, heap);
                }
            }
        }
    }
}

struct Best {
    index: usize,
    sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq
            .total_cmp(&other.sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn build(points: &Embedding, order: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len(),
        });
        return id;
    }
    let dim = widest_dimension(points, order);
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points.row(a)[dim]
            .total_cmp(&points.row(b)[dim])
            .then(a.cmp(&b))
    });
    let value = points.row(order[mid])[dim];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build(points, lo, offset, nodes);
    let right = build(points, hi, offset + mid, nodes);
    nodes[id] = Node::Split {
        dim,
        value,
        left,
        right,
    };
    id
}

fn widest_dimension(points: &Embedding, order: &[usize]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for d in 0..points.dim() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in order {
            let v = points.row(i)[d];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > best.1 {
            best = (d, hi - lo);
        }
    }
    best.0
}
