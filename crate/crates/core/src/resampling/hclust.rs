//! Agglomerative hierarchical clustering by the nearest-neighbour-chain
//! algorithm (O(n²) time and memory) with Lance–Williams updates.

use serde::{Deserialize, Serialize};

use crate::geometry::{squared_distance, Embedding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    /// Minimum increase of within-cluster variance (Ward on Euclidean distances).
    #[default]
    Ward,
    Complete,
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ward" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!(
                "unknown linkage '{other}' (expected ward, complete or average)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// A point belonging to each of the two merged clusters.
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Merge history of `n` points, sorted by height.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Cluster labels after stopping with `q` clusters. Labels are numbered
    /// by the smallest point index in each cluster.
    pub fn cut(&self, q: usize) -> Vec<usize> {
        assert!(
            q >= 1 && q <= self.n,
            "cut into {q} clusters of {} points",
            self.n
        );
        let mut uf = UnionFind::new(self.n);
        for m in &self.merges[..self.n - q] {
            uf.union(m.a, m.b);
        }
        let mut label_of_root = vec![usize::MAX; self.n];
        let mut next = 0;
        (0..self.n)
            .map(|i| {
                let r = uf.find(i);
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }
}

pub fn agglomerate(points: &Embedding, linkage: Linkage) -> Dendrogram {
    let n = points.len();
    if n <= 1 {
        return Dendrogram {
            n,
            merges: Vec::new(),
        };
    }
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let sq = squared_distance(points.row(i), points.row(j));
            let v = match linkage {
                Linkage::Ward => sq,
                Linkage::Complete | Linkage::Average => sq.sqrt(),
            };
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut n_active = n;
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut merges = Vec::with_capacity(n - 1);

    while n_active > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        let (a, b) = loop {
            let a = *chain.last().unwrap();
            let prev = (chain.len() >= 2).then(|| chain[chain.len() - 2]);
            let mut best = prev.unwrap_or(usize::MAX);
            let mut best_d = prev.map_or(f64::INFINITY, |p| d[a * n + p]);
            for c in 0..n {
                if !active[c] || c == a {
                    continue;
                }
                let dc = d[a * n + c];
                if dc < best_d {
                    best_d = dc;
                    best = c;
                }
            }
            if Some(best) == prev {
                chain.pop();
                chain.pop();
                break (a, best);
            }
            chain.push(best);
        };

        let (keep, gone) = (a.min(b), a.max(b));
        let dab = d[a * n + b];
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for c in 0..n {
            if !active[c] || c == a || c == b {
                continue;
            }
            let (dac, dbc) = (d[a * n + c], d[b * n + c]);
            let nc = size[c] as f64;
            let v = match linkage {
                Linkage::Ward => ((na + nc) * dac + (nb + nc) * dbc - nc * dab) / (na + nb + nc),
                Linkage::Complete => dac.max(dbc),
                Linkage::Average => (na * dac + nb * dbc) / (na + nb),
            };
            d[keep * n + c] = v;
            d[c * n + keep] = v;
        }
        active[gone] = false;
        size[keep] += size[gone];
        n_active -= 1;
        let height = match linkage {
            Linkage::Ward => dab.max(0.0).sqrt(),
            _ => dab,
        };
        merges.push(Merge { a, b, height });
    }
    // Stable: merges at equal height keep chain order, so every merge still
    // follows the merges that formed its clusters.
    merges.sort_by(|x, y| x.height.total_cmp(&y.height));
    Dendrogram { n, merges }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
