//! Layer/resource factor graph derived from the mapping matrices.

use thiserror::Error;

use crate::codebook::MappingMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("no layers")]
    Empty,
    #[error("layer {layer} maps onto {got} resources, expected {expected}")]
    ResourceCount { layer: usize, got: usize, expected: usize },
    #[error("layer {layer} uses {p} dimensions, expected {expected}")]
    Dimension { layer: usize, p: usize, expected: usize },
    #[error("irregular graph: resource {resource} carries {got} layers, expected {expected}")]
    Irregular {
        resource: usize,
        got: usize,
        expected: usize,
    },
}

/// Regular bipartite graph between `K` layers and `N` resources.
///
/// `xi[n]` lists the layers colliding on resource `n` in ascending order and
/// `zeta[k]` the resources of layer `k` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    n: usize,
    k: usize,
    p: usize,
    dc: usize,
    f: Vec<u8>,
    xi: Vec<Vec<usize>>,
    zeta: Vec<Vec<usize>>,
}

impl FactorGraph {
    pub fn from_mappings(mappings: &[MappingMatrix]) -> Result<Self, GraphError> {
        let first = mappings.first().ok_or(GraphError::Empty)?;
        let (n, p) = (first.n(), first.p());
        let k = mappings.len();
        let mut f = vec![0u8; n * k];
        for (layer, v) in mappings.iter().enumerate() {
            if v.n() != n {
                return Err(GraphError::ResourceCount {
                    layer,
                    got: v.n(),
                    expected: n,
                });
            }
            if v.p() != p {
                return Err(GraphError::Dimension {
                    layer,
                    p: v.p(),
                    expected: p,
                });
            }
            for (row, bit) in v.indicator().into_iter().enumerate() {
                f[row * k + layer] = bit;
            }
        }
        FactorGraph::from_indicator(n, k, f)
    }

    /// Builds the graph from a row-major `N×K` indicator matrix.
    pub fn from_indicator(n: usize, k: usize, f: Vec<u8>) -> Result<Self, GraphError> {
        if n == 0 || k == 0 || f.len() != n * k {
            return Err(GraphError::Empty);
        }
        let xi: Vec<Vec<usize>> = (0..n)
            .map(|r| (0..k).filter(|&c| f[r * k + c] != 0).collect())
            .collect();
        let zeta: Vec<Vec<usize>> = (0..k)
            .map(|c| (0..n).filter(|&r| f[r * k + c] != 0).collect())
            .collect();
        let p = zeta[0].len();
        if let Some((layer, z)) = zeta.iter().enumerate().find(|(_, z)| z.len() != p) {
            return Err(GraphError::Dimension {
                layer,
                p: z.len(),
                expected: p,
            });
        }
        let dc = xi[0].len();
        if let Some((resource, x)) = xi.iter().enumerate().find(|(_, x)| x.len() != dc) {
            return Err(GraphError::Irregular {
                resource,
                got: x.len(),
                expected: dc,
            });
        }
        Ok(FactorGraph {
            n,
            k,
            p,
            dc,
            f,
            xi,
            zeta,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Layers colliding on each resource.
    pub fn dc(&self) -> usize {
        self.dc
    }

    /// Overloading factor `K/N` as a reduced fraction.
    pub fn overload(&self) -> (usize, usize) {
        let g = gcd(self.k, self.n);
        (self.k / g, self.n / g)
    }

    pub fn f(&self, n: usize, k: usize) -> u8 {
        self.f[n * self.k + k]
    }

    pub fn indicator(&self) -> &[u8] {
        &self.f
    }

    pub fn xi(&self, n: usize) -> &[usize] {
        &self.xi[n]
    }

    pub fn zeta(&self, k: usize) -> &[usize] {
        &self.zeta[k]
    }

    /// Position of layer `k` in `xi(n)`.
    pub fn slot(&self, n: usize, k: usize) -> Option<usize> {
        self.xi[n].iter().position(|&u| u == k)
    }

    /// Flat edge index of `(n, slot)`; edges are numbered resource by resource.
    pub fn edge(&self, n: usize, slot: usize) -> usize {
        n * self.dc + slot
    }

    pub fn num_edges(&self) -> usize {
        self.n * self.dc
    }

    /// Rebuilds the per-layer mapping matrices from the indicator columns.
    pub fn mappings(&self) -> Vec<MappingMatrix> {
        self.zeta
            .iter()
            .map(|z| MappingMatrix::new(self.n, z.clone()).expect("sorted resource list"))
            .collect()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
