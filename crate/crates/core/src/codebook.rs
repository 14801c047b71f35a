//! SCMA codebook construction.
//!
//! Every layer's non-zero codeword is a point of a rotated binary lattice:
//! `x_P = Δ_k (E_r + i E_i) R u` with `u ∈ {-1,+1}^D`, `D = log2(M)`. The
//! `P×D` complex matrix `G_k = Δ_k (E_r + i E_i) R` is kept alongside the
//! codeword table because the sphere decoder searches directly over `u`.
//!
//! Codeword index `m` carries the bits of its binary expansion (MSB first)
//! and bit `i` selects lattice coordinate `u_i = 1 - 2 b_i`. Each bit flip
//! flips exactly one lattice coordinate, so the labeling is Gray with
//! respect to the binary lattice.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

use crate::factor_graph::{FactorGraph, GraphError};
use crate::C64;

/// Tolerance used when deciding that two codeword components coincide.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodebookError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("infeasible codebook parameters: {0}")]
    Infeasible(String),
    #[error("layer {layer} does not occupy resource {resource}")]
    ResourceNotUsed { layer: usize, resource: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How the mother constellation is rotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationStyle {
    /// No rotation; every complex dimension carries independent BPSK values.
    Identity,
    /// Low number of projections: `a = -b` in 2D, `a = c, b = d = 0` in 4D.
    Lnp,
    /// A fixed rotation with full modulation diversity (all projections distinct).
    Diversity,
}

impl std::str::FromStr for RotationStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(RotationStyle::Identity),
            "lnp" => Ok(RotationStyle::Lnp),
            "diversity" | "optimal-diversity" => Ok(RotationStyle::Diversity),
            other => Err(format!("unknown rotation style `{other}`")),
        }
    }
}

// Angle used for the planar full-diversity rotation.
fn diversity_angle() -> f64 {
    0.5 * 2f64.atan()
}

/// Real orthogonal `D×D` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl RotationMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        RotationMatrix { dim, entries }
    }

    /// Builds a matrix from row-major entries, rejecting non-orthogonal input.
    pub fn from_rows(dim: usize, entries: Vec<f64>) -> Result<Self, CodebookError> {
        if entries.len() != dim * dim {
            return Err(CodebookError::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} rotation",
                entries.len()
            )));
        }
        let r = RotationMatrix { dim, entries };
        if r.orthogonality_defect() > 1e-12 {
            return Err(CodebookError::DimensionMismatch(
                "rotation matrix is not orthogonal".into(),
            ));
        }
        Ok(r)
    }

    /// `[[a, -b], [b, a]]` normalized to unit columns.
    pub fn planar(a: f64, b: f64) -> Self {
        let s = (a * a + b * b).sqrt();
        let (a, b) = (a / s, b / s);
        RotationMatrix {
            dim: 2,
            entries: vec![a, -b, b, a],
        }
    }

    /// The four-parameter family
    /// `[[a,-b,c,-d],[b,a,d,c],[-c,d,a,-b],[-d,-c,b,a]]`, normalized so that
    /// `a²+b²+c²+d² = 1`. Orthogonal only when `ad = bc`.
    pub fn quad(a: f64, b: f64, c: f64, d: f64) -> Result<Self, CodebookError> {
        let s = (a * a + b * b + c * c + d * d).sqrt();
        let (a, b, c, d) = (a / s, b / s, c / s, d / s);
        #[rustfmt::skip]
        let entries = vec![
             a, -b,  c, -d,
             b,  a,  d,  c,
            -c,  d,  a, -b,
            -d, -c,  b,  a,
        ];
        RotationMatrix::from_rows(4, entries)
    }

    pub fn build_2d(style: RotationStyle) -> Self {
        match style {
            RotationStyle::Identity => RotationMatrix::planar(1.0, 0.0),
            RotationStyle::Lnp => RotationMatrix::planar(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            RotationStyle::Diversity => {
                let t = diversity_angle();
                RotationMatrix::planar(t.cos(), t.sin())
            }
        }
    }

    pub fn build_4d(style: RotationStyle) -> Self {
        // (a, b, c, d) = (cos α cos β, sin α cos β, cos α sin β, sin α sin β)
        // keeps ad = bc for every (α, β).
        let (alpha, beta) = match style {
            RotationStyle::Identity => (0.0, 0.0),
            RotationStyle::Lnp => (0.0, PI / 4.0),
            RotationStyle::Diversity => (diversity_angle(), PI / 8.0),
        };
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        RotationMatrix::quad(ca * cb, sa * cb, ca * sb, sa * sb).expect("angle parameterization is orthogonal")
    }

    /// Rotation for a `dim`-dimensional binary lattice.
    pub fn for_dimension(dim: usize, style: RotationStyle) -> Result<Self, CodebookError> {
        match dim {
            1 => Ok(RotationMatrix::identity(1)),
            2 => Ok(RotationMatrix::build_2d(style)),
            4 => Ok(RotationMatrix::build_4d(style)),
            _ => Err(CodebookError::Infeasible(format!(
                "no rotation defined for lattice dimension {dim}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    /// Largest entry of `R Rᵀ - I` in absolute value.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|l| self.get(i, l) * self.get(j, l)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * u[j]).sum())
            .collect()
    }
}

/// The pair of `P×D` binary matrices selecting which rotated lattice
/// coordinate feeds the real or imaginary part of each complex dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionPair {
    p: usize,
    d: usize,
    e_real: Vec<u8>,
    e_imag: Vec<u8>,
}

impl SelectionPair {
    /// QAM-style selection.
    ///
    /// With `D = 2P` dimension `q` takes `(v_{2q}, v_{2q+1})` as its real and
    /// imaginary parts. With `D = P` dimension `q` takes `v_q` on its real axis.
    pub fn standard(p: usize, d: usize) -> Result<Self, CodebookError> {
        let mut e_real = vec![0u8; p * d];
        let mut e_imag = vec![0u8; p * d];
        if d == 2 * p {
            for q in 0..p {
                e_real[q * d + 2 * q] = 1;
                e_imag[q * d + 2 * q + 1] = 1;
            }
        } else if d == p {
            for q in 0..p {
                e_real[q * d + q] = 1;
            }
        } else {
            return Err(CodebookError::DimensionMismatch(format!(
                "cannot spread a {d}-dimensional lattice over {p} complex dimensions"
            )));
        }
        Ok(SelectionPair { p, d, e_real, e_imag })
    }

    pub fn from_matrices(p: usize, d: usize, e_real: Vec<u8>, e_imag: Vec<u8>) -> Result<Self, CodebookError> {
        if e_real.len() != p * d || e_imag.len() != p * d {
            return Err(CodebookError::DimensionMismatch("selection size".into()));
        }
        let sel = SelectionPair { p, d, e_real, e_imag };
        for j in 0..d {
            let ones: u32 = (0..p)
                .map(|q| u32::from(sel.e_real[q * d + j]) + u32::from(sel.e_imag[q * d + j]))
                .sum();
            if ones != 1 {
                return Err(CodebookError::DimensionMismatch(format!(
                    "lattice coordinate {j} selected {ones} times"
                )));
            }
        }
        Ok(sel)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Complex `P×D` matrix `E_r + i E_i`, row-major.
    pub fn complex_matrix(&self) -> Vec<C64> {
        self.e_real
            .iter()
            .zip(&self.e_imag)
            .map(|(&r, &i)| C64::new(f64::from(r), f64::from(i)))
            .collect()
    }
}

/// Per-layer phase rotation, dimension permutation and conjugation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationOperator {
    pub phase: f64,
    pub permutation: Vec<usize>,
    pub conjugate: Vec<bool>,
}

impl ConstellationOperator {
    pub fn identity(p: usize) -> Self {
        ConstellationOperator {
            phase: 0.0,
            permutation: (0..p).collect(),
            conjugate: vec![false; p],
        }
    }

    /// Operator of zero-based layer `k`: phase `k·2π/(M·d_c)`, no permutation
    /// or conjugation.
    pub fn for_layer(k: usize, m_points: usize, dc: usize, p: usize) -> Self {
        ConstellationOperator {
            phase: k as f64 * 2.0 * PI / (m_points * dc) as f64,
            ..ConstellationOperator::identity(p)
        }
    }

    fn validate(&self, p: usize) -> Result<(), CodebookError> {
        let mut seen = vec![false; p];
        if self.permutation.len() != p || self.conjugate.len() != p {
            return Err(CodebookError::DimensionMismatch("operator size".into()));
        }
        for &i in &self.permutation {
            if i >= p || std::mem::replace(&mut seen[i], true) {
                return Err(CodebookError::DimensionMismatch(
                    "permutation is not a bijection".into(),
                ));
            }
        }
        Ok(())
    }

    /// Applies the operator to one `P`-dimensional point.
    pub fn apply_point(&self, point: &[C64]) -> Vec<C64> {
        let rot = C64::from_polar(1.0, self.phase);
        self.permutation
            .iter()
            .zip(&self.conjugate)
            .map(|(&src, &conj)| {
                let v = point[src];
                rot * if conj { v.conj() } else { v }
            })
            .collect()
    }

    /// Applies the operator to the rows of a `P×D` generator. Valid because
    /// conjugation commutes with multiplication by a real lattice vector.
    fn apply_generator(&self, g: &[C64], d: usize) -> Vec<C64> {
        let rot = C64::from_polar(1.0, self.phase);
        let mut out = Vec::with_capacity(g.len());
        for (&src, &conj) in self.permutation.iter().zip(&self.conjugate) {
            for &v in &g[src * d..(src + 1) * d] {
                out.push(rot * if conj { v.conj() } else { v });
            }
        }
        out
    }
}

/// Applies `op` to every point of a constellation.
pub fn apply_operator(points: &[Vec<C64>], op: &ConstellationOperator) -> Vec<Vec<C64>> {
    points.iter().map(|x| op.apply_point(x)).collect()
}

/// `N×P` binary matrix with a single one per column, stored as the occupied
/// row of each column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappingMatrix {
    n: usize,
    rows: Vec<usize>,
}

impl MappingMatrix {
    pub fn new(n: usize, rows: Vec<usize>) -> Result<Self, CodebookError> {
        if rows.windows(2).any(|w| w[0] >= w[1]) || rows.iter().any(|&r| r >= n) {
            return Err(CodebookError::DimensionMismatch(format!(
                "mapping rows {rows:?} are not increasing indices below {n}"
            )));
        }
        Ok(MappingMatrix { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.rows.len()
    }

    /// Resource carrying the `q`-th non-zero dimension.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// `diag(V Vᵀ)`.
    pub fn indicator(&self) -> Vec<u8> {
        let mut f = vec![0u8; self.n];
        for &r in &self.rows {
            f[r] = 1;
        }
        f
    }

    /// Dense `N×P` matrix, row-major.
    pub fn dense(&self) -> Vec<u8> {
        let p = self.p();
        let mut v = vec![0u8; self.n * p];
        for (col, &row) in self.rows.iter().enumerate() {
            v[row * p + col] = 1;
        }
        v
    }

    /// Position of resource `n` among the occupied dimensions.
    pub fn dimension_of(&self, n: usize) -> Option<usize> {
        self.rows.iter().position(|&r| r == n)
    }
}

/// Bits of codeword index `m`, most significant first.
pub fn bits_of(m: usize, d: usize) -> impl Iterator<Item = u8> {
    (0..d).map(move |i| ((m >> (d - 1 - i)) & 1) as u8)
}

/// Lattice point `u ∈ {-1,+1}^D` labeled by codeword index `m`.
pub fn lattice_point(m: usize, d: usize) -> Vec<i8> {
    bits_of(m, d).map(|b| 1 - 2 * b as i8).collect()
}

/// Inverse of [`lattice_point`].
pub fn symbol_index(u: &[i8]) -> usize {
    u.iter().fold(0, |acc, &ui| (acc << 1) | usize::from(ui < 0))
}

/// Builds `x_P = (E_r + i E_i) R u` for every binary `u`, scaled to unit
/// average energy.
pub fn build_mother_constellation(
    m_points: usize,
    p: usize,
    rot: &RotationMatrix,
    sel: &SelectionPair,
) -> Result<Vec<Vec<C64>>, CodebookError> {
    let g = mother_generator(m_points, p, rot, sel)?;
    let d = rot.dim();
    Ok((0..m_points)
        .map(|m| generate(&g, p, d, &lattice_point(m, d)))
        .collect())
}

fn lattice_dimension(m_points: usize) -> Result<usize, CodebookError> {
    if m_points < 2 || !m_points.is_power_of_two() {
        return Err(CodebookError::Infeasible(format!(
            "codebook size {m_points} is not a power of two"
        )));
    }
    Ok(m_points.trailing_zeros() as usize)
}

/// Unit-energy mother generator `(E_r + i E_i) R / ‖(E_r + i E_i) R‖_F`.
fn mother_generator(
    m_points: usize,
    p: usize,
    rot: &RotationMatrix,
    sel: &SelectionPair,
) -> Result<Vec<C64>, CodebookError> {
    let d = lattice_dimension(m_points)?;
    if rot.dim() != d || sel.d() != d || sel.p() != p {
        return Err(CodebookError::DimensionMismatch(format!(
            "M={m_points} needs D={d}, got rotation {} and selection {}x{} for P={p}",
            rot.dim(),
            sel.p(),
            sel.d()
        )));
    }
    let e = sel.complex_matrix();
    let mut g = vec![C64::new(0.0, 0.0); p * d];
    for q in 0..p {
        for j in 0..d {
            g[q * d + j] = (0..d).map(|l| e[q * d + l] * rot.get(l, j)).sum();
        }
    }
    // E|G u|² = ‖G‖_F² for uniform binary u.
    let energy: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    let scale = energy.sqrt().recip();
    g.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

fn generate(g: &[C64], rows: usize, d: usize, u: &[i8]) -> Vec<C64> {
    (0..rows)
        .map(|q| (0..d).map(|j| g[q * d + j] * f64::from(u[j])).sum())
        .collect()
}

/// Parameters of the built-in codebook construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookParams {
    pub k: usize,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub style: RotationStyle,
}

/// One SCMA layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    mapping: MappingMatrix,
    generator: Option<Vec<C64>>,
    codewords: Vec<Vec<C64>>,
}

impl Layer {
    pub fn mapping(&self) -> &MappingMatrix {
        &self.mapping
    }

    /// `P×D` lattice generator `G_k`, row-major, when the layer is a lattice code.
    pub fn generator(&self) -> Option<&[C64]> {
        self.generator.as_deref()
    }

    /// `M` codewords of length `N`.
    pub fn codewords(&self) -> &[Vec<C64>] {
        &self.codewords
    }

    pub fn codeword(&self, m: usize) -> &[C64] {
        &self.codewords[m]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    n: usize,
    p: usize,
    m: usize,
    d: usize,
    layers: Vec<Layer>,
}

impl Codebook {
    /// Builds the codebook with the default mapping assignment for `(N, P, K)`.
    pub fn build(params: CodebookParams) -> Result<Self, CodebookError> {
        let CodebookParams { k, n, p, m, .. } = params;
        if p == 0 || p > n {
            return Err(CodebookError::Infeasible(format!("P={p} with N={n}")));
        }
        if k == 0 || k > binomial(n, p) {
            return Err(CodebookError::Infeasible(format!(
                "K={k} exceeds C({n},{p}) = {}",
                binomial(n, p)
            )));
        }
        if (k * p) % n != 0 {
            return Err(CodebookError::Infeasible(format!(
                "d_c = K·P/N = {k}·{p}/{n} is not an integer"
            )));
        }
        let mappings = default_mappings(n, p, k)?;
        Codebook::with_mappings(&mappings, m, params.style)
    }

    /// Builds a codebook for an explicit `N×K` indicator matrix (row-major).
    pub fn with_indicator(
        n: usize,
        k: usize,
        indicator: &[u8],
        m: usize,
        style: RotationStyle,
    ) -> Result<Self, CodebookError> {
        if indicator.len() != n * k {
            return Err(CodebookError::DimensionMismatch("indicator size".into()));
        }
        let mappings = (0..k)
            .map(|col| {
                let rows = (0..n).filter(|&r| indicator[r * k + col] != 0).collect();
                MappingMatrix::new(n, rows)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Codebook::with_mappings(&mappings, m, style)
    }

    pub fn with_mappings(mappings: &[MappingMatrix], m: usize, style: RotationStyle) -> Result<Self, CodebookError> {
        let graph = FactorGraph::from_mappings(mappings)?;
        let (n, p) = (graph.n(), graph.p());
        let d = lattice_dimension(m)?;
        let rot = RotationMatrix::for_dimension(d, style)?;
        let sel = SelectionPair::standard(p, d)?;
        let mother = mother_generator(m, p, &rot, &sel)?;
        let layers = mappings
            .iter()
            .enumerate()
            .map(|(k, mapping)| {
                let op = ConstellationOperator::for_layer(k, m, graph.dc(), p);
                op.validate(p)?;
                let g = op.apply_generator(&mother, d);
                Ok(lattice_layer(mapping.clone(), g, m, d))
            })
            .collect::<Result<Vec<_>, CodebookError>>()?;
        Ok(Codebook {
            k: mappings.len(),
            n,
            p,
            m,
            d,
            layers,
        })
    }

    /// Builds a codebook from explicit codeword tables (`codewords[k][m][n]`).
    ///
    /// The mapping of each layer is the set of resources with a non-zero
    /// component in some codeword. A lattice generator is recovered when the
    /// table is exactly `V G u(m)` for the binary labeling; otherwise the
    /// layer carries no generator and only full-enumeration detectors apply.
    pub fn from_codewords(n: usize, p: usize, codewords: Vec<Vec<Vec<C64>>>) -> Result<Self, CodebookError> {
        let k = codewords.len();
        let m = codewords.first().map_or(0, Vec::len);
        let d = lattice_dimension(m)?;
        let mut layers = Vec::with_capacity(k);
        for (layer, table) in codewords.into_iter().enumerate() {
            if table.len() != m || table.iter().any(|x| x.len() != n) {
                return Err(CodebookError::DimensionMismatch(format!(
                    "layer {layer} table is not {m}x{n}"
                )));
            }
            let rows: Vec<usize> = (0..n)
                .filter(|&r| table.iter().any(|x| x[r] != C64::new(0.0, 0.0)))
                .collect();
            if rows.len() != p {
                return Err(CodebookError::DimensionMismatch(format!(
                    "layer {layer} occupies {} resources, expected {p}",
                    rows.len()
                )));
            }
            let mapping = MappingMatrix::new(n, rows)?;
            let generator = recover_generator(&mapping, &table, d);
            layers.push(Layer {
                mapping,
                generator,
                codewords: table,
            });
        }
        // Validates regularity.
        FactorGraph::from_mappings(&layers.iter().map(|l| l.mapping.clone()).collect::<Vec<_>>())?;
        Ok(Codebook { k, n, p, m, d, layers })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Codebook size `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Bits per codeword, `log2(M)`; also the real lattice dimension.
    pub fn bits_per_symbol(&self) -> usize {
        self.d
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> &Layer {
        &self.layers[k]
    }

    pub fn mappings(&self) -> Vec<MappingMatrix> {
        self.layers.iter().map(|l| l.mapping.clone()).collect()
    }

    pub fn factor_graph(&self) -> FactorGraph {
        FactorGraph::from_mappings(&self.mappings()).expect("validated at construction")
    }

    pub fn is_lattice(&self) -> bool {
        self.layers.iter().all(|l| l.generator.is_some())
    }

    /// Row `n` of `V_k G_k`: the weights of the `D` lattice coordinates of
    /// layer `k` on resource `n`. Zero when the layer does not use `n`.
    pub fn generator_row(&self, k: usize, n: usize) -> Option<Vec<C64>> {
        let layer = &self.layers[k];
        let g = layer.generator.as_ref()?;
        let d = self.d;
        Some(match layer.mapping.dimension_of(n) {
            Some(q) => g[q * d..(q + 1) * d].to_vec(),
            None => vec![C64::new(0.0, 0.0); d],
        })
    }

    /// Partition of the codeword indices of layer `k` by their component on
    /// resource `n`: indices whose components lie within `tol` share a group.
    /// Groups are ordered by their smallest member, which is listed first.
    pub fn projection_groups(&self, k: usize, n: usize, tol: f64) -> Result<Vec<Vec<usize>>, CodebookError> {
        let layer = &self.layers[k];
        if layer.mapping.dimension_of(n).is_none() {
            return Err(CodebookError::ResourceNotUsed { layer: k, resource: n });
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for m in 0..self.m {
            let v = layer.codewords[m][n];
            match groups.iter_mut().find(|g| (layer.codewords[g[0]][n] - v).norm() < tol) {
                Some(g) => g.push(m),
                None => groups.push(vec![m]),
            }
        }
        Ok(groups)
    }

    /// True when some occupied (layer, resource) pair has coinciding projections.
    pub fn has_repeated_projections(&self) -> bool {
        (0..self.k).any(|k| {
            self.layers[k].mapping.rows().iter().any(|&n| {
                self.projection_groups(k, n, DEFAULT_PROJECTION_TOL)
                    .is_ok_and(|g| g.len() < self.m)
            })
        })
    }

    /// Average codeword energy of layer `k`.
    pub fn average_energy(&self, k: usize) -> f64 {
        let cw = &self.layers[k].codewords;
        cw.iter()
            .map(|x| x.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / cw.len() as f64
    }
}

fn lattice_layer(mapping: MappingMatrix, g: Vec<C64>, m: usize, d: usize) -> Layer {
    let n = mapping.n();
    let codewords = (0..m)
        .map(|idx| {
            let x_p = generate(&g, mapping.p(), d, &lattice_point(idx, d));
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (q, &row) in mapping.rows().iter().enumerate() {
                x[row] = x_p[q];
            }
            x
        })
        .collect();
    Layer {
        mapping,
        generator: Some(g),
        codewords,
    }
}

// Least squares over the full binary lattice: Σ_m u(m) u(m)ᵀ = M·I, so
// G = X Uᵀ / M. Accepted only if it reproduces every codeword.
fn recover_generator(mapping: &MappingMatrix, table: &[Vec<C64>], d: usize) -> Option<Vec<C64>> {
    let m = table.len();
    let p = mapping.p();
    let mut g = vec![C64::new(0.0, 0.0); p * d];
    for (idx, x) in table.iter().enumerate() {
        let u = lattice_point(idx, d);
        for (q, &row) in mapping.rows().iter().enumerate() {
            for j in 0..d {
                g[q * d + j] += x[row] * f64::from(u[j]);
            }
        }
    }
    g.iter_mut().for_each(|v| *v /= m as f64);
    let scale = table
        .iter()
        .flat_map(|x| x.iter().map(|v| v.norm()))
        .fold(0f64, f64::max)
        .max(1.0);
    for (idx, x) in table.iter().enumerate() {
        let x_p = generate(&g, p, d, &lattice_point(idx, d));
        for (q, &row) in mapping.rows().iter().enumerate() {
            if (x_p[q] - x[row]).norm() > 1e-9 * scale {
                return None;
            }
        }
    }
    Some(g)
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

// The 200%-overloaded 6×12 assignment used in the reference setup; it is not
// the lexicographically first regular subset, so it is listed explicitly.
const RESOURCES_6_LAYERS_12: [[usize; 2]; 12] = [
    [0, 1],
    [0, 2],
    [0, 3],
    [0, 4],
    [1, 3],
    [1, 4],
    [1, 5],
    [2, 3],
    [2, 4],
    [2, 5],
    [3, 5],
    [4, 5],
];

/// Default layer-to-resource assignment.
///
/// All `C(N,P)` patterns in lexicographic order when `K = C(N,P)`; the fixed
/// 6×12 table for `(N,P,K) = (6,2,12)`; otherwise the lexicographically first
/// regular subset of `K` patterns.
pub fn default_mappings(n: usize, p: usize, k: usize) -> Result<Vec<MappingMatrix>, CodebookError> {
    if (n, p, k) == (6, 2, 12) {
        return RESOURCES_6_LAYERS_12
            .iter()
            .map(|rows| MappingMatrix::new(n, rows.to_vec()))
            .collect();
    }
    let patterns = combinations(n, p);
    if k > patterns.len() || !(k * p).is_multiple_of(n) {
        return Err(CodebookError::Infeasible(format!(
            "no regular assignment of {k} layers on {n} resources with P={p}"
        )));
    }
    let dc = k * p / n;
    let mut load = vec![0usize; n];
    let mut chosen = Vec::with_capacity(k);
    if !select_regular(&patterns, 0, k, dc, &mut load, &mut chosen) {
        return Err(CodebookError::Infeasible(format!(
            "no regular assignment of {k} layers on {n} resources with P={p}"
        )));
    }
    chosen
        .into_iter()
        .map(|i| MappingMatrix::new(n, patterns[i].clone()))
        .collect()
}

fn select_regular(
    patterns: &[Vec<usize>],
    next: usize,
    k: usize,
    dc: usize,
    load: &mut [usize],
    chosen: &mut Vec<usize>,
) -> bool {
    if chosen.len() == k {
        return load.iter().all(|&l| l == dc);
    }
    if patterns.len() - next < k - chosen.len() {
        return false;
    }
    let pat = &patterns[next];
    if pat.iter().all(|&r| load[r] < dc) {
        pat.iter().for_each(|&r| load[r] += 1);
        chosen.push(next);
        if select_regular(patterns, next + 1, k, dc, load, chosen) {
            return true;
        }
        chosen.pop();
        pat.iter().for_each(|&r| load[r] -= 1);
    }
    select_regular(patterns, next + 1, k, dc, load, chosen)
}

fn combinations(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}
