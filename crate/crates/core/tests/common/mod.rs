//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subspace_sets::embeddings::{EmbeddingFormat, EmbeddingTable};
use subspace_sets::retrieval::WordSetSpec;
use subspace_sets::{DenseVector, Subspace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; keeps the helpers free of extra distribution crates.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_row(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| gaussian(rng)).collect()
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> DenseVector {
    DenseVector::new(random_row(rng, d)).unwrap()
}

pub fn random_subspace(rng: &mut ChaCha8Rng, d: usize, r: usize) -> Subspace {
    let rows: Vec<Vec<f64>> = (0..r).map(|_| random_row(rng, d)).collect();
    Subspace::span_rows(d, &rows).unwrap()
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

/// Orthonormal rows by modified Gram-Schmidt, dropping near-dependent rows.
pub fn gram_schmidt(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-10 * scale.max(1e-300) {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Projector Q·Qᵀ built from Gram-Schmidt, independent of the SVD path.
pub fn oracle_projector(rows: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(d, d);
    for b in gram_schmidt(rows) {
        let col = DMatrix::from_column_slice(d, 1, &b);
        p += &col * col.transpose();
    }
    p
}

/// ‖P·v̂‖₂ with P the projector onto span(rows).
pub fn oracle_soft_membership(v: &[f64], rows: &[Vec<f64>]) -> f64 {
    let d = v.len();
    let p = oracle_projector(rows, d);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let vh = DMatrix::from_column_slice(d, 1, v) / n;
    (p * vh).norm()
}

pub fn projector_nalgebra(s: &Subspace) -> DMatrix<f64> {
    let p = s.projector();
    DMatrix::from_row_slice(p.rows(), p.cols(), p.as_slice())
}

/// Basis of the intersection of two subspaces, as the null space of
/// (I − P_a) + (I − P_b), via a symmetric eigendecomposition.
pub fn oracle_intersection(a: &Subspace, b: &Subspace) -> Vec<Vec<f64>> {
    let d = a.ambient_dim();
    let id = DMatrix::<f64>::identity(d, d);
    let m = (&id - projector_nalgebra(a)) + (&id - projector_nalgebra(b));
    let eig = SymmetricEigen::new(m);
    (0..d)
        .filter(|&i| eig.eigenvalues[i].abs() < 1e-8)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect()
}

/// Synthetic clustered vocabulary: `clusters` orthogonal centroids (axes)
/// in ℝ^d, `per_cluster` unit words each, perturbed by Gaussian noise of
/// scale `eps` per coordinate.
pub struct ClusterFixture {
    pub table: EmbeddingTable,
    pub sets: Vec<WordSetSpec>,
}

pub fn cluster_fixture(seed: u64, clusters: usize, per_cluster: usize, d: usize, eps: f64, span: usize) -> ClusterFixture {
    let mut rng = rng(seed);
    let mut table = EmbeddingTable::new(d, EmbeddingFormat::GloveText).unwrap();
    let mut names: Vec<Vec<String>> = vec![Vec::new(); clusters];
    // Interleave clusters so that table order carries no cluster signal.
    for i in 0..per_cluster {
        for (c, cluster_names) in names.iter_mut().enumerate() {
            let mut v: Vec<f64> = (0..d).map(|_| eps * gaussian(&mut rng)).collect();
            v[c] += 1.0;
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            let w = format!("c{c}w{i}");
            table.insert(&w, &v).unwrap();
            cluster_names.push(w);
        }
    }
    let sets = names
        .into_iter()
        .enumerate()
        .map(|(c, ws)| WordSetSpec::new(format!("cluster{c}"), ws[..span].to_vec(), ws[span..].to_vec()).unwrap())
        .collect();
    ClusterFixture { table, sets }
}
