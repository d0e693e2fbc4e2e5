#![allow(dead_code)]

use hopls::{DenseTensor, Matrix};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    let n: usize = dims.iter().product();
    let data = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    DenseTensor::from_vec(dims, data).unwrap()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Column-orthonormal `rows × cols` by Gram–Schmidt on a Gaussian draw.
pub fn orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let mut q = gaussian_matrix(rng, rows, cols);
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(j).dot(&q.column(k));
                let ck = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &ck);
            }
        }
        let nrm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / nrm);
    }
    q
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

pub fn frob(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖AᵀA − I‖_max`.
pub fn orthonormality_error(a: &Matrix) -> f64 {
    let g = a.t().dot(a);
    let mut worst: f64 = 0.0;
    for ((i, j), v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}

/// Loop oracle for `t ×_mode a`.
pub fn naive_mode_product(t: &DenseTensor, a: &Matrix, mode: usize) -> DenseTensor {
    let mut dims = t.dims().to_vec();
    dims[mode] = a.nrows();
    DenseTensor::from_fn(&dims, |ix| {
        let mut src = ix.to_vec();
        (0..a.ncols())
            .map(|k| {
                src[mode] = k;
                a[[ix[mode], k]] * t.get(&src)
            })
            .sum()
    })
    .unwrap()
}

/// Loop oracle for the mode-`mode` unfolding, first remaining mode fastest.
pub fn naive_matricize(t: &DenseTensor, mode: usize) -> Matrix {
    let dims = t.dims();
    let cols: usize = dims.iter().enumerate().filter(|&(k, _)| k != mode).map(|(_, d)| d).product();
    let mut out = Array2::zeros((dims[mode], cols));
    let mut ix = vec![0usize; dims.len()];
    for _ in 0..t.numel() {
        let mut col = 0;
        let mut stride = 1;
        for k in 0..dims.len() {
            if k != mode {
                col += ix[k] * stride;
                stride *= dims[k];
            }
        }
        out[[ix[mode], col]] = t.get(&ix);
        for k in (0..dims.len()).rev() {
            ix[k] += 1;
            if ix[k] < dims[k] {
                break;
            }
            ix[k] = 0;
        }
    }
    out
}

/// Loop oracle for the contraction over the shared first mode.
pub fn naive_cross_cov(x: &DenseTensor, y: &DenseTensor) -> DenseTensor {
    let xo = x.order() - 1;
    let mut dims: Vec<usize> = x.dims()[1..].to_vec();
    dims.extend_from_slice(&y.dims()[1..]);
    DenseTensor::from_fn(&dims, |ix| {
        (0..x.dims()[0])
            .map(|s| {
                let mut xi = vec![s];
                xi.extend_from_slice(&ix[..xo]);
                let mut yi = vec![s];
                yi.extend_from_slice(&ix[xo..]);
                x.get(&xi) * y.get(&yi)
            })
            .sum()
    })
    .unwrap()
}

/// Loop oracle for `[[core; factors…]]`.
pub fn naive_tucker(core: &DenseTensor, factors: &[Matrix]) -> DenseTensor {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let cdims = core.dims().to_vec();
    DenseTensor::from_fn(&dims, |ix| {
        let mut total = 0.0;
        let mut c = vec![0usize; cdims.len()];
        loop {
            let mut term = core.get(&c);
            for (k, f) in factors.iter().enumerate() {
                term *= f[[ix[k], c[k]]];
            }
            total += term;
            let mut k = cdims.len();
            loop {
                if k == 0 {
                    return total;
                }
                k -= 1;
                c[k] += 1;
                if c[k] < cdims[k] {
                    break;
                }
                c[k] = 0;
            }
        }
    })
    .unwrap()
}
