use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::decomp::thin_svd;
use crate::tensor::{DenseTensor, Matrix, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// `X = T Pᵀ`, `Y = T Qᵀ`, folded into tensors.
    MatrixStructured,
    /// `X = G ×₀ T ×₁ P⁽¹⁾ …`, `Y = D ×₀ T ×₁ Q⁽¹⁾ …`.
    TuckerStructured,
    /// Gaussian `X`, `Y = X₍₀₎ W`.
    MatrixResponse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadingDist {
    Gaussian,
    Uniform01,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub x_dims: Vec<usize>,
    pub y_dims: Vec<usize>,
    /// Columns of `T`.
    pub latent: usize,
    pub loadings: LoadingDist,
    /// Clean-to-noise ratio in dB per tensor; `f64::INFINITY` means no noise.
    #[serde(with = "snr_repr")]
    pub snr_db: f64,
    /// Drives loadings, cores and latent vectors.
    pub seed: u64,
    /// Drives the noise only.
    pub noise_seed: u64,
    /// Trailing core sizes of the Tucker generator (`G` is `latent × …`).
    pub x_core: Vec<usize>,
    pub y_core: Vec<usize>,
}


impl SynthSpec {
    pub fn matrix_structured(x_dims: &[usize], y_dims: &[usize], snr_db: f64, seed: u64) -> Self {
        SynthSpec {
            kind: SynthKind::MatrixStructured,
            x_dims: x_dims.to_vec(),
            y_dims: y_dims.to_vec(),
            latent: 5,
            loadings: LoadingDist::Gaussian,
            snr_db,
            seed,
            noise_seed: seed,
            x_core: Vec::new(),
            y_core: Vec::new(),
        }
    }

    pub fn tucker_structured(x_dims: &[usize], y_dims: &[usize], snr_db: f64, seed: u64) -> Self {
        // same multilinear rank as the latent count in every mode
        let core = |d: &[usize]| d[1..].iter().map(|&n| n.min(5)).collect();
        SynthSpec {
            kind: SynthKind::TuckerStructured,
            x_core: core(x_dims),
            y_core: core(y_dims),
            ..Self::matrix_structured(x_dims, y_dims, snr_db, seed)
        }
    }

    pub fn matrix_response(x_dims: &[usize], y_cols: usize, seed: u64) -> Self {
        SynthSpec {
            kind: SynthKind::MatrixResponse,
            y_dims: vec![x_dims[0], y_cols],
            ..Self::matrix_structured(x_dims, &[x_dims[0], y_cols], f64::INFINITY, seed)
        }
    }

    /// Named presets: `1m`, `2m`, `3m` (matrix-structured, the last with
    /// uniform loadings), `1t`, `2t` (Tucker-structured) and `mr`.
    pub fn preset(case: &str, snr_db: f64, seed: u64) -> Result<Self, EvalError> {
        let c1 = [20, 10, 10];
        let c2 = [10, 10, 10];
        Ok(match case {
            "1m" => Self::matrix_structured(&c1, &c1, snr_db, seed),
            "2m" => Self::matrix_structured(&c2, &c2, snr_db, seed),
            "3m" => SynthSpec {
                loadings: LoadingDist::Uniform01,
                ..Self::matrix_structured(&c2, &c2, snr_db, seed)
            },
            "1t" => Self::tucker_structured(&c1, &c1, snr_db, seed),
            "2t" => Self::tucker_structured(&c2, &c2, snr_db, seed),
            "mr" => SynthSpec {
                snr_db,
                ..Self::matrix_response(&[5, 5, 5, 5], 2, seed)
            },
            other => return Err(EvalError::InvalidSpec(format!("unknown case '{other}'"))),
        })
    }

    pub fn with_noise_seed(mut self, noise_seed: u64) -> Self {
        self.noise_seed = noise_seed;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |msg: String| Err(EvalError::InvalidSpec(msg));
        Shape::new(self.x_dims.clone())?;
        Shape::new(self.y_dims.clone())?;
        if self.latent == 0 {
            return bad("latent count must be at least 1".into());
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return bad(format!("invalid SNR {}", self.snr_db));
        }
        if self.x_dims[0] != self.y_dims[0] {
            return bad(format!("sample counts differ: {} vs {}", self.x_dims[0], self.y_dims[0]));
        }
        match self.kind {
            SynthKind::MatrixStructured => {
                if self.x_dims.len() < 2 || self.y_dims.len() < 2 {
                    return bad("matrix-structured data needs at least two modes".into());
                }
            }
            SynthKind::TuckerStructured => {
                for (dims, core, name) in [(&self.x_dims, &self.x_core, "X"), (&self.y_dims, &self.y_core, "Y")] {
                    if dims.len() < 2 || core.len() != dims.len() - 1 || core.contains(&0) {
                        return bad(format!("{name} core {core:?} does not fit shape {dims:?}"));
                    }
                }
            }
            SynthKind::MatrixResponse => {
                if self.x_dims.len() < 2 || self.y_dims.len() != 2 {
                    return bad("matrix-response needs a tensor X and a matrix Y".into());
                }
            }
        }
        Ok(())
    }
}

/// One generated dataset with its noise-free parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSet {
    pub x: DenseTensor,
    pub y: DenseTensor,
    pub clean_x: DenseTensor,
    pub clean_y: DenseTensor,
}

impl SynthSet {
    /// Realized `(SNR_X, SNR_Y)` in dB; infinite when no noise was added.
    pub fn realized_snr(&self) -> (f64, f64) {
        (snr_of(&self.clean_x, &self.x), snr_of(&self.clean_y, &self.y))
    }
}

fn snr_of(clean: &DenseTensor, noisy: &DenseTensor) -> f64 {
    let noise: f64 = clean
        .data()
        .iter()
        .zip(noisy.data())
        .map(|(c, n)| (n - c) * (n - c))
        .sum();
    10.0 * (clean.fro_norm_sq() / noise).log10()
}

/// Calibration and validation sets sharing all loadings and cores; only the
/// latent vectors (or, for matrix-response, `X`) and the noise are redrawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPair {
    pub calibration: SynthSet,
    pub validation: SynthSet,
    /// Generating structure: `[P, Q]`, `[G, D]` and the Tucker loadings, or `[W]`.
    pub structure: Vec<Matrix>,
}

// independent ChaCha streams per role
const STREAM_STRUCTURE: u64 = 0;
const STREAM_LATENT_CAL: u64 = 1;
const STREAM_LATENT_VAL: u64 = 2;
const STREAM_NOISE: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

fn loading(rng: &mut ChaCha8Rng, rows: usize, cols: usize, dist: LoadingDist) -> Matrix {
    match dist {
        LoadingDist::Gaussian => gaussian(rng, rows, cols),
        LoadingDist::Uniform01 => Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>()),
    }
}

fn gaussian_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> Result<DenseTensor, EvalError> {
    let shape = Shape::new(dims.to_vec())?;
    let data = (0..shape.numel()).map(|_| rng.sample(StandardNormal)).collect();
    Ok(DenseTensor::new(shape, data)?)
}

/// Adds Gaussian noise scaled so that `10 log₁₀(‖clean‖² / ‖noise‖²) = snr_db`.
pub fn add_noise(clean: &DenseTensor, snr_db: f64, rng: &mut ChaCha8Rng) -> Result<DenseTensor, EvalError> {
    if snr_db == f64::INFINITY {
        return Ok(clean.clone());
    }
    let noise = gaussian_tensor(rng, clean.dims())?;
    let nn = noise.fro_norm();
    if nn == 0.0 || clean.fro_norm() == 0.0 {
        return Ok(clean.clone());
    }
    let xi = clean.fro_norm() / (nn * 10f64.powf(snr_db / 20.0));
    Ok(clean.add(&noise.scaled(xi))?)
}

fn noisy_set(spec: &SynthSpec, clean_x: DenseTensor, clean_y: DenseTensor, stream_base: u64) -> Result<SynthSet, EvalError> {
    let x = add_noise(&clean_x, spec.snr_db, &mut stream(spec.noise_seed, stream_base))?;
    let y = add_noise(&clean_y, spec.snr_db, &mut stream(spec.noise_seed, stream_base + 1))?;
    Ok(SynthSet { x, y, clean_x, clean_y })
}

fn pair(spec: &SynthSpec, cal: (DenseTensor, DenseTensor), val: (DenseTensor, DenseTensor), structure: Vec<Matrix>) -> Result<SynthPair, EvalError> {
    Ok(SynthPair {
        calibration: noisy_set(spec, cal.0, cal.1, STREAM_NOISE)?,
        validation: noisy_set(spec, val.0, val.1, STREAM_NOISE + 2)?,
        structure,
    })
}

fn expect_kind(spec: &SynthSpec, kind: SynthKind) -> Result<(), EvalError> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(EvalError::InvalidSpec(format!("expected {kind:?}, got {:?}", spec.kind)));
    }
    Ok(())
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &SynthSpec) -> Result<SynthPair, EvalError> {
    match spec.kind {
        SynthKind::MatrixStructured => gen_matrix_structured(spec),
        SynthKind::TuckerStructured => gen_tucker_structured(spec),
        SynthKind::MatrixResponse => gen_matrix_response(spec),
    }
}

/// Two-way latent model folded into the requested tensor shapes: the
/// generated `n × Π(trailing)` matrices become mode-0 unfoldings.
pub fn gen_matrix_structured(spec: &SynthSpec) -> Result<SynthPair, EvalError> {
    expect_kind(spec, SynthKind::MatrixStructured)?;
    let n = spec.x_dims[0];
    let px: usize = spec.x_dims[1..].iter().product();
    let py: usize = spec.y_dims[1..].iter().product();
    let mut rng = stream(spec.seed, STREAM_STRUCTURE);
    let p = loading(&mut rng, px, spec.latent, spec.loadings);
    let q = loading(&mut rng, py, spec.latent, spec.loadings);
    let xs = Shape::new(spec.x_dims.clone())?;
    let ys = Shape::new(spec.y_dims.clone())?;
    let make = |t: &Matrix| -> Result<(DenseTensor, DenseTensor), EvalError> {
        Ok((
            DenseTensor::fold(&t.dot(&p.t()), 0, &xs)?,
            DenseTensor::fold(&t.dot(&q.t()), 0, &ys)?,
        ))
    };
    let cal = make(&gaussian(&mut stream(spec.seed, STREAM_LATENT_CAL), n, spec.latent))?;
    let val = make(&gaussian(&mut stream(spec.seed, STREAM_LATENT_VAL), n, spec.latent))?;
    pair(spec, cal, val, vec![p.clone(), q.clone()])
}

/// Tucker model with shared latent matrix `T` on mode 0.
pub fn gen_tucker_structured(spec: &SynthSpec) -> Result<SynthPair, EvalError> {
    expect_kind(spec, SynthKind::TuckerStructured)?;
    let n = spec.x_dims[0];
    let mut rng = stream(spec.seed, STREAM_STRUCTURE);
    let mut core_dims = |core: &[usize]| -> Result<DenseTensor, EvalError> {
        let mut d = vec![spec.latent];
        d.extend_from_slice(core);
        gaussian_tensor(&mut rng, &d)
    };
    let g = core_dims(&spec.x_core)?;
    let d = core_dims(&spec.y_core)?;
    let px: Vec<Matrix> = spec.x_dims[1..]
        .iter()
        .zip(&spec.x_core)
        .map(|(&i, &r)| loading(&mut rng, i, r, spec.loadings))
        .collect();
    let qy: Vec<Matrix> = spec.y_dims[1..]
        .iter()
        .zip(&spec.y_core)
        .map(|(&j, &k)| loading(&mut rng, j, k, spec.loadings))
        .collect();
    let make = |t: Matrix| -> Result<(DenseTensor, DenseTensor), EvalError> {
        let mut fx = vec![t.clone()];
        fx.extend(px.iter().cloned());
        let mut fy = vec![t];
        fy.extend(qy.iter().cloned());
        Ok((DenseTensor::tucker_product(&g, &fx)?, DenseTensor::tucker_product(&d, &fy)?))
    };
    let cal = make(gaussian(&mut stream(spec.seed, STREAM_LATENT_CAL), n, spec.latent))?;
    let val = make(gaussian(&mut stream(spec.seed, STREAM_LATENT_VAL), n, spec.latent))?;
    let mut structure = vec![g.matricize(0)?, d.matricize(0)?];
    structure.extend(px.iter().cloned());
    structure.extend(qy.iter().cloned());
    pair(spec, cal, val, structure)
}

/// Gaussian tensor `X` with `Y = X₍₀₎ W` exactly; the validation set draws a
/// fresh `X` under the same `W`.
pub fn gen_matrix_response(spec: &SynthSpec) -> Result<SynthPair, EvalError> {
    expect_kind(spec, SynthKind::MatrixResponse)?;
    let px: usize = spec.x_dims[1..].iter().product();
    let w = gaussian(&mut stream(spec.seed, STREAM_STRUCTURE), px, spec.y_dims[1]);
    let make = |id: u64| -> Result<(DenseTensor, DenseTensor), EvalError> {
        let x = gaussian_tensor(&mut stream(spec.seed, id), &spec.x_dims)?;
        let y = DenseTensor::from_matrix(&x.matricize(0)?.dot(&w))?;
        Ok((x, y))
    };
    pair(spec, make(STREAM_LATENT_CAL)?, make(STREAM_LATENT_VAL)?, vec![w.clone()])
}

/// Noise-free data that is exactly a sum of `r` HOPLS blocks with
/// orthonormal loadings and `λ` loadings per trailing mode. Block loadings
/// are mutually orthogonal across blocks whenever `r·λ` fits in the mode,
/// and block `k` (from 0) has superdiagonal cores of strength `r − k`, so
/// the components are identifiable in order.
/// Calibration latent vectors are orthonormal; validation ones are Gaussian.
pub fn gen_hopls_model(x_dims: &[usize], y_dims: &[usize], r: usize, lambda: usize, seed: u64) -> Result<SynthPair, EvalError> {
    if x_dims[0] != y_dims[0] || x_dims.len() < 3 || y_dims.len() < 3 || r == 0 || lambda == 0 {
        return Err(EvalError::InvalidSpec(format!(
            "cannot build a {r}-block model for shapes {x_dims:?} / {y_dims:?}"
        )));
    }
    let n = x_dims[0];
    let mut rng = stream(seed, STREAM_STRUCTURE);
    let mut orthonormal = |rows: usize, cols: usize| -> Result<Matrix, EvalError> {
        Ok(thin_svd(&gaussian(&mut rng, rows, cols))?.u)
    };
    let mut mode_bases = |dims: &[usize]| -> Result<Vec<Vec<Matrix>>, EvalError> {
        // per mode, one orthonormal block of width λ for each component
        dims[1..]
            .iter()
            .map(|&d| {
                let l = lambda.min(d);
                if r * l <= d {
                    let basis = orthonormal(d, r * l)?;
                    Ok((0..r).map(|k| basis.slice(ndarray::s![.., k * l..(k + 1) * l]).to_owned()).collect())
                } else {
                    (0..r).map(|_| orthonormal(d, l)).collect()
                }
            })
            .collect()
    };
    let xb = mode_bases(x_dims)?;
    let yb = mode_bases(y_dims)?;
    // Superdiagonal cores give every mode unfolding of a block a flat
    // spectrum; with random orthonormal loadings this loses no generality
    // and keeps the blocks separable by strength.
    let core = |dims: &[usize], k: usize| -> Result<DenseTensor, EvalError> {
        let mut d = vec![1];
        d.extend(dims[1..].iter().map(|&s| lambda.min(s)));
        let diag = d[1..].iter().copied().min().unwrap_or(1);
        let strength = (r - k) as f64;
        let mut g = DenseTensor::zeros(Shape::new(d.clone())?);
        for i in 0..diag {
            let mut ix = vec![i; d.len()];
            ix[0] = 0;
            g.set(&ix, strength);
        }
        Ok(g)
    };
    let gs: Vec<DenseTensor> = (0..r).map(|k| core(x_dims, k)).collect::<Result<_, _>>()?;
    let ds: Vec<DenseTensor> = (0..r).map(|k| core(y_dims, k)).collect::<Result<_, _>>()?;

    let build = |t: &Matrix| -> Result<(DenseTensor, DenseTensor), EvalError> {
        let mut x = DenseTensor::zeros(Shape::new(x_dims.to_vec())?);
        let mut y = DenseTensor::zeros(Shape::new(y_dims.to_vec())?);
        for k in 0..r {
            let tk = t.slice(ndarray::s![.., k..k + 1]).to_owned();
            let mut fx = vec![tk.clone()];
            fx.extend(xb.iter().map(|m| m[k].clone()));
            let mut fy = vec![tk];
            fy.extend(yb.iter().map(|m| m[k].clone()));
            x = x.add(&DenseTensor::tucker_product(&gs[k], &fx)?)?;
            y = y.add(&DenseTensor::tucker_product(&ds[k], &fy)?)?;
        }
        Ok((x, y))
    };
    let t_cal = thin_svd(&gaussian(&mut stream(seed, STREAM_LATENT_CAL), n, r))?.u;
    let t_val = gaussian(&mut stream(seed, STREAM_LATENT_VAL), n, r);
    let (xc, yc) = build(&t_cal)?;
    let (xv, yv) = build(&t_val)?;
    let set = |x: DenseTensor, y: DenseTensor| SynthSet {
        clean_x: x.clone(),
        clean_y: y.clone(),
        x,
        y,
    };
    Ok(SynthPair {
        calibration: set(xc, yc),
        validation: set(xv, yv),
        structure: vec![t_cal],
    })
}

mod snr_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else {
            Repr::Text("inf".into()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad SNR '{t}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_matrix_structured_is_exact_fold() {
        let spec = SynthSpec::preset("2m", f64::INFINITY, 3).unwrap();
        let pair = generate(&spec).unwrap();
        let cal = &pair.calibration;
        assert_eq!(cal.x, cal.clean_x);
        assert_eq!(cal.x.dims(), &[10, 10, 10]);
        // rank of the mode-0 unfolding is the latent count
        let s = thin_svd(&cal.x.matricize(0).unwrap()).unwrap().s;
        assert!(s[4] > 1e-8 * s[0] && s[5] < 1e-10 * s[0]);
    }

    #[test]
    fn requested_snr_is_realized() {
        for case in ["1m", "2t", "3m"] {
            for snr in [10.0, 5.0, 0.0, -5.0] {
                let p = generate(&SynthSpec::preset(case, snr, 11).unwrap()).unwrap();
                for set in [&p.calibration, &p.validation] {
                    let (sx, sy) = set.realized_snr();
                    assert!((sx - snr).abs() < 0.01 && (sy - snr).abs() < 0.01, "{case} {snr}: {sx} {sy}");
                }
            }
        }
    }

    #[test]
    fn noise_seed_leaves_clean_parts_alone() {
        let a = SynthSpec::preset("2t", 0.0, 5).unwrap();
        let b = a.clone().with_noise_seed(99);
        let (pa, pb) = (generate(&a).unwrap(), generate(&b).unwrap());
        assert_eq!(pa.calibration.clean_x, pb.calibration.clean_x);
        assert_eq!(pa.validation.clean_y, pb.validation.clean_y);
        assert_ne!(pa.calibration.x, pb.calibration.x);
    }

    #[test]
    fn matrix_response_is_exact() {
        let p = generate(&SynthSpec::preset("mr", f64::INFINITY, 1).unwrap()).unwrap();
        let w = &p.structure[0];
        let cal = &p.calibration;
        assert_eq!(cal.x.dims(), &[5, 5, 5, 5]);
        assert_eq!(cal.y.dims(), &[5, 2]);
        assert_eq!(cal.y.matricize(0).unwrap(), cal.x.matricize(0).unwrap().dot(w));
        let q = generate(&SynthSpec::preset("mr", f64::INFINITY, 2).unwrap()).unwrap();
        assert_ne!(&q.structure[0], w);
    }

    #[test]
    fn spec_validation() {
        assert!(SynthSpec::preset("9z", 0.0, 1).is_err());
        let mut s = SynthSpec::preset("2t", 0.0, 1).unwrap();
        s.x_core = vec![3];
        assert!(matches!(generate(&s), Err(EvalError::InvalidSpec(_))));
        let mut s = SynthSpec::preset("2m", 0.0, 1).unwrap();
        s.y_dims[0] = 9;
        assert!(generate(&s).is_err());
    }
}
