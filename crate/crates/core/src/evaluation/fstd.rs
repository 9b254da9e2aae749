//! Fréchet distance between Gaussian fits of classifier features:
//! `‖μ − μ_g‖² + Tr(Σ + Σ_g − 2(Σ Σ_g)^{1/2})`.
//!
//! The trace of `(Σ Σ_g)^{1/2}` is taken as the trace of `(S Σ_g S)^{1/2}`
//! with `S = Σ^{1/2}`, a symmetric PSD product with the same spectrum, so
//! every square root comes from a symmetric eigendecomposition.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::augmentation::TauRange;
use crate::data::{npy, BatchSource, Protocol, GRID, WINDOW};
use crate::error::{Error, Result};
use crate::models::{weights_sha256, Generator, StNet, StNetSpec};
use crate::mtn::{accuracy, pretrain_classifier, synthesize, MtnConfig};
use crate::seed;
use crate::tensor::Tensor;

/// Eigenvalues below `−EIG_TOL·max(1, λ_max)` mark a matrix as not PSD.
pub const EIG_TOL: f64 = 1e-6;

pub struct FstdReport {
    pub mu_real: DVector<f64>,
    pub sigma_real: DMatrix<f64>,
    pub mu_gen: DVector<f64>,
    pub sigma_gen: DMatrix<f64>,
    pub mean_term: f64,
    pub trace_term: f64,
    /// `mean_term + trace_term`, floored at zero.
    pub score: f64,
    pub extractor_id: Option<String>,
    pub protocol: Option<Protocol>,
}

/// Serializable part of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FstdSummary {
    pub score: f64,
    pub mean_term: f64,
    pub trace_term: f64,
    pub dimension: usize,
    pub n_real: usize,
    pub n_gen: usize,
    pub extractor_id: Option<String>,
    pub protocol: Option<Protocol>,
}

impl FstdReport {
    pub fn summary(&self, n_real: usize, n_gen: usize) -> FstdSummary {
        FstdSummary {
            score: self.score,
            mean_term: self.mean_term,
            trace_term: self.trace_term,
            dimension: self.mu_real.len(),
            n_real,
            n_gen,
            extractor_id: self.extractor_id.clone(),
            protocol: self.protocol,
        }
    }

    /// Writes `mu_real.npy`, `sigma_real.npy`, `mu_gen.npy` and `sigma_gen.npy`.
    pub fn save_statistics(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        let d = self.mu_real.len();
        let rows = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        npy::write_f64(&dir.join("mu_real.npy"), &[d], self.mu_real.as_slice())?;
        npy::write_f64(&dir.join("sigma_real.npy"), &[d, d], &rows(&self.sigma_real))?;
        npy::write_f64(&dir.join("mu_gen.npy"), &[d], self.mu_gen.as_slice())?;
        npy::write_f64(&dir.join("sigma_gen.npy"), &[d, d], &rows(&self.sigma_gen))
    }
}

/// Sample mean and unbiased covariance of the rows of `[n, d]` features.
pub fn moments(features: &Tensor) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s = features.shape();
    if s.len() != 2 || s[0] < 2 {
        return Err(Error::Argument(format!("features {s:?} must be [n >= 2, d]")));
    }
    if !features.all_finite() {
        return Err(Error::Numeric("non-finite feature values".into()));
    }
    let (n, d) = (s[0], s[1]);
    let x = DMatrix::from_row_slice(n, d, features.data());
    let mu = x.row_mean().transpose();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mu[j]);
    let sigma = (centered.transpose() * &centered) / (n - 1) as f64;
    Ok((mu, sigma))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn clipped_eigen(m: &DMatrix<f64>, what: &str) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let mut eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min < -EIG_TOL * max.abs().max(1.0) {
        let mut neg: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&v| v < 0.0).collect();
        neg.sort_by(f64::total_cmp);
        neg.truncate(5);
        return Err(Error::Numeric(format!(
            "{what} is not positive semidefinite: min eigenvalue {min:.3e}, max {max:.3e}, most negative {neg:?}"
        )));
    }
    eig.eigenvalues.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(eig)
}

fn sqrt_psd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let eig = clipped_eigen(m, what)?;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(symmetrize(&(&eig.eigenvectors * root * eig.eigenvectors.transpose())))
}

/// `(‖μ₁ − μ₂‖², Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2}))`.
pub fn frechet_terms(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<(f64, f64)> {
    let d = mu1.len();
    if mu2.len() != d || s1.shape() != (d, d) || s2.shape() != (d, d) {
        return Err(Error::Argument("statistics of different dimensions".into()));
    }
    let root1 = sqrt_psd(s1, "real covariance")?;
    clipped_eigen(s2, "generated covariance")?;
    let inner = &root1 * symmetrize(s2) * &root1;
    let cross: f64 = clipped_eigen(&inner, "covariance product")?.eigenvalues.iter().map(|v| v.sqrt()).sum();
    let mean_term = (mu1 - mu2).norm_squared();
    Ok((mean_term, s1.trace() + s2.trace() - 2.0 * cross))
}

/// FSTD between two `[n, d]` feature sets.
pub fn fstd(real: &Tensor, generated: &Tensor) -> Result<FstdReport> {
    let (mu_real, sigma_real) = moments(real)?;
    let (mu_gen, sigma_gen) = moments(generated)?;
    let (mean_term, trace_term) = frechet_terms(&mu_real, &sigma_real, &mu_gen, &sigma_gen)?;
    Ok(FstdReport {
        mu_real,
        sigma_real,
        mu_gen,
        sigma_gen,
        mean_term,
        trace_term,
        score: (mean_term + trace_term).max(0.0),
        extractor_id: None,
        protocol: None,
    })
}

/// A classifier whose penultimate activation serves as the FSTD feature map.
pub struct Extractor {
    pub classifier: StNet,
    pub protocol: Protocol,
    pub train_accuracy: f64,
    pub id: String,
}

impl Extractor {
    /// Rejects an extractor that does not fit its training data well enough.
    pub fn accept(self, min_accuracy: f64) -> Result<Self> {
        if self.train_accuracy < min_accuracy {
            return Err(Error::Numeric(format!(
                "{} extractor reached {:.3} training accuracy, below {min_accuracy}",
                self.protocol.tag(),
                self.train_accuracy
            )));
        }
        Ok(self)
    }

    pub fn features(&self, data: &dyn BatchSource, idx: &[usize], batch: usize) -> Result<Tensor> {
        let parts = idx.chunks(batch.max(1)).map(|c| self.classifier.extract(&data.batch(c))).collect::<Result<Vec<_>>>()?;
        Ok(concat_rows(&parts))
    }

    /// Features of `G(δ(e, τ))`, one generated sample per index, `τ` drawn from `range`.
    pub fn generated_features(
        &self,
        generator: &Generator,
        data: &dyn BatchSource,
        idx: &[usize],
        range: TauRange,
        seed: u64,
        batch: usize,
    ) -> Result<Tensor> {
        let mut rng = seed::stream(seed, "fstd-gen", 0);
        let mut parts = Vec::new();
        for c in idx.chunks(batch.max(1)) {
            let taus = c
                .iter()
                .map(|_| crate::augmentation::sample_tau(range, &mut rng).map(|t| t.value()))
                .collect::<Result<Vec<_>>>()?;
            let generated = synthesize(generator, &data.batch(c), &taus, true, &mut rng)?;
            parts.push(self.classifier.extract(&generated)?);
        }
        Ok(concat_rows(&parts))
    }

    /// FSTD of the generator's output against real samples `idx`.
    pub fn score_generator(
        &self,
        generator: &Generator,
        data: &dyn BatchSource,
        idx: &[usize],
        range: TauRange,
        seed: u64,
        batch: usize,
    ) -> Result<FstdReport> {
        let real = self.features(data, idx, batch)?;
        let generated = self.generated_features(generator, data, idx, range, seed, batch)?;
        self.tag(fstd(&real, &generated)?)
    }

    /// FSTD of Gaussian noise grids, matched to the overall spread of the real
    /// samples `idx`, against those samples.
    pub fn score_noise(&self, data: &dyn BatchSource, idx: &[usize], seed: u64, batch: usize) -> Result<FstdReport> {
        let (mut sum, mut sq, mut count) = (0.0, 0.0, 0usize);
        for c in idx.chunks(batch.max(1)) {
            let b = data.batch(c);
            sum += b.sum();
            sq += b.data().iter().map(|v| v * v).sum::<f64>();
            count += b.len();
        }
        let mean = sum / count.max(1) as f64;
        let std = (sq / count.max(1) as f64 - mean * mean).max(0.0).sqrt().max(f64::MIN_POSITIVE);
        let mut rng = seed::stream(seed, "fstd-noise", 0);
        let normal = Normal::new(mean, std).map_err(|e| Error::Argument(e.to_string()))?;
        let mut parts = Vec::new();
        for c in idx.chunks(batch.max(1)) {
            let noise = Tensor::from_fn(&[c.len(), WINDOW, GRID, GRID], |_| normal.sample(&mut rng));
            parts.push(self.classifier.extract(&noise)?);
        }
        let real = self.features(data, idx, batch)?;
        self.tag(fstd(&real, &concat_rows(&parts))?)
    }

    pub fn tag(&self, mut report: FstdReport) -> Result<FstdReport> {
        report.extractor_id = Some(self.id.clone());
        report.protocol = Some(self.protocol);
        Ok(report)
    }
}

fn concat_rows(parts: &[Tensor]) -> Tensor {
    let cols = parts.first().map_or(0, |p| p.shape()[1]);
    let data: Vec<f64> = parts.iter().flat_map(|p| p.data().iter().copied()).collect();
    Tensor::new(vec![data.len() / cols.max(1), cols], data)
}

/// Trains an STNet classifier on `train_idx` for `protocol` by cross-entropy.
pub fn train_fstd_extractor(
    data: &dyn BatchSource,
    targets: &[usize],
    train_idx: &[usize],
    spec: StNetSpec,
    protocol: Protocol,
    config: &MtnConfig,
) -> Result<Extractor> {
    if targets.len() != data.len() {
        return Err(Error::Argument(format!("{} samples but {} targets", data.len(), targets.len())));
    }
    let y: Vec<usize> = train_idx.iter().map(|&i| targets[i]).collect();
    if y.iter().all(|&v| Some(&v) == y.first()) {
        return Err(Error::Argument(format!(
            "degenerate labels: every {} training target is the same class",
            protocol.tag()
        )));
    }
    let subset = data.batch(train_idx);
    let spec = StNetSpec { head: protocol.n_classes(), ..spec };
    let init = StNet::new(spec, &mut seed::stream(config.seed, "init-extractor", 0))?;
    let trained = pretrain_classifier(init, &subset, &y, config, config.pretrain_epochs)?;
    let train_accuracy = accuracy(&trained.classifier, &subset, &y, config.batch_size)?;
    let id = weights_sha256(&trained.classifier);
    Ok(Extractor { classifier: trained.classifier, protocol, train_accuracy, id })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::data::{synth_dataset, GridSet, SyntheticSpec};

    fn gaussian(n: usize, d: usize, shift: &[f64], seed: u64) -> Tensor {
        let mut rng = seed::Rng::seed_from_u64(seed);
        Tensor::from_fn(&[n, d], |i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + shift[i % d]
        })
    }

    #[test]
    fn identical_sets_score_zero() {
        let a = gaussian(500, 16, &[0.0; 16], 1);
        let r = fstd(&a, &a).unwrap();
        assert!(r.score <= 1e-6, "{}", r.score);
        assert_eq!(r.mean_term, 0.0);
    }

    #[test]
    fn closed_form_unit_offset() {
        let a = gaussian(100_000, 4, &[0.0; 4], 2);
        let b = gaussian(100_000, 4, &[1.0, 0.0, 0.0, 0.0], 3);
        let r = fstd(&a, &b).unwrap();
        assert!((r.score - 1.0).abs() < 0.05, "{}", r.score);
    }

    #[test]
    fn symmetric_in_its_arguments() {
        let a = gaussian(300, 6, &[0.2, 0.0, -0.3, 0.0, 0.0, 1.0], 4);
        let b = gaussian(250, 6, &[0.0; 6], 5).map(|v| v * 1.7);
        let (ab, ba) = (fstd(&a, &b).unwrap().score, fstd(&b, &a).unwrap().score);
        assert!((ab - ba).abs() < 1e-8, "{ab} vs {ba}");
    }

    #[test]
    fn doubling_the_offset_quadruples_the_mean_term() {
        let s = DMatrix::<f64>::identity(3, 3);
        let zero = DVector::zeros(3);
        let off = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let (m1, t1) = frechet_terms(&zero, &s, &off, &s).unwrap();
        let (m2, t2) = frechet_terms(&zero, &s, &(&off * 2.0), &s).unwrap();
        assert_eq!(m2, 4.0 * m1);
        assert!(t1.abs() < 1e-12 && t2.abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariances_match_the_scalar_formula() {
        // Tr(Σ₁ + Σ₂ − 2√(Σ₁Σ₂)) = Σ_j (√a_j − √b_j)² for diagonal Σ.
        let a = [1.0, 4.0, 0.25];
        let b = [9.0, 1.0, 0.25];
        let s1 = DMatrix::from_diagonal(&DVector::from_row_slice(&a));
        let s2 = DMatrix::from_diagonal(&DVector::from_row_slice(&b));
        let mu = DVector::zeros(3);
        let (_, t) = frechet_terms(&mu, &s1, &mu, &s2).unwrap();
        let want: f64 = a.iter().zip(&b).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum();
        assert!((t - want).abs() < 1e-12, "{t} vs {want}");
    }

    #[test]
    fn non_psd_input_is_a_numeric_error() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let mu = DVector::zeros(2);
        let err = frechet_terms(&mu, &bad, &mu, &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains("-5.000e-1")), "{err}");
        assert!(fstd(&Tensor::zeros(&[1, 3]), &Tensor::zeros(&[4, 3])).is_err());
        assert!(fstd(&Tensor::full(&[3, 2], f64::NAN), &Tensor::zeros(&[4, 2])).is_err());
    }

    #[test]
    fn extractor_training_checks_labels_and_fits_separable_data() {
        let samples = synth_dataset(&SyntheticSpec::new(2, 24, 0.3), 9).unwrap();
        let data = GridSet::from_samples(&samples);
        let targets: Vec<usize> = samples.iter().map(|s| Protocol::Arousal.target(&s.labels)).collect();
        let cfg = MtnConfig { pretrain_epochs: 30, lr_c: 1e-2, batch_size: 16, ..Default::default() };
        let spec = StNetSpec::tiny(128, 2, 0.0);
        let one_class: Vec<usize> = (0..24).collect();
        assert!(matches!(
            train_fstd_extractor(&data, &targets, &one_class, spec.clone(), Protocol::Arousal, &cfg),
            Err(Error::Argument(m)) if m.contains("degenerate")
        ));
        let all: Vec<usize> = (0..48).collect();
        let ex = train_fstd_extractor(&data, &targets, &all, spec, Protocol::Arousal, &cfg).unwrap().accept(0.95).unwrap();
        let f = ex.features(&data, &all, 16).unwrap();
        assert_eq!(f.shape(), [48, 4]);
        assert_eq!(ex.id.len(), 64);
    }
}
