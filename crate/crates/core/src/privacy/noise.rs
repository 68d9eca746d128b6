use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::ledger::NodePath;
use crate::error::{Error, Result};

/// Root of all randomness for a run. Every structural site (a tree node, an
/// operation label) gets its own ChaCha20 stream keyed by `(seed, label, path)`,
/// so streams are independent and a fixed seed replays the release exactly.
///
/// A noiseless source keeps every code path (and every budget charge) but
/// returns zero Laplace noise and deterministic arg-max selections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    seed: u64,
    noiseless: bool,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            noiseless: false,
        }
    }

    pub fn noiseless(seed: u64) -> Self {
        Self {
            seed,
            noiseless: true,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }

    fn key(&self, label: &str, path: &NodePath) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"htf-noise-v1");
        h.update(self.seed.to_le_bytes());
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        for step in path.steps() {
            h.update(step.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn stream(&self, label: &str, path: &NodePath) -> NoiseStream {
        NoiseStream {
            rng: ChaCha20Rng::from_seed(self.key(label, path)),
            noiseless: self.noiseless,
        }
    }

    /// A derived 64-bit seed, for components that take a plain integer seed.
    pub fn derive_seed(&self, label: &str) -> u64 {
        let k = self.key(label, &NodePath::root());
        u64::from_le_bytes(k[..8].try_into().expect("digest is 32 bytes"))
    }

    /// A child source with its own seed, for nested runs (e.g. one per sweep row).
    pub fn child(&self, label: &str) -> NoiseSource {
        NoiseSource {
            seed: self.derive_seed(label),
            noiseless: self.noiseless,
        }
    }
}

pub struct NoiseStream {
    rng: ChaCha20Rng,
    noiseless: bool,
}

impl NoiseStream {
    pub fn laplace(&mut self, sensitivity: f64, eps: f64) -> Result<f64> {
        laplace_sample(sensitivity, eps, self)
    }

    /// Uniform in `[0, 1)`. Not affected by noiseless mode.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    /// Exponential mechanism: picks index `i` with probability proportional to
    /// `exp(eps * u_i / (2 * sensitivity))`.
    pub fn exponential_select(
        &mut self,
        utilities: &[f64],
        eps: f64,
        sensitivity: f64,
    ) -> Result<usize> {
        let probs = em_probabilities(utilities, eps, sensitivity)?;
        if self.noiseless || eps.is_infinite() {
            return Ok(argmax_first(utilities));
        }
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
        // Rounding left `acc` a hair under 1; fall back to the last positive entry.
        Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(0))
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Draw from `Laplace(0, sensitivity / eps)` by inverse-CDF sampling.
pub fn laplace_sample(sensitivity: f64, eps: f64, src: &mut NoiseStream) -> Result<f64> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::invalid(format!(
            "sensitivity must be positive and finite, got {sensitivity}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if src.noiseless {
        return Ok(0.0);
    }
    let b = sensitivity / eps;
    let u = loop {
        let u = src.rng.random::<f64>() - 0.5;
        if u != -0.5 {
            break u;
        }
    };
    Ok(-b * u.signum() * (1.0 - 2.0 * u.abs()).ln())
}

/// Selection probabilities of the exponential mechanism, normalized.
pub fn em_probabilities(utilities: &[f64], eps: f64, sensitivity: f64) -> Result<Vec<f64>> {
    if utilities.is_empty() {
        return Err(Error::invalid(
            "exponential mechanism over an empty candidate set",
        ));
    }
    if !(eps > 0.0) || !(sensitivity > 0.0) {
        return Err(Error::invalid(format!(
            "exponential mechanism needs eps > 0 and sensitivity > 0, got {eps}, {sensitivity}"
        )));
    }
    if eps.is_infinite() {
        let mut p = vec![0.0; utilities.len()];
        p[argmax_first(utilities)] = 1.0;
        return Ok(p);
    }
    let scale = eps / (2.0 * sensitivity);
    let max = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = utilities
        .iter()
        .map(|u| ((u - max) * scale).exp())
        .collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_scale_zero_limit() {
        let mut s = NoiseSource::new(1).stream("t", &NodePath::root());
        for _ in 0..100 {
            assert_eq!(s.laplace(1.0, f64::INFINITY).unwrap(), 0.0);
        }
        let tiny: f64 = (0..1000)
            .map(|_| s.laplace(1.0, 1e12).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(tiny < 1e-9);
    }

    #[test]
    fn laplace_rejects_bad_arguments() {
        let mut s = NoiseSource::new(1).stream("t", &NodePath::root());
        assert!(s.laplace(1.0, 0.0).is_err());
        assert!(s.laplace(1.0, -1.0).is_err());
        assert!(s.laplace(0.0, 1.0).is_err());
        // noiseless mode still validates
        let mut z = NoiseSource::noiseless(1).stream("t", &NodePath::root());
        assert!(z.laplace(1.0, 0.0).is_err());
        assert_eq!(z.laplace(2.0, 0.001).unwrap(), 0.0);
    }

    #[test]
    fn laplace_moments() {
        // sensitivity 1, eps 0.5 -> b = 2, variance 8
        let mut s = NoiseSource::new(42).stream("moments", &NodePath::root());
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| s.laplace(1.0, 0.5).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let b = 2.0_f64;
        assert!(mean.abs() < 3.0 * b * 2f64.sqrt() / 1e3, "mean {mean}");
        assert!((var - 8.0).abs() < 0.05 * 8.0, "var {var}");
    }

    fn draws(src: &NoiseSource, label: &str, path: &NodePath) -> Vec<f64> {
        let mut s = src.stream(label, path);
        (0..5).map(|_| s.uniform()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let src = NoiseSource::new(7);
        let p = NodePath::root().child(1);
        let a = draws(&src, "x", &p);
        assert_eq!(a, draws(&src, "x", &p));
        assert_ne!(a, draws(&src, "y", &p));
        assert_ne!(a, draws(&src, "x", &p.child(0)));
        assert_ne!(a, draws(&NoiseSource::new(8), "x", &p));
    }

    #[test]
    fn em_probabilities_closed_form() {
        let u = [-3.0, -1.0, 0.0, -2.0];
        let p = em_probabilities(&u, 1.0, 1.0).unwrap();
        let w: Vec<f64> = u.iter().map(|x| (x / 2.0_f64).exp()).collect();
        let z: f64 = w.iter().sum();
        for (a, b) in p.iter().zip(&w) {
            assert!((a - b / z).abs() < 1e-12);
        }
        let inf = em_probabilities(&u, f64::INFINITY, 1.0).unwrap();
        assert_eq!(inf, vec![0.0, 0.0, 1.0, 0.0]);
    }
}
