use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::TcnConfig;

/// Causal dilated 1-D convolution. `weight` is `[out][in][kernel]`; tap `k`
/// reads the input `(kernel - 1 - k) * dilation` steps in the past.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(in_ch: usize, out_ch: usize, kernel: usize, dilation: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel,
            dilation,
            weight: vec![0.0; out_ch * in_ch * kernel],
            bias: vec![0.0; out_ch],
        }
    }

    #[inline]
    pub fn w(&self, o: usize, c: usize, k: usize) -> f64 {
        self.weight[(o * self.in_ch + c) * self.kernel + k]
    }

    #[inline]
    pub fn shift(&self, k: usize) -> usize {
        (self.kernel - 1 - k) * self.dilation
    }
}

/// Affine map, `weight` is `[out][in]`. Used for the 1x1 shortcut
/// projections and the readout.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; out_dim * in_dim],
            bias: vec![0.0; out_dim],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalBlock {
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    /// Present when the block changes the channel count.
    pub proj: Option<Linear>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcnWeights {
    pub blocks: Vec<TemporalBlock>,
    pub head: Linear,
}

/// Borrowed view of one named tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl TcnWeights {
    pub fn zeros(cfg: &TcnConfig) -> Self {
        let blocks = (0..cfg.blocks)
            .map(|b| {
                let in_ch = if b == 0 {
                    cfg.in_channels
                } else {
                    cfg.channels
                };
                let d = cfg.dilations[b];
                TemporalBlock {
                    conv1: Conv1d::zeros(in_ch, cfg.channels, cfg.kernel, d),
                    conv2: Conv1d::zeros(cfg.channels, cfg.channels, cfg.kernel, d),
                    proj: (in_ch != cfg.channels).then(|| Linear::zeros(in_ch, cfg.channels)),
                }
            })
            .collect();
        Self {
            blocks,
            head: Linear::zeros(cfg.channels, cfg.out_dim),
        }
    }

    /// Uniform in `±sqrt(6 / fan_in)` for every weight, zero biases.
    pub fn he_uniform<R: Rng + ?Sized>(cfg: &TcnConfig, rng: &mut R) -> Self {
        let mut w = Self::zeros(cfg);
        let mut fill = |data: &mut [f64], fan_in: usize| {
            let bound = crate::math::sqrt(6.0 / fan_in as f64);
            for x in data {
                *x = rng.random_range(-bound..bound);
            }
        };
        for b in &mut w.blocks {
            fill(&mut b.conv1.weight, b.conv1.in_ch * b.conv1.kernel);
            fill(&mut b.conv2.weight, b.conv2.in_ch * b.conv2.kernel);
            if let Some(p) = &mut b.proj {
                fill(&mut p.weight, p.in_dim);
            }
        }
        fill(&mut w.head.weight, w.head.in_dim);
        w
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.params_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Named tensors in declaration order (the model file order).
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for (j, c) in [&b.conv1, &b.conv2].into_iter().enumerate() {
                out.push(TensorRef {
                    name: format!("block{i}.conv{}.weight", j + 1),
                    shape: vec![c.out_ch, c.in_ch, c.kernel],
                    data: &c.weight,
                });
                out.push(TensorRef {
                    name: format!("block{i}.conv{}.bias", j + 1),
                    shape: vec![c.out_ch],
                    data: &c.bias,
                });
            }
            if let Some(p) = &b.proj {
                out.push(TensorRef {
                    name: format!("block{i}.proj.weight"),
                    shape: vec![p.out_dim, p.in_dim],
                    data: &p.weight,
                });
                out.push(TensorRef {
                    name: format!("block{i}.proj.bias"),
                    shape: vec![p.out_dim],
                    data: &p.bias,
                });
            }
        }
        let h = &self.head;
        out.push(TensorRef {
            name: String::from("head.weight"),
            shape: vec![h.out_dim, h.in_dim],
            data: &h.weight,
        });
        out.push(TensorRef {
            name: String::from("head.bias"),
            shape: vec![h.out_dim],
            data: &h.bias,
        });
        out
    }

    /// Mutable parameter slices in the same order as [`Self::tensors`].
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.conv1.weight);
            out.push(&mut b.conv1.bias);
            out.push(&mut b.conv2.weight);
            out.push(&mut b.conv2.bias);
            if let Some(p) = &mut b.proj {
                out.push(&mut p.weight);
                out.push(&mut p.bias);
            }
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.tensors().into_iter().map(|t| t.data).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// Same tensor layout as `other`.
    pub fn same_shape(&self, other: &TcnWeights) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|(x, y)| x.shape == y.shape && x.data.len() == y.data.len())
    }

    pub fn matches(&self, cfg: &TcnConfig) -> bool {
        let z = Self::zeros(cfg);
        self.same_shape(&z)
            && self.blocks.iter().zip(&z.blocks).all(|(a, b)| {
                a.conv1.dilation == b.conv1.dilation && a.conv2.dilation == b.conv2.dilation
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn default_layout() {
        let cfg = TcnConfig::default();
        let w = TcnWeights::zeros(&cfg);
        let t = w.tensors();
        assert_eq!(t.len(), 5 * 4 + 2 + 2);
        assert_eq!(t[0].name, "block0.conv1.weight");
        assert_eq!(t[0].shape, [32, 18, 7]);
        assert_eq!(t[4].name, "block0.proj.weight");
        assert_eq!(t[4].shape, [32, 18]);
        assert_eq!(t.last().unwrap().name, "head.bias");
        let expected = (32 * 18 * 7 + 32)
            + (32 * 32 * 7 + 32)
            + (32 * 18 + 32)
            + 4 * 2 * (32 * 32 * 7 + 32)
            + (4 * 32 + 4);
        assert_eq!(w.num_params(), expected);
    }

    #[test]
    fn he_bounds() {
        let cfg = TcnConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w = TcnWeights::he_uniform(&cfg, &mut rng);
        let bound = crate::math::sqrt(6.0 / (18.0 * 7.0));
        assert!(w.blocks[0].conv1.weight.iter().all(|x| x.abs() < bound));
        assert!(w.blocks[0]
            .conv1
            .weight
            .iter()
            .any(|x| x.abs() > 0.9 * bound));
        assert!(w.blocks[0].conv1.bias.iter().all(|&x| x == 0.0));
    }
}
