use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{Activation, DenseNet, DerivativeMode, FilmLayer, ForwardTrace, NumericsError, FD_STEP};

/// Layer widths of a [`VelocityNet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VelocityArch {
    /// Flattened chunk length, which is also the noise dimension.
    pub noise_dim: usize,
    /// Flattened observation-window length.
    pub cond_dim: usize,
    pub hidden: usize,
    pub cond_hidden: usize,
}

impl VelocityArch {
    pub fn desk_scale(noise_dim: usize, cond_dim: usize) -> Self {
        Self { noise_dim, cond_dim, hidden: 128, cond_hidden: 64 }
    }
}

/// Average-velocity field `u_θ(z, r, t | s)`.
///
/// `[z, r, t]` is embedded linearly to the hidden width, modulated by FiLM
/// coefficients computed from `[s, r, t]`, passed through a relu and
/// read out by a one-hidden-layer trunk. A linear skip from `[z, r, t]` is
/// added to the trunk output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityNet {
    embed: DenseNet,
    film: FilmLayer,
    trunk: DenseNet,
    skip: DenseNet,
}

/// Intermediate values of one forward pass, needed by the backward pass and
/// by the tangent (total-derivative) pass.
#[derive(Debug, Clone)]
pub struct VelocityTrace {
    embed: ForwardTrace,
    film: ForwardTrace,
    /// Pre-activation after modulation, `γ ⊙ h0 + β`.
    modulated: Vec<f64>,
    trunk: ForwardTrace,
    skip: ForwardTrace,
    output: Vec<f64>,
}

impl VelocityTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl VelocityNet {
    pub fn new<R: Rng + ?Sized>(arch: VelocityArch, rng: &mut R) -> Result<Self, NumericsError> {
        let embed = DenseNet::glorot(&[arch.noise_dim + 2, arch.hidden], &[Activation::Identity], rng)?;
        let film = FilmLayer::init(arch.cond_dim + 2, arch.cond_hidden, arch.hidden, rng)?;
        let trunk = DenseNet::glorot(
            &[arch.hidden, arch.hidden, arch.noise_dim],
            &[Activation::Relu, Activation::Identity],
            rng,
        )?;
        let skip = DenseNet::zeros(&[arch.noise_dim + 2, arch.noise_dim], &[Activation::Identity])?;
        Self::from_parts(embed, film, trunk, skip)
    }

    pub fn from_parts(
        embed: DenseNet,
        film: FilmLayer,
        trunk: DenseNet,
        skip: DenseNet,
    ) -> Result<Self, NumericsError> {
        let hidden = embed.output_dim();
        if embed.input_dim() < 3 || embed.input_dim() - 2 != trunk.output_dim() {
            return Err(NumericsError::Architecture("embedding input must be [z, r, t] with z the trunk output width"));
        }
        if film.condition_dim() < 3 || film.feature_dim() != hidden || trunk.input_dim() != hidden {
            return Err(NumericsError::Architecture("FiLM and trunk must match the embedding width"));
        }
        if skip.input_dim() != embed.input_dim() || skip.output_dim() != trunk.output_dim() || skip.layer_count() != 1 {
            return Err(NumericsError::Architecture("skip must be a single layer from [z, r, t] to the output"));
        }
        Ok(Self { embed, film, trunk, skip })
    }

    /// A network whose output is identically zero.
    pub fn zero(arch: VelocityArch) -> Self {
        let embed =
            DenseNet::zeros(&[arch.noise_dim + 2, arch.hidden], &[Activation::Identity]).expect("valid architecture");
        let film = FilmLayer::new(
            DenseNet::zeros(
                &[arch.cond_dim + 2, arch.cond_hidden, 2 * arch.hidden],
                &[Activation::Relu, Activation::Identity],
            )
            .expect("valid architecture"),
        )
        .expect("even FiLM output");
        let trunk =
            DenseNet::zeros(&[arch.hidden, arch.hidden, arch.noise_dim], &[Activation::Relu, Activation::Identity])
                .expect("valid architecture");
        let skip = DenseNet::zeros(&[arch.noise_dim + 2, arch.noise_dim], &[Activation::Identity])
            .expect("valid architecture");
        Self::from_parts(embed, film, trunk, skip).expect("consistent parts")
    }

    pub fn parts(&self) -> (&DenseNet, &FilmLayer, &DenseNet, &DenseNet) {
        (&self.embed, &self.film, &self.trunk, &self.skip)
    }

    pub fn parts_mut(&mut self) -> (&mut DenseNet, &mut FilmLayer, &mut DenseNet, &mut DenseNet) {
        (&mut self.embed, &mut self.film, &mut self.trunk, &mut self.skip)
    }

    pub fn noise_dim(&self) -> usize {
        self.trunk.output_dim()
    }

    pub fn cond_dim(&self) -> usize {
        self.film.condition_dim() - 2
    }

    pub fn hidden(&self) -> usize {
        self.embed.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.embed.param_count()
            + self.film.condition_net.param_count()
            + self.trunk.param_count()
            + self.skip.param_count()
    }

    /// All parameters in gradient-buffer order: embedding, FiLM, trunk, skip.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.embed
            .params()
            .iter()
            .chain(self.film.condition_net.params())
            .chain(self.trunk.params())
            .chain(self.skip.params())
    }

    /// Mutable parameter segments in gradient-buffer order.
    pub fn param_segments_mut(&mut self) -> [&mut [f64]; 4] {
        [self.embed.params_mut(), self.film.condition_net.params_mut(), self.trunk.params_mut(), self.skip.params_mut()]
    }

    fn input(&self, z: &[f64], r: f64, t: f64) -> Result<Vec<f64>, NumericsError> {
        if z.len() != self.noise_dim() {
            return Err(NumericsError::DimensionMismatch {
                what: "velocity input z",
                expected: self.noise_dim(),
                got: z.len(),
            });
        }
        let mut x = Vec::with_capacity(z.len() + 2);
        x.extend_from_slice(z);
        x.push(r);
        x.push(t);
        Ok(x)
    }

    fn film_input(&self, cond: &[f64], r: f64, t: f64) -> Result<Vec<f64>, NumericsError> {
        if cond.len() != self.cond_dim() {
            return Err(NumericsError::DimensionMismatch {
                what: "velocity condition",
                expected: self.cond_dim(),
                got: cond.len(),
            });
        }
        let mut c = Vec::with_capacity(cond.len() + 2);
        c.extend_from_slice(cond);
        c.push(r);
        c.push(t);
        Ok(c)
    }

    pub fn forward(&self, z: &[f64], r: f64, t: f64, cond: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let x = self.input(z, r, t)?;
        let h0 = self.embed.forward(&x)?;
        let (gamma, beta) = self.film.coefficients(&self.film_input(cond, r, t)?)?;
        let h: Vec<f64> = h0.iter().zip(gamma.iter().zip(&beta)).map(|(h, (g, b))| (g * h + b).max(0.0)).collect();
        let mut out = self.trunk.forward(&h)?;
        for (o, s) in out.iter_mut().zip(self.skip.forward(&x)?) {
            *o += s;
        }
        Ok(out)
    }

    pub fn trace(&self, z: &[f64], r: f64, t: f64, cond: &[f64]) -> Result<VelocityTrace, NumericsError> {
        let x = self.input(z, r, t)?;
        let embed = self.embed.forward_trace(&x)?;
        let film = self.film.coefficients_trace(&self.film_input(cond, r, t)?)?;
        let h0 = embed.output().expect("non-empty trace");
        let coeffs = film.output().expect("non-empty trace");
        let (gamma, beta) = coeffs.split_at(self.hidden());
        let modulated: Vec<f64> = h0.iter().zip(gamma.iter().zip(beta)).map(|(h, (g, b))| g * h + b).collect();
        let activated: Vec<f64> = modulated.iter().map(|v| v.max(0.0)).collect();
        let trunk = self.trunk.forward_trace(&activated)?;
        let skip = self.skip.forward_trace(&x)?;
        let output = trunk
            .output()
            .expect("non-empty trace")
            .iter()
            .zip(skip.output().expect("non-empty trace"))
            .map(|(a, b)| a + b)
            .collect();
        Ok(VelocityTrace { embed, film, modulated, trunk, skip, output })
    }

    /// Exact derivative of the output along `(dz, dr, dt)` with the
    /// condition held fixed.
    pub fn tangent(&self, trace: &VelocityTrace, dz: &[f64], dr: f64, dt: f64) -> Result<Vec<f64>, NumericsError> {
        let dir = self.input(dz, dr, dt)?;
        let h = self.hidden();
        let dh0 = self.embed.jvp_from_trace(&trace.embed, &dir)?;
        let mut dc = vec![0.0; self.cond_dim() + 2];
        dc[self.cond_dim()] = dr;
        dc[self.cond_dim() + 1] = dt;
        let dcoeffs = self.film.condition_net.jvp_from_trace(&trace.film, &dc)?;
        let h0 = trace.embed.output().ok_or(NumericsError::NotCached)?;
        let gamma = &trace.film.output().ok_or(NumericsError::NotCached)?[..h];
        let dh: Vec<f64> =
            (0..h)
                .map(|i| {
                    if trace.modulated[i] > 0.0 {
                        dcoeffs[i] * h0[i] + gamma[i] * dh0[i] + dcoeffs[h + i]
                    } else {
                        0.0
                    }
                })
                .collect();
        let mut out = self.trunk.jvp_from_trace(&trace.trunk, &dh)?;
        for (o, s) in out.iter_mut().zip(self.skip.jvp_from_trace(&trace.skip, &dir)?) {
            *o += s;
        }
        Ok(out)
    }

    /// Accumulates `∂⟨out_grad, u⟩/∂θ` into `grads` (length `param_count`,
    /// embedding, FiLM, trunk, skip).
    pub fn backward(&self, trace: &VelocityTrace, out_grad: &[f64], grads: &mut [f64]) -> Result<(), NumericsError> {
        if grads.len() != self.param_count() {
            return Err(NumericsError::DimensionMismatch {
                what: "velocity gradient",
                expected: self.param_count(),
                got: grads.len(),
            });
        }
        let (g_embed, rest) = grads.split_at_mut(self.embed.param_count());
        let (g_film, rest) = rest.split_at_mut(self.film.condition_net.param_count());
        let (g_trunk, g_skip) = rest.split_at_mut(self.trunk.param_count());
        self.skip.backward(&trace.skip, out_grad, g_skip)?;
        let d_act = self.trunk.backward(&trace.trunk, out_grad, g_trunk)?;
        let h = self.hidden();
        let h0 = trace.embed.output().ok_or(NumericsError::NotCached)?;
        let gamma = &trace.film.output().ok_or(NumericsError::NotCached)?[..h];
        let mut d_coeffs = vec![0.0; 2 * h];
        let mut d_h0 = vec![0.0; h];
        for i in 0..h {
            let d_mod = if trace.modulated[i] > 0.0 { d_act[i] } else { 0.0 };
            d_coeffs[i] = d_mod * h0[i];
            d_coeffs[h + i] = d_mod;
            d_h0[i] = d_mod * gamma[i];
        }
        self.film.condition_net.backward(&trace.film, &d_coeffs, g_film)?;
        self.embed.backward(&trace.embed, &d_h0, g_embed)?;
        Ok(())
    }

    /// Total derivative `d/dt u(z_t, r, t) = ∂_z u · v + ∂_t u`.
    pub fn total_derivative(
        &self,
        z: &[f64],
        r: f64,
        t: f64,
        cond: &[f64],
        v: &[f64],
        mode: DerivativeMode,
    ) -> Result<Vec<f64>, NumericsError> {
        match mode {
            DerivativeMode::ForwardMode => {
                let trace = self.trace(z, r, t, cond)?;
                self.tangent(&trace, v, 0.0, 1.0)
            }
            DerivativeMode::FiniteDifference => {
                if v.len() != z.len() {
                    return Err(NumericsError::DimensionMismatch {
                        what: "velocity direction",
                        expected: z.len(),
                        got: v.len(),
                    });
                }
                let shifted =
                    |sign: f64| -> Vec<f64> { z.iter().zip(v).map(|(a, b)| a + sign * FD_STEP * b).collect() };
                let plus = self.forward(&shifted(1.0), r, t + FD_STEP, cond)?;
                let minus = self.forward(&shifted(-1.0), r, t - FD_STEP, cond)?;
                Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * FD_STEP)).collect())
            }
        }
    }
}
