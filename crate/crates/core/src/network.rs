//! The model: one trainable-activation hidden layer plus a linear readout.
//!
//! Everything a collocation objective needs is closed form. `forward_jet` returns
//! the value u(x) = c + sum_k v_k Phi(z_k), z_k = W_k . x + b_k, together with the
//! input gradient and the per-coordinate second derivatives (no mixed terms; every
//! supported operator is built from the diagonal). `param_grad_accumulate` is its
//! hand-written adjoint: given linear coefficients on (value, grad, diag2) it adds
//! the parameter gradient of that scalar into a flat buffer.
//!
//! Parameters live in one flat vector, ordered W row-major, b, mu1, mu2, d, v, c
//! (the three activation blocks absent for tanh). The order is the serialization
//! contract for checkpoints and the layout every optimizer works against.

use std::io::{Read, Write};
use std::path::Path;

use crate::activation::{
    cauchy_jet, cauchy_param_sens_all, tanh_jet, CauchyParams, DEFAULT_INIT, D_FLOOR,
};
use crate::rng::CounterRng;
use crate::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 4] = b"CPNN";
const CHECKPOINT_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Cauchy,
    Tanh,
}

/// Offsets into the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub input_dim: usize,
    pub width: usize,
    pub kind: ActivationKind,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        let m = self.width;
        let base = m * self.input_dim + m + m + 1; // W, b, v, c
        match self.kind {
            ActivationKind::Cauchy => base + 3 * m,
            ActivationKind::Tanh => base,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn w_end(&self) -> usize {
        self.width * self.input_dim
    }

    fn b_end(&self) -> usize {
        self.w_end() + self.width
    }

    /// Activation-parameter block (mu1, mu2, d), empty for tanh.
    fn act_end(&self) -> usize {
        match self.kind {
            ActivationKind::Cauchy => self.b_end() + 3 * self.width,
            ActivationKind::Tanh => self.b_end(),
        }
    }

    /// Clamp every |d| up to the activation floor, preserving sign. No-op for tanh.
    pub fn clamp_d(&self, params: &mut [f64]) {
        if self.kind != ActivationKind::Cauchy {
            return;
        }
        let start = self.b_end() + 2 * self.width;
        for d in &mut params[start..start + self.width] {
            if d.abs() < D_FLOOR {
                *d = if d.is_sign_negative() { -D_FLOOR } else { D_FLOOR };
            }
        }
    }
}

/// Value, input gradient, and per-coordinate second derivatives at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub diag2: Vec<f64>,
}

impl Jet {
    pub fn zeros(dim: usize) -> Self {
        Jet { value: 0.0, grad: vec![0.0; dim], diag2: vec![0.0; dim] }
    }
}

/// A network jet plus the per-neuron cache (pre-activations and activation
/// derivatives) the adjoint pass reuses, so one activation sweep serves both
/// directions.
#[derive(Clone, Debug)]
pub struct NetJet {
    pub jet: Jet,
    z: Vec<f64>,
    act: [Vec<f64>; 4],
}

impl NetJet {
    pub fn new(input_dim: usize, width: usize) -> Self {
        NetJet {
            jet: Jet::zeros(input_dim),
            z: vec![0.0; width],
            act: std::array::from_fn(|_| vec![0.0; width]),
        }
    }

    pub fn pre_activations(&self) -> &[f64] {
        &self.z
    }

    pub fn activation_order(&self, k: usize) -> &[f64] {
        &self.act[k]
    }

    fn fit(&mut self, input_dim: usize, width: usize) {
        self.jet.grad.resize(input_dim, 0.0);
        self.jet.diag2.resize(input_dim, 0.0);
        self.z.resize(width, 0.0);
        for a in &mut self.act {
            a.resize(width, 0.0);
        }
    }
}

/// Linear coefficients on the jet channels: the scalar they define is
/// G = val * value + grad . jet_grad + diag2 . jet_diag2.
#[derive(Clone, Debug)]
pub struct JetCoeffs {
    pub val: f64,
    pub grad: Vec<f64>,
    pub diag2: Vec<f64>,
}

impl JetCoeffs {
    pub fn zeros(dim: usize) -> Self {
        JetCoeffs { val: 0.0, grad: vec![0.0; dim], diag2: vec![0.0; dim] }
    }

    pub fn value_only(val: f64, dim: usize) -> Self {
        JetCoeffs { val, grad: vec![0.0; dim], diag2: vec![0.0; dim] }
    }
}

/// Per-parameter initialization for the activation triples; layer weights are
/// drawn Glorot-style uniform from the seed regardless.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct InitConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub d: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { mu1: DEFAULT_INIT, mu2: DEFAULT_INIT, d: DEFAULT_INIT }
    }
}

#[derive(Clone, Debug)]
pub struct CauchyNet {
    layout: ParamLayout,
    params: Vec<f64>,
}

impl CauchyNet {
    /// Fresh network. Input weights and biases are uniform on
    /// [-sqrt(6/(input_dim + width)), +], output weights on the analogous
    /// output-layer bound, output bias zero, activation triples from `init`.
    pub fn init(
        input_dim: usize,
        width: usize,
        kind: ActivationKind,
        seed: u64,
        init: &InitConfig,
    ) -> Result<Self> {
        if input_dim == 0 || width == 0 {
            return Err(Error::Config(format!(
                "network dimensions must be positive, got input_dim={input_dim} width={width}"
            )));
        }
        if !(init.mu1.is_finite() && init.mu2.is_finite() && init.d.is_finite()) {
            return Err(Error::Config("non-finite activation initialization".into()));
        }
        if kind == ActivationKind::Cauchy && init.d == 0.0 {
            return Err(Error::Config(
                "activation scale d cannot be initialized to zero".into(),
            ));
        }

        let layout = ParamLayout { input_dim, width, kind };
        let mut params = vec![0.0; layout.len()];
        let r = CounterRng::new(seed).stream("init");
        let hidden_bound = (6.0 / (input_dim + width) as f64).sqrt();
        let out_bound = (6.0 / (width + 1) as f64).sqrt();

        let mut counter = 0u64;
        for p in &mut params[..layout.b_end()] {
            *p = r.symmetric_at(counter, hidden_bound);
            counter += 1;
        }
        if kind == ActivationKind::Cauchy {
            let m = width;
            let base = layout.b_end();
            params[base..base + m].fill(init.mu1);
            params[base + m..base + 2 * m].fill(init.mu2);
            params[base + 2 * m..base + 3 * m].fill(init.d);
        }
        let ve = layout.act_end();
        for p in &mut params[ve..ve + width] {
            *p = r.symmetric_at(counter, out_bound);
            counter += 1;
        }
        // output bias stays zero

        Ok(CauchyNet { layout, params })
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input_dim
    }

    pub fn width(&self) -> usize {
        self.layout.width
    }

    pub fn kind(&self) -> ActivationKind {
        self.layout.kind
    }

    pub fn parameter_count(&self) -> usize {
        self.layout.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        self.params.clone()
    }

    pub fn unflatten_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.params.len() {
            return Err(Error::Config(format!(
                "parameter vector length {} does not match network ({})",
                flat.len(),
                self.params.len()
            )));
        }
        if flat.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical("non-finite parameter vector".into()));
        }
        self.params.copy_from_slice(flat);
        Ok(())
    }

    /// Raw copy for the training hot path; callers handle finiteness themselves.
    pub fn set_params_unchecked(&mut self, flat: &[f64]) {
        self.params.copy_from_slice(flat);
    }

    pub fn clamp_d_floor(&mut self) {
        let layout = self.layout;
        layout.clamp_d(&mut self.params);
    }

    pub fn cauchy_param(&self, k: usize) -> Option<CauchyParams> {
        if self.layout.kind != ActivationKind::Cauchy {
            return None;
        }
        let m = self.layout.width;
        let base = self.layout.b_end();
        Some(CauchyParams {
            mu1: self.params[base + k],
            mu2: self.params[base + m + k],
            d: self.params[base + 2 * m + k],
        })
    }

    fn blocks(&self) -> (&[f64], &[f64], &[f64], f64) {
        let l = &self.layout;
        let (w, rest) = self.params.split_at(l.w_end());
        let (b, rest) = rest.split_at(l.width);
        let rest = &rest[l.act_end() - l.b_end()..];
        let (v, c) = rest.split_at(l.width);
        (w, b, v, c[0])
    }

    /// Value only; a third of the work of the full jet, for test-set evaluation.
    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.layout.input_dim, "input dimension mismatch");
        let (w, b, v, c) = self.blocks();
        let m = self.layout.width;
        let d_in = self.layout.input_dim;
        let mut acc = c;
        match self.layout.kind {
            ActivationKind::Cauchy => {
                let base = self.layout.b_end();
                let (mu1, rest) = self.params[base..].split_at(m);
                let (mu2, rest) = rest.split_at(m);
                let dd = &rest[..m];
                for k in 0..m {
                    let row = &w[k * d_in..(k + 1) * d_in];
                    let mut z = b[k];
                    for (&wj, &xj) in row.iter().zip(x) {
                        z += wj * xj;
                    }
                    acc += v[k] * (mu1[k] * z + mu2[k]) / (z * z + dd[k] * dd[k]);
                }
            }
            ActivationKind::Tanh => {
                for k in 0..m {
                    let row = &w[k * d_in..(k + 1) * d_in];
                    let mut z = b[k];
                    for (&wj, &xj) in row.iter().zip(x) {
                        z += wj * xj;
                    }
                    acc += v[k] * z.tanh();
                }
            }
        }
        acc
    }

    pub fn forward_jet(&self, x: &[f64]) -> NetJet {
        let mut out = NetJet::new(self.layout.input_dim, self.layout.width);
        self.forward_jet_into(x, &mut out);
        out
    }

    /// Jet evaluation into a reusable buffer. The neuron cache left in `out` is
    /// exactly what `param_grad_accumulate` consumes.
    pub fn forward_jet_into(&self, x: &[f64], out: &mut NetJet) {
        let d_in = self.layout.input_dim;
        let m = self.layout.width;
        assert_eq!(x.len(), d_in, "input dimension mismatch");
        out.fit(d_in, m);

        let (w, b, v, c) = self.blocks();
        let cauchy = self.layout.kind == ActivationKind::Cauchy;
        let base = self.layout.b_end();
        let (mu1, mu2, dval) = if cauchy {
            let s = &self.params[base..base + 3 * m];
            (&s[..m], &s[m..2 * m], &s[2 * m..3 * m])
        } else {
            (&[][..], &[][..], &[][..])
        };

        let mut value = c;
        out.jet.grad.fill(0.0);
        out.jet.diag2.fill(0.0);

        for k in 0..m {
            let row = &w[k * d_in..(k + 1) * d_in];
            let mut z = b[k];
            for (&wj, &xj) in row.iter().zip(x) {
                z += wj * xj;
            }
            out.z[k] = z;
            let a = if cauchy {
                cauchy_jet(z, CauchyParams { mu1: mu1[k], mu2: mu2[k], d: dval[k] })
            } else {
                tanh_jet(z)
            };
            out.act[0][k] = a[0];
            out.act[1][k] = a[1];
            out.act[2][k] = a[2];
            out.act[3][k] = a[3];

            let vk = v[k];
            value += vk * a[0];
            let g1 = vk * a[1];
            let g2 = vk * a[2];
            for ((gj, hj), &wj) in out
                .jet
                .grad
                .iter_mut()
                .zip(out.jet.diag2.iter_mut())
                .zip(row)
            {
                *gj += g1 * wj;
                *hj += g2 * wj * wj;
            }
        }
        out.jet.value = value;
    }

    /// Add scale * dG/dtheta into `out`, where
    /// G = coeffs.val * value + coeffs.grad . grad + coeffs.diag2 . diag2
    /// and `jet` came from `forward_jet_into` at the same x and parameters.
    pub fn param_grad_accumulate(
        &self,
        jet: &NetJet,
        x: &[f64],
        coeffs: &JetCoeffs,
        scale: f64,
        out: &mut [f64],
    ) {
        let d_in = self.layout.input_dim;
        let m = self.layout.width;
        assert_eq!(x.len(), d_in, "input dimension mismatch");
        assert_eq!(coeffs.grad.len(), d_in, "gradient coefficient shape");
        assert_eq!(coeffs.diag2.len(), d_in, "second-derivative coefficient shape");
        assert_eq!(out.len(), self.layout.len(), "gradient buffer length");

        let cauchy = self.layout.kind == ActivationKind::Cauchy;
        let (w, _, v, _) = self.blocks();
        let base = self.layout.b_end();
        let (mu1s, mu2s, ds) = if cauchy {
            let s = &self.params[base..base + 3 * m];
            (&s[..m], &s[m..2 * m], &s[2 * m..3 * m])
        } else {
            (&[][..], &[][..], &[][..])
        };

        let av = coeffs.val;
        let ag = &coeffs.grad;
        let ad = &coeffs.diag2;

        // split the output buffer into parameter blocks once
        let (gw, rest) = out.split_at_mut(m * d_in);
        let (gb, rest) = rest.split_at_mut(m);
        let (gmu1, gmu2, gd, rest) = if cauchy {
            let (gmu1, rest) = rest.split_at_mut(m);
            let (gmu2, rest) = rest.split_at_mut(m);
            let (gd, rest) = rest.split_at_mut(m);
            (gmu1, gmu2, gd, rest)
        } else {
            (&mut [][..], &mut [][..], &mut [][..], rest)
        };
        let (gv, gc) = rest.split_at_mut(m);

        gc[0] += scale * av;

        let (ph0, ph1, ph2, ph3) = (&jet.act[0], &jet.act[1], &jet.act[2], &jet.act[3]);
        for k in 0..m {
            let row = &w[k * d_in..(k + 1) * d_in];
            // channel weights collapsed onto this neuron
            let mut a1 = 0.0;
            let mut a2 = 0.0;
            for (&wj, (&agj, &adj)) in row.iter().zip(ag.iter().zip(ad.iter())) {
                a1 += agj * wj;
                a2 += adj * wj * wj;
            }

            let (p0, p1, p2, p3) = (ph0[k], ph1[k], ph2[k], ph3[k]);
            gv[k] += scale * (av * p0 + a1 * p1 + a2 * p2);

            let sv = scale * v[k];
            let gz = sv * (av * p1 + a1 * p2 + a2 * p3);
            gb[k] += gz;
            let gw_row = &mut gw[k * d_in..(k + 1) * d_in];
            for ((gwj, &wj), ((&xj, &agj), &adj)) in gw_row
                .iter_mut()
                .zip(row)
                .zip(x.iter().zip(ag.iter()).zip(ad.iter()))
            {
                *gwj += gz * xj + sv * (agj * p1 + 2.0 * adj * wj * p2);
            }

            if cauchy {
                let p = CauchyParams { mu1: mu1s[k], mu2: mu2s[k], d: ds[k] };
                let sens = cauchy_param_sens_all(jet.z[k], p);
                gmu1[k] += sv * (av * sens[0][0] + a1 * sens[1][0] + a2 * sens[2][0]);
                gmu2[k] += sv * (av * sens[0][1] + a1 * sens[1][1] + a2 * sens[2][1]);
                gd[k] += sv * (av * sens[0][2] + a1 * sens[1][2] + a2 * sens[2][2]);
            }
        }
    }

    /// Allocating convenience wrapper: gradient of the coefficient functional at x.
    pub fn param_grad(&self, x: &[f64], coeffs: &JetCoeffs) -> Vec<f64> {
        let jet = self.forward_jet(x);
        let mut out = vec![0.0; self.layout.len()];
        self.param_grad_accumulate(&jet, x, coeffs, 1.0, &mut out);
        out
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(14 + 8 * self.params.len());
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.push(CHECKPOINT_VERSION);
        buf.push(match self.layout.kind {
            ActivationKind::Cauchy => 0,
            ActivationKind::Tanh => 1,
        });
        buf.extend_from_slice(&(self.layout.input_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.layout.width as u32).to_le_bytes());
        for p in &self.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 14 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        if bytes[4] != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {}", bytes[4])));
        }
        let kind = match bytes[5] {
            0 => ActivationKind::Cauchy,
            1 => ActivationKind::Tanh,
            k => return Err(Error::Format(format!("unknown activation tag {k}"))),
        };
        let input_dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let width = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let layout = ParamLayout { input_dim, width, kind };
        let body = &bytes[14..];
        if body.len() != 8 * layout.len() {
            return Err(Error::Format(format!(
                "checkpoint body holds {} bytes, layout needs {}",
                body.len(),
                8 * layout.len()
            )));
        }
        let params: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(CauchyNet { layout, params })
    }
}
