//! Dilated 1D convolution with "same" zero padding, computed as an im2col
//! matrix product.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

/// Derivative of [`selu`] (the left branch is used at 0).
pub fn selu_grad(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

/// Kernel width and tap spacing of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub kernel: usize,
    pub dilation: usize,
}

impl LayerShape {
    pub fn new(kernel: usize, dilation: usize) -> Self {
        LayerShape { kernel, dilation }
    }

    /// Zeros added before and after the sequence. An odd total puts the
    /// extra zero on the right.
    pub fn padding(&self) -> (usize, usize) {
        let total = (self.kernel - 1) * self.dilation;
        (total / 2, total - total / 2)
    }
}

/// Weights are stored as `[out, kernel * in]` with the tap index major, so
/// `weight[[o, k * in + c]]` multiplies channel `c` at tap `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub shape: LayerShape,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ConvLayer {
    pub fn zeros(shape: LayerShape, in_channels: usize, out_channels: usize) -> Self {
        ConvLayer {
            shape,
            in_channels,
            out_channels,
            weight: Array2::zeros((out_channels, shape.kernel * in_channels)),
            bias: Array1::zeros(out_channels),
        }
    }

    /// LeCun-normal weights (variance `1 / fan_in`), zero bias.
    pub fn lecun_normal<R: Rng>(shape: LayerShape, in_channels: usize, out_channels: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(shape, in_channels, out_channels);
        let fan_in = (shape.kernel * in_channels) as f64;
        let normal = Normal::new(0.0, fan_in.sqrt().recip()).expect("positive std");
        layer.weight.mapv_inplace(|_| normal.sample(rng));
        layer
    }

    /// Weight multiplying input channel `c` at tap `k` for output `o`.
    pub fn tap(&self, o: usize, c: usize, k: usize) -> f64 {
        self.weight[[o, k * self.in_channels + c]]
    }

    pub fn set_tap(&mut self, o: usize, c: usize, k: usize, value: f64) {
        self.weight[[o, k * self.in_channels + c]] = value;
    }

    /// Unfolds `input` (`L x in`) into `L x (kernel * in)`: row `t` holds
    /// the padded input at `t + k * dilation` for every tap `k`.
    pub fn im2col(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let (len, c_in) = input.dim();
        let (left, _) = self.shape.padding();
        let mut col = Array2::zeros((len, self.shape.kernel * c_in));
        for k in 0..self.shape.kernel {
            let shift = (k * self.shape.dilation) as isize - left as isize;
            let lo = (-shift).max(0) as usize;
            let hi = (len as isize - shift).clamp(0, len as isize) as usize;
            if lo >= hi {
                continue;
            }
            let src_lo = (lo as isize + shift) as usize;
            let src_hi = (hi as isize + shift) as usize;
            col.slice_mut(s![lo..hi, k * c_in..(k + 1) * c_in])
                .assign(&input.slice(s![src_lo..src_hi, ..]));
        }
        col
    }

    /// Adjoint of [`im2col`](Self::im2col): folds column gradients back onto
    /// the input positions.
    pub fn col2im(&self, dcol: ArrayView2<f64>) -> Array2<f64> {
        let len = dcol.nrows();
        let c_in = self.in_channels;
        let (left, _) = self.shape.padding();
        let mut dx = Array2::zeros((len, c_in));
        for k in 0..self.shape.kernel {
            let shift = (k * self.shape.dilation) as isize - left as isize;
            let lo = (-shift).max(0) as usize;
            let hi = (len as isize - shift).clamp(0, len as isize) as usize;
            if lo >= hi {
                continue;
            }
            let src_lo = (lo as isize + shift) as usize;
            let src_hi = (hi as isize + shift) as usize;
            let mut target = dx.slice_mut(s![src_lo..src_hi, ..]);
            target += &dcol.slice(s![lo..hi, k * c_in..(k + 1) * c_in]);
        }
        dx
    }

    /// `out[t, o] = bias[o] + sum_{k,c} w[o, c, k] * padded[t + k*dilation, c]`.
    /// Output length equals input length.
    pub fn forward(&self, input: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(input.ncols(), self.in_channels, "input channels");
        let col = self.im2col(input);
        self.forward_col(&col)
    }

    pub(crate) fn forward_col(&self, col: &Array2<f64>) -> Array2<f64> {
        let mut out = col.dot(&self.weight.t());
        out += &self.bias;
        out
    }

    /// Gradients of weight and bias for an output gradient `dout`, given the
    /// unfolded input used in the forward pass.
    pub(crate) fn param_grads(&self, col: &Array2<f64>, dout: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
        (dout.t().dot(col), dout.sum_axis(Axis(0)))
    }

    /// Gradient with respect to the layer input.
    pub(crate) fn input_grad(&self, dout: &Array2<f64>) -> Array2<f64> {
        let dcol = dout.dot(&self.weight);
        self.col2im(dcol.view())
    }
}
