//! Real-input discrete Fourier transforms along one axis of a tensor.
//!
//! Conventions, fixed once for the whole crate:
//! - forward transform is unnormalized: `X[k] = sum_t x[t] exp(-2*pi*j*k*t/n)`
//! - [`rfft`] keeps the `n/2 + 1` unique bins (DC and, for even `n`, Nyquist)
//! - [`irfft`] applies the `1/n` scaling, so `irfft(rfft(x), n) == x`
//!
//! Power-of-two lengths run an iterative radix-2 Cooley-Tukey; everything
//! else goes through Bluestein's chirp-z algorithm on a padded power of two.
//! All kernels operate on `[outer][n][inner]` blocks so a transform along any
//! axis of a row-major tensor touches memory contiguously; `inner > 1` lanes
//! share twiddles and vectorize.
//!
//! [`naive_dft`] is the quadratic reference evaluation of the same sum. It is
//! the oracle the fast paths are tested against and is not used by any model
//! code.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{scalar_from_usize, Scalar};
use crate::tensor::{ComplexTensor, RealTensor};

/// Minimum total butterfly work before a transform spreads over threads.
const PAR_FFT_THRESHOLD: usize = 1 << 15;

/// Precomputed transform of one length, reusable across lanes and calls.
pub struct FftPlan<S: Scalar> {
    n: usize,
    kind: PlanKind<S>,
}

enum PlanKind<S: Scalar> {
    /// Length 1: the transform is the identity.
    Trivial,
    Radix2(Radix2Tables<S>),
    Bluestein(Box<BluesteinTables<S>>),
}

struct Radix2Tables<S> {
    /// cos(2*pi*i/n), sin(2*pi*i/n) for i in 0..n/2.
    cos: Vec<S>,
    sin: Vec<S>,
}

struct BluesteinTables<S: Scalar> {
    /// Padded power-of-two convolution length, >= 2n - 1.
    m: usize,
    sub: Radix2Tables<S>,
    /// cos/sin of pi * t^2 / n (t^2 reduced mod 2n first for accuracy).
    chirp_cos: Vec<S>,
    chirp_sin: Vec<S>,
    /// FFT_m of the chirp kernel, per transform direction.
    bhat_fwd: (Vec<S>, Vec<S>),
    bhat_bwd: (Vec<S>, Vec<S>),
}

impl<S: Scalar> FftPlan<S> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform length must be positive");
        let kind = if n == 1 {
            PlanKind::Trivial
        } else if n.is_power_of_two() {
            PlanKind::Radix2(Radix2Tables::new(n))
        } else {
            PlanKind::Bluestein(Box::new(BluesteinTables::new(n)))
        };
        FftPlan { n, kind }
    }

    /// Unnormalized forward transform of every `[n][inner]` slab in the
    /// buffers (`re.len() == im.len() == outer * n * inner`).
    pub fn forward_all(&self, re: &mut [S], im: &mut [S], inner: usize) {
        self.execute_all(re, im, inner, true);
    }

    /// Unnormalized backward transform (`sum_k X[k] exp(+2*pi*j*k*t/n)`).
    pub fn backward_all(&self, re: &mut [S], im: &mut [S], inner: usize) {
        self.execute_all(re, im, inner, false);
    }

    fn execute_all(&self, re: &mut [S], im: &mut [S], inner: usize, forward: bool) {
        if matches!(self.kind, PlanKind::Trivial) {
            return;
        }
        let slab = self.n * inner;
        assert_eq!(re.len(), im.len());
        assert_eq!(re.len() % slab, 0, "buffer not a whole number of slabs");
        let outer = re.len() / slab;
        let work = outer * slab * self.n.trailing_zeros().max(1) as usize;
        if outer > 1 && work >= PAR_FFT_THRESHOLD {
            re.par_chunks_mut(slab)
                .zip(im.par_chunks_mut(slab))
                .for_each_init(Scratch::default, |scratch, (r, i)| {
                    self.execute_one(r, i, inner, forward, scratch);
                });
        } else {
            let mut scratch = Scratch::default();
            for (r, i) in re.chunks_mut(slab).zip(im.chunks_mut(slab)) {
                self.execute_one(r, i, inner, forward, &mut scratch);
            }
        }
    }

    fn execute_one(&self, re: &mut [S], im: &mut [S], inner: usize, forward: bool, scratch: &mut Scratch<S>) {
        match &self.kind {
            PlanKind::Trivial => {}
            PlanKind::Radix2(tables) => tables.execute(re, im, inner, forward),
            PlanKind::Bluestein(tables) => tables.execute(re, im, inner, forward, scratch),
        }
    }
}

#[derive(Default)]
struct Scratch<S> {
    re: Vec<S>,
    im: Vec<S>,
}

impl<S: Scalar> Radix2Tables<S> {
    fn new(n: usize) -> Self {
        let half = n / 2;
        let mut cos = Vec::with_capacity(half);
        let mut sin = Vec::with_capacity(half);
        for i in 0..half {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            cos.push(from_f64(theta.cos()));
            sin.push(from_f64(theta.sin()));
        }
        Radix2Tables { cos, sin }
    }

    fn execute(&self, re: &mut [S], im: &mut [S], inner: usize, forward: bool) {
        let n = re.len() / inner;
        debug_assert!(n.is_power_of_two() && n >= 2);
        let levels = n.trailing_zeros();

        // Bit-reversed block permutation.
        for i in 0..n {
            let j = reverse_bits(i, levels);
            if j > i {
                let (a, b) = (i * inner, j * inner);
                for q in 0..inner {
                    re.swap(a + q, b + q);
                    im.swap(a + q, b + q);
                }
            }
        }

        // Decimation-in-time butterflies; twiddle sign selects direction.
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let tablestep = n / size;
            for start in (0..n).step_by(size) {
                let mut k = 0;
                for j in start..start + half {
                    let c = self.cos[k];
                    let s = if forward { self.sin[k] } else { -self.sin[k] };
                    let lo = j * inner;
                    let hi = (j + half) * inner;
                    let (re_head, re_tail) = re.split_at_mut(hi);
                    let (im_head, im_tail) = im.split_at_mut(hi);
                    let relo = &mut re_head[lo..lo + inner];
                    let imlo = &mut im_head[lo..lo + inner];
                    let rehi = &mut re_tail[..inner];
                    let imhi = &mut im_tail[..inner];
                    for q in 0..inner {
                        let xr = rehi[q];
                        let xi = imhi[q];
                        let tpre = xr * c + xi * s;
                        let tpim = xi * c - xr * s;
                        rehi[q] = relo[q] - tpre;
                        imhi[q] = imlo[q] - tpim;
                        relo[q] += tpre;
                        imlo[q] += tpim;
                    }
                    k += tablestep;
                }
            }
            size *= 2;
        }
    }
}

impl<S: Scalar> BluesteinTables<S> {
    fn new(n: usize) -> Self {
        let mut m = 1usize;
        while m < 2 * n + 1 {
            m *= 2;
        }
        let sub = Radix2Tables::new(m);

        let mut chirp_cos = Vec::with_capacity(n);
        let mut chirp_sin = Vec::with_capacity(n);
        let mut cc64 = Vec::with_capacity(n);
        let mut cs64 = Vec::with_capacity(n);
        for t in 0..n {
            // t^2 mod 2n keeps the angle argument small and exact.
            let j = (t * t) % (2 * n);
            let theta = std::f64::consts::PI * j as f64 / n as f64;
            cc64.push(theta.cos());
            cs64.push(theta.sin());
            chirp_cos.push(from_f64(theta.cos()));
            chirp_sin.push(from_f64(theta.sin()));
        }

        // Kernel b_t = exp(sign * j * pi * t^2 / n) wrapped circularly;
        // its length-m FFT is what the convolution multiplies by.
        let build_bhat = |sign: f64| -> (Vec<S>, Vec<S>) {
            let mut bre = vec![0.0f64; m];
            let mut bim = vec![0.0f64; m];
            bre[0] = cc64[0];
            bim[0] = sign * cs64[0];
            for t in 1..n {
                bre[t] = cc64[t];
                bim[t] = sign * cs64[t];
                bre[m - t] = bre[t];
                bim[m - t] = bim[t];
            }
            let mut bre_s: Vec<S> = bre.iter().map(|&v| from_f64(v)).collect();
            let mut bim_s: Vec<S> = bim.iter().map(|&v| from_f64(v)).collect();
            sub_execute(&sub, &mut bre_s, &mut bim_s, 1, true);
            (bre_s, bim_s)
        };
        // Forward transform convolves against exp(+j...), backward against exp(-j...).
        let bhat_fwd = build_bhat(1.0);
        let bhat_bwd = build_bhat(-1.0);

        BluesteinTables {
            m,
            sub,
            chirp_cos,
            chirp_sin,
            bhat_fwd,
            bhat_bwd,
        }
    }

    fn execute(&self, re: &mut [S], im: &mut [S], inner: usize, forward: bool, scratch: &mut Scratch<S>) {
        let n = re.len() / inner;
        let m = self.m;
        scratch.re.clear();
        scratch.re.resize(m * inner, S::zero());
        scratch.im.clear();
        scratch.im.resize(m * inner, S::zero());
        let are = &mut scratch.re;
        let aim = &mut scratch.im;

        // a_t = x_t * exp(-sign * j * theta_t)
        for t in 0..n {
            let c = self.chirp_cos[t];
            let s = if forward { self.chirp_sin[t] } else { -self.chirp_sin[t] };
            let base = t * inner;
            for q in 0..inner {
                let xr = re[base + q];
                let xi = im[base + q];
                are[base + q] = xr * c + xi * s;
                aim[base + q] = xi * c - xr * s;
            }
        }

        sub_execute(&self.sub, are, aim, inner, true);

        let (bre, bim) = if forward { &self.bhat_fwd } else { &self.bhat_bwd };
        for k in 0..m {
            let (br, bi) = (bre[k], bim[k]);
            let base = k * inner;
            for q in 0..inner {
                let xr = are[base + q];
                let xi = aim[base + q];
                are[base + q] = xr * br - xi * bi;
                aim[base + q] = xr * bi + xi * br;
            }
        }

        // Inverse length-m transform (backward butterflies, then 1/m).
        sub_execute(&self.sub, are, aim, inner, false);
        let inv_m = S::one() / scalar_from_usize::<S>(m);

        for k in 0..n {
            let c = self.chirp_cos[k];
            let s = if forward { self.chirp_sin[k] } else { -self.chirp_sin[k] };
            let base = k * inner;
            for q in 0..inner {
                let xr = are[base + q] * inv_m;
                let xi = aim[base + q] * inv_m;
                re[base + q] = xr * c + xi * s;
                im[base + q] = xi * c - xr * s;
            }
        }
    }
}

fn sub_execute<S: Scalar>(tables: &Radix2Tables<S>, re: &mut [S], im: &mut [S], inner: usize, forward: bool) {
    tables.execute(re, im, inner, forward);
}

fn reverse_bits(x: usize, bits: u32) -> usize {
    let mut x = x;
    let mut y = 0usize;
    for _ in 0..bits {
        y = (y << 1) | (x & 1);
        x >>= 1;
    }
    y
}

fn from_f64<S: Scalar>(v: f64) -> S {
    num_traits::FromPrimitive::from_f64(v).expect("f64 representable as scalar")
}

/// Number of unique real-input spectrum bins for a length-`n` signal.
pub fn rfft_bins(n: usize) -> usize {
    n / 2 + 1
}

fn axis_parts(shape: &[usize], axis: usize) -> (usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, inner)
}

fn check_axis(t_shape: &[usize], axis: usize) -> Result<()> {
    if axis >= t_shape.len() {
        return Err(Error::dimension(format!(
            "axis {axis} out of range for shape {t_shape:?}"
        )));
    }
    Ok(())
}

/// Forward real transform along `axis`, keeping the `n/2 + 1` unique bins.
pub fn rfft<S: Scalar>(x: &RealTensor<S>, axis: usize) -> Result<ComplexTensor<S>> {
    check_axis(x.shape(), axis)?;
    let n = x.dim(axis);
    let nb = rfft_bins(n);
    let (outer, inner) = axis_parts(x.shape(), axis);

    let plan = FftPlan::new(n);
    let mut re = x.data().to_vec();
    let mut im = vec![S::zero(); re.len()];
    plan.forward_all(&mut re, &mut im, inner);

    let mut oshape = x.shape().to_vec();
    oshape[axis] = nb;
    let mut out_re = Vec::with_capacity(outer * nb * inner);
    let mut out_im = Vec::with_capacity(outer * nb * inner);
    for o in 0..outer {
        let base = o * n * inner;
        out_re.extend_from_slice(&re[base..base + nb * inner]);
        out_im.extend_from_slice(&im[base..base + nb * inner]);
    }
    ComplexTensor::new(
        RealTensor::from_vec(&oshape, out_re)?,
        RealTensor::from_vec(&oshape, out_im)?,
    )
}

/// Inverse of [`rfft`]: reconstructs the conjugate-symmetric full spectrum,
/// runs the backward transform and applies the `1/n` scaling.
pub fn irfft<S: Scalar>(xf: &ComplexTensor<S>, n: usize, axis: usize) -> Result<RealTensor<S>> {
    check_axis(xf.shape(), axis)?;
    let nb = rfft_bins(n);
    if xf.shape()[axis] != nb {
        return Err(Error::dimension(format!(
            "irfft along axis {axis}: spectrum shape {:?} carries {} bins but output length {} expects {}",
            xf.shape(),
            xf.shape()[axis],
            n,
            nb
        )));
    }
    let (outer, inner) = axis_parts(xf.shape(), axis);

    let mut re = vec![S::zero(); outer * n * inner];
    let mut im = vec![S::zero(); outer * n * inner];
    let sre = xf.re.data();
    let sim = xf.im.data();
    for o in 0..outer {
        let dst = o * n * inner;
        let src = o * nb * inner;
        re[dst..dst + nb * inner].copy_from_slice(&sre[src..src + nb * inner]);
        im[dst..dst + nb * inner].copy_from_slice(&sim[src..src + nb * inner]);
        // Mirrored bins carry the conjugate of their unique counterpart.
        for k in nb..n {
            let mirror = src + (n - k) * inner;
            let base = dst + k * inner;
            for q in 0..inner {
                re[base + q] = sre[mirror + q];
                im[base + q] = -sim[mirror + q];
            }
        }
    }

    let plan = FftPlan::new(n);
    plan.backward_all(&mut re, &mut im, inner);

    let inv_n = S::one() / scalar_from_usize::<S>(n);
    for v in re.iter_mut() {
        *v *= inv_n;
    }
    let mut oshape = xf.shape().to_vec();
    oshape[axis] = n;
    RealTensor::from_vec(&oshape, re)
}

/// Direct quadratic evaluation of the DFT sum along `axis`, all `n` bins.
pub fn naive_dft<S: Scalar>(x: &RealTensor<S>, axis: usize) -> Result<ComplexTensor<S>> {
    check_axis(x.shape(), axis)?;
    let n = x.dim(axis);
    let (outer, inner) = axis_parts(x.shape(), axis);

    // cos/sin of 2*pi*i/n for i in 0..n; indexed by (k*t) mod n.
    let mut cos = Vec::with_capacity(n);
    let mut sin = Vec::with_capacity(n);
    for i in 0..n {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        cos.push(from_f64::<S>(theta.cos()));
        sin.push(from_f64::<S>(theta.sin()));
    }

    let data = x.data();
    let mut out_re = vec![S::zero(); data.len()];
    let mut out_im = vec![S::zero(); data.len()];
    for o in 0..outer {
        let base = o * n * inner;
        for q in 0..inner {
            for k in 0..n {
                let mut acc_re = S::zero();
                let mut acc_im = S::zero();
                for t in 0..n {
                    let v = data[base + t * inner + q];
                    let idx = (k * t) % n;
                    acc_re += v * cos[idx];
                    acc_im -= v * sin[idx];
                }
                out_re[base + k * inner + q] = acc_re;
                out_im[base + k * inner + q] = acc_im;
            }
        }
    }
    ComplexTensor::new(
        RealTensor::from_vec(x.shape(), out_re)?,
        RealTensor::from_vec(x.shape(), out_im)?,
    )
}

/// Scale every bin-`k` slab along `axis` by `f(k)`, in place, on both parts.
fn scale_bins_along_axis<S: Scalar>(t: &mut ComplexTensor<S>, axis: usize, f: impl Fn(usize) -> S) {
    let nb = t.shape()[axis];
    let (outer, inner) = axis_parts(t.shape(), axis);
    let apply = |buf: &mut [S], f: &dyn Fn(usize) -> S| {
        for o in 0..outer {
            for k in 0..nb {
                let w = f(k);
                let base = (o * nb + k) * inner;
                for v in &mut buf[base..base + inner] {
                    *v *= w;
                }
            }
        }
    };
    apply(t.re.data_mut(), &f);
    apply(t.im.data_mut(), &f);
}

/// Weight of bin `k` when folding a half spectrum back onto `n` time points:
/// DC and (even `n`) Nyquist appear once, every other bin twice.
fn shared_bin_weight(k: usize, n: usize) -> f64 {
    if k == 0 || (n % 2 == 0 && k == n / 2) {
        1.0
    } else {
        2.0
    }
}

/// Adjoint of [`rfft`] as a linear map from time samples to half-spectrum
/// coefficients: the scaled inverse transform with shared-bin weighting.
///
/// Satisfies `<rfft(x), g> == <x, rfft_adjoint(g, n)>` where the left inner
/// product runs over split re/im parts.
pub fn rfft_adjoint<S: Scalar>(g: &ComplexTensor<S>, n: usize, axis: usize) -> Result<RealTensor<S>> {
    rfft_adjoint_impl(g, n, axis, true)
}

/// Negative-control variant with the shared-bin weighting disabled.
#[cfg(feature = "fault-injection")]
pub fn rfft_adjoint_unweighted<S: Scalar>(
    g: &ComplexTensor<S>,
    n: usize,
    axis: usize,
) -> Result<RealTensor<S>> {
    rfft_adjoint_impl(g, n, axis, false)
}

pub(crate) fn rfft_adjoint_impl<S: Scalar>(
    g: &ComplexTensor<S>,
    n: usize,
    axis: usize,
    weighted: bool,
) -> Result<RealTensor<S>> {
    let mut gw = g.clone();
    if weighted {
        scale_bins_along_axis(&mut gw, axis, |k| from_f64(1.0 / shared_bin_weight(k, n)));
    }
    let y = irfft(&gw, n, axis)?;
    Ok(y.scale(scalar_from_usize::<S>(n)))
}

/// Adjoint of [`irfft`]: forward transform with per-bin weights `w_k / n`.
///
/// Satisfies `<irfft(Y, n), u> == <Y, irfft_adjoint(u)>`.
pub fn irfft_adjoint<S: Scalar>(u: &RealTensor<S>, axis: usize) -> Result<ComplexTensor<S>> {
    let n = u.dim(axis);
    let mut g = rfft(u, axis)?;
    let inv_n = 1.0 / n as f64;
    scale_bins_along_axis(&mut g, axis, |k| from_f64(shared_bin_weight(k, n) * inv_n));
    Ok(g)
}

/// Circular convolution of two equal-length 1-d signals:
/// `y[t] = sum_tau h[tau] * w[(t - tau) mod n]`.
pub fn circular_conv<S: Scalar>(h: &RealTensor<S>, w: &RealTensor<S>) -> Result<RealTensor<S>> {
    if h.rank() != 1 || w.rank() != 1 || h.numel() != w.numel() {
        return Err(Error::dimension(format!(
            "circular_conv expects equal 1-d lengths, got {:?} and {:?}",
            h.shape(),
            w.shape()
        )));
    }
    let n = h.numel();
    let hd = h.data();
    let wd = w.data();
    let mut out = vec![S::zero(); n];
    for (t, o) in out.iter_mut().enumerate() {
        let mut acc = S::zero();
        for (tau, &hv) in hd.iter().enumerate() {
            let idx = (t + n - tau) % n;
            acc += hv * wd[idx];
        }
        *o = acc;
    }
    RealTensor::from_vec(&[n], out)
}
