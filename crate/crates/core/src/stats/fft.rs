//! Linear convolution of real sequences: direct for small inputs, radix-2
//! FFT otherwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

const DIRECT_LIMIT: usize = 1 << 21;

pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().saturating_mul(b.len()) <= DIRECT_LIMIT {
        convolve_direct(a, b)
    } else {
        convolve_fft(a, b)
    }
}

pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

pub fn convolve_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let n = len.next_power_of_two();
    // Pack both real inputs into one complex transform.
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    re[..a.len()].copy_from_slice(a);
    im[..b.len()].copy_from_slice(b);
    let twiddles = Twiddles::new(n);
    fft_in_place(&mut re, &mut im, &twiddles, false);

    let mut pr = vec![0.0; n];
    let mut pi = vec![0.0; n];
    for k in 0..n {
        let j = (n - k) % n;
        // A = (X_k + conj X_j) / 2, B = (X_k - conj X_j) / 2i
        let ar = 0.5 * (re[k] + re[j]);
        let ai = 0.5 * (im[k] - im[j]);
        let br = 0.5 * (im[k] + im[j]);
        let bi = -0.5 * (re[k] - re[j]);
        pr[k] = ar * br - ai * bi;
        pi[k] = ar * bi + ai * br;
    }
    fft_in_place(&mut pr, &mut pi, &twiddles, true);
    let scale = 1.0 / n as f64;
    pr.truncate(len);
    pr.iter_mut().for_each(|v| *v *= scale);
    pr
}

struct Twiddles {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(n: usize) -> Self {
        let half = n / 2;
        let step = core::f64::consts::TAU / n as f64;
        Self {
            cos: (0..half).map(|k| math::cos(step * k as f64)).collect(),
            sin: (0..half).map(|k| math::sin(step * k as f64)).collect(),
        }
    }
}

fn fft_in_place(re: &mut [f64], im: &mut [f64], tw: &Twiddles, inverse: bool) {
    let n = re.len();
    let bits = n.trailing_zeros();
    if n <= 1 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let stride = n / size;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let wr = tw.cos[k * stride];
                let wi = sign * tw.sin[k * stride];
                let (u, v) = (start + k, start + k + half);
                let tr = re[v] * wr - im[v] * wi;
                let ti = re[v] * wi + im[v] * wr;
                re[v] = re[u] - tr;
                im[v] = im[u] - ti;
                re[u] += tr;
                im[u] += ti;
            }
        }
        size *= 2;
    }
}
