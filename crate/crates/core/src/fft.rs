//! Mixed-radix fast Fourier transform.
//!
//! Computes the unnormalized DFT `X[k] = sum_n x[n] * exp(-2*pi*i*k*n/N)` for
//! arbitrary N by recursive Cooley-Tukey decomposition over the smallest prime
//! factor. Lengths with a large prime factor fall back to direct evaluation at
//! that level; the window lengths used by the feature extractor (e.g. 12000
//! samples) are 5-smooth, so the fast path always applies there.

use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn add(self, o: Complex) -> Complex {
        Complex {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    fn mul(self, o: Complex) -> Complex {
        Complex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

fn smallest_prime_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut p = 3;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 2;
    }
    n
}

/// Precomputed twiddle table for transforms of one fixed length.
pub(crate) struct FftPlan {
    n: usize,
    /// twiddle[j] = exp(-2*pi*i*j/n)
    twiddle: Vec<Complex>,
}

impl FftPlan {
    pub fn new(n: usize) -> FftPlan {
        assert!(n >= 1, "fft length must be positive");
        let twiddle = (0..n)
            .map(|j| {
                let angle = -TAU * j as f64 / n as f64;
                Complex {
                    re: angle.cos(),
                    im: angle.sin(),
                }
            })
            .collect();
        FftPlan { n, twiddle }
    }

    pub fn fft(&self, input: &[Complex]) -> Vec<Complex> {
        assert_eq!(input.len(), self.n, "input length does not match plan");
        self.transform(input, 1)
    }

    /// Recursive decimation in time. A sub-problem of length m uses every
    /// `stride`-th entry of the root twiddle table: exp(-2*pi*i*j/m) =
    /// twiddle[j * stride] with stride = n/m.
    fn transform(&self, x: &[Complex], stride: usize) -> Vec<Complex> {
        let m = x.len();
        if m == 1 {
            return vec![x[0]];
        }
        let p = smallest_prime_factor(m);
        if p == m {
            return self.direct(x, stride);
        }
        let q = m / p;
        let subs: Vec<Vec<Complex>> = (0..p)
            .map(|r| {
                let sub: Vec<Complex> = (0..q).map(|j| x[j * p + r]).collect();
                self.transform(&sub, stride * p)
            })
            .collect();
        let mut out = vec![Complex::ZERO; m];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = subs[0][k % q];
            for (r, sub) in subs.iter().enumerate().skip(1) {
                let w = self.twiddle[(k * r) % m * stride];
                acc = acc.add(w.mul(sub[k % q]));
            }
            *slot = acc;
        }
        out
    }

    /// O(m^2) evaluation for prime lengths.
    fn direct(&self, x: &[Complex], stride: usize) -> Vec<Complex> {
        let m = x.len();
        (0..m)
            .map(|k| {
                let mut acc = Complex::ZERO;
                for (j, &v) in x.iter().enumerate() {
                    acc = acc.add(self.twiddle[(k * j) % m * stride].mul(v));
                }
                acc
            })
            .collect()
    }
}

/// One-sided magnitude spectrum of a real signal: |X[k]| for k = 0..=N/2.
pub(crate) fn real_magnitudes(plan: &FftPlan, signal: &[f64]) -> Vec<f64> {
    let buf: Vec<Complex> = signal
        .iter()
        .map(|&s| Complex { re: s, im: 0.0 })
        .collect();
    let out = plan.fft(&buf);
    out[..=signal.len() / 2].iter().map(|c| c.abs()).collect()
}

/// One-sided magnitude spectra of two real signals from a single complex
/// transform. With x = a + i*b, Hermitian symmetry separates the halves:
/// A[k] = (X[k] + conj(X[N-k]))/2 and B[k] = (X[k] - conj(X[N-k]))/(2i).
pub(crate) fn real_magnitudes_pair(
    plan: &FftPlan,
    a: &[f64],
    b: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    debug_assert_eq!(b.len(), n);
    let buf: Vec<Complex> = a
        .iter()
        .zip(b)
        .map(|(&re, &im)| Complex { re, im })
        .collect();
    let out = plan.fft(&buf);
    let mut mag_a = Vec::with_capacity(n / 2 + 1);
    let mut mag_b = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let x = out[k];
        let y = out[(n - k) % n];
        mag_a.push(((x.re + y.re) / 2.0).hypot((x.im - y.im) / 2.0));
        mag_b.push(((x.re - y.re) / 2.0).hypot((x.im + y.im) / 2.0));
    }
    (mag_a, mag_b)
}
