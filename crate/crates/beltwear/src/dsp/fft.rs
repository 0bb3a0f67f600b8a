//! Radix-2 FFT with a packed real-input path.
//!
//! Sizes are powers of two only; frame buffers are zero-padded up to the
//! next power of two before they get here. The real-input transform runs a
//! half-size complex FFT on interleaved even/odd samples and untangles the
//! result, which roughly halves the per-frame cost.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed plan for a complex FFT of fixed power-of-two length.
pub struct Fft {
    len: usize,
    /// `exp(-2*pi*i*k/len)` for `k` in `0..len/2`.
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "FFT length must be a power of two >= 2, got {len}"
            )));
        }
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * std::f64::consts::PI * k as f64 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(Fft { len, twiddles })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// In-place forward transform. `buf.len()` must equal the plan length.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length must match FFT plan");
        let n = self.len;

        // Bit-reversal permutation.
        let shift = usize::BITS - n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if j > i {
                buf.swap(i, j);
            }
        }

        // Butterfly stages, smallest width first.
        let mut width = 2;
        while width <= n {
            let half = width / 2;
            let stride = n / width;
            for block in (0..n).step_by(width) {
                for j in 0..half {
                    let w = self.twiddles[j * stride];
                    let a = buf[block + j];
                    let b = buf[block + j + half] * w;
                    buf[block + j] = a + b;
                    buf[block + j + half] = a - b;
                }
            }
            width *= 2;
        }
    }
}

/// Plan for transforming a real signal of power-of-two length `n` into its
/// one-sided spectrum (`n/2 + 1` bins).
pub struct RealFft {
    n: usize,
    half: Option<Fft>,
    /// `exp(-2*pi*i*k/n)` for `k` in `0..=n/2`, used to untangle the packed
    /// half-size transform.
    unpack: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "real FFT length must be a power of two >= 2, got {n}"
            )));
        }
        let half = if n >= 4 { Some(Fft::new(n / 2)?) } else { None };
        let unpack = (0..=n / 2)
            .map(|k| {
                let angle = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(RealFft { n, half, unpack })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Number of one-sided output bins, `n/2 + 1`.
    pub fn output_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// Transform `input` (length `n`) into bins `0..=n/2` of its DFT.
    /// `scratch` must have length `n/2`; `out` must have length `n/2 + 1`.
    pub fn forward(&self, input: &[f64], scratch: &mut [Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.n);
        assert_eq!(scratch.len(), self.n / 2);
        assert_eq!(out.len(), self.output_len());

        if self.n == 2 {
            out[0] = Complex64::new(input[0] + input[1], 0.0);
            out[1] = Complex64::new(input[0] - input[1], 0.0);
            return;
        }

        let m = self.n / 2;
        for i in 0..m {
            scratch[i] = Complex64::new(input[2 * i], input[2 * i + 1]);
        }
        self.half
            .as_ref()
            .expect("half plan exists for n >= 4")
            .forward(scratch);

        // X[k] = E[k] + exp(-2*pi*i*k/n) * O[k], where E and O are the DFTs
        // of the even and odd subsequences, recovered from the packed
        // transform Z by E = (Z[k] + conj(Z[m-k]))/2, O = -i(Z[k] - conj(Z[m-k]))/2.
        for k in 0..=m {
            let zk = scratch[k % m];
            let zr = scratch[(m - k) % m].conj();
            let even = (zk + zr) * 0.5;
            let odd = (zk - zr) * Complex64::new(0.0, -0.5);
            out[k] = even + self.unpack[k] * odd;
        }
    }
}
