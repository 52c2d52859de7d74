//! In-place radix-2 complex FFT for power-of-two lengths.

use alloc::vec::Vec;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub(crate) struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let phase = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex64::new(libm::cos(phase), libm::sin(phase))
            })
            .collect();
        Self {
            n,
            twiddles,
            bitrev,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    /// Forward transform, `X_k = sum_j x_j exp(-2 pi i jk / n)`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matches_direct_dft() {
        let n = 64;
        let x: Vec<Complex64> = (0..n)
            .map(|i| {
                Complex64::new(
                    libm::sin(0.3 * i as f64) + 0.1 * i as f64,
                    libm::cos(1.7 * i as f64),
                )
            })
            .collect();
        let mut y = x.clone();
        Fft::new(n).forward(&mut y);
        for (k, got) in y.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                let ph = -2.0 * core::f64::consts::PI * (j * k) as f64 / n as f64;
                acc += v * Complex64::new(libm::cos(ph), libm::sin(ph));
            }
            assert!((acc - got).norm() < 1e-10);
        }
    }

    #[test]
    fn trivial_lengths() {
        let mut one = vec![Complex64::new(2.0, 1.0)];
        Fft::new(1).forward(&mut one);
        assert_eq!(one[0], Complex64::new(2.0, 1.0));
        let mut two = vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)];
        Fft::new(2).forward(&mut two);
        assert_eq!(
            two,
            vec![Complex64::new(4.0, 0.0), Complex64::new(-2.0, 0.0)]
        );
    }
}
