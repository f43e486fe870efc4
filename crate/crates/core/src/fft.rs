//! Thin n-dimensional wrapper over `rustfft` for row-major complex arrays.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place transform along every axis of a row-major array.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "shape does not match buffer length");
    if total == 0 {
        return;
    }
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let mut scratch: Vec<Complex64> = Vec::new();
        for axis in 0..shape.len() {
            let n = shape[axis];
            if n == 1 {
                continue;
            }
            let fft = planner.plan_fft(n, direction);
            let inner: usize = shape[axis + 1..].iter().product();
            if inner == 1 {
                fft.process(data);
                continue;
            }
            let outer = total / (n * inner);
            scratch.resize(total, Complex64::new(0.0, 0.0));
            // Gather lines along `axis` into contiguous runs.
            let mut k = 0;
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * n * inner + i;
                    for m in 0..n {
                        scratch[k] = data[base + m * inner];
                        k += 1;
                    }
                }
            }
            fft.process(&mut scratch);
            let mut k = 0;
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * n * inner + i;
                    for m in 0..n {
                        data[base + m * inner] = scratch[k];
                        k += 1;
                    }
                }
            }
        }
    });
}

/// Smallest integer ≥ `n` of the form 2^a 3^b.
pub fn fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut m = p3;
        while m < n {
            m *= 2;
        }
        best = best.min(m);
        p3 *= 3;
    }
    best
}
