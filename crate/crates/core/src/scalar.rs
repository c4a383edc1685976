//! Floating-point abstraction shared by the numeric modules.
//!
//! Everything that touches channel values is generic over [`Real`], so the
//! simulator runs in `f32` (cheap sweeps) or `f64` (the default used by the
//! aliases at the crate root and by the CLI).

use std::cell::RefCell;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

/// Scalar type accepted by the simulator.
///
/// Sampling and FFT are trait methods rather than supertraits: pulling in
/// `rustfft::FftNum` (which implies `num_traits::Signed`) would make
/// `x.abs()` ambiguous on every generic call site.
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// One draw of a standard normal variate.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unitary DFT in place (`inverse` selects the sign of the exponent).
    fn dft(buf: &mut [Complex<Self>], inverse: bool);

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

macro_rules! impl_real {
    ($t:ty, $planner:ident) => {
        thread_local! {
            static $planner: RefCell<FftPlanner<$t>> = RefCell::new(FftPlanner::new());
        }

        impl Real for $t {
            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }

            fn dft(buf: &mut [Complex<Self>], inverse: bool) {
                let n = buf.len();
                if n == 0 {
                    return;
                }
                let plan = $planner.with(|p| {
                    let mut p = p.borrow_mut();
                    if inverse {
                        p.plan_fft_inverse(n)
                    } else {
                        p.plan_fft_forward(n)
                    }
                });
                plan.process(buf);
                let scale = 1.0 / (n as $t).sqrt();
                for v in buf.iter_mut() {
                    *v = *v * scale;
                }
            }
        }
    };
}

impl_real!(f32, PLANNER_F32);
impl_real!(f64, PLANNER_F64);

/// Circularly-symmetric complex Gaussian with the given variance.
#[inline]
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, var: T) -> Complex<T> {
    let s = (var / T::lit(2.0)).sqrt();
    Complex::new(T::std_normal(rng) * s, T::std_normal(rng) * s)
}

#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / lit(xs.len() as f64)
}

/// Median of a sample (mean of the two middle values for even lengths).
pub(crate) fn median<T: Real>(xs: &[T]) -> T {
    let mut v: Vec<T> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median"));
    let n = v.len();
    if n == 0 {
        return T::nan();
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / lit(2.0)
    }
}
