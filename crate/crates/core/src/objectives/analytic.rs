//! Standard test functions, written in the transformed coordinates `z`.
//! Rosenbrock and Levy are offset by one so every function attains its
//! minimum value 0 at `z = 0`.

use crate::scalar::Scalar;

pub fn sphere<T: Scalar>(z: &[T]) -> T {
    z.iter().map(|v| *v * *v).sum()
}

/// `Σ i·z_i²`, `i` counted from one.
pub fn ellipsoid<T: Scalar>(z: &[T]) -> T {
    z.iter()
        .enumerate()
        .map(|(i, v)| T::lit((i + 1) as f64) * *v * *v)
        .sum()
}

pub fn rosenbrock<T: Scalar>(z: &[T]) -> T {
    let one = T::one();
    z.windows(2)
        .map(|w| {
            let (a, b) = (w[0] + one, w[1] + one);
            T::lit(100.0) * (b - a * a).powi(2) + (a - one).powi(2)
        })
        .sum()
}

pub fn ackley<T: Scalar>(z: &[T]) -> T {
    let n = T::lit(z.len() as f64);
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let sq = z.iter().map(|v| *v * *v).sum::<T>() / n;
    let cs = z.iter().map(|v| (two_pi * *v).cos()).sum::<T>() / n;
    let e = T::lit(std::f64::consts::E);
    let value = T::lit(-20.0) * (T::lit(-0.2) * sq.sqrt()).exp() - cs.exp() + T::lit(20.0) + e;
    // cancels to a few ulps of 22.7 at the optimum
    value.max(T::zero())
}

pub fn rastrigin<T: Scalar>(z: &[T]) -> T {
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    z.iter()
        .map(|v| *v * *v - T::lit(10.0) * (two_pi * *v).cos() + T::lit(10.0))
        .sum()
}

pub fn griewank<T: Scalar>(z: &[T]) -> T {
    let sum = z.iter().map(|v| *v * *v).sum::<T>() / T::lit(4000.0);
    let prod = z
        .iter()
        .enumerate()
        .fold(T::one(), |acc, (i, v)| acc * (*v / T::lit((i + 1) as f64).sqrt()).cos());
    sum - prod + T::one()
}

pub fn levy<T: Scalar>(z: &[T]) -> T {
    let pi = T::lit(std::f64::consts::PI);
    let one = T::one();
    let w: Vec<T> = z.iter().map(|v| one + *v / T::lit(4.0)).collect();
    let last = w[w.len() - 1];
    let head = (pi * w[0]).sin().powi(2);
    let middle: T = w[..w.len() - 1]
        .iter()
        .map(|wi| (*wi - one).powi(2) * (one + T::lit(10.0) * (pi * *wi + one).sin().powi(2)))
        .sum();
    let tail = (last - one).powi(2) * (one + (T::lit(2.0) * pi * last).sin().powi(2));
    head + middle + tail
}

/// `cos x + sin 2x + x/2`.
pub fn fig1_demo<T: Scalar>(x: T) -> T {
    x.cos() + (T::lit(2.0) * x).sin() + T::lit(0.5) * x
}
