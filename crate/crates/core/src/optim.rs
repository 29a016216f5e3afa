//! Derivative-free minimisation by the Nelder-Mead simplex method, used to
//! refine conditional-likelihood ARMAX parameter estimates.

use crate::scalar::Scalar;

pub struct NelderMeadOptions {
    pub max_iterations: usize,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, x_tolerance: 1e-7, f_tolerance: 1e-10 }
    }
}

/// Minimises `f` from `x0`. Returns the best point and value found.
pub fn nelder_mead<T: Scalar>(
    f: impl Fn(&[T]) -> T,
    x0: &[T],
    options: &NelderMeadOptions,
) -> (Vec<T>, T) {
    let dim = x0.len();
    if dim == 0 {
        let v = f(x0);
        return (x0.to_vec(), v);
    }
    let alpha = T::one(); // reflection
    let gamma = T::from_f64_lossy(2.0); // expansion
    let rho = T::from_f64_lossy(0.5); // contraction
    let sigma = T::from_f64_lossy(0.5); // shrink

    // initial simplex: perturb each coordinate (scipy-style steps)
    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        let step = if p[i] != T::zero() {
            p[i] * T::from_f64_lossy(0.05)
        } else {
            T::from_f64_lossy(0.00025)
        };
        p[i] = p[i] + step;
        simplex.push(p);
    }
    let mut values: Vec<T> = simplex.iter().map(|p| f(p)).collect();

    let x_tol = T::from_f64_lossy(options.x_tolerance);
    let f_tol = T::from_f64_lossy(options.f_tolerance);

    for _ in 0..options.max_iterations {
        // order ascending by value
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<T>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalued: Vec<T> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalued;

        // convergence: simplex collapsed in both value and coordinates
        let f_spread = values[dim] - values[0];
        let mut x_spread = T::zero();
        for p in simplex.iter().skip(1) {
            for j in 0..dim {
                x_spread = x_spread.max((p[j] - simplex[0][j]).abs());
            }
        }
        if f_spread.abs() <= f_tol && x_spread <= x_tol {
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![T::zero(); dim];
        for p in simplex.iter().take(dim) {
            for j in 0..dim {
                centroid[j] += p[j];
            }
        }
        let inv = T::one() / T::from_usize_lossy(dim);
        centroid.iter_mut().for_each(|c| *c *= inv);

        let worst = simplex[dim].clone();
        let reflected: Vec<T> = (0..dim)
            .map(|j| centroid[j] + alpha * (centroid[j] - worst[j]))
            .collect();
        let f_r = f(&reflected);

        if f_r < values[0] {
            let expanded: Vec<T> = (0..dim)
                .map(|j| centroid[j] + gamma * (reflected[j] - centroid[j]))
                .collect();
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
        } else if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
        } else {
            // contraction, outside or inside
            let (point, f_p) = if f_r < values[dim] {
                let outside: Vec<T> = (0..dim)
                    .map(|j| centroid[j] + rho * (reflected[j] - centroid[j]))
                    .collect();
                let v = f(&outside);
                (outside, v)
            } else {
                let inside: Vec<T> = (0..dim)
                    .map(|j| centroid[j] - rho * (centroid[j] - worst[j]))
                    .collect();
                let v = f(&inside);
                (inside, v)
            };
            if f_p < values[dim].min(f_r) {
                simplex[dim] = point;
                values[dim] = f_p;
            } else {
                // shrink towards the best vertex
                let best = simplex[0].clone();
                for i in 1..=dim {
                    for j in 0..dim {
                        simplex[i][j] = best[j] + sigma * (simplex[i][j] - best[j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 5.0;
        let (x, v) = nelder_mead(f, &[0.0, 0.0], &NelderMeadOptions::default());
        assert!((x[0] - 3.0).abs() < 1e-4);
        assert!((x[1] + 1.0).abs() < 1e-4);
        assert!((v - 5.0).abs() < 1e-7);
    }

    #[test]
    fn minimises_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, _) = nelder_mead(
            f,
            &[-1.2, 1.0],
            &NelderMeadOptions { max_iterations: 5000, ..Default::default() },
        );
        assert!((x[0] - 1.0).abs() < 1e-3);
        assert!((x[1] - 1.0).abs() < 1e-3);
    }
}
