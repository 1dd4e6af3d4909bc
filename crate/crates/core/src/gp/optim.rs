//! Bounded Nelder-Mead minimization used for hyperparameter search.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NelderMead {
    pub max_evaluations: usize,
    pub f_tolerance: f64,
    pub x_tolerance: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evaluations: 200, f_tolerance: 1e-7, x_tolerance: 1e-6, initial_step: 0.5 }
    }
}

impl NelderMead {
    /// Minimizes `f` inside the box `[lower, upper]`; points are projected
    /// onto the box before evaluation. Non-finite values count as `+inf`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        start: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> (Vec<f64>, f64) {
        let n = start.len();
        let project = |x: &mut Vec<f64>| {
            for i in 0..n {
                x[i] = x[i].clamp(lower[i], upper[i]);
            }
        };
        let mut eval = |x: &[f64], count: &mut usize| {
            *count += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut count = 0;

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut x0 = start.to_vec();
        project(&mut x0);
        simplex.push(x0.clone());
        for i in 0..n {
            let mut x = x0.clone();
            x[i] += self.initial_step;
            if x[i] > upper[i] {
                x[i] = x0[i] - self.initial_step;
            }
            project(&mut x);
            simplex.push(x);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut count)).collect();

        while count < self.max_evaluations {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let size = simplex[1..]
                .iter()
                .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| libm::fabs(a - b)))
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= self.f_tolerance) || size <= self.x_tolerance {
                break;
            }

            let mut centroid = vec![0.0; n];
            for x in &simplex[..n] {
                for i in 0..n {
                    centroid[i] += x[i] / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n][i] - centroid[i])).collect();
                project(&mut p);
                p
            };

            let reflected = along(-1.0);
            let fr = eval(&reflected, &mut count);
            if fr < values[0] {
                let expanded = along(-2.0);
                let fe = eval(&expanded, &mut count);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
            } else {
                let contracted = if fr < values[n] { along(-0.5) } else { along(0.5) };
                let fc = eval(&contracted, &mut count);
                if fc < values[n].min(fr) {
                    simplex[n] = contracted;
                    values[n] = fc;
                } else {
                    for j in 1..=n {
                        let mut p: Vec<f64> = (0..n).map(|i| simplex[0][i] + 0.5 * (simplex[j][i] - simplex[0][i])).collect();
                        project(&mut p);
                        values[j] = eval(&p, &mut count);
                        simplex[j] = p;
                    }
                }
            }
        }

        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        (simplex[best].clone(), values[best])
    }
}
