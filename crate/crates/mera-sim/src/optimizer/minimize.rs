//! Derivative-free and quasi-Newton minimizers over unconstrained real vectors.

use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub eval_index: usize,
    /// Best energy seen so far.
    pub energy: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Counts evaluations, keeps the best point and enforces the budget.
struct Counted<'a, F: FnMut(&[f64]) -> f64> {
    f: &'a mut F,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
    trace: Vec<TracePoint>,
    start: Instant,
}

impl<'a, F: FnMut(&[f64]) -> f64> Counted<'a, F> {
    fn new(f: &'a mut F, n: usize) -> Self {
        Self { f, evals: 0, best_x: vec![0.0; n], best_f: f64::INFINITY, trace: Vec::new(), start: Instant::now() }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        self.evals += 1;
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(TracePoint {
            eval_index: self.evals,
            energy: self.best_f,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        });
        v
    }

    fn finish(self, converged: bool) -> Minimum {
        Minimum { x: self.best_x, f: self.best_f, evals: self.evals, converged, trace: self.trace }
    }
}

/// Adaptive Nelder–Mead (dimension-dependent coefficients). The simplex is
/// rebuilt around the best vertex after each convergence until a rebuild no
/// longer improves by more than `tol`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64, max_evals: usize) -> Minimum {
    let n = x0.len();
    let mut c = Counted::new(&mut f, n);
    if n == 0 {
        c.eval(x0);
        return c.finish(true);
    }
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut start = x0.to_vec();
    let mut last_best = f64::INFINITY;
    loop {
        let mut simplex: Vec<Vec<f64>> = vec![start.clone()];
        for i in 0..n {
            let mut v = start.clone();
            v[i] += step;
            simplex.push(v);
        }
        let mut fs: Vec<f64> = simplex.iter().map(|v| c.eval(v)).collect();
        let mut converged = false;
        while c.evals < max_evals {
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            fs = idx.iter().map(|&i| fs[i]).collect();
            let spread = (fs[n] - fs[0]).abs();
            let size = simplex[1..].iter().map(|v| dist(v, &simplex[0])).fold(0.0, f64::max);
            if spread <= tol && size < 1e-3 || size < 1e-10 {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf).collect();
            let along =
                |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
            let xr = along(-alpha);
            let fr = c.eval(&xr);
            if fr < fs[0] {
                let xe = along(-alpha * beta);
                let fe = c.eval(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    fs[n] = fe;
                } else {
                    simplex[n] = xr;
                    fs[n] = fr;
                }
            } else if fr < fs[n - 1] {
                simplex[n] = xr;
                fs[n] = fr;
            } else {
                let (xk, fk) = if fr < fs[n] {
                    let x = along(-alpha * gamma);
                    let v = c.eval(&x);
                    (x, v)
                } else {
                    let x = along(gamma);
                    let v = c.eval(&x);
                    (x, v)
                };
                if fk < fs[n].min(fr) {
                    simplex[n] = xk;
                    fs[n] = fk;
                } else {
                    for i in 1..=n {
                        for j in 0..n {
                            simplex[i][j] = simplex[0][j] + delta * (simplex[i][j] - simplex[0][j]);
                        }
                        fs[i] = c.eval(&simplex[i].clone());
                    }
                }
            }
        }
        if !converged {
            return c.finish(false);
        }
        if last_best - c.best_f <= tol {
            return c.finish(true);
        }
        last_best = c.best_f;
        start = c.best_x.clone();
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS with central-difference gradients and Armijo backtracking.
pub fn lbfgs_fd(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], tol: f64, max_evals: usize) -> Minimum {
    let n = x0.len();
    let mut c = Counted::new(&mut f, n);
    let h = 1e-6;
    let m = 8;
    let grad = |c: &mut Counted<_>, x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        let mut y = x.to_vec();
        for i in 0..n {
            y[i] = x[i] + h;
            let fp = c.eval(&y);
            y[i] = x[i] - h;
            let fm = c.eval(&y);
            y[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    };
    let mut x = x0.to_vec();
    let mut fx = c.eval(&x);
    let mut g = grad(&mut c, &x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut small_steps = 0;
    while c.evals < max_evals {
        if dot(&g, &g).sqrt() < 1e-9 {
            return c.finish(true);
        }
        // two-loop recursion
        let mut q = g.clone();
        let k = s_hist.len();
        let mut a = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            a[i] = rho * dot(&s_hist[i], &q);
            q.iter_mut().zip(&y_hist[i]).for_each(|(qj, yj)| *qj -= a[i] * yj);
        }
        let gamma = if k > 0 { dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]) } else { 0.1 };
        q.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let b = rho * dot(&y_hist[i], &q);
            q.iter_mut().zip(&s_hist[i]).for_each(|(qj, sj)| *qj += (a[i] - b) * sj);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            s_hist.clear();
            y_hist.clear();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let fn_ = c.eval(&xn);
            if fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fn_));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            return c.finish(true);
        };
        let gn = grad(&mut c, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-16 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > m {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let df = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        small_steps = if df < tol { small_steps + 1 } else { 0 };
        if small_steps >= 2 {
            return c.finish(true);
        }
    }
    c.finish(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosen(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    #[test]
    fn nelder_mead_quadratic_and_rosenbrock() {
        let m = nelder_mead(|x| x.iter().map(|v| (v - 0.3).powi(2)).sum(), &[0.0; 6], 0.1, 1e-14, 20_000);
        assert!(m.converged && m.f < 1e-10);
        let m = nelder_mead(rosen, &[-1.0, 1.0], 0.2, 1e-14, 20_000);
        assert!(m.f < 1e-8, "{}", m.f);
        assert!(m.trace.windows(2).all(|w| w[1].energy <= w[0].energy));
    }

    #[test]
    fn lbfgs_rosenbrock() {
        for x0 in [&[-1.2, 1.0][..], &[-1.2, 1.0, 0.5]] {
            let m = lbfgs_fd(rosen, x0, 1e-14, 50_000);
            assert!(m.f < 1e-8, "{}", m.f);
        }
        // the four-dimensional function also has a local minimum at f ≈ 3.7015
        let m = lbfgs_fd(rosen, &[-1.2, 1.0, 0.5, 0.0], 1e-14, 50_000);
        assert!(m.f < 1e-8 || (m.f - 3.7015).abs() < 1e-3, "{}", m.f);
    }

    #[test]
    fn budget_is_respected() {
        let m = nelder_mead(rosen, &[-1.0, 1.0, 0.0], 0.2, 1e-15, 50);
        assert!(!m.converged);
        assert!(m.evals <= 50 + 4);
    }
}
