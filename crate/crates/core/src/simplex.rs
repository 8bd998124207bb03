//! Nelder–Mead simplex minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex around the start point.
    pub initial_step: f64,
    pub max_iter: usize,
    /// Converged once the simplex diameter, measured in the caller's space,
    /// drops below this.
    pub x_tol: f64,
    /// ...and the relative spread of function values drops below this.
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { initial_step: 0.5, max_iter: 2000, x_tol: 1e-8, f_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`, measuring the simplex diameter in the parameter
/// space itself.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    nelder_mead_in(f, x0, opts, |x| x.to_vec())
}

/// Minimize `f` from `x0`; `to_space` maps parameters to the space in which
/// the diameter convergence test is applied.
pub fn nelder_mead_in<F, M>(mut f: F, x0: &[f64], opts: &NelderMeadOptions, to_space: M) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    if n == 0 {
        return Minimum { x: vec![], value: f(x0), iterations: 0, converged: true };
    }
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();

    for iter in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        if converged(&pts, &vals, opts, &to_space) {
            return Minimum { x: pts[0].clone(), value: vals[0], iterations: iter, converged: true };
        }

        let centroid: Vec<f64> =
            (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along =
            |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (w - c)).collect() };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[n] {
            let c = along(-0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = contracted;
            vals[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for i in 1..=n {
            let shrunk: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, p)| b + 0.5 * (p - b)).collect();
            vals[i] = f(&shrunk);
            pts[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Minimum { x: pts[best].clone(), value: vals[best], iterations: opts.max_iter, converged: false }
}

fn converged<M>(pts: &[Vec<f64>], vals: &[f64], opts: &NelderMeadOptions, to_space: &M) -> bool
where
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = pts.len() - 1;
    let spread = (vals[n] - vals[0]).abs() / vals[0].abs().max(1e-300);
    if !(spread < opts.f_tol) {
        return false;
    }
    let mapped: Vec<Vec<f64>> = pts.iter().map(|p| to_space(p)).collect();
    let mut diam: f64 = 0.0;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            let d = mapped[i].iter().zip(&mapped[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            diam = diam.max(d);
        }
    }
    diam < opts.x_tol
}
