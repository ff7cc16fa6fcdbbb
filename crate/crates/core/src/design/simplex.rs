//! Nelder-Mead simplex search on a box. Trial points are projected onto the
//! box, so every evaluated point is feasible.

use crate::data::Bounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when the simplex diameter falls below `tolerance * (1 + |x|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fresh-simplex restarts from the converged point; a degenerate simplex
    /// on a bound face can otherwise stall.
    pub restarts: usize,
    /// Initial edge length as a fraction of each bound width.
    pub initial_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-8,
            max_iterations: 2000,
            restarts: 3,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// One Nelder-Mead run from `x0`.
fn run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    bounds: &Bounds,
    cfg: &SimplexConfig,
    step_scale: f64,
) -> SimplexResult {
    let d = x0.len();
    let project = |mut x: Vec<f64>| {
        bounds.clamp(&mut x);
        x
    };
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(project(x0.to_vec()));
    for i in 0..d {
        let width = bounds.high[i] - bounds.low[i];
        let mut h = cfg.initial_step * step_scale * width;
        if h == 0.0 {
            h = cfg.initial_step * step_scale * (1.0 + x0[i].abs());
        }
        let mut v = simplex[0].clone();
        v[i] = if v[i] + h <= bounds.high[i] { v[i] + h } else { v[i] - h };
        simplex.push(project(v));
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| dist(v, &simplex[0]))
            .fold(0.0, f64::max);
        if diameter < cfg.tolerance * (1.0 + norm(&simplex[0])) {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for v in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            project(
                centroid
                    .iter()
                    .zip(worst)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let worst = simplex[d].clone();
        let xr = along(cfg.reflection, &worst);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(cfg.reflection * cfg.expansion, &worst);
            let fe = eval(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
            continue;
        }
        // a projected trial landing on a kept vertex would collapse the simplex
        let collapsed = |p: &[f64], simplex: &[Vec<f64>]| simplex[..d].iter().any(|v| v == p);
        if fr < values[d - 1] && !collapsed(&xr, &simplex) {
            simplex[d] = xr;
            values[d] = fr;
            continue;
        }
        let mut trial = None;
        if fr < values[d] && !collapsed(&xr, &simplex) {
            let xc = along(cfg.reflection * cfg.contraction, &worst);
            let fc = eval(&xc);
            if fc <= fr && !collapsed(&xc, &simplex) {
                trial = Some((xc, fc));
            }
        }
        if trial.is_none() {
            let xc = along(-cfg.contraction, &worst);
            let fc = eval(&xc);
            if fc < values[d] && !collapsed(&xc, &simplex) {
                trial = Some((xc, fc));
            }
        }
        if let Some((xc, fc)) = trial {
            simplex[d] = xc;
            values[d] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=d {
            let v: Vec<f64> = best
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + cfg.shrink * (x - b))
                .collect();
            simplex[i] = project(v);
            values[i] = eval(&simplex[i]);
        }
    }
    SimplexResult {
        x: simplex.swap_remove(0),
        value: values[0],
        iterations,
        converged,
    }
}

/// Minimize `f` over `bounds` starting at `x0`, restarting from the best
/// point with a fresh, progressively smaller simplex.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    bounds: &Bounds,
    cfg: &SimplexConfig,
) -> SimplexResult {
    if x0.is_empty() {
        let value = f(x0);
        return SimplexResult {
            x: Vec::new(),
            value,
            iterations: 0,
            converged: true,
        };
    }
    let mut best = run(&mut f, x0, bounds, cfg, 1.0);
    let mut scale = 1.0;
    for _ in 0..cfg.restarts {
        scale *= 0.1;
        let next = run(&mut f, &best.x, bounds, cfg, scale);
        let improved = next.value < best.value;
        let iterations = best.iterations + next.iterations;
        if improved {
            best = SimplexResult { iterations, ..next };
        } else {
            best.iterations = iterations;
            best.converged &= next.converged;
            break;
        }
    }
    best
}
