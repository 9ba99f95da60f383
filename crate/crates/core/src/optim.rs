//! Box-constrained Nelder–Mead simplex search.

/// Result of a simplex search.
#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Terminated on the simplex-diameter test rather than the iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Relative simplex diameter at which the search stops.
    pub rel_tol: f64,
    /// Relative size of the initial simplex edges.
    pub initial_step: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn clamp(point: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((p, &lo), &hi) in point.iter_mut().zip(lower).zip(upper) {
        *p = p.clamp(lo, hi);
    }
}

fn rel_diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs() / b.abs().max(1e-12))
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` starting from `init`. The starting point is always a
/// simplex vertex, so the returned value never exceeds `f(init)`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    init: &[f64],
    opts: &SimplexOptions,
) -> SimplexOutcome {
    let n = init.len();
    let mut start = init.to_vec();
    clamp(&mut start, &opts.lower, &opts.upper);

    let mut simplex = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        let step = if v[i] != 0.0 { opts.initial_step * v[i] } else { opts.initial_step };
        v[i] += step;
        clamp(&mut v, &opts.lower, &opts.upper);
        if v[i] == start[i] {
            v[i] -= 2.0 * step;
            clamp(&mut v, &opts.lower, &opts.upper);
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let order = |simplex: &mut Vec<Vec<f64>>, values: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..simplex.len()).collect();
        // stable sort keeps the older vertex first on ties
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        *simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        *values = idx.iter().map(|&i| values[i]).collect();
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        order(&mut simplex, &mut values);
        if rel_diameter(&simplex) < opts.rel_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let worst = n;
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp(&mut p, &opts.lower, &opts.upper);
            p
        };

        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[worst] {
            let p = along(0.5);
            let v = f(&p);
            (p, v)
        } else {
            let p = along(-0.5);
            let v = f(&p);
            (p, v)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let p: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            values[i] = f(&p);
            simplex[i] = p;
        }
    }
    order(&mut simplex, &mut values);
    SimplexOutcome {
        best: simplex[0].clone(),
        value: values[0],
        iterations,
        converged,
    }
}
