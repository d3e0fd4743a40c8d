//! Nelder–Mead simplex minimization.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction ½,
//! shrink ½). Non-finite objective values are treated as `+∞`, which lets
//! callers mark infeasible or degenerate points without special casing.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop when `f_worst − f_best < tolerance · (1 + |f_best|)`.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iters: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0` with an axis-aligned initial simplex of
/// per-coordinate sizes `steps`. The returned value never exceeds `f(x0)`.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len(), "one step per coordinate");
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(dim + 1);
    pts.push(x0.to_vec());
    vals.push(eval(x0, &mut evals));
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        vals.push(eval(&p, &mut evals));
        pts.push(p);
    }

    let mut order: Vec<usize> = (0..=dim).collect();
    let mut iters = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];

    loop {
        // stable sort keeps the earliest vertex first among ties, so the
        // starting point stays best unless strictly improved
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[dim];
        let f_best = vals[best];
        let f_worst = vals[worst];
        if f_best.is_finite() && f_worst - f_best < opts.tolerance * (1.0 + f_best.abs()) {
            converged = true;
            break;
        }
        if collapsed(&pts, best) {
            converged = f_best.is_finite();
            break;
        }
        if iters >= opts.max_iters {
            break;
        }
        iters += 1;
        let second_worst = vals[order[dim - 1]];

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..dim] {
            for (c, p) in centroid.iter_mut().zip(&pts[i]) {
                *c += p;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= dim as f64);

        along(&centroid, &pts[worst], -1.0, &mut trial);
        let f_r = eval(&trial, &mut evals);
        if f_r < f_best {
            along(&centroid, &pts[worst], -2.0, &mut trial2);
            let f_e = eval(&trial2, &mut evals);
            if f_e < f_r {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = f_e;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = f_r;
            }
            continue;
        }
        if f_r < second_worst {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = f_r;
            continue;
        }
        // outside contraction if the reflected point beat the worst, else inside
        let accept = if f_r < f_worst {
            along(&centroid, &pts[worst], -0.5, &mut trial2);
            let f_c = eval(&trial2, &mut evals);
            (f_c <= f_r).then_some(f_c)
        } else {
            along(&centroid, &pts[worst], 0.5, &mut trial2);
            let f_c = eval(&trial2, &mut evals);
            (f_c < f_worst).then_some(f_c)
        };
        if let Some(f_c) = accept {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = f_c;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (p, a) in pts[i].iter_mut().zip(&anchor) {
                *p = a + 0.5 * (*p - a);
            }
            vals[i] = eval(&pts[i], &mut evals);
        }
    }

    let best = order
        .iter()
        .copied()
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    SimplexOutcome {
        x: pts[best].clone(),
        f: vals[best],
        evals,
        iters,
        converged,
    }
}

/// `out = c + t (w − c)`.
fn along(c: &[f64], w: &[f64], t: f64, out: &mut [f64]) {
    for ((o, ci), wi) in out.iter_mut().zip(c).zip(w) {
        *o = ci + t * (wi - ci);
    }
}

fn collapsed(pts: &[Vec<f64>], best: usize) -> bool {
    pts.iter().enumerate().all(|(i, p)| {
        i == best
            || p.iter()
                .zip(&pts[best])
                .all(|(a, b)| (a - b).abs() <= f64::EPSILON * (1.0 + b.abs()))
    })
}
